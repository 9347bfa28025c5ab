#pragma once

#include <memory>
#include <string>
#include <vector>

#include "json.hpp"

namespace permadde {

/// Time-independent shape function x -> h(x) on [0, inf): envelopes h_i^-,
/// clamped comparison functions H_i, custom birth shapes and harvesting laws.
///
/// Every shape carries an input scale s and an output gain g:
/// h(x) = g * base(s x) / s. The scale is how the rescaling x_i -> x_i / v_i acts
/// on nonlinearities; the gain normalizes the slope at zero.
class ScalarFn {
public:
    enum class Kind {
        zero,
        nicholson,      // x exp(-c x)
        mackey_glass,   // x / (1 + c x^alpha)
        square_clamp,   // x^2 on [0,1], 1 beyond
        power,          // x^p
        clamp,          // inner(min(x, m))
        min_identity,   // min(inner(x), x)
        min_of,         // pointwise minimum of items
    };

    ScalarFn();  // zero

    static ScalarFn zero();
    static ScalarFn nicholson(double c);
    static ScalarFn mackey_glass(double c, double alpha);
    static ScalarFn square_clamp();
    static ScalarFn power(double p);
    static ScalarFn clamp(ScalarFn inner, double m);
    static ScalarFn min_identity(ScalarFn inner);
    static ScalarFn min_of(std::vector<ScalarFn> items);

    double operator()(double x) const { return eval(x); }
    double eval(double x) const;

    /// Copy with the input scale multiplied by s (s > 0).
    ScalarFn scaled(double s) const;
    /// Copy with the output multiplied by g (g > 0).
    ScalarFn times(double g) const;
    double scale() const noexcept { return scale_; }
    double gain() const noexcept { return gain_; }

    Kind kind() const noexcept { return kind_; }
    double c() const noexcept { return c_; }
    double alpha() const noexcept { return alpha_; }
    double m() const noexcept { return m_; }
    const std::vector<ScalarFn>& items() const noexcept { return items_; }

    /// Right derivative at 0, exact for every shape kind.
    double right_derivative_at_zero() const;
    /// Largest m such that h is strictly increasing on [0, m]; `limit` caps
    /// shapes increasing everywhere.
    double monotone_cap(double limit) const;
    /// lim_{x -> inf} h(x) (may be +inf).
    double limit_at_infinity() const;
    bool bounded() const;
    /// limsup_{x -> inf} h(x) / x.
    double asymptotic_gain() const;

    std::string describe() const;

private:
    double base(double x) const;

    Kind kind_ = Kind::zero;
    double c_ = 0.0;
    double alpha_ = 1.0;
    double m_ = 0.0;
    double scale_ = 1.0;
    double gain_ = 1.0;
    std::vector<ScalarFn> items_;
};

nlohmann::json to_json(const ScalarFn& h);
ScalarFn scalar_from_json(const nlohmann::json& j, const std::string& path = "$");

}  // namespace permadde
