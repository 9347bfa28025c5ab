#pragma once

// Time-varying scalar coefficients as closed expression trees.
//
// Every coefficient of a model (decay rates, couplings, birth coefficients,
// delays) is a CoefficientFn. Trees are immutable and cheap to copy (shared
// nodes), so they can be evaluated from any number of threads.

#include <cstddef>
#include <limits>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

namespace permadde {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

/// Builder-asserted range of a coefficient on [from, inf).
/// An infinite side means the builder asserts unboundedness on that side.
struct Bounds {
    double lo = -kInf;
    double hi = kInf;
    double from = 0.0;

    bool bounded_above() const noexcept { return hi < kInf; }
    bool bounded_below() const noexcept { return lo > -kInf; }
    bool contains(double value, double tol = 0.0) const noexcept {
        return value >= lo - tol && value <= hi + tol;
    }
    friend bool operator==(const Bounds&, const Bounds&) = default;
};

enum class NodeKind {
    constant,
    t_pow,
    affine,
    rational,
    sum,
    prod,
    quot,
    piecewise,
    table,
    window_integral,  // derived only; not part of the file format
};

std::string to_string(NodeKind kind);

class CoefficientFn;

namespace detail {
struct Node;
}

class CoefficientFn {
public:
    /// The zero constant.
    CoefficientFn();

    static CoefficientFn constant(double value);
    /// t^eta.
    static CoefficientFn t_pow(double eta);
    /// slope * t + intercept.
    static CoefficientFn affine(double slope, double intercept);
    /// Ratio of polynomials; coefficients in ascending degree.
    static CoefficientFn rational(std::vector<double> numerator, std::vector<double> denominator);
    static CoefficientFn sum(std::vector<CoefficientFn> terms);
    static CoefficientFn prod(std::vector<CoefficientFn> factors);
    static CoefficientFn quot(CoefficientFn numerator, CoefficientFn denominator);
    /// pieces[0] on (-inf, breaks[0]), pieces[k] on [breaks[k-1], breaks[k]), last piece beyond.
    static CoefficientFn piecewise(std::vector<double> breaks, std::vector<CoefficientFn> pieces);
    /// Linear interpolation through (times, values), held constant outside the table.
    static CoefficientFn table(std::vector<double> times, std::vector<double> values);
    /// t -> integral of `integrand` over [t - width(t), t].
    static CoefficientFn window_integral(CoefficientFn integrand, CoefficientFn width);

    double operator()(double t) const { return eval(t); }
    /// Value at t. Throws DomainError below domain_start(), NonFiniteError on NaN/inf.
    double eval(double t) const;
    /// Same, in extended precision (used where cancellation matters).
    long double eval_ld(double t) const;

    /// True when the tree admits an exact derivative (no table or window nodes).
    bool has_analytic_derivative() const;
    /// Exact derivative when has_analytic_derivative(), nullopt otherwise.
    std::optional<double> derivative(double t) const;

    CoefficientFn with_bounds(Bounds bounds) const;
    CoefficientFn with_bounds(double lo, double hi, double from = 0.0) const;
    CoefficientFn with_domain(double start) const;
    CoefficientFn without_bounds() const;

    /// Explicitly declared bounds; constants report their own value.
    std::optional<Bounds> declared_bounds() const;
    double domain_start() const noexcept { return domain_start_; }

    NodeKind kind() const;
    std::optional<double> constant_value() const;

    const detail::Node& node() const { return *node_; }

    friend CoefficientFn operator+(const CoefficientFn& a, const CoefficientFn& b);
    friend CoefficientFn operator-(const CoefficientFn& a, const CoefficientFn& b);
    friend CoefficientFn operator*(const CoefficientFn& a, const CoefficientFn& b);
    friend CoefficientFn operator/(const CoefficientFn& a, const CoefficientFn& b);
    friend CoefficientFn operator*(double s, const CoefficientFn& a);

private:
    explicit CoefficientFn(std::shared_ptr<const detail::Node> node);

    std::shared_ptr<const detail::Node> node_;
    std::optional<Bounds> bounds_;
    double domain_start_ = 0.0;
};

namespace detail {
struct Node {
    NodeKind kind = NodeKind::constant;
    double a = 0.0;  // constant value, eta, slope
    double b = 0.0;  // intercept
    std::vector<double> xs;  // numerator coeffs, breaks, table times
    std::vector<double> ys;  // denominator coeffs, table values
    std::vector<CoefficientFn> children;
};
}  // namespace detail

/// Grid extrema of a coefficient.
struct SampledBounds {
    double inf_hat = 0.0;
    double sup_hat = 0.0;
    double argmin = 0.0;
    double argmax = 0.0;
};

/// Min and max of f over `grid_points` uniformly spaced points of [t1, t2].
/// Throws ModelError if a sample at t >= declared.from leaves the declared bounds.
SampledBounds sampled_bounds(const CoefficientFn& f, double t1, double t2, std::size_t grid_points);

/// Uniform grid of `count` points on [t1, t2].
std::vector<double> uniform_grid(double t1, double t2, std::size_t count);
/// Geometric grid of `count` points on [t1, t2], t1 > 0.
std::vector<double> geometric_grid(double t1, double t2, std::size_t count);

/// Expression tree <-> JSON (node kinds: const, t_pow, affine, rational, sum,
/// prod, quot, piecewise, table). `path` prefixes error locations.
nlohmann::json to_json(const CoefficientFn& f);
CoefficientFn coefficient_from_json(const nlohmann::json& j, const std::string& path = "$");

}  // namespace permadde
