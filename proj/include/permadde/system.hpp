#pragma once

// Domain model of nonautonomous delay systems
//
//   x_i'(t) = -d_i(t) x_i(t) + sum_j L_ij(t) x_{j,t} + f_i(t, x_{i,t}) - K_i(t, x_i(t)),
//
// with nonnegative linear functionals L_ij(t) phi = a_ij(t) * int phi d nu_ij(t, .)
// and nonnegative birth terms f_i.

#include <algorithm>
#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "permadde/scalarfn.hpp"
#include "permadde/timefn.hpp"

namespace permadde {

/// Read access to a solution's past: x_i(s) and min over a window.
class HistoryView {
public:
    virtual ~HistoryView() = default;
    virtual std::size_t dimension() const = 0;
    virtual double value(std::size_t component, double t) const = 0;
    virtual double window_min(std::size_t component, double t1, double t2) const = 0;
};

/// History given by closed-form functions of absolute time (exact solutions,
/// initial segments, unit tests).
class FunctionHistory final : public HistoryView {
public:
    explicit FunctionHistory(std::vector<CoefficientFn> components);
    std::size_t dimension() const override { return components_.size(); }
    double value(std::size_t component, double t) const override;
    double window_min(std::size_t component, double t1, double t2) const override;

private:
    std::vector<CoefficientFn> components_;
};

/// Minimum of f on [a, b]: dense sampling, then golden-section refinement
/// (argument tolerance 1e-10) around the best sample.
template <class F>
double sampled_minimum(F&& f, double a, double b, std::size_t samples = 64);

/// Normalized measure nu(t, .) on [-tau, 0].
class DelayKernel {
public:
    enum class Kind { instant, lag, density, uniform };

    DelayKernel();  // instant

    static DelayKernel instant();
    static DelayKernel lag_point(CoefficientFn lag);
    /// Density k(u) of the backward time u in [0, support(t)]; must integrate to 1
    /// (checked to 1e-10 by quadrature at construction).
    static DelayKernel density(CoefficientFn k, CoefficientFn support);
    /// Uniform density on [t - width(t), t].
    static DelayKernel uniform(CoefficientFn width);

    Kind kind() const noexcept { return kind_; }
    /// Lag, support or width depending on the kind (zero for instant).
    const CoefficientFn& span() const noexcept { return span_; }
    const CoefficientFn& density_fn() const noexcept { return density_; }

    bool is_instant() const;
    /// Upper estimate of the reach into the past on [t1, t2].
    double max_reach(double t1, double t2) const;
    /// Fixed-node quadrature of the kernel alone (should be 1).
    double mass(double t) const;

    /// int g(t + s) d nu(t, s), with g taking absolute times.
    template <class G>
    double integrate(double t, G&& g) const;

private:
    Kind kind_ = Kind::instant;
    CoefficientFn span_;
    CoefficientFn density_;
};

struct LinearTerm {
    CoefficientFn a;
    DelayKernel kernel;
};

/// Time-dependent birth shape g(t, x): Nicholson x e^{-c(t) x} or
/// Mackey-Glass x / (1 + c(t) x^alpha).
struct BirthShape {
    enum class Kind { nicholson, mackey_glass };
    Kind kind = Kind::nicholson;
    CoefficientFn c;
    double alpha = 1.0;

    static BirthShape nicholson(CoefficientFn c);
    static BirthShape mackey_glass(CoefficientFn c, double alpha);

    double eval(double t, double x) const;
    /// Worst-case shape built from the declared upper bound of c.
    ScalarFn envelope() const;
};

/// coef(t) * int g(t, x(t + s)) d nu(s)
struct KernelBirth {
    CoefficientFn coef;
    DelayKernel kernel;
    BirthShape shape;
};

/// b(t) * int_{t - window(t)}^t lambda(s) g(., x(s)) ds; c evaluated at s by default.
struct IntegralBirth {
    enum class InnerTime { s, t };
    CoefficientFn b;
    CoefficientFn lambda;
    CoefficientFn window;
    BirthShape shape;
    InnerTime inner_time = InnerTime::s;
};

/// coef(t) * int h(x(t + s)) d nu(s) with a time-independent shape and an
/// optional separately declared lower envelope.
struct CustomBirth {
    CoefficientFn coef;
    DelayKernel kernel;
    ScalarFn h;
    std::optional<ScalarFn> envelope;
};

/// coef(t) * h(min_{[t - window, t]} x): the birth term of the cooperative lower system.
struct WindowMinBirth {
    CoefficientFn coef;
    ScalarFn h;
    double window = 0.0;
};

using BirthTerm = std::variant<KernelBirth, IntegralBirth, CustomBirth, WindowMinBirth>;

/// f_i(t, phi) = scale^{-1} * sum of terms evaluated at scale * phi.
struct Nonlinearity {
    std::vector<BirthTerm> terms;
    double scale = 1.0;

    bool empty() const noexcept { return terms.empty(); }
};

/// Harvesting K(t, x) = kappa(t) g(x) with g(0) = 0 and g'(0+) = 0.
struct HarvestTerm {
    CoefficientFn kappa;
    ScalarFn g;
};

struct SystemSpec {
    std::string name;
    std::size_t n = 0;
    double tau = 0.0;
    double domain_start = 0.0;
    std::vector<CoefficientFn> d;
    /// L[i][j] lists the functionals acting on x_j in equation i (empty: none).
    std::vector<std::vector<std::vector<LinearTerm>>> L;
    std::vector<Nonlinearity> f;
    std::vector<std::optional<HarvestTerm>> K;

    /// Empty n-dimensional system with d_i = 1.
    static SystemSpec empty(std::size_t n, double tau, std::string name = {});

    /// Throws ModelError on structural violations: sizes, lags beyond tau,
    /// non-positive decay, negative couplings, non-positive c, undeclared
    /// harvesting bounds. Sampled on [domain_start, domain_start + horizon].
    void validate(double horizon = 100.0) const;

    /// a_ij(t) = sum over functionals of their coefficients.
    double coupling(std::size_t i, std::size_t j, double t) const;
    long double coupling_ld(std::size_t i, std::size_t j, double t) const;
    /// True if any linear functional is not a point mass at lag 0.
    bool linear_part_has_delay() const;
};

double linear_term_eval(const LinearTerm& term, double t, const HistoryView& hist, std::size_t j);
double nonlinearity_eval(const Nonlinearity& f, double t, const HistoryView& hist, std::size_t i);
/// Full right-hand side into `out` (size n).
void rhs_eval(const SystemSpec& sys, double t, const HistoryView& hist, std::span<double> out);
std::vector<double> rhs_eval(const SystemSpec& sys, double t, const HistoryView& hist);

/// (H4) lower-envelope data for one component.
struct Envelope {
    CoefficientFn beta;
    ScalarFn h_minus;
    double monotone_cap = 0.0;
    double derivative_at_zero = 0.0;
    bool valid = false;  // h(0) = 0, h > 0 on (0, inf), h'(0+) = 1 after normalization
    std::string reason;  // why not valid
    /// Declared range of beta when derivable from the coefficients' declared bounds.
    std::optional<Bounds> beta_bounds;
};

/// Range of a coefficient from declared bounds, propagated through sums,
/// products of nonnegative factors and window integrals.
std::optional<Bounds> declared_enclosure(const CoefficientFn& f);

/// Envelope coefficients beta_i(t); integral birth windows are integrated by quadrature.
std::vector<CoefficientFn> beta_of(const SystemSpec& sys);
/// (beta_i, h_i^-, monotone cap) per component; Nicholson/Mackey-Glass shapes use
/// the declared upper bound of c (ModelError if missing). `cap_limit` caps shapes
/// increasing everywhere.
std::vector<Envelope> lower_envelope(const SystemSpec& sys, double cap_limit = 1e3);

/// Rescaled system for x_hat_i = x_i / v_i.
SystemSpec scale_system(const SystemSpec& sys, std::span<const double> v);

/// Cooperative comparison system with birth terms beta_i(t) H_i(min over [t - tau, t]),
/// H_i(x) = min(h_i^-(min(x, m)), x). Throws ModelError if m exceeds a monotone cap.
SystemSpec build_cooperative_lower(const SystemSpec& sys, double m, double M);

/// True if h_i^-(m) <= min over [m, M] of h_i^- (sampled) for every component.
bool clamp_consistent(const SystemSpec& sys, double m, double M);

// ---------------------------------------------------------------------------

template <class F>
double sampled_minimum(F&& f, double a, double b, std::size_t samples) {
    if (!(b > a)) return f(a);
    double best_t = a;
    double best = f(a);
    const double step = (b - a) / static_cast<double>(samples);
    for (std::size_t k = 1; k <= samples; ++k) {
        const double t = k == samples ? b : a + static_cast<double>(k) * step;
        const double v = f(t);
        if (v < best) {
            best = v;
            best_t = t;
        }
    }
    double lo = std::max(a, best_t - step);
    double hi = std::min(b, best_t + step);
    constexpr double kInvPhi = 0.6180339887498949;
    double x1 = hi - kInvPhi * (hi - lo);
    double x2 = lo + kInvPhi * (hi - lo);
    double f1 = f(x1);
    double f2 = f(x2);
    while (hi - lo > 1e-10) {
        if (f1 < f2) {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - kInvPhi * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + kInvPhi * (hi - lo);
            f2 = f(x2);
        }
    }
    return std::min({best, f1, f2});
}

namespace detail {
double kernel_quadrature(const DelayKernel& k, double t, const std::function<double(double)>& g);
}

template <class G>
double DelayKernel::integrate(double t, G&& g) const {
    switch (kind_) {
        case Kind::instant: return g(t);
        case Kind::lag: return g(t - span_.eval(t));
        default: return detail::kernel_quadrature(*this, t, std::function<double(double)>(g));
    }
}

}  // namespace permadde
