#pragma once

// Method-of-steps integration with fixed-step fourth-order schemes and
// cubic-Hermite dense output.

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "permadde/system.hpp"
#include "permadde/timefn.hpp"

namespace permadde {

/// Initial segment on [t0 - tau, t0] as functions of absolute time.
struct InitialSegment {
    std::vector<CoefficientFn> components;

    static InitialSegment constant(std::vector<double> values);
    static InitialSegment functions(std::vector<CoefficientFn> components);
    std::size_t dimension() const noexcept { return components.size(); }
};

enum class Scheme {
    rk4,      // classical Runge-Kutta
    exp_rk4,  // exponential RK4 (Cox-Matthews) with the diagonal decay as linear part
};

std::string to_string(Scheme s);
Scheme scheme_from_string(const std::string& s);

struct IntegrateOptions {
    double step = 1e-3;
    /// Shrink the step so that t0 + k*tau are knots.
    bool track_breakpoints = true;
    /// Abort when a component drops below the floor; nullopt disables monitoring.
    std::optional<double> positivity_floor = 0.0;
    std::size_t max_steps = 20'000'000;
    Scheme scheme = Scheme::rk4;
};

struct IntegrationStats {
    std::size_t steps = 0;
    std::size_t rhs_evaluations = 0;
    double step = 0.0;
    Scheme scheme = Scheme::rk4;
};

class Trajectory;

namespace detail {
class StageView;
Trajectory integrate_impl(const SystemSpec&, const InitialSegment&, double, double, const IntegrateOptions&);
}  // namespace detail

/// Dense output on [t0 - tau, t_end]: the initial segment before t0, piecewise
/// cubic Hermite interpolation of the knots after.
class Trajectory final : public HistoryView {
public:
    std::size_t dimension() const override { return n_; }
    /// HistoryGap outside [t0 - tau, t_end].
    double value(std::size_t component, double t) const override;
    /// Exact minimum of the dense output (knots plus interior critical points).
    double window_min(std::size_t component, double t1, double t2) const override;
    double window_max(std::size_t component, double t1, double t2) const;

    std::vector<double> state(double t) const;

    double t0() const noexcept { return ts_.front(); }
    double t_end() const noexcept { return ts_.back(); }
    double tau() const noexcept { return tau_; }
    double step() const noexcept { return h_; }
    std::size_t knots() const noexcept { return ts_.size(); }
    const std::vector<double>& times() const noexcept { return ts_; }
    double knot_value(std::size_t k, std::size_t component) const { return xs_[k * n_ + component]; }
    double knot_slope(std::size_t k, std::size_t component) const { return fs_[k * n_ + component]; }
    const IntegrationStats& stats() const noexcept { return stats_; }

private:
    friend class detail::StageView;
    friend Trajectory detail::integrate_impl(const SystemSpec&, const InitialSegment&, double, double,
                                             const IntegrateOptions&);

    static constexpr std::size_t kBlock = 64;

    std::size_t segment_index(double t, std::size_t segments) const;
    double dense_value(std::size_t i, double t, std::size_t segments) const;
    double initial_value(std::size_t i, double t) const;
    /// Min (sign = 1) or -max (sign = -1) over [a, b], using the first `segments`
    /// segments and `blocks` completed block extrema.
    double extremum(std::size_t i, double a, double b, std::size_t segments, std::size_t blocks, double sign) const;
    double segment_extremum(std::size_t k, std::size_t i, double th1, double th2, double sign) const;
    void finish_block(std::size_t b);

    std::size_t n_ = 0;
    double tau_ = 0.0;
    double h_ = 0.0;
    std::vector<double> ts_;
    std::vector<double> xs_;
    std::vector<double> fs_;
    std::vector<CoefficientFn> init_;
    std::vector<double> block_min_;  // [block * n + i]
    std::vector<double> block_max_;
    std::size_t blocks_ = 0;
    IntegrationStats stats_;
};

/// Integrates from t0 (default: the system's domain start) to t_end.
Trajectory integrate(const SystemSpec& sys, const InitialSegment& phi0, double t_end,
                     const IntegrateOptions& opts = {});
Trajectory integrate(const SystemSpec& sys, const InitialSegment& phi0, double t0, double t_end,
                     const IntegrateOptions& opts);

std::vector<double> history_eval(const Trajectory& traj, double t);

double window_min(const Trajectory& traj, std::size_t component, double t1, double t2);

/// s_k = min_j min over [T0 + k*len, T0 + (k+1)*len] of x_j, for every window inside the span.
std::vector<double> window_minima_sequence(const Trajectory& traj, double T0, double len);

/// Output grid t0, t0 + dt, ... , t_end (the knots when dt equals the step).
std::vector<double> output_grid(const Trajectory& traj, double dt);

/// CSV with header t,x1,...,xn and 17 significant digits.
void write_csv(std::ostream& os, const Trajectory& traj, const std::vector<double>& grid);

}  // namespace permadde
