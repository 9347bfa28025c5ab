#pragma once

// Numerical studies on top of the integrator: exact-solution residuals,
// ensemble permanence estimates, comparison with the cooperative lower
// system, decay-rate fits and extinction checks.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "permadde/integrator.hpp"
#include "permadde/system.hpp"

namespace permadde {

struct ExactSolution {
    std::vector<CoefficientFn> components;
    double valid_from = 0.0;

    InitialSegment segment() const { return InitialSegment::functions(components); }
    std::vector<double> at(double t) const;
};

enum class DerivativeMethod { analytic, central_difference };
std::string to_string(DerivativeMethod m);

struct ResidualReport {
    double max_residual = 0.0;
    double argmax = 0.0;
    double t1 = 0.0, t2 = 0.0;
    std::size_t points = 0;
    DerivativeMethod method = DerivativeMethod::analytic;
};

/// max over a uniform grid of |sol'(t) - rhs(t, sol)|_inf.
ResidualReport verify_exact_solution(const SystemSpec& sys, const ExactSolution& sol, double t1, double t2,
                                     std::size_t points = 1000);

/// Member 0 is the constant 1 segment, the rest are constants drawn
/// log-uniformly from [lo, hi] with a seeded mt19937_64.
std::vector<InitialSegment> make_ensemble(std::size_t n, std::size_t size, std::uint64_t seed, double lo = 1e-3,
                                          double hi = 10.0);

struct MemberOutcome {
    bool ok = true;
    std::string error;
    std::vector<double> min_post, max_post;
    std::vector<double> final_state;
    bool settling = true;  // last-quarter minimum holds at least 0.9 of the previous quarter's
};

struct PermanenceEstimate {
    std::vector<double> m_hat, M_hat;
    double m = 0.0, M = 0.0;
    double transient = 0.0;
    double horizon = 0.0;
    std::size_t ensemble_size = 0;
    std::size_t failed = 0;
    bool partial = false;
    /// m > 1e-12 and every member keeps its lower level through the last quarter.
    bool positive = false;
    std::vector<MemberOutcome> members;
};

PermanenceEstimate estimate_permanence(const SystemSpec& sys, const std::vector<InitialSegment>& ensemble,
                                       double horizon, double transient_fraction = 0.5,
                                       const IntegrateOptions& opts = {}, unsigned threads = 0);

struct ComparisonResult {
    double max_violation = 0.0;  // max of x_lower - x_full over the common knots
    double argmax = 0.0;
    std::size_t component = 0;
    /// h^-(m) <= min of h^- over [m, M]; without it the clamp can exceed the full birth term.
    bool clamp_consistent = true;
};

ComparisonResult comparison_check(const SystemSpec& sys, double m, double M, const InitialSegment& phi0,
                                  double horizon, const IntegrateOptions& opts = {});

struct DecayFit {
    double alpha = 0.0;  // -slope of log|x|_inf; +inf when the norm underflows
    double r2 = 0.0;
    std::size_t points = 0;
    bool underflow = false;
};

DecayFit decay_rate_fit(const Trajectory& traj, double t1, double t2, std::size_t max_points = 2000);

struct ExtinctionResult {
    bool extinct = false;
    std::vector<double> sup_first, sup_second;  // per member, windows [0.9H, H] and [1.8H, 2H]
};

ExtinctionResult extinction_check(const SystemSpec& sys, const std::vector<InitialSegment>& ensemble, double horizon,
                                  const IntegrateOptions& opts = {});

nlohmann::json to_json(const ResidualReport& r);
nlohmann::json to_json(const PermanenceEstimate& e);
nlohmann::json to_json(const ComparisonResult& c);
nlohmann::json to_json(const DecayFit& f);
nlohmann::json to_json(const ExtinctionResult& e);

}  // namespace permadde
