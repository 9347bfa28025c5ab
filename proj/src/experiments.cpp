#include "permadde/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <limits>
#include <random>
#include <thread>

#include "permadde/error.hpp"

namespace permadde {

namespace {

nlohmann::json num(double x) {
    if (std::isfinite(x)) return x;
    if (std::isnan(x)) return "nan";
    return x > 0 ? "inf" : "-inf";
}

nlohmann::json nums(const std::vector<double>& xs) {
    auto j = nlohmann::json::array();
    for (double x : xs) j.push_back(num(x));
    return j;
}

double sup_norm_window(const Trajectory& traj, double a, double b) {
    double s = 0.0;
    for (std::size_t i = 0; i < traj.dimension(); ++i)
        s = std::max({s, std::fabs(traj.window_max(i, a, b)), std::fabs(traj.window_min(i, a, b))});
    return s;
}

MemberOutcome run_member(const SystemSpec& sys, const InitialSegment& phi, double t_end, double t_transient,
                         const IntegrateOptions& opts) {
    MemberOutcome out;
    try {
        const Trajectory traj = integrate(sys, phi, t_end, opts);
        const double t0 = traj.t0();
        const double q3 = t0 + 0.75 * (t_end - t0);
        const double q2 = t0 + 0.5 * (t_end - t0);
        for (std::size_t i = 0; i < sys.n; ++i) {
            out.min_post.push_back(traj.window_min(i, t_transient, t_end));
            out.max_post.push_back(traj.window_max(i, t_transient, t_end));
            const double last = traj.window_min(i, q3, t_end);
            const double prev = traj.window_min(i, q2, q3);
            if (!(last >= 0.9 * prev)) out.settling = false;
        }
        out.final_state = traj.state(t_end);
    } catch (const std::exception& e) {
        out.ok = false;
        out.settling = false;
        out.error = e.what();
    }
    return out;
}

template <class F>
auto run_parallel(std::size_t count, unsigned threads, F&& job) {
    using R = decltype(job(std::size_t{0}));
    std::vector<R> results(count);
    if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
    threads = static_cast<unsigned>(std::min<std::size_t>(threads, std::max<std::size_t>(1, count)));
    if (threads <= 1) {
        for (std::size_t k = 0; k < count; ++k) results[k] = job(k);
        return results;
    }
    std::vector<std::future<void>> workers;
    for (unsigned w = 0; w < threads; ++w)
        workers.push_back(std::async(std::launch::async, [&, w] {
            for (std::size_t k = w; k < count; k += threads) results[k] = job(k);
        }));
    for (auto& f : workers) f.get();
    return results;
}

}  // namespace

std::vector<double> ExactSolution::at(double t) const {
    std::vector<double> out;
    for (const auto& c : components) out.push_back(c.eval(t));
    return out;
}

std::string to_string(DerivativeMethod m) {
    return m == DerivativeMethod::analytic ? "analytic" : "central-difference";
}

ResidualReport verify_exact_solution(const SystemSpec& sys, const ExactSolution& sol, double t1, double t2,
                                     std::size_t points) {
    if (sol.components.size() != sys.n) throw ModelError("verify_exact_solution: solution has wrong dimension");
    if (points < 2 || !(t2 > t1)) throw ModelError("verify_exact_solution: need t1 < t2 and at least two points");
    if (t1 - sys.tau < sol.valid_from - 1e-12)
        throw DomainError("verify_exact_solution: solution must be valid on [t1 - tau, t2]");
    ResidualReport rep;
    rep.t1 = t1;
    rep.t2 = t2;
    rep.points = points;
    bool analytic = true;
    for (const auto& c : sol.components) analytic &= c.has_analytic_derivative();
    rep.method = analytic ? DerivativeMethod::analytic : DerivativeMethod::central_difference;
    const FunctionHistory hist(sol.components);
    const auto grid = uniform_grid(t1, t2, points);
    for (double t : grid) {
        const auto rhs = rhs_eval(sys, t, hist);
        for (std::size_t i = 0; i < sys.n; ++i) {
            double dx;
            if (analytic) {
                dx = *sol.components[i].derivative(t);
            } else {
                const double h = 1e-6 * std::max(1.0, std::fabs(t));
                dx = (sol.components[i].eval(t + h) - sol.components[i].eval(t - h)) / (2.0 * h);
            }
            const double r = std::fabs(dx - rhs[i]);
            if (!(r <= rep.max_residual)) {
                rep.max_residual = r;
                rep.argmax = t;
            }
        }
    }
    return rep;
}

std::vector<InitialSegment> make_ensemble(std::size_t n, std::size_t size, std::uint64_t seed, double lo, double hi) {
    if (!(lo > 0.0) || !(hi >= lo)) throw ModelError("make_ensemble: need 0 < lo <= hi");
    std::vector<InitialSegment> out;
    if (size == 0) return out;
    out.push_back(InitialSegment::constant(std::vector<double>(n, 1.0)));
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(std::log(lo), std::log(hi));
    for (std::size_t k = 1; k < size; ++k) {
        std::vector<double> v(n);
        for (double& x : v) x = std::exp(u(rng));
        out.push_back(InitialSegment::constant(std::move(v)));
    }
    return out;
}

PermanenceEstimate estimate_permanence(const SystemSpec& sys, const std::vector<InitialSegment>& ensemble,
                                       double horizon, double transient_fraction, const IntegrateOptions& opts,
                                       unsigned threads) {
    if (ensemble.empty()) throw ModelError("estimate_permanence: ensemble is empty");
    if (!(horizon > 0.0)) throw ModelError("estimate_permanence: horizon must be positive");
    if (!(transient_fraction >= 0.0 && transient_fraction < 1.0))
        throw ModelError("estimate_permanence: transient fraction must lie in [0, 1)");
    PermanenceEstimate est;
    est.horizon = horizon;
    est.ensemble_size = ensemble.size();
    const double t0 = sys.domain_start;
    const double t_end = t0 + horizon;
    est.transient = t0 + transient_fraction * horizon;
    est.members = run_parallel(ensemble.size(), threads,
                               [&](std::size_t k) { return run_member(sys, ensemble[k], t_end, est.transient, opts); });

    est.m_hat.assign(sys.n, std::numeric_limits<double>::infinity());
    est.M_hat.assign(sys.n, -std::numeric_limits<double>::infinity());
    bool settling = true;
    for (const auto& m : est.members) {
        if (!m.ok) {
            ++est.failed;
            continue;
        }
        settling &= m.settling;
        for (std::size_t i = 0; i < sys.n; ++i) {
            est.m_hat[i] = std::min(est.m_hat[i], m.min_post[i]);
            est.M_hat[i] = std::max(est.M_hat[i], m.max_post[i]);
        }
    }
    est.partial = est.failed > 0;
    if (est.failed == est.members.size())
        throw IntegrationError(IntegrationError::Kind::non_finite,
                               "estimate_permanence: every member failed: " + est.members.front().error, t0);
    est.m = *std::min_element(est.m_hat.begin(), est.m_hat.end());
    est.M = *std::max_element(est.M_hat.begin(), est.M_hat.end());
    est.positive = est.m > 1e-12 && settling;
    return est;
}

ComparisonResult comparison_check(const SystemSpec& sys, double m, double M, const InitialSegment& phi0,
                                  double horizon, const IntegrateOptions& opts) {
    const SystemSpec lower = build_cooperative_lower(sys, m, M);
    const double t_end = sys.domain_start + horizon;
    const Trajectory full = integrate(sys, phi0, t_end, opts);
    const Trajectory low = integrate(lower, phi0, t_end, opts);
    ComparisonResult res;
    res.clamp_consistent = clamp_consistent(sys, m, M);
    res.max_violation = -std::numeric_limits<double>::infinity();
    const std::size_t K = std::min(full.knots(), low.knots());
    for (std::size_t k = 0; k < K; ++k)
        for (std::size_t i = 0; i < sys.n; ++i) {
            const double v = low.knot_value(k, i) - full.knot_value(k, i);
            if (v > res.max_violation) {
                res.max_violation = v;
                res.argmax = full.times()[k];
                res.component = i;
            }
        }
    return res;
}

DecayFit decay_rate_fit(const Trajectory& traj, double t1, double t2, std::size_t max_points) {
    if (!(t2 > t1)) throw ModelError("decay_rate_fit: window must have positive length");
    if (t1 < traj.t0() || t2 > traj.t_end()) throw HistoryGap("decay_rate_fit: window outside the trajectory", t1);
    const std::size_t K = std::max<std::size_t>(2, max_points);
    std::vector<double> ts, ys;
    DecayFit fit;
    for (std::size_t k = 0; k < K; ++k) {
        const double t = k + 1 == K ? t2 : t1 + (t2 - t1) * static_cast<double>(k) / static_cast<double>(K - 1);
        double norm = 0.0;
        for (std::size_t i = 0; i < traj.dimension(); ++i) norm = std::max(norm, std::fabs(traj.value(i, t)));
        if (!(norm > std::numeric_limits<double>::min())) {
            fit.underflow = true;
            fit.alpha = std::numeric_limits<double>::infinity();
            fit.points = ts.size();
            return fit;
        }
        ts.push_back(t);
        ys.push_back(std::log(norm));
    }
    const double n = static_cast<double>(ts.size());
    double mt = 0.0, my = 0.0;
    for (std::size_t k = 0; k < ts.size(); ++k) {
        mt += ts[k];
        my += ys[k];
    }
    mt /= n;
    my /= n;
    double stt = 0.0, sty = 0.0, syy = 0.0;
    for (std::size_t k = 0; k < ts.size(); ++k) {
        stt += (ts[k] - mt) * (ts[k] - mt);
        sty += (ts[k] - mt) * (ys[k] - my);
        syy += (ys[k] - my) * (ys[k] - my);
    }
    const double slope = sty / stt;
    fit.alpha = -slope;
    fit.r2 = syy > 0.0 ? (sty * sty) / (stt * syy) : 1.0;
    fit.points = ts.size();
    return fit;
}

ExtinctionResult extinction_check(const SystemSpec& sys, const std::vector<InitialSegment>& ensemble, double horizon,
                                  const IntegrateOptions& opts) {
    if (ensemble.empty()) throw ModelError("extinction_check: ensemble is empty");
    if (!(horizon > 0.0)) throw ModelError("extinction_check: horizon must be positive");
    ExtinctionResult res;
    res.extinct = true;
    const double t0 = sys.domain_start;
    for (const auto& phi : ensemble) {
        const Trajectory traj = integrate(sys, phi, t0 + 2.0 * horizon, opts);
        const double s1 = sup_norm_window(traj, t0 + 0.9 * horizon, t0 + horizon);
        const double s2 = sup_norm_window(traj, t0 + 1.8 * horizon, t0 + 2.0 * horizon);
        res.sup_first.push_back(s1);
        res.sup_second.push_back(s2);
        if (!(s2 <= 0.5 * s1)) res.extinct = false;
    }
    return res;
}

nlohmann::json to_json(const ResidualReport& r) {
    return {{"max_residual", num(r.max_residual)},
            {"argmax", r.argmax},
            {"interval", {r.t1, r.t2}},
            {"points", r.points},
            {"derivative", to_string(r.method)}};
}

nlohmann::json to_json(const PermanenceEstimate& e) {
    nlohmann::json j{{"m_hat", nums(e.m_hat)},         {"M_hat", nums(e.M_hat)},
                     {"m", num(e.m)},                  {"M", num(e.M)},
                     {"transient", e.transient},       {"horizon", e.horizon},
                     {"ensemble_size", e.ensemble_size}, {"failed", e.failed},
                     {"partial", e.partial},           {"positive", e.positive}};
    auto& errs = j["member_errors"] = nlohmann::json::array();
    for (std::size_t k = 0; k < e.members.size(); ++k)
        if (!e.members[k].ok) errs.push_back({{"member", k}, {"error", e.members[k].error}});
    return j;
}

nlohmann::json to_json(const ComparisonResult& c) {
    return {{"max_violation", num(c.max_violation)}, {"argmax", c.argmax}, {"component", c.component + 1},
            {"clamp_consistent", c.clamp_consistent}};
}

nlohmann::json to_json(const DecayFit& f) {
    return {{"alpha", num(f.alpha)}, {"r2", num(f.r2)}, {"points", f.points}, {"underflow", f.underflow}};
}

nlohmann::json to_json(const ExtinctionResult& e) {
    return {{"extinct", e.extinct}, {"sup_first", nums(e.sup_first)}, {"sup_second", nums(e.sup_second)}};
}

}  // namespace permadde
