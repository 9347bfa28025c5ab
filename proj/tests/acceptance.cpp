// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "permadde/cli.hpp"
#include "permadde/error.hpp"
#include "permadde/experiments.hpp"
#include "permadde/hypotheses.hpp"
#include "permadde/integrator.hpp"
#include "permadde/models.hpp"
#include "permadde/system.hpp"

using namespace permadde;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct Outcome {
    bool pass = true;
    std::vector<std::string> details;

    void require(bool ok, const std::string& what) {
        if (!ok) pass = false;
        details.push_back((ok ? "ok   " : "FAIL ") + what);
    }
};

std::string fmt(double x) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6g", x);
    return buf;
}

const char* status_name(Status s) {
    switch (s) {
        case Status::certified: return "certified";
        case Status::refuted: return "refuted";
        case Status::undecided: return "undecided";
        case Status::not_applicable: return "not_applicable";
    }
    return "?";
}

bool blocked_by(const HypothesisReport& r, const std::string& needle) {
    for (const auto& b : r.verdict.blocking)
        if (b.find(needle) != std::string::npos) return true;
    return false;
}

std::vector<const CheckResult*> checks_of(const HypothesisReport& r) { return {&r.h2, &r.h2star, &r.h5, &r.h5star}; }

ReportOptions standard_grid() {
    ReportOptions ro;
    ro.grid = GridSpec{10.0, 1e4, 400};
    return ro;
}

// 1. Exact-solution oracles.
Outcome exact_solutions() {
    Outcome o;
    for (const auto& fx : {example_3_1(), example_3_4(), example_3_5()}) {
        const auto t0 = Clock::now();
        const ResidualReport r = verify_exact_solution(fx.spec, *fx.exact, 1.0, 100.0, 1000);
        const double dt = seconds_since(t0);
        o.require(r.max_residual <= 1e-6, fx.id + " residual " + fmt(r.max_residual) + " <= 1e-6");
        o.require(dt < 1.0, fx.id + " runtime " + fmt(dt) + " s < 1 s");
    }
    return o;
}

// 2. Trajectory tracking from the exact initial segments.
Outcome tracking() {
    Outcome o;
    for (const auto& fx : {example_3_4(), example_3_5()}) {
        const auto t0 = Clock::now();
        IntegrateOptions io;
        io.step = 1e-3;
        const Trajectory traj = integrate(fx.spec, fx.exact->segment(), 100.0, io);
        double worst = 0.0;
        for (std::size_t k = 0; k < traj.knots(); ++k) {
            const auto ex = fx.exact->at(traj.times()[k]);
            for (std::size_t i = 0; i < ex.size(); ++i)
                worst = std::max(worst, std::abs(traj.knot_value(k, i) - ex[i]) / std::abs(ex[i]));
        }
        const double dt = seconds_since(t0);
        o.require(traj.t0() <= 0.0 && traj.t_end() >= 100.0, fx.id + " covers [0,100]");
        o.require(worst <= 1e-3, fx.id + " max relative error " + fmt(worst) + " <= 1e-3");
        o.require(dt < 10.0, fx.id + " runtime " + fmt(dt) + " s < 10 s");
    }
    return o;
}

// 3. Hypothesis certificates on the standard grid.
Outcome certificates() {
    Outcome o;
    const auto t0 = Clock::now();
    const ReportOptions ro = standard_grid();

    const auto e31 = example_3_1();
    const auto r31 = check_system(e31.spec, ro);
    o.require(r31.h2.status == Status::certified, std::string("3.1 H2 ") + status_name(r31.h2.status));
    if (r31.h2.witness) {
        const auto& w = *r31.h2.witness;
        o.require(w.margin >= Example31Params{}.mu - 1e-9, "3.1 H2 delta " + fmt(w.margin) + " >= mu");
        o.require(w.v.size() == 2 && std::abs(w.v[0] - 1) < 1e-9 && std::abs(w.v[1] - 1) < 1e-9, "3.1 H2 v = (1,1)");
    }
    o.require(r31.h2star.status == Status::refuted, std::string("3.1 H2* ") + status_name(r31.h2star.status));

    const auto e33 = example_3_3();
    const auto r33 = check_system(e33.spec, ro);
    for (const CheckResult* c : {&r33.h2, &r33.h5, &r33.h5star}) {
        const bool ok = c->status == Status::certified && c->witness && c->witness->v.size() == 2 &&
                        std::abs(c->witness->v[0] - 1) < 1e-9 && std::abs(c->witness->v[1] - 1) < 1e-9;
        o.require(ok, "3.3 " + to_string(c->tag) + " " + status_name(c->status) + " with v = (1,1)");
    }
    if (r33.h5.witness) {
        const double expect = Example33Params{}.beta - 1.0;
        o.require(std::abs(r33.h5.witness->margin - expect) <= 1e-6 * std::max(1.0, expect),
                  "3.3 H5 margin " + fmt(r33.h5.witness->margin) + " = beta - 1");
    }

    const auto e34 = example_3_4();
    const auto r34 = check_system(e34.spec, ro);
    for (const CheckResult* c : {&r34.h2, &r34.h5, &r34.h5star})
        o.require(c->status == Status::certified, "3.4 " + to_string(c->tag) + " " + status_name(c->status));
    o.require(r34.verdict.verdict == Verdict::no_verdict && blocked_by(r34, "(H4)") && blocked_by(r34, "h'(0)=0"),
              "3.4 verdict blocked by (H4): h'(0)=0");

    const auto e35 = example_3_5();
    const auto r35 = check_system(e35.spec, ro);
    o.require(r35.verdict.verdict == Verdict::no_verdict && blocked_by(r35, "β unbounded"),
              "3.5 verdict blocked by unbounded beta");

    const double dt = seconds_since(t0);
    o.require(dt < 5.0, "runtime " + fmt(dt) + " s < 5 s");
    return o;
}

// 4. Stability dichotomy on the planar linear system.
Outcome dichotomy() {
    Outcome o;
    IntegrateOptions io;
    io.step = 1e-3;
    io.scheme = Scheme::exp_rk4;

    const auto e31 = example_3_1();
    const Trajectory traj = integrate(e31.spec, e31.exact->segment(), 1e3, io);
    const DecayFit fit = decay_rate_fit(traj, 100.0, 1e3);
    o.require(fit.alpha <= 1e-3, "3.1 alpha_hat " + fmt(fit.alpha) + " <= 1e-3");
    const auto end = traj.state(1e3);
    double dev = 0.0;
    for (double x : end) dev = std::max(dev, std::abs(x - 1.0));
    o.require(dev <= 1e-2, "3.1 |x(1000) - 1| = " + fmt(dev) + " <= 1e-2");

    const auto c31 = example_3_1_constant();
    const Trajectory tc = integrate(c31.spec, InitialSegment::constant({1.0, 1.0}), 100.0, io);
    const DecayFit fc = decay_rate_fit(tc, 10.0, 100.0);
    o.require(fc.alpha >= 1e-2, "constant a = d - mu: alpha_hat " + fmt(fc.alpha) + " >= 1e-2");
    return o;
}

// 5. Permanence of the two-patch Nicholson instance.
Outcome permanence() {
    Outcome o;
    const auto t0 = Clock::now();
    const auto fx = nicholson_two_patch();
    const auto rep = check_system(fx.spec, standard_grid());
    o.require(rep.h2.status == Status::certified && rep.h5.status == Status::certified &&
                  rep.h5star.status == Status::certified && rep.verdict.verdict == Verdict::permanent,
              "corollary hypotheses certified, verdict PERMANENT");

    const auto ens = make_ensemble(fx.spec.n, 50, 20240601);
    const PermanenceEstimate est = estimate_permanence(fx.spec, ens, 200.0);
    o.require(est.failed == 0, "no failed members (" + std::to_string(est.failed) + ")");
    for (std::size_t i = 0; i < fx.spec.n; ++i) {
        o.require(est.m_hat[i] >= 0.1, "m_hat[" + std::to_string(i + 1) + "] " + fmt(est.m_hat[i]) + " >= 0.1");
        o.require(est.M_hat[i] <= 3.0, "M_hat[" + std::to_string(i + 1) + "] " + fmt(est.M_hat[i]) + " <= 3");
    }

    const double x = std::log(8.0 / 3.0);
    const FunctionHistory hist({CoefficientFn::constant(x), CoefficientFn::constant(x)});
    double res = 0.0;
    for (double t : {1.0, 7.5, 100.0, 1e4})
        for (double r : rhs_eval(fx.spec, t, hist)) res = std::max(res, std::abs(r));
    o.require(res <= 1e-12, "residual at ln(8/3) " + fmt(res) + " <= 1e-12");

    const double dt = seconds_since(t0);
    o.require(dt < 30.0, "runtime " + fmt(dt) + " s < 30 s");
    return o;
}

// 6. Comparison with the cooperative lower system.
Outcome comparison() {
    Outcome o;
    const auto fx = nicholson_two_patch();
    for (const auto& phi : {InitialSegment::constant({1.0, 1.0}), InitialSegment::constant({0.6, 1.5})}) {
        const ComparisonResult c = comparison_check(fx.spec, 0.5, 3.0, phi, 100.0);
        o.require(c.max_violation <= 1e-6, "violation " + fmt(c.max_violation) + " <= 1e-6");
    }
    return o;
}

// 7. Integrator order and the method-of-steps test.
Outcome integrator_order() {
    Outcome o;
    SystemSpec decay = SystemSpec::empty(1, 1.0, "decay");
    std::vector<double> err;
    for (double h : {1e-2, 5e-3, 2.5e-3}) {
        IntegrateOptions io;
        io.step = h;
        const Trajectory t = integrate(decay, InitialSegment::constant({1.0}), 1.0, io);
        err.push_back(std::abs(t.state(1.0)[0] - std::exp(-1.0)));
    }
    for (std::size_t k = 0; k + 1 < err.size(); ++k) {
        const double ratio = err[k] / err[k + 1];
        o.require(ratio >= 8.0 && ratio <= 32.0, "error ratio " + fmt(ratio) + " within factor 2 of 16");
    }

    SystemSpec lag = SystemSpec::empty(1, 1.0, "pure delay");
    lag.d[0] = CoefficientFn::constant(0.0);
    lag.L[0][0].push_back({CoefficientFn::constant(-1.0), DelayKernel::lag_point(CoefficientFn::constant(1.0))});
    IntegrateOptions io;
    io.step = 1e-3;
    io.positivity_floor = std::nullopt;
    const Trajectory t = integrate(lag, InitialSegment::constant({1.0}), 2.0, io);
    const double x1 = t.state(1.0)[0], x2 = t.state(2.0)[0];
    o.require(std::abs(x1) <= 1e-8, "x(1) = " + fmt(x1) + " vs 0");
    o.require(std::abs(x2 + 0.5) <= 1e-8, "x(2) = " + fmt(x2) + " vs -0.5");
    return o;
}

std::string run(std::vector<std::string> args, int& code) {
    args.insert(args.begin(), "permadde");
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    std::ostringstream out, err;
    code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
    return out.str() + "\n--\n" + err.str();
}

// 8. Invariant suites.
Outcome invariants() {
    Outcome o;
    const ReportOptions ro = standard_grid();
    for (const auto& id : builtin_ids()) {
        const ModelFixture fx = example_fixture(id);
        if (!fx.in_class) continue;

        // cone invariance
        bool positive = true;
        IntegrateOptions io;
        io.scheme = Scheme::exp_rk4;
        try {
            for (const auto& phi : make_ensemble(fx.spec.n, 5, 7)) {
                const Trajectory t = integrate(fx.spec, phi, fx.spec.domain_start + 50.0, io);
                for (std::size_t i = 0; i < fx.spec.n; ++i)
                    positive = positive && t.window_min(i, t.t0(), t.t_end()) > 0.0;
            }
        } catch (const IntegrationError&) {
            positive = false;
        }
        o.require(positive, id + ": positive cone invariant");

        const HypothesisReport rep = check_system(fx.spec, ro);

        // witness re-verification on the 10x grid
        bool witnesses = true;
        for (const CheckResult* c : checks_of(rep)) {
            if (c->status != Status::certified || !c->witness) continue;
            Witness w = *c->witness;
            reverify(fx.spec, w, 10);
            witnesses = witnesses && w.fine_margin && *w.fine_margin > 0.0 && !w.under_resolved;
        }
        o.require(witnesses, id + ": certified witnesses hold on the 10x grid");

        // scaling invariance x -> diag(v) y
        const std::vector<double> scale(fx.spec.n, 1.0);
        std::vector<double> s = scale;
        for (std::size_t i = 0; i < s.size(); ++i) s[i] = i % 2 == 0 ? 2.0 : 0.5;
        const HypothesisReport scaled = check_system(scale_system(fx.spec, s), ro);
        bool same = scaled.verdict.verdict == rep.verdict.verdict;
        const auto a = checks_of(rep), b = checks_of(scaled);
        for (std::size_t k = 0; k < a.size(); ++k) same = same && a[k]->status == b[k]->status;
        o.require(same, id + ": statuses invariant under diagonal scaling");

        // (H5) with bounded B implies (H5*)
        if (rep.h5.status == Status::certified && rep.inputs.beta_bounded_above)
            o.require(rep.h5star.status == Status::certified, id + ": (H5) + bounded B gives (H5*)");
    }

    // determinism of CLI outputs
    const std::vector<std::vector<std::string>> cmds = {
        {"check", "--builtin", "example3.4", "--json"},
        {"check", "--builtin", "nicholson2patch", "--json"},
        {"simulate", "--builtin", "example3.5", "--horizon", "5", "--dt", "0.1"},
        {"verify", "--builtin", "example3.1", "--json"},
        {"permanence", "--builtin", "nicholson2patch", "--ensemble", "8", "--horizon", "50", "--json"},
        {"export", "--builtin", "example3.2"},
    };
    for (const auto& cmd : cmds) {
        int c1 = 0, c2 = 0;
        const std::string first = run(cmd, c1), second = run(cmd, c2);
        std::string label;
        for (const auto& a : cmd) label += " " + a;
        o.require(first == second && c1 == c2, "deterministic:" + label);
    }
    return o;
}

}  // namespace

int main() {
    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
        {"exact-solution oracles", exact_solutions},
        {"trajectory tracking", tracking},
        {"hypothesis certificates", certificates},
        {"stability dichotomy", dichotomy},
        {"permanence at desk scale", permanence},
        {"comparison property", comparison},
        {"integrator order", integrator_order},
        {"invariant suites", invariants},
    };
    int failures = 0;
    for (std::size_t k = 0; k < criteria.size(); ++k) {
        Outcome o;
        const auto t0 = Clock::now();
        try {
            o = criteria[k].second();
        } catch (const std::exception& e) {
            o.require(false, std::string("exception: ") + e.what());
        }
        const double dt = seconds_since(t0);
        std::cout << (o.pass ? "PASS" : "FAIL") << " criterion " << (k + 1) << ": " << criteria[k].first << " ("
                  << fmt(dt) << " s)\n";
        for (const auto& d : o.details) std::cout << "    " << d << "\n";
        if (!o.pass) ++failures;
    }
    std::cout << (failures == 0 ? "all criteria passed" : std::to_string(failures) + " criteria failed") << "\n";
    return failures == 0 ? 0 : 1;
}
