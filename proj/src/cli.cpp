#include "permadde/cli.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "permadde/error.hpp"
#include "permadde/experiments.hpp"
#include "permadde/hypotheses.hpp"
#include "permadde/integrator.hpp"
#include "permadde/models.hpp"
#include "permadde/specfile.hpp"

namespace permadde {

namespace {

using nlohmann::json;

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct Source {
    std::string spec;
    std::string builtin;
};

struct Loaded {
    std::string label;
    SpecDocument doc;
};

Loaded load(const Source& src) {
    std::string builtin = src.builtin;
    std::string spec = src.spec;
    if (spec.rfind("builtin:", 0) == 0) {
        builtin = spec.substr(8);
        spec.clear();
    }
    if (builtin.empty() == spec.empty()) throw UsageError("exactly one of --spec or --builtin is required");
    Loaded l;
    if (!builtin.empty()) {
        ModelFixture fx = example_fixture(builtin);
        l.label = "builtin:" + builtin;
        l.doc.spec = std::move(fx.spec);
        l.doc.exact = std::move(fx.exact);
    } else {
        l.label = spec;
        l.doc = load_spec_file(spec);
    }
    return l;
}

void emit(std::ostream& out, const std::string& path, const std::string& text) {
    if (path.empty() || path == "-") {
        out << text;
        return;
    }
    std::ofstream f(path);
    if (!f) throw UsageError("cannot write '" + path + "'");
    f << text;
}

std::vector<double> parse_values(const std::string& s) {
    std::vector<double> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        try {
            std::size_t used = 0;
            out.push_back(std::stod(item, &used));
            if (used != item.size()) throw std::invalid_argument(item);
        } catch (const std::exception&) {
            throw UsageError("--initial: cannot parse '" + item + "' as a number");
        }
    }
    return out;
}

InitialSegment choose_initial(const SpecDocument& doc, const std::string& choice) {
    const std::size_t n = doc.spec.n;
    if (choice.empty()) {
        if (doc.initial) return *doc.initial;
        return InitialSegment::constant(std::vector<double>(n, 1.0));
    }
    if (choice == "ones") return InitialSegment::constant(std::vector<double>(n, 1.0));
    if (choice == "exact") {
        if (!doc.exact) throw UsageError("--initial exact: the system has no exact solution");
        return doc.exact->segment();
    }
    if (choice == "spec") {
        if (!doc.initial) throw UsageError("--initial spec: the spec file has no initial segment");
        return *doc.initial;
    }
    auto v = parse_values(choice);
    if (v.size() == 1) v.assign(n, v.front());
    if (v.size() != n) throw UsageError("--initial: expected 1 or " + std::to_string(n) + " values");
    return InitialSegment::constant(std::move(v));
}

std::string dump(const json& j) { return j.dump(2) + "\n"; }

json stats_json(const Trajectory& traj) {
    return {{"steps", traj.stats().steps},
            {"rhs_evaluations", traj.stats().rhs_evaluations},
            {"step", traj.stats().step},
            {"scheme", to_string(traj.stats().scheme)}};
}

struct Common {
    Source src;
    std::string out;
    bool as_json = false;
};

void add_source(CLI::App* sub, Common& c) {
    sub->add_option("--spec", c.src.spec, "Spec file (JSON, version 1) or builtin:<id>");
    sub->add_option("--builtin", c.src.builtin, "Built-in system id");
    sub->add_option("--out", c.out, "Output file (default: standard output)");
    sub->add_flag("--json", c.as_json, "Print the JSON report instead of text");
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Permanence and persistence toolkit for nonautonomous delay differential systems", "permadde"};
    app.require_subcommand(1);

    Common c;
    double horizon = 200.0;
    double step = 1e-3;
    double dt = 0.0;
    std::string scheme = "rk4";
    std::string initial;
    bool no_floor = false;
    double tcheck = 10.0, tmax = 1e4;
    std::size_t grid = 400;
    std::size_t ensemble = 50;
    std::uint64_t seed = 20240601;
    double transient = 0.5;
    bool extinction = false;
    double t1 = std::numeric_limits<double>::quiet_NaN(), t2 = 100.0, tol = 1e-6;
    std::size_t points = 1000;
    double perturb_d = 0.0;
    unsigned threads = 0;

    auto add_integration = [&](CLI::App* sub) {
        sub->add_option("--horizon", horizon, "Integration horizon beyond the domain start")->capture_default_str();
        sub->add_option("--step", step, "Step size")->capture_default_str();
        sub->add_option("--scheme", scheme, "rk4 or exp_rk4")->capture_default_str();
        sub->add_flag("--no-floor", no_floor, "Disable the positivity monitor");
    };

    CLI::App* sim = app.add_subcommand("simulate", "Integrate a system and write a CSV trajectory");
    add_source(sim, c);
    add_integration(sim);
    sim->add_option("--dt", dt, "Output spacing (default: the step)");
    sim->add_option("--initial", initial, "ones, exact, spec, or comma-separated constants");

    CLI::App* chk = app.add_subcommand("check", "Certify the hypotheses on a grid and report the verdict");
    add_source(chk, c);
    chk->add_option("--tcheck", tcheck, "First grid time")->capture_default_str();
    chk->add_option("--tmax", tmax, "Last grid time")->capture_default_str();
    chk->add_option("--grid", grid, "Number of grid points")->capture_default_str();

    CLI::App* ver = app.add_subcommand("verify", "Residual of the exact solution");
    add_source(ver, c);
    ver->add_option("--t1", t1, "Start of the residual grid (default: max(1, domain start))");
    ver->add_option("--t2", t2, "End of the residual grid")->capture_default_str();
    ver->add_option("--points", points, "Grid points")->capture_default_str();
    ver->add_option("--tol", tol, "Pass threshold")->capture_default_str();
    ver->add_option("--perturb-d", perturb_d, "Add a constant to every d_i before checking");

    CLI::App* perm = app.add_subcommand("permanence", "Empirical permanence estimate over a seeded ensemble");
    add_source(perm, c);
    add_integration(perm);
    perm->add_option("--ensemble", ensemble, "Ensemble size")->capture_default_str();
    perm->add_option("--seed", seed, "RNG seed")->capture_default_str();
    perm->add_option("--transient", transient, "Transient fraction of the horizon")->capture_default_str();
    perm->add_option("--initial", initial, "exact: use the exact segment as the only member");
    perm->add_option("--threads", threads, "Worker threads (0: hardware)");
    perm->add_flag("--extinction", extinction, "Also run the extinction check");

    CLI::App* exp = app.add_subcommand("export", "Write a built-in system as a spec file");
    add_source(exp, c);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << "\n" << "run with --help for usage\n";
        return kExitUsage;
    }

    try {
        Loaded l = load(c.src);
        SystemSpec& sys = l.doc.spec;
        IntegrateOptions io;
        io.step = step;
        io.scheme = scheme_from_string(scheme);
        if (no_floor) io.positivity_floor = std::nullopt;

        if (*sim) {
            const InitialSegment phi = choose_initial(l.doc, initial);
            const Trajectory traj = integrate(sys, phi, sys.domain_start + horizon, io);
            const auto g = output_grid(traj, dt > 0.0 ? dt : traj.step());
            std::ostringstream csv;
            write_csv(csv, traj, g);
            json summary{{"system", l.label}, {"t0", traj.t0()}, {"t_end", traj.t_end()},
                         {"rows", g.size()},  {"final", traj.state(traj.t_end())}, {"stats", stats_json(traj)}};
            std::vector<double> mins, maxs;
            for (std::size_t i = 0; i < sys.n; ++i) {
                mins.push_back(traj.window_min(i, traj.t0(), traj.t_end()));
                maxs.push_back(traj.window_max(i, traj.t0(), traj.t_end()));
            }
            summary["min"] = mins;
            summary["max"] = maxs;
            if (c.out.empty() || c.out == "-") {
                out << csv.str();
                err << summary.dump() << "\n";
            } else {
                emit(out, c.out, csv.str());
                out << dump(summary);
            }
            return kExitOk;
        }

        if (*chk) {
            ReportOptions ro;
            ro.grid = GridSpec{std::max(tcheck, sys.domain_start), tmax, grid};
            const HypothesisReport rep = check_system(sys, ro);
            json j = to_json(rep);
            j["source"] = l.label;
            const std::string text = c.as_json ? dump(j) : to_text(rep);
            if (!c.out.empty() && c.out != "-") {
                emit(out, c.out, dump(j));
                out << to_text(rep);
            } else {
                out << text;
            }
            return rep.verdict.verdict == Verdict::no_verdict ? kExitNoVerdict : kExitOk;
        }

        if (*ver) {
            if (!l.doc.exact) throw UsageError(l.label + " has no exact solution");
            if (perturb_d != 0.0)
                for (auto& d : sys.d) d = d + CoefficientFn::constant(perturb_d);
            const double a = std::isnan(t1) ? std::max(1.0, sys.domain_start) : t1;
            const ResidualReport r = verify_exact_solution(sys, *l.doc.exact, a, t2, points);
            const bool pass = r.max_residual <= tol;
            json j = to_json(r);
            j["system"] = l.label;
            j["tolerance"] = tol;
            j["pass"] = pass;
            if (perturb_d != 0.0) j["perturb_d"] = perturb_d;
            std::ostringstream text;
            text << l.label << ": max residual " << r.max_residual << " at t=" << r.argmax << " ("
                 << to_string(r.method) << "), tolerance " << tol << " -> " << (pass ? "PASS" : "FAIL") << "\n";
            emit(out, c.out, c.as_json ? dump(j) : text.str());
            return pass ? kExitOk : kExitVerifyFailed;
        }

        if (*perm) {
            if (ensemble == 0) throw UsageError("--ensemble must be positive");
            std::vector<InitialSegment> members;
            if (!initial.empty()) {
                members.push_back(choose_initial(l.doc, initial));
            } else {
                members = make_ensemble(sys.n, ensemble, seed);
            }
            const PermanenceEstimate est = estimate_permanence(sys, members, horizon, transient, io, threads);
            json j = to_json(est);
            j["system"] = l.label;
            j["seed"] = seed;
            j["step"] = step;
            j["scheme"] = scheme;
            if (extinction) j["extinction"] = to_json(extinction_check(sys, members, horizon, io));
            std::ostringstream text;
            text << l.label << ": m_hat=" << est.m << " M_hat=" << est.M << " over " << est.ensemble_size
                 << " members (seed " << seed << ")" << (est.positive ? "" : ", lower level not positive") << "\n";
            emit(out, c.out, c.as_json ? dump(j) : text.str());
            return est.partial ? kExitNumeric : kExitOk;
        }

        if (*exp) {
            emit(out, c.out, dump(to_json(l.doc)));
            return kExitOk;
        }
    } catch (const UsageError& e) {
        err << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const SpecError& e) {
        err << "spec error at " << e.what() << "\n";
        return kExitUsage;
    } catch (const std::invalid_argument& e) {
        err << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const IntegrationError& e) {
        err << "integration failed: " << e.what() << "\n";
        return kExitNumeric;
    } catch (const NonFiniteError& e) {
        err << "numeric failure: " << e.what() << "\n";
        return kExitNumeric;
    } catch (const HistoryGap& e) {
        err << "numeric failure: " << e.what() << "\n";
        return kExitNumeric;
    } catch (const ModelError& e) {
        err << "model error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kExitNumeric;
    }
    return kExitUsage;
}

}  // namespace permadde
