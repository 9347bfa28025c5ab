#include "permadde/hypotheses.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <type_traits>

#include "permadde/error.hpp"

namespace permadde {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

nlohmann::json num(double x) {
    if (std::isfinite(x)) return x;
    if (std::isnan(x)) return "nan";
    return x > 0 ? "inf" : "-inf";
}

std::string fmt(double x) {
    std::ostringstream os;
    os.precision(6);
    os << x;
    return os.str();
}

std::string vec_text(const std::vector<double>& v) {
    std::string s = "(";
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) s += ", ";
        s += fmt(v[i]);
    }
    return s + ")";
}

bool is_ratio(Hypothesis h) { return h == Hypothesis::H2star || h == Hypothesis::H5star; }

// X - alpha Y, or X - delta I when Y is empty.
struct Form {
    DenseMatrix X, Y;
};

Form form_at(const MatrixSamples& s, Hypothesis tag, std::size_t k) {
    const std::size_t n = s.n;
    Form f{DenseMatrix(n, n), DenseMatrix(n, n)};
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) {
            const long double d = s.D[k](i, j), a = s.A[k](i, j), b = s.B[k](i, j);
            switch (tag) {
                case Hypothesis::H2: f.X(i, j) = d - a; break;
                case Hypothesis::H2star:
                    f.X(i, j) = d;
                    f.Y(i, j) = a;
                    break;
                case Hypothesis::H5: f.X(i, j) = b + a - d; break;
                case Hypothesis::H5star:
                    f.X(i, j) = b;
                    f.Y(i, j) = d - a;
                    break;
                case Hypothesis::sublinear: throw ModelError("form_at: sublinear form needs beta_plus");
            }
        }
    return f;
}

enum class Trial { feasible, infeasible, undecided };

struct Problem {
    std::size_t n = 0;
    std::vector<Form> forms;
    bool ratio = false;

    std::vector<DenseMatrix> rows(long double m) const {
        std::vector<DenseMatrix> out;
        out.reserve(forms.size());
        for (const auto& f : forms) {
            DenseMatrix P = f.X;
            for (std::size_t i = 0; i < n; ++i) {
                if (ratio) {
                    for (std::size_t j = 0; j < n; ++j) P(i, j) -= m * f.Y(i, j);
                } else {
                    P(i, i) -= m;
                }
            }
            out.push_back(std::move(P));
        }
        return out;
    }

    Trial trial(long double m, LpResult* keep = nullptr) const {
        LpResult r = lp_max_slack(rows(m), n);
        if (keep) *keep = r;
        if (r.status == LpStatus::undecided) return Trial::undecided;
        return r.status == LpStatus::feasible ? Trial::feasible : Trial::infeasible;
    }

    long double scale() const {
        long double s = 0.0L;
        for (const auto& f : forms) s = std::max({s, f.X.max_abs(), f.Y.max_abs()});
        return s;
    }
};

std::size_t log_mid_index(const std::vector<double>& times) {
    if (times.empty()) return 0;
    const double a = times.front(), b = times.back();
    const double target = a > 0.0 ? std::sqrt(a * b) : 0.5 * (a + b);
    std::size_t best = 0;
    for (std::size_t k = 1; k < times.size(); ++k)
        if (std::fabs(times[k] - target) < std::fabs(times[best] - target)) best = k;
    return best;
}

bool vanishing(const std::vector<double>& margins, const std::vector<double>& times) {
    if (margins.size() < 3) return false;
    const std::size_t last = margins.size() - 1;
    const auto it = std::min_element(margins.begin(), margins.end());
    if (static_cast<std::size_t>(it - margins.begin()) != last && *it < margins[last]) return false;
    const double mid = margins[log_mid_index(times)];
    if (!std::isfinite(mid) || !std::isfinite(margins[last])) return false;
    return margins[last] <= 0.5 * mid;
}

CheckResult run_additive(const MatrixSamples& s, Hypothesis tag, const CheckOptions& opts) {
    CheckResult res;
    res.tag = tag;
    Problem p{s.n, {}, false};
    for (std::size_t k = 0; k < s.times.size(); ++k) p.forms.push_back(form_at(s, tag, k));

    LpResult base;
    const Trial t0 = p.trial(0.0L, &base);
    if (t0 == Trial::undecided) {
        res.note = "LP pivot cap reached at delta=0";
        return res;
    }
    if (t0 == Trial::infeasible) {
        res.status = Status::refuted;
        res.note = "infeasible at delta=0";
        return res;
    }
    long double lo = 0.0L, hi = 1.0L;
    LpResult best = base;
    bool trouble = false;
    for (;;) {
        LpResult r;
        const Trial t = p.trial(hi, &r);
        if (t != Trial::feasible) {
            trouble |= t == Trial::undecided;
            break;
        }
        lo = hi;
        best = r;
        if (hi >= opts.delta_cap) break;
        hi = std::min<long double>(2.0L * hi, opts.delta_cap);
    }
    if (lo < hi) {
        while (hi - lo > opts.rel_tol * hi) {
            const long double mid = 0.5L * (lo + hi);
            LpResult r;
            const Trial t = p.trial(mid, &r);
            if (t == Trial::feasible) {
                lo = mid;
                best = r;
            } else {
                trouble |= t == Trial::undecided;
                hi = mid;
            }
        }
    }
    const long double noise =
        1e-9L + 256.0L * std::numeric_limits<long double>::epsilon() * std::max(1.0L, p.scale()) * s.n;
    if (lo <= noise) {
        res.status = Status::refuted;
        res.note = "feasible only at delta=0";
        return res;
    }
    Witness w;
    w.tag = tag;
    w.v = best.v;
    w.margin = static_cast<double>(lo);
    w.grid = s.grid;
    res.status = Status::certified;
    if (trouble) res.note = "LP pivot cap reached during bisection";
    if (opts.vanishing_margin_test && vanishing(witness_margins(s, tag, w.v), s.times)) {
        res.status = Status::undecided;
        res.note = "margin shrinks toward the end of the grid";
    }
    res.witness = std::move(w);
    return res;
}

CheckResult run_ratio(const MatrixSamples& s, Hypothesis tag, const CheckOptions& opts) {
    CheckResult res;
    res.tag = tag;
    Problem p{s.n, {}, true};
    for (std::size_t k = 0; k < s.times.size(); ++k) p.forms.push_back(form_at(s, tag, k));

    bool coupling = false;
    for (const auto& f : p.forms) coupling |= f.Y.max_abs() > 0.0L;
    if (!coupling) {
        LpResult r;
        const Trial t = p.trial(0.0L, &r);
        if (t == Trial::undecided) {
            res.note = "LP pivot cap reached";
            return res;
        }
        if (t == Trial::infeasible) {
            res.status = Status::refuted;
            res.note = "infeasible for every alpha";
            return res;
        }
        Witness w;
        w.tag = tag;
        w.ratio = true;
        w.at_cap = true;
        w.v = r.v;
        w.margin = opts.alpha_cap;
        w.grid = s.grid;
        res.status = Status::certified;
        res.note = "no coupling";
        res.witness = std::move(w);
        return res;
    }

    const long double floor = 1.0L + opts.alpha_min_excess;
    LpResult best;
    const Trial t0 = p.trial(floor, &best);
    if (t0 == Trial::undecided) {
        res.note = "LP pivot cap reached at the minimal alpha";
        return res;
    }
    if (t0 == Trial::infeasible) {
        res.status = Status::refuted;
        res.note = "no alpha > 1 on this grid";
        return res;
    }
    long double lo = floor, hi = 2.0L;
    bool trouble = false;
    bool at_cap = false;
    for (;;) {
        LpResult r;
        const Trial t = p.trial(hi, &r);
        if (t != Trial::feasible) {
            trouble |= t == Trial::undecided;
            break;
        }
        lo = hi;
        best = r;
        if (hi >= opts.alpha_cap) {
            at_cap = true;
            break;
        }
        hi = std::min<long double>(2.0L * hi, opts.alpha_cap);
    }
    if (!at_cap && lo < hi) {
        while (hi - lo > opts.rel_tol * hi) {
            const long double mid = 0.5L * (lo + hi);
            LpResult r;
            const Trial t = p.trial(mid, &r);
            if (t == Trial::feasible) {
                lo = mid;
                best = r;
            } else {
                trouble |= t == Trial::undecided;
                hi = mid;
            }
        }
    }
    Witness w;
    w.tag = tag;
    w.ratio = true;
    w.at_cap = at_cap;
    w.v = best.v;
    w.margin = static_cast<double>(lo);
    w.grid = s.grid;
    res.status = Status::certified;
    if (at_cap) res.note = "alpha reached its cap";
    if (trouble) res.note = "LP pivot cap reached during bisection";
    if (opts.vanishing_margin_test && !at_cap && vanishing(witness_margins(s, tag, w.v), s.times)) {
        res.status = Status::undecided;
        res.note = "margin shrinks toward the end of the grid";
    }
    res.witness = std::move(w);
    return res;
}

}  // namespace

// ---------------------------------------------------------------------------
// Grids and samples

std::vector<double> GridSpec::times() const {
    if (!(t_max > t_check)) throw ModelError("grid: t_check must be below t_max");
    if (points < 2) throw ModelError("grid: need at least two points");
    return t_check > 0.0 ? geometric_grid(t_check, t_max, points) : uniform_grid(t_check, t_max, points);
}

GridSpec GridSpec::refined(std::size_t factor) const {
    GridSpec g = *this;
    g.points = (points - 1) * std::max<std::size_t>(1, factor) + 1;
    return g;
}

nlohmann::json to_json(const GridSpec& g) {
    return {{"t_check", g.t_check},
            {"t_max", g.t_max},
            {"points", g.points},
            {"spacing", g.t_check > 0.0 ? "geometric" : "uniform"}};
}

MatrixSamples sample_matrices(const SystemSpec& sys, const GridSpec& grid) {
    MatrixSamples s;
    s.n = sys.n;
    s.grid = grid;
    s.times = grid.times();
    if (s.times.front() < sys.domain_start)
        throw DomainError("sample_matrices: grid starts before the system's domain");
    const auto env = lower_envelope(sys);
    std::vector<CoefficientFn> beta;
    for (const auto& e : env) beta.push_back(e.beta);
    for (double t : s.times) {
        DenseMatrix D(sys.n, sys.n), A(sys.n, sys.n), B(sys.n, sys.n);
        for (std::size_t i = 0; i < sys.n; ++i) {
            D(i, i) = sys.d[i].eval_ld(t);
            B(i, i) = beta[i].eval_ld(t);
            for (std::size_t j = 0; j < sys.n; ++j) A(i, j) = sys.coupling_ld(i, j, t);
        }
        s.D.push_back(std::move(D));
        s.A.push_back(std::move(A));
        s.B.push_back(std::move(B));
    }
    return s;
}

MatrixSamples sample_matrices(const SystemSpec& sys, double t_check, double t_max, std::size_t points) {
    return sample_matrices(sys, GridSpec{t_check, t_max, points});
}

std::string to_string(Hypothesis h) {
    switch (h) {
        case Hypothesis::H2: return "H2";
        case Hypothesis::H2star: return "H2*";
        case Hypothesis::H5: return "H5";
        case Hypothesis::H5star: return "H5*";
        case Hypothesis::sublinear: return "sublinear";
    }
    return "?";
}

std::string to_string(Status s) {
    switch (s) {
        case Status::certified: return "certified";
        case Status::refuted: return "refuted-on-grid";
        case Status::undecided: return "undecided";
        case Status::not_applicable: return "not-applicable";
    }
    return "?";
}

std::string to_string(Verdict v) {
    switch (v) {
        case Verdict::permanent: return "PERMANENT";
        case Verdict::uniformly_persistent: return "UNIFORMLY_PERSISTENT";
        case Verdict::no_verdict: return "NO_VERDICT";
    }
    return "?";
}

// ---------------------------------------------------------------------------
// Checks

CheckResult check_H2(const MatrixSamples& s, const CheckOptions& opts) { return run_additive(s, Hypothesis::H2, opts); }
CheckResult check_H5(const MatrixSamples& s, const CheckOptions& opts) { return run_additive(s, Hypothesis::H5, opts); }
CheckResult check_H2star(const MatrixSamples& s, const CheckOptions& opts) {
    return run_ratio(s, Hypothesis::H2star, opts);
}
CheckResult check_H5star(const MatrixSamples& s, const CheckOptions& opts) {
    return run_ratio(s, Hypothesis::H5star, opts);
}

CheckResult check_sublinear_dissipative(const SystemSpec& sys, const std::vector<CoefficientFn>& beta_plus,
                                        const std::vector<double>& h_plus_gain, const GridSpec& grid,
                                        const CheckOptions&) {
    CheckResult res;
    res.tag = Hypothesis::sublinear;
    if (beta_plus.size() != sys.n || h_plus_gain.size() != sys.n)
        throw ModelError("check_sublinear_dissipative: need one upper envelope per component");
    for (std::size_t i = 0; i < sys.n; ++i) {
        if (!(h_plus_gain[i] < 1.0)) {
            res.status = Status::not_applicable;
            res.note = "gain of h+ is not below 1 for component " + std::to_string(i + 1);
            return res;
        }
    }
    const auto times = grid.times();
    std::vector<DenseMatrix> rows;
    for (double t : times) {
        DenseMatrix P(sys.n, sys.n);
        for (std::size_t i = 0; i < sys.n; ++i) {
            for (std::size_t j = 0; j < sys.n; ++j) P(i, j) = -sys.coupling_ld(i, j, t);
            P(i, i) += sys.d[i].eval_ld(t) - beta_plus[i].eval_ld(t);
        }
        rows.push_back(std::move(P));
    }
    const LpResult r = lp_max_slack(rows, sys.n);
    if (r.status == LpStatus::undecided) {
        res.note = "LP pivot cap reached";
        return res;
    }
    if (r.status == LpStatus::infeasible) {
        res.status = Status::refuted;
        res.note = "no positive u on this grid";
        return res;
    }
    Witness w;
    w.tag = Hypothesis::sublinear;
    w.v = r.v;
    w.margin = std::max(0.0, r.slack);
    w.grid = grid;
    res.status = Status::certified;
    res.witness = std::move(w);
    return res;
}

std::vector<double> witness_margins(const MatrixSamples& s, Hypothesis tag, const std::vector<double>& v) {
    if (v.size() != s.n) throw ModelError("witness_margins: v has wrong length");
    std::vector<double> out;
    out.reserve(s.times.size());
    const bool ratio = is_ratio(tag);
    for (std::size_t k = 0; k < s.times.size(); ++k) {
        const Form f = form_at(s, tag, k);
        const auto xv = f.X.apply(v);
        long double m = std::numeric_limits<long double>::infinity();
        if (!ratio) {
            for (std::size_t i = 0; i < s.n; ++i) m = std::min(m, xv[i] / static_cast<long double>(v[i]));
        } else {
            const auto yv = f.Y.apply(v);
            for (std::size_t i = 0; i < s.n; ++i) {
                if (yv[i] > 0.0L) {
                    m = std::min(m, xv[i] / yv[i] - 1.0L);
                } else if (xv[i] < 0.0L) {
                    m = -std::numeric_limits<long double>::infinity();
                }
            }
        }
        out.push_back(static_cast<double>(m));
    }
    return out;
}

void reverify(const SystemSpec& sys, Witness& w, std::size_t factor) {
    if (w.tag == Hypothesis::sublinear) return;
    const MatrixSamples fine = sample_matrices(sys, w.grid.refined(factor));
    const auto m = witness_margins(fine, w.tag, w.v);
    const double worst = m.empty() ? kNaN : *std::min_element(m.begin(), m.end());
    w.fine_margin = worst;
    const double stored = w.ratio ? w.margin - 1.0 : w.margin;
    w.under_resolved = !(worst >= 0.5 * stored);
}

// ---------------------------------------------------------------------------
// Boundedness flags

BoundFlag bound_flag(const std::string& name, const CoefficientFn& f, const std::vector<double>& grid) {
    BoundFlag b;
    b.name = name;
    std::vector<double> vals;
    vals.reserve(grid.size());
    for (double t : grid) vals.push_back(f.eval(t));
    b.inf_hat = *std::min_element(vals.begin(), vals.end());
    b.sup_hat = *std::max_element(vals.begin(), vals.end());
    if (auto e = declared_enclosure(f)) {
        b.declared = true;
        b.bounded_above = e->bounded_above();
        b.positive_lower = e->lo > 0.0;
        return b;
    }
    const std::size_t half = vals.size() / 2;
    const auto lower_max = *std::max_element(vals.begin(), vals.begin() + static_cast<long>(half));
    const auto upper_max = *std::max_element(vals.begin() + static_cast<long>(half), vals.end());
    const auto lower_min = *std::min_element(vals.begin(), vals.begin() + static_cast<long>(half));
    const auto upper_min = *std::min_element(vals.begin() + static_cast<long>(half), vals.end());
    b.bounded_above = upper_max <= std::max(1.5 * lower_max, lower_max + 1e-12);
    b.positive_lower = upper_min > 0.0 && upper_min >= 0.5 * lower_min;
    return b;
}

// ---------------------------------------------------------------------------
// Verdict

VerdictResult permanence_verdict(const VerdictInputs& in) {
    VerdictResult out;
    std::vector<std::string> blocking;
    auto block = [&](const std::string& s) {
        if (std::find(blocking.begin(), blocking.end(), s) == blocking.end()) blocking.push_back(s);
    };
    const bool h2 = in.h2 == Status::certified;
    const bool h2s = in.h2star == Status::certified;
    const bool h5 = in.h5 == Status::certified;
    const bool h5s = in.h5star == Status::certified;
    const bool cond_i = !in.linear_delay || in.a_bounded;
    const std::string floor_form = "min_{t>=T} x_j(t) >= m v_j";

    auto fire = [&](Verdict v, std::string theorem, std::string branch, const std::optional<std::vector<double>>& fv) {
        out.verdict = v;
        out.theorem = std::move(theorem);
        out.branch = std::move(branch);
        out.floor_v = fv;
        out.floor_form = floor_form;
        return out;
    };

    auto need_h4 = [&] {
        if (in.h4) return;
        if (in.h4_reasons.empty()) block("(H4) fails");
        for (const auto& r : in.h4_reasons) block("(H4) fails: " + r);
    };
    auto need_f_bounded = [&] {
        if (in.f_bounded) return;
        block(in.beta_bounded_above ? "f unbounded" : "β unbounded");
    };

    // Corollary (no delays in the linear part), part (a).
    if (!in.linear_delay) {
        if (in.h4 && h5s && h2 && in.f_bounded)
            return fire(Verdict::permanent, "corollary (no delays in linear part)", "(a) H2 + H5* + f bounded",
                        in.v_h5star);
        need_h4();
        if (!h5s) block("(H5*) not certified");
        if (!h2) block("(H2) not certified");
        need_f_bounded();
    }

    // Permanence criterion.
    {
        const bool stab = h2 || (h2s && in.d_liminf_positive);
        const bool h5_branch = h5 && in.beta_bounded_above;
        const bool h5s_branch = h5s && in.beta_liminf_positive;
        if (in.h4 && cond_i && stab && (h5_branch || h5s_branch) && in.f_bounded)
            return fire(Verdict::permanent, "permanence criterion",
                        h5_branch ? "(H5) with bounded β" : "(H5*) with β bounded away from 0",
                        h5_branch ? in.v_h5 : in.v_h5star);
        need_h4();
        if (!cond_i) block("a_ij unbounded with delays in the linear part");
        if (!stab) block(h2s ? "(H2*) needs liminf d_i > 0" : "(H2) not certified");
        if (!h5_branch && !h5s_branch) {
            if (h5 && !in.beta_bounded_above) block("β unbounded");
            if (!h5) block("(H5) not certified");
            if (h5s && !in.beta_liminf_positive) block("liminf β = 0");
            if (!h5s) block("(H5*) not certified");
        }
        need_f_bounded();
    }

    if (in.harvesting) {
        block("harvesting term present");
    } else {
        // Uniform persistence criterion.
        if (in.h4 && h5s && cond_i && in.beta_liminf_positive && in.h_minus_liminf_positive)
            return fire(Verdict::uniformly_persistent, "uniform persistence criterion", "(H5*) with liminf β > 0",
                        in.v_h5star);
        // Corollary (no delays in the linear part), part (b).
        if (!in.linear_delay && in.h4 && h5s && in.h_minus_liminf_positive)
            return fire(Verdict::uniformly_persistent, "corollary (no delays in linear part)",
                        "(b) H5* + liminf h^- > 0", in.v_h5star);
        need_h4();
        if (!h5s) block("(H5*) not certified");
        if (!cond_i) block("a_ij unbounded with delays in the linear part");
        if (!in.beta_liminf_positive) block("liminf β = 0");
        if (!in.h_minus_liminf_positive) block("liminf h^- at infinity = 0");
    }

    out.verdict = Verdict::no_verdict;
    out.blocking = std::move(blocking);
    return out;
}

// ---------------------------------------------------------------------------
// Full report

namespace {

bool shape_bounded(const BirthShape& s, const std::vector<double>& grid, std::vector<BoundFlag>& flags,
                   const std::string& name) {
    flags.push_back(bound_flag(name, s.c, grid));
    return flags.back().positive_lower;
}

}  // namespace

HypothesisReport check_system(const SystemSpec& sys, const ReportOptions& opts) {
    HypothesisReport rep;
    rep.system = sys.name;
    rep.grid = opts.grid;
    const MatrixSamples s = sample_matrices(sys, opts.grid);
    rep.h2 = check_H2(s, opts.check);
    rep.h2star = check_H2star(s, opts.check);
    rep.h5 = check_H5(s, opts.check);
    rep.h5star = check_H5star(s, opts.check);
    if (opts.reverify) {
        for (CheckResult* r : {&rep.h2, &rep.h2star, &rep.h5, &rep.h5star}) {
            if (r->status != Status::certified || !r->witness) continue;
            reverify(sys, *r->witness, opts.reverify_factor);
            if (r->witness->under_resolved)
                rep.warnings.push_back(to_string(r->tag) + ": witness margin drops on the refined grid");
        }
    }

    const auto& grid = s.times;
    const auto env = lower_envelope(sys);
    VerdictInputs& in = rep.inputs;
    in.h2 = rep.h2.status;
    in.h2star = rep.h2star.status;
    in.h5 = rep.h5.status;
    in.h5star = rep.h5star.status;
    if (rep.h5.witness) in.v_h5 = rep.h5.witness->v;
    if (rep.h5star.witness) in.v_h5star = rep.h5star.witness->v;
    in.linear_delay = sys.linear_part_has_delay();

    in.h4 = true;
    in.h_minus_liminf_positive = true;
    for (std::size_t i = 0; i < sys.n; ++i) {
        EnvelopeSummary es;
        es.component = i;
        es.valid = env[i].valid;
        es.reason = env[i].reason;
        es.h_minus = env[i].h_minus.describe();
        es.monotone_cap = env[i].monotone_cap;
        es.limit_at_infinity = env[i].valid ? env[i].h_minus.limit_at_infinity() : 0.0;
        if (!env[i].valid) {
            in.h4 = false;
            if (std::find(in.h4_reasons.begin(), in.h4_reasons.end(), env[i].reason) == in.h4_reasons.end())
                in.h4_reasons.push_back(env[i].reason);
        }
        if (!(es.limit_at_infinity > 0.0)) in.h_minus_liminf_positive = false;
        rep.envelopes.push_back(std::move(es));
    }

    auto record = [&](BoundFlag f) {
        if (!f.declared) rep.warnings.push_back(f.name + ": boundedness inferred from samples");
        rep.flags.push_back(f);
        return f;
    };

    in.a_bounded = true;
    for (std::size_t i = 0; i < sys.n; ++i)
        for (std::size_t j = 0; j < sys.n; ++j)
            for (std::size_t k = 0; k < sys.L[i][j].size(); ++k) {
                std::string name = "a[" + std::to_string(i + 1) + "][" + std::to_string(j + 1) + "]";
                if (sys.L[i][j].size() > 1) name += "#" + std::to_string(k + 1);
                if (!record(bound_flag(name, sys.L[i][j][k].a, grid)).bounded_above) in.a_bounded = false;
            }

    in.d_liminf_positive = true;
    for (std::size_t i = 0; i < sys.n; ++i)
        if (!record(bound_flag("d[" + std::to_string(i + 1) + "]", sys.d[i], grid)).positive_lower)
            in.d_liminf_positive = false;

    in.beta_bounded_above = true;
    in.beta_liminf_positive = true;
    for (std::size_t i = 0; i < sys.n; ++i) {
        const BoundFlag b = record(bound_flag("beta[" + std::to_string(i + 1) + "]", env[i].beta, grid));
        in.beta_bounded_above &= b.bounded_above;
        in.beta_liminf_positive &= b.positive_lower;
    }

    in.f_bounded = in.beta_bounded_above;
    for (std::size_t i = 0; i < sys.n; ++i) {
        for (std::size_t k = 0; k < sys.f[i].terms.size(); ++k) {
            const std::string name = "c[" + std::to_string(i + 1) + "][" + std::to_string(k + 1) + "]";
            const bool ok = std::visit(
                [&](const auto& b) {
                    using T = std::decay_t<decltype(b)>;
                    if constexpr (std::is_same_v<T, KernelBirth> || std::is_same_v<T, IntegralBirth>) {
                        const std::size_t before = rep.flags.size();
                        const bool r = shape_bounded(b.shape, grid, rep.flags, name);
                        if (!rep.flags[before].declared)
                            rep.warnings.push_back(name + ": boundedness inferred from samples");
                        return r;
                    } else {
                        return b.h.bounded();
                    }
                },
                sys.f[i].terms[k]);
            in.f_bounded &= ok;
        }
    }
    for (const auto& k : sys.K) in.harvesting |= k.has_value();

    const std::size_t half = grid.size() / 2;
    for (std::size_t i = 0; i < sys.n; ++i) {
        RatioDiagnostic rd;
        rd.component = i;
        double r1 = std::numeric_limits<double>::infinity(), r2 = r1;
        for (std::size_t k = half; k < grid.size(); ++k) {
            long double sa = 0.0L;
            for (std::size_t j = 0; j < sys.n; ++j) sa += s.A[k](i, j);
            const long double d = s.D[k](i, i), b = s.B[k](i, i);
            if (sa > 0.0L) r1 = std::min(r1, static_cast<double>(d / sa));
            if (d - sa > 0.0L) r2 = std::min(r2, static_cast<double>(b / (d - sa)));
        }
        rd.d_over_a = r1;
        rd.beta_over_margin = r2;
        rep.ratios.push_back(rd);
    }

    rep.verdict = permanence_verdict(in);
    return rep;
}

// ---------------------------------------------------------------------------
// Serialization

nlohmann::json to_json(const Witness& w) {
    nlohmann::json j{{"hypothesis", to_string(w.tag)},
                     {"v", w.v},
                     {w.ratio ? "alpha" : "delta", num(w.margin)},
                     {"grid", to_json(w.grid)}};
    if (w.at_cap) j["alpha_at_cap"] = true;
    if (w.fine_margin) {
        j["fine_margin"] = num(*w.fine_margin);
        j["under_resolved"] = w.under_resolved;
    }
    return j;
}

nlohmann::json to_json(const CheckResult& r) {
    nlohmann::json j{{"hypothesis", to_string(r.tag)}, {"status", to_string(r.status)}};
    if (r.witness) j["witness"] = to_json(*r.witness);
    if (!r.note.empty()) j["note"] = r.note;
    return j;
}

nlohmann::json to_json(const HypothesisReport& r) {
    nlohmann::json j;
    j["system"] = r.system;
    j["grid"] = to_json(r.grid);
    j["checks"] = {to_json(r.h2), to_json(r.h2star), to_json(r.h5), to_json(r.h5star)};
    auto& env = j["envelopes"] = nlohmann::json::array();
    for (const auto& e : r.envelopes) {
        nlohmann::json x{{"component", e.component + 1},
                         {"valid", e.valid},
                         {"h_minus", e.h_minus},
                         {"monotone_cap", num(e.monotone_cap)},
                         {"limit_at_infinity", num(e.limit_at_infinity)}};
        if (!e.reason.empty()) x["reason"] = e.reason;
        env.push_back(std::move(x));
    }
    auto& flags = j["bounds"] = nlohmann::json::array();
    for (const auto& f : r.flags)
        flags.push_back({{"name", f.name},
                         {"source", f.declared ? "declared" : "sampled"},
                         {"bounded_above", f.bounded_above},
                         {"positive_lower_bound", f.positive_lower},
                         {"inf_hat", num(f.inf_hat)},
                         {"sup_hat", num(f.sup_hat)}});
    auto& ratios = j["ratio_diagnostics"] = nlohmann::json::array();
    for (const auto& d : r.ratios)
        ratios.push_back({{"component", d.component + 1},
                          {"d_over_sum_a", num(d.d_over_a)},
                          {"beta_over_d_minus_sum_a", num(d.beta_over_margin)}});
    j["linear_part_has_delay"] = r.inputs.linear_delay;
    j["h4"] = r.inputs.h4;
    j["f_bounded"] = r.inputs.f_bounded;
    j["warnings"] = r.warnings;
    nlohmann::json v{{"verdict", to_string(r.verdict.verdict)}};
    if (r.verdict.verdict != Verdict::no_verdict) {
        v["theorem"] = r.verdict.theorem;
        v["branch"] = r.verdict.branch;
        v["floor"] = r.verdict.floor_form;
        if (r.verdict.floor_v) v["floor_v"] = *r.verdict.floor_v;
    } else {
        v["blocking"] = r.verdict.blocking;
    }
    j["verdict"] = std::move(v);
    return j;
}

std::string to_text(const HypothesisReport& r) {
    std::ostringstream os;
    os << "system: " << r.system << "\n";
    os << "grid: [" << fmt(r.grid.t_check) << ", " << fmt(r.grid.t_max) << "], " << r.grid.points << " points\n";
    for (const CheckResult* c : {&r.h2, &r.h2star, &r.h5, &r.h5star}) {
        os << "  " << to_string(c->tag) << ": " << to_string(c->status);
        if (c->witness) {
            os << "  v=" << vec_text(c->witness->v) << (c->witness->ratio ? " alpha=" : " delta=")
               << fmt(c->witness->margin);
            if (c->witness->fine_margin) os << " fine=" << fmt(*c->witness->fine_margin);
        }
        if (!c->note.empty()) os << "  [" << c->note << "]";
        os << "\n";
    }
    for (const auto& e : r.envelopes) {
        os << "  h-[" << e.component + 1 << "] = " << e.h_minus;
        if (!e.valid) os << "  (" << e.reason << ")";
        os << "\n";
    }
    for (const auto& f : r.flags)
        os << "  " << f.name << ": " << (f.bounded_above ? "bounded" : "unbounded")
           << (f.positive_lower ? ", inf > 0" : "") << " (" << (f.declared ? "declared" : "sampled") << ")\n";
    for (const auto& w : r.warnings) os << "  warning: " << w << "\n";
    os << "verdict: " << to_string(r.verdict.verdict);
    if (r.verdict.verdict != Verdict::no_verdict) {
        os << " via " << r.verdict.theorem << ", " << r.verdict.branch << "\n";
        os << "  floor: " << r.verdict.floor_form;
        if (r.verdict.floor_v) os << " with v=" << vec_text(*r.verdict.floor_v);
        os << "\n";
    } else {
        os << "\n";
        for (const auto& b : r.verdict.blocking) os << "  blocked: " << b << "\n";
    }
    return os.str();
}

}  // namespace permadde
