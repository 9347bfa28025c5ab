#include "permadde/system.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <sstream>

#include "permadde/error.hpp"
#include "permadde/quadrature.hpp"

namespace permadde {

namespace {

// Fixed-node rule shared by kernel integrals and distributed birth terms.
constexpr std::size_t kPanels = 8;
constexpr std::size_t kOrder = 4;

double read_nonnegative(const HistoryView& hist, std::size_t i, double s, double scale) {
    const double x = hist.value(i, s);
    if (x < 0.0) {
        std::ostringstream os;
        os << "negative history value " << x << " for component " << i + 1 << " at t=" << s;
        throw IntegrationError(IntegrationError::Kind::negative_history, os.str(), s, i);
    }
    return scale * x;
}

double reference_time(const CoefficientFn& f) { return std::max(0.0, f.domain_start()); }

CoefficientFn scale_coefficient(const CoefficientFn& f, double s) {
    if (s == 1.0) return f;
    CoefficientFn out = s * f;
    if (!f.constant_value()) {
        if (auto b = f.declared_bounds()) out = out.with_bounds(s * b->lo, s * b->hi, b->from);
    }
    return out;
}

std::string where(std::size_t i, std::size_t j) {
    std::ostringstream os;
    os << "L[" << i + 1 << "][" << j + 1 << "]";
    return os.str();
}

}  // namespace

// ---------------------------------------------------------------------------
// FunctionHistory

FunctionHistory::FunctionHistory(std::vector<CoefficientFn> components) : components_(std::move(components)) {
    for (auto& c : components_) c = c.with_domain(-kInf);
}

double FunctionHistory::value(std::size_t component, double t) const {
    if (component >= components_.size()) throw std::out_of_range("FunctionHistory: component index");
    return components_[component].eval(t);
}

double FunctionHistory::window_min(std::size_t component, double t1, double t2) const {
    if (component >= components_.size()) throw std::out_of_range("FunctionHistory: component index");
    const CoefficientFn& f = components_[component];
    return sampled_minimum([&](double t) { return f.eval(t); }, t1, t2);
}

// ---------------------------------------------------------------------------
// DelayKernel

DelayKernel::DelayKernel() : span_(CoefficientFn::constant(0.0)), density_(CoefficientFn::constant(0.0)) {}

DelayKernel DelayKernel::instant() { return DelayKernel{}; }

DelayKernel DelayKernel::lag_point(CoefficientFn lag) {
    DelayKernel k;
    k.kind_ = Kind::lag;
    k.span_ = std::move(lag);
    return k;
}

DelayKernel DelayKernel::density(CoefficientFn k, CoefficientFn support) {
    DelayKernel out;
    out.kind_ = Kind::density;
    out.density_ = std::move(k);
    out.span_ = std::move(support);
    const double t0 = reference_time(out.span_);
    const double m = out.mass(t0);
    if (!(std::fabs(m - 1.0) <= 1e-10)) {
        std::ostringstream os;
        os.precision(12);
        os << "density kernel is not normalized: mass " << m << " at t=" << t0;
        throw ModelError(os.str());
    }
    return out;
}

DelayKernel DelayKernel::uniform(CoefficientFn width) {
    DelayKernel k;
    k.kind_ = Kind::uniform;
    k.span_ = std::move(width);
    return k;
}

bool DelayKernel::is_instant() const {
    if (kind_ == Kind::instant) return true;
    const auto c = span_.constant_value();
    return c && *c == 0.0;
}

double DelayKernel::max_reach(double t1, double t2) const {
    if (kind_ == Kind::instant) return 0.0;
    if (auto c = span_.constant_value()) return *c;
    const double lo = std::max(t1, span_.domain_start());
    if (!(t2 > lo)) return span_.eval(lo);
    return sampled_bounds(span_, lo, t2, 257).sup_hat;
}

double DelayKernel::mass(double t) const {
    switch (kind_) {
        case Kind::instant:
        case Kind::lag:
        case Kind::uniform: return 1.0;
        case Kind::density: {
            const double support = span_.eval(t);
            // Finer nodes than the evaluation rule so the check does not share its error.
            return quad::composite([&](double u) { return density_.eval(u); }, 0.0, support, 64, 8);
        }
    }
    return 1.0;
}

double detail::kernel_quadrature(const DelayKernel& k, double t, const std::function<double(double)>& g) {
    const double width = k.span().eval(t);
    if (!(width > 0.0)) return g(t);
    if (k.kind() == DelayKernel::Kind::uniform)
        return quad::composite([&](double u) { return g(t - u); }, 0.0, width, kPanels, kOrder) / width;
    const CoefficientFn& dens = k.density_fn();
    return quad::composite([&](double u) { return dens.eval(u) * g(t - u); }, 0.0, width, kPanels, kOrder);
}

// ---------------------------------------------------------------------------
// Birth shapes

BirthShape BirthShape::nicholson(CoefficientFn c) {
    BirthShape s;
    s.kind = Kind::nicholson;
    s.c = std::move(c);
    return s;
}

BirthShape BirthShape::mackey_glass(CoefficientFn c, double alpha) {
    if (!(alpha >= 1.0)) throw ModelError("mackey-glass birth: alpha must be >= 1");
    BirthShape s;
    s.kind = Kind::mackey_glass;
    s.c = std::move(c);
    s.alpha = alpha;
    return s;
}

double BirthShape::eval(double t, double x) const {
    const double cv = c.eval(t);
    if (kind == Kind::nicholson) return x * std::exp(-cv * x);
    return x / (1.0 + cv * std::pow(x, alpha));
}

ScalarFn BirthShape::envelope() const {
    const auto b = c.declared_bounds();
    if (!b || !b->bounded_above())
        throw ModelError("envelope needs a declared upper bound on the shape coefficient c");
    if (!(b->hi > 0.0)) throw ModelError("declared upper bound on c must be positive");
    if (kind == Kind::nicholson) return ScalarFn::nicholson(b->hi);
    return ScalarFn::mackey_glass(b->hi, alpha);
}

// ---------------------------------------------------------------------------
// SystemSpec

SystemSpec SystemSpec::empty(std::size_t n, double tau, std::string name) {
    SystemSpec s;
    s.name = std::move(name);
    s.n = n;
    s.tau = tau;
    s.d.assign(n, CoefficientFn::constant(1.0));
    s.L.assign(n, std::vector<std::vector<LinearTerm>>(n));
    s.f.assign(n, Nonlinearity{});
    s.K.assign(n, std::nullopt);
    return s;
}

namespace {

void check_nonnegative(const CoefficientFn& f, const std::vector<double>& grid, const std::string& what) {
    for (double t : grid) {
        if (t < f.domain_start()) continue;
        if (f.eval(t) < 0.0) {
            std::ostringstream os;
            os << what << " is negative at t=" << t;
            throw ModelError(os.str());
        }
    }
}

void check_positive(const CoefficientFn& f, const std::vector<double>& grid, const std::string& what) {
    for (double t : grid) {
        if (t < f.domain_start()) continue;
        if (!(f.eval(t) > 0.0)) {
            std::ostringstream os;
            os << what << " is not positive at t=" << t;
            throw ModelError(os.str());
        }
    }
}

void check_declared(const CoefficientFn& f, double t1, double t2) {
    if (!f.declared_bounds() || f.constant_value()) return;
    const double lo = std::max(t1, f.domain_start());
    if (t2 > lo) sampled_bounds(f, lo, t2, 201);
}

void check_span(const CoefficientFn& f, double tau, const std::vector<double>& grid, const std::string& what) {
    for (double t : grid) {
        if (t < f.domain_start()) continue;
        const double v = f.eval(t);
        if (v < 0.0 || v > tau * (1.0 + 1e-12)) {
            std::ostringstream os;
            os << what << " = " << v << " at t=" << t << " is outside [0, tau=" << tau << "]";
            throw ModelError(os.str());
        }
    }
}

void check_kernel(const DelayKernel& k, double tau, const std::vector<double>& grid, const std::string& what) {
    if (k.kind() == DelayKernel::Kind::instant) return;
    check_span(k.span(), tau, grid, what + " delay");
    check_declared(k.span(), grid.front(), grid.back());
    if (k.kind() == DelayKernel::Kind::density) {
        for (double t : grid) {
            if (t < k.span().domain_start()) continue;
            const double m = k.mass(t);
            if (!(std::fabs(m - 1.0) <= 1e-8)) {
                std::ostringstream os;
                os << what << " kernel mass " << m << " at t=" << t << " differs from 1";
                throw ModelError(os.str());
            }
        }
    }
}

void check_shape(const BirthShape& s, const std::vector<double>& grid, const std::string& what) {
    check_positive(s.c, grid, what + " shape coefficient c");
    check_declared(s.c, grid.front(), grid.back());
    if (s.kind == BirthShape::Kind::mackey_glass && !(s.alpha >= 1.0))
        throw ModelError(what + ": mackey-glass alpha must be >= 1");
}

}  // namespace

void SystemSpec::validate(double horizon) const {
    if (n == 0) throw ModelError("system dimension must be positive");
    if (!(tau >= 0.0) || !std::isfinite(tau)) throw ModelError("tau must be finite and nonnegative");
    if (d.size() != n) throw ModelError("d has wrong length");
    if (L.size() != n) throw ModelError("L has wrong number of rows");
    for (const auto& row : L)
        if (row.size() != n) throw ModelError("L has a row of wrong length");
    if (f.size() != n) throw ModelError("f has wrong length");
    if (K.size() != n) throw ModelError("K has wrong length");

    const double t1 = std::max(0.0, domain_start);
    const auto grid = uniform_grid(t1, t1 + std::max(horizon, 1.0), 201);

    for (std::size_t i = 0; i < n; ++i) {
        const std::string di = "d[" + std::to_string(i + 1) + "]";
        check_positive(d[i], grid, di);
        check_declared(d[i], grid.front(), grid.back());
        for (std::size_t j = 0; j < n; ++j) {
            for (const auto& term : L[i][j]) {
                check_nonnegative(term.a, grid, where(i, j) + " coefficient");
                check_declared(term.a, grid.front(), grid.back());
                check_kernel(term.kernel, tau, grid, where(i, j));
            }
        }
        const std::string fi = "f[" + std::to_string(i + 1) + "]";
        if (!(f[i].scale > 0.0)) throw ModelError(fi + ": scale must be positive");
        for (const auto& term : f[i].terms) {
            std::visit(
                [&](const auto& b) {
                    using T = std::decay_t<decltype(b)>;
                    if constexpr (std::is_same_v<T, KernelBirth>) {
                        check_nonnegative(b.coef, grid, fi + " coefficient");
                        check_declared(b.coef, grid.front(), grid.back());
                        check_kernel(b.kernel, tau, grid, fi);
                        check_shape(b.shape, grid, fi);
                    } else if constexpr (std::is_same_v<T, IntegralBirth>) {
                        check_nonnegative(b.b, grid, fi + " b");
                        check_nonnegative(b.lambda, grid, fi + " lambda");
                        check_declared(b.b, grid.front(), grid.back());
                        check_span(b.window, tau, grid, fi + " window");
                        check_shape(b.shape, grid, fi);
                    } else if constexpr (std::is_same_v<T, CustomBirth>) {
                        check_nonnegative(b.coef, grid, fi + " coefficient");
                        check_declared(b.coef, grid.front(), grid.back());
                        check_kernel(b.kernel, tau, grid, fi);
                    } else {
                        check_nonnegative(b.coef, grid, fi + " coefficient");
                        if (b.window < 0.0 || b.window > tau * (1.0 + 1e-12))
                            throw ModelError(fi + ": window outside [0, tau]");
                    }
                },
                term);
        }
        if (K[i]) {
            const std::string ki = "K[" + std::to_string(i + 1) + "]";
            const auto b = K[i]->kappa.declared_bounds();
            if (!b || !b->bounded_above()) throw ModelError(ki + ": kappa needs a declared finite upper bound");
            check_nonnegative(K[i]->kappa, grid, ki + " kappa");
            check_declared(K[i]->kappa, grid.front(), grid.back());
            if (K[i]->g.eval(0.0) != 0.0) throw ModelError(ki + ": g(0) must be 0");
            if (K[i]->g.right_derivative_at_zero() != 0.0) throw ModelError(ki + ": g must have right derivative 0 at 0");
        }
    }
}

double SystemSpec::coupling(std::size_t i, std::size_t j, double t) const {
    return static_cast<double>(coupling_ld(i, j, t));
}

long double SystemSpec::coupling_ld(std::size_t i, std::size_t j, double t) const {
    long double acc = 0.0L;
    for (const auto& term : L[i][j]) acc += term.a.eval_ld(t);
    return acc;
}

bool SystemSpec::linear_part_has_delay() const {
    for (const auto& row : L)
        for (const auto& cell : row)
            for (const auto& term : cell)
                if (!term.kernel.is_instant()) return true;
    return false;
}

// ---------------------------------------------------------------------------
// Right-hand side

double linear_term_eval(const LinearTerm& term, double t, const HistoryView& hist, std::size_t j) {
    const double a = term.a.eval(t);
    if (a == 0.0) return 0.0;
    return a * term.kernel.integrate(t, [&](double s) { return hist.value(j, s); });
}

double nonlinearity_eval(const Nonlinearity& f, double t, const HistoryView& hist, std::size_t i) {
    if (f.terms.empty()) return 0.0;
    const double sc = f.scale;
    auto x = [&](double s) { return read_nonnegative(hist, i, s, sc); };
    long double acc = 0.0L;
    for (const auto& term : f.terms) {
        std::visit(
            [&](const auto& b) {
                using T = std::decay_t<decltype(b)>;
                if constexpr (std::is_same_v<T, KernelBirth>) {
                    const double coef = b.coef.eval(t);
                    if (coef == 0.0) return;
                    acc += coef * b.kernel.integrate(t, [&](double s) { return b.shape.eval(t, x(s)); });
                } else if constexpr (std::is_same_v<T, IntegralBirth>) {
                    const double coef = b.b.eval(t);
                    const double w = b.window.eval(t);
                    if (coef == 0.0 || !(w > 0.0)) return;
                    const bool at_s = b.inner_time == IntegralBirth::InnerTime::s;
                    acc += coef * quad::composite(
                                      [&](double s) { return b.lambda.eval(s) * b.shape.eval(at_s ? s : t, x(s)); },
                                      t - w, t, kPanels, kOrder);
                } else if constexpr (std::is_same_v<T, CustomBirth>) {
                    const double coef = b.coef.eval(t);
                    if (coef == 0.0) return;
                    acc += coef * b.kernel.integrate(t, [&](double s) { return b.h.eval(x(s)); });
                } else {
                    const double coef = b.coef.eval(t);
                    if (coef == 0.0) return;
                    const double lo = hist.window_min(i, t - b.window, t);
                    if (lo < 0.0) {
                        std::ostringstream os;
                        os << "negative history minimum " << lo << " for component " << i + 1 << " near t=" << t;
                        throw IntegrationError(IntegrationError::Kind::negative_history, os.str(), t, i);
                    }
                    acc += coef * b.h.eval(sc * lo);
                }
            },
            term);
    }
    return static_cast<double>(acc / sc);
}

void rhs_eval(const SystemSpec& sys, double t, const HistoryView& hist, std::span<double> out) {
    for (std::size_t i = 0; i < sys.n; ++i) {
        const double xi = hist.value(i, t);
        long double acc = -static_cast<long double>(sys.d[i].eval_ld(t)) * xi;
        for (std::size_t j = 0; j < sys.n; ++j)
            for (const auto& term : sys.L[i][j]) acc += linear_term_eval(term, t, hist, j);
        acc += nonlinearity_eval(sys.f[i], t, hist, i);
        if (sys.K[i]) acc -= sys.K[i]->kappa.eval(t) * sys.K[i]->g.eval(xi);
        out[i] = static_cast<double>(acc);
    }
}

std::vector<double> rhs_eval(const SystemSpec& sys, double t, const HistoryView& hist) {
    std::vector<double> out(sys.n);
    rhs_eval(sys, t, hist, out);
    return out;
}

// ---------------------------------------------------------------------------
// Envelopes

namespace {

struct TermEnvelope {
    CoefficientFn beta;
    ScalarFn h;
};

}  // namespace

std::optional<Bounds> declared_enclosure(const CoefficientFn& f) {
    if (auto b = f.declared_bounds()) return b;
    const auto& n = f.node();
    switch (n.kind) {
        case NodeKind::sum: {
            Bounds acc{0.0, 0.0, -kInf};
            for (const auto& c : n.children) {
                auto b = declared_enclosure(c);
                if (!b) return std::nullopt;
                acc.lo += b->lo;
                acc.hi += b->hi;
                acc.from = std::max(acc.from, b->from);
            }
            return acc;
        }
        case NodeKind::prod: {
            Bounds acc{1.0, 1.0, -kInf};
            for (const auto& c : n.children) {
                auto b = declared_enclosure(c);
                if (!b || b->lo < 0.0) return std::nullopt;
                acc.lo *= b->lo;
                acc.hi = (acc.hi == 0.0 || b->hi == 0.0) ? 0.0 : acc.hi * b->hi;
                acc.from = std::max(acc.from, b->from);
            }
            return acc;
        }
        case NodeKind::window_integral: {
            auto g = declared_enclosure(n.children[0]);
            auto w = declared_enclosure(n.children[1]);
            if (!g || !w || g->lo < 0.0 || w->lo < 0.0) return std::nullopt;
            Bounds out{g->lo * w->lo, (g->hi == 0.0 || w->hi == 0.0) ? 0.0 : g->hi * w->hi,
                       std::max(g->from, w->from)};
            return out;
        }
        default: return std::nullopt;
    }
}

namespace {

std::vector<TermEnvelope> term_envelopes(const Nonlinearity& f) {
    std::vector<TermEnvelope> out;
    for (const auto& term : f.terms) {
        std::visit(
            [&](const auto& b) {
                using T = std::decay_t<decltype(b)>;
                if constexpr (std::is_same_v<T, KernelBirth>) {
                    out.push_back({b.coef, b.shape.envelope()});
                } else if constexpr (std::is_same_v<T, IntegralBirth>) {
                    out.push_back({b.b * CoefficientFn::window_integral(b.lambda, b.window), b.shape.envelope()});
                } else if constexpr (std::is_same_v<T, CustomBirth>) {
                    out.push_back({b.coef, b.envelope ? *b.envelope : b.h});
                } else {
                    out.push_back({b.coef, b.h});
                }
            },
            term);
    }
    return out;
}

CoefficientFn sum_of(const std::vector<CoefficientFn>& parts) {
    if (parts.empty()) return CoefficientFn::constant(0.0);
    if (parts.size() == 1) return parts.front();
    return CoefficientFn::sum(parts);
}

}  // namespace

std::vector<CoefficientFn> beta_of(const SystemSpec& sys) {
    std::vector<CoefficientFn> out;
    for (const auto& f : sys.f) {
        std::vector<CoefficientFn> parts;
        for (auto& te : term_envelopes(f)) parts.push_back(std::move(te.beta));
        out.push_back(sum_of(parts));
    }
    return out;
}

std::vector<Envelope> lower_envelope(const SystemSpec& sys, double cap_limit) {
    std::vector<Envelope> out;
    for (std::size_t i = 0; i < sys.n; ++i) {
        const Nonlinearity& f = sys.f[i];
        Envelope env;
        auto terms = term_envelopes(f);
        if (terms.empty()) {
            env.beta = CoefficientFn::constant(0.0);
            env.h_minus = ScalarFn::zero();
            env.reason = "no birth term";
            out.push_back(std::move(env));
            continue;
        }
        std::vector<CoefficientFn> betas;
        std::vector<ScalarFn> shapes;
        std::vector<CoefficientFn> all;
        for (auto& te : terms) {
            all.push_back(te.beta);
            const double slope = te.h.right_derivative_at_zero();
            if (!(slope > 0.0)) continue;
            betas.push_back(slope == 1.0 ? te.beta : scale_coefficient(te.beta, slope));
            shapes.push_back(slope == 1.0 ? te.h : te.h.times(1.0 / slope));
        }
        if (shapes.empty()) {
            env.beta = sum_of(all);
            env.h_minus = terms.front().h.scaled(f.scale);
            env.derivative_at_zero = env.h_minus.right_derivative_at_zero();
            env.monotone_cap = env.h_minus.monotone_cap(cap_limit);
            env.reason = "h'(0)=0";
        } else {
            env.beta = sum_of(betas);
            env.h_minus = ScalarFn::min_of(shapes).scaled(f.scale);
            env.derivative_at_zero = env.h_minus.right_derivative_at_zero();
            env.monotone_cap = env.h_minus.monotone_cap(cap_limit);
            env.valid = std::fabs(env.derivative_at_zero - 1.0) <= 1e-2;
            if (!env.valid) env.reason = "envelope slope at 0 is not 1";
        }
        env.beta_bounds = declared_enclosure(env.beta);
        out.push_back(std::move(env));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Transformations

SystemSpec scale_system(const SystemSpec& sys, std::span<const double> v) {
    if (v.size() != sys.n) throw ModelError("scale_system: v has wrong length");
    for (double vi : v)
        if (!(vi > 0.0) || !std::isfinite(vi)) throw ModelError("scale_system: v must be positive");
    SystemSpec out = sys;
    for (std::size_t i = 0; i < sys.n; ++i) {
        for (std::size_t j = 0; j < sys.n; ++j)
            for (auto& term : out.L[i][j]) term.a = scale_coefficient(term.a, v[j] / v[i]);
        out.f[i].scale *= v[i];
        if (out.K[i]) out.K[i]->g = out.K[i]->g.scaled(v[i]);
    }
    return out;
}

SystemSpec build_cooperative_lower(const SystemSpec& sys, double m, double M) {
    if (!(m > 0.0)) throw ModelError("cooperative lower system: m must be positive");
    if (!(M >= m)) throw ModelError("cooperative lower system: need M >= m");
    const auto env = lower_envelope(sys);
    SystemSpec out = sys;
    out.name = sys.name.empty() ? "lower" : sys.name + "-lower";
    for (std::size_t i = 0; i < sys.n; ++i) {
        out.f[i] = Nonlinearity{};
        if (sys.f[i].terms.empty()) continue;
        if (!env[i].valid)
            throw ModelError("cooperative lower system: component " + std::to_string(i + 1) + ": " + env[i].reason);
        if (m > env[i].monotone_cap * (1.0 + 1e-12)) {
            std::ostringstream os;
            os << "cooperative lower system: m=" << m << " exceeds the monotone cap " << env[i].monotone_cap
               << " of component " << i + 1;
            throw ModelError(os.str());
        }
        const ScalarFn H = ScalarFn::min_identity(ScalarFn::clamp(env[i].h_minus, m));
        out.f[i].terms.push_back(WindowMinBirth{env[i].beta, H, sys.tau});
    }
    return out;
}

bool clamp_consistent(const SystemSpec& sys, double m, double M) {
    const auto env = lower_envelope(sys);
    for (std::size_t i = 0; i < sys.n; ++i) {
        if (sys.f[i].terms.empty() || !env[i].valid) continue;
        const double at_m = env[i].h_minus.eval(m);
        const double lo = sampled_minimum([&](double x) { return env[i].h_minus.eval(x); }, m, M);
        if (at_m > lo * (1.0 + 1e-12)) return false;
    }
    return true;
}

}  // namespace permadde
