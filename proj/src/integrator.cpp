#include "permadde/integrator.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "permadde/error.hpp"

namespace permadde {

// ---------------------------------------------------------------------------
// Initial segments and options

InitialSegment InitialSegment::constant(std::vector<double> values) {
    InitialSegment s;
    for (double v : values) s.components.push_back(CoefficientFn::constant(v));
    return s;
}

InitialSegment InitialSegment::functions(std::vector<CoefficientFn> components) {
    InitialSegment s;
    s.components = std::move(components);
    return s;
}

std::string to_string(Scheme s) { return s == Scheme::rk4 ? "rk4" : "exp_rk4"; }

Scheme scheme_from_string(const std::string& s) {
    if (s == "rk4") return Scheme::rk4;
    if (s == "exp_rk4" || s == "etdrk4") return Scheme::exp_rk4;
    throw std::invalid_argument("unknown scheme '" + s + "' (expected rk4 or exp_rk4)");
}

// ---------------------------------------------------------------------------
// Dense output

namespace {

// Real-axis stability interval of classical RK4 is about [-2.785, 0].
constexpr double kRk4StabilityLimit = 2.5;

struct Cubic {
    double a, b, c, d;  // a + b th + c th^2 + d th^3 on th in [0, 1]
    double operator()(double th) const { return a + th * (b + th * (c + th * d)); }
};

Cubic hermite(double x0, double x1, double f0, double f1, double h) {
    const double hf0 = h * f0, hf1 = h * f1;
    return {x0, hf0, 3.0 * (x1 - x0) - 2.0 * hf0 - hf1, 2.0 * (x0 - x1) + hf0 + hf1};
}

double time_tol(double t) { return 1e-12 * std::max(1.0, std::fabs(t)); }

}  // namespace

std::size_t Trajectory::segment_index(double t, std::size_t segments) const {
    const double t0 = ts_.front();
    double guess = std::floor((t - t0) / h_);
    if (!(guess >= 0.0)) guess = 0.0;
    std::size_t k = std::min(static_cast<std::size_t>(std::min(guess, 1e18)), segments - 1);
    while (k > 0 && ts_[k] > t) --k;
    while (k + 1 < segments && ts_[k + 1] < t) ++k;
    return k;
}

double Trajectory::initial_value(std::size_t i, double t) const { return init_[i].eval(t); }

double Trajectory::dense_value(std::size_t i, double t, std::size_t segments) const {
    if (segments == 0) return xs_[i];
    const std::size_t k = segment_index(t, segments);
    const double tk = ts_[k], tk1 = ts_[k + 1];
    if (t <= tk) return xs_[k * n_ + i];
    if (t >= tk1) return xs_[(k + 1) * n_ + i];
    const double hk = tk1 - tk;
    const Cubic p = hermite(xs_[k * n_ + i], xs_[(k + 1) * n_ + i], fs_[k * n_ + i], fs_[(k + 1) * n_ + i], hk);
    return p((t - tk) / hk);
}

double Trajectory::value(std::size_t component, double t) const {
    if (component >= n_) throw std::out_of_range("trajectory component index");
    const double t0 = ts_.front();
    if (t < t0) {
        if (t < t0 - tau_ - time_tol(t0)) {
            std::ostringstream os;
            os << "history requested at t=" << t << " before the initial segment start " << t0 - tau_;
            throw HistoryGap(os.str(), t);
        }
        return initial_value(component, t);
    }
    if (t > ts_.back() + time_tol(ts_.back())) {
        std::ostringstream os;
        os << "trajectory evaluated at t=" << t << " beyond its end " << ts_.back();
        throw HistoryGap(os.str(), t);
    }
    return dense_value(component, std::min(t, ts_.back()), ts_.size() - 1);
}

std::vector<double> Trajectory::state(double t) const {
    std::vector<double> out(n_);
    for (std::size_t i = 0; i < n_; ++i) out[i] = value(i, t);
    return out;
}

double Trajectory::segment_extremum(std::size_t k, std::size_t i, double th1, double th2, double sign) const {
    const double hk = ts_[k + 1] - ts_[k];
    const Cubic p = hermite(xs_[k * n_ + i], xs_[(k + 1) * n_ + i], fs_[k * n_ + i], fs_[(k + 1) * n_ + i], hk);
    double best = std::min(sign * p(th1), sign * p(th2));
    // Critical points: b + 2c th + 3d th^2 = 0.
    const double A = 3.0 * p.d, B = 2.0 * p.c, C = p.b;
    auto consider = [&](double th) {
        if (th > th1 && th < th2) best = std::min(best, sign * p(th));
    };
    if (A == 0.0) {
        if (B != 0.0) consider(-C / B);
    } else {
        const double disc = B * B - 4.0 * A * C;
        if (disc >= 0.0) {
            const double q = -0.5 * (B + std::copysign(std::sqrt(disc), B));
            if (q != 0.0) {
                consider(q / A);
                consider(C / q);
            } else {
                consider(0.0);
            }
        }
    }
    return best;
}

double Trajectory::extremum(std::size_t i, double a, double b, std::size_t segments, std::size_t blocks,
                            double sign) const {
    if (b < a) std::swap(a, b);
    const double t0 = ts_.front();
    if (a < t0 - tau_ - time_tol(t0)) {
        std::ostringstream os;
        os << "window starts at t=" << a << " before the initial segment start " << t0 - tau_;
        throw HistoryGap(os.str(), a);
    }
    double best = kInf;
    if (a < t0) {
        const double hi = std::min(b, t0);
        const CoefficientFn& g = init_[i];
        if (auto c = g.constant_value()) {
            best = sign * *c;
        } else {
            best = sampled_minimum([&](double s) { return sign * g.eval(s); }, a, hi);
        }
    }
    if (b < t0) return best;
    if (segments == 0) return std::min(best, sign * xs_[i]);
    const double lo = std::max(a, t0);
    const double hi = std::min(b, ts_[segments]);
    const std::size_t ka = segment_index(lo, segments);
    const std::size_t kb = segment_index(hi, segments);
    auto theta = [&](std::size_t k, double t) {
        const double th = (t - ts_[k]) / (ts_[k + 1] - ts_[k]);
        return std::clamp(th, 0.0, 1.0);
    };
    if (ka == kb) return std::min(best, segment_extremum(ka, i, theta(ka, lo), theta(ka, hi), sign));
    best = std::min(best, segment_extremum(ka, i, theta(ka, lo), 1.0, sign));
    best = std::min(best, segment_extremum(kb, i, 0.0, theta(kb, hi), sign));
    std::size_t s = ka + 1;
    while (s < kb) {
        const std::size_t blk = s / kBlock;
        if (s % kBlock == 0 && blk < blocks && s + kBlock <= kb) {
            best = std::min(best, sign > 0.0 ? block_min_[blk * n_ + i] : -block_max_[blk * n_ + i]);
            s += kBlock;
        } else {
            best = std::min(best, segment_extremum(s, i, 0.0, 1.0, sign));
            ++s;
        }
    }
    return best;
}

double Trajectory::window_min(std::size_t component, double t1, double t2) const {
    if (component >= n_) throw std::out_of_range("trajectory component index");
    if (std::max(t1, t2) > ts_.back() + time_tol(ts_.back())) throw HistoryGap("window beyond trajectory end", t2);
    return extremum(component, t1, std::min(t2, ts_.back()), ts_.size() - 1, blocks_, 1.0);
}

double Trajectory::window_max(std::size_t component, double t1, double t2) const {
    if (component >= n_) throw std::out_of_range("trajectory component index");
    if (std::max(t1, t2) > ts_.back() + time_tol(ts_.back())) throw HistoryGap("window beyond trajectory end", t2);
    return -extremum(component, t1, std::min(t2, ts_.back()), ts_.size() - 1, blocks_, -1.0);
}

void Trajectory::finish_block(std::size_t b) {
    for (std::size_t i = 0; i < n_; ++i) {
        double lo = kInf, hi = -kInf;
        for (std::size_t k = b * kBlock; k < (b + 1) * kBlock; ++k) {
            lo = std::min(lo, segment_extremum(k, i, 0.0, 1.0, 1.0));
            hi = std::max(hi, -segment_extremum(k, i, 0.0, 1.0, -1.0));
        }
        block_min_.push_back(lo);
        block_max_.push_back(hi);
    }
    blocks_ = b + 1;
}

// ---------------------------------------------------------------------------
// Stage history: committed dense output up to t_n, then a quadratic through
// (t_n, x_n) with slope f_n matching the stage state at the stage time.

namespace detail {

class StageView final : public HistoryView {
public:
    StageView(const Trajectory& tr, std::size_t knot, double tc, const std::vector<double>& y)
        : tr_(tr), knot_(knot), tn_(tr.ts_[knot]), tc_(tc), y_(y) {
        const double dt = tc_ - tn_;
        if (dt > 0.0) {
            curv_.resize(tr_.n_);
            for (std::size_t i = 0; i < tr_.n_; ++i) {
                const double xn = tr_.xs_[knot_ * tr_.n_ + i];
                const double fn = tr_.fs_[knot_ * tr_.n_ + i];
                curv_[i] = (y_[i] - xn - fn * dt) / (dt * dt);
            }
        }
    }

    std::size_t dimension() const override { return tr_.n_; }

    double value(std::size_t i, double s) const override {
        if (s >= tc_) {
            if (s > tc_ + time_tol(tc_)) {
                std::ostringstream os;
                os << "explicitness violated: history requested at t=" << s << " during a stage at t=" << tc_;
                throw std::logic_error(os.str());
            }
            return y_[i];
        }
        if (s > tn_) return extension(i, s - tn_);
        if (s >= tr_.ts_.front()) return tr_.dense_value(i, s, knot_);
        if (s < tr_.ts_.front() - tr_.tau_ - time_tol(tr_.ts_.front()))
            throw HistoryGap("history requested before the initial segment", s);
        return tr_.initial_value(i, s);
    }

    double window_min(std::size_t i, double a, double b) const override {
        if (b > tc_ + time_tol(tc_)) throw std::logic_error("explicitness violated: window beyond the stage time");
        b = std::min(b, tc_);
        double best = kInf;
        if (a <= tn_) best = tr_.extremum(i, a, std::min(b, tn_), knot_, tr_.blocks_, 1.0);
        if (b > tn_) {
            const double u1 = std::max(a, tn_) - tn_, u2 = b - tn_;
            best = std::min({best, extension(i, u1), b >= tc_ ? y_[i] : extension(i, u2)});
            if (!curv_.empty() && curv_[i] > 0.0) {
                const double u = -tr_.fs_[knot_ * tr_.n_ + i] / (2.0 * curv_[i]);
                if (u > u1 && u < u2) best = std::min(best, extension(i, u));
            }
        }
        return best;
    }

private:
    double extension(std::size_t i, double u) const {
        const double xn = tr_.xs_[knot_ * tr_.n_ + i];
        if (curv_.empty() || u <= 0.0) return xn;
        return xn + u * (tr_.fs_[knot_ * tr_.n_ + i] + u * curv_[i]);
    }

    const Trajectory& tr_;
    std::size_t knot_;
    double tn_, tc_;
    const std::vector<double>& y_;
    std::vector<double> curv_;
};

namespace {

// phi_k(z) = sum_j z^j / (j + k)!, k = 1..3.
struct Phi {
    long double p1, p2, p3;
};

Phi phi_functions(long double z) {
    if (std::fabs(z) < 1.0L) {
        long double p1 = 0, p2 = 0, p3 = 0, term = 1.0L;
        // term = z^j / j!
        for (int j = 0; j < 24; ++j) {
            p1 += term / (j + 1);
            p2 += term / ((j + 1.0L) * (j + 2));
            p3 += term / ((j + 1.0L) * (j + 2) * (j + 3));
            term *= z / (j + 1);
        }
        return {p1, p2, p3};
    }
    const long double e = std::exp(z);
    const long double p1 = (e - 1.0L) / z;
    const long double p2 = (p1 - 1.0L) / z;
    const long double p3 = (p2 - 0.5L) / z;
    return {p1, p2, p3};
}

void check_state(const std::vector<double>& x, double t, const IntegrateOptions& opts) {
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (!std::isfinite(x[i])) {
            std::ostringstream os;
            os << "state component " << i + 1 << " became non-finite at t=" << t;
            throw IntegrationError(IntegrationError::Kind::non_finite, os.str(), t, i);
        }
        if (opts.positivity_floor && x[i] < *opts.positivity_floor) {
            std::ostringstream os;
            os.precision(17);
            os << "positivity violation: x" << i + 1 << "=" << x[i] << " below floor " << *opts.positivity_floor
               << " at t=" << t;
            throw IntegrationError(IntegrationError::Kind::positivity, os.str(), t, i);
        }
    }
}

}  // namespace

Trajectory integrate_impl(const SystemSpec& sys, const InitialSegment& phi0, double t0, double t_end,
                          const IntegrateOptions& opts) {
    const std::size_t n = sys.n;
    if (phi0.dimension() != n) throw ModelError("initial segment dimension does not match the system");
    if (!(t_end >= t0)) throw std::invalid_argument("integrate: t_end must not precede t0");
    if (t0 < sys.domain_start - time_tol(sys.domain_start))
        throw DomainError("integrate: t0 precedes the system's domain start");
    if (!(opts.step > 0.0) || !std::isfinite(opts.step))
        throw IntegrationError(IntegrationError::Kind::step_bound, "step must be positive", t0);
    if (sys.tau > 0.0 && opts.step > sys.tau / 4.0 * (1.0 + 1e-12)) {
        std::ostringstream os;
        os << "step " << opts.step << " exceeds tau/4 = " << sys.tau / 4.0;
        throw IntegrationError(IntegrationError::Kind::step_bound, os.str(), t0);
    }

    double h = opts.step;
    if (opts.track_breakpoints && sys.tau > 0.0) h = sys.tau / std::ceil(sys.tau / h - 1e-9);
    const double span = t_end - t0;
    std::size_t steps = 0;
    if (span > 0.0) {
        const double ratio = span / h;
        steps = static_cast<std::size_t>(std::max(1.0, std::ceil(ratio - 1e-9 * std::max(1.0, ratio))));
    }
    if (steps > opts.max_steps) {
        std::ostringstream os;
        os << "integration needs " << steps << " steps, more than max_steps=" << opts.max_steps;
        throw IntegrationError(IntegrationError::Kind::max_steps, os.str(), t0);
    }

    Trajectory tr;
    tr.n_ = n;
    tr.tau_ = sys.tau;
    tr.h_ = h;
    tr.stats_.step = h;
    tr.stats_.scheme = opts.scheme;
    for (const auto& c : phi0.components) tr.init_.push_back(c.with_domain(std::min(c.domain_start(), t0 - sys.tau)));

    std::vector<double> x(n);
    for (std::size_t i = 0; i < n; ++i) x[i] = tr.init_[i].eval(t0);
    if (opts.positivity_floor) {
        for (std::size_t i = 0; i < n; ++i) {
            if (!(x[i] > 0.0)) throw ModelError("initial segment must be positive at t0 (admissible set C_0^+)");
            if (sys.tau > 0.0 && !tr.init_[i].constant_value()) {
                for (double s : uniform_grid(t0 - sys.tau, t0, 33))
                    if (tr.init_[i].eval(s) < 0.0) throw ModelError("initial segment must be nonnegative");
            }
        }
    }

    tr.ts_.reserve(steps + 1);
    tr.xs_.reserve((steps + 1) * n);
    tr.fs_.reserve((steps + 1) * n);
    tr.ts_.push_back(t0);
    tr.xs_.insert(tr.xs_.end(), x.begin(), x.end());
    tr.fs_.insert(tr.fs_.end(), n, 0.0);

    std::vector<double> k1(n), k2(n), k3(n), k4(n), y(n);
    auto rhs = [&](std::size_t knot, double tc, const std::vector<double>& state, std::vector<double>& out) {
        StageView view(tr, knot, tc, state);
        rhs_eval(sys, tc, view, out);
        ++tr.stats_.rhs_evaluations;
    };
    auto finalize_slope = [&](std::size_t knot, const std::vector<double>& slope) {
        std::copy(slope.begin(), slope.end(), tr.fs_.begin() + static_cast<std::ptrdiff_t>(knot * n));
        while ((tr.blocks_ + 1) * Trajectory::kBlock <= knot) tr.finish_block(tr.blocks_);
    };

    std::vector<double> L(n), na(n), nb(n), nn(n), a(n), b(n), c(n);
    for (std::size_t s = 0; s < steps; ++s) {
        const double tn = tr.ts_[s];
        const double tn1 = s + 1 == steps ? t_end : t0 + static_cast<double>(s + 1) * h;
        const double hs = tn1 - tn;
        const double tm = tn + 0.5 * hs;
        const double* xn = &tr.xs_[s * n];

        rhs(s, tn, std::vector<double>(xn, xn + n), k1);
        finalize_slope(s, k1);

        std::vector<double> next(n);
        if (opts.scheme == Scheme::rk4) {
            for (std::size_t i = 0; i < n; ++i) {
                const double z = hs * sys.d[i].eval(tn);
                if (z > kRk4StabilityLimit) {
                    std::ostringstream os;
                    os << "h*d" << i + 1 << " = " << z << " exceeds the rk4 stability limit " << kRk4StabilityLimit
                       << " at t=" << tn << "; use exp_rk4 or a smaller step";
                    throw IntegrationError(IntegrationError::Kind::step_bound, os.str(), tn);
                }
            }
            for (std::size_t i = 0; i < n; ++i) y[i] = xn[i] + 0.5 * hs * k1[i];
            rhs(s, tm, y, k2);
            for (std::size_t i = 0; i < n; ++i) y[i] = xn[i] + 0.5 * hs * k2[i];
            rhs(s, tm, y, k3);
            for (std::size_t i = 0; i < n; ++i) y[i] = xn[i] + hs * k3[i];
            rhs(s, tn1, y, k4);
            for (std::size_t i = 0; i < n; ++i)
                next[i] = xn[i] + hs / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        } else {
            std::vector<Phi> half(n), full(n);
            std::vector<long double> e_half(n), e_full(n);
            for (std::size_t i = 0; i < n; ++i) {
                L[i] = -sys.d[i].eval(tm);
                const long double z = static_cast<long double>(L[i]) * hs;
                half[i] = phi_functions(0.5L * z);
                full[i] = phi_functions(z);
                e_half[i] = std::exp(0.5L * z);
                e_full[i] = std::exp(z);
                nn[i] = k1[i] - L[i] * xn[i];
                a[i] = static_cast<double>(e_half[i] * xn[i] + 0.5L * hs * half[i].p1 * nn[i]);
            }
            rhs(s, tm, a, k2);
            for (std::size_t i = 0; i < n; ++i) {
                na[i] = k2[i] - L[i] * a[i];
                b[i] = static_cast<double>(e_half[i] * xn[i] + 0.5L * hs * half[i].p1 * na[i]);
            }
            rhs(s, tm, b, k3);
            for (std::size_t i = 0; i < n; ++i) {
                nb[i] = k3[i] - L[i] * b[i];
                c[i] = static_cast<double>(e_half[i] * a[i] + 0.5L * hs * half[i].p1 * (2.0L * nb[i] - nn[i]));
            }
            rhs(s, tn1, c, k4);
            for (std::size_t i = 0; i < n; ++i) {
                const long double nc = k4[i] - static_cast<long double>(L[i]) * c[i];
                const Phi& p = full[i];
                const long double f1 = p.p1 - 3.0L * p.p2 + 4.0L * p.p3;
                const long double f2 = p.p2 - 2.0L * p.p3;
                const long double f3 = -p.p2 + 4.0L * p.p3;
                next[i] = static_cast<double>(e_full[i] * xn[i] +
                                              hs * (f1 * nn[i] + 2.0L * f2 * (na[i] + nb[i]) + f3 * nc));
            }
        }
        check_state(next, tn1, opts);
        tr.ts_.push_back(tn1);
        tr.xs_.insert(tr.xs_.end(), next.begin(), next.end());
        tr.fs_.insert(tr.fs_.end(), k4.begin(), k4.end());  // provisional until the next step's first stage
        ++tr.stats_.steps;
    }
    const std::size_t last = tr.ts_.size() - 1;
    rhs(last, tr.ts_[last], std::vector<double>(tr.xs_.begin() + static_cast<std::ptrdiff_t>(last * n), tr.xs_.end()),
        k1);
    finalize_slope(last, k1);
    return tr;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Public entry points

Trajectory integrate(const SystemSpec& sys, const InitialSegment& phi0, double t_end, const IntegrateOptions& opts) {
    return detail::integrate_impl(sys, phi0, sys.domain_start, t_end, opts);
}

Trajectory integrate(const SystemSpec& sys, const InitialSegment& phi0, double t0, double t_end,
                     const IntegrateOptions& opts) {
    return detail::integrate_impl(sys, phi0, t0, t_end, opts);
}

std::vector<double> history_eval(const Trajectory& traj, double t) { return traj.state(t); }

double window_min(const Trajectory& traj, std::size_t component, double t1, double t2) {
    return traj.window_min(component, t1, t2);
}

std::vector<double> window_minima_sequence(const Trajectory& traj, double T0, double len) {
    if (!(len > 0.0)) throw std::invalid_argument("window_minima_sequence: window length must be positive");
    std::vector<double> out;
    for (std::size_t k = 0;; ++k) {
        const double a = T0 + static_cast<double>(k) * len;
        const double b = a + len;
        if (b > traj.t_end() + time_tol(traj.t_end())) break;
        double s = kInf;
        for (std::size_t j = 0; j < traj.dimension(); ++j) s = std::min(s, traj.window_min(j, a, b));
        out.push_back(s);
    }
    return out;
}

std::vector<double> output_grid(const Trajectory& traj, double dt) {
    if (!(dt > 0.0)) throw std::invalid_argument("output grid spacing must be positive");
    if (std::fabs(dt - traj.step()) <= 1e-12 * traj.step()) return traj.times();
    std::vector<double> g;
    const double t0 = traj.t0(), t1 = traj.t_end();
    const double ratio = (t1 - t0) / dt;
    const auto count = static_cast<std::size_t>(std::floor(ratio + 1e-9 * std::max(1.0, ratio)));
    for (std::size_t k = 0; k <= count; ++k) g.push_back(std::min(t1, t0 + static_cast<double>(k) * dt));
    if (g.back() < t1 - time_tol(t1)) g.push_back(t1);
    return g;
}

void write_csv(std::ostream& os, const Trajectory& traj, const std::vector<double>& grid) {
    os << 't';
    for (std::size_t i = 0; i < traj.dimension(); ++i) os << ",x" << i + 1;
    os << '\n';
    char buf[64];
    for (double t : grid) {
        std::snprintf(buf, sizeof buf, "%.17g", t);
        os << buf;
        for (std::size_t i = 0; i < traj.dimension(); ++i) {
            std::snprintf(buf, sizeof buf, ",%.17g", traj.value(i, t));
            os << buf;
        }
        os << '\n';
    }
}

}  // namespace permadde
