#include "permadde/timefn.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "permadde/error.hpp"
#include "permadde/quadrature.hpp"

namespace permadde {

using detail::Node;
using nlohmann::json;

std::string to_string(NodeKind kind) {
    switch (kind) {
        case NodeKind::constant: return "const";
        case NodeKind::t_pow: return "t_pow";
        case NodeKind::affine: return "affine";
        case NodeKind::rational: return "rational";
        case NodeKind::sum: return "sum";
        case NodeKind::prod: return "prod";
        case NodeKind::quot: return "quot";
        case NodeKind::piecewise: return "piecewise";
        case NodeKind::table: return "table";
        case NodeKind::window_integral: return "window_integral";
    }
    return "?";
}

namespace {

std::shared_ptr<const Node> make_node(Node n) { return std::make_shared<const Node>(std::move(n)); }

long double horner(const std::vector<double>& c, long double t) {
    long double acc = 0.0L;
    for (auto it = c.rbegin(); it != c.rend(); ++it) acc = acc * t + static_cast<long double>(*it);
    return acc;
}

long double horner_derivative(const std::vector<double>& c, long double t) {
    long double acc = 0.0L;
    for (std::size_t k = c.size(); k-- > 1;) acc = acc * t + static_cast<long double>(k) * c[k];
    return acc;
}

std::size_t piece_index(const Node& n, double t) {
    return static_cast<std::size_t>(std::upper_bound(n.xs.begin(), n.xs.end(), t) - n.xs.begin());
}

long double eval_node(const Node& n, double t);

long double eval_child(const CoefficientFn& f, double t) { return eval_node(f.node(), t); }

long double eval_node(const Node& n, double t) {
    const long double tl = t;
    switch (n.kind) {
        case NodeKind::constant: return n.a;
        case NodeKind::t_pow: return std::pow(tl, static_cast<long double>(n.a));
        case NodeKind::affine: return static_cast<long double>(n.a) * tl + n.b;
        case NodeKind::rational: return horner(n.xs, tl) / horner(n.ys, tl);
        case NodeKind::sum: {
            long double acc = 0.0L;
            for (const auto& c : n.children) acc += eval_child(c, t);
            return acc;
        }
        case NodeKind::prod: {
            long double acc = 1.0L;
            for (const auto& c : n.children) acc *= eval_child(c, t);
            return acc;
        }
        case NodeKind::quot: return eval_child(n.children[0], t) / eval_child(n.children[1], t);
        case NodeKind::piecewise: return eval_child(n.children[piece_index(n, t)], t);
        case NodeKind::table: {
            if (t <= n.xs.front()) return n.ys.front();
            if (t >= n.xs.back()) return n.ys.back();
            const auto hi = static_cast<std::size_t>(std::upper_bound(n.xs.begin(), n.xs.end(), t) - n.xs.begin());
            const std::size_t lo = hi - 1;
            const long double w = (tl - n.xs[lo]) / (static_cast<long double>(n.xs[hi]) - n.xs[lo]);
            return (1.0L - w) * n.ys[lo] + w * n.ys[hi];
        }
        case NodeKind::window_integral: {
            const double width = static_cast<double>(eval_child(n.children[1], t));
            const CoefficientFn& g = n.children[0];
            return quad::composite([&](double s) { return static_cast<double>(eval_child(g, s)); }, t - width, t, 8, 8);
        }
    }
    return 0.0L;
}

bool analytic(const Node& n) {
    if (n.kind == NodeKind::table) return false;
    return std::all_of(n.children.begin(), n.children.end(), [](const CoefficientFn& c) { return analytic(c.node()); });
}

// (value, derivative)
std::pair<long double, long double> eval_d(const Node& n, double t) {
    const long double tl = t;
    switch (n.kind) {
        case NodeKind::constant: return {n.a, 0.0L};
        case NodeKind::t_pow: {
            const long double e = n.a;
            if (e == 0.0L) return {1.0L, 0.0L};
            return {std::pow(tl, e), e * std::pow(tl, e - 1.0L)};
        }
        case NodeKind::affine: return {static_cast<long double>(n.a) * tl + n.b, n.a};
        case NodeKind::rational: {
            const long double p = horner(n.xs, tl), q = horner(n.ys, tl);
            const long double dp = horner_derivative(n.xs, tl), dq = horner_derivative(n.ys, tl);
            return {p / q, (dp * q - p * dq) / (q * q)};
        }
        case NodeKind::sum: {
            long double v = 0.0L, d = 0.0L;
            for (const auto& c : n.children) {
                auto [cv, cd] = eval_d(c.node(), t);
                v += cv;
                d += cd;
            }
            return {v, d};
        }
        case NodeKind::prod: {
            long double v = 1.0L, d = 0.0L;
            for (const auto& c : n.children) {
                auto [cv, cd] = eval_d(c.node(), t);
                d = d * cv + v * cd;
                v *= cv;
            }
            return {v, d};
        }
        case NodeKind::quot: {
            auto [p, dp] = eval_d(n.children[0].node(), t);
            auto [q, dq] = eval_d(n.children[1].node(), t);
            return {p / q, (dp * q - p * dq) / (q * q)};
        }
        case NodeKind::piecewise: return eval_d(n.children[piece_index(n, t)].node(), t);
        case NodeKind::window_integral: {
            auto [w, dw] = eval_d(n.children[1].node(), t);
            const long double v = eval_node(n, t);
            const long double upper = eval_child(n.children[0], t);
            const long double lower = eval_child(n.children[0], t - static_cast<double>(w));
            return {v, upper - lower * (1.0L - dw)};
        }
        case NodeKind::table: break;
    }
    return {eval_node(n, t), 0.0L};
}

void require(bool cond, const std::string& what) {
    if (!cond) throw ModelError(what);
}

}  // namespace

CoefficientFn::CoefficientFn() : CoefficientFn(make_node(Node{})) {}

CoefficientFn::CoefficientFn(std::shared_ptr<const Node> node) : node_(std::move(node)) {}

CoefficientFn CoefficientFn::constant(double value) {
    require(std::isfinite(value), "constant: value must be finite");
    Node n;
    n.kind = NodeKind::constant;
    n.a = value;
    return CoefficientFn(make_node(std::move(n)));
}

CoefficientFn CoefficientFn::t_pow(double eta) {
    require(std::isfinite(eta), "t_pow: exponent must be finite");
    Node n;
    n.kind = NodeKind::t_pow;
    n.a = eta;
    return CoefficientFn(make_node(std::move(n)));
}

CoefficientFn CoefficientFn::affine(double slope, double intercept) {
    Node n;
    n.kind = NodeKind::affine;
    n.a = slope;
    n.b = intercept;
    return CoefficientFn(make_node(std::move(n)));
}

CoefficientFn CoefficientFn::rational(std::vector<double> numerator, std::vector<double> denominator) {
    require(!numerator.empty() && !denominator.empty(), "rational: empty coefficient list");
    Node n;
    n.kind = NodeKind::rational;
    n.xs = std::move(numerator);
    n.ys = std::move(denominator);
    return CoefficientFn(make_node(std::move(n)));
}

CoefficientFn CoefficientFn::sum(std::vector<CoefficientFn> terms) {
    require(!terms.empty(), "sum: no terms");
    Node n;
    n.kind = NodeKind::sum;
    n.children = std::move(terms);
    return CoefficientFn(make_node(std::move(n)));
}

CoefficientFn CoefficientFn::prod(std::vector<CoefficientFn> factors) {
    require(!factors.empty(), "prod: no factors");
    Node n;
    n.kind = NodeKind::prod;
    n.children = std::move(factors);
    return CoefficientFn(make_node(std::move(n)));
}

CoefficientFn CoefficientFn::quot(CoefficientFn numerator, CoefficientFn denominator) {
    Node n;
    n.kind = NodeKind::quot;
    n.children = {std::move(numerator), std::move(denominator)};
    return CoefficientFn(make_node(std::move(n)));
}

CoefficientFn CoefficientFn::piecewise(std::vector<double> breaks, std::vector<CoefficientFn> pieces) {
    require(pieces.size() == breaks.size() + 1, "piecewise: need exactly one more piece than breaks");
    require(std::is_sorted(breaks.begin(), breaks.end()), "piecewise: breaks must be sorted");
    Node n;
    n.kind = NodeKind::piecewise;
    n.xs = std::move(breaks);
    n.children = std::move(pieces);
    return CoefficientFn(make_node(std::move(n)));
}

CoefficientFn CoefficientFn::table(std::vector<double> times, std::vector<double> values) {
    require(times.size() >= 2 && times.size() == values.size(), "table: need >= 2 matching (t, v) pairs");
    for (std::size_t i = 1; i < times.size(); ++i) require(times[i] > times[i - 1], "table: times must increase strictly");
    Node n;
    n.kind = NodeKind::table;
    n.xs = std::move(times);
    n.ys = std::move(values);
    return CoefficientFn(make_node(std::move(n)));
}

CoefficientFn CoefficientFn::window_integral(CoefficientFn integrand, CoefficientFn width) {
    Node n;
    n.kind = NodeKind::window_integral;
    n.children = {std::move(integrand), std::move(width)};
    return CoefficientFn(make_node(std::move(n)));
}

long double CoefficientFn::eval_ld(double t) const {
    if (t < domain_start_ - 1e-12 * std::max(1.0, std::fabs(domain_start_))) {
        std::ostringstream os;
        os << "coefficient evaluated at t=" << t << " below domain start " << domain_start_;
        throw DomainError(os.str());
    }
    const long double v = eval_node(*node_, t);
    if (!std::isfinite(v)) {
        std::ostringstream os;
        os << "coefficient (" << to_string(node_->kind) << ") is not finite at t=" << t;
        throw NonFiniteError(os.str());
    }
    return v;
}

double CoefficientFn::eval(double t) const { return static_cast<double>(eval_ld(t)); }

bool CoefficientFn::has_analytic_derivative() const { return analytic(*node_); }

std::optional<double> CoefficientFn::derivative(double t) const {
    if (!has_analytic_derivative()) return std::nullopt;
    eval_ld(t);  // domain and finiteness checks
    const long double d = eval_d(*node_, t).second;
    if (!std::isfinite(d)) throw NonFiniteError("coefficient derivative is not finite at t=" + std::to_string(t));
    return static_cast<double>(d);
}

CoefficientFn CoefficientFn::with_bounds(Bounds bounds) const {
    require(!(bounds.lo > bounds.hi), "declared bounds: lo > hi");
    CoefficientFn copy = *this;
    copy.bounds_ = bounds;
    return copy;
}

CoefficientFn CoefficientFn::with_bounds(double lo, double hi, double from) const {
    return with_bounds(Bounds{lo, hi, from});
}

CoefficientFn CoefficientFn::with_domain(double start) const {
    CoefficientFn copy = *this;
    copy.domain_start_ = start;
    return copy;
}

CoefficientFn CoefficientFn::without_bounds() const {
    CoefficientFn copy = *this;
    copy.bounds_.reset();
    return copy;
}

std::optional<Bounds> CoefficientFn::declared_bounds() const {
    if (bounds_) return bounds_;
    if (node_->kind == NodeKind::constant) return Bounds{node_->a, node_->a, -kInf};
    return std::nullopt;
}

NodeKind CoefficientFn::kind() const { return node_->kind; }

std::optional<double> CoefficientFn::constant_value() const {
    if (node_->kind == NodeKind::constant) return node_->a;
    return std::nullopt;
}

CoefficientFn operator+(const CoefficientFn& a, const CoefficientFn& b) { return CoefficientFn::sum({a, b}); }

CoefficientFn operator-(const CoefficientFn& a, const CoefficientFn& b) {
    return CoefficientFn::sum({a, CoefficientFn::prod({CoefficientFn::constant(-1.0), b})});
}

CoefficientFn operator*(const CoefficientFn& a, const CoefficientFn& b) { return CoefficientFn::prod({a, b}); }

CoefficientFn operator/(const CoefficientFn& a, const CoefficientFn& b) { return CoefficientFn::quot(a, b); }

CoefficientFn operator*(double s, const CoefficientFn& a) {
    // Fold into a leading constant factor so repeated rescaling stays shallow.
    if (auto c = a.constant_value()) return CoefficientFn::constant(s * *c);
    const Node& n = a.node();
    if (n.kind == NodeKind::prod && !n.children.empty() && n.children.front().constant_value()) {
        std::vector<CoefficientFn> factors = n.children;
        factors.front() = CoefficientFn::constant(s * *factors.front().constant_value());
        return CoefficientFn::prod(std::move(factors)).with_domain(a.domain_start());
    }
    return CoefficientFn::prod({CoefficientFn::constant(s), a}).with_domain(a.domain_start());
}

std::vector<double> uniform_grid(double t1, double t2, std::size_t count) {
    if (count < 2 || !(t1 < t2)) throw std::invalid_argument("uniform_grid: need t1 < t2 and count >= 2");
    std::vector<double> g(count);
    const double step = (t2 - t1) / static_cast<double>(count - 1);
    for (std::size_t k = 0; k < count; ++k) g[k] = t1 + static_cast<double>(k) * step;
    g.back() = t2;
    return g;
}

std::vector<double> geometric_grid(double t1, double t2, std::size_t count) {
    if (count < 2 || !(t1 < t2) || !(t1 > 0.0)) throw std::invalid_argument("geometric_grid: need 0 < t1 < t2 and count >= 2");
    std::vector<double> g(count);
    const double ratio = std::log(t2 / t1) / static_cast<double>(count - 1);
    for (std::size_t k = 0; k < count; ++k) g[k] = t1 * std::exp(ratio * static_cast<double>(k));
    g.front() = t1;
    g.back() = t2;
    return g;
}

SampledBounds sampled_bounds(const CoefficientFn& f, double t1, double t2, std::size_t grid_points) {
    if (!(t1 < t2) || grid_points < 2) throw std::invalid_argument("sampled_bounds: need t1 < t2 and grid_points >= 2");
    const auto declared = f.declared_bounds();
    SampledBounds out{kInf, -kInf, t1, t1};
    for (double t : uniform_grid(t1, t2, grid_points)) {
        const double v = f.eval(t);
        if (v < out.inf_hat) {
            out.inf_hat = v;
            out.argmin = t;
        }
        if (v > out.sup_hat) {
            out.sup_hat = v;
            out.argmax = t;
        }
        if (declared && t >= declared->from) {
            const double tol = 1e-12 * std::max(1.0, std::fabs(v));
            if (!declared->contains(v, tol)) {
                std::ostringstream os;
                os << "inconsistent declared bounds: value " << v << " at t=" << t << " outside [" << declared->lo
                   << ", " << declared->hi << "]";
                throw ModelError(os.str());
            }
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// JSON

namespace {

json number_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

json children_json(const std::vector<CoefficientFn>& cs) {
    json arr = json::array();
    for (const auto& c : cs) arr.push_back(to_json(c));
    return arr;
}

const json& field(const json& j, const char* key, const std::string& path) {
    if (!j.is_object() || !j.contains(key)) throw SpecError(path, std::string("missing field '") + key + "'");
    return j.at(key);
}

double number_at(const json& j, const char* key, const std::string& path) {
    const json& v = field(j, key, path);
    if (!v.is_number()) throw SpecError(path + "." + key, "expected a number");
    return v.get<double>();
}

std::vector<double> numbers_at(const json& j, const char* key, const std::string& path) {
    const json& v = field(j, key, path);
    if (!v.is_array()) throw SpecError(path + "." + key, "expected an array of numbers");
    std::vector<double> out;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (!v[i].is_number()) throw SpecError(path + "." + key + "[" + std::to_string(i) + "]", "expected a number");
        out.push_back(v[i].get<double>());
    }
    return out;
}

std::vector<CoefficientFn> exprs_at(const json& j, const char* key, const std::string& path) {
    const json& v = field(j, key, path);
    const std::string p = path + "." + key;
    if (!v.is_array()) throw SpecError(p, "expected an array of expressions");
    std::vector<CoefficientFn> out;
    for (std::size_t i = 0; i < v.size(); ++i) out.push_back(coefficient_from_json(v[i], p + "[" + std::to_string(i) + "]"));
    return out;
}

double bound_value(const json& v, double missing, const std::string& path) {
    if (v.is_null()) return missing;
    if (!v.is_number()) throw SpecError(path, "expected a number or null");
    return v.get<double>();
}

}  // namespace

json to_json(const CoefficientFn& f) {
    const Node& n = f.node();
    json j;
    j["kind"] = to_string(n.kind);
    switch (n.kind) {
        case NodeKind::constant: j["value"] = n.a; break;
        case NodeKind::t_pow: j["eta"] = n.a; break;
        case NodeKind::affine:
            j["slope"] = n.a;
            j["intercept"] = n.b;
            break;
        case NodeKind::rational:
            j["num"] = n.xs;
            j["den"] = n.ys;
            break;
        case NodeKind::sum: j["terms"] = children_json(n.children); break;
        case NodeKind::prod: j["factors"] = children_json(n.children); break;
        case NodeKind::quot:
            j["num"] = to_json(n.children[0]);
            j["den"] = to_json(n.children[1]);
            break;
        case NodeKind::piecewise:
            j["breaks"] = n.xs;
            j["pieces"] = children_json(n.children);
            break;
        case NodeKind::table:
            j["t"] = n.xs;
            j["v"] = n.ys;
            break;
        case NodeKind::window_integral:
            throw Error("window_integral nodes are derived quantities and cannot be serialized");
    }
    if (f.domain_start() != 0.0) j["domain_start"] = f.domain_start();
    // Constants report implicit bounds; only explicit ones are written.
    if (auto b = f.declared_bounds(); b && !(n.kind == NodeKind::constant && b->lo == n.a && b->hi == n.a)) {
        j["bounds"] = {{"lo", number_or_null(b->lo)}, {"hi", number_or_null(b->hi)}, {"from", number_or_null(b->from)}};
    }
    return j;
}

CoefficientFn coefficient_from_json(const json& j, const std::string& path) {
    if (j.is_number()) return CoefficientFn::constant(j.get<double>());
    if (!j.is_object()) throw SpecError(path, "expected an expression object");
    const json& kind_j = field(j, "kind", path);
    if (!kind_j.is_string()) throw SpecError(path + ".kind", "expected a string");
    const std::string kind = kind_j.get<std::string>();
    CoefficientFn f;
    try {
        if (kind == "const") {
            f = CoefficientFn::constant(number_at(j, "value", path));
        } else if (kind == "t_pow") {
            f = CoefficientFn::t_pow(number_at(j, "eta", path));
        } else if (kind == "affine") {
            f = CoefficientFn::affine(number_at(j, "slope", path), number_at(j, "intercept", path));
        } else if (kind == "rational") {
            f = CoefficientFn::rational(numbers_at(j, "num", path), numbers_at(j, "den", path));
        } else if (kind == "sum") {
            f = CoefficientFn::sum(exprs_at(j, "terms", path));
        } else if (kind == "prod") {
            f = CoefficientFn::prod(exprs_at(j, "factors", path));
        } else if (kind == "quot") {
            f = CoefficientFn::quot(coefficient_from_json(field(j, "num", path), path + ".num"),
                                    coefficient_from_json(field(j, "den", path), path + ".den"));
        } else if (kind == "piecewise") {
            f = CoefficientFn::piecewise(numbers_at(j, "breaks", path), exprs_at(j, "pieces", path));
        } else if (kind == "table") {
            f = CoefficientFn::table(numbers_at(j, "t", path), numbers_at(j, "v", path));
        } else {
            throw SpecError(path + ".kind", "unknown expression kind '" + kind + "'");
        }
    } catch (const ModelError& e) {
        throw SpecError(path, e.what());
    }
    if (j.contains("domain_start")) f = f.with_domain(number_at(j, "domain_start", path));
    if (j.contains("bounds")) {
        const json& b = j.at("bounds");
        const std::string bp = path + ".bounds";
        Bounds bounds;
        if (b.is_array()) {
            if (b.size() < 2 || b.size() > 3) throw SpecError(bp, "expected [lo, hi] or [lo, hi, from]");
            bounds.lo = bound_value(b[0], -kInf, bp + "[0]");
            bounds.hi = bound_value(b[1], kInf, bp + "[1]");
            if (b.size() == 3) bounds.from = bound_value(b[2], -kInf, bp + "[2]");
        } else if (b.is_object()) {
            if (b.contains("lo")) bounds.lo = bound_value(b.at("lo"), -kInf, bp + ".lo");
            if (b.contains("hi")) bounds.hi = bound_value(b.at("hi"), kInf, bp + ".hi");
            if (b.contains("from")) bounds.from = bound_value(b.at("from"), -kInf, bp + ".from");
        } else {
            throw SpecError(bp, "expected an object or array");
        }
        if (bounds.lo > bounds.hi) throw SpecError(bp, "lo > hi");
        f = f.with_bounds(bounds);
    }
    return f;
}

}  // namespace permadde
