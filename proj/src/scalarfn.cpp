#include "permadde/scalarfn.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "permadde/error.hpp"

namespace permadde {

using nlohmann::json;

namespace {
constexpr double kInfinity = std::numeric_limits<double>::infinity();
}

ScalarFn::ScalarFn() = default;

ScalarFn ScalarFn::zero() { return ScalarFn{}; }

ScalarFn ScalarFn::nicholson(double c) {
    if (!(c > 0.0) || !std::isfinite(c)) throw ModelError("nicholson shape: c must be positive and finite");
    ScalarFn h;
    h.kind_ = Kind::nicholson;
    h.c_ = c;
    return h;
}

ScalarFn ScalarFn::mackey_glass(double c, double alpha) {
    if (!(c > 0.0) || !std::isfinite(c)) throw ModelError("mackey-glass shape: c must be positive and finite");
    if (!(alpha > 0.0)) throw ModelError("mackey-glass shape: alpha must be positive");
    ScalarFn h;
    h.kind_ = Kind::mackey_glass;
    h.c_ = c;
    h.alpha_ = alpha;
    return h;
}

ScalarFn ScalarFn::square_clamp() {
    ScalarFn h;
    h.kind_ = Kind::square_clamp;
    return h;
}

ScalarFn ScalarFn::power(double p) {
    if (!(p > 0.0)) throw ModelError("power shape: exponent must be positive");
    ScalarFn h;
    h.kind_ = Kind::power;
    h.alpha_ = p;
    return h;
}

ScalarFn ScalarFn::clamp(ScalarFn inner, double m) {
    if (!(m > 0.0)) throw ModelError("clamp shape: m must be positive");
    ScalarFn h;
    h.kind_ = Kind::clamp;
    h.m_ = m;
    h.items_ = {std::move(inner)};
    return h;
}

ScalarFn ScalarFn::min_identity(ScalarFn inner) {
    ScalarFn h;
    h.kind_ = Kind::min_identity;
    h.items_ = {std::move(inner)};
    return h;
}

ScalarFn ScalarFn::min_of(std::vector<ScalarFn> items) {
    if (items.empty()) throw ModelError("min_of shape: no items");
    if (items.size() == 1) return items.front();
    ScalarFn h;
    h.kind_ = Kind::min_of;
    h.items_ = std::move(items);
    return h;
}

double ScalarFn::base(double x) const {
    switch (kind_) {
        case Kind::zero: return 0.0;
        case Kind::nicholson: return x * std::exp(-c_ * x);
        case Kind::mackey_glass: return x / (1.0 + c_ * std::pow(x, alpha_));
        case Kind::square_clamp: return x <= 1.0 ? x * x : 1.0;
        case Kind::power: return std::pow(x, alpha_);
        case Kind::clamp: return items_.front().eval(std::min(x, m_));
        case Kind::min_identity: return std::min(items_.front().eval(x), x);
        case Kind::min_of: {
            double v = kInfinity;
            for (const auto& it : items_) v = std::min(v, it.eval(x));
            return v;
        }
    }
    return 0.0;
}

double ScalarFn::eval(double x) const {
    if (scale_ == 1.0) return gain_ * base(x);
    return gain_ * base(scale_ * x) / scale_;
}

ScalarFn ScalarFn::times(double g) const {
    if (!(g > 0.0) || !std::isfinite(g)) throw ModelError("shape gain must be positive");
    ScalarFn copy = *this;
    copy.gain_ *= g;
    return copy;
}

ScalarFn ScalarFn::scaled(double s) const {
    if (!(s > 0.0) || !std::isfinite(s)) throw ModelError("shape scaling factor must be positive");
    ScalarFn copy = *this;
    copy.scale_ *= s;
    return copy;
}

double ScalarFn::right_derivative_at_zero() const {
    double base_slope = 0.0;
    switch (kind_) {
        case Kind::zero: base_slope = 0.0; break;
        case Kind::nicholson: base_slope = 1.0; break;
        case Kind::mackey_glass: base_slope = 1.0; break;
        case Kind::square_clamp: base_slope = 0.0; break;
        case Kind::power: base_slope = alpha_ > 1.0 ? 0.0 : (alpha_ == 1.0 ? 1.0 : kInfinity); break;
        case Kind::clamp: base_slope = items_.front().right_derivative_at_zero(); break;
        case Kind::min_identity: base_slope = std::min(1.0, items_.front().right_derivative_at_zero()); break;
        case Kind::min_of:
            base_slope = kInfinity;
            for (const auto& it : items_) base_slope = std::min(base_slope, it.right_derivative_at_zero());
            break;
    }
    return gain_ * base_slope;
}

double ScalarFn::monotone_cap(double limit) const {
    double cap = limit;
    switch (kind_) {
        case Kind::zero: cap = 0.0; break;
        case Kind::nicholson: cap = 1.0 / c_; break;
        case Kind::mackey_glass:
            cap = alpha_ > 1.0 ? std::pow((alpha_ - 1.0) * c_, -1.0 / alpha_) : limit;
            break;
        case Kind::square_clamp: cap = 1.0; break;
        case Kind::power: cap = limit; break;
        case Kind::clamp: cap = std::min(m_, items_.front().monotone_cap(limit)); break;
        case Kind::min_identity: cap = items_.front().monotone_cap(limit); break;
        case Kind::min_of:
            for (const auto& it : items_) cap = std::min(cap, it.monotone_cap(limit));
            break;
    }
    return std::min(limit, cap / scale_);
}

double ScalarFn::limit_at_infinity() const {
    double lim = 0.0;
    switch (kind_) {
        case Kind::zero: lim = 0.0; break;
        case Kind::nicholson: lim = 0.0; break;
        case Kind::mackey_glass:
            lim = alpha_ == 1.0 ? 1.0 / c_ : (alpha_ > 1.0 ? 0.0 : kInfinity);
            break;
        case Kind::square_clamp: lim = 1.0; break;
        case Kind::power: lim = kInfinity; break;
        case Kind::clamp: lim = items_.front().eval(m_); break;
        case Kind::min_identity: lim = items_.front().limit_at_infinity(); break;
        case Kind::min_of:
            lim = kInfinity;
            for (const auto& it : items_) lim = std::min(lim, it.limit_at_infinity());
            break;
    }
    return gain_ * lim / scale_;
}

bool ScalarFn::bounded() const {
    switch (kind_) {
        case Kind::zero:
        case Kind::nicholson:
        case Kind::square_clamp:
        case Kind::clamp: return true;
        case Kind::mackey_glass: return alpha_ >= 1.0;
        case Kind::power: return false;
        case Kind::min_identity: return items_.front().bounded();
        case Kind::min_of:
            return std::any_of(items_.begin(), items_.end(), [](const ScalarFn& it) { return it.bounded(); });
    }
    return false;
}

double ScalarFn::asymptotic_gain() const {
    if (bounded()) return 0.0;
    switch (kind_) {
        case Kind::mackey_glass: return 0.0;  // alpha < 1: grows like x^(1 - alpha)
        case Kind::power: return alpha_ > 1.0 ? kInfinity : (alpha_ == 1.0 ? 1.0 : 0.0);
        case Kind::min_identity: return std::min(1.0, items_.front().asymptotic_gain());
        case Kind::min_of: {
            double g = kInfinity;
            for (const auto& it : items_) g = std::min(g, it.asymptotic_gain());
            return g;
        }
        default: return 0.0;
    }
}

std::string ScalarFn::describe() const {
    std::ostringstream os;
    switch (kind_) {
        case Kind::zero: os << "0"; break;
        case Kind::nicholson: os << "x*exp(-" << c_ << "x)"; break;
        case Kind::mackey_glass: os << "x/(1+" << c_ << "x^" << alpha_ << ")"; break;
        case Kind::square_clamp: os << "min(x^2,1)"; break;
        case Kind::power: os << "x^" << alpha_; break;
        case Kind::clamp: os << items_.front().describe() << "|clamp(" << m_ << ")"; break;
        case Kind::min_identity: os << "min(" << items_.front().describe() << ", x)"; break;
        case Kind::min_of: {
            os << "min(";
            for (std::size_t i = 0; i < items_.size(); ++i) os << (i ? ", " : "") << items_[i].describe();
            os << ")";
            break;
        }
    }
    if (scale_ != 1.0) os << "[scale " << scale_ << "]";
    if (gain_ != 1.0) os << "[gain " << gain_ << "]";
    return os.str();
}

json to_json(const ScalarFn& h) {
    json j;
    switch (h.kind()) {
        case ScalarFn::Kind::zero: j["kind"] = "zero"; break;
        case ScalarFn::Kind::nicholson:
            j["kind"] = "nicholson";
            j["c"] = h.c();
            break;
        case ScalarFn::Kind::mackey_glass:
            j["kind"] = "mackey_glass";
            j["c"] = h.c();
            j["alpha"] = h.alpha();
            break;
        case ScalarFn::Kind::square_clamp: j["kind"] = "square_clamp"; break;
        case ScalarFn::Kind::power:
            j["kind"] = "power";
            j["p"] = h.alpha();
            break;
        case ScalarFn::Kind::clamp:
            j["kind"] = "clamp";
            j["m"] = h.m();
            j["inner"] = to_json(h.items().front());
            break;
        case ScalarFn::Kind::min_identity:
            j["kind"] = "min_identity";
            j["inner"] = to_json(h.items().front());
            break;
        case ScalarFn::Kind::min_of: {
            j["kind"] = "min_of";
            j["items"] = json::array();
            for (const auto& it : h.items()) j["items"].push_back(to_json(it));
            break;
        }
    }
    if (h.scale() != 1.0) j["scale"] = h.scale();
    if (h.gain() != 1.0) j["gain"] = h.gain();
    return j;
}

namespace {
double num(const json& j, const char* key, const std::string& path) {
    if (!j.contains(key)) throw SpecError(path, std::string("missing field '") + key + "'");
    if (!j.at(key).is_number()) throw SpecError(path + "." + key, "expected a number");
    return j.at(key).get<double>();
}
}  // namespace

ScalarFn scalar_from_json(const json& j, const std::string& path) {
    if (!j.is_object() || !j.contains("kind") || !j.at("kind").is_string())
        throw SpecError(path, "expected a shape object with a string 'kind'");
    const std::string kind = j.at("kind").get<std::string>();
    ScalarFn h;
    try {
        if (kind == "zero") {
            h = ScalarFn::zero();
        } else if (kind == "nicholson") {
            h = ScalarFn::nicholson(num(j, "c", path));
        } else if (kind == "mackey_glass") {
            h = ScalarFn::mackey_glass(num(j, "c", path), j.contains("alpha") ? num(j, "alpha", path) : 1.0);
        } else if (kind == "square_clamp") {
            h = ScalarFn::square_clamp();
        } else if (kind == "power") {
            h = ScalarFn::power(num(j, "p", path));
        } else if (kind == "clamp") {
            if (!j.contains("inner")) throw SpecError(path, "missing field 'inner'");
            h = ScalarFn::clamp(scalar_from_json(j.at("inner"), path + ".inner"), num(j, "m", path));
        } else if (kind == "min_identity") {
            if (!j.contains("inner")) throw SpecError(path, "missing field 'inner'");
            h = ScalarFn::min_identity(scalar_from_json(j.at("inner"), path + ".inner"));
        } else if (kind == "min_of") {
            if (!j.contains("items") || !j.at("items").is_array()) throw SpecError(path, "missing array 'items'");
            std::vector<ScalarFn> items;
            for (std::size_t i = 0; i < j.at("items").size(); ++i)
                items.push_back(scalar_from_json(j.at("items")[i], path + ".items[" + std::to_string(i) + "]"));
            h = ScalarFn::min_of(std::move(items));
        } else {
            throw SpecError(path + ".kind", "unknown shape kind '" + kind + "'");
        }
    } catch (const ModelError& e) {
        throw SpecError(path, e.what());
    }
    try {
        if (j.contains("scale")) h = h.scaled(num(j, "scale", path));
        if (j.contains("gain")) h = h.times(num(j, "gain", path));
    } catch (const ModelError& e) {
        throw SpecError(path, e.what());
    }
    return h;
}

}  // namespace permadde
