#include "permadde/specfile.hpp"

#include <fstream>
#include <sstream>
#include <type_traits>

#include "permadde/error.hpp"

namespace permadde {

using nlohmann::json;

namespace {

std::string idx(const std::string& p, std::size_t i) { return p + "[" + std::to_string(i) + "]"; }

const json& need(const json& j, const char* key, const std::string& path) {
    if (!j.is_object()) throw SpecError(path, "expected an object");
    if (!j.contains(key)) throw SpecError(path, std::string("missing field '") + key + "'");
    return j.at(key);
}

double number(const json& j, const std::string& path) {
    if (!j.is_number()) throw SpecError(path, "expected a number");
    return j.get<double>();
}

const json& array_of(const json& j, std::size_t n, const std::string& path) {
    if (!j.is_array()) throw SpecError(path, "expected an array");
    if (j.size() != n) throw SpecError(path, "expected " + std::to_string(n) + " entries, found " + std::to_string(j.size()));
    return j;
}

CoefficientFn expr(const json& j, const std::string& path) { return coefficient_from_json(j, path); }

json shape_json(const BirthShape& s) {
    if (s.kind == BirthShape::Kind::nicholson) return {{"kind", "nicholson"}, {"c", to_json(s.c)}};
    return {{"kind", "mackey_glass"}, {"c", to_json(s.c)}, {"alpha", s.alpha}};
}

BirthShape shape_from_json(const json& j, const std::string& path) {
    const json& k = need(j, "kind", path);
    if (!k.is_string()) throw SpecError(path + ".kind", "expected a string");
    const auto kind = k.get<std::string>();
    const CoefficientFn c = expr(need(j, "c", path), path + ".c");
    try {
        if (kind == "nicholson") return BirthShape::nicholson(c);
        if (kind == "mackey_glass") return BirthShape::mackey_glass(c, number(need(j, "alpha", path), path + ".alpha"));
    } catch (const ModelError& e) {
        throw SpecError(path, e.what());
    }
    throw SpecError(path + ".kind", "unknown shape '" + kind + "' (expected nicholson or mackey_glass)");
}

json linear_term_json(const LinearTerm& t) { return {{"a", to_json(t.a)}, {"kernel", to_json(t.kernel)}}; }

LinearTerm linear_term_from_json(const json& j, const std::string& path) {
    LinearTerm t;
    t.a = expr(need(j, "a", path), path + ".a");
    t.kernel = j.contains("kernel") ? kernel_from_json(j.at("kernel"), path + ".kernel") : DelayKernel::instant();
    return t;
}

}  // namespace

// ---------------------------------------------------------------------------
// Pieces

json to_json(const DelayKernel& k) {
    switch (k.kind()) {
        case DelayKernel::Kind::instant: return {{"kind", "instant"}};
        case DelayKernel::Kind::lag: return {{"kind", "lag"}, {"lag", to_json(k.span())}};
        case DelayKernel::Kind::uniform: return {{"kind", "uniform"}, {"width", to_json(k.span())}};
        case DelayKernel::Kind::density:
            return {{"kind", "density"}, {"k", to_json(k.density_fn())}, {"support", to_json(k.span())}};
    }
    return {};
}

DelayKernel kernel_from_json(const json& j, const std::string& path) {
    const json& k = need(j, "kind", path);
    if (!k.is_string()) throw SpecError(path + ".kind", "expected a string");
    const auto kind = k.get<std::string>();
    try {
        if (kind == "instant") return DelayKernel::instant();
        if (kind == "lag") return DelayKernel::lag_point(expr(need(j, "lag", path), path + ".lag"));
        if (kind == "uniform") return DelayKernel::uniform(expr(need(j, "width", path), path + ".width"));
        if (kind == "density")
            return DelayKernel::density(expr(need(j, "k", path), path + ".k"),
                                        expr(need(j, "support", path), path + ".support"));
    } catch (const ModelError& e) {
        throw SpecError(path, e.what());
    }
    throw SpecError(path + ".kind", "unknown kernel '" + kind + "' (expected instant, lag, uniform or density)");
}

json to_json(const BirthTerm& b) {
    return std::visit(
        [](const auto& t) -> json {
            using T = std::decay_t<decltype(t)>;
            if constexpr (std::is_same_v<T, KernelBirth>) {
                return {{"type", "kernel"},
                        {"coef", to_json(t.coef)},
                        {"kernel", to_json(t.kernel)},
                        {"shape", shape_json(t.shape)}};
            } else if constexpr (std::is_same_v<T, IntegralBirth>) {
                return {{"type", "integral"},
                        {"b", to_json(t.b)},
                        {"lambda", to_json(t.lambda)},
                        {"window", to_json(t.window)},
                        {"shape", shape_json(t.shape)},
                        {"inner_time", t.inner_time == IntegralBirth::InnerTime::s ? "s" : "t"}};
            } else if constexpr (std::is_same_v<T, CustomBirth>) {
                json j{{"type", "custom"}, {"coef", to_json(t.coef)}, {"kernel", to_json(t.kernel)}, {"h", to_json(t.h)}};
                if (t.envelope) j["envelope"] = to_json(*t.envelope);
                return j;
            } else {
                return {{"type", "window_min"}, {"coef", to_json(t.coef)}, {"h", to_json(t.h)}, {"window", t.window}};
            }
        },
        b);
}

BirthTerm birth_from_json(const json& j, const std::string& path) {
    const json& ty = need(j, "type", path);
    if (!ty.is_string()) throw SpecError(path + ".type", "expected a string");
    const auto type = ty.get<std::string>();
    auto kernel_or_instant = [&] {
        return j.contains("kernel") ? kernel_from_json(j.at("kernel"), path + ".kernel") : DelayKernel::instant();
    };
    if (type == "kernel") {
        KernelBirth b;
        b.coef = expr(need(j, "coef", path), path + ".coef");
        b.kernel = kernel_or_instant();
        b.shape = shape_from_json(need(j, "shape", path), path + ".shape");
        return b;
    }
    if (type == "integral") {
        IntegralBirth b;
        b.b = expr(need(j, "b", path), path + ".b");
        b.lambda = expr(need(j, "lambda", path), path + ".lambda");
        b.window = expr(need(j, "window", path), path + ".window");
        b.shape = shape_from_json(need(j, "shape", path), path + ".shape");
        if (j.contains("inner_time")) {
            const json& it = j.at("inner_time");
            if (it == "s") {
                b.inner_time = IntegralBirth::InnerTime::s;
            } else if (it == "t") {
                b.inner_time = IntegralBirth::InnerTime::t;
            } else {
                throw SpecError(path + ".inner_time", "expected \"s\" or \"t\"");
            }
        }
        return b;
    }
    if (type == "custom") {
        CustomBirth b;
        b.coef = expr(need(j, "coef", path), path + ".coef");
        b.kernel = kernel_or_instant();
        b.h = scalar_from_json(need(j, "h", path), path + ".h");
        if (j.contains("envelope")) b.envelope = scalar_from_json(j.at("envelope"), path + ".envelope");
        return b;
    }
    if (type == "window_min") {
        WindowMinBirth b;
        b.coef = expr(need(j, "coef", path), path + ".coef");
        b.h = scalar_from_json(need(j, "h", path), path + ".h");
        b.window = number(need(j, "window", path), path + ".window");
        return b;
    }
    throw SpecError(path + ".type", "unknown birth term '" + type + "' (expected kernel, integral, custom or window_min)");
}

// ---------------------------------------------------------------------------
// Systems

json to_json(const SystemSpec& sys) {
    json j;
    j["version"] = kSpecVersion;
    j["name"] = sys.name;
    j["n"] = sys.n;
    j["tau"] = sys.tau;
    j["domain_start"] = sys.domain_start;
    json d = json::array();
    for (const auto& c : sys.d) d.push_back(to_json(c));
    j["d"] = std::move(d);
    json L = json::array();
    for (std::size_t i = 0; i < sys.n; ++i) {
        json row = json::array();
        for (std::size_t j2 = 0; j2 < sys.n; ++j2) {
            const auto& terms = sys.L[i][j2];
            if (terms.empty()) {
                row.push_back(nullptr);
            } else if (terms.size() == 1) {
                row.push_back(linear_term_json(terms.front()));
            } else {
                json arr = json::array();
                for (const auto& t : terms) arr.push_back(linear_term_json(t));
                row.push_back(std::move(arr));
            }
        }
        L.push_back(std::move(row));
    }
    j["L"] = std::move(L);
    json f = json::array();
    for (const auto& nl : sys.f) {
        json terms = json::array();
        for (const auto& t : nl.terms) terms.push_back(to_json(t));
        f.push_back({{"scale", nl.scale}, {"terms", std::move(terms)}});
    }
    j["f"] = std::move(f);
    json K = json::array();
    bool any = false;
    for (const auto& k : sys.K) {
        if (k) {
            any = true;
            K.push_back({{"kappa", to_json(k->kappa)}, {"g", to_json(k->g)}});
        } else {
            K.push_back(nullptr);
        }
    }
    if (any) j["K"] = std::move(K);
    return j;
}

json to_json(const SpecDocument& doc) {
    json j = to_json(doc.spec);
    if (doc.exact) {
        json comps = json::array();
        for (const auto& c : doc.exact->components) comps.push_back(to_json(c));
        j["exact"] = {{"components", std::move(comps)}, {"valid_from", doc.exact->valid_from}};
    }
    if (doc.initial) {
        json comps = json::array();
        for (const auto& c : doc.initial->components) comps.push_back(to_json(c));
        j["initial"] = std::move(comps);
    }
    return j;
}

SpecDocument spec_from_json(const json& j) {
    const std::string root = "$";
    if (!j.is_object()) throw SpecError(root, "expected an object");
    const json& ver = need(j, "version", root);
    if (!ver.is_number_integer() || ver.get<int>() != kSpecVersion)
        throw SpecError(root + ".version", "unsupported version (expected " + std::to_string(kSpecVersion) + ")");
    const json& nj = need(j, "n", root);
    if (!nj.is_number_integer() || nj.get<long long>() <= 0) throw SpecError(root + ".n", "expected a positive integer");
    const auto n = nj.get<std::size_t>();
    const double tau = number(need(j, "tau", root), root + ".tau");
    if (!(tau >= 0.0)) throw SpecError(root + ".tau", "must be nonnegative");

    SpecDocument doc;
    SystemSpec& sys = doc.spec;
    sys = SystemSpec::empty(n, tau, j.contains("name") && j.at("name").is_string() ? j.at("name").get<std::string>() : "");
    if (j.contains("domain_start")) sys.domain_start = number(j.at("domain_start"), root + ".domain_start");

    const json& d = array_of(need(j, "d", root), n, root + ".d");
    for (std::size_t i = 0; i < n; ++i) sys.d[i] = expr(d[i], idx(root + ".d", i));

    if (j.contains("L")) {
        const std::string lp = root + ".L";
        const json& L = array_of(j.at("L"), n, lp);
        for (std::size_t i = 0; i < n; ++i) {
            const json& row = array_of(L[i], n, idx(lp, i));
            for (std::size_t k = 0; k < n; ++k) {
                const std::string cp = idx(idx(lp, i), k);
                const json& cell = row[k];
                if (cell.is_null()) continue;
                if (cell.is_array()) {
                    for (std::size_t m = 0; m < cell.size(); ++m)
                        sys.L[i][k].push_back(linear_term_from_json(cell[m], idx(cp, m)));
                } else {
                    sys.L[i][k].push_back(linear_term_from_json(cell, cp));
                }
            }
        }
    }

    if (j.contains("f")) {
        const std::string fp = root + ".f";
        const json& f = array_of(j.at("f"), n, fp);
        for (std::size_t i = 0; i < n; ++i) {
            const std::string ip = idx(fp, i);
            const json& e = f[i];
            if (e.is_null()) continue;
            const json* terms = &e;
            std::string tp = ip;
            if (e.is_object()) {
                if (e.contains("scale")) sys.f[i].scale = number(e.at("scale"), ip + ".scale");
                terms = &need(e, "terms", ip);
                tp = ip + ".terms";
            }
            if (!terms->is_array()) throw SpecError(tp, "expected an array of birth terms");
            for (std::size_t m = 0; m < terms->size(); ++m)
                sys.f[i].terms.push_back(birth_from_json((*terms)[m], idx(tp, m)));
        }
    }

    if (j.contains("K")) {
        const std::string kp = root + ".K";
        const json& K = array_of(j.at("K"), n, kp);
        for (std::size_t i = 0; i < n; ++i) {
            if (K[i].is_null()) continue;
            const std::string ip = idx(kp, i);
            sys.K[i] = HarvestTerm{expr(need(K[i], "kappa", ip), ip + ".kappa"), scalar_from_json(need(K[i], "g", ip), ip + ".g")};
        }
    }

    if (j.contains("exact")) {
        const std::string ep = root + ".exact";
        const json& e = j.at("exact");
        ExactSolution sol;
        const json& comps = array_of(need(e, "components", ep), n, ep + ".components");
        for (std::size_t i = 0; i < n; ++i) sol.components.push_back(expr(comps[i], idx(ep + ".components", i)));
        if (e.contains("valid_from")) sol.valid_from = number(e.at("valid_from"), ep + ".valid_from");
        doc.exact = std::move(sol);
    }
    if (j.contains("initial")) {
        const std::string ip = root + ".initial";
        const json& comps = array_of(j.at("initial"), n, ip);
        std::vector<CoefficientFn> fns;
        for (std::size_t i = 0; i < n; ++i) fns.push_back(expr(comps[i], idx(ip, i)));
        doc.initial = InitialSegment::functions(std::move(fns));
    }

    try {
        sys.validate();
    } catch (const ModelError& e) {
        throw SpecError(root, e.what());
    }
    return doc;
}

SpecDocument parse_spec_text(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw SpecError("$", std::string("invalid JSON: ") + e.what());
    }
    return spec_from_json(j);
}

SpecDocument load_spec_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw SpecError("$", "cannot open spec file '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_spec_text(ss.str());
}

void write_spec_file(const std::string& path, const SpecDocument& doc) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write '" + path + "'");
    out << to_json(doc).dump(2) << "\n";
}

}  // namespace permadde
