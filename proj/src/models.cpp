#include "permadde/models.hpp"

#include <algorithm>
#include <cmath>

#include "permadde/error.hpp"

namespace permadde {

namespace {

using CF = CoefficientFn;

CF cst(double v) { return CF::constant(v); }
CF lin(double slope, double intercept) { return CF::affine(slope, intercept); }

SystemSpec family_system(const FamilyParams& p, const std::vector<BirthShape>& shapes_per_component,
                         const std::vector<std::vector<BirthShape>>* shapes) {
    if (p.n == 0) throw ModelError("model family: dimension must be positive");
    if (p.d.size() != p.n) throw ModelError("model family: need one decay coefficient per component");
    if (!p.births.empty() && p.births.size() != p.n) throw ModelError("model family: births must be given per component");
    SystemSpec sys = SystemSpec::empty(p.n, p.tau, p.name);
    sys.domain_start = p.domain_start;
    sys.d = p.d;
    if (!p.linear.empty()) {
        if (p.linear.size() != p.n) throw ModelError("model family: linear part has wrong size");
        for (std::size_t i = 0; i < p.n; ++i) {
            if (p.linear[i].size() != p.n) throw ModelError("model family: linear part has wrong size");
            sys.L[i] = p.linear[i];
        }
    }
    for (std::size_t i = 0; i < p.births.size(); ++i) {
        for (std::size_t k = 0; k < p.births[i].size(); ++k) {
            const FamilyBirth& fb = p.births[i][k];
            BirthShape shape = shapes ? (*shapes)[i][k] : shapes_per_component[i];
            shape.c = fb.c;
            if (fb.lambda) {
                IntegralBirth ib;
                ib.b = fb.b;
                ib.lambda = *fb.lambda;
                ib.window = fb.lag;
                ib.shape = shape;
                sys.f[i].terms.emplace_back(std::move(ib));
            } else {
                KernelBirth kb;
                kb.coef = fb.b;
                kb.kernel = fb.lag.constant_value() == 0.0 ? DelayKernel::instant() : DelayKernel::lag_point(fb.lag);
                kb.shape = shape;
                sys.f[i].terms.emplace_back(std::move(kb));
            }
        }
    }
    sys.validate();
    return sys;
}

ExactSolution uniform_solution(std::size_t n, const CF& phi) {
    ExactSolution s;
    s.components.assign(n, phi);
    s.valid_from = 0.0;
    return s;
}

/// 1 / (t + C) as a rational node.
CF reciprocal_shift(double C) { return CF::rational({1.0}, {C, 1.0}); }

void require(bool ok, const std::string& what) {
    if (!ok) throw ModelError(what);
}

}  // namespace

SystemSpec nicholson_system(const FamilyParams& p) {
    std::vector<BirthShape> shapes(p.n, BirthShape::nicholson(cst(1.0)));
    return family_system(p, shapes, nullptr);
}

SystemSpec mackey_glass_system(const FamilyParams& p, const std::vector<double>& alpha) {
    if (alpha.size() != p.n) throw ModelError("mackey_glass_system: need one exponent per component");
    std::vector<BirthShape> shapes;
    for (double a : alpha) {
        if (!(a >= 1.0)) throw ModelError("mackey_glass_system: exponents must be >= 1");
        shapes.push_back(BirthShape::mackey_glass(cst(1.0), a));
    }
    return family_system(p, shapes, nullptr);
}

// ---------------------------------------------------------------------------
// Examples

ModelFixture example_3_1(const Example31Params& p) {
    require(p.C > p.tau_max, "example 3.1: need C > tau");
    require(p.mu > 0.0, "example 3.1: need mu > 0");
    const double C = p.C;
    const CF& tau = p.tau;
    const CF shifted = lin(1.0, C) - tau;  // t - tau(t) + C
    const CF a = (p.mu * (shifted * lin(1.0, C + 1.0)) / tau).with_bounds(0.0, kInf);
    const CF d = (CF::rational({1.0}, {C * (C + 1.0), 2.0 * C + 1.0, 1.0}) +
                  a * ((lin(1.0, C + 1.0) - tau) * lin(1.0, C)) / (shifted * lin(1.0, C + 1.0)))
                     .with_bounds(p.mu, kInf);

    SystemSpec sys = SystemSpec::empty(2, p.tau_max, "example3.1");
    sys.d = {d, d};
    sys.L[0][1].push_back({a, DelayKernel::lag_point(tau)});
    sys.L[1][0].push_back({a, DelayKernel::lag_point(tau)});
    sys.validate();

    ModelFixture fx;
    fx.id = "example3.1";
    fx.description = "planar linear system with unbounded a(t); (H2) holds but the system is not asymptotically stable";
    fx.spec = std::move(sys);
    fx.exact = uniform_solution(2, CF::rational({C + 1.0, 1.0}, {C, 1.0}));
    fx.expected = {{Hypothesis::H2, Status::certified}, {Hypothesis::H2star, Status::refuted}};
    return fx;
}

ModelFixture example_3_1_constant(const Example31Params& p) {
    require(p.mu > 0.0, "example 3.1: need mu > 0");
    SystemSpec sys = SystemSpec::empty(2, p.tau_max, "example3.1-constant");
    sys.d = {cst(2.0 * p.mu), cst(2.0 * p.mu)};
    sys.L[0][1].push_back({cst(p.mu), DelayKernel::lag_point(p.tau)});
    sys.L[1][0].push_back({cst(p.mu), DelayKernel::lag_point(p.tau)});
    sys.validate();
    ModelFixture fx;
    fx.id = "example3.1-constant";
    fx.description = "example 3.1 with constant coefficients d = 2 mu, a = d - mu";
    fx.spec = std::move(sys);
    fx.expected = {{Hypothesis::H2, Status::certified}, {Hypothesis::H2star, Status::certified}};
    return fx;
}

ModelFixture example_3_2(const Example32Params& p) {
    const std::size_t n = p.d_diag.size();
    require(n > 0, "example 3.2: dimension must be positive");
    require(p.eta > 0.0 && p.nu >= 1.0 && p.c > 0.0, "example 3.2: need eta > 0, nu >= 1, c > 0");
    require(p.beta.size() == n && p.d_off.size() == n && p.b.size() == n, "example 3.2: inconsistent sizes");
    const CF te = CF::t_pow(p.eta).with_bounds(0.0, kInf);
    FamilyParams fp;
    fp.name = "example3.2";
    fp.n = n;
    fp.tau = std::max(p.tau_ij, p.sigma);
    fp.domain_start = 1.0;
    fp.linear.assign(n, std::vector<std::vector<LinearTerm>>(n));
    for (std::size_t i = 0; i < n; ++i) {
        fp.d.push_back((p.d_diag[i] * te).with_bounds(0.0, kInf));
        for (std::size_t j = 0; j < n; ++j) {
            if (i != j && p.d_off[i][j] > 0.0)
                fp.linear[i][j].push_back({(p.d_off[i][j] * te).with_bounds(0.0, kInf), DelayKernel::instant()});
            if (p.b[i][j] > 0.0)
                fp.linear[i][j].push_back({(p.b[i][j] * p.tau_ij * te).with_bounds(0.0, kInf),
                                           DelayKernel::uniform(cst(p.tau_ij))});
        }
    }
    SystemSpec sys = mackey_glass_system(fp, std::vector<double>(n, p.nu));
    for (std::size_t i = 0; i < n; ++i) {
        KernelBirth kb;
        kb.coef = p.beta[i];
        kb.kernel = DelayKernel::uniform(cst(p.sigma));
        kb.shape = BirthShape::mackey_glass(cst(p.c), p.nu);
        sys.f[i].terms.emplace_back(std::move(kb));
    }
    sys.validate();
    ModelFixture fx;
    fx.id = "example3.2";
    fx.description = "Mackey-Glass system with t^eta coefficients and distributed delays";
    fx.spec = std::move(sys);
    fx.expected = {{Hypothesis::H2star, Status::certified}, {Hypothesis::H5star, Status::certified}};
    return fx;
}

ModelFixture example_3_3(const Example33Params& p) {
    require(p.eta > 0.0 && p.beta > 1.0 && p.c > 0.0, "example 3.3: need eta > 0, beta > 1, c > 0");
    require(p.nicholson || p.nu >= 1.0, "example 3.3: Mackey-Glass exponent must be >= 1");
    const CF te = CF::t_pow(p.eta);
    const CF d = te.with_bounds(1.0, kInf, 1.0);
    const CF a = (te - cst(1.0)).with_bounds(0.0, kInf, 1.0);
    const DelayKernel lk = p.linear_delay ? DelayKernel::lag_point(cst(p.tau)) : DelayKernel::instant();
    FamilyParams fp;
    fp.name = p.linear_delay ? "example3.3" : "example3.3-nodelay";
    fp.n = 2;
    fp.tau = std::max(p.linear_delay ? p.tau : 0.0, p.sigma);
    fp.domain_start = 1.0;
    fp.d = {d, d};
    fp.linear.assign(2, std::vector<std::vector<LinearTerm>>(2));
    fp.linear[0][1].push_back({a, lk});
    fp.linear[1][0].push_back({a, lk});
    const CF c = cst(p.c);
    fp.births = {{FamilyBirth{cst(p.beta), cst(p.sigma), std::nullopt, c}},
                 {FamilyBirth{cst(p.beta), cst(p.sigma), std::nullopt, c}}};
    SystemSpec sys = p.nicholson ? nicholson_system(fp) : mackey_glass_system(fp, {p.nu, p.nu});
    ModelFixture fx;
    fx.id = fp.name;
    fx.description = p.linear_delay ? "planar system with unbounded coupling t^eta - 1 and delays"
                                    : "planar system with unbounded coupling t^eta - 1, no delays in the linear part";
    fx.spec = std::move(sys);
    fx.expected = {{Hypothesis::H2, Status::certified},
                   {Hypothesis::H5, Status::certified},
                   {Hypothesis::H5star, Status::certified}};
    fx.expected_verdict = p.linear_delay ? Verdict::no_verdict : Verdict::permanent;
    return fx;
}

ModelFixture example_3_4(const Example34Params& p) {
    require(p.C > std::max(p.tau, 1.0), "example 3.4: need C > max(tau, 1)");
    require(p.mu > 0.0 && p.mu1 > p.mu + 1.0 / p.C, "example 3.4: need mu > 0 and mu1 > mu + 1/C");
    require(p.tau > 0.0, "example 3.4: need tau > 0");
    const double C = p.C;
    const CF a = (p.mu / p.tau * lin(1.0, C - p.tau)).with_bounds(0.0, kInf);
    const CF beta = CF::rational({p.mu1 * C, p.mu1}, {C - 1.0, 1.0}).with_bounds(p.mu1, p.mu1 * C / (C - 1.0));
    const CF d = (a + (beta + cst(1.0)) * reciprocal_shift(C) + cst(p.mu)).with_bounds(p.mu, kInf);

    SystemSpec sys = SystemSpec::empty(1, p.tau, "example3.4");
    sys.d = {d};
    sys.L[0][0].push_back({a, DelayKernel::lag_point(cst(p.tau))});
    CustomBirth cb;
    cb.coef = beta;
    cb.kernel = DelayKernel::instant();
    cb.h = ScalarFn::square_clamp();
    sys.f[0].terms.emplace_back(std::move(cb));
    sys.validate();

    ModelFixture fx;
    fx.id = "example3.4";
    fx.description = "scalar equation with h(x) = min(x^2, 1); (H4) fails because h'(0) = 0";
    fx.spec = std::move(sys);
    fx.exact = uniform_solution(1, reciprocal_shift(C));
    fx.expected = {{Hypothesis::H2, Status::certified},
                   {Hypothesis::H5, Status::certified},
                   {Hypothesis::H5star, Status::certified}};
    fx.expected_verdict = Verdict::no_verdict;
    fx.expected_blocking = {"h'(0)=0"};
    return fx;
}

ModelFixture example_3_5(const Example35Params& p) {
    require(p.tau > 0.0 && p.tau < 1.0, "example 3.5: need tau in (0, 1)");
    require(p.C > p.tau && p.mu > 0.0, "example 3.5: need C > tau and mu > 0");
    const double C = p.C;
    const CF d1 = (p.mu / (1.0 - p.tau) * lin(1.0, C)).with_bounds(p.mu * C / (1.0 - p.tau), kInf);
    const double beta_lo = std::max(0.0, p.mu * C / (1.0 - p.tau) - 1.0 / C);
    const CF beta = (CF::rational({C + 1.0 - p.tau, 1.0}, {C, 1.0}) * (d1 - reciprocal_shift(C)))
                        .with_bounds(beta_lo, kInf);
    const CF decay = p.a + d1;

    SystemSpec sys = SystemSpec::empty(2, p.tau, "example3.5");
    sys.d = {decay, decay};
    sys.L[0][1].push_back({p.a, DelayKernel::instant()});
    sys.L[1][0].push_back({p.a, DelayKernel::instant()});
    for (std::size_t i = 0; i < 2; ++i) {
        KernelBirth kb;
        kb.coef = beta;
        kb.kernel = DelayKernel::lag_point(cst(p.tau));
        kb.shape = BirthShape::mackey_glass(cst(1.0), 1.0);
        sys.f[i].terms.emplace_back(std::move(kb));
    }
    sys.validate();

    ModelFixture fx;
    fx.id = "example3.5";
    fx.description = "planar system with h(x) = x/(1+x) and unbounded beta(t); not permanent";
    fx.spec = std::move(sys);
    fx.exact = uniform_solution(2, reciprocal_shift(C));
    fx.expected = {{Hypothesis::H2, Status::certified}, {Hypothesis::H5, Status::certified}};
    fx.expected_verdict = Verdict::no_verdict;
    fx.expected_blocking = {"β unbounded"};
    return fx;
}

ModelFixture nicholson_two_patch() {
    FamilyParams fp;
    fp.name = "nicholson2patch";
    fp.n = 2;
    fp.tau = 1.0;
    fp.d = {cst(1.0), cst(1.0)};
    fp.linear.assign(2, std::vector<std::vector<LinearTerm>>(2));
    fp.linear[0][1].push_back({cst(0.25), DelayKernel::instant()});
    fp.linear[1][0].push_back({cst(0.25), DelayKernel::instant()});
    fp.births = {{FamilyBirth{cst(2.0), cst(1.0), std::nullopt, cst(1.0)}},
                 {FamilyBirth{cst(2.0), cst(1.0), std::nullopt, cst(1.0)}}};
    ModelFixture fx;
    fx.id = "nicholson2patch";
    fx.description = "2-patch Nicholson system, equilibrium ln(8/3) in each patch";
    fx.spec = nicholson_system(fp);
    fx.expected = {{Hypothesis::H2, Status::certified},
                   {Hypothesis::H2star, Status::certified},
                   {Hypothesis::H5, Status::certified},
                   {Hypothesis::H5star, Status::certified}};
    fx.expected_verdict = Verdict::permanent;
    return fx;
}

ModelFixture scalar_nicholson() {
    FamilyParams fp;
    fp.name = "scalar-nicholson";
    fp.n = 1;
    fp.d = {cst(1.0)};
    fp.births = {{FamilyBirth{cst(2.0), cst(0.0), std::nullopt, cst(1.0)}}};
    ModelFixture fx;
    fx.id = "scalar-nicholson";
    fx.description = "x' = -x + 2 x exp(-x), equilibrium ln 2";
    fx.spec = nicholson_system(fp);
    fx.expected = {{Hypothesis::H2, Status::certified}, {Hypothesis::H5, Status::certified}};
    fx.expected_verdict = Verdict::permanent;
    return fx;
}

ModelFixture zero_system() {
    SystemSpec sys = SystemSpec::empty(1, 0.0, "zero");
    sys.d = {cst(0.0)};
    ModelFixture fx;
    fx.id = "zero";
    fx.description = "x' = 0";
    fx.spec = std::move(sys);
    fx.exact = uniform_solution(1, cst(1.0));
    fx.in_class = false;
    return fx;
}

std::vector<std::string> builtin_ids() {
    return {"example3.1", "example3.1-constant", "example3.2",      "example3.3",       "example3.3-nodelay",
            "example3.4", "example3.5",          "nicholson2patch", "scalar-nicholson", "zero"};
}

ModelFixture example_fixture(const std::string& id) {
    if (id == "example3.1") return example_3_1();
    if (id == "example3.1-constant") return example_3_1_constant();
    if (id == "example3.2") return example_3_2();
    if (id == "example3.3") return example_3_3();
    if (id == "example3.3-nodelay") {
        Example33Params p;
        p.linear_delay = false;
        return example_3_3(p);
    }
    if (id == "example3.4") return example_3_4();
    if (id == "example3.5") return example_3_5();
    if (id == "nicholson2patch") return nicholson_two_patch();
    if (id == "scalar-nicholson") return scalar_nicholson();
    if (id == "zero") return zero_system();
    std::string known;
    for (const auto& k : builtin_ids()) known += (known.empty() ? "" : ", ") + k;
    throw ModelError("unknown builtin '" + id + "' (known: " + known + ")");
}

}  // namespace permadde
