#include <catch_amalgamated.hpp>

#include <cmath>

#include "permadde/error.hpp"
#include "permadde/experiments.hpp"
#include "permadde/models.hpp"

using namespace permadde;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;
using CF = CoefficientFn;

namespace {

SystemSpec linear_delay(double d, double a) {
    SystemSpec sys = SystemSpec::empty(1, 1.0);
    sys.d[0] = CF::constant(d);
    sys.L[0][0].push_back({CF::constant(a), DelayKernel::lag_point(CF::constant(1.0))});
    return sys;
}

}  // namespace

TEST_CASE("exact-solution residuals") {
    const auto zero = zero_system();
    CHECK(verify_exact_solution(zero.spec, *zero.exact, 1.0, 100.0).max_residual <= 1e-8);

    for (const auto& fx : {example_3_1(), example_3_4(), example_3_5()}) {
        const auto r = verify_exact_solution(fx.spec, *fx.exact, 1.0, 100.0, 1000);
        INFO(fx.id);
        CHECK(r.max_residual <= 1e-6);
        CHECK(r.method == DerivativeMethod::analytic);
        CHECK(r.points == 1000);
    }

    Example35Params p;
    p.C = 2.0;
    p.mu = 0.5;
    const auto alt = example_3_5(p);
    CHECK(verify_exact_solution(alt.spec, *alt.exact, 1.0, 100.0).max_residual <= 1e-6);
}

TEST_CASE("perturbed decay shows in the residual") {
    auto fx = example_3_4();
    for (auto& d : fx.spec.d) d = d + CF::constant(0.1);
    const auto r = verify_exact_solution(fx.spec, *fx.exact, 1.0, 100.0, 1000);
    // leading order 0.1 |phi(t)|, largest at the left end
    CHECK_THAT(r.max_residual, WithinRel(0.1 * fx.exact->at(1.0)[0], 1e-6));
    CHECK_THAT(r.argmax, WithinAbs(1.0, 1e-12));
}

TEST_CASE("central differences when a component lacks a derivative") {
    auto fx = zero_system();
    fx.exact->components[0] = CF::table({0.0, 200.0}, {1.0, 1.0});
    const auto r = verify_exact_solution(fx.spec, *fx.exact, 1.0, 100.0, 100);
    CHECK(r.method == DerivativeMethod::central_difference);
    CHECK(r.max_residual <= 1e-8);
}

TEST_CASE("ensembles") {
    const auto e = make_ensemble(2, 6, 42);
    REQUIRE(e.size() == 6);
    CHECK(*e[0].components[0].constant_value() == 1.0);
    const auto again = make_ensemble(2, 6, 42);
    for (std::size_t k = 0; k < e.size(); ++k)
        for (std::size_t i = 0; i < 2; ++i) {
            const double x = *e[k].components[i].constant_value();
            CHECK(x == *again[k].components[i].constant_value());
            CHECK(x >= 1e-3);
            CHECK(x <= 10.0);
        }
    CHECK(make_ensemble(2, 0, 1).empty());
}

TEST_CASE("permanence estimates") {
    const auto scalar = scalar_nicholson();
    const auto est = estimate_permanence(scalar.spec, make_ensemble(1, 12, 3, 1e-2, 3.0), 100.0);
    CHECK(est.positive);
    CHECK_THAT(est.m, WithinAbs(std::log(2.0), 1e-3));
    CHECK_THAT(est.M, WithinAbs(std::log(2.0), 1e-3));

    const auto two = nicholson_two_patch();
    const auto e2 = estimate_permanence(two.spec, make_ensemble(2, 50, 11, 1e-3, 5.0), 200.0);
    const double eq = std::log(8.0 / 3.0);
    CHECK(e2.failed == 0);
    CHECK(e2.m > 0.1);
    CHECK(e2.M < 3.0);
    CHECK(e2.m <= eq + 1e-6);
    CHECK(e2.M >= eq - 1e-6);

    // the square-clamp birth does not persist
    const auto e34 = estimate_permanence(example_3_4().spec, make_ensemble(1, 6, 5), 200.0);
    CHECK_FALSE(e34.positive);

    // thread count does not change the result
    const auto ens = make_ensemble(2, 9, 8);
    const auto one = estimate_permanence(two.spec, ens, 30.0, 0.5, {}, 1);
    const auto many = estimate_permanence(two.spec, ens, 30.0, 0.5, {}, 4);
    CHECK(one.m_hat == many.m_hat);
    CHECK(one.M_hat == many.M_hat);

    CHECK_THROWS_AS(estimate_permanence(two.spec, {}, 10.0), ModelError);
}

TEST_CASE("comparison with the cooperative lower system") {
    const auto two = nicholson_two_patch();
    const auto c = comparison_check(two.spec, 0.5, 3.0, InitialSegment::constant({1.0, 1.0}), 100.0);
    CHECK(c.max_violation <= 1e-6);
    CHECK_FALSE(c.clamp_consistent);
    const auto inside = comparison_check(two.spec, 0.5, 1.5, InitialSegment::constant({0.7, 1.4}), 100.0);
    CHECK(inside.clamp_consistent);
    CHECK(inside.max_violation <= 1e-6);

    // no birth terms: the lower system is the system itself
    const auto lin = linear_delay(1.0, 0.25);
    const auto same = comparison_check(lin, 0.5, 3.0, InitialSegment::constant({1.0}), 20.0);
    CHECK(same.max_violation <= 0.0);
}

TEST_CASE("decay-rate fits") {
    SystemSpec fast = SystemSpec::empty(1, 0.0);
    fast.d[0] = CF::constant(2.0);
    const Trajectory t = integrate(fast, InitialSegment::constant({1.0}), 10.0);
    const auto fit = decay_rate_fit(t, 1.0, 10.0);
    CHECK_THAT(fit.alpha, WithinAbs(2.0, 1e-3));
    CHECK(fit.r2 > 0.999);

    const Trajectory d = integrate(linear_delay(1.0, 0.25), InitialSegment::constant({1.0}), 60.0);
    CHECK(decay_rate_fit(d, 20.0, 60.0).alpha > 0.0);

    SystemSpec huge = SystemSpec::empty(1, 0.0);
    huge.d[0] = CF::constant(100.0);
    IntegrateOptions io;
    io.scheme = Scheme::exp_rk4;
    io.positivity_floor = std::nullopt;
    const Trajectory u = integrate(huge, InitialSegment::constant({1.0}), 20.0, io);
    const auto uf = decay_rate_fit(u, 1.0, 20.0);
    CHECK(uf.underflow);
    CHECK(std::isinf(uf.alpha));

    CHECK_THROWS_AS(decay_rate_fit(t, 5.0, 5.0), ModelError);
    CHECK_THROWS_AS(decay_rate_fit(t, 1.0, 11.0), HistoryGap);
}

TEST_CASE("extinction checks") {
    const auto ens = make_ensemble(1, 4, 9, 0.1, 5.0);
    CHECK(extinction_check(linear_delay(1.0, 0.25), ens, 20.0).extinct);

    // x' = -x + e^{-t} x(t - 1), with e^{-t} tabulated
    std::vector<double> ts, vs;
    for (int k = 0; k <= 4000; ++k) {
        ts.push_back(0.01 * k);
        vs.push_back(std::exp(-0.01 * k));
    }
    SystemSpec pert = SystemSpec::empty(1, 1.0);
    pert.L[0][0].push_back({CF::table(ts, vs), DelayKernel::lag_point(CF::constant(1.0))});
    CHECK(extinction_check(pert, ens, 20.0).extinct);

    const auto two = nicholson_two_patch();
    CHECK_FALSE(extinction_check(two.spec, make_ensemble(2, 4, 9), 50.0).extinct);
}

TEST_CASE("experiment JSON") {
    const auto fx = example_3_4();
    const auto j = to_json(verify_exact_solution(fx.spec, *fx.exact, 1.0, 10.0, 10));
    CHECK(j.at("points") == 10);
    CHECK(j.at("derivative") == "analytic");
}
