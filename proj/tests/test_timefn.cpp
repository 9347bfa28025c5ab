#include <catch_amalgamated.hpp>

#include <cmath>

#include "permadde/error.hpp"
#include "permadde/scalarfn.hpp"
#include "permadde/timefn.hpp"

using namespace permadde;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;
using CF = CoefficientFn;

TEST_CASE("coefficient evaluation") {
    CHECK(CF::constant(3.5).eval(10.0) == 3.5);
    CHECK_THAT(CF::t_pow(2.0).eval(3.0), WithinAbs(9.0, 1e-15));
    // beta(t) = mu1 (t + C) / (t + C - 1) with mu1 = 2, C = 2
    const CF beta = CF::rational({2.0 * 2.0, 2.0}, {1.0, 1.0});
    CHECK_THAT(beta.eval(0.0), WithinAbs(4.0, 1e-15));
    CHECK_THAT(CF::affine(3.0, 3.0).eval(2.0), WithinAbs(9.0, 1e-15));
}

TEST_CASE("arithmetic combinators") {
    const CF t = CF::affine(1.0, 0.0);
    const CF f = (t + CF::constant(1.0)) * t / CF::constant(2.0) - CF::constant(0.5);
    for (double x : {0.0, 1.0, 7.25}) CHECK_THAT(f.eval(x), WithinAbs((x + 1) * x / 2 - 0.5, 1e-13));
    const CF pw = CF::piecewise({1.0}, {CF::constant(1.0), t});
    CHECK(pw.eval(0.5) == 1.0);
    CHECK(pw.eval(3.0) == 3.0);
    const CF tab = CF::table({0.0, 1.0, 2.0}, {0.0, 2.0, 0.0});
    CHECK_THAT(tab.eval(0.5), WithinAbs(1.0, 1e-15));
    CHECK_THAT(tab.eval(1.5), WithinAbs(1.0, 1e-15));
}

TEST_CASE("analytic derivatives match central differences") {
    const CF t = CF::affine(1.0, 0.0);
    const CF f = CF::rational({1.0, 2.0}, {3.0, 0.0, 1.0}) * CF::t_pow(1.5) + t;
    REQUIRE(f.has_analytic_derivative());
    for (double x : {0.5, 2.0, 40.0}) {
        const double h = 1e-5 * x;
        const double fd = (f.eval(x + h) - f.eval(x - h)) / (2 * h);
        CHECK_THAT(*f.derivative(x), WithinRel(fd, 1e-7));
    }
}

TEST_CASE("sampled bounds") {
    auto b = sampled_bounds(CF::constant(1.0), 0.0, 10.0, 11);
    CHECK(b.inf_hat == 1.0);
    CHECK(b.sup_hat == 1.0);
    b = sampled_bounds(CF::t_pow(1.0), 0.0, 10.0, 11);
    CHECK_THAT(b.inf_hat, WithinAbs(0.0, 1e-15));
    CHECK_THAT(b.sup_hat, WithinAbs(10.0, 1e-15));

    // a(t) = mu (t - tau + C)(t + C + 1) / tau with mu = 1, tau = 0.5, C = 1
    const CF a = CF::rational({0.5 * 2.0, 0.5 + 2.0, 1.0}, {0.5});
    const auto grid = uniform_grid(0.0, 100.0, 1001);
    for (std::size_t k = 1; k < grid.size(); ++k) CHECK(a.eval(grid[k]) > a.eval(grid[k - 1]));
    const auto ab = sampled_bounds(a, 0.0, 100.0, 1001);
    CHECK_THAT(ab.argmax, WithinAbs(100.0, 1e-12));
    CHECK_THAT(ab.sup_hat, WithinRel(100.5 * 102.0 / 0.5, 1e-12));
}

TEST_CASE("declared bounds are enforced by sampling") {
    const CF f = CF::t_pow(1.0).with_bounds(0.0, 5.0);
    CHECK_THROWS_AS(sampled_bounds(f, 0.0, 10.0, 11), ModelError);
    CHECK_NOTHROW(sampled_bounds(f, 0.0, 5.0, 11));
    const auto db = f.declared_bounds();
    REQUIRE(db);
    CHECK(db->hi == 5.0);
}

TEST_CASE("grids") {
    const auto u = uniform_grid(1.0, 2.0, 5);
    REQUIRE(u.size() == 5);
    CHECK(u.front() == 1.0);
    CHECK(u.back() == 2.0);
    const auto g = geometric_grid(10.0, 1e4, 4);
    REQUIRE(g.size() == 4);
    CHECK_THAT(g[1], WithinRel(100.0, 1e-12));
    CHECK(g.back() == 1e4);
}

TEST_CASE("coefficient JSON round trip") {
    const CF t = CF::affine(1.0, 0.0);
    const CF f = (CF::rational({1.0, 2.0}, {3.0, 1.0}) + CF::t_pow(0.5) * t).with_bounds(0.0, kInf, 1.0);
    const CF g = coefficient_from_json(to_json(f));
    for (double x : {1.0, 3.5, 100.0}) CHECK(g.eval(x) == f.eval(x));
    CHECK(to_json(g) == to_json(f));
    CHECK_THROWS_AS(coefficient_from_json(nlohmann::json{{"kind", "nonsense"}}, "$.d[0]"), SpecError);
}

TEST_CASE("scalar shapes") {
    const ScalarFn nich = ScalarFn::nicholson(1.0);
    CHECK(nich.eval(0.0) == 0.0);
    CHECK_THAT(nich.eval(1.0), WithinAbs(std::exp(-1.0), 1e-15));
    CHECK_THAT(nich.monotone_cap(1e3), WithinAbs(1.0, 1e-9));
    CHECK(nich.bounded());

    const ScalarFn mg1 = ScalarFn::mackey_glass(1.0, 1.0);
    CHECK_THAT(mg1.eval(1.0), WithinAbs(0.5, 1e-15));
    CHECK(mg1.bounded());
    CHECK_THAT(mg1.limit_at_infinity(), WithinAbs(1.0, 1e-12));
    CHECK(mg1.monotone_cap(1e3) == 1e3);

    const ScalarFn mg2 = ScalarFn::mackey_glass(1.0, 2.0);
    CHECK_THAT(mg2.monotone_cap(1e3), WithinAbs(1.0, 1e-9));

    CHECK_THAT(ScalarFn::square_clamp().right_derivative_at_zero(), WithinAbs(0.0, 1e-12));
    CHECK_THAT(nich.right_derivative_at_zero(), WithinAbs(1.0, 1e-12));
}
