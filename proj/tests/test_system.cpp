#include <catch_amalgamated.hpp>

#include <cmath>

#include "permadde/error.hpp"
#include "permadde/integrator.hpp"
#include "permadde/models.hpp"
#include "permadde/quadrature.hpp"
#include "permadde/system.hpp"

using namespace permadde;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;
using CF = CoefficientFn;

namespace {

FunctionHistory constant_history(std::vector<double> x) {
    std::vector<CF> c;
    for (double v : x) c.push_back(CF::constant(v));
    return FunctionHistory(std::move(c));
}

Nonlinearity single(BirthTerm term) {
    Nonlinearity f;
    f.terms.push_back(std::move(term));
    return f;
}

}  // namespace

TEST_CASE("linear functionals") {
    const auto h3 = constant_history({3.0});
    CHECK(linear_term_eval({CF::constant(2.0), DelayKernel::instant()}, 0.0, h3, 0) == 6.0);

    const FunctionHistory ramp({CF::affine(1.0, 0.0)});
    CHECK_THAT(linear_term_eval({CF::constant(1.0), DelayKernel::lag_point(CF::constant(1.0))}, 0.0, ramp, 0),
               WithinAbs(-1.0, 1e-15));
    const double uniform = linear_term_eval({CF::constant(1.0), DelayKernel::uniform(CF::constant(1.0))}, 0.0, ramp, 0);
    CHECK_THAT(uniform, WithinAbs(-0.5, 1e-12));
    CHECK_THAT(uniform, WithinAbs(quad::composite([](double s) { return s; }, -1.0, 0.0, 64), 1e-12));
}

TEST_CASE("nonlinearity evaluation") {
    const KernelBirth nich{CF::constant(1.0), DelayKernel::instant(), BirthShape::nicholson(CF::constant(1.0))};
    const KernelBirth mg{CF::constant(1.0), DelayKernel::instant(), BirthShape::mackey_glass(CF::constant(1.0), 1.0)};
    CHECK(nonlinearity_eval(single(nich), 0.0, constant_history({0.0}), 0) == 0.0);
    CHECK_THAT(nonlinearity_eval(single(mg), 0.0, constant_history({1.0}), 0), WithinAbs(0.5, 1e-15));
    CHECK_THAT(nonlinearity_eval(single(nich), 0.0, constant_history({1.0}), 0),
               WithinAbs(0.36787944117144233, 1e-15));
}

TEST_CASE("right-hand side") {
    const SystemSpec decay = SystemSpec::empty(1, 0.0);
    for (double t : {0.0, 3.0, 100.0}) CHECK(rhs_eval(decay, t, constant_history({2.0}))[0] == -2.0);

    const auto fx = nicholson_two_patch();
    const double x = std::log(8.0 / 3.0);
    for (double t : {1.0, 2.5, 50.0})
        for (double r : rhs_eval(fx.spec, t, constant_history({x, x}))) CHECK(std::abs(r) <= 1e-12);
}

TEST_CASE("envelope coefficients of distributed births") {
    FamilyParams p;
    p.n = 1;
    p.tau = 2.0;
    p.d = {CF::constant(1.0)};
    p.linear = {{{}}};
    p.births = {{FamilyBirth{CF::constant(3.0), CF::constant(2.0), CF::constant(1.0), CF::constant(1.0)}}};
    const auto sys = nicholson_system(p);
    CHECK_THAT(beta_of(sys)[0].eval(5.0), WithinAbs(6.0, 1e-12));

    p.tau = 1.0;
    p.births = {{FamilyBirth{CF::constant(1.0), CF::constant(1.0), CF::affine(1.0, 0.0), CF::constant(1.0)}}};
    p.domain_start = 1.0;
    const auto sys2 = nicholson_system(p);
    CHECK_THAT(beta_of(sys2)[0].eval(2.0), WithinAbs(1.5, 1e-12));
}

TEST_CASE("lower envelopes") {
    auto make = [](BirthShape shape) {
        SystemSpec sys = SystemSpec::empty(1, 0.0);
        sys.f[0] = single(KernelBirth{CF::constant(2.0), DelayKernel::instant(), std::move(shape)});
        return lower_envelope(sys)[0];
    };
    const auto nich = make(BirthShape::nicholson(CF::constant(1.0).with_bounds(1.0, 1.0)));
    REQUIRE(nich.valid);
    CHECK_THAT(nich.monotone_cap, WithinAbs(1.0, 1e-9));
    CHECK_THAT(nich.h_minus.eval(0.5), WithinAbs(0.5 * std::exp(-0.5), 1e-14));
    CHECK_THAT(nich.beta.eval(3.0), WithinAbs(2.0, 1e-15));

    const auto mg1 = make(BirthShape::mackey_glass(CF::constant(1.0).with_bounds(1.0, 1.0), 1.0));
    REQUIRE(mg1.valid);
    CHECK_THAT(mg1.h_minus.eval(3.0), WithinAbs(0.75, 1e-14));
    CHECK(mg1.monotone_cap >= 1e3);

    const auto mg2 = make(BirthShape::mackey_glass(CF::constant(1.0).with_bounds(1.0, 1.0), 2.0));
    CHECK_THAT(mg2.monotone_cap, WithinAbs(1.0, 1e-9));

    // normalization h^-(x) / x -> 1 at the origin
    for (const auto* env : {&nich, &mg1, &mg2})
        for (double x : {1e-3, 1e-5, 1e-7}) CHECK_THAT(env->h_minus.eval(x) / x, WithinAbs(1.0, 1e-2));
}

TEST_CASE("square clamp birth fails the envelope condition") {
    const auto fx = example_3_4();
    const auto env = lower_envelope(fx.spec);
    CHECK_FALSE(env[0].valid);
    CHECK(env[0].reason.find("h'(0)=0") != std::string::npos);
}

TEST_CASE("diagonal scaling") {
    const auto fx = nicholson_two_patch();
    const std::vector<double> ones{1.0, 1.0};
    const SystemSpec same = scale_system(fx.spec, ones);
    const auto h = constant_history({0.7, 1.3});
    for (double t : {1.0, 4.0}) CHECK(rhs_eval(same, t, h) == rhs_eval(fx.spec, t, h));

    SystemSpec lin = SystemSpec::empty(2, 0.0);
    lin.L[0][1].push_back({CF::constant(1.0), DelayKernel::instant()});
    const std::vector<double> v{2.0, 1.0};
    CHECK_THAT(scale_system(lin, v).coupling(0, 1, 0.0), WithinAbs(0.5, 1e-15));

    // trajectory equivalence x = diag(v) y
    const std::vector<double> w{2.0, 0.5};
    const SystemSpec scaled = scale_system(fx.spec, w);
    const Trajectory tx = integrate(fx.spec, InitialSegment::constant({1.2, 0.4}), 20.0);
    const Trajectory ty = integrate(scaled, InitialSegment::constant({0.6, 0.8}), 20.0);
    for (double t : {0.5, 3.0, 11.0, 20.0}) {
        CHECK_THAT(tx.value(0, t) / w[0], WithinAbs(ty.value(0, t), 1e-9));
        CHECK_THAT(tx.value(1, t) / w[1], WithinAbs(ty.value(1, t), 1e-9));
    }
}

TEST_CASE("cooperative lower system") {
    const auto fx = nicholson_two_patch();
    const SystemSpec low = build_cooperative_lower(fx.spec, 0.5, 3.0);
    const auto& term = std::get<WindowMinBirth>(low.f[0].terms.at(0));
    CHECK_THAT(term.h.eval(0.25), WithinAbs(0.25 * std::exp(-0.25), 1e-15));
    CHECK_THAT(term.h.eval(2.0), WithinAbs(0.5 * std::exp(-0.5), 1e-15));
    for (double x : {0.01, 0.3, 0.5, 2.0, 10.0}) CHECK(term.h.eval(x) <= x);
    CHECK_THROWS_AS(build_cooperative_lower(fx.spec, 1.5, 3.0), ModelError);
    CHECK(clamp_consistent(fx.spec, 0.5, 1.5));
    CHECK_FALSE(clamp_consistent(fx.spec, 0.5, 3.0));
}

TEST_CASE("validation") {
    SystemSpec sys = SystemSpec::empty(1, 1.0);
    sys.d[0] = CF::constant(0.0);
    CHECK_THROWS_AS(sys.validate(), ModelError);
    sys.d[0] = CF::constant(1.0);
    sys.L[0][0].push_back({CF::constant(1.0), DelayKernel::lag_point(CF::constant(2.0))});
    CHECK_THROWS_AS(sys.validate(), ModelError);
    sys.L[0][0].back().kernel = DelayKernel::lag_point(CF::constant(0.5));
    CHECK_NOTHROW(sys.validate());
    CHECK(sys.linear_part_has_delay());
}
