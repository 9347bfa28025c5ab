#include <catch_amalgamated.hpp>

#include <cmath>

#include "permadde/error.hpp"
#include "permadde/experiments.hpp"
#include "permadde/models.hpp"

using namespace permadde;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;
using CF = CoefficientFn;

TEST_CASE("fixtures reproduce their expected statuses and verdicts") {
    ReportOptions ro;
    ro.grid = GridSpec{10.0, 1e4, 400};
    for (const auto& id : builtin_ids()) {
        const ModelFixture fx = example_fixture(id);
        CHECK(fx.id == id);
        if (!fx.in_class) continue;
        const auto rep = check_system(fx.spec, ro);
        auto status_of = [&](Hypothesis h) {
            switch (h) {
                case Hypothesis::H2: return rep.h2.status;
                case Hypothesis::H2star: return rep.h2star.status;
                case Hypothesis::H5: return rep.h5.status;
                case Hypothesis::H5star: return rep.h5star.status;
                default: return Status::not_applicable;
            }
        };
        for (const auto& [h, s] : fx.expected) {
            INFO(id << " " << to_string(h));
            CHECK(status_of(h) == s);
        }
        if (fx.expected_verdict) {
            INFO(id);
            CHECK(rep.verdict.verdict == *fx.expected_verdict);
        }
        for (const auto& needle : fx.expected_blocking) {
            bool found = false;
            for (const auto& b : rep.verdict.blocking) found = found || b.find(needle) != std::string::npos;
            INFO(id << " blocking " << needle);
            CHECK(found);
        }
    }
    CHECK_THROWS_AS(example_fixture("example9.9"), ModelError);
}

TEST_CASE("exact solutions solve their fixtures") {
    for (const auto& id : builtin_ids()) {
        const ModelFixture fx = example_fixture(id);
        if (!fx.exact) continue;
        const double t1 = std::max(1.0, fx.spec.domain_start);
        INFO(id);
        CHECK(verify_exact_solution(fx.spec, *fx.exact, t1, 100.0, 500).max_residual <= 1e-6);
    }
}

TEST_CASE("example parameters are checked") {
    Example31Params p31;
    p31.C = 0.4;
    CHECK_THROWS_AS(example_3_1(p31), ModelError);
    Example35Params p35;
    p35.C = 2.0;
    p35.mu = 0.5;
    CHECK_NOTHROW(example_3_5(p35));
}

TEST_CASE("example 3.4 solution is 1/(t+C)") {
    const auto fx = example_3_4();
    const double C = Example34Params{}.C;
    for (double t : {0.0, 3.0, 200.0}) CHECK_THAT(fx.exact->at(t)[0], WithinRel(1.0 / (t + C), 1e-14));
    const auto f31 = example_3_1();
    const double C1 = Example31Params{}.C;
    for (double t : {0.0, 5.0}) CHECK_THAT(f31.exact->at(t)[1], WithinRel(1.0 + 1.0 / (t + C1), 1e-14));
}

TEST_CASE("family constructors") {
    FamilyParams p;
    p.name = "scalar";
    p.n = 1;
    p.tau = 1.0;
    p.d = {CF::constant(1.0)};
    p.births = {{FamilyBirth{CF::constant(2.0), CF::constant(1.0), std::nullopt, CF::constant(1.0)}}};
    const SystemSpec nich = nicholson_system(p);
    CHECK(nich.n == 1);
    CHECK_FALSE(nich.linear_part_has_delay());
    CHECK(std::holds_alternative<KernelBirth>(nich.f[0].terms.at(0)));
    const FunctionHistory h({CF::constant(std::log(2.0))});
    CHECK_THAT(rhs_eval(nich, 2.0, h)[0], WithinAbs(0.0, 1e-15));

    const SystemSpec mg = mackey_glass_system(p, {1.0});
    const FunctionHistory one({CF::constant(1.0)});
    CHECK_THAT(rhs_eval(mg, 2.0, one)[0], WithinAbs(0.0, 1e-15));

    p.births[0][0].lambda = CF::constant(1.0);
    const SystemSpec dist = nicholson_system(p);
    CHECK(std::holds_alternative<IntegralBirth>(dist.f[0].terms.at(0)));

    p.d = {CF::constant(0.0)};
    CHECK_THROWS_AS(nicholson_system(p), ModelError);
}

TEST_CASE("zero system is outside the class") {
    const auto z = zero_system();
    CHECK_FALSE(z.in_class);
    CHECK_THROWS_AS(z.spec.validate(), ModelError);
}
