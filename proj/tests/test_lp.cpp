#include <catch_amalgamated.hpp>

#include "permadde/error.hpp"
#include "permadde/lp.hpp"

using namespace permadde;
using Catch::Matchers::WithinAbs;

namespace {

// Brute-force oracle: does some v on a grid of (0,1]^2 give P v >= 0 componentwise for every P?
bool grid_feasible_2d(const std::vector<DenseMatrix>& rows, std::size_t steps = 200) {
    for (std::size_t a = 1; a <= steps; ++a)
        for (std::size_t b = 1; b <= steps; ++b) {
            const std::vector<double> v{double(a) / steps, double(b) / steps};
            bool ok = true;
            for (const auto& P : rows)
                for (long double r : P.apply(v)) ok = ok && r >= 0.0L;
            if (ok) return true;
        }
    return false;
}

}  // namespace

TEST_CASE("identity row gives the unit vector with slack one") {
    const auto r = lp_max_slack({DenseMatrix::identity(3)}, 3);
    REQUIRE(r.status == LpStatus::feasible);
    CHECK_THAT(r.slack, WithinAbs(1.0, 1e-12));
    for (double x : r.v) CHECK_THAT(x, WithinAbs(1.0, 1e-12));
}

TEST_CASE("symmetric M-matrix row") {
    const auto P = DenseMatrix::from_rows({{2, -1}, {-1, 2}});
    const auto r = lp_feasible_v({P}, 2);
    REQUIRE(r);
    CHECK_THAT(r->slack, WithinAbs(1.0, 1e-12));
    CHECK_THAT(r->v[0], WithinAbs(1.0, 1e-12));
    CHECK_THAT(r->v[1], WithinAbs(1.0, 1e-12));
}

TEST_CASE("negative off-diagonal pair has no positive solution") {
    const auto P = DenseMatrix::from_rows({{0, -1}, {-1, 0}});
    CHECK_FALSE(lp_feasible_v({P}, 2));
    CHECK_FALSE(grid_feasible_2d({P}));
    CHECK(lp_max_slack({P}, 2).status == LpStatus::infeasible);
}

TEST_CASE("several rows share one witness") {
    const auto P1 = DenseMatrix::from_rows({{3, -1}, {-1, 1}});
    const auto P2 = DenseMatrix::from_rows({{1, -0.5}, {-2, 3}});
    const auto r = lp_feasible_v({P1, P2}, 2);
    REQUIRE(r);
    for (const auto* P : {&P1, &P2})
        for (long double x : P->apply(r->v)) CHECK(x >= r->slack - 1e-12);
    CHECK(grid_feasible_2d({P1, P2}));
}

TEST_CASE("LP agrees with the brute-force grid on random 2x2 families") {
    std::uint64_t state = 12345;
    auto next = [&] {
        state = state * 6364136223846793005ULL + 1442695040888963407ULL;
        return static_cast<double>(state >> 11) / 9007199254740992.0 * 4.0 - 2.0;
    };
    for (int trial = 0; trial < 40; ++trial) {
        std::vector<DenseMatrix> rows;
        for (int k = 0; k < 2; ++k) rows.push_back(DenseMatrix::from_rows({{next(), next()}, {next(), next()}}));
        const auto r = lp_max_slack(rows, 2);
        // Only decide clearly separated cases; the grid cannot resolve a slack near zero.
        if (std::abs(r.slack) < 1e-2) continue;
        CHECK((r.status == LpStatus::feasible) == grid_feasible_2d(rows, 400));
    }
}

TEST_CASE("M-matrix witnesses") {
    const auto w = mmatrix_witness(DenseMatrix::from_rows({{2, -1}, {-1, 2}}));
    REQUIRE(w);
    CHECK_THAT(w->v[0], WithinAbs(1.0, 1e-12));
    CHECK_THAT(w->v[1], WithinAbs(1.0, 1e-12));
    CHECK_THAT(w->u[0], WithinAbs(1.0, 1e-12));
    CHECK_THAT(w->u[1], WithinAbs(1.0, 1e-12));

    CHECK_FALSE(mmatrix_witness(DenseMatrix::from_rows({{1, -2}, {-2, 1}})));

    const auto id = mmatrix_witness(DenseMatrix::identity(2));
    REQUIRE(id);
    CHECK_THAT(id->v[0], WithinAbs(1.0, 1e-12));
    CHECK_THAT(id->u[1], WithinAbs(1.0, 1e-12));

    CHECK_THROWS_AS(mmatrix_witness(DenseMatrix::from_rows({{1, 1}, {0, 1}})), ModelError);
}
