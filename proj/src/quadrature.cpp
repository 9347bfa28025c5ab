#include "permadde/quadrature.hpp"

#include <array>
#include <cmath>
#include <mutex>
#include <numbers>
#include <stdexcept>

namespace permadde::quad {

namespace {

GaussRule make_rule(std::size_t order) {
    GaussRule rule;
    rule.nodes.resize(order);
    rule.weights.resize(order);
    const auto n = static_cast<long double>(order);
    for (std::size_t i = 0; i < order; ++i) {
        // Newton on P_n starting from the Chebyshev-like guess.
        long double x = std::cos(std::numbers::pi_v<long double> * (static_cast<long double>(i) + 0.75L) / (n + 0.5L));
        long double dp = 0.0L;
        for (int iter = 0; iter < 100; ++iter) {
            long double p0 = 1.0L;
            long double p1 = x;
            for (std::size_t k = 2; k <= order; ++k) {
                const auto kk = static_cast<long double>(k);
                const long double p2 = ((2.0L * kk - 1.0L) * x * p1 - (kk - 1.0L) * p0) / kk;
                p0 = p1;
                p1 = p2;
            }
            if (order == 1) {
                p1 = x;
                p0 = 1.0L;
            }
            dp = n * (x * p1 - p0) / (x * x - 1.0L);
            const long double dx = p1 / dp;
            x -= dx;
            if (std::fabs(dx) < 1e-19L) break;
        }
        long double p0 = 1.0L;
        long double p1 = x;
        for (std::size_t k = 2; k <= order; ++k) {
            const auto kk = static_cast<long double>(k);
            const long double p2 = ((2.0L * kk - 1.0L) * x * p1 - (kk - 1.0L) * p0) / kk;
            p0 = p1;
            p1 = p2;
        }
        dp = n * (x * p1 - p0) / (x * x - 1.0L);
        rule.nodes[i] = static_cast<double>(x);
        rule.weights[i] = static_cast<double>(2.0L / ((1.0L - x * x) * dp * dp));
    }
    return rule;
}

}  // namespace

const GaussRule& gauss_legendre(std::size_t order) {
    constexpr std::size_t kMax = 64;
    if (order == 0 || order > kMax) throw std::invalid_argument("gauss_legendre: order must be in 1..64");
    static std::array<GaussRule, kMax + 1> rules;
    static std::array<std::once_flag, kMax + 1> flags;
    std::call_once(flags[order], [order] {
        if (order == 1) {
            rules[1] = GaussRule{{0.0}, {2.0}};
        } else {
            rules[order] = make_rule(order);
        }
    });
    return rules[order];
}

}  // namespace permadde::quad
