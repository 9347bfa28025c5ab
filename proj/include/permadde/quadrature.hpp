#pragma once

#include <cstddef>
#include <vector>

namespace permadde::quad {

/// Gauss-Legendre rule on [-1, 1].
struct GaussRule {
    std::vector<double> nodes;
    std::vector<double> weights;
};

/// Cached rule of the given order (1..64). Thread-safe.
const GaussRule& gauss_legendre(std::size_t order);

/// Composite Gauss-Legendre over [a, b] with `panels` equal panels.
template <class F>
double composite(F&& f, double a, double b, std::size_t panels = 8, std::size_t order = 4) {
    if (!(b > a)) return 0.0;
    const GaussRule& rule = gauss_legendre(order);
    const double width = (b - a) / static_cast<double>(panels);
    const double half = 0.5 * width;
    long double acc = 0.0L;
    for (std::size_t p = 0; p < panels; ++p) {
        const double mid = a + (static_cast<double>(p) + 0.5) * width;
        for (std::size_t q = 0; q < rule.nodes.size(); ++q) {
            acc += static_cast<long double>(rule.weights[q]) * f(mid + half * rule.nodes[q]);
        }
    }
    return static_cast<double>(acc * half);
}

}  // namespace permadde::quad
