#pragma once

#include <cstddef>
#include <vector>

namespace g2pp::quadrature {

struct Rule {
    std::vector<double> nodes;    // on [-1, 1]
    std::vector<double> weights;
};

/// n-point Gauss-Legendre rule, computed once per n and cached.
const Rule& gauss_legendre(std::size_t n);

/// Integrates f over [lo, hi] with an n-point Gauss-Legendre rule.
template <class F>
double integrate(F&& f, double lo, double hi, std::size_t n) {
    const Rule& rule = gauss_legendre(n);
    const double half = 0.5 * (hi - lo);
    const double mid = 0.5 * (hi + lo);
    double sum = 0.0;
    for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
        sum += rule.weights[i] * f(mid + half * rule.nodes[i]);
    }
    return sum * half;
}

}  // namespace g2pp::quadrature
