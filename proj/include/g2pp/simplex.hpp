#pragma once

#include <cstddef>
#include <functional>
#include <vector>

namespace g2pp {

struct NelderMeadOptions {
    std::size_t max_iter = 5000;
    /// Converged when every vertex lies within tol_x (max-norm) of the best
    /// vertex and the objective spread across vertices is below tol_f.
    double tol_x = 1e-8;
    double tol_f = 1e-10;
};

struct NelderMeadResult {
    std::vector<double> x;
    double f = 0.0;
    std::size_t iterations = 0;
    std::size_t evaluations = 0;
    bool converged = false;
};

/// Downhill simplex minimization from an explicit initial simplex of n + 1
/// vertices. Standard coefficients (reflect 1, expand 2, contract 1/2,
/// shrink 1/2). Deterministic: ties are broken by vertex order.
NelderMeadResult nelder_mead(const std::function<double(const std::vector<double>&)>& f,
                             std::vector<std::vector<double>> simplex,
                             const NelderMeadOptions& options = {});

}  // namespace g2pp
