#include "g2pp/simplex.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "g2pp/errors.hpp"

namespace g2pp {

namespace {

constexpr double kReflect = 1.0;
constexpr double kExpand = 2.0;
constexpr double kContract = 0.5;
constexpr double kShrink = 0.5;

std::vector<double> blend(const std::vector<double>& centroid, const std::vector<double>& worst,
                          double coefficient) {
    std::vector<double> out(centroid.size());
    for (std::size_t i = 0; i < out.size(); ++i) {
        out[i] = centroid[i] + coefficient * (centroid[i] - worst[i]);
    }
    return out;
}

}  // namespace

NelderMeadResult nelder_mead(const std::function<double(const std::vector<double>&)>& f,
                             std::vector<std::vector<double>> simplex,
                             const NelderMeadOptions& options) {
    require(!simplex.empty(), "nelder_mead: empty simplex");
    const std::size_t n = simplex.front().size();
    require(simplex.size() == n + 1, "nelder_mead: simplex needs n + 1 vertices");

    NelderMeadResult result;
    std::vector<double> values(n + 1);
    auto eval = [&](const std::vector<double>& x) {
        ++result.evaluations;
        const double v = f(x);
        return std::isnan(v) ? INFINITY : v;
    };
    for (std::size_t i = 0; i <= n; ++i) values[i] = eval(simplex[i]);

    std::vector<std::size_t> order(n + 1);
    auto sort_vertices = [&] {
        std::iota(order.begin(), order.end(), 0);
        std::stable_sort(order.begin(), order.end(),
                         [&](std::size_t l, std::size_t r) { return values[l] < values[r]; });
        std::vector<std::vector<double>> s(n + 1);
        std::vector<double> v(n + 1);
        for (std::size_t i = 0; i <= n; ++i) {
            s[i] = std::move(simplex[order[i]]);
            v[i] = values[order[i]];
        }
        simplex = std::move(s);
        values = std::move(v);
    };

    auto converged = [&] {
        double spread = values[n] - values[0];
        if (!(spread < options.tol_f)) return false;
        for (std::size_t i = 1; i <= n; ++i) {
            for (std::size_t k = 0; k < n; ++k) {
                if (std::abs(simplex[i][k] - simplex[0][k]) >= options.tol_x) return false;
            }
        }
        return true;
    };

    sort_vertices();
    while (true) {
        if (converged()) {
            result.converged = true;
            break;
        }
        if (result.iterations >= options.max_iter) break;
        ++result.iterations;

        std::vector<double> centroid(n, 0.0);
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t k = 0; k < n; ++k) centroid[k] += simplex[i][k];
        }
        for (auto& c : centroid) c /= static_cast<double>(n);

        const auto reflected = blend(centroid, simplex[n], kReflect);
        const double fr = eval(reflected);
        if (fr < values[0]) {
            const auto expanded = blend(centroid, simplex[n], kExpand);
            const double fe = eval(expanded);
            if (fe < fr) {
                simplex[n] = expanded;
                values[n] = fe;
            } else {
                simplex[n] = reflected;
                values[n] = fr;
            }
        } else if (fr < values[n - 1]) {
            simplex[n] = reflected;
            values[n] = fr;
        } else {
            const bool outside = fr < values[n];
            const auto contracted = blend(centroid, simplex[n], outside ? kContract : -kContract);
            const double fc = eval(contracted);
            if (fc < (outside ? fr : values[n])) {
                simplex[n] = contracted;
                values[n] = fc;
            } else {
                for (std::size_t i = 1; i <= n; ++i) {
                    for (std::size_t k = 0; k < n; ++k) {
                        simplex[i][k] = simplex[0][k] + kShrink * (simplex[i][k] - simplex[0][k]);
                    }
                    values[i] = eval(simplex[i]);
                }
            }
        }
        sort_vertices();
    }
    result.x = simplex[0];
    result.f = values[0];
    return result;
}

}  // namespace g2pp
