#pragma once

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <string>

#include "g2pp/marketdata.hpp"
#include "g2pp/model.hpp"

namespace fixtures {

// Calibrated at 31.12.2019.
inline g2pp::G2Params reference_params() { return {0.2997, 0.0407, 0.0114, 0.0114, -0.9998}; }

inline g2pp::DiscountCurve flat_curve(double rate = 0.01, double last = 60.0) {
    return g2pp::DiscountCurve::flat(rate, last);
}

inline g2pp::DiscountCurve sloped_curve() {
    return g2pp::DiscountCurve::from_pillars({{0.25, std::exp(0.001)},
                                              {1.0, std::exp(-0.002)},
                                              {2.0, std::exp(-0.006)},
                                              {5.0, std::exp(-0.03)},
                                              {10.0, std::exp(-0.08)},
                                              {20.0, std::exp(-0.22)},
                                              {30.0, std::exp(-0.36)},
                                              {60.0, std::exp(-0.78)}});
}

// Trapezoid rule with n intervals.
template <class F>
double trapezoid(F&& f, double lo, double hi, int n) {
    const double h = (hi - lo) / n;
    double s = 0.5 * (f(lo) + f(hi));
    for (int i = 1; i < n; ++i) s += f(lo + i * h);
    return s * h;
}

inline std::filesystem::path temp_dir(const std::string& name) {
    auto dir = std::filesystem::temp_directory_path() / ("g2pp_test_" + name);
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

}  // namespace fixtures
