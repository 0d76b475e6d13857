#include <doctest.h>

#include <cmath>
#include <random>

#include "fixtures.hpp"
#include "g2pp/errors.hpp"
#include "g2pp/model.hpp"
#include "g2pp/simulate.hpp"

using namespace g2pp;

namespace {

// Var(int_0^T x + y) as a double integral of the factor covariances.
double variance_double_integral(const G2Params& p, double T, int n) {
    auto cov = [&](double u, double v) {
        const double m = std::min(u, v);
        const double cx = p.sigma * p.sigma / (2 * p.a) * std::exp(-p.a * (u + v)) * (std::exp(2 * p.a * m) - 1);
        const double cy = p.eta * p.eta / (2 * p.b) * std::exp(-p.b * (u + v)) * (std::exp(2 * p.b * m) - 1);
        const double cxy = p.rho * p.sigma * p.eta / (p.a + p.b) *
                           (std::exp(-p.a * u - p.b * v) + std::exp(-p.b * u - p.a * v)) *
                           (std::exp((p.a + p.b) * m) - 1);
        return cx + cy + cxy;
    };
    const double h = T / n;
    double s = 0.0;
    for (int i = 0; i <= n; ++i) {
        const double wi = (i == 0 || i == n) ? 0.5 : 1.0;
        for (int j = 0; j <= n; ++j) {
            const double wj = (j == 0 || j == n) ? 0.5 : 1.0;
            s += wi * wj * cov(i * h, j * h);
        }
    }
    return s * h * h;
}

}  // namespace

TEST_CASE("b_loading") {
    CHECK(b_loading(0.3, 4.0, 4.0) == 0.0);
    CHECK(b_loading(0.2997, 0.0, 10.0) == doctest::Approx(3.1699).epsilon(1e-3 / 3.1699));
    const double quad = fixtures::trapezoid([](double s) { return std::exp(-0.2997 * s); }, 0.0, 10.0, 100000);
    CHECK(b_loading(0.2997, 0.0, 10.0) == doctest::Approx(quad).epsilon(1e-9));
    CHECK(std::abs(b_loading(1e-8, 1.0, 6.0) - 5.0) < 1e-6);
    CHECK(b_loading(0.5, 0.0, 1000.0) <= 1.0 / 0.5);
}

TEST_CASE("b_loading derivative identity") {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> z(0.001, 3.0), t(0.0, 30.0), w(0.0, 30.0);
    for (int i = 0; i < 200; ++i) {
        const double zz = z(rng), tt = t(rng), TT = tt + w(rng);
        const double b_prime = -std::exp(-zz * (TT - tt));
        CHECK(std::abs(zz * b_loading(zz, tt, TT) - b_prime - 1.0) < 1e-12);
    }
}

TEST_CASE("integrated variance") {
    const auto p = fixtures::reference_params();
    CHECK(integrated_variance(p, 3.0, 3.0) == 0.0);
    CHECK(integrated_variance({0.3, 0.04, 0.0, 0.0, -0.5}, 0.0, 25.0) == 0.0);

    const double v = integrated_variance(p, 0.0, 10.0);
    CHECK(v > 0.0);
    CHECK(variance_double_integral(p, 10.0, 2000) == doctest::Approx(v).epsilon(1e-4));

    const double single = fixtures::trapezoid(
        [&](double s) {
            const double ba = b_loading(p.a, s, 10.0), bb = b_loading(p.b, s, 10.0);
            return p.sigma * p.sigma * ba * ba + p.eta * p.eta * bb * bb + 2 * p.rho * p.sigma * p.eta * ba * bb;
        },
        0.0, 10.0, 10000);
    CHECK(single == doctest::Approx(v).epsilon(1e-4));

    SUBCASE("other parameter sets") {
        for (const G2Params q : {G2Params{0.1, 0.05, 0.01, 0.012, 0.3}, G2Params{0.5, 0.5, 0.02, 0.01, -1.0},
                                 G2Params{0.02, 1.2, 0.005, 0.015, 1.0}}) {
            CHECK(variance_double_integral(q, 7.0, 1500) ==
                  doctest::Approx(integrated_variance(q, 0.0, 7.0)).epsilon(1e-4));
        }
    }
}

TEST_CASE("integrated variance is time homogeneous and monotone") {
    const auto p = fixtures::reference_params();
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(0.0, 40.0);
    for (int i = 0; i < 100; ++i) {
        const double t = u(rng), T = t + u(rng);
        CHECK(integrated_variance(p, t, T) == doctest::Approx(integrated_variance(p, 0.0, T - t)).epsilon(1e-12));
    }
    double prev = 0.0;
    for (double T = 0.0; T <= 60.0; T += 0.25) {
        const double v = integrated_variance(p, 0.0, T);
        CHECK(v >= prev);
        prev = v;
    }
}

TEST_CASE("integrated phi") {
    const auto curve = fixtures::flat_curve();
    const auto p = fixtures::reference_params();
    CHECK(integrated_phi(curve, p, 4.0, 4.0) == 0.0);
    CHECK(integrated_phi(curve, p, 0.0, 5.0) ==
          doctest::Approx(0.05 + 0.5 * integrated_variance(p, 0.0, 5.0)).epsilon(1e-14));
    const auto sloped = fixtures::sloped_curve();
    const G2Params zero{0.3, 0.04, 0.0, 0.0, 0.0};
    CHECK(integrated_phi(sloped, zero, 1.5, 12.0) ==
          doctest::Approx(std::log(sloped.discount(1.5) / sloped.discount(12.0))).epsilon(1e-14));
    CHECK_THROWS_AS((void)integrated_phi(curve, p, 0.0, 70.0), DomainError);
}

TEST_CASE("pointwise shift integrates to integrated phi") {
    const auto curve = fixtures::sloped_curve();
    const auto p = fixtures::reference_params();
    // Forwards jump at pillars; the midpoint rule never samples a pillar.
    const int n = 100000;
    const double h = 5.0 / n;
    double q = 0.0;
    for (int i = 0; i < n; ++i) q += shift_at(curve, p, (i + 0.5) * h) * h;
    CHECK(q == doctest::Approx(integrated_phi(curve, p, 0.0, 5.0)).epsilon(1e-7));
}

TEST_CASE("bond price") {
    const auto curve = fixtures::sloped_curve();
    const auto p = fixtures::reference_params();
    for (double T : {0.1, 0.25, 1.0, 3.3, 10.0, 45.0, 60.0}) {
        CHECK(bond_price(curve, p, {0.0, 0.0, 0.0}, T) == doctest::Approx(curve.discount(T)).epsilon(1e-13));
    }
    CHECK(bond_price(curve, p, {2.0, 0.01, -0.02}, 2.0) == 1.0);
    CHECK_THROWS_AS((void)bond_price(curve, p, {2.0, 0.0, 0.0}, 1.0), DomainError);
}

TEST_CASE("initial fit at every pillar") {
    const auto curve = fixtures::sloped_curve();
    for (const auto& p : {fixtures::reference_params(), G2Params{}, G2Params{0.5, 0.5, 0.02, 0.02, -1.0}}) {
        for (const auto& pillar : curve.pillars()) {
            CHECK(std::abs(model_rate(curve, p, {0.0, 0.0, 0.0}, pillar.maturity) - curve.spot_rate(pillar.maturity)) <
                  1e-12);
        }
    }
}

TEST_CASE("model rate") {
    const auto flat0 = DiscountCurve::flat(0.0, 30.0);
    CHECK(model_rate(flat0, {0.3, 0.04, 0.0, 0.0, 0.0}, {1.0, 0.0, 0.0}, 5.0) == doctest::Approx(0.0));
    const auto curve = fixtures::flat_curve();
    const auto p = fixtures::reference_params();
    const FactorState s{1.0, 0.01, -0.005};
    CHECK(model_rate(curve, p, s, 6.0) == doctest::Approx(-std::log(bond_price(curve, p, s, 6.0)) / 5.0).epsilon(1e-15));
    CHECK_THROWS_AS((void)model_rate(curve, p, s, 1.0), InputError);
}

TEST_CASE("bond price matches Monte Carlo conditional expectation") {
    const auto curve = fixtures::flat_curve();
    const auto p = fixtures::reference_params();
    const FactorState s0{1.0, 0.01, -0.005};
    const double T = 6.0;
    const double dt = 1.0 / 12.0;
    const int steps = 60;
    // Columns of the transition Cholesky factor.
    const auto c1 = step_exact(p, nullptr, {0, 0, 0}, dt, 1.0, 0.0);
    const auto c2 = step_exact(p, nullptr, {0, 0, 0}, dt, 0.0, 1.0);
    const double ea = std::exp(-p.a * dt), eb = std::exp(-p.b * dt);
    const double phi = integrated_phi(curve, p, s0.t, T);

    std::mt19937_64 rng(2024);
    std::normal_distribution<double> normal;
    const int n = 1000000;
    double sum = 0.0, sum2 = 0.0;
    for (int i = 0; i < n; ++i) {
        double x = s0.x, y = s0.y;
        double integral = 0.5 * (x + y);
        for (int k = 0; k < steps; ++k) {
            const double z1 = normal(rng), z2 = normal(rng);
            x = x * ea + c1.x * z1;
            y = y * eb + c1.y * z1 + c2.y * z2;
            integral += (k + 1 == steps ? 0.5 : 1.0) * (x + y);
        }
        const double v = std::exp(-phi - integral * dt);
        sum += v;
        sum2 += v * v;
    }
    const double mean = sum / n;
    const double se = std::sqrt((sum2 / n - mean * mean) / n);
    const double exact = bond_price(curve, p, s0, T);
    MESSAGE("MC " << mean << " +- " << se << " vs " << exact);
    CHECK(std::abs(mean - exact) < 3.0 * se);
}

TEST_CASE("parameter validation") {
    CHECK_THROWS_AS(G2Params({0.0, 0.1, 0.01, 0.01, 0.0}).validate(), InputError);
    CHECK_THROWS_AS(G2Params({0.1, 0.1, -0.01, 0.01, 0.0}).validate(), InputError);
    CHECK_THROWS_AS(G2Params({0.1, 0.1, 0.01, 0.01, 1.01}).validate(), InputError);
    CHECK_NOTHROW(G2Params({0.1, 0.1, 0.0, 0.0, -1.0}).validate());
}
