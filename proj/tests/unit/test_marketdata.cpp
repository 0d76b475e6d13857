#include <doctest.h>

#include <cmath>
#include <sstream>

#include "fixtures.hpp"
#include "g2pp/csv.hpp"
#include "g2pp/errors.hpp"
#include "g2pp/marketdata.hpp"

using namespace g2pp;

TEST_CASE("zero rates convert to discount factors") {
    std::istringstream in("maturity_years,zero_rate\n1,0.01\n10,0.01\n");
    const auto curve = load_curve(in);
    CHECK(curve.discount(10.0) == doctest::Approx(std::exp(-0.1)).epsilon(1e-15));
    CHECK(curve.discount(1.0) == doctest::Approx(std::exp(-0.01)).epsilon(1e-15));
}

TEST_CASE("negative short rates are accepted") {
    std::istringstream in("maturity_years,zero_rate\n0.25,-0.004\n10,0.004\n");
    const auto curve = load_curve(in);
    CHECK(curve.discount(0.25) == doctest::Approx(std::exp(0.001)).epsilon(1e-15));
    CHECK(curve.discount(0.25) > 1.0);
}

TEST_CASE("curve validation errors") {
    SUBCASE("out of order") {
        std::istringstream in("maturity_years,discount_factor\n2,0.98\n1,0.99\n");
        CHECK_THROWS_WITH_AS(load_curve(in), doctest::Contains("non-monotone maturities"), InputError);
    }
    SUBCASE("non-positive discount") {
        std::istringstream in("maturity_years,discount_factor\n1,0.99\n2,0\n");
        CHECK_THROWS_WITH_AS(load_curve(in), doctest::Contains("non-positive discount factor"), InputError);
    }
    SUBCASE("empty file") {
        std::istringstream in("");
        CHECK_THROWS_WITH_AS(load_curve(in), doctest::Contains("empty file"), InputError);
    }
    SUBCASE("header only") {
        std::istringstream in("maturity_years,discount_factor\n");
        CHECK_THROWS_WITH_AS(load_curve(in), doctest::Contains("empty file"), InputError);
    }
    SUBCASE("both value columns") {
        std::istringstream in("maturity_years,discount_factor,zero_rate\n1,0.99,0.01\n");
        CHECK_THROWS_AS(load_curve(in), InputError);
    }
    SUBCASE("bad number names the line") {
        std::istringstream in("maturity_years,discount_factor\n1,0.99\n2,abc\n");
        CHECK_THROWS_WITH_AS(load_curve(in, "c.csv"), doctest::Contains("c.csv:3"), InputError);
    }
    SUBCASE("discount factor too large") {
        CHECK_THROWS_AS(DiscountCurve::from_pillars({{1.0, 1.6}}), InputError);
    }
    SUBCASE("first maturity zero") {
        CHECK_THROWS_AS(DiscountCurve::from_pillars({{0.0, 1.0}, {1.0, 0.99}}), InputError);
    }
}

TEST_CASE("discount interpolation") {
    const auto curve = DiscountCurve::from_pillars({{1.0, 0.99}, {3.0, 0.95}});
    CHECK(curve.discount(0.0) == 1.0);
    CHECK(curve.discount(1.0) == 0.99);
    CHECK(curve.discount(3.0) == 0.95);
    CHECK(curve.discount(2.0) == doctest::Approx(std::exp((std::log(0.99) + std::log(0.95)) / 2)).epsilon(1e-15));
    CHECK_THROWS_AS((void)curve.discount(3.5), DomainError);
    CHECK_THROWS_AS((void)curve.discount(-0.1), DomainError);

    const auto ext = curve.with_extrapolation(true);
    const double fwd = std::log(0.99 / 0.95) / 2.0;
    CHECK(ext.discount(5.0) == doctest::Approx(0.95 * std::exp(-fwd * 2.0)).epsilon(1e-14));
}

TEST_CASE("forwards are flat between pillars") {
    const auto curve = fixtures::sloped_curve();
    const auto& pillars = curve.pillars();
    double t0 = 0.0;
    for (const auto& p : pillars) {
        const double f = curve.instantaneous_forward(0.5 * (t0 + p.maturity));
        const double h = (p.maturity - t0) / 7.0;
        for (int k = 1; k < 7; ++k) {
            const double u = t0 + k * h;
            const double fd = std::log(curve.discount(u - 1e-6 * h) / curve.discount(u + 1e-6 * h)) / (2e-6 * h);
            CHECK(fd == doctest::Approx(f).epsilon(1e-6));
        }
        t0 = p.maturity;
    }
}

TEST_CASE("spot rate") {
    const auto curve = DiscountCurve::from_pillars({{0.25, 1.001}, {10.0, std::exp(-0.2)}});
    CHECK(curve.spot_rate(10.0) == doctest::Approx(0.02).epsilon(1e-14));
    CHECK(curve.spot_rate(0.25) == doctest::Approx(-0.003998).epsilon(1e-3));
    CHECK(curve.spot_rate(0.25) == doctest::Approx(-std::log(1.001) / 0.25).epsilon(1e-15));
    CHECK_THROWS_AS((void)curve.spot_rate(0.0), DomainError);
    const auto unit = DiscountCurve::from_pillars({{1.0, 1.0}});
    CHECK(unit.spot_rate(1.0) == 0.0);
}

TEST_CASE("spot rate and discount are inverse at pillars") {
    const auto curve = fixtures::sloped_curve();
    for (const auto& p : curve.pillars()) {
        CHECK(std::abs(std::exp(-curve.spot_rate(p.maturity) * p.maturity) - p.discount) < 1e-12);
    }
}

TEST_CASE("curve csv round trip") {
    const auto curve = fixtures::sloped_curve();
    std::ostringstream out;
    write_curve(out, curve);
    std::istringstream in(out.str());
    const auto back = load_curve(in);
    REQUIRE(back.pillars().size() == curve.pillars().size());
    for (std::size_t i = 0; i < curve.pillars().size(); ++i) {
        CHECK(back.pillars()[i].maturity == curve.pillars()[i].maturity);
        CHECK(std::abs(back.pillars()[i].discount - curve.pillars()[i].discount) <= 1e-12);
    }
}

TEST_CASE("swaption csv") {
    std::istringstream in(
        "expiry_years,tenor_years,quote,quote_kind,strike\n"
        "# comment\n"
        "5,5,0.0051,normal_vol,\n"
        "7,10,0.012,price,0.01\n");
    const auto quotes = load_swaptions(in);
    REQUIRE(quotes.size() == 2);
    CHECK(quotes[0].kind == QuoteKind::normal_vol);
    CHECK_FALSE(quotes[0].strike.has_value());
    CHECK(quotes[1].kind == QuoteKind::price);
    CHECK(*quotes[1].strike == 0.01);

    std::ostringstream out;
    write_swaptions(out, quotes);
    std::istringstream again(out.str());
    const auto back = load_swaptions(again);
    REQUIRE(back.size() == 2);
    CHECK(back[0].quote == quotes[0].quote);
    CHECK(back[1].strike == quotes[1].strike);

    std::istringstream bad("expiry_years,tenor_years,quote,quote_kind\n5,5,0.01,black\n");
    CHECK_THROWS_WITH_AS(load_swaptions(bad, "s.csv"), doctest::Contains("s.csv:2"), InputError);
    std::istringstream negative("expiry_years,tenor_years,quote,quote_kind\n5,5,-0.01,price\n");
    CHECK_THROWS_AS(load_swaptions(negative), InputError);
}

TEST_CASE("forecast csv") {
    std::istringstream in("horizon_years,maturity_years,rate\n2,2.25,-0.003\n2,12,0.016\n");
    const auto f = load_forecasts(in);
    REQUIRE(f.size() == 2);
    CHECK(f[1].tenor() == 10.0);
    std::ostringstream out;
    write_forecasts(out, f);
    std::istringstream again(out.str());
    const auto back = load_forecasts(again);
    CHECK(back[0].rate == -0.003);
    std::istringstream bad("horizon_years,maturity_years,rate\n2,1,0.01\n");
    CHECK_THROWS_AS(load_forecasts(bad), InputError);
}

TEST_CASE("missing file names the path") {
    CHECK_THROWS_WITH_AS(load_curve_file("/nonexistent/curve.csv"), doctest::Contains("/nonexistent/curve.csv"),
                         InputError);
}

TEST_CASE("number formatting round trips") {
    for (double v : {0.1, -0.004, 1.0 / 3.0, 1e-300, 123456.789, std::exp(-0.78)}) {
        CHECK(csv::parse_real(csv::format(v), "x") == v);
    }
    CHECK_THROWS_AS(csv::parse_real("1.0x", "x"), InputError);
    CHECK_THROWS_AS(csv::parse_real("", "x"), InputError);
}
