#include <doctest.h>

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "fixtures.hpp"
#include "g2pp/backtest.hpp"
#include "g2pp/errors.hpp"

using namespace g2pp;

namespace {

const std::string kData = G2PP_TEST_DATA;

std::string slurp(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

std::vector<RateForecast> forecasts_2016() {
    return {{2.0, 2.25, -0.003}, {2.0, 12.0, 0.016}, {40.0, 40.25, 0.0163}, {40.0, 50.0, 0.0263}};
}

}  // namespace

TEST_CASE("projection grid and spot rates at horizon zero") {
    const auto curve = fixtures::sloped_curve();
    ProjectionGrid grid;
    grid.horizon_years = 40.0;
    const auto rows = project(curve.with_extrapolation(true), fixtures::reference_params(), PremiumSpec::constant(0, 0), grid);
    CHECK(rows.size() == 481 * 3);
    for (std::size_t i = 0; i < 3; ++i) {
        CHECK(rows[i].horizon_years == 0.0);
        CHECK(rows[i].expected_q == doctest::Approx(curve.spot_rate(rows[i].tenor_years)).epsilon(1e-13));
    }
    for (const auto& r : rows) CHECK(r.expected_p == r.expected_q);
    CHECK(rows.back().horizon_years == doctest::Approx(40.0).epsilon(1e-15));

    grid.horizon_years = 45.0;
    CHECK_THROWS_AS(project(curve, fixtures::reference_params(), PremiumSpec::constant(0, 0), grid), DomainError);
    grid.step_years = 0.07;
    CHECK_THROWS_AS(grid.validate(), InputError);
}

TEST_CASE("positive constant premium lifts real-world expectations") {
    const auto curve = fixtures::flat_curve();
    const auto rows = project(curve, fixtures::reference_params(), PremiumSpec::constant(0.002, 0.003));
    for (const auto& r : rows) {
        if (r.horizon_years >= 5.0) CHECK(r.expected_p > r.expected_q);
    }
}

TEST_CASE("step premium crosses the risk-neutral expectation after tau") {
    const auto curve = fixtures::flat_curve();
    const auto p = fixtures::reference_params();
    const auto spec = PremiumSpec::step(0.004, 0.003, -0.003, -0.004, 2.0);
    ProjectionGrid grid;
    grid.tenors = {10.0};
    const auto rows = project(curve, p, spec, grid);
    bool above_at_tau = false, below_at_end = false;
    std::size_t crossings = 0;
    double prev = 0.0;
    for (const auto& r : rows) {
        const double gap = r.expected_p - r.expected_q;
        if (std::abs(r.horizon_years - 2.0) < 1e-9) above_at_tau = gap > 0.0;
        if (r.horizon_years > 2.0 && prev > 0.0 && gap <= 0.0) ++crossings;
        if (r.horizon_years > 2.0 - 1e-9) prev = gap;
        below_at_end = gap < 0.0;
    }
    CHECK(above_at_tau);
    CHECK(below_at_end);
    CHECK(crossings == 1);
}

TEST_CASE("risk premium trajectories") {
    const auto curve = fixtures::flat_curve();
    const auto p = fixtures::reference_params();
    const auto fc = forecasts_2016();
    const std::vector<RateForecast> short_fc(fc.begin(), fc.begin() + 2);
    const std::vector<NamedSpec> specs{{"constant", calibrate_p(curve, p, PremiumKind::constant, short_fc)},
                                       {"step", calibrate_p(curve, p, PremiumKind::step, fc, 2.0)},
                                       {"linear", calibrate_p(curve, p, PremiumKind::linear, fc, 2.0)}};
    const auto rows = rp_trajectory(p, specs);
    REQUIRE(rows.size() == 481 * 3);
    for (std::size_t i = 0; i < 3; ++i) {
        CHECK(rows[i].rp_x == 0.0);
        CHECK(rows[i].rp_y == 0.0);
    }
    for (std::size_t k = 0; k < rows.size(); k += 3) {
        const auto& c = rows[k];
        const auto& s = rows[k + 1];
        CHECK(s.rp_total == doctest::Approx(s.rp_x + s.rp_y).epsilon(1e-15));
        if (c.t <= 2.0 + 1e-12) {
            CHECK(s.rp_x == doctest::Approx(c.rp_x).epsilon(1e-9));
            CHECK(s.rp_y == doctest::Approx(c.rp_y).epsilon(1e-9));
        }
        if (std::abs(c.t - 2.0) < 1e-12) {
            const auto& l = rows[k + 2];
            CHECK(std::abs(l.rp_x - c.rp_x) < 1e-9);
            CHECK(std::abs(l.rp_y - c.rp_y) < 1e-9);
        }
    }
}

TEST_CASE("emitted tables re-ingest losslessly") {
    const auto curve = fixtures::flat_curve();
    const auto p = fixtures::reference_params();
    const auto spec = calibrate_p(curve, p, PremiumKind::linear, forecasts_2016(), 2.0);

    ProjectionGrid grid;
    grid.horizon_years = 5.0;
    const auto rows = project(curve, p, spec, grid);
    std::stringstream s1;
    write_projection(s1, rows);
    const auto back = read_projection(s1);
    REQUIRE(back.size() == rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        CHECK(back[i].horizon_years == rows[i].horizon_years);
        CHECK(back[i].expected_q == rows[i].expected_q);
        CHECK(back[i].expected_p == rows[i].expected_p);
    }

    const std::vector<NamedSpec> named{{"linear", spec}};
    const auto rp = rp_trajectory(p, named, 0.25, 10.0);
    std::stringstream s2;
    write_rp_trajectory(s2, rp);
    const auto rp_back = read_rp_trajectory(s2);
    REQUIRE(rp_back.size() == rp.size());
    for (std::size_t i = 0; i < rp.size(); ++i) {
        CHECK(rp_back[i].variant == "linear");
        CHECK(rp_back[i].rp_x == rp[i].rp_x);
        CHECK(rp_back[i].rp_total == rp[i].rp_total);
    }

    std::stringstream s3;
    write_params(s3, {p, 5.25e-14});
    const auto rec = read_params(s3);
    CHECK(rec.params == p);
    CHECK(rec.objective == 5.25e-14);
    std::stringstream s4;
    write_params(s4, {p, std::nullopt});
    CHECK_FALSE(read_params(s4).objective.has_value());

    const std::vector<PremiumSpec> specs{PremiumSpec::constant(0.001, -0.002), spec};
    std::stringstream s5;
    write_premiums(s5, specs);
    const auto sp = read_premiums(s5);
    REQUIRE(sp.size() == 2);
    CHECK(sp[0].kind == PremiumKind::constant);
    CHECK(sp[1].kind == PremiumKind::linear);
    CHECK(sp[1].d_x == spec.d_x);
    CHECK(sp[1].l_y == spec.l_y);
    CHECK(sp[1].tau == spec.tau);
    CHECK(sp[1].m_x == spec.m_x);
}

TEST_CASE("table input errors") {
    std::istringstream bad_params("a,b,sigma,eta,rho\n0.1,0.05,0.01,0.01,-1.5\n");
    CHECK_THROWS_AS(read_params(bad_params), InputError);
    std::istringstream two_rows("a,b,sigma,eta,rho\n0.1,0.05,0.01,0.01,0\n0.1,0.05,0.01,0.01,0\n");
    CHECK_THROWS_AS(read_params(two_rows), InputError);
    std::istringstream no_tau("kind,d_x,d_y,l_x,l_y\nstep,0.01,0.01,0,0\n");
    CHECK_THROWS_AS(read_premiums(no_tau), InputError);
    std::istringstream bad_kind("kind,d_x,d_y,l_x,l_y,tau_years\nwavy,0.01,0.01,0,0,2\n");
    CHECK_THROWS_WITH_AS(read_premiums(bad_kind, "p.csv"), doctest::Contains("p.csv:2"), InputError);
    CHECK_THROWS_AS(read_params_file("/nonexistent/params.csv"), InputError);
}

TEST_CASE("average of a rate history") {
    std::istringstream in("date,rate\n2019-01-31,0.01\n2019-02-28,0.02\n2019-03-31,0.06\n");
    const auto r = average_column(in, "rate");
    CHECK(r.count == 3);
    CHECK(r.mean == doctest::Approx(0.03).epsilon(1e-15));
    std::istringstream header_only("date,rate\n");
    CHECK_THROWS_AS(average_column(header_only, "rate"), InputError);
    std::istringstream wrong("date,level\n2019-01-31,0.01\n");
    CHECK_THROWS_AS(average_column(wrong, "rate"), InputError);
}

TEST_CASE("dates") {
    CHECK(date_key("2019-12-31") == 20191231);
    CHECK(date_key("31.12.2019") == 20191231);
    CHECK_THROWS_AS(date_key("2019/12/31"), InputError);
    CHECK_THROWS_AS(date_key("2019-13-01"), InputError);
    CHECK_THROWS_AS(date_key("31.12.19"), InputError);
}

TEST_CASE("forecast schedule manifest") {
    const auto m = load_manifest(kData + "/horizons_manifest.ini");
    REQUIRE(m.snapshots.size() == 12);
    std::set<int> horizons;
    for (const auto& s : m.snapshots) {
        horizons.insert(s.tau_months);
        REQUIRE(s.forecasts.size() == 4);
        CHECK(s.forecasts[0].horizon_years == doctest::Approx(s.tau_months / 12.0).epsilon(1e-15));
        CHECK(s.forecasts[3].horizon_years == 40.0);
        CHECK(s.forecasts[3].maturity_years == 50.0);
        CHECK(s.params.has_value());
    }
    CHECK(horizons == std::set<int>{15, 18, 21, 24});
    CHECK(m.snapshots.front().date == "31.12.2016");
    CHECK(m.snapshots.front().forecasts[0].rate == doctest::Approx(-0.003).epsilon(1e-15));
    CHECK(m.snapshots.front().forecasts[3].rate == doctest::Approx(0.0263).epsilon(1e-15));
    CHECK(m.snapshots.back().date == "30.09.2019");
    CHECK(m.snapshots.back().tau_months == 15);
    CHECK(m.snapshots.back().forecasts[1].rate == doctest::Approx(0.01).epsilon(1e-15));
    CHECK(m.kinds.size() == 3);

    const auto r = run_backtest(m);
    CHECK(r.all_ok());
    for (const auto& s : r.snapshots) {
        for (std::size_t k = 1; k < 3; ++k) {
            // Step and linear hit the long 10-year forecast exactly.
            CHECK(s.long_rates[k] == doctest::Approx(m.snapshots[&s - &r.snapshots[0]].forecasts[3].rate).epsilon(1e-10));
        }
    }
}

TEST_CASE("manifest errors") {
    const auto parse = [](const std::string& text) {
        std::istringstream in(text);
        return parse_manifest(in, "m.ini", "/data");
    };
    const std::string snap = "curve = c.csv\nparams = 0.3,0.04,0.01,0.01,-0.5\ntau_months = 24\n"
                             "forecast = 2,2.25,0.01\nforecast = 2,12,0.02\n";
    const auto ok = parse("kinds = step\n[snapshot 2019-12-31]\n" + snap);
    CHECK(ok.snapshots[0].curve_path == "/data/c.csv");
    CHECK(ok.kinds == std::vector<PremiumKind>{PremiumKind::step});

    CHECK_THROWS_WITH_AS(parse("[snapshot 2019-12-31]\n" + snap + "[snapshot 2019-09-30]\n" + snap),
                         doctest::Contains("increasing date order"), InputError);
    CHECK_THROWS_WITH_AS(parse("[snapshot 2019-12-31]\n" + snap + "colour = red\n"), doctest::Contains("m.ini:7"),
                         InputError);
    CHECK_THROWS_AS(parse("bogus = 1\n[snapshot 2019-12-31]\n" + snap), InputError);
    CHECK_THROWS_AS(parse("[snapshot 2019-12-31]\nparams = 0.3,0.04,0.01,0.01,-0.5\ntau_months = 2\n"
                          "forecast = 2,2.25,0.01\n"),
                    InputError);
    CHECK_THROWS_AS(parse("[snapshot 2019-12-31]\n" + snap + "swaptions = s.csv\n"), InputError);
    CHECK_THROWS_AS(parse("[snapshot 2019-12-31]\ncurve = c.csv\nparams = 0.3,0.04,0.01,0.01,-0.5\n"
                          "tau_months = 24\n"),
                    InputError);
    CHECK_THROWS_AS(parse("[snapshot yesterday]\n" + snap), InputError);
    CHECK_THROWS_AS(parse("[snap 2019-12-31]\n" + snap), InputError);
    CHECK_THROWS_AS(parse("kinds = step\n"), InputError);
    CHECK_THROWS_AS(parse("[snapshot 2019-12-31]\n" + snap + "forecast = 2,1,0.01\n"), InputError);
}

TEST_CASE("identical snapshots give zero dispersion") {
    const auto dir = fixtures::temp_dir("bt_same");
    {
        std::ofstream c(dir / "curve.csv");
        write_curve(c, fixtures::flat_curve());
        std::ofstream m(dir / "manifest.ini");
        for (int q = 0; q < 12; ++q) {
            m << "[snapshot " << 2017 + q / 4 << "-0" << 2 * (q % 4) + 1 << "-15]\n"
              << "curve = curve.csv\nparams = 0.2997,0.0407,0.0114,0.0114,-0.9998\ntau_months = 24\n"
              << "forecast = 2,2.25,-0.003\nforecast = 2,12,0.016\nforecast = 40,40.25,0.0163\n"
              << "forecast = 40,50,0.0263\n";
        }
    }
    const auto r = run_backtest(load_manifest((dir / "manifest.ini").string()));
    CHECK(r.all_ok());
    CHECK(r.exit_code() == 0);
    for (const auto& line : r.stability) {
        CHECK(line.count == 12);
        CHECK(line.dispersion() == 0.0);
    }
}

TEST_CASE("perturbed short ends: long-horizon stability") {
    const auto r = run_backtest(load_manifest(kData + "/stability/manifest.ini"));
    REQUIRE(r.all_ok());
    const double c = r.line(PremiumKind::constant).dispersion();
    CHECK(c > 0.0);
    CHECK(r.line(PremiumKind::step).dispersion() < c);
    CHECK(r.line(PremiumKind::linear).dispersion() < c);
}

TEST_CASE("failed snapshots are recorded and the run continues") {
    const auto dir = fixtures::temp_dir("bt_fail");
    {
        std::ofstream c(dir / "curve.csv");
        write_curve(c, fixtures::flat_curve());
        std::ofstream m(dir / "manifest.ini");
        m << "kinds = constant,step\n";
        for (const char* date : {"2019-03-31", "2019-06-30", "2019-09-30"}) {
            m << "[snapshot " << date << "]\n"
              << "curve = " << (std::string(date) == "2019-06-30" ? "missing.csv" : "curve.csv") << '\n'
              << "params = 0.2997,0.0407,0.0114,0.0114,-0.9998\ntau_months = 24\n"
              << "forecast = 2,2.25,-0.003\nforecast = 2,12,0.016\nforecast = 40,40.25,0.0163\n"
              << "forecast = 40,50,0.0263\n";
        }
    }
    const auto out = dir / "out";
    const auto r = run_backtest(load_manifest((dir / "manifest.ini").string()), out.string());
    REQUIRE(r.snapshots.size() == 3);
    CHECK(r.snapshots[0].ok);
    CHECK_FALSE(r.snapshots[1].ok);
    CHECK(r.snapshots[1].error.find("missing.csv") != std::string::npos);
    CHECK(r.snapshots[2].ok);
    CHECK(r.exit_code() == 2);
    CHECK(r.line(PremiumKind::step).count == 2);
    const auto status = slurp(out / "status.csv");
    CHECK(status.find("2019-06-30,failed,") != std::string::npos);
    CHECK(std::filesystem::exists(out / "2019-09-30" / "projection_step.csv"));
    CHECK_FALSE(std::filesystem::exists(out / "2019-06-30"));
}

TEST_CASE("backtest outputs are byte-identical across runs") {
    const auto dir = fixtures::temp_dir("bt_det");
    const auto m = load_manifest(kData + "/stability/manifest.ini");
    Manifest small = m;
    small.snapshots.resize(3);
    small.grid.horizon_years = 10.0;
    (void)run_backtest(small, (dir / "a").string());
    (void)run_backtest(small, (dir / "b").string());
    std::size_t files = 0;
    for (const auto& entry : std::filesystem::recursive_directory_iterator(dir / "a")) {
        if (!entry.is_regular_file()) continue;
        const auto rel = std::filesystem::relative(entry.path(), dir / "a");
        CHECK(slurp(entry.path()) == slurp(dir / "b" / rel));
        ++files;
    }
    CHECK(files == 3 + 3 * 6);
}
