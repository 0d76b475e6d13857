#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <algorithm>

#include "g2pp/backtest.hpp"
#include "g2pp/calibration.hpp"
#include "g2pp/csv.hpp"
#include "g2pp/errors.hpp"
#include "g2pp/measure.hpp"
#include "g2pp/pricing.hpp"
#include "g2pp/simulate.hpp"

namespace py = pybind11;
using namespace g2pp;

namespace {

std::vector<RateForecast> to_forecasts(const std::vector<std::tuple<double, double, double>>& rows) {
    std::vector<RateForecast> out;
    for (const auto& [h, m, r] : rows) out.push_back({h, m, r});
    return out;
}

py::array_t<double> matrix(const std::vector<double>& values, std::size_t rows, std::size_t cols) {
    py::array_t<double> a({rows, cols});
    std::copy(values.begin(), values.end(), a.mutable_data());
    return a;
}

py::dict bond_check_dict(const BondCheckReport& r) {
    py::dict d;
    d["measure"] = to_string(r.measure);
    d["maturity"] = r.maturity;
    d["n_paths"] = r.n_paths;
    d["estimate"] = r.estimate;
    d["std_error"] = r.std_error;
    d["target"] = r.target;
    d["richardson_bias"] = r.richardson_bias;
    d["z_score"] = r.z_score();
    return d;
}

SimConfig sim_config(std::size_t n_paths, double horizon, double step, const std::string& measure,
                     std::uint64_t seed, bool antithetic) {
    SimConfig c;
    c.n_paths = n_paths;
    c.horizon_years = horizon;
    c.step_years = step;
    c.measure = parse_measure(measure);
    c.seed = seed;
    c.antithetic = antithetic;
    return c;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Two-factor Gaussian short-rate engine";

    const auto input_error = py::register_exception<InputError>(m, "InputError", PyExc_ValueError);
    py::register_exception<DomainError>(m, "DomainError", input_error.ptr());
    py::register_exception<NumericError>(m, "NumericError", PyExc_ArithmeticError);

    py::class_<G2Params>(m, "G2Params")
        .def(py::init([](double a, double b, double sigma, double eta, double rho) {
                 G2Params p{a, b, sigma, eta, rho};
                 p.validate();
                 return p;
             }),
             py::arg("a"), py::arg("b"), py::arg("sigma"), py::arg("eta"), py::arg("rho"))
        .def_readwrite("a", &G2Params::a)
        .def_readwrite("b", &G2Params::b)
        .def_readwrite("sigma", &G2Params::sigma)
        .def_readwrite("eta", &G2Params::eta)
        .def_readwrite("rho", &G2Params::rho)
        .def("__eq__", [](const G2Params& l, const G2Params& r) { return l == r; })
        .def("__repr__", [](const G2Params& p) {
            return "G2Params(a=" + csv::format(p.a) + ", b=" + csv::format(p.b) + ", sigma=" + csv::format(p.sigma) +
                   ", eta=" + csv::format(p.eta) + ", rho=" + csv::format(p.rho) + ")";
        });

    py::class_<DiscountCurve>(m, "DiscountCurve")
        .def_static("flat", &DiscountCurve::flat, py::arg("rate"), py::arg("last_maturity"),
                    py::arg("extrapolate") = false)
        .def_static(
            "from_pillars",
            [](const std::vector<std::pair<double, double>>& pillars, bool extrapolate) {
                std::vector<DiscountCurve::Pillar> p;
                for (const auto& [t, df] : pillars) p.push_back({t, df});
                return DiscountCurve::from_pillars(std::move(p), extrapolate);
            },
            py::arg("pillars"), py::arg("extrapolate") = false)
        .def_static("load", &load_curve_file, py::arg("path"), py::arg("extrapolate") = false)
        .def("discount", &DiscountCurve::discount)
        .def("spot_rate", &DiscountCurve::spot_rate)
        .def_property_readonly("last_maturity", &DiscountCurve::last_maturity)
        .def("with_extrapolation", &DiscountCurve::with_extrapolation);

    m.def("bond_price",
          [](const DiscountCurve& c, const G2Params& p, double t, double x, double y, double T) {
              return bond_price(c, p, {t, x, y}, T);
          },
          py::arg("curve"), py::arg("params"), py::arg("t"), py::arg("x"), py::arg("y"), py::arg("maturity"));
    m.def("integrated_variance", &integrated_variance, py::arg("params"), py::arg("t"), py::arg("T"));

    m.def(
        "price_swaption",
        [](const DiscountCurve& c, const G2Params& p, double expiry, double tenor, std::optional<double> strike,
           bool payer, int payments_per_year) {
            auto spec = make_swaption(expiry, tenor, 0.0, payer ? SwaptionType::payer : SwaptionType::receiver,
                                      payments_per_year);
            spec.fixed_rate = strike ? *strike : atm_forward_swap_rate(c, spec);
            return price_swaption_g2(c, p, spec);
        },
        py::arg("curve"), py::arg("params"), py::arg("expiry"), py::arg("tenor"), py::arg("strike") = py::none(),
        py::arg("payer") = true, py::arg("payments_per_year") = 1,
        "European swaption price; strike defaults to the forward swap rate.");

    m.def(
        "calibrate_q",
        [](const DiscountCurve& c, const std::vector<std::tuple<double, double, double, std::string>>& quotes,
           const G2Params& start, std::size_t restarts) {
            std::vector<SwaptionQuote> q;
            for (const auto& [e, t, v, kind] : quotes) q.push_back({e, t, v, parse_quote_kind(kind), std::nullopt});
            SimplexConfig config;
            config.start = start;
            config.restarts = restarts;
            const auto r = calibrate_q(c, q, config);
            py::dict d;
            d["params"] = r.params;
            d["objective"] = r.objective;
            d["iterations"] = r.iterations;
            d["evaluations"] = r.evaluations;
            d["converged"] = r.converged;
            d["restarts"] = r.restarts_used;
            d["warnings"] = r.warnings;
            return d;
        },
        py::arg("curve"), py::arg("quotes"), py::arg("start") = SimplexConfig{}.start, py::arg("restarts") = 5,
        "quotes: (expiry, tenor, quote, 'price' | 'normal_vol') tuples.");

    py::class_<PremiumSpec>(m, "PremiumSpec")
        .def_static("constant", &PremiumSpec::constant, py::arg("d_x"), py::arg("d_y"))
        .def_static("step", &PremiumSpec::step, py::arg("d_x"), py::arg("d_y"), py::arg("l_x"), py::arg("l_y"),
                    py::arg("tau"))
        .def_static("linear", &PremiumSpec::linear, py::arg("d_x"), py::arg("d_y"), py::arg("l_x"), py::arg("l_y"),
                    py::arg("tau"))
        .def_property_readonly("kind", [](const PremiumSpec& s) { return std::string(to_string(s.kind)); })
        .def_readonly("d_x", &PremiumSpec::d_x)
        .def_readonly("d_y", &PremiumSpec::d_y)
        .def_readonly("l_x", &PremiumSpec::l_x)
        .def_readonly("l_y", &PremiumSpec::l_y)
        .def_readonly("tau", &PremiumSpec::tau);

    m.def(
        "calibrate_p",
        [](const DiscountCurve& c, const G2Params& p, const std::string& kind,
           const std::vector<std::tuple<double, double, double>>& forecasts, double tau) {
            return calibrate_p(c, p, parse_premium_kind(kind), to_forecasts(forecasts), tau);
        },
        py::arg("curve"), py::arg("params"), py::arg("kind"), py::arg("forecasts"), py::arg("tau") = 0.0,
        "forecasts: (horizon, maturity, rate) tuples.");
    m.def("rp_x", &rp_x, py::arg("params"), py::arg("spec"), py::arg("t"));
    m.def("rp_y", &rp_y, py::arg("params"), py::arg("spec"), py::arg("t"));
    m.def("expected_rate_q", &expected_rate_q, py::arg("curve"), py::arg("params"), py::arg("t"), py::arg("T"));
    m.def("expected_rate_p", &expected_rate_p, py::arg("curve"), py::arg("params"), py::arg("spec"), py::arg("t"),
          py::arg("T"));

    m.def(
        "project",
        [](const DiscountCurve& c, const G2Params& p, const PremiumSpec& spec, std::vector<double> tenors,
           double horizon, double step) {
            ProjectionGrid grid;
            grid.tenors = std::move(tenors);
            grid.horizon_years = horizon;
            grid.step_years = step;
            const auto rows = project(c, p, spec, grid);
            std::vector<double> flat;
            for (const auto& r : rows) flat.insert(flat.end(), {r.horizon_years, r.tenor_years, r.expected_q, r.expected_p});
            return matrix(flat, rows.size(), 4);
        },
        py::arg("curve"), py::arg("params"), py::arg("spec"), py::arg("tenors") = std::vector<double>{0.25, 10.0, 20.0},
        py::arg("horizon") = 40.0, py::arg("step") = 1.0 / 12.0,
        "Rows of (horizon, tenor, expected_q, expected_p).");

    m.def(
        "simulate",
        [](const G2Params& p, std::optional<PremiumSpec> premium, std::size_t n_paths, double horizon, double step,
           const std::string& measure, std::uint64_t seed, bool antithetic) {
            const auto set = simulate(p, premium, sim_config(n_paths, horizon, step, measure, seed, antithetic));
            py::array_t<double> times(static_cast<py::ssize_t>(set.times.size()));
            std::copy(set.times.begin(), set.times.end(), times.mutable_data());
            return py::make_tuple(times, matrix(set.x_paths, set.n_paths(), set.n_times()),
                                  matrix(set.y_paths, set.n_paths(), set.n_times()));
        },
        py::arg("params"), py::arg("premium") = py::none(), py::arg("n_paths") = 1000, py::arg("horizon") = 10.0,
        py::arg("step") = 1.0 / 12.0, py::arg("measure") = "Q", py::arg("seed") = 42, py::arg("antithetic") = false,
        "Returns (times, x, y) with x and y of shape (n_paths, n_times).");

    m.def(
        "mc_bond_check",
        [](const DiscountCurve& c, const G2Params& p, std::optional<PremiumSpec> premium, double maturity,
           std::size_t n_paths, double step, const std::string& measure, std::uint64_t seed, bool antithetic) {
            const auto config = sim_config(n_paths, maturity, step, measure, seed, antithetic);
            return bond_check_dict(mc_bond_check(c, p, premium, config, maturity));
        },
        py::arg("curve"), py::arg("params"), py::arg("premium") = py::none(), py::arg("maturity") = 10.0,
        py::arg("n_paths") = 10000, py::arg("step") = 1.0 / 12.0, py::arg("measure") = "Q", py::arg("seed") = 42,
        py::arg("antithetic") = false);
}
