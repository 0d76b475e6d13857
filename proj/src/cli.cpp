#include "g2pp/cli.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>

#include "g2pp/backtest.hpp"
#include "g2pp/calibration.hpp"
#include "g2pp/config.hpp"
#include "g2pp/csv.hpp"
#include "g2pp/errors.hpp"
#include "g2pp/simulate.hpp"

namespace g2pp {

namespace fs = std::filesystem;

namespace {

struct Globals {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::string out_dir = ".";
    std::optional<int> tau_months;
    std::string kind;
    Config config;

    [[nodiscard]] std::string path(const std::string& name) const { return (fs::path(out_dir) / name).string(); }

    [[nodiscard]] std::optional<PremiumKind> premium_kind() const {
        const auto text = kind.empty() ? config.get_string("kind", "") : kind;
        if (text.empty()) return std::nullopt;
        return parse_premium_kind(text);
    }

    [[nodiscard]] std::optional<int> tau() const {
        if (tau_months) return tau_months;
        if (config.has("tau_months")) return static_cast<int>(config.get_int("tau_months", 0));
        return std::nullopt;
    }

    [[nodiscard]] std::uint64_t rng_seed() const {
        if (seed) return *seed;
        return static_cast<std::uint64_t>(config.get_int("seed", 42));
    }
};

template <class Writer>
void emit(const Globals& g, const std::string& name, Writer&& writer) {
    fs::create_directories(g.out_dir);
    std::ostringstream text;
    writer(text);
    write_file_atomic(g.path(name), text.str());
}

DiscountCurve curve_from(const Globals& g, const std::string& path, bool extrapolate) {
    return load_curve_file(path, extrapolate || g.config.get_bool("extrapolate", false));
}

// Picks one spec from a premium file: the only row, or the row matching --kind.
PremiumSpec select_spec(const Globals& g, const std::string& path) {
    const auto specs = read_premiums_file(path);
    const auto kind = g.premium_kind();
    if (!kind) {
        require(specs.size() == 1, path + ": several premium rows; choose one with --kind");
        return specs.front();
    }
    for (const auto& s : specs) {
        if (s.kind == *kind) return s;
    }
    throw InputError(path + ": no " + std::string(to_string(*kind)) + " premium row");
}

std::vector<double> parse_tenors(const std::string& text) {
    std::vector<double> out;
    for (const auto& item : csv::split(text)) out.push_back(csv::parse_real(item, "--tenors"));
    return out;
}

struct CalibrateQArgs {
    std::string curve, swaptions, params;
    bool extrapolate = false;
};

int cmd_calibrate_q(const Globals& g, const CalibrateQArgs& a, std::ostream& out, std::ostream& err) {
    const auto curve = curve_from(g, a.curve, a.extrapolate);
    const auto simplex = SimplexConfig::from_config(g.config);
    std::vector<SwaptionInstrument> instruments;
    if (!a.swaptions.empty()) {
        const auto quotes = load_swaptions_file(a.swaptions);
        instruments = to_instruments(curve, quotes, simplex.payments_per_year);
    }

    int code = 0;
    ParamsRecord record;
    if (!a.params.empty()) {
        record = read_params_file(a.params);
        if (!instruments.empty()) record.objective = calibration_objective(curve, instruments, record.params);
    } else {
        require(!a.swaptions.empty(), "calibrate-q: need --swaptions (or --params)");
        const auto quotes = load_swaptions_file(a.swaptions);
        const auto result = calibrate_q(curve, quotes, simplex);
        record = {result.params, result.objective};
        for (const auto& w : result.warnings) err << "warning: " << w << '\n';
        out << "iterations " << result.iterations << ", evaluations " << result.evaluations << ", restarts "
            << result.restarts_used << '\n';
        if (!result.converged) {
            err << "error: calibration did not converge\n";
            code = 1;
        }
    }

    emit(g, "params.csv", [&](std::ostream& o) { write_params(o, record); });
    if (!instruments.empty()) {
        emit(g, "fit.csv", [&](std::ostream& o) { write_fit_table(o, curve, record.params, instruments); });
    }
    write_params(out, record);
    return code;
}

struct CalibratePArgs {
    std::string curve, params, forecasts;
    bool extrapolate = false;
};

int cmd_calibrate_p(const Globals& g, const CalibratePArgs& a, std::ostream& out) {
    const auto curve = curve_from(g, a.curve, a.extrapolate);
    const auto params = read_params_file(a.params).params;
    const auto forecasts = load_forecasts_file(a.forecasts);
    const auto kind = g.premium_kind();
    require(kind.has_value(), "calibrate-p: --kind is required");
    double tau = 0.0;
    if (*kind != PremiumKind::constant) {
        const auto months = g.tau();
        require(months.has_value() && *months > 0, "calibrate-p: --tau-months is required for step and linear");
        tau = *months / 12.0;
    }
    const auto spec = calibrate_p(curve, params, *kind, forecasts, tau);
    const std::vector<PremiumSpec> specs{spec};
    emit(g, "premium.csv", [&](std::ostream& o) { write_premiums(o, specs); });
    emit(g, "forecast_fit.csv", [&](std::ostream& o) { write_forecast_fit(o, curve, params, spec, forecasts); });
    write_premiums(out, specs);
    return 0;
}

struct ProjectArgs {
    std::string curve, params, premium, tenors;
    double horizon = 40.0;
    int step_months = 1;
    bool extrapolate = false;
};

int cmd_project(const Globals& g, const ProjectArgs& a, std::ostream& out) {
    const auto curve = curve_from(g, a.curve, a.extrapolate);
    const auto params = read_params_file(a.params).params;
    const auto spec = a.premium.empty() ? PremiumSpec::constant(0.0, 0.0) : select_spec(g, a.premium);
    ProjectionGrid grid;
    if (!a.tenors.empty()) grid.tenors = parse_tenors(a.tenors);
    require(a.step_months > 0, "project: --step-months must be positive");
    grid.step_years = a.step_months / 12.0;
    grid.horizon_years = a.horizon;
    const auto rows = project(curve, params, spec, grid);
    emit(g, "projection.csv", [&](std::ostream& o) { write_projection(o, rows); });
    out << rows.size() << " rows written to " << g.path("projection.csv") << '\n';
    return 0;
}

struct RpArgs {
    std::string params;
    std::vector<std::string> premiums;
    double horizon = 40.0;
    int step_months = 1;
};

int cmd_rp_trajectory(const Globals& g, const RpArgs& a, std::ostream& out) {
    const auto params = read_params_file(a.params).params;
    std::vector<NamedSpec> named;
    std::map<std::string, int> seen;
    for (const auto& file : a.premiums) {
        for (const auto& spec : read_premiums_file(file)) {
            std::string name = to_string(spec.kind);
            if (const int n = ++seen[name]; n > 1) name += "_" + std::to_string(n);
            named.push_back({name, spec});
        }
    }
    require(a.step_months > 0, "rp-trajectory: --step-months must be positive");
    const auto rows = rp_trajectory(params, named, a.step_months / 12.0, a.horizon);
    emit(g, "rp_trajectory.csv", [&](std::ostream& o) { write_rp_trajectory(o, rows); });
    out << rows.size() << " rows written to " << g.path("rp_trajectory.csv") << '\n';
    return 0;
}

struct SimulateArgs {
    std::string curve, params, premium, measure = "Q", format = "csv";
    std::size_t paths = 1000;
    double horizon = 10.0;
    int step_months = 1;
    bool antithetic = false;
    bool extrapolate = false;
    std::optional<double> check;
};

int cmd_simulate(const Globals& g, const SimulateArgs& a, std::ostream& out) {
    const auto curve = curve_from(g, a.curve, a.extrapolate);
    const auto params = read_params_file(a.params).params;
    SimConfig config;
    config.n_paths = a.paths;
    require(a.step_months > 0, "simulate: --step-months must be positive");
    config.step_years = a.step_months / 12.0;
    config.horizon_years = a.horizon;
    config.measure = parse_measure(a.measure);
    config.seed = g.rng_seed();
    config.antithetic = a.antithetic;
    std::optional<PremiumSpec> premium;
    if (config.measure == Measure::P) {
        require(!a.premium.empty(), "simulate: --premium is required under measure P");
        premium = select_spec(g, a.premium);
    }
    require(config.horizon_years <= curve.last_maturity() + 1e-9 || curve.extrapolates(),
            "simulate: horizon beyond the curve (use --extrapolate)");

    if (a.check) {
        const auto r = mc_bond_check(curve, params, premium, config, *a.check);
        emit(g, "bond_check.csv", [&](std::ostream& o) {
            o << "measure,maturity,n_paths,estimate,std_error,target,richardson_bias\n"
              << to_string(r.measure) << ',' << csv::format(r.maturity) << ',' << r.n_paths << ','
              << csv::format(r.estimate) << ',' << csv::format(r.std_error) << ',' << csv::format(r.target) << ','
              << csv::format(r.richardson_bias) << '\n';
        });
        out << "bond check T=" << csv::format(r.maturity) << ": estimate " << csv::format(r.estimate) << " +/- "
            << csv::format(r.std_error) << ", target " << csv::format(r.target) << '\n';
        return 0;
    }

    const auto set = simulate(params, premium, config);
    if (a.format == "csv") {
        emit(g, "scenarios.csv", [&](std::ostream& o) { write_scenarios_csv(o, set, curve); });
        out << set.n_paths() << " paths written to " << g.path("scenarios.csv") << '\n';
    } else if (a.format == "binary") {
        emit(g, "scenarios.bin", [&](std::ostream& o) { write_scenarios_binary(o, set); });
        out << set.n_paths() << " paths written to " << g.path("scenarios.bin") << '\n';
    } else {
        throw InputError("simulate: --format must be csv or binary");
    }
    return 0;
}

int cmd_backtest(const Globals& g, const std::string& manifest_path, std::ostream& out, std::ostream& err) {
    const auto manifest = load_manifest(manifest_path);
    const auto result = run_backtest(manifest, g.out_dir);
    for (const auto& s : result.snapshots) {
        if (!s.ok) err << "snapshot " << s.date << " failed: " << s.error << '\n';
    }
    write_stability(out, result.stability);
    return result.exit_code();
}

int cmd_average(const Globals& g, const std::string& path, const std::string& column, std::ostream& out) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open file: " + path);
    const auto r = average_column(in, column, path);
    emit(g, "average.csv", [&](std::ostream& o) {
        o << "column,count,mean\n" << r.column << ',' << r.count << ',' << csv::format(r.mean) << '\n';
    });
    out << csv::format(r.mean) << '\n';
    return 0;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Two-factor Gaussian short-rate engine: calibration, projection, scenarios, backtests"};
    app.require_subcommand(1);
    app.fallthrough();

    Globals g;
    app.add_option("--config", g.config_path, "key = value settings file");
    app.add_option("--seed", g.seed, "RNG seed");
    app.add_option("--out", g.out_dir, "Output directory")->capture_default_str();
    app.add_option("--tau-months", g.tau_months, "Premium switch time in months");
    app.add_option("--kind", g.kind, "Premium kind")->check(CLI::IsMember({"constant", "step", "linear"}));

    CalibrateQArgs cq;
    auto* calq = app.add_subcommand("calibrate-q", "Calibrate risk-neutral parameters to swaption quotes");
    calq->add_option("--curve", cq.curve, "Discount curve CSV")->required();
    calq->add_option("--swaptions", cq.swaptions, "Swaption quote CSV");
    calq->add_option("--params", cq.params, "Use these parameters instead of calibrating");
    calq->add_flag("--extrapolate", cq.extrapolate, "Flat-forward extrapolation beyond the last pillar");

    CalibratePArgs cp;
    auto* calp = app.add_subcommand("calibrate-p", "Calibrate a risk-premium spec to rate forecasts");
    calp->add_option("--curve", cp.curve, "Discount curve CSV")->required();
    calp->add_option("--params", cp.params, "Parameter CSV")->required();
    calp->add_option("--forecasts", cp.forecasts, "Forecast CSV")->required();
    calp->add_flag("--extrapolate", cp.extrapolate, "Flat-forward extrapolation beyond the last pillar");

    ProjectArgs pa;
    auto* proj = app.add_subcommand("project", "Expected rates under both measures");
    proj->add_option("--curve", pa.curve, "Discount curve CSV")->required();
    proj->add_option("--params", pa.params, "Parameter CSV")->required();
    proj->add_option("--premium", pa.premium, "Premium CSV (default: zero premium)");
    proj->add_option("--tenors", pa.tenors, "Comma-separated tenors in years (default 0.25,10,20)");
    proj->add_option("--horizon", pa.horizon, "Last horizon in years")->capture_default_str();
    proj->add_option("--step-months", pa.step_months, "Horizon step")->capture_default_str();
    proj->add_flag("--extrapolate", pa.extrapolate, "Flat-forward extrapolation beyond the last pillar");

    RpArgs ra;
    auto* rp = app.add_subcommand("rp-trajectory", "Absolute risk premium paths");
    rp->add_option("--params", ra.params, "Parameter CSV")->required();
    rp->add_option("--premium", ra.premiums, "Premium CSV (repeatable)")->required();
    rp->add_option("--horizon", ra.horizon, "Last time in years")->capture_default_str();
    rp->add_option("--step-months", ra.step_months, "Time step")->capture_default_str();

    SimulateArgs sa;
    auto* sim = app.add_subcommand("simulate", "Generate factor scenarios");
    sim->add_option("--curve", sa.curve, "Discount curve CSV")->required();
    sim->add_option("--params", sa.params, "Parameter CSV")->required();
    sim->add_option("--premium", sa.premium, "Premium CSV (measure P)");
    sim->add_option("--measure", sa.measure, "Q or P")->capture_default_str();
    sim->add_option("--paths", sa.paths, "Number of paths")->capture_default_str();
    sim->add_option("--horizon", sa.horizon, "Horizon in years")->capture_default_str();
    sim->add_option("--step-months", sa.step_months, "Time step")->capture_default_str();
    sim->add_option("--format", sa.format, "csv or binary")->capture_default_str();
    sim->add_flag("--antithetic", sa.antithetic, "Antithetic pairs");
    sim->add_flag("--extrapolate", sa.extrapolate, "Flat-forward extrapolation beyond the last pillar");
    sim->add_option("--check", sa.check, "Run the bond repricing check at this maturity instead of writing paths");

    std::string manifest;
    auto* bt = app.add_subcommand("backtest", "Replay a manifest of valuation snapshots");
    bt->add_option("manifest", manifest, "Manifest file")->required();

    std::string history, column = "rate";
    auto* avg = app.add_subcommand("average", "Arithmetic mean of a rate-history column");
    avg->add_option("history", history, "Rate-history CSV")->required();
    avg->add_option("--column", column, "Column to average")->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return 0;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return 0;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << '\n';
        return 2;
    }

    try {
        if (!g.config_path.empty()) g.config = Config::load(g.config_path);
        if (*calq) return cmd_calibrate_q(g, cq, out, err);
        if (*calp) return cmd_calibrate_p(g, cp, out);
        if (*proj) return cmd_project(g, pa, out);
        if (*rp) return cmd_rp_trajectory(g, ra, out);
        if (*sim) return cmd_simulate(g, sa, out);
        if (*bt) return cmd_backtest(g, manifest, out, err);
        if (*avg) return cmd_average(g, history, column, out);
    } catch (const InputError& e) {
        err << "error: " << e.what() << '\n';
        return 2;
    } catch (const NumericError& e) {
        err << "error: " << e.what() << '\n';
        return 1;
    } catch (const fs::filesystem_error& e) {
        err << "error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return 1;
    }
    return 2;
}

}  // namespace g2pp
