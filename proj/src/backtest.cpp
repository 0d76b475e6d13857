#include "g2pp/backtest.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "g2pp/config.hpp"
#include "g2pp/csv.hpp"
#include "g2pp/errors.hpp"
#include "g2pp/pricing.hpp"

namespace g2pp {

namespace fs = std::filesystem;

namespace {

std::size_t grid_count(double step, double horizon, const std::string& what) {
    require(step > 0.0 && std::isfinite(step), what + ": step must be positive");
    require(horizon >= 0.0 && std::isfinite(horizon), what + ": horizon must be non-negative");
    const double n = std::round(horizon / step);
    require(std::abs(n * step - horizon) <= 1e-9 * std::max(1.0, horizon),
            what + ": horizon must be a whole number of steps");
    return static_cast<std::size_t>(n);
}

std::vector<double> grid_times(double step, double horizon, const std::string& what) {
    const auto n = grid_count(step, horizon, what);
    std::vector<double> t(n + 1);
    for (std::size_t k = 0; k <= n; ++k) t[k] = static_cast<double>(k) * step;
    return t;
}

int require_column(const csv::Table& table, const std::string& name, const std::string& source) {
    const int c = table.column(name);
    if (c < 0) throw InputError(source + ": missing column '" + name + "'");
    return c;
}

std::vector<double> parse_list(const std::string& text, const std::string& context) {
    std::vector<double> out;
    for (const auto& item : csv::split(text)) out.push_back(csv::parse_real(item, context));
    return out;
}

G2Params parse_params_list(const std::string& text, const std::string& context) {
    const auto v = parse_list(text, context);
    require(v.size() == 5, context + ": expected a,b,sigma,eta,rho");
    G2Params p{v[0], v[1], v[2], v[3], v[4]};
    p.validate();
    return p;
}

std::string resolve(const std::string& base_dir, const std::string& path) {
    const fs::path p(path);
    return p.is_absolute() ? path : (fs::path(base_dir) / p).lexically_normal().string();
}

std::string one_line(std::string text) {
    std::replace(text.begin(), text.end(), ',', ';');
    std::replace(text.begin(), text.end(), '\n', ' ');
    return text;
}

std::string premium_name(const PremiumSpec& spec) { return to_string(spec.kind); }

// Constant kind: the two shortest forecasts.
std::vector<RateForecast> forecasts_for(PremiumKind kind, std::vector<RateForecast> forecasts) {
    if (kind != PremiumKind::constant || forecasts.size() <= 2) return forecasts;
    std::stable_sort(forecasts.begin(), forecasts.end(),
                     [](const RateForecast& l, const RateForecast& r) { return l.horizon_years < r.horizon_years; });
    forecasts.resize(2);
    return forecasts;
}

template <class Writer>
std::string render(Writer&& writer) {
    std::ostringstream out;
    writer(out);
    return out.str();
}

}  // namespace

// ---- tabular outputs -------------------------------------------------------

void ProjectionGrid::validate() const {
    require(!tenors.empty(), "projection: no tenors");
    for (double t : tenors) require(t > 0.0 && std::isfinite(t), "projection: tenors must be positive");
    (void)grid_count(step_years, horizon_years, "projection");
}

std::vector<double> ProjectionGrid::horizons() const { return grid_times(step_years, horizon_years, "projection"); }

std::vector<ProjectionRow> project(const DiscountCurve& curve, const G2Params& p, const PremiumSpec& spec,
                                   const ProjectionGrid& grid) {
    grid.validate();
    p.validate();
    spec.validate();
    std::vector<ProjectionRow> rows;
    for (double t : grid.horizons()) {
        for (double tenor : grid.tenors) {
            rows.push_back({t, tenor, expected_rate_q(curve, p, t, t + tenor),
                            expected_rate_p(curve, p, spec, t, t + tenor)});
        }
    }
    return rows;
}

void write_projection(std::ostream& out, std::span<const ProjectionRow> rows) {
    out << "horizon_years,tenor_years,expected_q,expected_p\n";
    for (const auto& r : rows) {
        out << csv::format(r.horizon_years) << ',' << csv::format(r.tenor_years) << ',' << csv::format(r.expected_q)
            << ',' << csv::format(r.expected_p) << '\n';
    }
}

std::vector<ProjectionRow> read_projection(std::istream& in, const std::string& source) {
    const auto table = csv::read(in, source);
    const int h = require_column(table, "horizon_years", source);
    const int t = require_column(table, "tenor_years", source);
    const int q = require_column(table, "expected_q", source);
    const int p = require_column(table, "expected_p", source);
    std::vector<ProjectionRow> rows;
    for (std::size_t i = 0; i < table.rows.size(); ++i) {
        rows.push_back({csv::field(table, i, h, source), csv::field(table, i, t, source),
                        csv::field(table, i, q, source), csv::field(table, i, p, source)});
    }
    return rows;
}

std::vector<RpRow> rp_trajectory(const G2Params& p, std::span<const NamedSpec> specs, double step_years,
                                 double horizon_years) {
    p.validate();
    require(!specs.empty(), "rp_trajectory: no premium specs");
    for (const auto& s : specs) s.spec.validate();
    std::vector<RpRow> rows;
    for (double t : grid_times(step_years, horizon_years, "rp_trajectory")) {
        for (const auto& s : specs) {
            const double x = rp_x(p, s.spec, t);
            const double y = rp_y(p, s.spec, t);
            rows.push_back({t, s.name, x, y, x + y});
        }
    }
    return rows;
}

void write_rp_trajectory(std::ostream& out, std::span<const RpRow> rows) {
    out << "t,variant,rp_x,rp_y,rp_total\n";
    for (const auto& r : rows) {
        out << csv::format(r.t) << ',' << r.variant << ',' << csv::format(r.rp_x) << ',' << csv::format(r.rp_y) << ','
            << csv::format(r.rp_total) << '\n';
    }
}

std::vector<RpRow> read_rp_trajectory(std::istream& in, const std::string& source) {
    const auto table = csv::read(in, source);
    const int t = require_column(table, "t", source);
    const int v = require_column(table, "variant", source);
    const int x = require_column(table, "rp_x", source);
    const int y = require_column(table, "rp_y", source);
    const int s = require_column(table, "rp_total", source);
    std::vector<RpRow> rows;
    for (std::size_t i = 0; i < table.rows.size(); ++i) {
        rows.push_back({csv::field(table, i, t, source), table.rows[i][static_cast<std::size_t>(v)],
                        csv::field(table, i, x, source), csv::field(table, i, y, source),
                        csv::field(table, i, s, source)});
    }
    return rows;
}

void write_params(std::ostream& out, const ParamsRecord& record) {
    const auto& p = record.params;
    out << "a,b,sigma,eta,rho,objective\n";
    out << csv::format(p.a) << ',' << csv::format(p.b) << ',' << csv::format(p.sigma) << ',' << csv::format(p.eta)
        << ',' << csv::format(p.rho) << ',' << (record.objective ? csv::format(*record.objective) : "") << '\n';
}

ParamsRecord read_params(std::istream& in, const std::string& source) {
    const auto table = csv::read(in, source);
    if (table.rows.size() != 1) throw InputError(source + ": expected exactly one parameter row");
    const int a = require_column(table, "a", source);
    const int b = require_column(table, "b", source);
    const int s = require_column(table, "sigma", source);
    const int e = require_column(table, "eta", source);
    const int r = require_column(table, "rho", source);
    ParamsRecord record;
    record.params = {csv::field(table, 0, a, source), csv::field(table, 0, b, source),
                     csv::field(table, 0, s, source), csv::field(table, 0, e, source),
                     csv::field(table, 0, r, source)};
    const int o = table.column("objective");
    if (o >= 0 && static_cast<std::size_t>(o) < table.rows[0].size() &&
        !table.rows[0][static_cast<std::size_t>(o)].empty()) {
        record.objective = csv::field(table, 0, o, source);
    }
    try {
        record.params.validate();
    } catch (const InputError& e) {
        throw InputError(source + ": " + e.what());
    }
    return record;
}

ParamsRecord read_params_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open file: " + path);
    return read_params(in, path);
}

void write_premiums(std::ostream& out, std::span<const PremiumSpec> specs) {
    out << "kind,d_x,d_y,l_x,l_y,tau_years\n";
    for (const auto& s : specs) {
        out << to_string(s.kind) << ',' << csv::format(s.d_x) << ',' << csv::format(s.d_y) << ','
            << csv::format(s.l_x) << ',' << csv::format(s.l_y) << ',' << csv::format(s.tau) << '\n';
    }
}

std::vector<PremiumSpec> read_premiums(std::istream& in, const std::string& source) {
    const auto table = csv::read(in, source);
    const int k = require_column(table, "kind", source);
    const int dx = require_column(table, "d_x", source);
    const int dy = require_column(table, "d_y", source);
    const int lx = require_column(table, "l_x", source);
    const int ly = require_column(table, "l_y", source);
    const int tau = table.column("tau_years");
    std::vector<PremiumSpec> specs;
    for (std::size_t i = 0; i < table.rows.size(); ++i) {
        const auto where = source + ":" + std::to_string(table.line_numbers[i]);
        PremiumKind kind;
        try {
            kind = parse_premium_kind(table.rows[i][static_cast<std::size_t>(k)]);
        } catch (const InputError& e) {
            throw InputError(where + ": " + e.what());
        }
        const double d_x = csv::field(table, i, dx, source);
        const double d_y = csv::field(table, i, dy, source);
        if (kind == PremiumKind::constant) {
            specs.push_back(PremiumSpec::constant(d_x, d_y));
            continue;
        }
        if (tau < 0) throw InputError(where + ": " + to_string(kind) + " premium needs tau_years");
        const double l_x = csv::field(table, i, lx, source);
        const double l_y = csv::field(table, i, ly, source);
        const double t = csv::field(table, i, tau, source);
        specs.push_back(kind == PremiumKind::step ? PremiumSpec::step(d_x, d_y, l_x, l_y, t)
                                                  : PremiumSpec::linear(d_x, d_y, l_x, l_y, t));
    }
    if (specs.empty()) throw InputError(source + ": no premium rows");
    return specs;
}

std::vector<PremiumSpec> read_premiums_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open file: " + path);
    return read_premiums(in, path);
}

void write_fit_table(std::ostream& out, const DiscountCurve& curve, const G2Params& p,
                     std::span<const SwaptionInstrument> instruments) {
    out << "expiry_years,tenor_years,strike,market_price,model_price,relative_error\n";
    for (const auto& inst : instruments) {
        const double model = price_swaption_g2(curve, p, inst.spec);
        const double err = inst.market_price == 0.0 ? model : (model - inst.market_price) / inst.market_price;
        out << csv::format(inst.quote.expiry_years) << ',' << csv::format(inst.quote.tenor_years) << ','
            << csv::format(inst.spec.fixed_rate) << ',' << csv::format(inst.market_price) << ','
            << csv::format(model) << ',' << csv::format(err) << '\n';
    }
}

void write_forecast_fit(std::ostream& out, const DiscountCurve& curve, const G2Params& p, const PremiumSpec& spec,
                        std::span<const RateForecast> forecasts) {
    out << "horizon_years,maturity_years,forecast,expected_p\n";
    for (const auto& f : forecasts) {
        out << csv::format(f.horizon_years) << ',' << csv::format(f.maturity_years) << ',' << csv::format(f.rate)
            << ',' << csv::format(expected_rate_p(curve, p, spec, f.horizon_years, f.maturity_years)) << '\n';
    }
}

AverageResult average_column(std::istream& in, const std::string& column, const std::string& source) {
    const auto table = csv::read(in, source);
    const int c = require_column(table, column, source);
    require(!table.rows.empty(), source + ": no rows to average");
    double sum = 0.0;
    for (std::size_t i = 0; i < table.rows.size(); ++i) sum += csv::field(table, i, c, source);
    return {column, table.rows.size(), sum / static_cast<double>(table.rows.size())};
}

// ---- manifest --------------------------------------------------------------

int date_key(const std::string& date) {
    int y = 0, m = 0, d = 0;
    char tail = 0;
    const bool iso = date.size() == 10 && date[4] == '-' &&
                     std::sscanf(date.c_str(), "%4d-%2d-%2d%c", &y, &m, &d, &tail) == 3;
    const bool dotted = !iso && date.size() == 10 && date[2] == '.' &&
                        std::sscanf(date.c_str(), "%2d.%2d.%4d%c", &d, &m, &y, &tail) == 3;
    if (!(iso || dotted) || m < 1 || m > 12 || d < 1 || d > 31) {
        throw InputError("malformed date '" + date + "' (expected YYYY-MM-DD or DD.MM.YYYY)");
    }
    return y * 10000 + m * 100 + d;
}

Manifest parse_manifest(std::istream& in, const std::string& source, const std::string& base_dir) {
    Manifest manifest;
    std::ostringstream globals;
    std::string line;
    std::size_t line_no = 0;
    SnapshotInput* current = nullptr;
    std::vector<std::string> forecast_files;
    bool has_forecast_lines = false;

    const auto finish = [&]() {
        if (!current) return;
        const auto where = source + ": snapshot " + current->date;
        require(!current->curve_path.empty(), where + ": missing curve");
        require(current->swaptions_path.has_value() != current->params.has_value(),
                where + ": give exactly one of swaptions or params");
        require(!(has_forecast_lines && !forecast_files.empty()), where + ": use forecast lines or a forecasts file");
        for (const auto& f : forecast_files) {
            auto loaded = load_forecasts_file(f);
            current->forecasts.insert(current->forecasts.end(), loaded.begin(), loaded.end());
        }
        require(!current->forecasts.empty(), where + ": no forecasts");
        require(current->tau_months > 0, where + ": tau_months must be positive");
    };

    while (std::getline(in, line)) {
        ++line_no;
        const auto where = source + ":" + std::to_string(line_no);
        const auto hash = line.find('#');
        const auto body = csv::trim(std::string_view(line).substr(0, hash));
        if (body.empty()) {
            if (!current) globals << '\n';
            continue;
        }
        if (body.front() == '[') {
            require(body.back() == ']', where + ": unterminated section header");
            const auto inner = csv::trim(body.substr(1, body.size() - 2));
            require(inner.substr(0, 9) == "snapshot ", where + ": expected [snapshot <date>]");
            finish();
            SnapshotInput snap;
            snap.date = std::string(csv::trim(inner.substr(9)));
            try {
                (void)date_key(snap.date);
            } catch (const InputError& e) {
                throw InputError(where + ": " + e.what());
            }
            if (!manifest.snapshots.empty()) {
                require(date_key(snap.date) > date_key(manifest.snapshots.back().date),
                        where + ": snapshots must be in increasing date order");
            }
            manifest.snapshots.push_back(std::move(snap));
            current = &manifest.snapshots.back();
            forecast_files.clear();
            has_forecast_lines = false;
            continue;
        }
        const auto eq = body.find('=');
        require(eq != std::string_view::npos, where + ": expected key = value");
        const std::string key(csv::trim(body.substr(0, eq)));
        const std::string value(csv::trim(body.substr(eq + 1)));
        if (!current) {
            globals << key << " = " << value << '\n';
            continue;
        }
        if (key == "curve") {
            current->curve_path = resolve(base_dir, value);
        } else if (key == "swaptions") {
            current->swaptions_path = resolve(base_dir, value);
        } else if (key == "params") {
            current->params = parse_params_list(value, where);
        } else if (key == "forecasts") {
            forecast_files.push_back(resolve(base_dir, value));
        } else if (key == "forecast") {
            const auto v = parse_list(value, where);
            require(v.size() == 3, where + ": forecast = horizon,maturity,rate");
            require(v[0] >= 0.0 && v[1] > v[0], where + ": need maturity > horizon >= 0");
            current->forecasts.push_back({v[0], v[1], v[2]});
            has_forecast_lines = true;
        } else if (key == "tau_months") {
            current->tau_months = static_cast<int>(csv::parse_int(value, where));
        } else {
            throw InputError(where + ": unknown snapshot key '" + key + "'");
        }
    }
    finish();
    require(!manifest.snapshots.empty(), source + ": no [snapshot] sections");

    std::istringstream global_in(globals.str());
    const auto config = Config::parse(global_in, source);
    for (const auto& [key, value] : config.values()) {
        const bool known = key == "kinds" || key == "tenors" || key == "extrapolate" ||
                           key == "projection.step_months" || key == "projection.horizon_years" ||
                           key == "summary.horizon_years" || key == "summary.tenor_years" ||
                           key.rfind("start.", 0) == 0 || key.rfind("simplex.", 0) == 0 ||
                           key == "swaption.payments_per_year";
        require(known, source + ": unknown key '" + key + "'");
    }
    if (const auto kinds = config.get("kinds")) {
        manifest.kinds.clear();
        for (const auto& k : csv::split(*kinds)) manifest.kinds.push_back(parse_premium_kind(k));
        require(!manifest.kinds.empty(), source + ": kinds is empty");
    }
    if (const auto tenors = config.get("tenors")) manifest.grid.tenors = parse_list(*tenors, source + ": tenors");
    manifest.extrapolate = config.get_bool("extrapolate", false);
    manifest.grid.step_years = static_cast<double>(config.get_int("projection.step_months", 1)) / 12.0;
    manifest.grid.horizon_years = config.get_real("projection.horizon_years", manifest.grid.horizon_years);
    manifest.summary_horizon = config.get_real("summary.horizon_years", manifest.summary_horizon);
    manifest.summary_tenor = config.get_real("summary.tenor_years", manifest.summary_tenor);
    require(manifest.summary_tenor > 0.0 && manifest.summary_horizon >= 0.0, source + ": bad summary horizon/tenor");
    manifest.grid.validate();
    manifest.simplex = SimplexConfig::from_config(config);
    return manifest;
}

Manifest load_manifest(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open file: " + path);
    const auto dir = fs::path(path).parent_path().string();
    return parse_manifest(in, path, dir.empty() ? "." : dir);
}

// ---- backtest --------------------------------------------------------------

bool BacktestResult::all_ok() const {
    return std::all_of(snapshots.begin(), snapshots.end(), [](const SnapshotResult& s) { return s.ok; });
}

const StabilityLine& BacktestResult::line(PremiumKind kind) const {
    for (const auto& l : stability) {
        if (l.kind == kind) return l;
    }
    throw InputError(std::string("backtest: no stability line for ") + to_string(kind));
}

int BacktestResult::exit_code() const {
    int code = 0;
    for (const auto& s : snapshots) {
        if (!s.ok) code = std::max(code, s.input_error ? 2 : 1);
    }
    return code;
}

void write_file_atomic(const std::string& path, const std::string& text) {
    const auto tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw InputError("cannot write file: " + path);
        out << text;
        out.flush();
        if (!out) throw InputError("cannot write file: " + path);
    }
    std::error_code ec;
    fs::rename(tmp, path, ec);
    if (ec) throw InputError("cannot write file: " + path + " (" + ec.message() + ")");
}

void write_stability(std::ostream& out, std::span<const StabilityLine> lines) {
    out << "variant,count,min,max,dispersion\n";
    for (const auto& l : lines) {
        out << to_string(l.kind) << ',' << l.count << ',' << csv::format(l.min) << ',' << csv::format(l.max) << ','
            << csv::format(l.dispersion()) << '\n';
    }
}

namespace {

void run_snapshot(const Manifest& manifest, const SnapshotInput& in, SnapshotResult& r, const std::string& dir) {
    const auto curve = load_curve_file(in.curve_path, manifest.extrapolate);
    std::vector<SwaptionInstrument> instruments;
    if (in.params) {
        r.params = *in.params;
    } else {
        const auto quotes = load_swaptions_file(*in.swaptions_path);
        r.calibration = calibrate_q(curve, quotes, manifest.simplex);
        if (!r.calibration->converged) {
            throw NumericError("risk-neutral calibration did not converge (objective " +
                               csv::format(r.calibration->objective) + ")");
        }
        r.params = r.calibration->params;
        instruments = to_instruments(curve, quotes, manifest.simplex.payments_per_year);
    }

    const double tau = in.tau_months / 12.0;
    for (auto kind : manifest.kinds) {
        const auto fc = forecasts_for(kind, in.forecasts);
        try {
            r.premiums.push_back(calibrate_p(curve, r.params, kind, fc, kind == PremiumKind::constant ? 0.0 : tau));
        } catch (const std::exception& e) {
            const auto msg = std::string(to_string(kind)) + " premium: " + e.what();
            if (dynamic_cast<const InputError*>(&e)) throw InputError(msg);
            throw NumericError(msg);
        }
        r.long_rates.push_back(expected_rate_p(curve, r.params, r.premiums.back(), manifest.summary_horizon,
                                               manifest.summary_horizon + manifest.summary_tenor));
    }

    if (dir.empty()) return;
    fs::create_directories(dir);
    const std::optional<double> objective =
        r.calibration ? std::optional<double>(r.calibration->objective) : std::nullopt;
    write_file_atomic(dir + "/params.csv", render([&](std::ostream& o) { write_params(o, {r.params, objective}); }));
    if (!instruments.empty()) {
        write_file_atomic(dir + "/fit.csv",
                          render([&](std::ostream& o) { write_fit_table(o, curve, r.params, instruments); }));
    }
    write_file_atomic(dir + "/premium.csv", render([&](std::ostream& o) { write_premiums(o, r.premiums); }));
    std::vector<NamedSpec> named;
    for (const auto& spec : r.premiums) {
        const auto rows = project(curve, r.params, spec, manifest.grid);
        write_file_atomic(dir + "/projection_" + premium_name(spec) + ".csv",
                          render([&](std::ostream& o) { write_projection(o, rows); }));
        named.push_back({premium_name(spec), spec});
    }
    const auto rp = rp_trajectory(r.params, named, manifest.grid.step_years, manifest.grid.horizon_years);
    write_file_atomic(dir + "/rp_trajectory.csv", render([&](std::ostream& o) { write_rp_trajectory(o, rp); }));
}

}  // namespace

BacktestResult run_backtest(const Manifest& manifest, const std::string& out_dir) {
    BacktestResult result;
    if (!out_dir.empty()) fs::create_directories(out_dir);
    for (const auto& snap : manifest.snapshots) {
        SnapshotResult r;
        r.date = snap.date;
        try {
            run_snapshot(manifest, snap, r, out_dir.empty() ? std::string() : out_dir + "/" + snap.date);
            r.ok = true;
        } catch (const InputError& e) {
            r.error = e.what();
            r.input_error = true;
        } catch (const NumericError& e) {
            r.error = e.what();
        } catch (const std::exception& e) {
            r.error = e.what();
        }
        if (!r.ok) {
            r.premiums.clear();
            r.long_rates.clear();
        }
        result.snapshots.push_back(std::move(r));
    }

    for (std::size_t k = 0; k < manifest.kinds.size(); ++k) {
        StabilityLine line;
        line.kind = manifest.kinds[k];
        for (const auto& s : result.snapshots) {
            if (!s.ok) continue;
            const double v = s.long_rates[k];
            line.min = line.count == 0 ? v : std::min(line.min, v);
            line.max = line.count == 0 ? v : std::max(line.max, v);
            ++line.count;
        }
        result.stability.push_back(line);
    }

    if (out_dir.empty()) return result;
    write_file_atomic(out_dir + "/status.csv", render([&](std::ostream& o) {
                          o << "date,status,message\n";
                          for (const auto& s : result.snapshots) {
                              o << s.date << ',' << (s.ok ? "ok" : "failed") << ',' << one_line(s.error) << '\n';
                          }
                      }));
    write_file_atomic(out_dir + "/long_horizon.csv", render([&](std::ostream& o) {
                          o << "date,variant,horizon_years,tenor_years,expected_p\n";
                          for (const auto& s : result.snapshots) {
                              for (std::size_t k = 0; k < s.long_rates.size(); ++k) {
                                  o << s.date << ',' << to_string(manifest.kinds[k]) << ','
                                    << csv::format(manifest.summary_horizon) << ','
                                    << csv::format(manifest.summary_tenor) << ',' << csv::format(s.long_rates[k])
                                    << '\n';
                              }
                          }
                      }));
    write_file_atomic(out_dir + "/stability.csv",
                      render([&](std::ostream& o) { write_stability(o, result.stability); }));
    return result;
}

}  // namespace g2pp
