#pragma once

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "g2pp/calibration.hpp"
#include "g2pp/marketdata.hpp"
#include "g2pp/measure.hpp"
#include "g2pp/model.hpp"

namespace g2pp {

// ---- tabular outputs -------------------------------------------------------

struct ProjectionRow {
    double horizon_years = 0.0;
    double tenor_years = 0.0;
    double expected_q = 0.0;
    double expected_p = 0.0;
};

struct ProjectionGrid {
    std::vector<double> tenors{0.25, 10.0, 20.0};
    double step_years = 1.0 / 12.0;
    double horizon_years = 40.0;

    void validate() const;
    /// Horizons k * step for k = 0..round(horizon / step).
    [[nodiscard]] std::vector<double> horizons() const;
};

/// Expected rates r(t, t + tenor) under both measures over the grid, ordered
/// by horizon then tenor. At horizon 0 both columns are today's spot rates.
std::vector<ProjectionRow> project(const DiscountCurve& curve, const G2Params& p, const PremiumSpec& spec,
                                   const ProjectionGrid& grid = {});

void write_projection(std::ostream& out, std::span<const ProjectionRow> rows);
std::vector<ProjectionRow> read_projection(std::istream& in, const std::string& source = "<projection>");

struct RpRow {
    double t = 0.0;
    std::string variant;
    double rp_x = 0.0;
    double rp_y = 0.0;
    double rp_total = 0.0;
};

struct NamedSpec {
    std::string name;
    PremiumSpec spec;
};

/// RP_x, RP_y and their sum for each spec on k * step, k = 0..round(horizon / step).
std::vector<RpRow> rp_trajectory(const G2Params& p, std::span<const NamedSpec> specs,
                                 double step_years = 1.0 / 12.0, double horizon_years = 40.0);

void write_rp_trajectory(std::ostream& out, std::span<const RpRow> rows);
std::vector<RpRow> read_rp_trajectory(std::istream& in, const std::string& source = "<rp>");

struct ParamsRecord {
    G2Params params;
    std::optional<double> objective;
};

/// Header a,b,sigma,eta,rho,objective; an empty objective means "not computed".
void write_params(std::ostream& out, const ParamsRecord& record);
ParamsRecord read_params(std::istream& in, const std::string& source = "<params>");
ParamsRecord read_params_file(const std::string& path);

/// Header kind,d_x,d_y,l_x,l_y,tau_years, one row per spec. Linear slopes
/// are re-derived on reading.
void write_premiums(std::ostream& out, std::span<const PremiumSpec> specs);
std::vector<PremiumSpec> read_premiums(std::istream& in, const std::string& source = "<premium>");
std::vector<PremiumSpec> read_premiums_file(const std::string& path);

/// Per-quote comparison of market and model prices.
void write_fit_table(std::ostream& out, const DiscountCurve& curve, const G2Params& p,
                     std::span<const SwaptionInstrument> instruments);

/// Forecast reproduction: horizon_years,maturity_years,forecast,expected_p.
void write_forecast_fit(std::ostream& out, const DiscountCurve& curve, const G2Params& p,
                        const PremiumSpec& spec, std::span<const RateForecast> forecasts);

/// Arithmetic mean of one column of a rate-history CSV.
struct AverageResult {
    std::string column;
    std::size_t count = 0;
    double mean = 0.0;
};
AverageResult average_column(std::istream& in, const std::string& column, const std::string& source = "<history>");

// ---- backtest --------------------------------------------------------------

/// One valuation date. Either `swaptions` (calibrate) or `params` (use as is)
/// must be given.
struct SnapshotInput {
    std::string date;
    std::string curve_path;
    std::optional<std::string> swaptions_path;
    std::optional<G2Params> params;
    std::vector<RateForecast> forecasts;
    int tau_months = 0;
};

struct Manifest {
    std::vector<SnapshotInput> snapshots;
    std::vector<PremiumKind> kinds{PremiumKind::constant, PremiumKind::step, PremiumKind::linear};
    ProjectionGrid grid;
    bool extrapolate = false;
    double summary_horizon = 40.0;
    double summary_tenor = 10.0;
    SimplexConfig simplex;
};

/// Plain-text manifest:
///
///     kinds = constant,step,linear      # global keys first
///     extrapolate = true
///     tenors = 0.25,10,20
///     [snapshot 2019-09-30]
///     curve = curves/2019q3.csv          # relative to the manifest
///     params = 0.2997,0.0407,0.0114,0.0114,-0.9998
///     tau_months = 15
///     forecast = 1.25,1.5,-0.003         # horizon,maturity,rate
///
/// Global keys: kinds, tenors, extrapolate, projection.step_months,
/// projection.horizon_years, summary.horizon_years, summary.tenor_years and
/// the calibration keys read by SimplexConfig::from_config. Snapshot keys:
/// curve, swaptions, params, forecasts (CSV file), forecast (repeatable),
/// tau_months. Dates are YYYY-MM-DD or DD.MM.YYYY and must increase.
Manifest parse_manifest(std::istream& in, const std::string& source = "<manifest>",
                        const std::string& base_dir = ".");
Manifest load_manifest(const std::string& path);

/// Sortable yyyymmdd key; throws InputError for malformed dates.
int date_key(const std::string& date);

struct SnapshotResult {
    std::string date;
    bool ok = false;
    std::string error;
    bool input_error = false;
    std::optional<CalibrationQResult> calibration;
    G2Params params;
    std::vector<PremiumSpec> premiums;
    /// E^P[r(summary_horizon, summary_horizon + summary_tenor)] per premium.
    std::vector<double> long_rates;
};

struct StabilityLine {
    PremiumKind kind = PremiumKind::constant;
    std::size_t count = 0;
    double min = 0.0;
    double max = 0.0;
    [[nodiscard]] double dispersion() const { return count == 0 ? 0.0 : max - min; }
};

struct BacktestResult {
    std::vector<SnapshotResult> snapshots;
    std::vector<StabilityLine> stability;

    [[nodiscard]] bool all_ok() const;
    [[nodiscard]] const StabilityLine& line(PremiumKind kind) const;
    /// 0 when every snapshot succeeded, 2 if any failed on input, else 1.
    [[nodiscard]] int exit_code() const;
};

/// Runs every snapshot in date order. A failing snapshot is recorded and the
/// run continues. With a non-empty `out_dir` each snapshot writes
/// `<out_dir>/<date>/` (params.csv, fit.csv when calibrated, premium.csv,
/// projection_<kind>.csv, rp_trajectory.csv), and the run writes status.csv,
/// long_horizon.csv and stability.csv. Files are written to a temporary
/// name and renamed into place.
///
/// The constant kind is calibrated to the two shortest forecasts.
BacktestResult run_backtest(const Manifest& manifest, const std::string& out_dir = {});

void write_stability(std::ostream& out, std::span<const StabilityLine> lines);

/// Writes `text` to `path` through a temporary file in the same directory.
void write_file_atomic(const std::string& path, const std::string& text);

}  // namespace g2pp
