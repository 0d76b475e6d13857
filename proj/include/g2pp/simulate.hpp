#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "g2pp/marketdata.hpp"
#include "g2pp/measure.hpp"
#include "g2pp/model.hpp"

namespace g2pp {

enum class Measure { Q, P };

const char* to_string(Measure m);
Measure parse_measure(const std::string& text);

struct SimConfig {
    std::size_t n_paths = 1000;
    double step_years = 1.0 / 12.0;
    double horizon_years = 1.0;
    Measure measure = Measure::Q;
    std::uint64_t seed = 42;
    /// Paths 2k and 2k+1 share one Gaussian stream with opposite signs.
    bool antithetic = false;

    void validate() const;
    /// Number of steps; horizon must be a whole multiple of the step within 1e-9.
    [[nodiscard]] std::size_t steps() const;
};

/// One exact Ornstein-Uhlenbeck transition over dt. `premium` switches to the
/// real-world dynamics dx = a(d_x(t) - x)dt + sigma dW; null means risk-neutral.
/// (z1, z2) are independent standard normals, correlated here through the
/// Cholesky factor of the exact transition covariance.
FactorState step_exact(const G2Params& p, const PremiumSpec* premium, const FactorState& state,
                       double dt, double z1, double z2);

/// Simulated factor paths on a uniform grid. Paths are stored row-major:
/// x(path, k) = x_paths[path * times.size() + k].
struct ScenarioSet {
    SimConfig config;
    G2Params params;
    std::optional<PremiumSpec> premium;
    std::vector<double> times;
    std::vector<double> x_paths;
    std::vector<double> y_paths;

    [[nodiscard]] std::size_t n_paths() const { return config.n_paths; }
    [[nodiscard]] std::size_t n_times() const { return times.size(); }
    [[nodiscard]] double x(std::size_t path, std::size_t k) const { return x_paths[path * times.size() + k]; }
    [[nodiscard]] double y(std::size_t path, std::size_t k) const { return y_paths[path * times.size() + k]; }
    /// r = x + y + phi(t), with phi recovered from the curve.
    [[nodiscard]] double short_rate(const DiscountCurve& curve, std::size_t path, std::size_t k) const;
};

/// Deterministic path generator. Path i draws from a Gaussian stream keyed by
/// (seed, i) (or (seed, i / 2) for antithetic pairs), so any path can be
/// regenerated without the others and independently of n_paths.
class PathGenerator {
public:
    PathGenerator(const G2Params& p, std::optional<PremiumSpec> premium, const SimConfig& config);

    /// Fills x and y (each steps() + 1 long, starting at 0) for one path.
    void generate(std::size_t path, std::span<double> x, std::span<double> y) const;

    [[nodiscard]] const std::vector<double>& times() const { return times_; }
    [[nodiscard]] const SimConfig& config() const { return config_; }

private:
    G2Params params_;
    std::optional<PremiumSpec> premium_;
    SimConfig config_;
    std::vector<double> times_;
    double decay_x_ = 1.0;
    double decay_y_ = 1.0;
    double chol_xx_ = 0.0;
    double chol_yx_ = 0.0;
    double chol_yy_ = 0.0;
    std::vector<FactorPair> drift_;
};

/// Seed of the Gaussian stream for one path (SplitMix64 mixing).
std::uint64_t stream_seed(std::uint64_t seed, std::uint64_t stream);

/// Requires a premium iff config.measure == P.
ScenarioSet simulate(const G2Params& p, const std::optional<PremiumSpec>& premium, const SimConfig& config);

struct BondCheckReport {
    Measure measure = Measure::Q;
    double maturity = 0.0;
    double step = 0.0;
    std::size_t n_paths = 0;
    /// Mean of the discounted unit payoff; risk-neutral: exp(-int r),
    /// real-world: X(0)/X(T) with the bond-specific discount process X.
    double estimate = 0.0;
    double std_error = 0.0;
    /// Same estimator on every second grid point (step doubled), when the
    /// number of steps to maturity is even.
    std::optional<double> estimate_coarse;
    /// (estimate_coarse - estimate) / 3: Richardson estimate of the
    /// trapezoid bias remaining in `estimate`.
    double richardson_bias = 0.0;
    /// Today's bond price df(T).
    double target = 0.0;

    [[nodiscard]] double ratio() const { return estimate / target; }
    [[nodiscard]] double ratio_std_error() const { return std_error / target; }
    /// |estimate - target| in standard errors.
    [[nodiscard]] double z_score() const;
};

/// Checks that the simulated law reprices today's zero bond maturing at T.
/// T must lie on the grid. Time integrals of x + y use the trapezoid rule;
/// integrals of deterministic functions are exact.
BondCheckReport mc_bond_check(const ScenarioSet& set, const DiscountCurve& curve, double T);

/// Same check, generating paths on the fly instead of storing them.
BondCheckReport mc_bond_check(const DiscountCurve& curve, const G2Params& p,
                              const std::optional<PremiumSpec>& premium, const SimConfig& config, double T);

struct MomentLine {
    std::string name;
    double sample = 0.0;
    double expected = 0.0;
    double std_error = 0.0;
    bool flagged = false;  // deviation beyond 4 standard errors
};

struct MomentReport {
    double maturity = 0.0;
    std::vector<MomentLine> lines;

    [[nodiscard]] bool all_within() const;
    [[nodiscard]] const MomentLine& line(const std::string& name) const;
};

/// Compares sample moments at the horizon with closed forms: mean and variance
/// of x(T), y(T) and of the centred integral I(0,T) - int_0^T phi, whose
/// mean is zero and variance V(0,T) under both measures.
MomentReport moment_check(const ScenarioSet& set);
MomentReport moment_check(const G2Params& p, const std::optional<PremiumSpec>& premium, const SimConfig& config);

void write_scenarios_csv(std::ostream& out, const ScenarioSet& set, const DiscountCurve& curve);
/// Little-endian layout: "G2PPSCN1", u64 n_paths, u64 n_times, u64 seed,
/// u64 measure (0 = Q, 1 = P), f64 step, f64 times[n_times], then per path
/// f64 x[n_times] followed by f64 y[n_times].
void write_scenarios_binary(std::ostream& out, const ScenarioSet& set);
/// Reads the binary layout back (params and premium are not stored).
ScenarioSet read_scenarios_binary(std::istream& in);

}  // namespace g2pp
