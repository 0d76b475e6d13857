#include "g2pp/simulate.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <istream>
#include <ostream>
#include <random>

#include "g2pp/csv.hpp"
#include "g2pp/errors.hpp"

namespace g2pp {

const char* to_string(Measure m) { return m == Measure::Q ? "Q" : "P"; }

Measure parse_measure(const std::string& text) {
    if (text == "Q" || text == "q") return Measure::Q;
    if (text == "P" || text == "p") return Measure::P;
    throw InputError("unknown measure '" + text + "' (expected Q|P)");
}

void SimConfig::validate() const {
    require(n_paths > 0, "simulate: n_paths must be positive");
    require(step_years > 0.0 && std::isfinite(step_years), "simulate: step must be positive");
    require(horizon_years > 0.0 && std::isfinite(horizon_years), "simulate: horizon must be positive");
    const double ratio = horizon_years / step_years;
    require(std::abs(ratio - std::round(ratio)) <= 1e-9 * std::max(1.0, ratio),
            "simulate: horizon must be a whole multiple of the step");
    require(!antithetic || (n_paths >= 2 && n_paths % 2 == 0),
            "simulate: antithetic sampling needs an even number of paths >= 2");
}

std::size_t SimConfig::steps() const {
    return static_cast<std::size_t>(std::llround(horizon_years / step_years));
}

namespace {

struct TransitionCovariance {
    double xx;
    double yx;
    double yy;
};

TransitionCovariance transition_cholesky(const G2Params& p, double dt) {
    const double vx = p.sigma * p.sigma * -std::expm1(-2.0 * p.a * dt) / (2.0 * p.a);
    const double vy = p.eta * p.eta * -std::expm1(-2.0 * p.b * dt) / (2.0 * p.b);
    const double cxy = p.rho * p.sigma * p.eta * -std::expm1(-(p.a + p.b) * dt) / (p.a + p.b);
    if (vx <= 0.0) return {0.0, 0.0, std::sqrt(std::max(vy, 0.0))};
    const double lxx = std::sqrt(vx);
    const double lyx = cxy / lxx;
    // Rank-one when the residual variance vanishes (|rho| = 1 with a = b).
    const double lyy = std::sqrt(std::max(vy - lyx * lyx, 0.0));
    return {lxx, lyx, lyy};
}

double mean_of(std::span<const double> v) {
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
}

struct SampleStats {
    double mean = 0.0;
    double variance = 0.0;   // unbiased
    double mean_se = 0.0;
    double variance_se = 0.0;
};

// Antithetic pairs are averaged before estimating the standard error of the mean.
SampleStats sample_stats(std::span<const double> v, bool antithetic) {
    SampleStats s;
    const auto n = static_cast<double>(v.size());
    s.mean = mean_of(v);
    double m2 = 0.0, m4 = 0.0;
    for (double x : v) {
        const double d = x - s.mean;
        m2 += d * d;
        m4 += d * d * d * d;
    }
    s.variance = v.size() > 1 ? m2 / (n - 1.0) : 0.0;
    const double pop_var = m2 / n;
    const double n_eff = antithetic ? n / 2.0 : n;
    s.variance_se = std::sqrt(std::max(m4 / n - pop_var * pop_var, 0.0) / n_eff);
    if (antithetic) {
        std::vector<double> pairs(v.size() / 2);
        for (std::size_t i = 0; i < pairs.size(); ++i) pairs[i] = 0.5 * (v[2 * i] + v[2 * i + 1]);
        double pm2 = 0.0;
        for (double x : pairs) pm2 += (x - s.mean) * (x - s.mean);
        const auto np = static_cast<double>(pairs.size());
        s.mean_se = np > 1.0 ? std::sqrt(pm2 / (np - 1.0) / np) : 0.0;
    } else {
        s.mean_se = v.size() > 1 ? std::sqrt(s.variance / n) : 0.0;
    }
    return s;
}

std::size_t grid_index(const std::vector<double>& times, double step, double T) {
    const double k = T / step;
    const auto idx = static_cast<std::size_t>(std::llround(k));
    if (std::abs(k - static_cast<double>(idx)) > 1e-9 * std::max(1.0, k) || idx == 0 ||
        idx >= times.size()) {
        throw InputError("bond check: maturity " + csv::format(T) + " is not on the simulation grid");
    }
    return idx;
}

// Trapezoid integral of x + y over grid indices [0, last] with the given stride.
double trapezoid(std::span<const double> x, std::span<const double> y, std::size_t last,
                 std::size_t stride, double step) {
    const double h = step * static_cast<double>(stride);
    double sum = 0.5 * (x[0] + y[0] + x[last] + y[last]);
    for (std::size_t k = stride; k < last; k += stride) sum += x[k] + y[k];
    return sum * h;
}

struct BondPayoffs {
    std::vector<double> fine;
    std::vector<double> coarse;
};

template <class PathSource>
BondCheckReport bond_check_impl(PathSource&& source, std::size_t n_paths, const SimConfig& config,
                                const std::vector<double>& times, const DiscountCurve& curve,
                                const G2Params& p, const std::optional<PremiumSpec>& premium, double T) {
    const std::size_t last = grid_index(times, config.step_years, T);
    if (config.measure == Measure::P && !premium) {
        throw InputError("bond check: real-world scenarios carry no premium spec");
    }
    double deterministic = integrated_phi(curve, p, 0.0, T);
    if (config.measure == Measure::P) {
        const auto shift = integrated_rp(p, *premium, T);
        deterministic -= shift.x + shift.y;
    }
    const bool has_coarse = last % 2 == 0;
    BondPayoffs payoffs;
    payoffs.fine.resize(n_paths);
    if (has_coarse) payoffs.coarse.resize(n_paths);
    std::vector<double> xs(times.size());
    std::vector<double> ys(times.size());
    for (std::size_t i = 0; i < n_paths; ++i) {
        source(i, std::span<double>(xs), std::span<double>(ys));
        payoffs.fine[i] = std::exp(-(deterministic + trapezoid(xs, ys, last, 1, config.step_years)));
        if (has_coarse) {
            payoffs.coarse[i] = std::exp(-(deterministic + trapezoid(xs, ys, last, 2, config.step_years)));
        }
    }
    const auto stats = sample_stats(payoffs.fine, config.antithetic);
    BondCheckReport report;
    report.measure = config.measure;
    report.maturity = T;
    report.step = config.step_years;
    report.n_paths = n_paths;
    report.estimate = stats.mean;
    report.std_error = stats.mean_se;
    report.target = curve.discount(T);
    if (has_coarse) {
        report.estimate_coarse = mean_of(payoffs.coarse);
        report.richardson_bias = (*report.estimate_coarse - report.estimate) / 3.0;
    }
    return report;
}

template <class PathSource>
MomentReport moment_check_impl(PathSource&& source, std::size_t n_paths, const SimConfig& config,
                               const std::vector<double>& times, const G2Params& p,
                               const std::optional<PremiumSpec>& premium) {
    const std::size_t last = times.size() - 1;
    const double T = times[last];
    FactorPair mean_shift{};
    FactorPair rp_integral{};
    if (config.measure == Measure::P) {
        if (!premium) throw InputError("moment check: real-world scenarios carry no premium spec");
        mean_shift = {rp_x(p, *premium, T), rp_y(p, *premium, T)};
        rp_integral = integrated_rp(p, *premium, T);
    }
    std::vector<double> xT(n_paths), yT(n_paths), centred(n_paths);
    std::vector<double> xs(times.size()), ys(times.size());
    for (std::size_t i = 0; i < n_paths; ++i) {
        source(i, std::span<double>(xs), std::span<double>(ys));
        xT[i] = xs[last];
        yT[i] = ys[last];
        centred[i] = trapezoid(xs, ys, last, 1, config.step_years) - rp_integral.x - rp_integral.y;
    }
    const double var_x = p.sigma * p.sigma * -std::expm1(-2.0 * p.a * T) / (2.0 * p.a);
    const double var_y = p.eta * p.eta * -std::expm1(-2.0 * p.b * T) / (2.0 * p.b);
    MomentReport report;
    report.maturity = T;
    auto add = [&](const std::string& name, double sample, double expected, double se) {
        const double dev = std::abs(sample - expected);
        const bool flagged = se > 0.0 ? dev > 4.0 * se : dev > 1e-12 * std::max(1.0, std::abs(expected));
        report.lines.push_back({name, sample, expected, se, flagged});
    };
    const auto sx = sample_stats(xT, config.antithetic);
    const auto sy = sample_stats(yT, config.antithetic);
    const auto si = sample_stats(centred, config.antithetic);
    add("mean_x", sx.mean, mean_shift.x, sx.mean_se);
    add("var_x", sx.variance, var_x, sx.variance_se);
    add("mean_y", sy.mean, mean_shift.y, sy.mean_se);
    add("var_y", sy.variance, var_y, sy.variance_se);
    add("mean_I", si.mean, 0.0, si.mean_se);
    add("var_I", si.variance, integrated_variance(p, 0.0, T), si.variance_se);
    return report;
}

void put_u64(std::ostream& out, std::uint64_t v) {
    std::array<char, 8> bytes{};
    for (int i = 0; i < 8; ++i) bytes[i] = static_cast<char>((v >> (8 * i)) & 0xFF);
    out.write(bytes.data(), 8);
}

void put_f64(std::ostream& out, double v) { put_u64(out, std::bit_cast<std::uint64_t>(v)); }

std::uint64_t get_u64(std::istream& in) {
    std::array<unsigned char, 8> bytes{};
    in.read(reinterpret_cast<char*>(bytes.data()), 8);
    if (!in) throw InputError("scenario file: truncated");
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(bytes[i]) << (8 * i);
    return v;
}

double get_f64(std::istream& in) { return std::bit_cast<double>(get_u64(in)); }

constexpr char kMagic[9] = "G2PPSCN1";

}  // namespace

FactorState step_exact(const G2Params& p, const PremiumSpec* premium, const FactorState& state,
                       double dt, double z1, double z2) {
    const auto chol = transition_cholesky(p, dt);
    FactorPair drift{};
    if (premium != nullptr) drift = drift_increment(p, *premium, state.t, state.t + dt);
    return {state.t + dt,
            state.x * std::exp(-p.a * dt) + drift.x + chol.xx * z1,
            state.y * std::exp(-p.b * dt) + drift.y + chol.yx * z1 + chol.yy * z2};
}

std::uint64_t stream_seed(std::uint64_t seed, std::uint64_t stream) {
    std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (stream + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

PathGenerator::PathGenerator(const G2Params& p, std::optional<PremiumSpec> premium, const SimConfig& config)
    : params_(p), premium_(std::move(premium)), config_(config) {
    p.validate();
    config.validate();
    if (config.measure == Measure::P) {
        require(premium_.has_value(), "simulate: real-world measure requires a premium spec");
        premium_->validate();
    } else {
        premium_.reset();
    }
    const std::size_t n = config.steps();
    times_.resize(n + 1);
    for (std::size_t k = 0; k <= n; ++k) times_[k] = static_cast<double>(k) * config.step_years;
    const double dt = config.step_years;
    decay_x_ = std::exp(-p.a * dt);
    decay_y_ = std::exp(-p.b * dt);
    const auto chol = transition_cholesky(p, dt);
    chol_xx_ = chol.xx;
    chol_yx_ = chol.yx;
    chol_yy_ = chol.yy;
    drift_.assign(n, FactorPair{});
    if (premium_) {
        for (std::size_t k = 0; k < n; ++k) drift_[k] = drift_increment(p, *premium_, times_[k], times_[k + 1]);
    }
}

void PathGenerator::generate(std::size_t path, std::span<double> x, std::span<double> y) const {
    const bool mirrored = config_.antithetic && (path % 2 == 1);
    const std::uint64_t stream = config_.antithetic ? path / 2 : path;
    std::mt19937_64 rng(stream_seed(config_.seed, stream));
    std::normal_distribution<double> normal;
    const double sign = mirrored ? -1.0 : 1.0;
    x[0] = 0.0;
    y[0] = 0.0;
    for (std::size_t k = 0; k < drift_.size(); ++k) {
        const double z1 = sign * normal(rng);
        const double z2 = sign * normal(rng);
        x[k + 1] = x[k] * decay_x_ + drift_[k].x + chol_xx_ * z1;
        y[k + 1] = y[k] * decay_y_ + drift_[k].y + chol_yx_ * z1 + chol_yy_ * z2;
    }
}

double ScenarioSet::short_rate(const DiscountCurve& curve, std::size_t path, std::size_t k) const {
    return x(path, k) + y(path, k) + shift_at(curve, params, times[k]);
}

ScenarioSet simulate(const G2Params& p, const std::optional<PremiumSpec>& premium, const SimConfig& config) {
    const PathGenerator gen(p, premium, config);
    ScenarioSet set;
    set.config = config;
    set.params = p;
    if (config.measure == Measure::P) set.premium = premium;
    set.times = gen.times();
    const std::size_t nt = set.times.size();
    try {
        set.x_paths.resize(config.n_paths * nt);
        set.y_paths.resize(config.n_paths * nt);
    } catch (const std::bad_alloc&) {
        throw NumericError("simulate: cannot allocate " + std::to_string(config.n_paths) + " paths x " +
                           std::to_string(nt) + " times; use the streaming checks for large runs");
    }
    for (std::size_t i = 0; i < config.n_paths; ++i) {
        gen.generate(i, std::span<double>(set.x_paths).subspan(i * nt, nt),
                     std::span<double>(set.y_paths).subspan(i * nt, nt));
    }
    return set;
}

double BondCheckReport::z_score() const {
    return std_error > 0.0 ? std::abs(estimate - target) / std_error : INFINITY;
}

BondCheckReport mc_bond_check(const ScenarioSet& set, const DiscountCurve& curve, double T) {
    const std::size_t nt = set.n_times();
    auto source = [&](std::size_t i, std::span<double> x, std::span<double> y) {
        std::copy_n(set.x_paths.begin() + static_cast<std::ptrdiff_t>(i * nt), nt, x.begin());
        std::copy_n(set.y_paths.begin() + static_cast<std::ptrdiff_t>(i * nt), nt, y.begin());
    };
    return bond_check_impl(source, set.n_paths(), set.config, set.times, curve, set.params, set.premium, T);
}

BondCheckReport mc_bond_check(const DiscountCurve& curve, const G2Params& p,
                              const std::optional<PremiumSpec>& premium, const SimConfig& config, double T) {
    const PathGenerator gen(p, premium, config);
    auto source = [&](std::size_t i, std::span<double> x, std::span<double> y) { gen.generate(i, x, y); };
    return bond_check_impl(source, config.n_paths, config, gen.times(), curve, p, premium, T);
}

bool MomentReport::all_within() const {
    return std::none_of(lines.begin(), lines.end(), [](const MomentLine& l) { return l.flagged; });
}

const MomentLine& MomentReport::line(const std::string& name) const {
    for (const auto& l : lines) {
        if (l.name == name) return l;
    }
    throw InputError("moment report: no line named " + name);
}

MomentReport moment_check(const ScenarioSet& set) {
    require(set.n_paths() > 0 && set.n_times() > 1, "moment check: empty scenario set");
    const std::size_t nt = set.n_times();
    auto source = [&](std::size_t i, std::span<double> x, std::span<double> y) {
        std::copy_n(set.x_paths.begin() + static_cast<std::ptrdiff_t>(i * nt), nt, x.begin());
        std::copy_n(set.y_paths.begin() + static_cast<std::ptrdiff_t>(i * nt), nt, y.begin());
    };
    return moment_check_impl(source, set.n_paths(), set.config, set.times, set.params, set.premium);
}

MomentReport moment_check(const G2Params& p, const std::optional<PremiumSpec>& premium, const SimConfig& config) {
    const PathGenerator gen(p, premium, config);
    auto source = [&](std::size_t i, std::span<double> x, std::span<double> y) { gen.generate(i, x, y); };
    return moment_check_impl(source, config.n_paths, config, gen.times(), p, premium);
}

void write_scenarios_csv(std::ostream& out, const ScenarioSet& set, const DiscountCurve& curve) {
    out << "path,time,x,y,short_rate\n";
    std::vector<double> shift(set.n_times());
    for (std::size_t k = 0; k < set.n_times(); ++k) shift[k] = shift_at(curve, set.params, set.times[k]);
    for (std::size_t i = 0; i < set.n_paths(); ++i) {
        for (std::size_t k = 0; k < set.n_times(); ++k) {
            const double x = set.x(i, k);
            const double y = set.y(i, k);
            out << i << ',' << csv::format(set.times[k]) << ',' << csv::format(x) << ','
                << csv::format(y) << ',' << csv::format(x + y + shift[k]) << '\n';
        }
    }
}

void write_scenarios_binary(std::ostream& out, const ScenarioSet& set) {
    out.write(kMagic, 8);
    put_u64(out, set.n_paths());
    put_u64(out, set.n_times());
    put_u64(out, set.config.seed);
    put_u64(out, set.config.measure == Measure::Q ? 0 : 1);
    put_f64(out, set.config.step_years);
    for (double t : set.times) put_f64(out, t);
    const std::size_t nt = set.n_times();
    for (std::size_t i = 0; i < set.n_paths(); ++i) {
        for (std::size_t k = 0; k < nt; ++k) put_f64(out, set.x(i, k));
        for (std::size_t k = 0; k < nt; ++k) put_f64(out, set.y(i, k));
    }
}

ScenarioSet read_scenarios_binary(std::istream& in) {
    char magic[8];
    in.read(magic, 8);
    if (!in || std::string(magic, 8) != std::string(kMagic, 8)) {
        throw InputError("scenario file: bad magic");
    }
    ScenarioSet set;
    const auto n_paths = get_u64(in);
    const auto n_times = get_u64(in);
    set.config.n_paths = n_paths;
    set.config.seed = get_u64(in);
    set.config.measure = get_u64(in) == 0 ? Measure::Q : Measure::P;
    set.config.step_years = get_f64(in);
    set.times.resize(n_times);
    for (auto& t : set.times) t = get_f64(in);
    set.config.horizon_years = n_times > 0 ? set.times.back() : 0.0;
    set.x_paths.resize(n_paths * n_times);
    set.y_paths.resize(n_paths * n_times);
    for (std::size_t i = 0; i < n_paths; ++i) {
        for (std::size_t k = 0; k < n_times; ++k) set.x_paths[i * n_times + k] = get_f64(in);
        for (std::size_t k = 0; k < n_times; ++k) set.y_paths[i * n_times + k] = get_f64(in);
    }
    return set;
}

}  // namespace g2pp
