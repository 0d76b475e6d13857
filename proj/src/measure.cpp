#include "g2pp/measure.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <vector>

#include "g2pp/csv.hpp"
#include "g2pp/errors.hpp"

namespace g2pp {

namespace {

constexpr double kMinLinearLevel = 1e-12;
constexpr double kMaxCondition = 1e12;

struct Branches {
    double d;
    double l;
    double m;
};

Branches x_branches(const PremiumSpec& s) { return {s.d_x, s.l_x, s.m_x}; }
Branches y_branches(const PremiumSpec& s) { return {s.d_y, s.l_y, s.m_y}; }

double rp_factor(double z, PremiumKind kind, const Branches& br, double tau, double t) {
    if (t <= 0.0) return 0.0;
    if (kind == PremiumKind::constant) return -std::expm1(-z * t) * br.d;
    const double s = std::min(t, tau);
    const double e1 = std::exp(-z * (t - s));
    const double e1_minus_e0 = e1 * -std::expm1(-z * s);
    const double one_minus_e1 = -std::expm1(-z * (t - s));
    if (kind == PremiumKind::step) return e1_minus_e0 * br.d + one_minus_e1 * br.l;
    return (e1_minus_e0 * (1.0 + br.m / z) - e1 * br.m * s) * br.d + one_minus_e1 * br.l;
}

// int_{u0}^{u1} z e^{-z(t1-u)} (1 - m u) c du
double drift_piece(double z, double c, double m, double u0, double u1, double t1) {
    if (u1 <= u0) return 0.0;
    const double e1 = std::exp(-z * (t1 - u1));
    const double e0 = std::exp(-z * (t1 - u0));
    const double diff = e1 * -std::expm1(-z * (u1 - u0));
    if (m == 0.0) return c * diff;
    return c * (diff - m * (u1 * e1 - u0 * e0 - diff / z));
}

double drift_factor(double z, PremiumKind kind, const Branches& br, double tau, double t0, double t1) {
    if (kind == PremiumKind::constant) return drift_piece(z, br.d, 0.0, t0, t1, t1);
    const double m = kind == PremiumKind::linear ? br.m : 0.0;
    return drift_piece(z, br.d, m, t0, std::min(t1, tau), t1) +
           drift_piece(z, br.l, 0.0, std::max(t0, tau), t1, t1);
}

// int_{u0}^{u1} (1 - e^{-z(T-u)}) (1 - m u) c du
double rp_integral_piece(double z, double c, double m, double u0, double u1, double T) {
    if (u1 <= u0) return 0.0;
    const double e1 = std::exp(-z * (T - u1));
    const double e0 = std::exp(-z * (T - u0));
    const double diff = e1 * -std::expm1(-z * (u1 - u0));
    double value = (u1 - u0) - diff / z;
    if (m != 0.0) {
        value += -m * 0.5 * (u1 * u1 - u0 * u0) + m * ((u1 * e1 - u0 * e0) / z - diff / (z * z));
    }
    return c * value;
}

double rp_integral_factor(double z, PremiumKind kind, const Branches& br, double tau, double T) {
    if (T <= 0.0) return 0.0;
    if (kind == PremiumKind::constant) return rp_integral_piece(z, br.d, 0.0, 0.0, T, T);
    const double m = kind == PremiumKind::linear ? br.m : 0.0;
    return rp_integral_piece(z, br.d, m, 0.0, std::min(T, tau), T) +
           rp_integral_piece(z, br.l, 0.0, std::min(T, tau), T, T);
}

// RP(t) = alpha_d d + alpha_l l. For the linear kind m d = (d - l) / tau, which
// keeps RP linear in (d, l).
std::array<double, 2> rp_coefficients(double z, PremiumKind kind, double tau, double t) {
    if (kind == PremiumKind::constant) return {-std::expm1(-z * t), 0.0};
    const double s = std::min(t, tau);
    const double e1 = std::exp(-z * (t - s));
    const double e1_minus_e0 = e1 * -std::expm1(-z * s);
    const double one_minus_e1 = -std::expm1(-z * (t - s));
    if (kind == PremiumKind::step) return {e1_minus_e0, one_minus_e1};
    const double slope_term = (e1_minus_e0 / z - e1 * s) / tau;
    return {e1_minus_e0 + slope_term, one_minus_e1 - slope_term};
}

// Solves A x = rhs by Gauss-Jordan elimination with partial pivoting and
// returns the 1-norm condition number alongside the solution.
struct LinearSolve {
    std::vector<double> x;
    double condition = 0.0;
};

LinearSolve solve_dense(std::vector<std::vector<double>> A, std::vector<double> rhs) {
    const std::size_t n = A.size();
    double norm_a = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
        double col = 0.0;
        for (std::size_t i = 0; i < n; ++i) col += std::abs(A[i][j]);
        norm_a = std::max(norm_a, col);
    }
    std::vector<std::vector<double>> inv(n, std::vector<double>(n, 0.0));
    for (std::size_t i = 0; i < n; ++i) inv[i][i] = 1.0;

    for (std::size_t k = 0; k < n; ++k) {
        std::size_t pivot = k;
        for (std::size_t i = k + 1; i < n; ++i) {
            if (std::abs(A[i][k]) > std::abs(A[pivot][k])) pivot = i;
        }
        if (A[pivot][k] == 0.0) return {{}, INFINITY};
        std::swap(A[k], A[pivot]);
        std::swap(inv[k], inv[pivot]);
        std::swap(rhs[k], rhs[pivot]);
        const double diag = A[k][k];
        for (std::size_t j = 0; j < n; ++j) {
            A[k][j] /= diag;
            inv[k][j] /= diag;
        }
        rhs[k] /= diag;
        for (std::size_t i = 0; i < n; ++i) {
            if (i == k || A[i][k] == 0.0) continue;
            const double f = A[i][k];
            for (std::size_t j = 0; j < n; ++j) {
                A[i][j] -= f * A[k][j];
                inv[i][j] -= f * inv[k][j];
            }
            rhs[i] -= f * rhs[k];
        }
    }
    double norm_inv = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
        double col = 0.0;
        for (std::size_t i = 0; i < n; ++i) col += std::abs(inv[i][j]);
        norm_inv = std::max(norm_inv, col);
    }
    return {std::move(rhs), norm_a * norm_inv};
}

std::string most_colinear_pair(const std::vector<std::vector<double>>& rows) {
    double best = -1.0;
    std::size_t bi = 0;
    std::size_t bj = 1;
    for (std::size_t i = 0; i < rows.size(); ++i) {
        for (std::size_t j = i + 1; j < rows.size(); ++j) {
            double dot = 0.0, ni = 0.0, nj = 0.0;
            for (std::size_t k = 0; k < rows[i].size(); ++k) {
                dot += rows[i][k] * rows[j][k];
                ni += rows[i][k] * rows[i][k];
                nj += rows[j][k] * rows[j][k];
            }
            const double c = (ni > 0.0 && nj > 0.0) ? std::abs(dot) / std::sqrt(ni * nj) : 1.0;
            if (c > best) {
                best = c;
                bi = i;
                bj = j;
            }
        }
    }
    return "forecasts " + std::to_string(bi + 1) + " and " + std::to_string(bj + 1);
}

}  // namespace

const char* to_string(PremiumKind kind) {
    switch (kind) {
        case PremiumKind::constant: return "constant";
        case PremiumKind::step: return "step";
        case PremiumKind::linear: return "linear";
    }
    return "?";
}

PremiumKind parse_premium_kind(const std::string& text) {
    if (text == "constant") return PremiumKind::constant;
    if (text == "step") return PremiumKind::step;
    if (text == "linear") return PremiumKind::linear;
    throw InputError("unknown premium kind '" + text + "' (expected constant|step|linear)");
}

PremiumSpec PremiumSpec::constant(double d_x, double d_y) {
    PremiumSpec s;
    s.kind = PremiumKind::constant;
    s.d_x = d_x;
    s.d_y = d_y;
    return s;
}

PremiumSpec PremiumSpec::step(double d_x, double d_y, double l_x, double l_y, double tau) {
    PremiumSpec s{PremiumKind::step, d_x, d_y, l_x, l_y, tau, 0.0, 0.0};
    s.validate();
    return s;
}

PremiumSpec PremiumSpec::linear(double d_x, double d_y, double l_x, double l_y, double tau) {
    require(tau > 0.0, "premium: tau must be positive");
    if (std::abs(d_x) <= kMinLinearLevel || std::abs(d_y) <= kMinLinearLevel) {
        throw NumericError("premium: linear kind needs |d_x|, |d_y| > 1e-12 (slope undefined); "
                           "use the step kind instead");
    }
    PremiumSpec s{PremiumKind::linear, d_x, d_y, l_x, l_y, tau, 0.0, 0.0};
    s.m_x = (d_x - l_x) / (d_x * tau);
    s.m_y = (d_y - l_y) / (d_y * tau);
    return s;
}

void PremiumSpec::validate() const {
    require(std::isfinite(d_x) && std::isfinite(d_y), "premium: d_x, d_y must be finite");
    if (kind == PremiumKind::constant) return;
    require(std::isfinite(l_x) && std::isfinite(l_y), "premium: l_x, l_y must be finite");
    require(std::isfinite(tau) && tau > 0.0, "premium: tau must be positive");
    if (kind == PremiumKind::linear) {
        require(std::abs(d_x) > kMinLinearLevel && std::abs(d_y) > kMinLinearLevel,
                "premium: linear kind needs non-zero d_x, d_y");
    }
}

FactorPair d_value(const PremiumSpec& spec, double t) {
    switch (spec.kind) {
        case PremiumKind::constant: return {spec.d_x, spec.d_y};
        case PremiumKind::step:
            if (t <= spec.tau) return {spec.d_x, spec.d_y};
            return {spec.l_x, spec.l_y};
        case PremiumKind::linear:
            if (t <= spec.tau) return {(1.0 - spec.m_x * t) * spec.d_x, (1.0 - spec.m_y * t) * spec.d_y};
            return {spec.l_x, spec.l_y};
    }
    return {};
}

MarketPriceOfRisk market_price_of_risk(const G2Params& p, const PremiumSpec& spec, double t) {
    if (!(p.sigma > 0.0) || !(p.eta > 0.0)) {
        throw NumericError("market_price_of_risk: requires sigma > 0 and eta > 0");
    }
    if (std::abs(p.rho) >= 1.0 - 1e-9) {
        throw NumericError("market_price_of_risk: singular for |rho| -> 1; the real-world factor "
                           "dynamics in (d_x, d_y) form remain valid and do not need it");
    }
    const auto d = d_value(spec, t);
    const double root = std::sqrt(1.0 - p.rho * p.rho);
    return {-p.a * d.x / p.sigma,
            -p.b * d.y / (p.eta * root) + p.rho * p.a * d.x / (p.sigma * root)};
}

double rp_x(const G2Params& p, const PremiumSpec& spec, double t) {
    return rp_factor(p.a, spec.kind, x_branches(spec), spec.tau, t);
}

double rp_y(const G2Params& p, const PremiumSpec& spec, double t) {
    return rp_factor(p.b, spec.kind, y_branches(spec), spec.tau, t);
}

FactorPair drift_increment(const G2Params& p, const PremiumSpec& spec, double t0, double t1) {
    return {drift_factor(p.a, spec.kind, x_branches(spec), spec.tau, t0, t1),
            drift_factor(p.b, spec.kind, y_branches(spec), spec.tau, t0, t1)};
}

FactorPair integrated_rp(const G2Params& p, const PremiumSpec& spec, double T) {
    return {rp_integral_factor(p.a, spec.kind, x_branches(spec), spec.tau, T),
            rp_integral_factor(p.b, spec.kind, y_branches(spec), spec.tau, T)};
}

double expected_rate_q(const DiscountCurve& curve, const G2Params& p, double t, double T) {
    if (!(t >= 0.0 && T > t)) throw DomainError("expected_rate: requires 0 <= t < T");
    return (integrated_phi(curve, p, t, T) - 0.5 * integrated_variance(p, t, T)) / (T - t);
}

double expected_rate_p(const DiscountCurve& curve, const G2Params& p, const PremiumSpec& spec,
                       double t, double T) {
    const double base = expected_rate_q(curve, p, t, T);
    const double len = T - t;
    return base + b_loading(p.a, t, T) / len * rp_x(p, spec, t) +
           b_loading(p.b, t, T) / len * rp_y(p, spec, t);
}

PremiumSpec calibrate_p(const DiscountCurve& curve, const G2Params& p, PremiumKind kind,
                        std::span<const RateForecast> forecasts, double tau) {
    p.validate();
    const std::size_t expected = kind == PremiumKind::constant ? 2 : 4;
    if (forecasts.size() != expected) {
        throw InputError(std::string("calibrate_p: ") + to_string(kind) + " kind takes exactly " +
                         std::to_string(expected) + " forecasts, got " + std::to_string(forecasts.size()));
    }
    std::vector<RateForecast> fc(forecasts.begin(), forecasts.end());
    std::stable_sort(fc.begin(), fc.end(), [](const RateForecast& l, const RateForecast& r) {
        return l.horizon_years < r.horizon_years;
    });
    for (const auto& f : fc) {
        require(f.horizon_years >= 0.0 && f.maturity_years > f.horizon_years,
                "calibrate_p: each forecast needs maturity > horizon >= 0");
    }
    if (kind != PremiumKind::constant) {
        require(tau > 0.0, "calibrate_p: tau must be positive");
        if (!(fc[1].horizon_years <= tau && tau < fc[2].horizon_years)) {
            throw InputError("calibrate_p: need t1 <= t2 <= tau < t3 <= t4 (t2 = " +
                             csv::format(fc[1].horizon_years) + ", tau = " + csv::format(tau) +
                             ", t3 = " + csv::format(fc[2].horizon_years) + ")");
        }
    }

    const std::size_t n = expected;
    std::vector<std::vector<double>> A(n, std::vector<double>(n, 0.0));
    std::vector<double> rhs(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double t = fc[i].horizon_years;
        const double T = fc[i].maturity_years;
        const double load_a = b_loading(p.a, t, T) / (T - t);
        const double load_b = b_loading(p.b, t, T) / (T - t);
        const auto ca = rp_coefficients(p.a, kind, tau, t);
        const auto cb = rp_coefficients(p.b, kind, tau, t);
        A[i][0] = load_a * ca[0];
        A[i][1] = load_b * cb[0];
        if (n == 4) {
            A[i][2] = load_a * ca[1];
            A[i][3] = load_b * cb[1];
        }
        rhs[i] = fc[i].rate - expected_rate_q(curve, p, t, T);
    }
    const auto solved = solve_dense(A, rhs);
    if (!(solved.condition <= kMaxCondition)) {
        throw NumericError("calibrate_p: singular or ill-conditioned system (condition number " +
                           csv::format(solved.condition) + "); check " + most_colinear_pair(A));
    }
    const auto& x = solved.x;
    switch (kind) {
        case PremiumKind::constant: return PremiumSpec::constant(x[0], x[1]);
        case PremiumKind::step: return PremiumSpec::step(x[0], x[1], x[2], x[3], tau);
        case PremiumKind::linear: return PremiumSpec::linear(x[0], x[1], x[2], x[3], tau);
    }
    return {};
}

}  // namespace g2pp
