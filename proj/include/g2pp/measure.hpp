#pragma once

#include <span>
#include <string>

#include "g2pp/marketdata.hpp"
#include "g2pp/model.hpp"

namespace g2pp {

enum class PremiumKind { constant, step, linear };

const char* to_string(PremiumKind kind);
PremiumKind parse_premium_kind(const std::string& text);

/// Local long-run risk premia d_x(t), d_y(t): the real-world mean-reversion
/// levels of the two factors.
///
///   constant: d(t) = d
///   step:     d(t) = d            for t <= tau,  l for t > tau
///   linear:   d(t) = (1 - m t) d  for t <= tau,  l for t > tau
///
/// For the linear kind the slopes m = (d - l) / (d tau) make the absolute
/// premium RP continuously differentiable at tau; they are derived at
/// construction and require |d| > 1e-12.
struct PremiumSpec {
    PremiumKind kind = PremiumKind::constant;
    double d_x = 0.0;
    double d_y = 0.0;
    double l_x = 0.0;
    double l_y = 0.0;
    double tau = 0.0;
    double m_x = 0.0;
    double m_y = 0.0;

    static PremiumSpec constant(double d_x, double d_y);
    static PremiumSpec step(double d_x, double d_y, double l_x, double l_y, double tau);
    /// Throws NumericError when |d_x| or |d_y| is below 1e-12 (the slope is undefined).
    static PremiumSpec linear(double d_x, double d_y, double l_x, double l_y, double tau);

    void validate() const;
};

struct FactorPair {
    double x = 0.0;
    double y = 0.0;
};

struct MarketPriceOfRisk {
    double phi1 = 0.0;
    double phi2 = 0.0;
};

/// (d_x(t), d_y(t)); the short-term branch applies for t <= tau.
FactorPair d_value(const PremiumSpec& spec, double t);

/// Girsanov kernel implied by the premia. Diagnostic only: throws NumericError
/// for |rho| >= 1 - 1e-9, sigma == 0 or eta == 0, where the second component
/// is singular. Simulation and pricing never need it.
MarketPriceOfRisk market_price_of_risk(const G2Params& p, const PremiumSpec& spec, double t);

/// Absolute risk premium RP(t) = int_0^t e^{-z(t-u)} z d(u) du in closed form.
double rp_x(const G2Params& p, const PremiumSpec& spec, double t);
double rp_y(const G2Params& p, const PremiumSpec& spec, double t);

/// int_{t0}^{t1} e^{-z(t1-u)} z d(u) du for both factors; the deterministic
/// part of an exact real-world factor transition over [t0, t1]. Segments
/// crossing tau are split there.
FactorPair drift_increment(const G2Params& p, const PremiumSpec& spec, double t0, double t1);

/// int_0^T RP(u) du for both factors, the real-world shift of the mean of int_0^T r.
FactorPair integrated_rp(const G2Params& p, const PremiumSpec& spec, double T);

/// Risk-neutral expectation of r(t, T) seen from today.
double expected_rate_q(const DiscountCurve& curve, const G2Params& p, double t, double T);

/// Real-world expectation of r(t, T):
///   E^Q[r(t,T)] + B(a,t,T)/(T-t) RP_x(t) + B(b,t,T)/(T-t) RP_y(t).
double expected_rate_p(const DiscountCurve& curve, const G2Params& p, const PremiumSpec& spec,
                       double t, double T);

/// Fits premium parameters so that expected_rate_p reproduces the forecasts.
///
/// constant: exactly two forecasts, solving for (d_x, d_y).
/// step, linear: exactly four forecasts; after a stable sort by horizon the
/// first two are the short-term and the last two the long-term forecasts, and
/// t1 <= t2 <= tau < t3 <= t4 must hold. Solves for (d_x, d_y, l_x, l_y).
///
/// Throws InputError on arity or ordering violations and NumericError when
/// the linear system is singular or ill-conditioned (condition number above
/// 1e12) or when a linear-kind short-term level vanishes.
PremiumSpec calibrate_p(const DiscountCurve& curve, const G2Params& p, PremiumKind kind,
                        std::span<const RateForecast> forecasts, double tau = 0.0);

}  // namespace g2pp
