#pragma once

#include "g2pp/marketdata.hpp"

namespace g2pp {

// Two-additive-factor Gaussian short rate:
//     r(t)  = x(t) + y(t) + phi(t)
//     dx(t) = -a x(t) dt + sigma dW1(t),   x(0) = 0
//     dy(t) = -b y(t) dt + eta   dW2(t),   y(0) = 0
//     dW1 dW2 = rho dt
// phi is fixed by the initial discount curve and only its integrals are used.

struct G2Params {
    double a = 0.1;
    double b = 0.05;
    double sigma = 0.01;
    double eta = 0.01;
    double rho = -0.5;

    /// Throws InputError unless a, b > 0, sigma, eta >= 0 and |rho| <= 1.
    void validate() const;

    friend bool operator==(const G2Params&, const G2Params&) = default;
};

struct FactorState {
    double t = 0.0;
    double x = 0.0;
    double y = 0.0;
};

/// (1 - exp(-z (T - t))) / z.
double b_loading(double z, double t, double T);

/// Variance of the integrated short rate over [t, T]; depends on T - t only.
double integrated_variance(const G2Params& p, double t, double T);

/// Integral of phi over [t, T], implied by an exact fit of the initial curve:
/// ln(df(t) / df(T)) + (V(0, T) - V(0, t)) / 2.
double integrated_phi(const DiscountCurve& curve, const G2Params& p, double t, double T);

/// Pointwise shift phi(t). Only needed to report short rates along scenarios.
double shift_at(const DiscountCurve& curve, const G2Params& p, double t);

/// Zero-coupon bond price P(t, T) given the factor state at t. The same formula
/// holds under the risk-neutral and real-world measures; only the law of
/// (x, y) differs.
double bond_price(const DiscountCurve& curve, const G2Params& p, const FactorState& s, double T);

/// Continuously compounded rate -ln P(t, T) / (T - t); requires T > t.
double model_rate(const DiscountCurve& curve, const G2Params& p, const FactorState& s, double T);

}  // namespace g2pp
