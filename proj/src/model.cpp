#include "g2pp/model.hpp"

#include <cmath>

#include "g2pp/csv.hpp"
#include "g2pp/errors.hpp"

namespace g2pp {

void G2Params::validate() const {
    require(std::isfinite(a) && a > 0.0, "G2Params: a must be positive");
    require(std::isfinite(b) && b > 0.0, "G2Params: b must be positive");
    require(std::isfinite(sigma) && sigma >= 0.0, "G2Params: sigma must be non-negative");
    require(std::isfinite(eta) && eta >= 0.0, "G2Params: eta must be non-negative");
    require(std::isfinite(rho) && rho >= -1.0 && rho <= 1.0, "G2Params: rho must lie in [-1, 1]");
}

double b_loading(double z, double t, double T) {
    const double tau = T - t;
    return -std::expm1(-z * tau) / z;
}

double integrated_variance(const G2Params& p, double t, double T) {
    const double tau = T - t;
    if (tau <= 0.0) return 0.0;
    const double a = p.a;
    const double b = p.b;
    // tau + 2/z e^{-z tau} - 1/(2z) e^{-2 z tau} - 3/(2z)  ==  tau - 2 B(z) + B(2z)
    const double vx = tau - 2.0 * b_loading(a, 0.0, tau) + b_loading(2.0 * a, 0.0, tau);
    const double vy = tau - 2.0 * b_loading(b, 0.0, tau) + b_loading(2.0 * b, 0.0, tau);
    const double vxy = tau - b_loading(a, 0.0, tau) - b_loading(b, 0.0, tau) +
                       b_loading(a + b, 0.0, tau);
    const double v = p.sigma * p.sigma / (a * a) * vx + p.eta * p.eta / (b * b) * vy +
                     2.0 * p.rho * p.sigma * p.eta / (a * b) * vxy;
    return v > 0.0 ? v : 0.0;
}

double integrated_phi(const DiscountCurve& curve, const G2Params& p, double t, double T) {
    if (T < t) throw DomainError("integrated_phi: T < t");
    if (T == t) return 0.0;
    const double log_ratio = std::log(curve.discount(t)) - std::log(curve.discount(T));
    return log_ratio + 0.5 * (integrated_variance(p, 0.0, T) - integrated_variance(p, 0.0, t));
}

double shift_at(const DiscountCurve& curve, const G2Params& p, double t) {
    const double ba = b_loading(p.a, 0.0, t);
    const double bb = b_loading(p.b, 0.0, t);
    return curve.instantaneous_forward(t) + 0.5 * p.sigma * p.sigma * ba * ba +
           0.5 * p.eta * p.eta * bb * bb + p.rho * p.sigma * p.eta * ba * bb;
}

double bond_price(const DiscountCurve& curve, const G2Params& p, const FactorState& s, double T) {
    if (T < s.t) throw DomainError("bond_price: maturity " + csv::format(T) + " before state time");
    if (T == s.t) return 1.0;
    const double exponent = -integrated_phi(curve, p, s.t, T) - b_loading(p.a, s.t, T) * s.x -
                            b_loading(p.b, s.t, T) * s.y + 0.5 * integrated_variance(p, s.t, T);
    return std::exp(exponent);
}

double model_rate(const DiscountCurve& curve, const G2Params& p, const FactorState& s, double T) {
    if (!(T > s.t)) throw DomainError("model_rate: requires T > t");
    return -std::log(bond_price(curve, p, s, T)) / (T - s.t);
}

}  // namespace g2pp
