#include "g2pp/pricing.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "g2pp/csv.hpp"
#include "g2pp/errors.hpp"
#include "g2pp/quadrature.hpp"

namespace g2pp {

double normal_cdf(double x) {
    return 0.5 * std::erfc(-x / std::numbers::sqrt2);
}

double normal_pdf(double x) {
    return std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi);
}

void SwaptionSpec::validate() const {
    require(expiry_years > 0.0, "swaption: expiry must be positive");
    require(!payment_times.empty(), "swaption: no payment times");
    require(payment_times.front() > expiry_years, "swaption: first payment must follow expiry");
    for (std::size_t i = 1; i < payment_times.size(); ++i) {
        require(payment_times[i] > payment_times[i - 1], "swaption: payment times must increase");
    }
    require(notional > 0.0, "swaption: notional must be positive");
}

double SwaptionSpec::accrual(std::size_t i) const {
    return payment_times[i] - (i == 0 ? expiry_years : payment_times[i - 1]);
}

SwaptionSpec make_swaption(double expiry_years, double tenor_years, double fixed_rate,
                           SwaptionType type, int payments_per_year, double notional) {
    require(payments_per_year > 0, "swaption: payments per year must be positive");
    require(tenor_years > 0.0, "swaption: tenor must be positive");
    const double periods = tenor_years * payments_per_year;
    const auto n = static_cast<long>(std::llround(periods));
    if (n < 1 || std::abs(periods - static_cast<double>(n)) > 1e-9) {
        throw InputError("swaption: tenor " + csv::format(tenor_years) +
                         " is not a whole number of fixed periods");
    }
    SwaptionSpec spec;
    spec.expiry_years = expiry_years;
    spec.fixed_rate = fixed_rate;
    spec.notional = notional;
    spec.type = type;
    spec.payment_times.reserve(static_cast<std::size_t>(n));
    for (long k = 1; k <= n; ++k) {
        spec.payment_times.push_back(expiry_years + static_cast<double>(k) / payments_per_year);
    }
    spec.validate();
    return spec;
}

double annuity(const DiscountCurve& curve, const SwaptionSpec& spec) {
    double sum = 0.0;
    for (std::size_t i = 0; i < spec.payment_times.size(); ++i) {
        sum += spec.accrual(i) * curve.discount(spec.payment_times[i]);
    }
    return sum;
}

double atm_forward_swap_rate(const DiscountCurve& curve, const SwaptionSpec& spec) {
    const double level = annuity(curve, spec);
    if (!(level > 0.0)) throw NumericError("atm_forward_swap_rate: zero annuity");
    return (curve.discount(spec.expiry_years) - curve.discount(spec.payment_times.back())) / level;
}

double bachelier_price(double forward, double strike, double normal_vol, double expiry,
                       double annuity_value, SwaptionType type) {
    const double omega = type == SwaptionType::payer ? 1.0 : -1.0;
    const double moneyness = omega * (forward - strike);
    const double stdev = normal_vol * std::sqrt(expiry);
    if (stdev <= 0.0) return annuity_value * std::max(moneyness, 0.0);
    const double d = moneyness / stdev;
    return annuity_value * (moneyness * normal_cdf(d) + stdev * normal_pdf(d));
}

double swaption_intrinsic(const DiscountCurve& curve, const SwaptionSpec& spec) {
    const double omega = spec.type == SwaptionType::payer ? 1.0 : -1.0;
    double fixed = 0.0;
    for (std::size_t i = 0; i < spec.payment_times.size(); ++i) {
        fixed += spec.fixed_rate * spec.accrual(i) * curve.discount(spec.payment_times[i]);
    }
    fixed += curve.discount(spec.payment_times.back());
    const double value = omega * (curve.discount(spec.expiry_years) - fixed);
    return spec.notional * std::max(value, 0.0);
}

namespace {

// Per-swaption constants of the conditional pricing integrand. Given x(T) = x,
// y(T) is normal with mean m(x) = mu_y + beta (x - mu_x) and sd cond_sd. With
// y = m(x) + cond_sd h the swap's fixed-leg value per unit of the expiry bond
// becomes sum_i v_i(x) exp(-sb_i h), where v_i(x) = vconst_i exp(-slope_i x).
struct G2Integrand {
    double omega = 1.0;
    double mu_x = 0.0;
    double sd_x = 0.0;
    double cond_sd = 0.0;
    std::vector<double> vconst;
    std::vector<double> slope;
    std::vector<double> sb;        // b_loading(b) * cond_sd
    std::vector<double> lognorm;   // exp(sb^2 / 2)
    mutable std::vector<double> v;
    mutable double last_h = 0.0;

    void load(double x) const {
        v.resize(vconst.size());
        for (std::size_t i = 0; i < vconst.size(); ++i) v[i] = vconst[i] * std::exp(-slope[i] * x);
    }

    // sum_i v_i exp(-sb_i h) - 1; decreasing in h for positive coefficients.
    double boundary(double h, double* derivative) const {
        double f = -1.0;
        double df = 0.0;
        for (std::size_t i = 0; i < v.size(); ++i) {
            const double term = v[i] * std::exp(-sb[i] * h);
            f += term;
            df -= sb[i] * term;
        }
        if (derivative != nullptr) *derivative = df;
        return f;
    }

    double critical_h(double start) const {
        // Plain Newton from the previous node's root; the boundary is convex
        // and decreasing for positive cash flows, so this rarely needs the
        // bracketed fallback.
        double h = start;
        for (int iter = 0; iter < 50; ++iter) {
            double df = 0.0;
            const double f = boundary(h, &df);
            if (!(df < 0.0) || !std::isfinite(f)) break;
            const double next = h - f / df;
            if (!std::isfinite(next)) break;
            if (std::abs(next - h) <= 1e-12 * (1.0 + std::abs(h))) return next;
            h = next;
        }
        return bracketed_critical_h(start);
    }

    double bracketed_critical_h(double start) const {
        double lo = start;
        double hi = start;
        double flo = boundary(lo, nullptr);
        double fhi = flo;
        double step = 0.5;
        for (int i = 0; flo < 0.0; ++i) {
            if (i > 200) throw NumericError("price_swaption_g2: cannot bracket critical y (low side)");
            hi = lo;
            fhi = flo;
            lo -= step;
            step *= 2.0;
            flo = boundary(lo, nullptr);
        }
        step = 0.5;
        for (int i = 0; fhi > 0.0; ++i) {
            if (i > 200) throw NumericError("price_swaption_g2: cannot bracket critical y (high side)");
            lo = hi;
            flo = fhi;
            hi += step;
            step *= 2.0;
            fhi = boundary(hi, nullptr);
        }
        if (flo == 0.0) return lo;
        if (fhi == 0.0) return hi;
        // Safeguarded Newton inside [lo, hi].
        double h = lo == start ? lo : (hi == start ? hi : 0.5 * (lo + hi));
        for (int iter = 0; iter < 200; ++iter) {
            double df = 0.0;
            const double f = boundary(h, &df);
            if (f > 0.0) lo = h; else hi = h;
            double next = df != 0.0 ? h - f / df : 0.5 * (lo + hi);
            if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
            if (std::abs(next - h) <= 1e-14 * (1.0 + std::abs(h)) || hi - lo <= 1e-14 * (1.0 + std::abs(h))) {
                return next;
            }
            h = next;
        }
        return h;
    }

    // Exercise boundary at the conditional mean of y. Where it changes sign the
    // inner payoff bends sharply (it has a kink when cond_sd = 0), so the outer
    // integral is split there.
    double boundary_at_mean(double x) const {
        load(x);
        return boundary(0.0, nullptr);
    }

    std::vector<double> breakpoints(double lo, double hi) const {
        constexpr int kScan = 64;
        std::vector<double> points{lo};
        double x0 = lo;
        double f0 = boundary_at_mean(x0);
        for (int k = 1; k <= kScan; ++k) {
            const double x1 = lo + (hi - lo) * k / kScan;
            const double f1 = boundary_at_mean(x1);
            if ((f0 < 0.0) != (f1 < 0.0)) {
                double left = x0, right = x1, f_left = f0;
                for (int it = 0; it < 200 && right - left > 1e-15 * (1.0 + std::abs(left)); ++it) {
                    const double mid = 0.5 * (left + right);
                    const double fm = boundary_at_mean(mid);
                    if ((fm < 0.0) == (f_left < 0.0)) {
                        left = mid;
                        f_left = fm;
                    } else {
                        right = mid;
                    }
                }
                const double root = 0.5 * (left + right);
                if (root > points.back()) points.push_back(root);
            }
            x0 = x1;
            f0 = f1;
        }
        if (hi > points.back()) points.push_back(hi);
        return points;
    }

    // Conditional expectation of the normalized payoff given x.
    double inner(double x) const {
        load(x);
        if (cond_sd <= 0.0) return std::max(-omega * boundary(0.0, nullptr), 0.0);
        const double h1 = critical_h(last_h);
        last_h = h1;
        double value = normal_cdf(-omega * h1);
        for (std::size_t i = 0; i < v.size(); ++i) {
            value -= v[i] * lognorm[i] * normal_cdf(-omega * (h1 + sb[i]));
        }
        return omega * value;
    }
};

G2Integrand build_integrand(const DiscountCurve& curve, const G2Params& p, const SwaptionSpec& spec) {
    const double T = spec.expiry_years;
    const double a = p.a;
    const double b = p.b;
    const double s = p.sigma;
    const double e = p.eta;
    const double r = p.rho;
    const double ea = -std::expm1(-a * T);
    const double eb = -std::expm1(-b * T);
    const double e2a = -std::expm1(-2.0 * a * T);
    const double e2b = -std::expm1(-2.0 * b * T);
    const double eab = -std::expm1(-(a + b) * T);

    G2Integrand g;
    g.omega = spec.type == SwaptionType::payer ? 1.0 : -1.0;
    // Moments of (x(T), y(T)) under the T-forward measure.
    g.mu_x = -(s * s / (a * a) + r * s * e / (a * b)) * ea + s * s / (2.0 * a * a) * e2a +
             r * s * e / (b * (a + b)) * eab;
    const double mu_y = -(e * e / (b * b) + r * s * e / (a * b)) * eb + e * e / (2.0 * b * b) * e2b +
                        r * s * e / (a * (a + b)) * eab;
    g.sd_x = s * std::sqrt(e2a / (2.0 * a));
    const double sd_y = e * std::sqrt(e2b / (2.0 * b));
    double rho_xy = 0.0;
    if (g.sd_x > 0.0 && sd_y > 0.0) {
        rho_xy = std::clamp(r * s * e / ((a + b) * g.sd_x * sd_y) * eab, -1.0, 1.0);
    }
    const double beta = g.sd_x > 0.0 ? rho_xy * sd_y / g.sd_x : 0.0;
    g.cond_sd = sd_y * std::sqrt(std::max(0.0, 1.0 - rho_xy * rho_xy));

    const double df_T = curve.discount(T);
    const double v0T = integrated_variance(p, 0.0, T);
    const std::size_t n = spec.payment_times.size();
    for (std::size_t i = 0; i < n; ++i) {
        const double ti = spec.payment_times[i];
        const double A = curve.discount(ti) / df_T *
                         std::exp(0.5 * (integrated_variance(p, T, ti) - integrated_variance(p, 0.0, ti) + v0T));
        double c = spec.fixed_rate * spec.accrual(i);
        if (i + 1 == n) c += 1.0;
        const double ba = b_loading(a, T, ti);
        const double bb = b_loading(b, T, ti);
        g.vconst.push_back(c * A * std::exp(-bb * (mu_y - beta * g.mu_x)));
        g.slope.push_back(ba + bb * beta);
        g.sb.push_back(bb * g.cond_sd);
        g.lognorm.push_back(std::exp(0.5 * bb * bb * g.cond_sd * g.cond_sd));
    }
    return g;
}

}  // namespace

double price_swaption_g2(const DiscountCurve& curve, const G2Params& p, const SwaptionSpec& spec,
                         const QuadratureConfig& config) {
    p.validate();
    spec.validate();
    const G2Integrand g = build_integrand(curve, p, spec);
    const double scale = spec.notional * curve.discount(spec.expiry_years);

    if (g.sd_x <= 0.0) return scale * g.inner(g.mu_x);

    const double lo = g.mu_x - config.width_stdevs * g.sd_x;
    const double hi = g.mu_x + config.width_stdevs * g.sd_x;
    const auto integrand = [&](double x) {
        const double z = (x - g.mu_x) / g.sd_x;
        return normal_pdf(z) / g.sd_x * g.inner(x);
    };
    const auto pieces = g.breakpoints(lo, hi);
    const auto integrate_all = [&](std::size_t n) {
        double sum = 0.0;
        for (std::size_t k = 0; k + 1 < pieces.size(); ++k) {
            sum += quadrature::integrate(integrand, pieces[k], pieces[k + 1], n);
        }
        return sum;
    };
    std::size_t nodes = std::max<std::size_t>(config.initial_nodes, 64);
    double previous = integrate_all(nodes);
    while (nodes < config.max_nodes) {
        nodes *= 2;
        const double current = integrate_all(nodes);
        const double diff = std::abs(current - previous);
        if (diff <= config.rel_tol * std::abs(current) || diff <= 1e-15) {
            return scale * std::max(current, 0.0);
        }
        previous = current;
    }
    throw NumericError("price_swaption_g2: quadrature did not converge (expiry " +
                       csv::format(spec.expiry_years) + ")");
}

SwaptionInstrument to_instrument(const DiscountCurve& curve, const SwaptionQuote& quote,
                                 int payments_per_year) {
    SwaptionInstrument inst;
    inst.quote = quote;
    inst.spec = make_swaption(quote.expiry_years, quote.tenor_years, 0.0, SwaptionType::payer,
                              payments_per_year);
    const double forward = atm_forward_swap_rate(curve, inst.spec);
    inst.spec.fixed_rate = quote.strike.value_or(forward);
    if (quote.kind == QuoteKind::price) {
        inst.market_price = quote.quote;
    } else {
        inst.market_price = bachelier_price(forward, inst.spec.fixed_rate, quote.quote,
                                            quote.expiry_years, annuity(curve, inst.spec),
                                            SwaptionType::payer);
    }
    return inst;
}

std::vector<SwaptionInstrument> to_instruments(const DiscountCurve& curve,
                                               std::span<const SwaptionQuote> quotes,
                                               int payments_per_year) {
    std::vector<SwaptionInstrument> out;
    out.reserve(quotes.size());
    for (const auto& q : quotes) out.push_back(to_instrument(curve, q, payments_per_year));
    return out;
}

}  // namespace g2pp
