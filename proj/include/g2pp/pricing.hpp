#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "g2pp/marketdata.hpp"
#include "g2pp/model.hpp"

namespace g2pp {

enum class SwaptionType { payer, receiver };

/// European swaption on a fixed-vs-float swap starting at expiry.
/// Accrual of payment i is payment_times[i] - payment_times[i-1] (expiry for i = 0).
struct SwaptionSpec {
    double expiry_years = 0.0;
    std::vector<double> payment_times;
    double fixed_rate = 0.0;
    double notional = 1.0;
    SwaptionType type = SwaptionType::payer;

    void validate() const;
    [[nodiscard]] double accrual(std::size_t i) const;
};

/// Swaption with `payments_per_year` fixed payments over `tenor_years`.
SwaptionSpec make_swaption(double expiry_years, double tenor_years, double fixed_rate,
                           SwaptionType type = SwaptionType::payer, int payments_per_year = 1,
                           double notional = 1.0);

double annuity(const DiscountCurve& curve, const SwaptionSpec& spec);
double atm_forward_swap_rate(const DiscountCurve& curve, const SwaptionSpec& spec);

/// Bachelier price of an option on a forward rate with a given annuity.
double bachelier_price(double forward, double strike, double normal_vol, double expiry,
                       double annuity, SwaptionType type);

struct QuadratureConfig {
    std::size_t initial_nodes = 64;
    std::size_t max_nodes = 8192;
    double rel_tol = 1e-8;
    double width_stdevs = 8.0;
};

/// Semi-analytic G2++ European swaption price. The expectation is reduced to
/// a one-dimensional integral over the first factor's law at expiry under the
/// expiry-forward measure; the second factor is integrated analytically after
/// solving for its critical exercise value. Gauss-Legendre node counts are
/// doubled until successive estimates agree to `rel_tol`.
/// Throws NumericError on non-convergence or when the critical value cannot
/// be bracketed.
double price_swaption_g2(const DiscountCurve& curve, const G2Params& p, const SwaptionSpec& spec,
                         const QuadratureConfig& config = {});

/// Discounted payoff with deterministic rates, i.e. the zero-volatility price.
double swaption_intrinsic(const DiscountCurve& curve, const SwaptionSpec& spec);

/// A calibration instrument: the market quote turned into a priced payer swaption.
struct SwaptionInstrument {
    SwaptionQuote quote;
    SwaptionSpec spec;
    double market_price = 0.0;
};

SwaptionInstrument to_instrument(const DiscountCurve& curve, const SwaptionQuote& quote,
                                 int payments_per_year = 1);
std::vector<SwaptionInstrument> to_instruments(const DiscountCurve& curve,
                                               std::span<const SwaptionQuote> quotes,
                                               int payments_per_year = 1);

double normal_cdf(double x);
double normal_pdf(double x);

}  // namespace g2pp
