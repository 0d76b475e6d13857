#pragma once

#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace g2pp {

/// Continuously compounded zero curve stored as discount factors.
///
/// Interpolation is linear in log discount factor between pillars, with an
/// implicit pillar (0, 1). Forward rates are therefore piecewise flat, and
/// integrals of the forward curve over any interval are exact.
/// Beyond the last pillar the curve is undefined unless flat-forward
/// extrapolation was requested at construction.
class DiscountCurve {
public:
    struct Pillar {
        double maturity;
        double discount;
    };

    DiscountCurve() = default;

    /// Validates and builds a curve. Throws InputError when maturities are not
    /// strictly increasing, the first maturity is not positive, or a discount
    /// factor falls outside (0, 1.5].
    static DiscountCurve from_pillars(std::vector<Pillar> pillars, bool extrapolate = false,
                                      std::string valuation_date = {});
    static DiscountCurve from_zero_rates(std::span<const double> maturities,
                                         std::span<const double> rates, bool extrapolate = false);
    static DiscountCurve flat(double rate, double last_maturity, bool extrapolate = false);

    [[nodiscard]] double discount(double t) const;
    /// -ln(df(t))/t; throws DomainError at t = 0.
    [[nodiscard]] double spot_rate(double t) const;
    /// Right-continuous instantaneous forward f(0,t).
    [[nodiscard]] double instantaneous_forward(double t) const;

    [[nodiscard]] const std::vector<Pillar>& pillars() const { return pillars_; }
    [[nodiscard]] double last_maturity() const { return pillars_.empty() ? 0.0 : pillars_.back().maturity; }
    [[nodiscard]] bool extrapolates() const { return extrapolate_; }
    [[nodiscard]] const std::string& valuation_date() const { return valuation_date_; }

    /// Copy of this curve with extrapolation switched on or off.
    [[nodiscard]] DiscountCurve with_extrapolation(bool enabled) const;

private:
    [[nodiscard]] double log_discount(double t) const;

    std::vector<Pillar> pillars_;
    std::vector<double> log_df_;
    bool extrapolate_ = false;
    std::string valuation_date_;
};

enum class QuoteKind { price, normal_vol };

struct SwaptionQuote {
    double expiry_years = 0.0;
    double tenor_years = 0.0;
    double quote = 0.0;
    QuoteKind kind = QuoteKind::normal_vol;
    /// Fixed rate; absent means at-the-money forward.
    std::optional<double> strike;
};

/// Point forecast of the continuously compounded rate r(horizon, maturity).
struct RateForecast {
    double horizon_years = 0.0;
    double maturity_years = 0.0;
    double rate = 0.0;

    [[nodiscard]] double tenor() const { return maturity_years - horizon_years; }
};

DiscountCurve load_curve(std::istream& in, const std::string& source = "<curve>",
                         bool extrapolate = false);
DiscountCurve load_curve_file(const std::string& path, bool extrapolate = false);
void write_curve(std::ostream& out, const DiscountCurve& curve);

std::vector<SwaptionQuote> load_swaptions(std::istream& in, const std::string& source = "<swaptions>");
std::vector<SwaptionQuote> load_swaptions_file(const std::string& path);
void write_swaptions(std::ostream& out, std::span<const SwaptionQuote> quotes);

std::vector<RateForecast> load_forecasts(std::istream& in, const std::string& source = "<forecasts>");
std::vector<RateForecast> load_forecasts_file(const std::string& path);
void write_forecasts(std::ostream& out, std::span<const RateForecast> forecasts);

const char* to_string(QuoteKind kind);
QuoteKind parse_quote_kind(const std::string& text);

}  // namespace g2pp
