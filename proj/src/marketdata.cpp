#include "g2pp/marketdata.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>

#include "g2pp/csv.hpp"
#include "g2pp/errors.hpp"

namespace g2pp {

namespace {

// Grid arithmetic such as k * (1/12) may overshoot the last pillar by a few ulps.
constexpr double kTimeSlack = 1e-9;

}  // namespace

DiscountCurve DiscountCurve::from_pillars(std::vector<Pillar> pillars, bool extrapolate,
                                          std::string valuation_date) {
    if (pillars.empty()) throw InputError("curve: empty file (no pillars)");
    double previous = 0.0;
    for (std::size_t i = 0; i < pillars.size(); ++i) {
        const auto& p = pillars[i];
        if (!std::isfinite(p.maturity) || !std::isfinite(p.discount)) {
            throw InputError("curve: non-finite value at pillar " + std::to_string(i + 1));
        }
        if (i == 0 && p.maturity <= 0.0) {
            throw InputError("curve: first pillar maturity must be positive");
        }
        if (i > 0 && p.maturity <= previous) {
            throw InputError("curve: non-monotone maturities at pillar " + std::to_string(i + 1));
        }
        if (p.discount <= 0.0) {
            throw InputError("curve: non-positive discount factor at pillar " + std::to_string(i + 1));
        }
        if (p.discount > 1.5) {
            throw InputError("curve: discount factor above 1.5 at pillar " + std::to_string(i + 1));
        }
        previous = p.maturity;
    }
    DiscountCurve curve;
    curve.log_df_.reserve(pillars.size());
    for (const auto& p : pillars) curve.log_df_.push_back(std::log(p.discount));
    curve.pillars_ = std::move(pillars);
    curve.extrapolate_ = extrapolate;
    curve.valuation_date_ = std::move(valuation_date);
    return curve;
}

DiscountCurve DiscountCurve::from_zero_rates(std::span<const double> maturities,
                                             std::span<const double> rates, bool extrapolate) {
    require(maturities.size() == rates.size(), "curve: maturities and rates differ in length");
    std::vector<Pillar> pillars;
    pillars.reserve(maturities.size());
    for (std::size_t i = 0; i < maturities.size(); ++i) {
        pillars.push_back({maturities[i], std::exp(-rates[i] * maturities[i])});
    }
    return from_pillars(std::move(pillars), extrapolate);
}

DiscountCurve DiscountCurve::flat(double rate, double last_maturity, bool extrapolate) {
    return from_pillars({{last_maturity, std::exp(-rate * last_maturity)}}, extrapolate);
}

DiscountCurve DiscountCurve::with_extrapolation(bool enabled) const {
    DiscountCurve copy = *this;
    copy.extrapolate_ = enabled;
    return copy;
}

double DiscountCurve::log_discount(double t) const {
    if (pillars_.empty()) throw DomainError("curve: empty curve");
    if (!(t >= 0.0)) throw DomainError("curve: negative time " + csv::format(t));
    if (t == 0.0) return 0.0;
    const double last = pillars_.back().maturity;
    if (t > last) {
        if (extrapolate_) {
            const std::size_t n = pillars_.size();
            const double t0 = n > 1 ? pillars_[n - 2].maturity : 0.0;
            const double l0 = n > 1 ? log_df_[n - 2] : 0.0;
            const double slope = (log_df_[n - 1] - l0) / (last - t0);
            return log_df_[n - 1] + slope * (t - last);
        }
        if (t > last + kTimeSlack) {
            throw DomainError("curve: time " + csv::format(t) + " beyond last pillar " +
                              csv::format(last) + " (extrapolation disabled)");
        }
        return log_df_.back();
    }
    const auto it = std::lower_bound(pillars_.begin(), pillars_.end(), t,
                                     [](const Pillar& p, double v) { return p.maturity < v; });
    const auto i = static_cast<std::size_t>(it - pillars_.begin());
    if (it->maturity == t) return log_df_[i];
    const double t0 = i == 0 ? 0.0 : pillars_[i - 1].maturity;
    const double l0 = i == 0 ? 0.0 : log_df_[i - 1];
    const double w = (t - t0) / (it->maturity - t0);
    return l0 + w * (log_df_[i] - l0);
}

double DiscountCurve::discount(double t) const {
    return std::exp(log_discount(t));
}

double DiscountCurve::spot_rate(double t) const {
    if (t <= 0.0) throw DomainError("spot_rate: undefined at t <= 0");
    return -log_discount(t) / t;
}

double DiscountCurve::instantaneous_forward(double t) const {
    if (pillars_.empty()) throw DomainError("curve: empty curve");
    if (t < 0.0) throw DomainError("curve: negative time");
    (void)log_discount(t);  // throws beyond the last pillar without extrapolation
    const auto it = std::upper_bound(pillars_.begin(), pillars_.end(), t,
                                     [](double v, const Pillar& p) { return v < p.maturity; });
    std::size_t i = static_cast<std::size_t>(it - pillars_.begin());
    if (i == pillars_.size()) i = pillars_.size() - 1;
    const double t0 = i == 0 ? 0.0 : pillars_[i - 1].maturity;
    const double l0 = i == 0 ? 0.0 : log_df_[i - 1];
    return -(log_df_[i] - l0) / (pillars_[i].maturity - t0);
}

DiscountCurve load_curve(std::istream& in, const std::string& source, bool extrapolate) {
    const auto table = csv::read(in, source);
    const int mat = table.column("maturity_years");
    const int df = table.column("discount_factor");
    const int zr = table.column("zero_rate");
    if (mat < 0) throw InputError(source + ": missing column 'maturity_years'");
    if (df >= 0 && zr >= 0) {
        throw InputError(source + ": columns 'discount_factor' and 'zero_rate' are mutually exclusive");
    }
    if (df < 0 && zr < 0) {
        throw InputError(source + ": need a 'discount_factor' or 'zero_rate' column");
    }
    if (table.rows.empty()) throw InputError(source + ": empty file (no pillars)");
    std::vector<DiscountCurve::Pillar> pillars;
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
        const double t = csv::field(table, r, mat, source);
        const double v = csv::field(table, r, df >= 0 ? df : zr, source);
        pillars.push_back({t, df >= 0 ? v : std::exp(-v * t)});
    }
    try {
        return DiscountCurve::from_pillars(std::move(pillars), extrapolate);
    } catch (const InputError& e) {
        throw InputError(source + ": " + e.what());
    }
}

DiscountCurve load_curve_file(const std::string& path, bool extrapolate) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open file: " + path);
    return load_curve(in, path, extrapolate);
}

void write_curve(std::ostream& out, const DiscountCurve& curve) {
    out << "maturity_years,discount_factor\n";
    for (const auto& p : curve.pillars()) {
        out << csv::format(p.maturity) << ',' << csv::format(p.discount) << '\n';
    }
}

const char* to_string(QuoteKind kind) {
    return kind == QuoteKind::price ? "price" : "normal_vol";
}

QuoteKind parse_quote_kind(const std::string& text) {
    if (text == "price") return QuoteKind::price;
    if (text == "normal_vol") return QuoteKind::normal_vol;
    throw InputError("unknown quote_kind '" + text + "' (expected price|normal_vol)");
}

std::vector<SwaptionQuote> load_swaptions(std::istream& in, const std::string& source) {
    const auto table = csv::read(in, source);
    const int ex = table.column("expiry_years");
    const int te = table.column("tenor_years");
    const int qu = table.column("quote");
    const int ki = table.column("quote_kind");
    const int st = table.column("strike");
    if (ex < 0 || te < 0 || qu < 0 || ki < 0) {
        throw InputError(source + ": header must be expiry_years,tenor_years,quote,quote_kind[,strike]");
    }
    std::vector<SwaptionQuote> quotes;
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
        const std::string where = source + ":" + std::to_string(table.line_numbers[r]);
        SwaptionQuote q;
        q.expiry_years = csv::field(table, r, ex, source);
        q.tenor_years = csv::field(table, r, te, source);
        q.quote = csv::field(table, r, qu, source);
        try {
            q.kind = parse_quote_kind(table.rows[r][static_cast<std::size_t>(ki)]);
        } catch (const InputError& e) {
            throw InputError(where + ": " + e.what());
        }
        if (st >= 0 && !table.rows[r][static_cast<std::size_t>(st)].empty()) {
            q.strike = csv::field(table, r, st, source);
        }
        if (!(q.expiry_years > 0.0)) throw InputError(where + ": expiry_years must be positive");
        if (!(q.tenor_years > 0.0)) throw InputError(where + ": tenor_years must be positive");
        if (!(q.quote >= 0.0)) throw InputError(where + ": quote must be non-negative");
        quotes.push_back(q);
    }
    return quotes;
}

std::vector<SwaptionQuote> load_swaptions_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open file: " + path);
    return load_swaptions(in, path);
}

void write_swaptions(std::ostream& out, std::span<const SwaptionQuote> quotes) {
    const bool any_strike = std::any_of(quotes.begin(), quotes.end(),
                                        [](const SwaptionQuote& q) { return q.strike.has_value(); });
    out << "expiry_years,tenor_years,quote,quote_kind" << (any_strike ? ",strike" : "") << '\n';
    for (const auto& q : quotes) {
        out << csv::format(q.expiry_years) << ',' << csv::format(q.tenor_years) << ','
            << csv::format(q.quote) << ',' << to_string(q.kind);
        if (any_strike) out << ',' << (q.strike ? csv::format(*q.strike) : std::string());
        out << '\n';
    }
}

std::vector<RateForecast> load_forecasts(std::istream& in, const std::string& source) {
    const auto table = csv::read(in, source);
    const int h = table.column("horizon_years");
    const int m = table.column("maturity_years");
    const int r = table.column("rate");
    if (h < 0 || m < 0 || r < 0) {
        throw InputError(source + ": header must be horizon_years,maturity_years,rate");
    }
    std::vector<RateForecast> out;
    for (std::size_t i = 0; i < table.rows.size(); ++i) {
        RateForecast f{csv::field(table, i, h, source), csv::field(table, i, m, source),
                       csv::field(table, i, r, source)};
        if (!(f.horizon_years >= 0.0 && f.maturity_years > f.horizon_years)) {
            throw InputError(source + ":" + std::to_string(table.line_numbers[i]) +
                             ": need maturity_years > horizon_years >= 0");
        }
        out.push_back(f);
    }
    return out;
}

std::vector<RateForecast> load_forecasts_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open file: " + path);
    return load_forecasts(in, path);
}

void write_forecasts(std::ostream& out, std::span<const RateForecast> forecasts) {
    out << "horizon_years,maturity_years,rate\n";
    for (const auto& f : forecasts) {
        out << csv::format(f.horizon_years) << ',' << csv::format(f.maturity_years) << ','
            << csv::format(f.rate) << '\n';
    }
}

}  // namespace g2pp
