#include "g2pp/calibration.hpp"

#include <algorithm>
#include <cmath>

#include "g2pp/csv.hpp"
#include "g2pp/errors.hpp"
#include "g2pp/simplex.hpp"

namespace g2pp {

namespace {

constexpr double kRhoClamp = 1.0 - 1e-12;
constexpr double kTinyPrice = 1e-12;

std::vector<double> to_unconstrained(const G2Params& p) {
    return {std::log(p.a), std::log(p.b), std::log(p.sigma), std::log(p.eta),
            std::atanh(std::clamp(p.rho, -kRhoClamp, kRhoClamp))};
}

G2Params from_unconstrained(const std::vector<double>& u) {
    return {std::exp(u[0]), std::exp(u[1]), std::exp(u[2]), std::exp(u[3]), std::tanh(u[4])};
}

// Start vertex plus one vertex per parameter displaced by 10% of its value.
std::vector<std::vector<double>> initial_simplex(const G2Params& p) {
    std::vector<std::vector<double>> simplex{to_unconstrained(p)};
    for (int k = 0; k < 5; ++k) {
        G2Params q = p;
        switch (k) {
            case 0: q.a *= 1.1; break;
            case 1: q.b *= 1.1; break;
            case 2: q.sigma *= 1.1; break;
            case 3: q.eta *= 1.1; break;
            default:
                if (p.rho == 0.0) q.rho = 0.1;
                else q.rho = std::abs(p.rho * 1.1) < 1.0 ? p.rho * 1.1 : p.rho * 0.9;
        }
        simplex.push_back(to_unconstrained(q));
    }
    return simplex;
}

// Relative-error rank of the pricing Jacobian in unconstrained coordinates.
std::size_t sensitivity_rank(const DiscountCurve& curve, std::span<const SwaptionInstrument> inst,
                             const G2Params& p) {
    const auto u0 = to_unconstrained(p);
    std::vector<std::vector<double>> columns;
    for (std::size_t k = 0; k < 5; ++k) {
        const double h = 1e-4;
        auto up = u0;
        auto dn = u0;
        up[k] += h;
        dn[k] -= h;
        const auto pu = from_unconstrained(up);
        const auto pd = from_unconstrained(dn);
        std::vector<double> col;
        for (const auto& i : inst) {
            const double scale = std::max(std::abs(i.market_price), kTinyPrice);
            col.push_back((price_swaption_g2(curve, pu, i.spec) - price_swaption_g2(curve, pd, i.spec)) /
                          (2.0 * h * scale));
        }
        columns.push_back(std::move(col));
    }
    // Modified Gram-Schmidt; a column is dependent when its residual norm
    // falls below 1e-8 of the largest column norm.
    double largest = 0.0;
    for (const auto& c : columns) {
        double s = 0.0;
        for (double v : c) s += v * v;
        largest = std::max(largest, std::sqrt(s));
    }
    std::vector<std::vector<double>> basis;
    for (auto c : columns) {
        for (const auto& q : basis) {
            double dot = 0.0;
            for (std::size_t i = 0; i < c.size(); ++i) dot += c[i] * q[i];
            for (std::size_t i = 0; i < c.size(); ++i) c[i] -= dot * q[i];
        }
        double norm = 0.0;
        for (double v : c) norm += v * v;
        norm = std::sqrt(norm);
        if (norm > 1e-8 * largest && norm > 0.0) {
            for (double& v : c) v /= norm;
            basis.push_back(std::move(c));
        }
    }
    return basis.size();
}

}  // namespace

void SimplexConfig::validate() const {
    require(start.a > 0.0 && start.b > 0.0, "config: start.a and start.b must be positive");
    require(start.sigma > 0.0 && start.eta > 0.0, "config: start.sigma and start.eta must be positive");
    require(start.rho > -1.0 && start.rho < 1.0, "config: start.rho must lie in (-1, 1)");
    require(max_iter > 0, "config: simplex.max_iter must be positive");
    require(tol_x > 0.0 && tol_f > 0.0, "config: simplex tolerances must be positive");
    require(payments_per_year > 0, "config: swaption.payments_per_year must be positive");
}

SimplexConfig SimplexConfig::from_config(const Config& c) {
    SimplexConfig s;
    s.start.a = c.get_real("start.a", s.start.a);
    s.start.b = c.get_real("start.b", s.start.b);
    s.start.sigma = c.get_real("start.sigma", s.start.sigma);
    s.start.eta = c.get_real("start.eta", s.start.eta);
    s.start.rho = c.get_real("start.rho", s.start.rho);
    const auto max_iter = c.get_int("simplex.max_iter", static_cast<long long>(s.max_iter));
    const auto restarts = c.get_int("simplex.restarts", static_cast<long long>(s.restarts));
    require(max_iter > 0, "config: simplex.max_iter must be positive");
    require(restarts >= 0, "config: simplex.restarts must be non-negative");
    s.max_iter = static_cast<std::size_t>(max_iter);
    s.restarts = static_cast<std::size_t>(restarts);
    s.tol_x = c.get_real("simplex.tol_x", s.tol_x);
    s.tol_f = c.get_real("simplex.tol_f", s.tol_f);
    s.payments_per_year = static_cast<int>(c.get_int("swaption.payments_per_year", s.payments_per_year));
    s.validate();
    return s;
}

G2Params canonicalize(const G2Params& p) {
    if (p.a >= p.b) return p;
    return {p.b, p.a, p.eta, p.sigma, p.rho};
}

double calibration_objective(const DiscountCurve& curve, std::span<const SwaptionInstrument> instruments,
                             const G2Params& candidate) {
    require(!instruments.empty(), "calibration_objective: no instruments");
    double sum = 0.0;
    for (const auto& inst : instruments) {
        double model = 0.0;
        try {
            model = price_swaption_g2(curve, candidate, inst.spec);
        } catch (const NumericError& e) {
            throw NumericError("pricing failed for swaption " + csv::format(inst.quote.expiry_years) + "y x " +
                               csv::format(inst.quote.tenor_years) + "y: " + e.what());
        }
        const double err = std::abs(inst.market_price) < kTinyPrice
                               ? model - inst.market_price
                               : (model - inst.market_price) / inst.market_price;
        sum += err * err;
    }
    return std::sqrt(sum / static_cast<double>(instruments.size()));
}

double calibration_objective(const DiscountCurve& curve, std::span<const SwaptionQuote> quotes,
                             const G2Params& candidate, int payments_per_year) {
    const auto inst = to_instruments(curve, quotes, payments_per_year);
    return calibration_objective(curve, inst, candidate);
}

CalibrationQResult calibrate_q(const DiscountCurve& curve, std::span<const SwaptionQuote> quotes,
                               const SimplexConfig& config) {
    config.validate();
    require(!quotes.empty(), "calibrate_q: no swaption quotes");
    const auto instruments = to_instruments(curve, quotes, config.payments_per_year);

    CalibrationQResult result;
    if (quotes.size() < 5) {
        result.warnings.push_back("under-determined: " + std::to_string(quotes.size()) +
                                  " quotes for 5 parameters");
    }

    // Parameter points where pricing fails are treated as infinitely bad.
    const auto objective = [&](const std::vector<double>& u) {
        try {
            return calibration_objective(curve, std::span<const SwaptionInstrument>(instruments),
                                         from_unconstrained(u));
        } catch (const NumericError&) {
            return static_cast<double>(INFINITY);
        }
    };

    const double f_start = calibration_objective(curve, instruments, config.start);
    if (f_start == 0.0) {
        result.params = canonicalize(config.start);
        result.objective = 0.0;
        result.converged = true;
        result.evaluations = 1;
        return result;
    }

    NelderMeadOptions options{config.max_iter, config.tol_x, config.tol_f};
    G2Params best = config.start;
    double best_f = f_start;
    bool converged = false;
    for (std::size_t round = 0; round <= config.restarts; ++round) {
        const auto run = nelder_mead(objective, initial_simplex(best), options);
        result.iterations += run.iterations;
        result.evaluations += run.evaluations;
        if (round > 0) ++result.restarts_used;
        const double improvement = best_f - run.f;
        if (run.f <= best_f) {
            best = from_unconstrained(run.x);
            best_f = run.f;
        }
        converged = run.converged;
        // A restart that no longer improves the objective confirms the optimum.
        if (round > 0 && run.converged && improvement < config.tol_f) break;
        if (best_f == 0.0) break;
    }

    result.params = canonicalize(best);
    result.objective = best_f;
    result.converged = converged;
    if (quotes.size() < 5 || !converged) {
        try {
            const auto rank = sensitivity_rank(curve, instruments, result.params);
            if (rank < 5) {
                result.warnings.push_back("pricing sensitivities have rank " + std::to_string(rank) +
                                          " < 5; parameters are not identified");
            }
        } catch (const NumericError&) {
        }
    }
    if (!converged) result.warnings.push_back("simplex iteration budget exhausted");
    return result;
}

}  // namespace g2pp
