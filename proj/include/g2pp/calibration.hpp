#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "g2pp/config.hpp"
#include "g2pp/marketdata.hpp"
#include "g2pp/model.hpp"
#include "g2pp/pricing.hpp"

namespace g2pp {

struct SimplexConfig {
    G2Params start{0.1, 0.05, 0.01, 0.01, -0.5};
    std::size_t max_iter = 5000;
    double tol_x = 1e-8;
    double tol_f = 1e-10;
    std::size_t restarts = 5;
    int payments_per_year = 1;

    void validate() const;

    /// Reads start.a, start.b, start.sigma, start.eta, start.rho, simplex.max_iter,
    /// simplex.tol_x, simplex.tol_f, simplex.restarts and swaption.payments_per_year;
    /// missing keys keep their defaults.
    static SimplexConfig from_config(const Config& config);
};

struct CalibrationQResult {
    G2Params params;
    double objective = 0.0;  // RMS relative price error
    std::size_t iterations = 0;
    std::size_t evaluations = 0;
    bool converged = false;
    std::size_t restarts_used = 0;
    std::vector<std::string> warnings;
};

/// RMS of relative pricing errors over the instruments; instruments whose
/// market price is below 1e-12 in magnitude contribute absolute errors.
/// A pricing failure is rethrown naming the offending quote.
double calibration_objective(const DiscountCurve& curve, std::span<const SwaptionInstrument> instruments,
                             const G2Params& candidate);
double calibration_objective(const DiscountCurve& curve, std::span<const SwaptionQuote> quotes,
                             const G2Params& candidate, int payments_per_year = 1);

/// Downhill simplex over (log a, log b, log sigma, log eta, atanh rho), with
/// up to `config.restarts` re-initializations around the best vertex. The
/// result is canonicalized so that a >= b. Running out of iterations gives
/// converged = false rather than an exception.
CalibrationQResult calibrate_q(const DiscountCurve& curve, std::span<const SwaptionQuote> quotes,
                               const SimplexConfig& config = {});

/// Swaps the roles of the two factors when needed so that a >= b.
G2Params canonicalize(const G2Params& p);

}  // namespace g2pp
