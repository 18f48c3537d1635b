#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "eko/core.hpp"
#include "eko/ident.hpp"

namespace eko::predict {

enum class PredictorKind { parma, parmax, karma, forwaver };

inline constexpr PredictorKind kAllPredictors[] = {PredictorKind::parma, PredictorKind::parmax,
                                                   PredictorKind::karma, PredictorKind::forwaver};

/// "PARMA", "PARMAX", "KARMA", "FORWAVER".
std::string_view to_string(PredictorKind k);
/// Case-insensitive.
PredictorKind predictor_from_string(std::string_view s);

// ---------------------------------------------------------------------------
// Trend

/// Polynomial in the normalised index u = k / fit_length, optionally plus a
/// sinusoid pair with a 24 h period: c_0 + c_1 u + ... + c_d u^d + p cos + q sin.
struct TrendModel {
    int degree = 0;
    bool diurnal = false;
    double period_steps = 24.0;
    std::size_t fit_length = 1;
    std::vector<double> coeffs;
    double bic = 0.0;

    /// Value at grid index k (0 = first sample of the fitted series); k may
    /// lie beyond the fitted range.
    double operator()(double k) const;
    std::vector<double> evaluate(std::size_t first, std::size_t count) const;
    /// "poly1", "poly2+diurnal", ...
    std::string basis() const;

    bool operator==(const TrendModel&) const = default;
};

/// Least-squares fit for one basis. Throws NumericalError when the design is
/// rank-deficient.
TrendModel fit_trend_basis(std::span<const double> y, std::int64_t step_seconds, int degree,
                           bool diurnal);

/// Minimum-BIC basis over degree 0..3 with and without the diurnal pair. Ties
/// go to fewer coefficients.
TrendModel fit_trend(std::span<const double> y, std::int64_t step_seconds);

// ---------------------------------------------------------------------------
// Configuration

enum class ExogenousPolicy { cascade, hold_last };

struct PredictorConfig {
    ident::Range arma_na{0, 4};
    ident::Range arma_nc{0, 4};
    ident::Range armax_na{0, 2};
    ident::Range armax_nc{0, 1};
    ident::Range armax_nb{1, 2};  // shared by every input of a subset
    ident::Range armax_nk{1, 4};
    bool parmax_singletons_only = false;
    ExogenousPolicy exogenous = ExogenousPolicy::cascade;
    ident::Range karma_n{1, 6};
    std::optional<int> karma_force_n;
    int wavelet_taps = 8;
    std::optional<int> wavelet_levels;  // empty: automatic, see fit_forwaver
    double validation_fraction = 0.2;
    std::size_t validation_horizon = 12;
    std::size_t max_horizon = 56;
    double level = 0.95;
    std::size_t min_samples = 60;
    std::size_t workers = 1;  // order-selection threads inside one fit

    void validate() const;
};

// ---------------------------------------------------------------------------
// Fitted predictors

/// Detrended exogenous channel with the PARMA model used to forecast it.
struct ExogenousInput {
    Channel channel;
    TrendModel trend;
    std::vector<double> residual;
    ident::ArmaModel model;
    std::vector<double> innovations;
};

struct FitMeta {
    ident::OrderCell orders;          // na, nc (and nb, nk for PARMAX; n for KARMA)
    std::size_t fit_cost = 0;         // number of model estimations performed
    std::size_t subsets_evaluated = 0;
    int wavelet_levels = 0;
    bool levels_reduced = false;      // requested wavelet levels did not fit the length
    std::vector<std::string> subset_failures;

    bool operator==(const FitMeta&) const = default;
};

struct FittedPredictor {
    PredictorKind kind = PredictorKind::parma;
    Channel target;
    TimeSeries history;                // measuring horizon
    TrendModel trend;
    std::vector<double> trend_values;  // trend (FORWAVER: deterministic part) on the horizon
    std::vector<double> residual;      // history - trend_values, bit-exact
    std::optional<ident::ArmaModel> arma;
    std::optional<ident::ArmaxModel> armax;
    std::optional<ident::StateSpaceModel> statespace;
    std::optional<ident::WaveletDecomposition> wavelet;
    std::vector<ExogenousInput> inputs;  // PARMAX only, in ARMAX input order
    TimeSeries innovations;              // on the measuring-horizon grid
    FitMeta meta;
};

FittedPredictor fit_parma(const TimeSeries& series, const PredictorConfig& cfg = {},
                          const Channel& target = {});
FittedPredictor fit_parmax(const DataBlock& block, std::size_t target,
                           const PredictorConfig& cfg = {});
FittedPredictor fit_karma(const TimeSeries& series, const PredictorConfig& cfg = {},
                          const Channel& target = {});
/// Default decomposition depth: min(4, floor(log2 n) - 2), lowered so the
/// approximation band still holds the diurnal period; at least 1.
int automatic_wavelet_levels(std::size_t n, std::int64_t step_seconds);
FittedPredictor fit_forwaver(const TimeSeries& series, const PredictorConfig& cfg = {},
                             const Channel& target = {});

/// Dispatches on kind; single-channel kinds use block channel `target` only.
FittedPredictor fit_predictor(PredictorKind kind, const DataBlock& block, std::size_t target,
                              const PredictorConfig& cfg = {});

// ---------------------------------------------------------------------------
// Forecasts

struct Forecast {
    Timestamp start;  // first instant after the measuring horizon
    std::int64_t step = 3600;
    std::vector<double> values;
    std::vector<double> radii;
    double level = 0.95;

    bool operator==(const Forecast&) const = default;
};

/// Two-sided standard normal quantile for `level`.
double normal_quantile(double level);

/// z * sigma * sqrt(cumulative sum of squared impulse-response terms).
std::vector<double> tube_radii(std::span<const double> a, std::span<const double> c, double sigma2,
                               std::size_t h, double level);

std::vector<double> confidence_tube(const FittedPredictor& fp, std::size_t h, double level);

/// Throws ValidationError when h is 0 or exceeds cfg.max_horizon.
Forecast forecast(const FittedPredictor& fp, std::size_t h, const PredictorConfig& cfg = {});

}  // namespace eko::predict
