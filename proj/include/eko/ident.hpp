#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "eko/core.hpp"

namespace eko::ident {

/// y_t - mean = sum_i a_i (y_{t-i} - mean) + e_t,  Var(e_t) = sigma2.
struct ArModel {
    std::vector<double> a;
    double sigma2 = 0.0;
    double mean = 0.0;

    std::size_t order() const { return a.size(); }
};

struct LevinsonResult {
    ArModel model;
    std::vector<double> reflection;      // k_1..k_order
    std::vector<double> error_variance;  // prediction-error variance for orders 0..order
    std::vector<double> fpe;             // final prediction error per order; empty if sample count unknown
};

/// Biased autocovariance r_0..r_max_lag of the mean-removed series.
std::vector<double> autocovariance(std::span<const double> y, std::size_t max_lag);

/// Solves the Yule-Walker equations for `order` from autocovariances r_0..r_m (m >= order).
/// FPE per order is filled in when `sample_count` > 0.
LevinsonResult levinson_durbin(std::span<const double> r, std::size_t order,
                               std::size_t sample_count = 0);

enum class ArEstimator {
    yule_walker,  // reflection coefficients from the biased autocovariance
    burg,         // reflection coefficients from forward/backward prediction errors
};

/// Burg's variant of the Levinson recursion run directly on the (mean-removed) data.
LevinsonResult levinson_burg(std::span<const double> y, std::size_t order);

/// Mean-removed AR fit with the order in 0..max_order minimising FPE.
/// A zero-variance series yields the order-0 model (prediction = mean).
ArModel fit_ar_fpe(std::span<const double> y, std::size_t max_order,
                   ArEstimator estimator = ArEstimator::yule_walker);

/// y_t - mean = sum a_i (y_{t-i} - mean) + e_t + sum c_j e_{t-j}.
struct ArmaModel {
    std::vector<double> a;
    std::vector<double> c;
    double sigma2 = 0.0;
    double mean = 0.0;
    bool stabilized = false;  // a root was reflected inside the unit circle

    std::size_t na() const { return a.size(); }
    std::size_t nc() const { return c.size(); }
};

struct ArmaFit {
    ArmaModel model;
    std::vector<double> innovations;  // one-step errors of the fitted model, zero pre-sample
    std::size_t effective_samples = 0;
};

ArmaFit fit_arma(std::span<const double> y, std::size_t na, std::size_t nc);

struct ExogenousTerm {
    std::size_t nb = 1;     // number of b coefficients
    std::size_t delay = 1;  // nk
    std::vector<double> b;  // weights of u_{t-nk}, ..., u_{t-nk-nb+1}
    double mean = 0.0;
};

/// ARMA part plus sum_j sum_l b_{j,l} (u_{j,t-nk_j-l} - mean_j).
struct ArmaxModel {
    ArmaModel arma;
    std::vector<ExogenousTerm> inputs;
};

struct ArmaxFit {
    ArmaxModel model;
    std::vector<double> innovations;
    std::size_t effective_samples = 0;
};

/// Extended least squares. Every exogenous series must have the target's length.
ArmaxFit fit_armax(std::span<const double> y, std::span<const std::vector<double>> u,
                   std::size_t na, std::span<const std::size_t> nb, std::size_t nc,
                   std::span<const std::size_t> nk);

/// Innovations e_t of an ARMA model on y with zero pre-sample values.
std::vector<double> arma_innovations(const ArmaModel& m, std::span<const double> y);
std::vector<double> armax_innovations(const ArmaxModel& m, std::span<const double> y,
                                      std::span<const std::vector<double>> u);

/// h-step forecasts with future innovations set to zero.
std::vector<double> arma_forecast(const ArmaModel& m, std::span<const double> y,
                                  std::span<const double> innovations, std::size_t h);
/// `u` holds each input's history followed by at least h future values.
std::vector<double> armax_forecast(const ArmaxModel& m, std::span<const double> y,
                                   std::span<const double> innovations,
                                   std::span<const std::vector<double>> u, std::size_t h);

/// psi_0..psi_{count-1} of (1 + C(q)) / (1 - A(q)).
std::vector<double> impulse_response(std::span<const double> a, std::span<const double> c,
                                     std::size_t count);

/// Roots of z^n - a_1 z^{n-1} - ... - a_n (AR) or z^n + c_1 z^{n-1} + ... (MA).
double max_root_modulus(std::span<const double> coeffs, bool ar_sign);
/// Reflects roots of modulus >= 1 to 1/modulus, capped at 0.99. Returns true if changed.
bool enforce_stable(std::vector<double>& coeffs, bool ar_sign);

// ---------------------------------------------------------------------------
// State space

/// x_{t+1} = A x_t + K e_t,  y_t = mean + C x_t + e_t,  Var(e_t) = sigma2.
struct StateSpaceModel {
    Eigen::MatrixXd A;
    Eigen::VectorXd K;
    Eigen::RowVectorXd C;
    double sigma2 = 0.0;
    double mean = 0.0;

    std::size_t dim() const { return static_cast<std::size_t>(A.rows()); }
};

/// Observable canonical innovations form with n = max(na, nc).
StateSpaceModel to_statespace(const ArmaModel& m);

enum class InitialCovariance { stationary, zero };

struct KalmanResult {
    std::vector<double> innovations;
    std::vector<double> one_step;     // y-hat_{t|t-1} over the measuring horizon
    std::vector<double> predictions;  // h-step predictions beyond the horizon
    std::vector<double> variances;    // h-step prediction variances
};

KalmanResult kalman_predict(const StateSpaceModel& ss, std::span<const double> y, std::size_t h,
                            InitialCovariance init = InitialCovariance::stationary);

struct KalmanWindow {
    std::vector<double> predictions;
    std::vector<double> variances;
};

/// h-step forecasts from each origin (ascending, <= y.size()) using y up to
/// that origin; equals kalman_predict(ss, y.first(origin), h) with one pass.
std::vector<KalmanWindow> kalman_rolling(const StateSpaceModel& ss, std::span<const double> y,
                                         std::span<const std::size_t> origins, std::size_t h,
                                         InitialCovariance init = InitialCovariance::stationary);

// ---------------------------------------------------------------------------
// Wavelets

struct WaveletDecomposition {
    int taps = 8;
    int levels = 1;
    std::size_t original_length = 0;
    std::size_t padded_length = 0;
    std::vector<double> approximation;          // level J
    std::vector<std::vector<double>> details;   // details[0] = level 1 (finest)
};

std::span<const double> daubechies_lowpass(int taps);
int max_wavelet_levels(std::size_t n);

/// Periodic orthogonal pyramid analysis. Inputs whose length is not a multiple
/// of 2^J are padded by symmetric reflection of the tail.
WaveletDecomposition dwt(std::span<const double> x, int taps, int levels);
/// Reconstruction truncated to the original length.
std::vector<double> idwt(const WaveletDecomposition& d);
/// Reconstruction at the padded length.
std::vector<double> idwt_padded(const WaveletDecomposition& d);

// ---------------------------------------------------------------------------
// Order selection

struct Range {
    int lo = 0;
    int hi = 0;
};

enum class Criterion { bic, validation_pq };

struct OrderCell {
    int na = 0;
    int nc = 0;
    int nb = 0;
    int nk = 0;
    int n = 0;  // state dimension

    bool operator==(const OrderCell&) const = default;
};

struct OrderGrid {
    Range na{0, 0};
    Range nc{0, 0};
    Range nb{0, 0};
    Range nk{0, 0};
    Range n{0, 0};
    Criterion criterion = Criterion::bic;

    std::vector<OrderCell> cells() const;
};

struct CellScore {
    double criterion = 0.0;
    int parameter_count = 0;
};

struct CellOutcome {
    OrderCell cell;
    std::optional<CellScore> score;
    std::string failure;
};

struct OrderSelection {
    OrderCell chosen;
    CellScore score;
    std::vector<CellOutcome> table;
};

double bic(std::size_t n, double sigma2, int parameter_count);

/// Mean square of innovations[burn..]; lets differently sized models be
/// compared on the same samples.
double common_variance(std::span<const double> innovations, std::size_t burn);

/// Scores every grid cell (in parallel when workers > 1). BIC is minimised,
/// validation PQ maximised; ties go to fewer parameters, then lower na.
/// Throws NumericalError listing per-cell failures if no cell succeeds.
OrderSelection select_order(const OrderGrid& grid,
                            const std::function<CellScore(const OrderCell&)>& score,
                            std::size_t workers = 1);

/// BIC selection of ARMA(na, nc) over the grid.
OrderSelection select_arma_order(std::span<const double> y, const OrderGrid& grid,
                                 std::size_t workers = 1);

}  // namespace eko::ident
