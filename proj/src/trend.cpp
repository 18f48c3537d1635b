#include <algorithm>
#include <cmath>
#include <numbers>

#include <Eigen/Dense>

#include "eko/predict.hpp"

namespace eko::predict {

namespace {

constexpr std::int64_t kDaySeconds = 86400;

int column_count(int degree, bool diurnal) { return degree + 1 + (diurnal ? 2 : 0); }

void fill_row(const TrendModel& m, double k, double* row) {
    const double u = k / static_cast<double>(m.fit_length);
    double p = 1.0;
    for (int d = 0; d <= m.degree; ++d, p *= u) row[d] = p;
    if (m.diurnal) {
        const double w = 2.0 * std::numbers::pi * k / m.period_steps;
        row[m.degree + 1] = std::cos(w);
        row[m.degree + 2] = std::sin(w);
    }
}

}  // namespace

double TrendModel::operator()(double k) const {
    double row[6];
    fill_row(*this, k, row);
    double v = 0.0;
    for (std::size_t i = 0; i < coeffs.size(); ++i) v += coeffs[i] * row[i];
    return v;
}

std::vector<double> TrendModel::evaluate(std::size_t first, std::size_t count) const {
    std::vector<double> out(count);
    for (std::size_t i = 0; i < count; ++i) out[i] = (*this)(static_cast<double>(first + i));
    return out;
}

std::string TrendModel::basis() const {
    return "poly" + std::to_string(degree) + (diurnal ? "+diurnal" : "");
}

TrendModel fit_trend_basis(std::span<const double> y, std::int64_t step_seconds, int degree,
                           bool diurnal) {
    if (degree < 0 || degree > 3) throw ValidationError("trend degree must be in 0..3");
    if (step_seconds <= 0) throw ValidationError("trend: step must be positive");
    TrendModel m;
    m.degree = degree;
    m.diurnal = diurnal;
    m.period_steps = static_cast<double>(kDaySeconds) / static_cast<double>(step_seconds);
    m.fit_length = y.size();
    const int p = column_count(degree, diurnal);
    const auto n = static_cast<Eigen::Index>(y.size());
    if (n <= p) throw ValidationError("trend: " + std::to_string(y.size()) + " samples for " +
                                      std::to_string(p) + " coefficients");
    // A sinusoid sampled at or below twice per period aliases onto the constant.
    if (diurnal && m.period_steps <= 2.0) throw NumericalError("trend: diurnal period not resolved by the step");

    Eigen::MatrixXd X(n, p);
    Eigen::VectorXd target(n);
    for (Eigen::Index t = 0; t < n; ++t) {
        double row[6];
        fill_row(m, static_cast<double>(t), row);
        for (int j = 0; j < p; ++j) X(t, j) = row[j];
        target(t) = y[static_cast<std::size_t>(t)];
    }
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(X);
    qr.setThreshold(1e-10);
    if (qr.rank() < p) throw NumericalError("trend: rank-deficient basis " + m.basis());
    const Eigen::VectorXd theta = qr.solve(target);
    m.coeffs.assign(theta.data(), theta.data() + p);
    // Residuals at round-off level all score alike, so the smallest basis wins.
    const double floor = static_cast<double>(n) * std::pow(1e-12 * target.cwiseAbs().maxCoeff(), 2);
    const double rss = std::max((target - X * theta).squaredNorm(), floor);
    m.bic = ident::bic(y.size(), rss / static_cast<double>(n), p);
    return m;
}

TrendModel fit_trend(std::span<const double> y, std::int64_t step_seconds) {
    std::optional<TrendModel> best;
    std::string failures;
    for (bool diurnal : {false, true})
        for (int degree = 0; degree <= 3; ++degree) {
            try {
                auto m = fit_trend_basis(y, step_seconds, degree, diurnal);
                if (!best || m.bic < best->bic ||
                    (m.bic == best->bic && m.coeffs.size() < best->coeffs.size()))
                    best = std::move(m);
            } catch (const NumericalError& e) {
                failures += std::string("; ") + e.what();
            }
        }
    if (!best) throw NumericalError("fit_trend: no admissible basis" + failures);
    return *best;
}

}  // namespace eko::predict
