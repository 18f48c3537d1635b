#include <algorithm>
#include <cmath>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include "eko/ident.hpp"

namespace eko::ident {

namespace {

// Solves P = A P A' + Q by vectorisation; state dimensions here stay small.
Eigen::MatrixXd stationary_covariance(const Eigen::MatrixXd& A, const Eigen::MatrixXd& Q) {
    const auto n = A.rows();
    if (n == 0) return Eigen::MatrixXd(0, 0);
    const auto nn = n * n;
    Eigen::MatrixXd lhs = Eigen::MatrixXd::Identity(nn, nn);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < n; ++j)
            for (Eigen::Index k = 0; k < n; ++k)
                for (Eigen::Index l = 0; l < n; ++l)
                    lhs(i * n + k, j * n + l) -= A(i, j) * A(k, l);
    Eigen::VectorXd q(nn);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index k = 0; k < n; ++k) q(i * n + k) = Q(i, k);
    const Eigen::VectorXd p = lhs.partialPivLu().solve(q);
    Eigen::MatrixXd P(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index k = 0; k < n; ++k) P(i, k) = p(i * n + k);
    return 0.5 * (P + P.transpose());
}

// Symmetrises P and clamps small negative eigenvalues produced by round-off.
// `scale` is the magnitude of the terms that were summed to form P.
void repair_covariance(Eigen::MatrixXd& P, double scale, std::size_t step) {
    if (P.rows() == 0) return;
    P = 0.5 * (P + P.transpose());
    // Pivoted LDLT preserves inertia: a non-negative D certifies P >= 0
    // without the eigendecomposition.
    const Eigen::LDLT<Eigen::MatrixXd> ldlt(P);
    if (ldlt.info() == Eigen::Success && ldlt.vectorD().minCoeff() >= 0.0) return;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(P);
    const auto& ev = es.eigenvalues();
    scale = std::max({scale, ev.cwiseAbs().maxCoeff(), 1e-300});
    if (ev.minCoeff() >= 0.0) return;
    if (ev.minCoeff() < -1e-8 * scale)
        throw NumericalError("kalman_predict: covariance lost positive-definiteness at step " +
                             std::to_string(step));
    const Eigen::VectorXd clamped = ev.cwiseMax(0.0);
    P = es.eigenvectors() * clamped.asDiagonal() * es.eigenvectors().transpose();
}

}  // namespace

StateSpaceModel to_statespace(const ArmaModel& m) {
    const std::size_t n = std::max(m.na(), m.nc());
    const auto dim = static_cast<Eigen::Index>(n);
    StateSpaceModel ss;
    ss.A = Eigen::MatrixXd::Zero(dim, dim);
    ss.K = Eigen::VectorXd::Zero(dim);
    ss.C = Eigen::RowVectorXd::Zero(dim);
    ss.sigma2 = m.sigma2;
    ss.mean = m.mean;
    if (n == 0) return ss;
    for (std::size_t i = 0; i < n; ++i) {
        const double a = i < m.na() ? m.a[i] : 0.0;
        const double c = i < m.nc() ? m.c[i] : 0.0;
        ss.A(static_cast<Eigen::Index>(i), 0) = a;
        ss.K(static_cast<Eigen::Index>(i)) = a + c;
        if (i + 1 < n) ss.A(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i + 1)) = 1.0;
    }
    ss.C(0) = 1.0;
    return ss;
}

namespace {

class KalmanFilter {
public:
    KalmanFilter(const StateSpaceModel& ss, InitialCovariance init)
        : ss_(ss), n_(ss.A.rows()), x_(Eigen::VectorXd::Zero(n_)) {
        if (ss.A.cols() != n_ || ss.K.size() != n_ || ss.C.size() != n_)
            throw ValidationError("kalman_predict: inconsistent state-space dimensions");
        Q_ = ss.sigma2 * ss.K * ss.K.transpose();
        P_ = init == InitialCovariance::stationary ? stationary_covariance(ss.A, Q_) : Eigen::MatrixXd::Zero(n_, n_);
        repair_covariance(P_, P_.norm() + Q_.norm(), 0);
    }

    // Consumes y_t; returns the one-step prediction it was compared against.
    double update(double y) {
        const double yhat = predicted();
        const double e = y - yhat;
        ++t_;
        if (n_ == 0) return yhat;
        const Eigen::VectorXd PC = P_ * ss_.C.transpose();
        const double S = double(ss_.C * PC) + ss_.sigma2;
        // With S = 0 the state is known exactly; the gain reduces to K.
        const Eigen::VectorXd G = S > 0.0 ? Eigen::VectorXd((ss_.A * PC + ss_.sigma2 * ss_.K) / S)
                                          : Eigen::VectorXd(ss_.K);
        x_ = ss_.A * x_ + G * e;
        const Eigen::MatrixXd prior = ss_.A * P_ * ss_.A.transpose() + Q_;
        P_ = prior - G * S * G.transpose();
        repair_covariance(P_, prior.norm(), t_);
        return yhat;
    }

    KalmanWindow forecast(std::size_t h) const {
        KalmanWindow w;
        w.predictions.reserve(h);
        w.variances.reserve(h);
        Eigen::VectorXd x = x_;
        Eigen::MatrixXd P = P_;
        for (std::size_t k = 0; k < h; ++k) {
            const double pred = ss_.mean + (n_ > 0 ? double(ss_.C * x) : 0.0);
            const double var = (n_ > 0 ? double(ss_.C * P * ss_.C.transpose()) : 0.0) + ss_.sigma2;
            w.predictions.push_back(pred);
            w.variances.push_back(std::max(var, 0.0));
            if (n_ == 0) continue;
            x = ss_.A * x;
            P = ss_.A * P * ss_.A.transpose() + Q_;
            repair_covariance(P, P.norm(), t_ + k + 1);
        }
        return w;
    }

private:
    double predicted() const { return ss_.mean + (n_ > 0 ? double(ss_.C * x_) : 0.0); }

    const StateSpaceModel& ss_;
    Eigen::Index n_;
    Eigen::VectorXd x_;
    Eigen::MatrixXd P_;
    Eigen::MatrixXd Q_;
    std::size_t t_ = 0;
};

}  // namespace

KalmanResult kalman_predict(const StateSpaceModel& ss, std::span<const double> y, std::size_t h,
                            InitialCovariance init) {
    KalmanFilter f(ss, init);
    KalmanResult out;
    out.innovations.reserve(y.size());
    out.one_step.reserve(y.size());
    for (double v : y) {
        const double yhat = f.update(v);
        out.one_step.push_back(yhat);
        out.innovations.push_back(v - yhat);
    }
    auto w = f.forecast(h);
    out.predictions = std::move(w.predictions);
    out.variances = std::move(w.variances);
    return out;
}

std::vector<KalmanWindow> kalman_rolling(const StateSpaceModel& ss, std::span<const double> y,
                                         std::span<const std::size_t> origins, std::size_t h,
                                         InitialCovariance init) {
    for (std::size_t i = 0; i < origins.size(); ++i)
        if (origins[i] > y.size() || (i > 0 && origins[i] < origins[i - 1]))
            throw ValidationError("kalman_rolling: origins must be ascending and within the series");
    KalmanFilter f(ss, init);
    std::vector<KalmanWindow> out;
    out.reserve(origins.size());
    std::size_t t = 0;
    for (std::size_t origin : origins) {
        for (; t < origin; ++t) f.update(y[t]);
        out.push_back(f.forecast(h));
    }
    return out;
}

}  // namespace eko::ident
