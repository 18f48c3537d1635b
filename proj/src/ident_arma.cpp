#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <numeric>

#include <Eigen/Eigenvalues>

#include "eko/ident.hpp"

namespace eko::ident {

namespace {

using cd = std::complex<double>;

double mean_of(std::span<const double> y) {
    return y.empty() ? 0.0 : std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(y.size());
}

std::vector<cd> poly_roots(std::span<const double> coeffs, bool ar_sign) {
    const auto n = static_cast<Eigen::Index>(coeffs.size());
    if (n == 0) return {};
    Eigen::MatrixXd comp = Eigen::MatrixXd::Zero(n, n);
    for (Eigen::Index i = 0; i < n; ++i) comp(0, i) = ar_sign ? coeffs[i] : -coeffs[i];
    for (Eigen::Index i = 1; i < n; ++i) comp(i, i - 1) = 1.0;
    Eigen::EigenSolver<Eigen::MatrixXd> es(comp, false);
    std::vector<cd> roots(static_cast<std::size_t>(n));
    for (Eigen::Index i = 0; i < n; ++i) roots[static_cast<std::size_t>(i)] = es.eigenvalues()(i);
    return roots;
}

// Monic polynomial from roots; returns p_1..p_n of z^n + p_1 z^{n-1} + ... + p_n.
std::vector<double> poly_from_roots(const std::vector<cd>& roots) {
    std::vector<cd> p{1.0};
    for (const auto& r : roots) {
        std::vector<cd> next(p.size() + 1, 0.0);
        for (std::size_t i = 0; i < p.size(); ++i) {
            next[i] += p[i];
            next[i + 1] -= r * p[i];
        }
        p = std::move(next);
    }
    std::vector<double> out(roots.size());
    for (std::size_t i = 1; i < p.size(); ++i) out[i - 1] = p[i].real();
    return out;
}

struct Regression {
    Eigen::MatrixXd X;
    Eigen::VectorXd target;
};

struct LsSolution {
    Eigen::VectorXd theta;
    double rss = 0.0;
};

LsSolution solve_ls(const Regression& reg) {
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(reg.X);
    qr.setThreshold(1e-10);
    if (qr.rank() < reg.X.cols()) throw NumericalError("rank-deficient regression");
    LsSolution s;
    s.theta = qr.solve(reg.target);
    s.rss = (reg.target - reg.X * s.theta).squaredNorm();
    return s;
}

Eigen::Index rank_of(const Eigen::MatrixXd& X) {
    if (X.cols() == 0) return 0;
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(X);
    qr.setThreshold(1e-10);
    return qr.rank();
}

// Residuals of a long AR model on the centred series; entries before `order` are zero.
std::vector<double> long_ar_residuals(std::span<const double> z, std::size_t order,
                                      std::size_t& usable_from) {
    const auto r = autocovariance(z, order);
    std::vector<double> e(z.size(), 0.0);
    usable_from = 0;
    if (!(r[0] > 0.0)) return e;
    std::vector<double> a;
    // Fall back to the largest order the recursion accepts.
    for (std::size_t m = order;; --m) {
        try {
            a = levinson_durbin(r, m).model.a;
            break;
        } catch (const NumericalError&) {
            if (m == 0) break;
        }
    }
    usable_from = a.size();
    for (std::size_t t = a.size(); t < z.size(); ++t) {
        double pred = 0.0;
        for (std::size_t i = 0; i < a.size(); ++i) pred += a[i] * z[t - i - 1];
        e[t] = z[t] - pred;
    }
    return e;
}

std::size_t stage1_order(std::size_t p, std::size_t n) {
    return std::max<std::size_t>(1, std::min(4 * p, n / 4));
}

void finish_stability(ArmaModel& m) {
    const bool ar = enforce_stable(m.a, true);
    const bool ma = enforce_stable(m.c, false);
    m.stabilized = ar || ma;
}

// Pole and zero closer than this are treated as a common factor and removed.
constexpr double kCancelDistance = 0.1;

bool has_common_factor(std::span<const double> a, std::span<const double> c) {
    if (a.empty() || c.empty()) return false;
    const auto poles = poly_roots(a, true);
    const auto zeros = poly_roots(c, false);
    for (const auto& p : poles)
        for (const auto& z : zeros)
            if (std::abs(p - z) < kCancelDistance) return true;
    return false;
}

double mean_square_from(std::span<const double> e, std::size_t first) {
    if (first >= e.size()) return 0.0;
    double s = 0.0;
    for (std::size_t t = first; t < e.size(); ++t) s += e[t] * e[t];
    return s / static_cast<double>(e.size() - first);
}

}  // namespace

double max_root_modulus(std::span<const double> coeffs, bool ar_sign) {
    double m = 0.0;
    for (const auto& r : poly_roots(coeffs, ar_sign)) m = std::max(m, std::abs(r));
    return m;
}

bool enforce_stable(std::vector<double>& coeffs, bool ar_sign) {
    if (coeffs.empty()) return false;
    auto roots = poly_roots(coeffs, ar_sign);
    bool changed = false;
    for (auto& r : roots) {
        const double mod = std::abs(r);
        if (mod >= 1.0) {
            r = std::polar(std::min(1.0 / mod, 0.99), std::arg(r));
            changed = true;
        }
    }
    if (!changed) return false;
    auto p = poly_from_roots(roots);
    for (std::size_t i = 0; i < p.size(); ++i) coeffs[i] = ar_sign ? -p[i] : p[i];
    return true;
}

std::vector<double> impulse_response(std::span<const double> a, std::span<const double> c,
                                     std::size_t count) {
    std::vector<double> psi(count, 0.0);
    for (std::size_t j = 0; j < count; ++j) {
        double v = j == 0 ? 1.0 : (j <= c.size() ? c[j - 1] : 0.0);
        for (std::size_t i = 1; i <= std::min(j, a.size()); ++i) v += a[i - 1] * psi[j - i];
        psi[j] = v;
    }
    return psi;
}

std::vector<double> arma_innovations(const ArmaModel& m, std::span<const double> y) {
    const std::size_t n = y.size();
    std::vector<double> e(n, 0.0);
    for (std::size_t t = 0; t < n; ++t) {
        double pred = 0.0;
        for (std::size_t i = 1; i <= m.na() && i <= t; ++i) pred += m.a[i - 1] * (y[t - i] - m.mean);
        for (std::size_t j = 1; j <= m.nc() && j <= t; ++j) pred += m.c[j - 1] * e[t - j];
        e[t] = (y[t] - m.mean) - pred;
    }
    return e;
}

std::vector<double> armax_innovations(const ArmaxModel& m, std::span<const double> y,
                                      std::span<const std::vector<double>> u) {
    const auto& arma = m.arma;
    const std::size_t n = y.size();
    std::vector<double> e(n, 0.0);
    for (std::size_t t = 0; t < n; ++t) {
        double pred = 0.0;
        for (std::size_t i = 1; i <= arma.na() && i <= t; ++i)
            pred += arma.a[i - 1] * (y[t - i] - arma.mean);
        for (std::size_t j = 0; j < m.inputs.size(); ++j) {
            const auto& in = m.inputs[j];
            for (std::size_t l = 0; l < in.nb; ++l) {
                const std::size_t lag = in.delay + l;
                if (lag <= t) pred += in.b[l] * (u[j][t - lag] - in.mean);
            }
        }
        for (std::size_t j = 1; j <= arma.nc() && j <= t; ++j) pred += arma.c[j - 1] * e[t - j];
        e[t] = (y[t] - arma.mean) - pred;
    }
    return e;
}

std::vector<double> arma_forecast(const ArmaModel& m, std::span<const double> y,
                                  std::span<const double> innovations, std::size_t h) {
    ArmaxModel wrapped{m, {}};
    return armax_forecast(wrapped, y, innovations, {}, h);
}

std::vector<double> armax_forecast(const ArmaxModel& m, std::span<const double> y,
                                   std::span<const double> innovations,
                                   std::span<const std::vector<double>> u, std::size_t h) {
    const auto& arma = m.arma;
    const std::size_t n = y.size();
    for (const auto& series : u)
        if (series.size() < n + h) throw ValidationError("armax_forecast: exogenous future too short");
    std::vector<double> z(n + h, 0.0);
    for (std::size_t t = 0; t < n; ++t) z[t] = y[t] - arma.mean;
    auto e_at = [&](std::size_t t) { return t < innovations.size() ? innovations[t] : 0.0; };
    std::vector<double> out(h);
    for (std::size_t k = 0; k < h; ++k) {
        const std::size_t t = n + k;
        double v = 0.0;
        for (std::size_t i = 1; i <= arma.na() && i <= t; ++i) v += arma.a[i - 1] * z[t - i];
        for (std::size_t j = 0; j < m.inputs.size(); ++j) {
            const auto& in = m.inputs[j];
            for (std::size_t l = 0; l < in.nb; ++l) {
                const std::size_t lag = in.delay + l;
                if (lag <= t) v += in.b[l] * (u[j][t - lag] - in.mean);
            }
        }
        for (std::size_t j = 1; j <= arma.nc() && j <= t; ++j)
            if (t - j < n) v += arma.c[j - 1] * e_at(t - j);
        z[t] = v;
        out[k] = v + arma.mean;
    }
    return out;
}

ArmaFit fit_arma(std::span<const double> y, std::size_t na, std::size_t nc) {
    const std::size_t n = y.size();
    const std::size_t p = na + nc;
    if (n < 2 || n < 10 * p)
        throw ValidationError("fit_arma: need at least " + std::to_string(std::max<std::size_t>(2, 10 * p)) +
                              " samples for ARMA(" + std::to_string(na) + "," + std::to_string(nc) +
                              "), got " + std::to_string(n));
    ArmaFit fit;
    fit.model.mean = mean_of(y);
    std::vector<double> z(n);
    for (std::size_t t = 0; t < n; ++t) z[t] = y[t] - fit.model.mean;

    if (p == 0) {
        fit.model.sigma2 = mean_square_from(z, 0);
        fit.innovations = z;
        fit.effective_samples = n;
        return fit;
    }

    std::vector<double> ehat;
    std::size_t first = na;
    if (nc > 0) {
        std::size_t usable = 0;
        ehat = long_ar_residuals(z, stage1_order(p, n), usable);
        first = std::max(na, usable + nc);
    }
    if (first + p >= n) throw ValidationError("fit_arma: series too short for stage-2 regression");

    const auto rows = static_cast<Eigen::Index>(n - first);
    Regression reg{Eigen::MatrixXd(rows, static_cast<Eigen::Index>(p)), Eigen::VectorXd(rows)};
    for (Eigen::Index r = 0; r < rows; ++r) {
        const std::size_t t = first + static_cast<std::size_t>(r);
        for (std::size_t i = 0; i < na; ++i) reg.X(r, static_cast<Eigen::Index>(i)) = z[t - i - 1];
        for (std::size_t j = 0; j < nc; ++j) reg.X(r, static_cast<Eigen::Index>(na + j)) = ehat[t - j - 1];
        reg.target(r) = z[t];
    }
    LsSolution sol;
    try {
        sol = solve_ls(reg);
    } catch (const NumericalError&) {
        throw NumericalError("fit_arma: rank-deficient regression for ARMA(" + std::to_string(na) +
                             "," + std::to_string(nc) + ")");
    }
    fit.model.a.assign(sol.theta.data(), sol.theta.data() + na);
    fit.model.c.assign(sol.theta.data() + na, sol.theta.data() + p);
    // A near-common pole/zero pair leaves the regression on a flat ridge; refit
    // one order lower on both sides and keep the requested shape with zero tails.
    if (has_common_factor(fit.model.a, fit.model.c)) {
        auto reduced = fit_arma(y, na - 1, nc - 1);
        reduced.model.a.resize(na, 0.0);
        reduced.model.c.resize(nc, 0.0);
        return reduced;
    }
    fit.model.sigma2 = sol.rss / static_cast<double>(rows);
    fit.effective_samples = static_cast<std::size_t>(rows);
    finish_stability(fit.model);
    fit.innovations = arma_innovations(fit.model, y);
    if (fit.model.stabilized) fit.model.sigma2 = mean_square_from(fit.innovations, first);
    return fit;
}

ArmaxFit fit_armax(std::span<const double> y, std::span<const std::vector<double>> u,
                   std::size_t na, std::span<const std::size_t> nb, std::size_t nc,
                   std::span<const std::size_t> nk) {
    const std::size_t n = y.size();
    const std::size_t inputs = u.size();
    if (inputs == 0) throw ValidationError("fit_armax: exogenous input list is empty");
    if (nb.size() != inputs || nk.size() != inputs)
        throw ValidationError("fit_armax: nb/nk must give one entry per exogenous input");
    std::size_t nb_total = 0;
    std::size_t max_lag = na;
    for (std::size_t j = 0; j < inputs; ++j) {
        if (u[j].size() != n) throw ValidationError("fit_armax: exogenous input " + std::to_string(j) +
                                                    " is not on the target grid");
        if (nb[j] == 0) throw ValidationError("fit_armax: nb must be >= 1");
        nb_total += nb[j];
        max_lag = std::max(max_lag, nk[j] + nb[j] - 1);
    }
    const std::size_t p = na + nc + nb_total;
    if (n < 10 * p)
        throw ValidationError("fit_armax: need at least " + std::to_string(10 * p) + " samples, got " +
                              std::to_string(n));

    ArmaxFit fit;
    auto& model = fit.model;
    model.arma.mean = mean_of(y);
    std::vector<double> z(n);
    for (std::size_t t = 0; t < n; ++t) z[t] = y[t] - model.arma.mean;
    std::vector<std::vector<double>> uc(inputs);
    for (std::size_t j = 0; j < inputs; ++j) {
        ExogenousTerm term;
        term.nb = nb[j];
        term.delay = nk[j];
        term.mean = mean_of(u[j]);
        uc[j].resize(n);
        double var = 0.0;
        for (std::size_t t = 0; t < n; ++t) {
            uc[j][t] = u[j][t] - term.mean;
            var += uc[j][t] * uc[j][t];
        }
        if (!(var > 1e-24 * std::max(1.0, term.mean * term.mean) * double(n)))
            throw NumericalError("fit_armax: exogenous input " + std::to_string(j) +
                                 " is constant (collinear regressor)");
        model.inputs.push_back(std::move(term));
    }

    std::vector<double> ehat;
    std::size_t first = max_lag;
    if (nc > 0) {
        std::size_t usable = 0;
        ehat = long_ar_residuals(z, stage1_order(na + nc + nb_total, n), usable);
        first = std::max(first, usable + nc);
    }
    if (first + p >= n) throw ValidationError("fit_armax: series too short for regression");

    const auto rows = static_cast<Eigen::Index>(n - first);
    auto build = [&](const std::vector<double>& resid) {
        Regression reg{Eigen::MatrixXd(rows, static_cast<Eigen::Index>(p)), Eigen::VectorXd(rows)};
        for (Eigen::Index r = 0; r < rows; ++r) {
            const std::size_t t = first + static_cast<std::size_t>(r);
            Eigen::Index col = 0;
            for (std::size_t i = 0; i < na; ++i) reg.X(r, col++) = z[t - i - 1];
            for (std::size_t j = 0; j < inputs; ++j)
                for (std::size_t l = 0; l < nb[j]; ++l) reg.X(r, col++) = uc[j][t - nk[j] - l];
            for (std::size_t j = 0; j < nc; ++j) reg.X(r, col++) = resid[t - j - 1];
            reg.target(r) = z[t];
        }
        return reg;
    };
    auto unpack = [&](const Eigen::VectorXd& theta) {
        Eigen::Index col = 0;
        model.arma.a.assign(theta.data(), theta.data() + na);
        col = static_cast<Eigen::Index>(na);
        for (std::size_t j = 0; j < inputs; ++j) {
            model.inputs[j].b.assign(theta.data() + col, theta.data() + col + static_cast<Eigen::Index>(nb[j]));
            col += static_cast<Eigen::Index>(nb[j]);
        }
        model.arma.c.assign(theta.data() + col, theta.data() + col + static_cast<Eigen::Index>(nc));
    };

    auto reg = build(ehat);
    LsSolution sol;
    try {
        sol = solve_ls(reg);
    } catch (const NumericalError&) {
        // Name the first input whose columns add no rank.
        const auto full = rank_of(reg.X);
        Eigen::Index col = static_cast<Eigen::Index>(na);
        for (std::size_t j = 0; j < inputs; ++j) {
            const auto w = static_cast<Eigen::Index>(nb[j]);
            Eigen::MatrixXd without(rows, reg.X.cols() - w);
            without << reg.X.leftCols(col), reg.X.rightCols(reg.X.cols() - col - w);
            if (rank_of(without) + w > full)
                throw NumericalError("fit_armax: exogenous input " + std::to_string(j) +
                                     " is collinear with the other regressors");
            col += w;
        }
        throw NumericalError("fit_armax: rank-deficient regression");
    }
    unpack(sol.theta);

    // Extended least squares: re-estimate with the model's own residuals.
    if (nc > 0) {
        for (int pass = 0; pass < 2; ++pass) {
            enforce_stable(model.arma.c, false);
            const auto resid = armax_innovations(model, y, u);
            try {
                sol = solve_ls(build(resid));
            } catch (const NumericalError&) {
                break;
            }
            unpack(sol.theta);
        }
    }
    model.arma.sigma2 = sol.rss / static_cast<double>(rows);
    fit.effective_samples = static_cast<std::size_t>(rows);
    finish_stability(model.arma);
    fit.innovations = armax_innovations(model, y, u);
    if (model.arma.stabilized) model.arma.sigma2 = mean_square_from(fit.innovations, first);
    return fit;
}

}  // namespace eko::ident
