#include <cmath>
#include <limits>
#include <numeric>

#include "eko/ident.hpp"

namespace eko::ident {

namespace {

double mean_of(std::span<const double> y) {
    return y.empty() ? 0.0 : std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(y.size());
}

// Runs the recursion up to `order`, stopping early at the first order whose
// reflection coefficient leaves (-1, 1). Returns the failing order (0 if none).
std::size_t levinson_run(std::span<const double> r, std::size_t order, std::size_t n,
                         LevinsonResult& out) {
    out = {};
    out.error_variance.push_back(r[0]);
    if (n > 1) out.fpe.push_back(r[0] * (double(n) + 1.0) / (double(n) - 1.0));
    std::vector<double> a;
    std::vector<double> prev;
    double err = r[0];
    for (std::size_t m = 1; m <= order; ++m) {
        double acc = r[m];
        for (std::size_t i = 1; i < m; ++i) acc -= a[i - 1] * r[m - i];
        const double k = err > 0.0 ? acc / err : std::numeric_limits<double>::infinity();
        if (!(std::abs(k) < 1.0)) return m;
        prev = a;
        a.resize(m);
        for (std::size_t i = 1; i < m; ++i) a[i - 1] = prev[i - 1] - k * prev[m - i - 1];
        a[m - 1] = k;
        err *= (1.0 - k * k);
        out.reflection.push_back(k);
        out.error_variance.push_back(err);
        if (n > m + 1)
            out.fpe.push_back(err * (double(n) + double(m) + 1.0) / (double(n) - double(m) - 1.0));
        else if (n > 0)
            out.fpe.push_back(std::numeric_limits<double>::infinity());
    }
    out.model.a = std::move(a);
    out.model.sigma2 = err;
    if (n == 0) out.fpe.clear();
    return 0;
}

// Burg recursion; stops early when the error energy vanishes or |k| reaches 1.
void burg_run(std::span<const double> y, std::size_t order, LevinsonResult& out) {
    const std::size_t n = y.size();
    const double mu = mean_of(y);
    std::vector<double> f(n), b(n);
    for (std::size_t t = 0; t < n; ++t) f[t] = b[t] = y[t] - mu;
    double err = 0.0;
    for (double v : f) err += v * v;
    err /= static_cast<double>(n);
    out = {};
    out.model.mean = mu;
    out.error_variance.push_back(err);
    out.fpe.push_back(err * (double(n) + 1.0) / (double(n) - 1.0));
    std::vector<double> a, prev;
    for (std::size_t m = 1; m <= order && m + 1 < n; ++m) {
        double num = 0.0, den = 0.0;
        for (std::size_t t = m; t < n; ++t) {
            num += f[t] * b[t - 1];
            den += f[t] * f[t] + b[t - 1] * b[t - 1];
        }
        if (!(den > 0.0)) break;
        const double k = 2.0 * num / den;
        if (!(std::abs(k) < 1.0)) break;
        for (std::size_t t = n - 1; t >= m; --t) {
            const double ft = f[t];
            f[t] = ft - k * b[t - 1];
            b[t] = b[t - 1] - k * ft;
        }
        prev = a;
        a.resize(m);
        for (std::size_t i = 1; i < m; ++i) a[i - 1] = prev[i - 1] - k * prev[m - i - 1];
        a[m - 1] = k;
        err *= (1.0 - k * k);
        out.reflection.push_back(k);
        out.error_variance.push_back(err);
        out.fpe.push_back(err * (double(n) + double(m) + 1.0) / (double(n) - double(m) - 1.0));
    }
    out.model.a = std::move(a);
    out.model.sigma2 = err;
}

}  // namespace

std::vector<double> autocovariance(std::span<const double> y, std::size_t max_lag) {
    const std::size_t n = y.size();
    if (max_lag >= n)
        throw ValidationError("autocovariance: max_lag " + std::to_string(max_lag) +
                              " must be below series length " + std::to_string(n));
    const double mu = mean_of(y);
    std::vector<double> centered(n);
    for (std::size_t t = 0; t < n; ++t) centered[t] = y[t] - mu;
    std::vector<double> r(max_lag + 1, 0.0);
    for (std::size_t k = 0; k <= max_lag; ++k) {
        double s = 0.0;
        for (std::size_t t = k; t < n; ++t) s += centered[t] * centered[t - k];
        r[k] = s / static_cast<double>(n);
    }
    return r;
}

LevinsonResult levinson_durbin(std::span<const double> r, std::size_t order,
                               std::size_t sample_count) {
    if (r.empty() || !(r[0] > 0.0)) throw ValidationError("levinson_durbin: r_0 must be positive");
    if (order >= r.size())
        throw ValidationError("levinson_durbin: order " + std::to_string(order) +
                              " needs " + std::to_string(order + 1) + " autocovariances");
    LevinsonResult out;
    if (const auto failed = levinson_run(r, order, sample_count, out); failed != 0)
        throw NumericalError("levinson_durbin: invalid covariance sequence at order " +
                             std::to_string(failed) + " (|reflection| >= 1)");
    return out;
}

LevinsonResult levinson_burg(std::span<const double> y, std::size_t order) {
    if (y.size() < 2) throw ValidationError("levinson_burg: need at least 2 samples");
    LevinsonResult out;
    burg_run(y, order, out);
    return out;
}

ArModel fit_ar_fpe(std::span<const double> y, std::size_t max_order, ArEstimator estimator) {
    const std::size_t n = y.size();
    if (n < 2) throw ValidationError("fit_ar_fpe: need at least 2 samples");
    max_order = std::min(max_order, n - 2);
    const auto r = autocovariance(y, max_order);
    ArModel best;
    best.mean = mean_of(y);
    const double scale = std::max(1.0, best.mean * best.mean);
    if (!(r[0] > 1e-24 * scale)) return best;

    if (estimator == ArEstimator::burg) {
        LevinsonResult full;
        burg_run(y, max_order, full);
        std::size_t chosen = 0;
        for (std::size_t m = 1; m < full.fpe.size(); ++m)
            if (full.fpe[m] < full.fpe[chosen]) chosen = m;
        LevinsonResult sel;
        burg_run(y, chosen, sel);
        return sel.model;
    }

    LevinsonResult full;
    const auto failed = levinson_run(r, max_order, n, full);
    const std::size_t usable = failed == 0 ? max_order : failed - 1;
    std::size_t chosen = 0;
    for (std::size_t m = 1; m <= usable && m < full.fpe.size(); ++m)
        if (full.fpe[m] < full.fpe[chosen]) chosen = m;
    LevinsonResult sel;
    levinson_run(r, chosen, n, sel);
    sel.model.mean = best.mean;
    return sel.model;
}

}  // namespace eko::ident
