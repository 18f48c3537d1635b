#include <algorithm>
#include <bit>
#include <cctype>
#include <cmath>
#include <map>

#include <boost/math/distributions/normal.hpp>

#include "eko/predict.hpp"
#include "eko/quality.hpp"

namespace eko::predict {

using ident::ArmaModel;
using ident::OrderCell;
using ident::OrderGrid;

namespace {

std::size_t as_size(int v) { return static_cast<std::size_t>(v); }

void check_series(const TimeSeries& s, const PredictorConfig& cfg, std::string_view who) {
    if (!s.is_complete())
        throw ValidationError(std::string(who) + ": series has " + std::to_string(s.missing_count()) +
                              " missing samples");
    if (s.size() < cfg.min_samples)
        throw ValidationError(std::string(who) + ": need at least " + std::to_string(cfg.min_samples) +
                              " samples, got " + std::to_string(s.size()));
}

std::vector<double> exact_residual(std::span<const double> x, std::vector<double>& trend) {
    std::vector<double> r(x.size());
    for (std::size_t t = 0; t < x.size(); ++t) r[t] = eko::exact_residual(x[t], trend[t]);
    return r;
}

struct Detrended {
    TrendModel trend;
    std::vector<double> values;
    std::vector<double> residual;
};

Detrended detrend(std::span<const double> x, std::int64_t step, FitMeta& meta) {
    Detrended d;
    d.trend = fit_trend(x, step);
    meta.fit_cost += 8;
    d.values = d.trend.evaluate(0, x.size());
    d.residual = exact_residual(x, d.values);
    return d;
}

OrderGrid arma_grid(const PredictorConfig& cfg) {
    OrderGrid g;
    g.na = cfg.arma_na;
    g.nc = cfg.arma_nc;
    return g;
}

ident::ArmaFit select_and_fit_arma(std::span<const double> y, const PredictorConfig& cfg,
                                   FitMeta& meta, OrderCell* chosen = nullptr) {
    const auto grid = arma_grid(cfg);
    const auto sel = ident::select_arma_order(y, grid, cfg.workers);
    meta.fit_cost += sel.table.size() + 1;
    if (chosen) *chosen = sel.chosen;
    return ident::fit_arma(y, as_size(sel.chosen.na), as_size(sel.chosen.nc));
}

struct ParmaCore {
    Detrended detrended;
    ident::ArmaFit fit;
    OrderCell orders;
};

ParmaCore parma_core(std::span<const double> x, std::int64_t step, const PredictorConfig& cfg,
                     FitMeta& meta) {
    ParmaCore core;
    core.detrended = detrend(x, step, meta);
    core.fit = select_and_fit_arma(core.detrended.residual, cfg, meta, &core.orders);
    return core;
}

std::vector<double> running_max_sqrt(std::span<const double> variances, double z) {
    std::vector<double> r(variances.size());
    double m = 0.0;
    for (std::size_t k = 0; k < r.size(); ++k) {
        m = std::max(m, z * std::sqrt(std::max(variances[k], 0.0)));
        r[k] = m;
    }
    return r;
}

// Rolling-origin split of the measuring horizon: models are fitted on
// [0, train) and forecast from origins train, train + h, ... inside it.
struct ValidationPlan {
    std::size_t train = 0;
    std::size_t h = 0;
    std::vector<std::size_t> origins;
};

ValidationPlan plan_validation(std::size_t n, const PredictorConfig& cfg) {
    ValidationPlan p;
    const auto held = std::max<std::size_t>(
        1, static_cast<std::size_t>(std::lround(cfg.validation_fraction * static_cast<double>(n))));
    p.train = n - held;
    p.h = std::min(cfg.validation_horizon, held);
    for (std::size_t o = p.train; o + p.h <= n; o += p.h) p.origins.push_back(o);
    return p;
}

struct Window {
    std::vector<double> values;
    std::vector<double> radii;
};

template <class Forecaster>
double validation_score(std::span<const double> x, const ValidationPlan& plan, Forecaster&& f) {
    const double sigma_y = standard_deviation(x.first(plan.train));
    double total = 0.0;
    for (std::size_t origin : plan.origins) {
        const Window w = f(origin, plan.h);
        const auto actual = x.subspan(origin, plan.h);
        if (sigma_y > 0.0) {
            total += prediction_quality(actual, w.values, w.radii, sigma_y).value;
        } else {
            bool exact = true;
            for (std::size_t k = 0; k < plan.h; ++k) exact = exact && actual[k] == w.values[k] && w.radii[k] == 0.0;
            total += exact ? 100.0 : 0.0;
        }
    }
    return total / static_cast<double>(plan.origins.size());
}

// Trend evaluated on [0, n) with a model fitted on a shorter prefix.
std::vector<double> extend_residual(std::span<const double> x, const TrendModel& trend) {
    std::vector<double> r(x.size());
    for (std::size_t t = 0; t < x.size(); ++t) r[t] = x[t] - trend(static_cast<double>(t));
    return r;
}

Window kalman_window(const ident::KalmanWindow& kw, const TrendModel& trend, std::size_t origin, double z) {
    Window w;
    w.values.resize(kw.predictions.size());
    for (std::size_t k = 0; k < w.values.size(); ++k)
        w.values[k] = trend(static_cast<double>(origin + k)) + kw.predictions[k];
    w.radii = running_max_sqrt(kw.variances, z);
    return w;
}

std::vector<double> hold_last(std::span<const double> history, std::size_t h) {
    return std::vector<double>(h, history.empty() ? 0.0 : history.back());
}

}  // namespace

// ---------------------------------------------------------------------------

std::string_view to_string(PredictorKind k) {
    switch (k) {
        case PredictorKind::parma: return "PARMA";
        case PredictorKind::parmax: return "PARMAX";
        case PredictorKind::karma: return "KARMA";
        case PredictorKind::forwaver: return "FORWAVER";
    }
    return "?";
}

PredictorKind predictor_from_string(std::string_view s) {
    std::string up(s);
    for (auto& ch : up) ch = static_cast<char>(std::toupper(static_cast<unsigned char>(ch)));
    for (auto k : kAllPredictors)
        if (to_string(k) == up) return k;
    throw ValidationError("unknown predictor '" + std::string(s) + "'");
}

void PredictorConfig::validate() const {
    auto range = [](ident::Range r, int lo, const char* name) {
        if (r.lo < lo || r.lo > r.hi)
            throw ValidationError(std::string(name) + ": range must satisfy " + std::to_string(lo) +
                                  " <= lower <= upper");
    };
    range(arma_na, 0, "arma na");
    range(arma_nc, 0, "arma nc");
    range(armax_na, 0, "armax na");
    range(armax_nc, 0, "armax nc");
    range(armax_nb, 1, "armax nb");
    range(armax_nk, 0, "armax nk");
    range(karma_n, 1, "karma n");
    if (karma_force_n && *karma_force_n < 0) throw ValidationError("karma forced state dimension must be >= 0");
    if (wavelet_levels && *wavelet_levels < 1) throw ValidationError("wavelet levels must be >= 1");
    if (!(validation_fraction > 0.0 && validation_fraction <= 0.5))
        throw ValidationError("validation fraction must lie in (0, 0.5]");
    if (validation_horizon < 1) throw ValidationError("validation horizon must be >= 1");
    if (max_horizon < 1) throw ValidationError("max horizon must be >= 1");
    if (!(level > 0.0 && level < 1.0)) throw ValidationError("confidence level must lie in (0, 1)");
    if (min_samples < 20) throw ValidationError("minimum sample count must be >= 20");
    if (workers < 1) throw ValidationError("workers must be >= 1");
    ident::daubechies_lowpass(wavelet_taps);
}

double normal_quantile(double level) {
    if (!(level > 0.0 && level < 1.0)) throw ValidationError("confidence level must lie in (0, 1)");
    return boost::math::quantile(boost::math::normal(), 0.5 + 0.5 * level);
}

std::vector<double> tube_radii(std::span<const double> a, std::span<const double> c, double sigma2,
                               std::size_t h, double level) {
    const double z = normal_quantile(level);
    const double sigma = std::sqrt(std::max(sigma2, 0.0));
    const auto psi = ident::impulse_response(a, c, h);
    std::vector<double> r(h);
    double cum = 0.0;
    for (std::size_t k = 0; k < h; ++k) {
        cum += psi[k] * psi[k];
        r[k] = z * sigma * std::sqrt(cum);
    }
    return r;
}

// ---------------------------------------------------------------------------
// PARMA

FittedPredictor fit_parma(const TimeSeries& series, const PredictorConfig& cfg, const Channel& target) {
    cfg.validate();
    check_series(series, cfg, "fit_parma");
    const auto x = series.values();
    FittedPredictor fp;
    fp.kind = PredictorKind::parma;
    fp.target = target;
    fp.history = series;
    auto core = parma_core(x, series.step(), cfg, fp.meta);
    fp.trend = core.detrended.trend;
    fp.trend_values = std::move(core.detrended.values);
    fp.residual = std::move(core.detrended.residual);
    fp.arma = core.fit.model;
    fp.innovations = TimeSeries::complete(series.start(), series.step(), core.fit.innovations);
    fp.meta.orders = core.orders;
    return fp;
}

// ---------------------------------------------------------------------------
// KARMA

FittedPredictor fit_karma(const TimeSeries& series, const PredictorConfig& cfg, const Channel& target) {
    cfg.validate();
    check_series(series, cfg, "fit_karma");
    const auto x = series.values();
    const auto step = series.step();
    FittedPredictor fp;
    fp.kind = PredictorKind::karma;
    fp.target = target;
    fp.history = series;
    auto core = parma_core(x, step, cfg, fp.meta);
    const int na0 = core.orders.na, nc0 = core.orders.nc;
    const int n0 = std::max(na0, nc0);
    auto orders_for = [&](int n) {
        return n == n0 ? std::pair{na0, nc0} : std::pair{n, std::min(nc0, n)};
    };

    std::vector<int> candidates;
    if (cfg.karma_force_n) {
        candidates.push_back(*cfg.karma_force_n);
    } else {
        candidates.push_back(n0);
        for (int n = cfg.karma_n.lo; n <= cfg.karma_n.hi; ++n)
            if (n != n0) candidates.push_back(n);
    }

    int chosen = candidates.front();
    if (candidates.size() > 1) {
        const auto plan = plan_validation(x.size(), cfg);
        const std::span<const double> xs(x);
        const auto train_trend = fit_trend(xs.first(plan.train), step);
        fp.meta.fit_cost += 8;
        const auto resid = extend_residual(x, train_trend);
        const double z = normal_quantile(cfg.level);
        std::optional<double> best;
        std::string failures;
        for (int n : candidates) {
            const auto [na, nc] = orders_for(n);
            try {
                ++fp.meta.fit_cost;
                const auto m = ident::fit_arma(std::span(resid).first(plan.train), as_size(na), as_size(nc)).model;
                const auto ss = ident::to_statespace(m);
                const auto windows = ident::kalman_rolling(ss, resid, plan.origins, plan.h);
                std::size_t next = 0;
                const double score = validation_score(xs, plan, [&](std::size_t origin, std::size_t) {
                    return kalman_window(windows[next++], train_trend, origin, z);
                });
                // Candidates are visited with the base realisation first, then by
                // increasing n; only a strictly better score displaces the incumbent.
                if (!best || score > *best) {
                    best = score;
                    chosen = n;
                }
            } catch (const std::exception& e) {
                failures += "; n=" + std::to_string(n) + ": " + e.what();
            }
        }
        if (!best) throw NumericalError("fit_karma: every state dimension failed" + failures);
    }

    ArmaModel model;
    if (chosen == n0) {
        model = core.fit.model;
    } else {
        const auto [na, nc] = orders_for(chosen);
        ++fp.meta.fit_cost;
        model = ident::fit_arma(core.detrended.residual, as_size(na), as_size(nc)).model;
    }
    const auto ss = ident::to_statespace(model);
    const auto kr = ident::kalman_predict(ss, core.detrended.residual, 0);

    fp.trend = core.detrended.trend;
    fp.trend_values = std::move(core.detrended.values);
    fp.residual = std::move(core.detrended.residual);
    fp.arma = model;
    fp.statespace = ss;
    fp.innovations = TimeSeries::complete(series.start(), step, kr.innovations);
    const auto [na, nc] = orders_for(chosen);
    fp.meta.orders = OrderCell{na, nc, 0, 0, static_cast<int>(ss.dim())};
    return fp;
}

// ---------------------------------------------------------------------------
// FORWAVER

int automatic_wavelet_levels(std::size_t n, std::int64_t step) {
    int levels = std::min(4, static_cast<int>(std::bit_width(n)) - 3);  // floor(log2 n) - 2
    // The approximation band spans periods >= 2^(levels+1) samples; keep the
    // diurnal cycle inside it with an octave to spare.
    const double period = step > 0 ? 86400.0 / static_cast<double>(step) : 0.0;
    if (period > 2.0) levels = std::min(levels, static_cast<int>(std::floor(std::log2(period))) - 2);
    return std::max(levels, 1);
}

FittedPredictor fit_forwaver(const TimeSeries& series, const PredictorConfig& cfg, const Channel& target) {
    cfg.validate();
    check_series(series, cfg, "fit_forwaver");
    const auto x = series.values();
    const std::size_t n = x.size();
    FittedPredictor fp;
    fp.kind = PredictorKind::forwaver;
    fp.target = target;
    fp.history = series;

    const int admissible = ident::max_wavelet_levels(n);
    int levels = cfg.wavelet_levels ? *cfg.wavelet_levels : automatic_wavelet_levels(n, series.step());
    if (levels > admissible) {
        levels = admissible;
        fp.meta.levels_reduced = true;
    }
    if (levels < 1) throw ValidationError("fit_forwaver: series too short for any wavelet level");
    fp.meta.wavelet_levels = levels;

    // Mirror the series so the periodic transform sees no jump at the ends.
    std::vector<double> mirrored(x);
    mirrored.insert(mirrored.end(), x.rbegin(), x.rend());
    auto dec = ident::dwt(mirrored, cfg.wavelet_taps, levels);
    ++fp.meta.fit_cost;
    auto approx_only = dec;
    for (auto& d : approx_only.details) std::fill(d.begin(), d.end(), 0.0);
    auto smooth = ident::idwt(approx_only);
    smooth.resize(n);

    fp.trend_values = std::move(smooth);
    fp.residual = exact_residual(x, fp.trend_values);
    fp.trend = fit_trend(fp.trend_values, series.step());
    fp.meta.fit_cost += 8;
    auto fit = select_and_fit_arma(fp.residual, cfg, fp.meta, &fp.meta.orders);
    fp.meta.orders.n = 0;
    fp.arma = fit.model;
    fp.wavelet = std::move(dec);
    fp.innovations = TimeSeries::complete(series.start(), series.step(), fit.innovations);
    return fp;
}

// ---------------------------------------------------------------------------
// PARMAX

FittedPredictor fit_parmax(const DataBlock& block, std::size_t target, const PredictorConfig& cfg) {
    cfg.validate();
    if (target >= block.size())
        throw ValidationError("fit_parmax: target index " + std::to_string(target) + " outside block '" +
                              block.code() + "'");
    for (std::size_t i = 0; i < block.size(); ++i) check_series(block.series(i), cfg, "fit_parmax");
    std::vector<std::size_t> others;
    for (std::size_t i = 0; i < block.size(); ++i)
        if (i != target) others.push_back(i);

    std::vector<unsigned> subsets;
    if (cfg.parmax_singletons_only) {
        for (std::size_t j = 0; j < others.size(); ++j) subsets.push_back(1u << j);
    } else {
        for (unsigned m = 1; m < (1u << others.size()); ++m) subsets.push_back(m);
        std::stable_sort(subsets.begin(), subsets.end(), [](unsigned a, unsigned b) {
            return std::popcount(a) < std::popcount(b);
        });
    }

    const auto& series = block.series(target);
    const auto step = series.step();
    const auto x = series.values();
    const std::size_t n = x.size();
    const std::span<const double> xs(x);
    FittedPredictor fp;
    fp.kind = PredictorKind::parmax;
    fp.target = block.channel(target);
    fp.history = series;
    auto& meta = fp.meta;

    const auto plan = plan_validation(n, cfg);

    // Training-part models for the target trend and each candidate input.
    const auto target_trend = fit_trend(xs.first(plan.train), step);
    meta.fit_cost += 8;
    const auto target_resid = extend_residual(x, target_trend);

    struct TrainInput {
        std::vector<double> resid;                  // on [0, n) w.r.t. the training trend
        std::vector<std::vector<double>> futures;  // per origin, plan.h values
    };
    std::vector<TrainInput> train_inputs(others.size());
    for (std::size_t j = 0; j < others.size(); ++j) {
        const auto u = block.series(others[j]).values();
        auto core = parma_core(std::span<const double>(u).first(plan.train), step, cfg, meta);
        auto& ti = train_inputs[j];
        ti.resid = extend_residual(u, core.detrended.trend);
        for (std::size_t origin : plan.origins) {
            const std::span<const double> hist = std::span<const double>(ti.resid).first(origin);
            if (cfg.exogenous == ExogenousPolicy::hold_last) {
                ti.futures.push_back(hold_last(hist, plan.h));
            } else {
                const auto e = ident::arma_innovations(core.fit.model, hist);
                ti.futures.push_back(ident::arma_forecast(core.fit.model, hist, e, plan.h));
            }
        }
    }

    OrderGrid grid;
    grid.na = cfg.armax_na;
    grid.nc = cfg.armax_nc;
    grid.nb = cfg.armax_nb;
    grid.nk = cfg.armax_nk;

    auto members_of = [&](unsigned mask) {
        std::vector<std::size_t> idx;
        for (std::size_t j = 0; j < others.size(); ++j)
            if (mask & (1u << j)) idx.push_back(j);
        return idx;
    };
    auto fit_cell = [](std::span<const double> y, const std::vector<std::vector<double>>& u,
                       const OrderCell& c) {
        const std::vector<std::size_t> nb(u.size(), as_size(c.nb)), nk(u.size(), as_size(c.nk));
        return ident::fit_armax(y, u, as_size(c.na), nb, as_size(c.nc), nk);
    };
    const auto burn = static_cast<std::size_t>(
        std::max(grid.na.hi, grid.nk.hi + grid.nb.hi - 1) + grid.nc.hi);
    auto select_cell = [&](std::span<const double> y, const std::vector<std::vector<double>>& u) {
        const auto sel = ident::select_order(
            grid,
            [&](const OrderCell& c) {
                const auto fit = fit_cell(y, u, c);
                const int k = c.na + c.nc + c.nb * static_cast<int>(u.size());
                return ident::CellScore{ident::bic(y.size() - burn, ident::common_variance(fit.innovations, burn), k), k};
            },
            cfg.workers);
        meta.fit_cost += sel.table.size();
        return sel.chosen;
    };

    std::optional<double> best_score;
    unsigned best_mask = 0;
    const std::span<const double> target_train = std::span<const double>(target_resid).first(plan.train);
    for (unsigned mask : subsets) {
        const auto idx = members_of(mask);
        ++meta.subsets_evaluated;
        try {
            std::vector<std::vector<double>> u_train;
            for (auto j : idx) u_train.emplace_back(train_inputs[j].resid.begin(),
                                                    train_inputs[j].resid.begin() + static_cast<std::ptrdiff_t>(plan.train));
            const auto cell = select_cell(target_train, u_train);
            ++meta.fit_cost;
            const auto model = fit_cell(target_train, u_train, cell).model;
            const auto radii = tube_radii(model.arma.a, model.arma.c, model.arma.sigma2, plan.h, cfg.level);
            std::size_t origin_index = 0;
            const double score = validation_score(xs, plan, [&](std::size_t origin, std::size_t h) {
                std::vector<std::vector<double>> u;
                for (auto j : idx) {
                    const auto& ti = train_inputs[j];
                    std::vector<double> v(ti.resid.begin(), ti.resid.begin() + static_cast<std::ptrdiff_t>(origin));
                    const auto& fut = ti.futures[origin_index];
                    v.insert(v.end(), fut.begin(), fut.end());
                    u.push_back(std::move(v));
                }
                ++origin_index;
                const auto hist = std::span<const double>(target_resid).first(origin);
                const auto e = ident::armax_innovations(model, hist, u);
                const auto pred = ident::armax_forecast(model, hist, e, u, h);
                Window w;
                w.values.resize(h);
                for (std::size_t k = 0; k < h; ++k)
                    w.values[k] = target_trend(static_cast<double>(origin + k)) + pred[k];
                w.radii = radii;
                return w;
            });
            if (!best_score || score > *best_score) {
                best_score = score;
                best_mask = mask;
            }
        } catch (const std::exception& e) {
            std::string names;
            for (auto j : idx) names += (names.empty() ? "" : "+") + std::string(info(block.channel(others[j]).parameter).id);
            meta.subset_failures.push_back("{" + names + "}: " + e.what());
        }
    }
    if (!best_score) {
        std::string msg = "fit_parmax: every input subset failed";
        for (const auto& f : meta.subset_failures) msg += "; " + f;
        throw NumericalError(msg);
    }

    // Refit the chosen subset on the whole measuring horizon.
    auto target_d = detrend(x, step, meta);
    std::vector<std::vector<double>> u_full;
    for (auto j : members_of(best_mask)) {
        const auto u = block.series(others[j]).values();
        auto core = parma_core(u, step, cfg, meta);
        ExogenousInput in;
        in.channel = block.channel(others[j]);
        in.trend = core.detrended.trend;
        in.residual = std::move(core.detrended.residual);
        in.model = core.fit.model;
        in.innovations = std::move(core.fit.innovations);
        u_full.push_back(in.residual);
        fp.inputs.push_back(std::move(in));
    }
    const auto cell = select_cell(target_d.residual, u_full);
    ++meta.fit_cost;
    auto fit = fit_cell(target_d.residual, u_full, cell);

    fp.trend = target_d.trend;
    fp.trend_values = std::move(target_d.values);
    fp.residual = std::move(target_d.residual);
    fp.armax = fit.model;
    fp.innovations = TimeSeries::complete(series.start(), step, fit.innovations);
    meta.orders = cell;
    return fp;
}

FittedPredictor fit_predictor(PredictorKind kind, const DataBlock& block, std::size_t target,
                              const PredictorConfig& cfg) {
    if (target >= block.size())
        throw ValidationError("target index " + std::to_string(target) + " outside block '" + block.code() + "'");
    switch (kind) {
        case PredictorKind::parma: return fit_parma(block.series(target), cfg, block.channel(target));
        case PredictorKind::parmax: return fit_parmax(block, target, cfg);
        case PredictorKind::karma: return fit_karma(block.series(target), cfg, block.channel(target));
        case PredictorKind::forwaver: return fit_forwaver(block.series(target), cfg, block.channel(target));
    }
    throw ValidationError("unknown predictor kind");
}

// ---------------------------------------------------------------------------
// Forecasting

std::vector<double> confidence_tube(const FittedPredictor& fp, std::size_t h, double level) {
    if (fp.kind == PredictorKind::karma && fp.statespace) {
        const auto kr = ident::kalman_predict(*fp.statespace, fp.residual, h);
        return running_max_sqrt(kr.variances, normal_quantile(level));
    }
    const ArmaModel* m = fp.armax ? &fp.armax->arma : fp.arma ? &*fp.arma : nullptr;
    if (!m) throw ValidationError("confidence_tube: predictor has no stochastic model");
    return tube_radii(m->a, m->c, m->sigma2, h, level);
}

Forecast forecast(const FittedPredictor& fp, std::size_t h, const PredictorConfig& cfg) {
    if (h < 1) throw ValidationError("forecast: horizon must be >= 1");
    if (h > cfg.max_horizon)
        throw ValidationError("forecast: horizon " + std::to_string(h) + " exceeds the maximum of " +
                              std::to_string(cfg.max_horizon) + " steps");
    const std::size_t n = fp.residual.size();
    const auto innov = fp.innovations.values();
    std::vector<double> stochastic;
    Forecast out;
    out.start = fp.history.time_at(n);
    out.step = fp.history.step();
    out.level = cfg.level;

    if (fp.kind == PredictorKind::karma) {
        if (!fp.statespace) throw ValidationError("forecast: KARMA predictor without a state-space model");
        const auto kr = ident::kalman_predict(*fp.statespace, fp.residual, h);
        stochastic = kr.predictions;
        out.radii = running_max_sqrt(kr.variances, normal_quantile(cfg.level));
    } else if (fp.kind == PredictorKind::parmax) {
        if (!fp.armax) throw ValidationError("forecast: PARMAX predictor without an ARMAX model");
        std::vector<std::vector<double>> u;
        for (const auto& in : fp.inputs) {
            std::vector<double> v = in.residual;
            const auto fut = cfg.exogenous == ExogenousPolicy::hold_last
                                 ? hold_last(in.residual, h)
                                 : ident::arma_forecast(in.model, in.residual, in.innovations, h);
            v.insert(v.end(), fut.begin(), fut.end());
            u.push_back(std::move(v));
        }
        stochastic = ident::armax_forecast(*fp.armax, fp.residual, innov, u, h);
        out.radii = confidence_tube(fp, h, cfg.level);
    } else {
        if (!fp.arma) throw ValidationError("forecast: predictor without an ARMA model");
        stochastic = ident::arma_forecast(*fp.arma, fp.residual, innov, h);
        out.radii = confidence_tube(fp, h, cfg.level);
    }
    out.values.resize(h);
    for (std::size_t k = 0; k < h; ++k) out.values[k] = fp.trend(static_cast<double>(n + k)) + stochastic[k];
    return out;
}

}  // namespace eko::predict
