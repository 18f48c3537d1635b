#include <algorithm>
#include <chrono>
#include <cmath>
#include <map>

#include "eko/eval.hpp"
#include "eko/parallel.hpp"
#include "eko/quality.hpp"

namespace eko {

double standard_deviation(std::span<const double> v) {
    if (v.empty()) return 0.0;
    double mean = 0.0;
    for (double x : v) mean += x;
    mean /= static_cast<double>(v.size());
    double ss = 0.0;
    for (double x : v) ss += (x - mean) * (x - mean);
    return std::sqrt(ss / static_cast<double>(v.size()));
}

PQScore prediction_quality(std::span<const double> actual, std::span<const double> predicted,
                           std::span<const double> radii, double sigma_y) {
    if (actual.size() != predicted.size() || actual.size() != radii.size())
        throw ValidationError("prediction_quality: actual, forecast and radii lengths differ (" +
                              std::to_string(actual.size()) + ", " + std::to_string(predicted.size()) +
                              ", " + std::to_string(radii.size()) + ")");
    if (actual.empty()) throw ValidationError("prediction_quality: empty forecast window");
    if (!(sigma_y > 0.0)) throw ValidationError("prediction_quality: target standard deviation must be > 0");
    double se = 0.0, r = 0.0;
    for (std::size_t k = 0; k < actual.size(); ++k) {
        se += (actual[k] - predicted[k]) * (actual[k] - predicted[k]);
        r += radii[k];
    }
    const double n = static_cast<double>(actual.size());
    PQScore s;
    s.accuracy = std::max(0.0, 1.0 - std::sqrt(se / n) / sigma_y);
    s.tightness = std::max(0.0, 1.0 - (r / n) / (4.0 * sigma_y));
    s.value = 100.0 * s.accuracy * s.tightness;
    return s;
}

}  // namespace eko

// ---------------------------------------------------------------------------

namespace eko::eval {

PQScore prediction_quality(std::span<const double> actual, const Forecast& fc, double sigma_y) {
    return eko::prediction_quality(actual, fc.values, fc.radii, sigma_y);
}

std::string_view to_string(Medal m) {
    switch (m) {
        case Medal::gold: return "gold";
        case Medal::silver: return "silver";
        case Medal::bronze: return "bronze";
        case Medal::none: return "none";
    }
    return "none";
}

ChannelRanking rank_channel(std::span<const ChannelReport> cells) {
    ChannelRanking r;
    if (!cells.empty()) r.channel = cells.front().channel;
    std::vector<const ChannelReport*> sorted;
    for (const auto& c : cells) sorted.push_back(&c);
    std::stable_sort(sorted.begin(), sorted.end(), [](const ChannelReport* a, const ChannelReport* b) {
        if (a->ok() != b->ok()) return a->ok();
        if (a->ok() && std::abs(a->pq.value - b->pq.value) > kPqTieTolerance) return a->pq.value > b->pq.value;
        if (a->fit_cost != b->fit_cost) return a->fit_cost < b->fit_cost;
        return predict::to_string(a->predictor) < predict::to_string(b->predictor);
    });
    const Medal medals[] = {Medal::gold, Medal::silver, Medal::bronze};
    std::size_t place = 0;
    for (const auto* c : sorted) {
        RankEntry e;
        e.predictor = c->predictor;
        if (c->ok()) {
            e.pq = c->pq.value;
            if (place < 3) e.medal = medals[place++];
        }
        r.order.push_back(e);
    }
    return r;
}

void CompareConfig::validate() const {
    if (horizon < 4) throw ValidationError("compare: forecast window must be >= 4 steps");
    if (predictors.empty()) throw ValidationError("compare: empty predictor set");
    for (std::size_t i = 0; i < predictors.size(); ++i)
        for (std::size_t j = i + 1; j < predictors.size(); ++j)
            if (predictors[i] == predictors[j])
                throw ValidationError("compare: predictor " + std::string(predict::to_string(predictors[i])) +
                                      " listed twice");
    if (workers < 1) throw ValidationError("compare: workers must be >= 1");
    predictor.validate();
    if (horizon > predictor.max_horizon)
        throw ValidationError("compare: horizon " + std::to_string(horizon) + " exceeds the maximum of " +
                              std::to_string(predictor.max_horizon));
}

namespace {

ChannelReport run_cell(const DataBlock& measuring, std::size_t channel, PredictorKind kind,
                       std::span<const double> actual, const CompareConfig& cfg) {
    ChannelReport cell;
    cell.channel = std::string(info(measuring.channel(channel).parameter).id);
    cell.predictor = kind;
    cell.actual.assign(actual.begin(), actual.end());
    cell.series = measuring.series(channel).values();
    try {
        const auto t0 = std::chrono::steady_clock::now();
        const auto fp = predict::fit_predictor(kind, measuring, channel, cfg.predictor);
        auto fc = predict::forecast(fp, cfg.horizon, cfg.predictor);
        const auto t1 = std::chrono::steady_clock::now();
        if (cfg.timing) cell.fit_ms = std::chrono::duration<double, std::milli>(t1 - t0).count();
        cell.trend_values = fp.trend_values;
        cell.trend_basis = fp.trend.basis();
        cell.trend_coeffs = fp.trend.coeffs;
        cell.innovations = fp.innovations.values();
        cell.orders = fp.meta.orders;
        cell.fit_cost = fp.meta.fit_cost;
        for (const auto& in : fp.inputs) cell.inputs.emplace_back(info(in.channel.parameter).id);
        cell.forecast = std::move(fc);
        cell.pq = prediction_quality(actual, cell.forecast, standard_deviation(cell.series));
    } catch (const std::exception& e) {
        cell.failure = e.what();
    }
    return cell;
}

}  // namespace

ReportBundle compare(const DataBlock& block, const CompareConfig& cfg) {
    cfg.validate();
    const std::size_t n = block.length();
    if (n < cfg.horizon + 60)
        throw ValidationError("compare: block '" + block.code() + "' has " + std::to_string(n) +
                              " samples; a measuring horizon of 60 plus " + std::to_string(cfg.horizon) +
                              " withheld steps is required");
    const std::size_t measured = n - cfg.horizon;
    const auto head = block.slice(0, measured);
    const std::size_t kinds = cfg.predictors.size();

    ReportBundle b;
    b.block_code = block.code();
    b.start = block.start();
    b.step_seconds = block.step();
    b.n = n;
    b.horizon = cfg.horizon;
    b.cells.resize(block.size() * kinds);
    parallel_for(b.cells.size(), cfg.workers, [&](std::size_t i) {
        const std::size_t ch = i / kinds;
        const auto values = block.series(ch).values();
        const std::span<const double> actual(values.data() + measured, cfg.horizon);
        b.cells[i] = run_cell(head, ch, cfg.predictors[i % kinds], actual, cfg);
    });
    for (std::size_t ch = 0; ch < block.size(); ++ch)
        b.ranking.push_back(rank_channel(std::span(b.cells).subspan(ch * kinds, kinds)));
    return b;
}

std::vector<MedalRow> medal_table(std::span<const ChannelRanking> rankings) {
    if (rankings.empty()) throw ValidationError("medal_table: no channel rankings");
    std::map<PredictorKind, MedalRow> rows;
    for (const auto& r : rankings)
        for (const auto& e : r.order) {
            auto& row = rows[e.predictor];
            row.predictor = e.predictor;
            ++row.cells;
            row.gold += e.medal == Medal::gold;
            row.silver += e.medal == Medal::silver;
            row.bronze += e.medal == Medal::bronze;
        }
    std::vector<MedalRow> out;
    for (auto& [k, row] : rows) out.push_back(row);
    return out;
}

std::vector<MedalRow> medal_table(std::span<const ReportBundle> bundles) {
    std::vector<ChannelRanking> all;
    for (const auto& b : bundles) all.insert(all.end(), b.ranking.begin(), b.ranking.end());
    auto rows = medal_table(all);
    for (auto& row : rows) {
        double ms = 0.0, cost = 0.0;
        std::size_t timed = 0, cells = 0;
        for (const auto& b : bundles)
            for (const auto& c : b.cells) {
                if (c.predictor != row.predictor || !c.ok()) continue;
                ++cells;
                cost += static_cast<double>(c.fit_cost);
                if (c.fit_ms) {
                    ms += *c.fit_ms;
                    ++timed;
                }
            }
        if (cells) row.mean_fit_cost = cost / static_cast<double>(cells);
        if (timed) row.mean_fit_ms = ms / static_cast<double>(timed);
    }
    return rows;
}

}  // namespace eko::eval
