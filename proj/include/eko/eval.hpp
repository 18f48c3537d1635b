#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "eko/core.hpp"
#include "eko/predict.hpp"
#include "eko/quality.hpp"

namespace eko::eval {

using predict::Forecast;
using predict::PredictorKind;

/// Scores a forecast against the withheld window.
PQScore prediction_quality(std::span<const double> actual, const Forecast& fc, double sigma_y);

/// One (channel, predictor) cell: series with its trend, innovations, the
/// forecast with its tube, and the score.
struct ChannelReport {
    std::string channel;  // parameter id, e.g. "Te_soil"
    PredictorKind predictor = PredictorKind::parma;
    std::string failure;  // empty when the cell succeeded

    std::vector<double> series;        // measuring horizon
    std::vector<double> trend_values;  // trend (FORWAVER: deterministic part) on the horizon
    std::string trend_basis;
    std::vector<double> trend_coeffs;
    std::vector<double> innovations;
    Forecast forecast;
    std::vector<double> actual;  // withheld window
    PQScore pq;
    ident::OrderCell orders;
    std::vector<std::string> inputs;  // PARMAX exogenous channels
    std::size_t fit_cost = 0;
    std::optional<double> fit_ms;  // wall-clock fit + forecast, when timing is enabled

    bool ok() const { return failure.empty(); }
    bool operator==(const ChannelReport&) const = default;
};

enum class Medal { gold, silver, bronze, none };
std::string_view to_string(Medal m);

struct RankEntry {
    PredictorKind predictor = PredictorKind::parma;
    std::optional<double> pq;  // empty for failed cells
    Medal medal = Medal::none;

    bool operator==(const RankEntry&) const = default;
};

struct ChannelRanking {
    std::string channel;
    std::vector<RankEntry> order;  // best first

    bool operator==(const ChannelRanking&) const = default;
};

/// PQ values closer than this are ties; ties go to the lower fit cost, then
/// to the predictor name.
inline constexpr double kPqTieTolerance = 1e-9;

/// Ranks the cells of one channel. Failed cells come last without a medal.
ChannelRanking rank_channel(std::span<const ChannelReport> cells);

struct ReportBundle {
    std::string block_code;
    Timestamp start;
    std::int64_t step_seconds = 3600;
    std::size_t n = 0;  // full grid length: measuring horizon + withheld window
    std::size_t horizon = 0;
    std::vector<ChannelReport> cells;  // channel-major, predictor order as requested
    std::vector<ChannelRanking> ranking;

    bool operator==(const ReportBundle&) const = default;
};

struct CompareConfig {
    std::size_t horizon = 12;
    std::vector<PredictorKind> predictors{std::begin(predict::kAllPredictors),
                                          std::end(predict::kAllPredictors)};
    predict::PredictorConfig predictor{};
    std::size_t workers = 1;
    bool timing = false;

    void validate() const;
};

/// Fits every channel x predictor on all but the last `horizon` samples,
/// forecasts the withheld window and ranks the predictors per channel.
/// Per-cell failures are recorded in the bundle.
ReportBundle compare(const DataBlock& block, const CompareConfig& cfg = {});

struct MedalRow {
    PredictorKind predictor = PredictorKind::parma;
    std::size_t gold = 0;
    std::size_t silver = 0;
    std::size_t bronze = 0;
    std::size_t cells = 0;
    std::optional<double> mean_fit_ms;
    double mean_fit_cost = 0.0;

    bool operator==(const MedalRow&) const = default;
};

/// Medal counts per predictor over every channel ranking. Fit statistics come
/// from the bundles' cells. Throws ValidationError when there is no ranking.
std::vector<MedalRow> medal_table(std::span<const ReportBundle> bundles);
std::vector<MedalRow> medal_table(std::span<const ChannelRanking> rankings);

// ---------------------------------------------------------------------------
// Report artifacts

enum class ReportFormat { json, csv, svg };
ReportFormat report_format_from_string(std::string_view s);

std::string to_json(const ReportBundle& b, int indent = 1);
ReportBundle parse_json(std::string_view text);

inline constexpr std::string_view kCsvHeader = "block,channel,predictor,step,actual,predicted,radius";
std::string to_csv(const ReportBundle& b, bool header = true);

/// One chart per cell plus `<block>__ranking.svg`. Returns file names.
std::vector<std::filesystem::path> emit_report(const ReportBundle& b, ReportFormat format,
                                               const std::filesystem::path& dir);

/// File name of a cell chart: `<block>__<channel>__<predictor>.svg`.
std::string chart_name(const std::string& block, const std::string& channel, PredictorKind p);

std::string chart_svg(const ChannelReport& cell, const std::string& block, Timestamp start,
                      std::int64_t step_seconds);
std::string ranking_svg(const ReportBundle& b);

}  // namespace eko::eval
