#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "eko/core.hpp"
#include "eko/eval.hpp"
#include "eko/ingest.hpp"
#include "eko/predict.hpp"
#include "eko/preprocess.hpp"

namespace eko::pipeline {

/// Every stage's settings. Loaded from `key = value` lines; `#` starts a
/// comment. Unknown keys and malformed values raise ValidationError.
struct Settings {
    std::uint64_t seed = 7;
    std::optional<std::size_t> workers;  // default: available parallelism
    ingest::StandardScenarioOptions scenario{};
    NetworkTopology topology = standard_topology();
    std::vector<BlockSelector> grouping = standard_grouping();
    preprocess::PipelineConfig preprocess{};
    eval::CompareConfig compare{};

    std::size_t worker_count() const;
    void validate() const;
};

Settings parse_settings(std::string_view text);
Settings load_settings(const std::filesystem::path& path);
/// Keys accepted by the parser, in documentation order.
std::span<const std::string_view> settings_keys();

/// Scenario built from the settings: the standard scenario restricted to
/// the configured topology.
ingest::ScenarioSpec scenario(const Settings& s);

/// Samples of every channel a block selects, in selector order.
std::vector<preprocess::ChannelSamples> channel_samples(const BlockSelector& sel,
                                                        std::span<const ingest::RawRecord> records,
                                                        const NetworkTopology& topology);

struct PreparedBlock {
    std::string code;
    std::optional<preprocess::BlockAssembly> assembly;
    std::string failure;  // why assembly failed
};

/// Groups records into the configured blocks and assembles each one.
/// Blocks that cannot be assembled are reported, not thrown.
std::vector<PreparedBlock> prepare_blocks(std::span<const ingest::RawRecord> records, const Settings& s);

/// simulate -> group -> assemble for the configured scenario and seed.
/// Throws ValidationError if any block fails to assemble.
std::vector<DataBlock> simulate_blocks(const Settings& s);

/// Compares every block; blocks run in parallel, cells inside a block serially.
std::vector<eval::ReportBundle> compare_all(std::span<const DataBlock> blocks, const eval::CompareConfig& cfg,
                                            std::size_t workers);

// On-disk block format (JSON): code, grid and one value array per channel.
std::string block_to_json(const DataBlock& b);
DataBlock block_from_json(std::string_view text);

/// Medal table as aligned text, one row per predictor.
std::string format_medal_table(std::span<const eval::MedalRow> rows);

}  // namespace eko::pipeline
