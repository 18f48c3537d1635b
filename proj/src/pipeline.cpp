#include <algorithm>
#include <cstdio>

#include <json.hpp>

#include "eko/parallel.hpp"
#include "eko/pipeline.hpp"

namespace eko::pipeline {

using ordered_json = nlohmann::ordered_json;

ingest::ScenarioSpec scenario(const Settings& s) {
    auto spec = ingest::standard_scenario(s.scenario);
    spec.channels.clear();
    for (const auto& [node, sensors] : s.topology.nodes)
        for (const auto& sensor : sensors)
            for (const auto kind : sensor.parameters)
                spec.channels.push_back(ingest::default_recipe(Channel{node, sensor.id, kind}));
    // Couplings were resolved against the standard layout; re-resolve them.
    spec.couplings.clear();
    for (const int node : s.scenario.coupled_nodes) {
        const auto te = s.topology.sensor_for(node, ParameterKind::TeSoil);
        const auto mo = s.topology.sensor_for(node, ParameterKind::Mo);
        if (!te || !mo) throw ValidationError("scenario: node " + std::to_string(node) + " lacks soil Te or Mo");
        spec.couplings.push_back({Channel{node, *te, ParameterKind::TeSoil}, Channel{node, *mo, ParameterKind::Mo},
                                  s.scenario.coupling_gain, s.scenario.coupling_lag_hours});
    }
    std::erase_if(spec.outages, [&](const ingest::Outage& o) { return !s.topology.nodes.count(o.node_id); });
    return spec;
}

std::vector<preprocess::ChannelSamples> channel_samples(const BlockSelector& sel,
                                                        std::span<const ingest::RawRecord> records,
                                                        const NetworkTopology& topology) {
    std::vector<preprocess::ChannelSamples> out;
    for (const auto kind : selector_kinds(sel)) {
        const auto sensor = topology.sensor_for(sel.node_id, kind);
        if (!sensor)
            throw ValidationError("block " + block_code(sel) + ": node " + std::to_string(sel.node_id) +
                                  " has no sensor for " + std::string(info(kind).id));
        preprocess::ChannelSamples cs{Channel{sel.node_id, *sensor, kind}, {}};
        for (const auto& r : records)
            if (r.node_id == sel.node_id && r.sensor_id == *sensor && r.parameter == kind &&
                ingest::selector_matches(sel, r))
                cs.samples.push_back({r.timestamp, r.value});
        out.push_back(std::move(cs));
    }
    return out;
}

std::vector<PreparedBlock> prepare_blocks(std::span<const ingest::RawRecord> records, const Settings& s) {
    const auto grouped = ingest::group_blocks(records, s.topology, s.grouping);
    std::vector<PreparedBlock> out(s.grouping.size());
    parallel_for(out.size(), s.worker_count(), [&](std::size_t i) {
        const auto& sel = s.grouping[i];
        out[i].code = block_code(sel);
        try {
            const auto samples = channel_samples(sel, grouped.blocks.at(out[i].code), s.topology);
            out[i].assembly = preprocess::assemble_block(out[i].code, samples, s.preprocess);
        } catch (const std::exception& e) {
            out[i].failure = e.what();
        }
    });
    return out;
}

std::vector<DataBlock> simulate_blocks(const Settings& s) {
    const auto records = ingest::generate_synthetic(scenario(s), s.seed);
    std::vector<DataBlock> blocks;
    for (auto& p : prepare_blocks(records, s)) {
        if (!p.assembly) throw ValidationError("block " + p.code + ": " + p.failure);
        blocks.push_back(std::move(p.assembly->block));
    }
    return blocks;
}

std::vector<eval::ReportBundle> compare_all(std::span<const DataBlock> blocks, const eval::CompareConfig& cfg,
                                            std::size_t workers) {
    auto inner = cfg;
    inner.workers = 1;
    std::vector<std::optional<eval::ReportBundle>> slots(blocks.size());
    parallel_for(blocks.size(), workers, [&](std::size_t i) { slots[i] = eval::compare(blocks[i], inner); });
    std::vector<eval::ReportBundle> out;
    for (auto& b : slots) out.push_back(std::move(*b));
    return out;
}

std::string block_to_json(const DataBlock& b) {
    ordered_json j;
    j["block_code"] = b.code();
    j["grid"] = {{"start", b.start().iso8601()}, {"step_seconds", b.step()}, {"n", b.length()}};
    ordered_json chans = ordered_json::array();
    for (std::size_t i = 0; i < b.size(); ++i) {
        const auto& ch = b.channel(i);
        ordered_json values = ordered_json::array();
        for (double v : b.series(i).values()) values.push_back(v);
        chans.push_back({{"node_id", ch.node_id},
                         {"sensor_id", ch.sensor_id},
                         {"parameter", info(ch.parameter).id},
                         {"values", std::move(values)}});
    }
    j["channels"] = std::move(chans);
    return j.dump(1) + "\n";
}

DataBlock block_from_json(std::string_view text) {
    try {
        const auto j = ordered_json::parse(text);
        const auto start = Timestamp::parse_iso8601(j.at("grid").at("start").get<std::string>());
        if (!start) throw ValidationError("block file: bad grid start");
        const auto step = j.at("grid").at("step_seconds").get<std::int64_t>();
        const auto n = j.at("grid").at("n").get<std::size_t>();
        std::vector<DataBlock::Member> members;
        for (const auto& c : j.at("channels")) {
            const auto id = c.at("parameter").get<std::string>();
            const auto kind = kind_from_id(id);
            if (!kind) throw ValidationError("block file: unknown parameter '" + id + "'");
            std::vector<double> values;
            for (const auto& v : c.at("values")) values.emplace_back(v.get<double>());
            if (values.size() != n) throw ValidationError("block file: channel " + id + " length differs from grid");
            members.push_back({Channel{c.at("node_id").get<int>(), c.at("sensor_id").get<int>(), *kind},
                               TimeSeries::complete(*start, step, values)});
        }
        return DataBlock(j.at("block_code").get<std::string>(), std::move(members));
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(std::string("block file: ") + e.what());
    }
}

std::string format_medal_table(std::span<const eval::MedalRow> rows) {
    std::string out = "predictor  gold silver bronze cells mean_fit_cost mean_fit_ms\n";
    char line[128];
    for (const auto& r : rows) {
        std::snprintf(line, sizeof line, "%-9s %5zu %6zu %6zu %5zu %13.1f", std::string(predict::to_string(r.predictor)).c_str(),
                      r.gold, r.silver, r.bronze, r.cells, r.mean_fit_cost);
        out += line;
        if (r.mean_fit_ms) {
            std::snprintf(line, sizeof line, " %11.2f", *r.mean_fit_ms);
            out += line;
        } else {
            out += "           -";
        }
        out += "\n";
    }
    return out;
}

}  // namespace eko::pipeline
