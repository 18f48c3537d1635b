#include "eko/ingest.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

namespace eko::ingest {

namespace {

std::vector<std::string_view> split_fields(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t pos = 0;
    while (true) {
        const auto next = line.find(',', pos);
        out.push_back(line.substr(pos, next == std::string_view::npos ? std::string_view::npos : next - pos));
        if (next == std::string_view::npos) break;
        pos = next + 1;
    }
    return out;
}

template <class T>
bool parse_number(std::string_view s, T& out) {
    if (s.empty()) return false;
    const char* first = s.data();
    if (s.front() == '+') ++first;
    const auto [ptr, ec] = std::from_chars(first, s.data() + s.size(), out);
    return ec == std::errc{} && ptr == s.data() + s.size();
}

std::optional<RawRecord> fail(LineError* error, std::string reason) {
    if (error) error->reason = std::move(reason);
    return std::nullopt;
}

}  // namespace

std::string format_record(const RawRecord& r) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, r.value);
    std::string out = r.timestamp.iso8601();
    out += ',';
    out += std::to_string(r.node_id);
    out += ',';
    out += std::to_string(r.sensor_id);
    out += ',';
    out += to_string(r.category);
    out += ',';
    out += info(r.parameter).acronym;
    out += ',';
    out.append(buf, res.ptr);
    return out;
}

std::optional<RawRecord> parse_record(std::string_view line, LineError* error) {
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty()) return fail(error, "empty line");
    const auto f = split_fields(line);
    if (f.size() != 6) return fail(error, "expected 6 fields, got " + std::to_string(f.size()));
    RawRecord r;
    const auto ts = Timestamp::parse_iso8601(f[0]);
    if (!ts) return fail(error, "bad timestamp");
    r.timestamp = *ts;
    if (!parse_number(f[1], r.node_id)) return fail(error, "bad node_id");
    if (r.node_id < 1 || r.node_id > 6) return fail(error, "node_id out of range");
    if (!parse_number(f[2], r.sensor_id) || r.sensor_id < 0) return fail(error, "bad sensor_id");
    if (f[3] == "soil") r.category = Category::soil;
    else if (f[3] == "leaves") r.category = Category::leaves;
    else if (f[3] == "ambient") r.category = Category::ambient;
    else return fail(error, "unknown category");
    const auto kind = find_kind(r.category, f[4]);
    if (!kind) return fail(error, "unknown parameter");
    r.parameter = *kind;
    if (!parse_number(f[5], r.value) || !std::isfinite(r.value)) return fail(error, "bad value");
    return r;
}

ParseResult parse_export(std::istream& in) {
    ParseResult out;
    std::string line;
    std::size_t number = 0;
    while (std::getline(in, line)) {
        ++number;
        std::string_view view = line;
        if (!view.empty() && view.back() == '\r') view.remove_suffix(1);
        if (view == kEndMarker) {
            out.saw_end_marker = true;
            break;
        }
        if (number == 1 && view == kCsvHeader) continue;
        LineError err;
        if (auto r = parse_record(view, &err)) out.records.push_back(*r);
        else out.rejected.push_back({number, line, err.reason});
    }
    if (in.bad()) throw IoError("parse_export: read failure after line " + std::to_string(number));
    return out;
}

ParseResult parse_export_text(std::string_view text) {
    std::istringstream in{std::string(text)};
    return parse_export(in);
}

ParseResult read_export_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open '" + path + "'");
    return parse_export(in);
}

void write_export(std::ostream& out, std::span<const RawRecord> records, bool end_marker) {
    out << kCsvHeader << '\n';
    for (const auto& r : records) out << format_record(r) << '\n';
    if (end_marker) out << kEndMarker << '\n';
}

std::string serialize(std::span<const RawRecord> records, bool end_marker) {
    std::ostringstream out;
    write_export(out, records, end_marker);
    return out.str();
}

void write_export_file(const std::string& path, std::span<const RawRecord> records) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write '" + path + "'");
    write_export(out, records);
    if (!out) throw IoError("write failed for '" + path + "'");
}

std::vector<std::size_t> out_of_range(std::span<const RawRecord> records) {
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < records.size(); ++i)
        if (validate_value(records[i].parameter, records[i].value) == ValueCheck::out_of_range) idx.push_back(i);
    return idx;
}

// ---------------------------------------------------------------------------
// Alerts

void AlertRule::validate() const {
    if (!low && !high) throw ValidationError("alert rule '" + rule_id + "': needs a low or high bound");
    if (low && high && !(*low < *high))
        throw ValidationError("alert rule '" + rule_id + "': low must be below high");
    if (node_id < 1 || node_id > 6) throw ValidationError("alert rule '" + rule_id + "': node_id outside 1..6");
}

std::vector<AlertEvent> evaluate_alerts(std::span<const AlertRule> rules,
                                        std::span<const RawRecord> records) {
    for (const auto& r : rules) r.validate();
    std::vector<std::size_t> order(records.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return records[a].timestamp < records[b].timestamp;
    });
    std::vector<AlertEvent> events;
    for (const auto i : order) {
        const auto& rec = records[i];
        for (const auto& rule : rules) {
            if (rule.node_id != rec.node_id || rule.parameter != rec.parameter) continue;
            if (rule.low && rec.value < *rule.low) events.push_back({rule.rule_id, rec.timestamp, rec.value, Bound::low});
            if (rule.high && rec.value > *rule.high)
                events.push_back({rule.rule_id, rec.timestamp, rec.value, Bound::high});
        }
    }
    return events;
}

// ---------------------------------------------------------------------------
// Grouping

namespace {

bool matches(const BlockSelector& sel, std::span<const ParameterKind> kinds, const RawRecord& r) {
    if (r.node_id != sel.node_id) return false;
    const bool soil_side = r.category == Category::soil || r.category == Category::leaves;
    if ((sel.category == BlockCategory::soil) != soil_side) return false;
    return std::find(kinds.begin(), kinds.end(), r.parameter) != kinds.end();
}

}  // namespace

bool selector_matches(const BlockSelector& sel, const RawRecord& r) {
    const auto kinds = selector_kinds(sel);
    return matches(sel, kinds, r);
}

GroupedBlocks group_blocks(std::span<const RawRecord> records, const NetworkTopology& topology,
                           std::span<const BlockSelector> grouping) {
    struct Prepared {
        const BlockSelector* sel;
        std::vector<ParameterKind> kinds;
        std::vector<RawRecord>* sink;
    };
    GroupedBlocks out;
    std::vector<Prepared> prepared;
    for (const auto& sel : grouping) {
        const auto code = block_code(sel);
        if (!topology.nodes.count(sel.node_id))
            throw ValidationError("grouping " + code + ": node " + std::to_string(sel.node_id) +
                                  " is not in the topology");
        auto kinds = selector_kinds(sel);
        for (const auto kind : kinds)
            if (!topology.sensor_for(sel.node_id, kind))
                throw ValidationError("grouping " + code + ": node " + std::to_string(sel.node_id) +
                                      " has no sensor for " + std::string(info(kind).id));
        if (!out.blocks.emplace(code, std::vector<RawRecord>{}).second)
            throw ValidationError("grouping lists " + code + " twice");
        out.codes.push_back(code);
        prepared.push_back({&sel, std::move(kinds), nullptr});
    }
    // Map nodes are stable, so the sinks can be resolved once all keys exist.
    for (auto& p : prepared) p.sink = &out.blocks[block_code(*p.sel)];
    for (const auto& r : records) {
        bool matched = false;
        for (const auto& p : prepared) {
            if (!matches(*p.sel, p.kinds, r)) continue;
            p.sink->push_back(r);
            matched = true;
        }
        if (!matched) out.orphans.push_back(r);
    }
    return out;
}

}  // namespace eko::ingest
