#include "eko/core.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cstdio>
#include <set>
#include <sstream>

namespace eko {

namespace {

constexpr ParameterInfo kCatalogue[] = {
    {ParameterKind::Mo, "Mo", "Mo", Category::soil, "cbar", 0.0, 240.0},
    {ParameterKind::TeSoil, "Te", "Te_soil", Category::soil, "degC", -40.0, 65.0},
    {ParameterKind::WaCo, "WaCo", "WaCo", Category::soil, "%wfv", 0.0, 100.0},
    {ParameterKind::LeWe, "LeWe", "LeWe", Category::leaves, "CntS", 0.0, 1024.0},
    {ParameterKind::Hu, "Hu", "Hu", Category::ambient, "%", 0.0, 100.0},
    {ParameterKind::TeAmb, "Te", "Te_amb", Category::ambient, "degC", -40.0, 65.0},
    {ParameterKind::DwPo, "DwPo", "DwPo", Category::ambient, "degC", -10.0, 50.0},
    {ParameterKind::SoRa, "SoRa", "SoRa", Category::ambient, "W/m2", 0.0, 1800.0},
};

std::vector<std::string> split(std::string_view text, char sep) {
    std::vector<std::string> out;
    std::size_t pos = 0;
    while (true) {
        const auto next = text.find(sep, pos);
        out.emplace_back(text.substr(pos, next - pos));
        if (next == std::string_view::npos) break;
        pos = next + 1;
    }
    return out;
}

}  // namespace

const ParameterInfo& info(ParameterKind kind) {
    return kCatalogue[static_cast<std::size_t>(kind)];
}

std::string_view to_string(Category c) {
    switch (c) {
        case Category::soil: return "soil";
        case Category::leaves: return "leaves";
        case Category::ambient: return "ambient";
    }
    return "?";
}

Category category_from_string(std::string_view s) {
    if (s == "soil") return Category::soil;
    if (s == "leaves") return Category::leaves;
    if (s == "ambient") return Category::ambient;
    throw ValidationError("unknown category '" + std::string(s) + "'");
}

std::optional<ParameterKind> find_kind(Category c, std::string_view acronym) {
    for (const auto& p : kCatalogue) {
        if (p.acronym != acronym) continue;
        if (p.category == c) return p.kind;
        if (p.kind == ParameterKind::LeWe && c == Category::soil) return p.kind;
    }
    return std::nullopt;
}

std::optional<ParameterKind> kind_from_id(std::string_view id) {
    for (const auto& p : kCatalogue)
        if (p.id == id) return p.kind;
    return std::nullopt;
}

ValueCheck validate_value(ParameterKind kind, double v) {
    const auto& p = info(kind);
    return (v >= p.range_min && v <= p.range_max) ? ValueCheck::valid : ValueCheck::out_of_range;
}

// ---------------------------------------------------------------------------
// Timestamp

Timestamp Timestamp::floor_to(std::int64_t period) const {
    auto r = seconds_ % period;
    if (r < 0) r += period;
    return Timestamp{seconds_ - r};
}

Timestamp Timestamp::from_civil(int year, unsigned month, unsigned day, int hour, int minute,
                                int second) {
    using namespace std::chrono;
    const sys_days d{std::chrono::year{year} / std::chrono::month{month} / std::chrono::day{day}};
    return Timestamp{d.time_since_epoch().count() * 86400LL + hour * 3600LL + minute * 60LL +
                     second};
}

std::string Timestamp::iso8601() const {
    using namespace std::chrono;
    const auto days_since = seconds_ >= 0 ? seconds_ / 86400 : -((-seconds_ + 86399) / 86400);
    const std::int64_t tod = seconds_ - days_since * 86400;
    const year_month_day ymd{sys_days{days{days_since}}};
    char buf[32];
    std::snprintf(buf, sizeof buf, "%04d-%02u-%02uT%02d:%02d:%02dZ", int(ymd.year()),
                  unsigned(ymd.month()), unsigned(ymd.day()), int(tod / 3600),
                  int(tod % 3600 / 60), int(tod % 60));
    return buf;
}

std::optional<Timestamp> Timestamp::parse_iso8601(std::string_view t) {
    // YYYY-MM-DDTHH:MM:SSZ
    if (t.size() != 20 || t[4] != '-' || t[7] != '-' || t[10] != 'T' || t[13] != ':' ||
        t[16] != ':' || t[19] != 'Z')
        return std::nullopt;
    auto field = [&](std::size_t pos, std::size_t len, int& out) {
        const auto* first = t.data() + pos;
        const auto* last = first + len;
        if (!std::all_of(first, last, [](char c) { return c >= '0' && c <= '9'; })) return false;
        return std::from_chars(first, last, out).ec == std::errc{};
    };
    int y, mo, d, h, mi, s;
    if (!field(0, 4, y) || !field(5, 2, mo) || !field(8, 2, d) || !field(11, 2, h) ||
        !field(14, 2, mi) || !field(17, 2, s))
        return std::nullopt;
    const std::chrono::year_month_day ymd{std::chrono::year{y} / mo / d};
    if (!ymd.ok() || h > 23 || mi > 59 || s > 59) return std::nullopt;
    return from_civil(y, static_cast<unsigned>(mo), static_cast<unsigned>(d), h, mi, s);
}

// ---------------------------------------------------------------------------
// TimeSeries

TimeSeries::TimeSeries(Timestamp start, std::int64_t step_seconds, std::vector<Sample> values)
    : start_(start), step_(step_seconds), values_(std::move(values)) {
    if (step_ <= 0) throw ValidationError("time series step must be positive");
}

TimeSeries TimeSeries::complete(Timestamp start, std::int64_t step_seconds,
                                std::span<const double> values) {
    return TimeSeries(start, step_seconds, std::vector<Sample>(values.begin(), values.end()));
}

bool TimeSeries::is_complete() const {
    return std::all_of(values_.begin(), values_.end(), [](const Sample& s) { return s.has_value(); });
}

std::size_t TimeSeries::missing_count() const {
    return static_cast<std::size_t>(
        std::count_if(values_.begin(), values_.end(), [](const Sample& s) { return !s; }));
}

std::vector<double> TimeSeries::values() const {
    std::vector<double> out;
    out.reserve(values_.size());
    for (std::size_t k = 0; k < values_.size(); ++k) {
        if (!values_[k])
            throw ValidationError("series is not complete (MISSING at index " + std::to_string(k) +
                                  ")");
        out.push_back(*values_[k]);
    }
    return out;
}

TimeSeries TimeSeries::slice(std::size_t first, std::size_t count) const {
    if (first + count > values_.size()) throw ValidationError("slice out of range");
    return TimeSeries(time_at(first), step_,
                      std::vector<Sample>(values_.begin() + static_cast<std::ptrdiff_t>(first),
                                          values_.begin() + static_cast<std::ptrdiff_t>(first + count)));
}

// ---------------------------------------------------------------------------
// Topology

Channel make_channel(int node_id, int sensor_id, ParameterKind kind) {
    if (node_id < 1 || node_id > 6)
        throw ValidationError("node_id " + std::to_string(node_id) + " outside 1..6");
    return Channel{node_id, sensor_id, kind};
}

std::optional<int> NetworkTopology::sensor_for(int node_id, ParameterKind kind) const {
    const auto it = nodes.find(node_id);
    if (it == nodes.end()) return std::nullopt;
    for (const auto& s : it->second)
        if (std::find(s.parameters.begin(), s.parameters.end(), kind) != s.parameters.end())
            return s.id;
    return std::nullopt;
}

std::vector<std::string> validate_topology(const NetworkTopology& t) {
    std::vector<std::string> report;
    for (const auto& [node, sensors] : t.nodes) {
        const auto where = "node " + std::to_string(node);
        if (node < 1 || node > 6) report.push_back(where + ": node_id outside 1..6");
        if (sensors.size() > 4)
            report.push_back(where + ": " + std::to_string(sensors.size()) +
                             " sensors (at most 4 allowed)");
        std::set<int> ids;
        for (const auto& s : sensors) {
            const auto swhere = where + " sensor " + std::to_string(s.id);
            if (!ids.insert(s.id).second) report.push_back(swhere + ": duplicate sensor id");
            if (s.parameters.empty() || s.parameters.size() > 3)
                report.push_back(swhere + ": measures " + std::to_string(s.parameters.size()) +
                                 " parameters (1-3 allowed)");
        }
    }
    return report;
}

NetworkTopology standard_topology() {
    using K = ParameterKind;
    NetworkTopology t;
    for (int node = 1; node <= 3; ++node) {
        t.nodes[node] = {
            {1, {K::Mo, K::TeSoil, K::WaCo}},
            {2, {K::LeWe}},
            {3, {K::Hu, K::TeAmb, K::DwPo}},
            {4, {K::SoRa}},
        };
    }
    for (int node = 4; node <= 6; ++node) {
        t.nodes[node] = {{1, {K::Mo}}, {2, {K::TeSoil}}, {3, {K::WaCo}}};
    }
    return t;
}

// ---------------------------------------------------------------------------
// Block codes

std::string_view to_string(BlockCategory c) {
    return c == BlockCategory::soil ? "soil" : "ambient";
}

std::string block_code(int node_id, BlockCategory category, std::span<const std::string> acronyms) {
    if (node_id < 1 || node_id > 6)
        throw ValidationError("node_id " + std::to_string(node_id) + " outside 1..6");
    if (acronyms.empty()) throw ValidationError("block needs at least one acronym");
    const auto cat = category == BlockCategory::soil ? Category::soil : Category::ambient;
    std::set<std::string_view> seen;
    std::string code = "N" + std::to_string(node_id) + "-" + std::string(to_string(category));
    for (const auto& a : acronyms) {
        if (!find_kind(cat, a))
            throw ValidationError("unknown acronym '" + a + "' for " +
                                  std::string(to_string(category)) + " block");
        if (!seen.insert(a).second) throw ValidationError("duplicate acronym '" + a + "'");
        code += "-" + a;
    }
    return code;
}

std::string block_code(const BlockSelector& sel) {
    return block_code(sel.node_id, sel.category, sel.acronyms);
}

BlockSelector parse_block_code(std::string_view code) {
    const auto parts = split(code, '-');
    auto fail = [&](const std::string& why) {
        return ValidationError("invalid block code '" + std::string(code) + "': " + why);
    };
    if (parts.size() < 3 || parts[0].size() != 2 || parts[0][0] != 'N') throw fail("bad layout");
    BlockSelector sel;
    sel.node_id = parts[0][1] - '0';
    if (parts[1] == "soil") sel.category = BlockCategory::soil;
    else if (parts[1] == "ambient") sel.category = BlockCategory::ambient;
    else throw fail("category must be soil or ambient");
    sel.acronyms.assign(parts.begin() + 2, parts.end());
    try {
        if (block_code(sel) != code) throw fail("not canonical");
    } catch (const ValidationError& e) {
        throw fail(e.what());
    }
    return sel;
}

std::vector<ParameterKind> selector_kinds(const BlockSelector& sel) {
    const auto cat = sel.category == BlockCategory::soil ? Category::soil : Category::ambient;
    std::vector<ParameterKind> kinds;
    for (const auto& a : sel.acronyms) {
        const auto k = find_kind(cat, a);
        if (!k) throw ValidationError("unknown acronym '" + a + "'");
        kinds.push_back(*k);
    }
    return kinds;
}

std::vector<BlockSelector> standard_grouping() {
    using C = BlockCategory;
    std::vector<BlockSelector> g;
    for (int node = 1; node <= 6; ++node) g.push_back({node, C::soil, {"Mo", "Te", "WaCo"}});
    for (int node = 1; node <= 3; ++node) {
        g.push_back({node, C::soil, {"Mo", "Te", "WaCo", "LeWe"}});
        g.push_back({node, C::soil, {"Mo", "Te", "LeWe"}});
        g.push_back({node, C::soil, {"Te", "WaCo", "LeWe"}});
    }
    const std::vector<std::string> amb = {"Hu", "Te", "DwPo", "SoRa"};
    for (int node = 1; node <= 3; ++node) {
        g.push_back({node, C::ambient, amb});
        for (std::size_t skip = 0; skip < amb.size(); ++skip) {
            BlockSelector s{node, C::ambient, {}};
            for (std::size_t i = 0; i < amb.size(); ++i)
                if (i != skip) s.acronyms.push_back(amb[i]);
            g.push_back(std::move(s));
        }
    }
    return g;
}

// ---------------------------------------------------------------------------
// DataBlock

DataBlock::DataBlock(std::string code, std::vector<Member> members)
    : code_(std::move(code)), members_(std::move(members)) {
    if (members_.size() < 3 || members_.size() > 4)
        throw ValidationError("data block '" + code_ + "' needs 3-4 channels, got " +
                              std::to_string(members_.size()));
    const auto& first = members_.front();
    for (const auto& m : members_) {
        if (m.channel.node_id != first.channel.node_id)
            throw ValidationError("data block '" + code_ + "' spans nodes " +
                                  std::to_string(first.channel.node_id) + " and " +
                                  std::to_string(m.channel.node_id));
        if (!m.series.same_grid(first.series))
            throw ValidationError("data block '" + code_ + "' has misaligned grids");
        if (!m.series.is_complete())
            throw ValidationError("data block '" + code_ + "' contains MISSING samples");
    }
    for (std::size_t i = 0; i < members_.size(); ++i)
        for (std::size_t j = i + 1; j < members_.size(); ++j)
            if (members_[i].channel.parameter == members_[j].channel.parameter)
                throw ValidationError("data block '" + code_ + "' repeats a parameter");
}

std::optional<std::size_t> DataBlock::index_of(ParameterKind kind) const {
    for (std::size_t i = 0; i < members_.size(); ++i)
        if (members_[i].channel.parameter == kind) return i;
    return std::nullopt;
}

DataBlock DataBlock::slice(std::size_t first, std::size_t count) const {
    std::vector<Member> out;
    for (const auto& m : members_) out.push_back({m.channel, m.series.slice(first, count)});
    return DataBlock(code_, std::move(out));
}

}  // namespace eko
