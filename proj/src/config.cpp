#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include "eko/parallel.hpp"
#include "eko/pipeline.hpp"

namespace eko::pipeline {

namespace {

std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split_list(std::string_view s, std::string_view seps = ", \t") {
    std::vector<std::string> out;
    std::size_t i = 0;
    while (i < s.size()) {
        const auto b = s.find_first_not_of(seps, i);
        if (b == std::string_view::npos) break;
        auto e = s.find_first_of(seps, b);
        if (e == std::string_view::npos) e = s.size();
        out.emplace_back(s.substr(b, e - b));
        i = e;
    }
    return out;
}

std::string unquote(std::string v) {
    if (v.size() >= 2 && (v.front() == '"' || v.front() == '\'') && v.back() == v.front())
        return v.substr(1, v.size() - 2);
    return v;
}

struct Parser {
    std::string key;
    std::string value;

    [[noreturn]] void fail(const std::string& what) const {
        throw ValidationError("config key '" + key + "': " + what + " (got '" + value + "')");
    }

    template <class T>
    T integer() const {
        T v{};
        const auto* end = value.data() + value.size();
        const auto [p, ec] = std::from_chars(value.data(), end, v);
        if (ec != std::errc{} || p != end) fail("expected an integer");
        return v;
    }
    std::size_t count() const {
        if (!value.empty() && value.front() == '-') fail("expected a non-negative integer");
        return integer<std::size_t>();
    }
    double real() const {
        double v = 0.0;
        const auto* end = value.data() + value.size();
        const auto [p, ec] = std::from_chars(value.data(), end, v);
        if (ec != std::errc{} || p != end || !std::isfinite(v)) fail("expected a number");
        return v;
    }
    bool boolean() const {
        if (value == "true" || value == "1" || value == "yes" || value == "on") return true;
        if (value == "false" || value == "0" || value == "no" || value == "off") return false;
        fail("expected true or false");
    }
    // "lo..hi" or a single integer.
    ident::Range range() const {
        const auto dots = value.find("..");
        Parser lo{key, value.substr(0, dots)};
        if (dots == std::string::npos) {
            const int v = lo.integer<int>();
            return {v, v};
        }
        Parser hi{key, value.substr(dots + 2)};
        const ident::Range r{lo.integer<int>(), hi.integer<int>()};
        if (r.lo > r.hi) fail("range lower bound exceeds upper bound");
        return r;
    }
};

using Setter = std::function<void(Settings&, const Parser&)>;

const std::vector<std::pair<std::string_view, Setter>>& setters() {
    static const std::vector<std::pair<std::string_view, Setter>> table = {
        {"seed", [](Settings& s, const Parser& p) { s.seed = p.integer<std::uint64_t>(); }},
        {"workers", [](Settings& s, const Parser& p) { s.workers = p.count(); }},

        {"scenario.days", [](Settings& s, const Parser& p) { s.scenario.days = p.real(); }},
        {"scenario.coupling_gain", [](Settings& s, const Parser& p) { s.scenario.coupling_gain = p.real(); }},
        {"scenario.coupling_lag_hours",
         [](Settings& s, const Parser& p) { s.scenario.coupling_lag_hours = p.real(); }},
        {"scenario.coupled_nodes",
         [](Settings& s, const Parser& p) {
             s.scenario.coupled_nodes.clear();
             for (const auto& v : split_list(p.value))
                 s.scenario.coupled_nodes.push_back(Parser{p.key, v}.integer<int>());
         }},
        {"scenario.dropout", [](Settings& s, const Parser& p) { s.scenario.dropout = p.real(); }},
        {"scenario.jitter_seconds",
         [](Settings& s, const Parser& p) { s.scenario.jitter_seconds = p.integer<std::int64_t>(); }},
        {"scenario.outages", [](Settings& s, const Parser& p) { s.scenario.outages = p.boolean(); }},

        {"grouping",
         [](Settings& s, const Parser& p) {
             s.grouping.clear();
             for (const auto& code : split_list(p.value)) {
                 if (code == "standard") {
                     const auto std_groups = standard_grouping();
                     s.grouping.insert(s.grouping.end(), std_groups.begin(), std_groups.end());
                 } else {
                     s.grouping.push_back(parse_block_code(code));
                 }
             }
         }},

        {"preprocess.g_iso", [](Settings& s, const Parser& p) { s.preprocess.g_iso = p.count(); }},
        {"preprocess.g_max", [](Settings& s, const Parser& p) { s.preprocess.g_max = p.count(); }},
        {"preprocess.ar_max_order", [](Settings& s, const Parser& p) { s.preprocess.ar_max_order = p.count(); }},
        {"preprocess.filter_order", [](Settings& s, const Parser& p) { s.preprocess.filter.order = p.integer<int>(); }},
        {"preprocess.filter_atten_db", [](Settings& s, const Parser& p) { s.preprocess.filter.atten_db = p.real(); }},
        {"preprocess.filter_edge", [](Settings& s, const Parser& p) { s.preprocess.filter.edge = p.real(); }},
        {"preprocess.downsample", [](Settings& s, const Parser& p) { s.preprocess.downsample_factor = p.count(); }},
        {"preprocess.despike", [](Settings& s, const Parser& p) { s.preprocess.despike_enabled = p.boolean(); }},
        {"preprocess.despike_window", [](Settings& s, const Parser& p) { s.preprocess.despike_window = p.count(); }},
        {"preprocess.despike_k", [](Settings& s, const Parser& p) { s.preprocess.despike_k = p.real(); }},

        {"predict.arma_na", [](Settings& s, const Parser& p) { s.compare.predictor.arma_na = p.range(); }},
        {"predict.arma_nc", [](Settings& s, const Parser& p) { s.compare.predictor.arma_nc = p.range(); }},
        {"predict.level", [](Settings& s, const Parser& p) { s.compare.predictor.level = p.real(); }},
        {"predict.max_horizon", [](Settings& s, const Parser& p) { s.compare.predictor.max_horizon = p.count(); }},
        {"predict.min_samples", [](Settings& s, const Parser& p) { s.compare.predictor.min_samples = p.count(); }},
        {"predict.validation_fraction",
         [](Settings& s, const Parser& p) { s.compare.predictor.validation_fraction = p.real(); }},
        {"predict.validation_horizon",
         [](Settings& s, const Parser& p) { s.compare.predictor.validation_horizon = p.count(); }},
        {"parmax.na", [](Settings& s, const Parser& p) { s.compare.predictor.armax_na = p.range(); }},
        {"parmax.nc", [](Settings& s, const Parser& p) { s.compare.predictor.armax_nc = p.range(); }},
        {"parmax.nb", [](Settings& s, const Parser& p) { s.compare.predictor.armax_nb = p.range(); }},
        {"parmax.nk", [](Settings& s, const Parser& p) { s.compare.predictor.armax_nk = p.range(); }},
        {"parmax.singletons_only",
         [](Settings& s, const Parser& p) { s.compare.predictor.parmax_singletons_only = p.boolean(); }},
        {"parmax.exogenous",
         [](Settings& s, const Parser& p) {
             if (p.value == "cascade") s.compare.predictor.exogenous = predict::ExogenousPolicy::cascade;
             else if (p.value == "hold_last") s.compare.predictor.exogenous = predict::ExogenousPolicy::hold_last;
             else p.fail("expected cascade or hold_last");
         }},
        {"karma.n", [](Settings& s, const Parser& p) { s.compare.predictor.karma_n = p.range(); }},
        {"karma.force_n", [](Settings& s, const Parser& p) { s.compare.predictor.karma_force_n = p.integer<int>(); }},
        {"forwaver.taps", [](Settings& s, const Parser& p) { s.compare.predictor.wavelet_taps = p.integer<int>(); }},
        {"forwaver.levels",
         [](Settings& s, const Parser& p) { s.compare.predictor.wavelet_levels = p.integer<int>(); }},

        {"compare.horizon", [](Settings& s, const Parser& p) { s.compare.horizon = p.count(); }},
        {"compare.predictors",
         [](Settings& s, const Parser& p) {
             s.compare.predictors.clear();
             for (const auto& name : split_list(p.value)) {
                 s.compare.predictors.push_back(predict::predictor_from_string(name));
             }
         }},
        {"compare.timing", [](Settings& s, const Parser& p) { s.compare.timing = p.boolean(); }},
    };
    return table;
}

// topology.node.<id> = <sensor>:<param>,<param> <sensor>:<param> ...
void set_topology_node(Settings& s, std::map<int, std::vector<Sensor>>& nodes, const Parser& p) {
    const Parser id{p.key, p.key.substr(std::string_view("topology.node.").size())};
    const int node = id.integer<int>();
    if (nodes.count(node)) p.fail("node listed twice");
    std::vector<Sensor> sensors;
    for (const auto& item : split_list(p.value, " \t")) {
        const auto colon = item.find(':');
        if (colon == std::string::npos) Parser{p.key, item}.fail("expected <sensor>:<param>[,<param>]");
        Sensor sensor;
        sensor.id = Parser{p.key, item.substr(0, colon)}.integer<int>();
        for (const auto& param : split_list(std::string_view(item).substr(colon + 1), ",")) {
            const auto kind = kind_from_id(param);
            if (!kind) Parser{p.key, param}.fail("unknown parameter id");
            sensor.parameters.push_back(*kind);
        }
        sensors.push_back(std::move(sensor));
    }
    nodes[node] = std::move(sensors);
    s.topology.nodes = nodes;
}

}  // namespace

std::span<const std::string_view> settings_keys() {
    static const std::vector<std::string_view> keys = [] {
        std::vector<std::string_view> k;
        for (const auto& [name, fn] : setters()) k.push_back(name);
        k.push_back("topology.node.<id>");
        return k;
    }();
    return keys;
}

std::size_t Settings::worker_count() const { return workers.value_or(default_workers()); }

void Settings::validate() const {
    if (workers && *workers < 1) throw ValidationError("config: workers must be >= 1");
    if (!(scenario.days > 0.0)) throw ValidationError("config: scenario.days must be > 0");
    if (!(scenario.dropout >= 0.0 && scenario.dropout < 1.0))
        throw ValidationError("config: scenario.dropout must lie in [0, 1)");
    if (scenario.jitter_seconds < 0) throw ValidationError("config: scenario.jitter_seconds must be >= 0");
    if (!(scenario.coupling_lag_hours >= 0.0))
        throw ValidationError("config: scenario.coupling_lag_hours must be >= 0");
    if (const auto problems = validate_topology(topology); !problems.empty())
        throw ValidationError("config: topology: " + problems.front());
    for (const int node : scenario.coupled_nodes)
        if (!topology.sensor_for(node, ParameterKind::TeSoil) || !topology.sensor_for(node, ParameterKind::Mo))
            throw ValidationError("config: coupled node " + std::to_string(node) + " lacks soil Te or Mo");
    if (grouping.empty()) throw ValidationError("config: empty grouping");
    for (std::size_t i = 0; i < grouping.size(); ++i) {
        const auto code = block_code(grouping[i]);
        for (std::size_t j = i + 1; j < grouping.size(); ++j)
            if (block_code(grouping[j]) == code) throw ValidationError("config: grouping lists " + code + " twice");
        for (const auto kind : selector_kinds(grouping[i]))
            if (!topology.sensor_for(grouping[i].node_id, kind))
                throw ValidationError("config: block " + code + " needs " + std::string(info(kind).id) +
                                      ", absent on node " + std::to_string(grouping[i].node_id));
    }
    preprocess.validate();
    compare.validate();
}

Settings parse_settings(std::string_view text) {
    Settings s;
    std::map<std::string, std::size_t> seen;
    std::map<int, std::vector<Sensor>> nodes;
    std::istringstream in{std::string(text)};
    std::string line;
    std::size_t number = 0;
    while (std::getline(in, line)) {
        ++number;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        const auto body = trim(line);
        if (body.empty()) continue;
        if (body.front() == '[')
            throw ValidationError("config line " + std::to_string(number) + ": sections are not supported; use dotted keys");
        const auto eq = body.find('=');
        if (eq == std::string::npos)
            throw ValidationError("config line " + std::to_string(number) + ": expected key = value");
        const Parser p{trim(std::string_view(body).substr(0, eq)), unquote(trim(std::string_view(body).substr(eq + 1)))};
        if (p.key.empty()) throw ValidationError("config line " + std::to_string(number) + ": empty key");
        if (!seen.emplace(p.key, number).second)
            throw ValidationError("config line " + std::to_string(number) + ": key '" + p.key + "' repeats line " +
                                  std::to_string(seen[p.key]));
        if (p.key.rfind("topology.node.", 0) == 0) {
            set_topology_node(s, nodes, p);
            continue;
        }
        const auto& table = setters();
        const auto it = std::find_if(table.begin(), table.end(), [&](const auto& e) { return e.first == p.key; });
        if (it == table.end())
            throw ValidationError("config line " + std::to_string(number) + ": unknown key '" + p.key + "'");
        it->second(s, p);
    }
    s.validate();
    return s;
}

Settings load_settings(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot read config file " + path.string());
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_settings(buf.str());
}

}  // namespace eko::pipeline
