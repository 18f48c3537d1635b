#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "eko/core.hpp"

namespace eko::ingest {

/// One gateway export line. Values are not range-checked at construction.
struct RawRecord {
    Timestamp timestamp;
    int node_id = 1;
    int sensor_id = 0;
    Category category = Category::soil;
    ParameterKind parameter = ParameterKind::Mo;
    double value = 0.0;

    bool operator==(const RawRecord&) const = default;
};

inline constexpr std::string_view kCsvHeader = "timestamp,node_id,sensor_id,category,parameter,value";
inline constexpr std::string_view kEndMarker = "#END";

/// CSV line without trailing newline; values use the shortest round-trip form.
std::string format_record(const RawRecord& r);

struct LineError {
    std::string reason;
};

/// Parses one data line (no header, no end marker).
std::optional<RawRecord> parse_record(std::string_view line, LineError* error = nullptr);

struct RejectedLine {
    std::size_t line_number = 0;  // 1-based
    std::string text;
    std::string reason;
};

struct ParseResult {
    std::vector<RawRecord> records;
    std::vector<RejectedLine> rejected;
    bool saw_end_marker = false;
};

/// Reads an export stream: optional header, data lines, optional "#END".
/// Throws IoError when the stream fails for reasons other than end of file.
ParseResult parse_export(std::istream& in);
ParseResult parse_export_text(std::string_view text);
ParseResult read_export_file(const std::string& path);

void write_export(std::ostream& out, std::span<const RawRecord> records, bool end_marker = false);
std::string serialize(std::span<const RawRecord> records, bool end_marker = false);
void write_export_file(const std::string& path, std::span<const RawRecord> records);

/// Records with values outside the catalogue range.
std::vector<std::size_t> out_of_range(std::span<const RawRecord> records);

// ---------------------------------------------------------------------------
// Alerts

enum class Bound { low, high };

struct AlertRule {
    std::string rule_id;
    int node_id = 1;
    ParameterKind parameter = ParameterKind::Mo;
    std::optional<double> low;
    std::optional<double> high;

    void validate() const;
};

struct AlertEvent {
    std::string rule_id;
    Timestamp timestamp;
    double observed = 0.0;
    Bound violated = Bound::low;

    bool operator==(const AlertEvent&) const = default;
};

/// One event per strict violation, ordered by timestamp, then record order, then rule order.
std::vector<AlertEvent> evaluate_alerts(std::span<const AlertRule> rules,
                                        std::span<const RawRecord> records);

// ---------------------------------------------------------------------------
// Grouping

struct GroupedBlocks {
    std::vector<std::string> codes;                        // grouping order
    std::map<std::string, std::vector<RawRecord>> blocks;  // keyed by block code
    std::vector<RawRecord> orphans;                        // matched no block
};

/// Routes each record to every block whose selector matches it. Throws
/// ValidationError when a selector asks for a parameter the node lacks.
GroupedBlocks group_blocks(std::span<const RawRecord> records, const NetworkTopology& topology,
                           std::span<const BlockSelector> grouping);

/// True when a record belongs to the block described by `sel`.
bool selector_matches(const BlockSelector& sel, const RawRecord& r);

// ---------------------------------------------------------------------------
// Synthetic gateway

struct ChannelRecipe {
    Channel channel;
    Category category = Category::soil;  // as written in the export
    double baseline = 0.0;
    double diurnal_amplitude = 0.0;
    double diurnal_peak_hour = 14.0;  // hour of day at which the sinusoid peaks
    double drift_per_day = 0.0;
    double ar_coeff = 0.0;  // AR(1) coefficient per hour
    double noise_sd = 0.0;  // stationary standard deviation of the AR(1) noise
};

/// target += gain * (source deviation from its baseline) delayed by lag_hours.
struct Coupling {
    Channel source;
    Channel target;
    double gain = 0.0;
    double lag_hours = 0.0;
};

/// Every record of a node is withheld inside [start, start + hours).
struct Outage {
    int node_id = 1;
    double start_hour = 0.0;
    double hours = 0.0;
};

struct ScenarioSpec {
    Timestamp start = Timestamp::from_civil(2010, 6, 1);
    double duration_hours = 24.0 * 60.0;
    int samples_per_hour = 4;
    double dropout = 0.0;
    std::int64_t jitter_seconds = 0;
    std::vector<ChannelRecipe> channels;
    std::vector<Coupling> couplings;
    std::vector<Outage> outages;

    void validate() const;
};

/// Default recipe for one parameter on one node.
ChannelRecipe default_recipe(const Channel& ch);

struct StandardScenarioOptions {
    double days = 60.0;
    double coupling_gain = -10.0;  // soil Te -> Mo on the strongly coupled nodes
    double coupling_lag_hours = 12.0;
    std::vector<int> coupled_nodes = {5, 6};
    double dropout = 0.02;
    std::int64_t jitter_seconds = 120;
    bool outages = true;
};

/// Every parameter of the standard topology plus the soil Te -> Mo couplings.
ScenarioSpec standard_scenario(const StandardScenarioOptions& opt = {});

/// Deterministic for a fixed seed; records are emitted per native sample in
/// channel order, values clamped to the catalogue range.
std::vector<RawRecord> generate_synthetic(const ScenarioSpec& spec, std::uint64_t seed);

/// Per-channel values on the native grid before clamping, dropout and jitter;
/// `include_noise = false` gives the deterministic part with couplings applied.
std::vector<std::vector<double>> synthetic_components(const ScenarioSpec& spec, std::uint64_t seed,
                                                      bool include_noise);

// ---------------------------------------------------------------------------
// Stream transport

struct StreamOptions {
    std::size_t max_clients = 1;  // server stops accepting after this many sessions
    std::optional<std::size_t> close_after;  // drop the connection after n records, no end marker
};

/// Line-oriented TCP server. Every accepted client receives the full record
/// sequence followed by "#END". Runs on a background thread.
class StreamServer {
public:
    StreamServer(std::vector<RawRecord> records, const std::string& host, std::uint16_t port,
                 StreamOptions options = {});
    ~StreamServer();
    StreamServer(const StreamServer&) = delete;
    StreamServer& operator=(const StreamServer&) = delete;

    std::uint16_t port() const;
    /// Blocks until max_clients sessions completed.
    void wait();
    void stop();

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

struct StreamResult {
    std::vector<RawRecord> records;
    std::size_t malformed = 0;
    bool truncated = false;  // connection ended without the end marker
};

StreamResult consume_stream(const std::string& host, std::uint16_t port, int timeout_ms = 10000);

}  // namespace eko::ingest
