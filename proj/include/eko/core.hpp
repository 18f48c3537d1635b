#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace eko {

// Precondition / input validation failures. The CLI maps these to exit code 1.
struct ValidationError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// Numerical failures during identification or prediction.
struct NumericalError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Unreadable or unwritable files and broken streams (CLI exit code 2).
struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

enum class Category { soil, leaves, ambient };

enum class ParameterKind { Mo, TeSoil, WaCo, LeWe, Hu, TeAmb, DwPo, SoRa };

inline constexpr ParameterKind kAllKinds[] = {
    ParameterKind::Mo, ParameterKind::TeSoil, ParameterKind::WaCo, ParameterKind::LeWe,
    ParameterKind::Hu, ParameterKind::TeAmb,  ParameterKind::DwPo, ParameterKind::SoRa};

struct ParameterInfo {
    ParameterKind kind;
    std::string_view acronym;  // as written in block codes and CSV ("Te" for both temperatures)
    std::string_view id;       // unambiguous identifier ("Te_soil", "Te_amb")
    Category category;
    std::string_view unit;
    double range_min;
    double range_max;
};

const ParameterInfo& info(ParameterKind kind);
std::string_view to_string(Category c);
Category category_from_string(std::string_view s);

// Looks up a kind by acronym within a category. "Te" resolves to soil or
// ambient temperature depending on the category; LeWe belongs to leaves but is
// also accepted under soil, where it is grouped with the soil parameters.
std::optional<ParameterKind> find_kind(Category c, std::string_view acronym);
// Accepts the unambiguous ids ("Te_soil") and the plain acronyms except "Te".
std::optional<ParameterKind> kind_from_id(std::string_view id);

enum class ValueCheck { valid, out_of_range };

ValueCheck validate_value(ParameterKind kind, double v);

/// UTC instant at second resolution.
class Timestamp {
public:
    constexpr Timestamp() = default;
    constexpr explicit Timestamp(std::int64_t seconds) : seconds_(seconds) {}

    constexpr std::int64_t seconds() const { return seconds_; }
    constexpr Timestamp operator+(std::int64_t s) const { return Timestamp{seconds_ + s}; }
    constexpr Timestamp operator-(std::int64_t s) const { return Timestamp{seconds_ - s}; }
    constexpr std::int64_t operator-(Timestamp o) const { return seconds_ - o.seconds_; }
    constexpr auto operator<=>(const Timestamp&) const = default;

    Timestamp floor_to(std::int64_t period) const;

    /// "YYYY-MM-DDTHH:MM:SSZ"
    std::string iso8601() const;
    static std::optional<Timestamp> parse_iso8601(std::string_view text);
    static Timestamp from_civil(int year, unsigned month, unsigned day, int hour = 0,
                                int minute = 0, int second = 0);

private:
    std::int64_t seconds_ = 0;
};

/// Uniformly sampled scalar series; std::nullopt marks a MISSING sample.
class TimeSeries {
public:
    using Sample = std::optional<double>;

    TimeSeries() = default;
    TimeSeries(Timestamp start, std::int64_t step_seconds, std::vector<Sample> values);
    static TimeSeries complete(Timestamp start, std::int64_t step_seconds,
                               std::span<const double> values);

    Timestamp start() const { return start_; }
    std::int64_t step() const { return step_; }
    std::size_t size() const { return values_.size(); }
    bool empty() const { return values_.empty(); }
    Timestamp time_at(std::size_t k) const {
        return start_ + static_cast<std::int64_t>(k) * step_;
    }

    const std::vector<Sample>& samples() const { return values_; }
    const Sample& operator[](std::size_t k) const { return values_[k]; }
    bool is_complete() const;
    std::size_t missing_count() const;

    /// Values of a complete series; throws ValidationError if any sample is MISSING.
    std::vector<double> values() const;

    bool same_grid(const TimeSeries& o) const {
        return start_ == o.start_ && step_ == o.step_ && size() == o.size();
    }
    TimeSeries slice(std::size_t first, std::size_t count) const;

    bool operator==(const TimeSeries&) const = default;

private:
    Timestamp start_{};
    std::int64_t step_ = 3600;
    std::vector<Sample> values_;
};

struct Channel {
    int node_id = 1;
    int sensor_id = 0;
    ParameterKind parameter = ParameterKind::Mo;

    auto operator<=>(const Channel&) const = default;
};

Channel make_channel(int node_id, int sensor_id, ParameterKind kind);

struct Sensor {
    int id = 0;
    std::vector<ParameterKind> parameters;
};

struct NetworkTopology {
    std::map<int, std::vector<Sensor>> nodes;

    /// Sensor on `node_id` measuring `kind`, if any.
    std::optional<int> sensor_for(int node_id, ParameterKind kind) const;
};

std::vector<std::string> validate_topology(const NetworkTopology& t);

/// Six nodes, 21 sensors, 33 parameters; layout used by the synthetic ensemble.
NetworkTopology standard_topology();

enum class BlockCategory { soil, ambient };

struct BlockSelector {
    int node_id = 1;
    BlockCategory category = BlockCategory::soil;
    std::vector<std::string> acronyms;

    bool operator==(const BlockSelector&) const = default;
};

std::string_view to_string(BlockCategory c);
std::string block_code(int node_id, BlockCategory category, std::span<const std::string> acronyms);
std::string block_code(const BlockSelector& sel);
BlockSelector parse_block_code(std::string_view code);
/// Parameter kinds selected by a (validated) selector, in acronym order.
std::vector<ParameterKind> selector_kinds(const BlockSelector& sel);

/// The 30 block groupings of the synthetic ensemble.
std::vector<BlockSelector> standard_grouping();

/// 3-4 complete, grid-aligned channels of one node.
class DataBlock {
public:
    struct Member {
        Channel channel;
        TimeSeries series;

        bool operator==(const Member&) const = default;
    };

    DataBlock(std::string code, std::vector<Member> members);

    const std::string& code() const { return code_; }
    const std::vector<Member>& members() const { return members_; }
    std::size_t size() const { return members_.size(); }
    const TimeSeries& series(std::size_t i) const { return members_[i].series; }
    const Channel& channel(std::size_t i) const { return members_[i].channel; }
    std::optional<std::size_t> index_of(ParameterKind kind) const;
    Timestamp start() const { return members_.front().series.start(); }
    std::int64_t step() const { return members_.front().series.step(); }
    std::size_t length() const { return members_.front().series.size(); }

    /// Same channels restricted to samples [first, first + count).
    DataBlock slice(std::size_t first, std::size_t count) const;

    bool operator==(const DataBlock&) const = default;

private:
    std::string code_;
    std::vector<Member> members_;
};

/// Residual r with part + r == x bit-for-bit. The rounding error of the sum is
/// fed back into r; when no such r exists for this part, part moves by a few
/// ulps to x - r and the search repeats. Only when part dwarfs x (|part| > 2|x|)
/// can this fail, in which case part becomes x and r is 0.
inline double exact_residual(double x, double& part) {
    for (int attempt = 0; attempt < 4; ++attempt) {
        double r = x - part;
        for (int i = 0; i < 4; ++i) {
            const double s = part + r;
            if (s == x) return r;
            const double next = r + (x - s);
            r = next != r ? next : std::nextafter(r, s < x ? HUGE_VAL : -HUGE_VAL);
        }
        if (part + r == x) return r;
        part = x - r;
    }
    part = x;
    return 0.0;
}

}  // namespace eko
