#pragma once

#include <complex>
#include <cstddef>
#include <map>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "eko/core.hpp"

namespace eko::preprocess {

struct TimedValue {
    Timestamp time;
    double value = 0.0;
};

/// Hour bins from floor(earliest) through latest; each bin is the mean of its samples.
TimeSeries synchronize_hourly(std::span<const TimedValue> samples);
/// Same binning on a caller-supplied grid of `hours` bins; samples outside are ignored.
TimeSeries synchronize_hourly(std::span<const TimedValue> samples, Timestamp grid_start,
                              std::size_t hours);

enum class GapClass { isolated, extended, unrecoverable };

struct GapDescriptor {
    std::size_t start = 0;
    std::size_t length = 0;
    GapClass cls = GapClass::isolated;

    bool operator==(const GapDescriptor&) const = default;
};

std::string_view to_string(GapClass c);

std::vector<GapDescriptor> classify_gaps(const TimeSeries& series, std::size_t g_iso,
                                         std::size_t g_max);

TimeSeries interpolate_linear(const TimeSeries& series, const GapDescriptor& gap);

/// Raised by interpolate_ar when either anchor segment is too short; callers
/// treat the gap as unrecoverable.
struct InsufficientAnchors : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Two-sided AR fill: forward prediction from the pre-gap segment cross-faded
/// with a backward prediction from the time-reversed post-gap segment.
TimeSeries interpolate_ar(const TimeSeries& series, const GapDescriptor& gap,
                          std::size_t max_order);

TimeSeries downsample_mean(const TimeSeries& series, std::size_t factor);

struct FilterSpec {
    int order = 4;
    double atten_db = 40.0;
    double edge = 0.3;  // stopband edge as a fraction of Nyquist
};

struct FilterCoefficients {
    std::vector<double> b;  // numerator
    std::vector<double> a;  // denominator, a[0] = 1
};

void validate(const FilterSpec& spec);

/// Low-pass Chebyshev type-II design via bilinear transform, DC gain 1.
FilterCoefficients design_cheby2(const FilterSpec& spec);

/// H(e^{j pi f}) for f in [0, 1] (fraction of Nyquist).
std::complex<double> frequency_response(const FilterCoefficients& f, double normalized_freq);

std::vector<double> lfilter(const FilterCoefficients& f, std::span<const double> x,
                            std::span<const double> initial_state = {});
/// Steady-state initial conditions for a unit step input.
std::vector<double> lfilter_zi(const FilterCoefficients& f);

std::vector<double> filtfilt(const FilterCoefficients& f, std::span<const double> x);
TimeSeries filtfilt(const FilterCoefficients& f, const TimeSeries& series);

struct Decomposition {
    TimeSeries deterministic;
    TimeSeries stochastic;
};

Decomposition split_trend(const TimeSeries& series, const FilterSpec& spec);

struct DespikeResult {
    TimeSeries series;
    std::vector<std::size_t> replaced;
};

/// Hampel filter: replace a sample by its window median when it deviates by
/// more than k * 1.4826 * MAD. Windows are shifted inward at the edges; runs
/// of MISSING split the series into independently processed segments.
DespikeResult despike(const TimeSeries& series, std::size_t window, double k);

struct PipelineConfig {
    std::size_t g_iso = 2;
    std::size_t g_max = 24;
    std::size_t ar_max_order = 8;
    FilterSpec filter{};
    std::size_t downsample_factor = 3;
    std::size_t despike_window = 7;
    double despike_k = 4.0;
    bool despike_enabled = true;

    void validate() const;
};

struct ChannelRepairReport {
    std::size_t isolated = 0;
    std::size_t extended = 0;
    std::size_t unrecoverable = 0;
    std::size_t ar_fallbacks = 0;  // extended gaps demoted to unrecoverable
    std::vector<std::size_t> spikes;
};

/// despike -> fill isolated (linear) and extended (AR) gaps on an hourly series.
/// Unrecoverable gaps remain MISSING.
TimeSeries repair_hourly(const TimeSeries& hourly, const PipelineConfig& cfg,
                         ChannelRepairReport& report);

struct BlockAssembly {
    DataBlock block;
    std::map<std::string, ChannelRepairReport> channel_reports;  // keyed by parameter id
    std::size_t hourly_length = 0;
    std::size_t window_first = 0;  // first hour of the retained complete window
    std::size_t window_length = 0;
};

struct ChannelSamples {
    Channel channel;
    std::vector<TimedValue> samples;
};

/// Synchronises every channel on a common hourly grid, repairs gaps, keeps the
/// longest window complete in all channels and downsamples it.
BlockAssembly assemble_block(const std::string& code, std::span<const ChannelSamples> channels,
                             const PipelineConfig& cfg);

}  // namespace eko::preprocess
