#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "eko/ingest.hpp"

namespace eko::ingest {

namespace {

std::int64_t native_step(const ScenarioSpec& spec) { return 3600 / spec.samples_per_hour; }

std::size_t sample_count(const ScenarioSpec& spec) {
    return static_cast<std::size_t>(std::floor(spec.duration_hours * spec.samples_per_hour + 1e-9));
}

std::size_t lag_samples(const ScenarioSpec& spec, double hours) {
    return static_cast<std::size_t>(std::llround(hours * spec.samples_per_hour));
}

std::ptrdiff_t channel_index(const ScenarioSpec& spec, const Channel& ch) {
    for (std::size_t i = 0; i < spec.channels.size(); ++i)
        if (spec.channels[i].channel == ch) return static_cast<std::ptrdiff_t>(i);
    return -1;
}

std::mt19937_64 stream_for(std::uint64_t seed, std::size_t channel, std::uint32_t purpose) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(channel), purpose};
    return std::mt19937_64(seq);
}

// Deviation from baseline for every channel on [-pre, n), stored with offset `pre`.
std::vector<std::vector<double>> deviations(const ScenarioSpec& spec, std::uint64_t seed,
                                            std::size_t pre, bool include_noise) {
    const std::size_t n = sample_count(spec);
    const double rate = spec.samples_per_hour;
    const double start_hour = std::fmod(static_cast<double>(spec.start.seconds()) / 3600.0, 24.0);
    std::vector<std::vector<double>> dev(spec.channels.size(), std::vector<double>(n + pre));
    for (std::size_t c = 0; c < spec.channels.size(); ++c) {
        const auto& rc = spec.channels[c];
        auto rng = stream_for(seed, c, 1);
        std::normal_distribution<double> g(0.0, 1.0);
        const double phi = rc.ar_coeff > 0.0 ? std::pow(rc.ar_coeff, 1.0 / rate) : 0.0;
        const double innov = rc.noise_sd * std::sqrt(1.0 - phi * phi);
        double noise = rc.noise_sd * g(rng);
        for (std::size_t i = 0; i < n + pre; ++i) {
            const double t_h = (static_cast<double>(i) - static_cast<double>(pre)) / rate;
            if (i > 0) noise = phi * noise + innov * g(rng);
            const double hour = start_hour + t_h - rc.diurnal_peak_hour;
            dev[c][i] = rc.diurnal_amplitude * std::cos(2.0 * std::numbers::pi * hour / 24.0) +
                        rc.drift_per_day * t_h / 24.0 + (include_noise ? noise : 0.0);
        }
    }
    return dev;
}

std::vector<std::vector<double>> compose(const ScenarioSpec& spec, std::uint64_t seed, bool include_noise) {
    std::size_t pre = 0;
    for (const auto& cp : spec.couplings) pre = std::max(pre, lag_samples(spec, cp.lag_hours));
    const auto dev = deviations(spec, seed, pre, include_noise);
    const std::size_t n = sample_count(spec);
    std::vector<std::vector<double>> out(spec.channels.size(), std::vector<double>(n));
    for (std::size_t c = 0; c < spec.channels.size(); ++c)
        for (std::size_t k = 0; k < n; ++k) out[c][k] = spec.channels[c].baseline + dev[c][k + pre];
    for (const auto& cp : spec.couplings) {
        const auto src = static_cast<std::size_t>(channel_index(spec, cp.source));
        const auto dst = static_cast<std::size_t>(channel_index(spec, cp.target));
        const std::size_t lag = lag_samples(spec, cp.lag_hours);
        for (std::size_t k = 0; k < n; ++k) out[dst][k] += cp.gain * dev[src][k + pre - lag];
    }
    return out;
}

}  // namespace

void ScenarioSpec::validate() const {
    if (!(duration_hours > 0.0)) throw ValidationError("scenario: duration must be positive");
    if (samples_per_hour < 1 || 3600 % samples_per_hour != 0)
        throw ValidationError("scenario: samples per hour must be >= 1 and divide 3600");
    if (!(dropout >= 0.0 && dropout < 1.0)) throw ValidationError("scenario: dropout must lie in [0, 1)");
    if (jitter_seconds < 0 || 2 * jitter_seconds >= native_step(*this))
        throw ValidationError("scenario: jitter must be below half the sampling step");
    if (channels.empty()) throw ValidationError("scenario: no channels");
    for (std::size_t i = 0; i < channels.size(); ++i) {
        const auto& c = channels[i];
        make_channel(c.channel.node_id, c.channel.sensor_id, c.channel.parameter);
        if (!(c.ar_coeff >= 0.0 && c.ar_coeff < 1.0))
            throw ValidationError("scenario: AR coefficient must lie in [0, 1)");
        if (c.noise_sd < 0.0) throw ValidationError("scenario: noise sd must be >= 0");
        for (std::size_t j = 0; j < i; ++j)
            if (channels[j].channel == c.channel) throw ValidationError("scenario: duplicate channel");
    }
    for (const auto& cp : couplings) {
        if (channel_index(*this, cp.source) < 0 || channel_index(*this, cp.target) < 0)
            throw ValidationError("scenario: coupling references an unknown channel");
        if (cp.source == cp.target) throw ValidationError("scenario: coupling onto itself");
        if (cp.lag_hours < 0.0) throw ValidationError("scenario: coupling lag must be >= 0");
    }
    for (const auto& o : outages)
        if (o.hours < 0.0) throw ValidationError("scenario: outage length must be >= 0");
}

ChannelRecipe default_recipe(const Channel& ch) {
    ChannelRecipe r;
    r.channel = ch;
    r.category = info(ch.parameter).category;
    const double node = ch.node_id;
    switch (ch.parameter) {
        case ParameterKind::Mo:
            r.baseline = 52.0 + 6.0 * node; r.diurnal_amplitude = 4.0; r.diurnal_peak_hour = 16.0;
            r.drift_per_day = 0.3; r.ar_coeff = 0.95; r.noise_sd = 3.0;
            break;
        case ParameterKind::TeSoil:
            r.baseline = 17.0 + 0.5 * node; r.diurnal_amplitude = 3.0; r.diurnal_peak_hour = 17.0;
            r.drift_per_day = 0.05; r.ar_coeff = 0.95; r.noise_sd = 1.0;
            break;
        case ParameterKind::WaCo:
            r.baseline = 30.0 + node; r.diurnal_amplitude = 1.5; r.diurnal_peak_hour = 6.0;
            r.drift_per_day = -0.05; r.ar_coeff = 0.95; r.noise_sd = 1.2;
            break;
        case ParameterKind::LeWe:
            r.baseline = 250.0; r.diurnal_amplitude = 150.0; r.diurnal_peak_hour = 5.0;
            r.ar_coeff = 0.8; r.noise_sd = 40.0;
            break;
        case ParameterKind::Hu:
            r.baseline = 62.0 + node; r.diurnal_amplitude = 15.0; r.diurnal_peak_hour = 5.0;
            r.ar_coeff = 0.9; r.noise_sd = 4.0;
            break;
        case ParameterKind::TeAmb:
            r.baseline = 20.0 + 0.5 * node; r.diurnal_amplitude = 6.0; r.diurnal_peak_hour = 15.0;
            r.drift_per_day = 0.04; r.ar_coeff = 0.9; r.noise_sd = 1.2;
            break;
        case ParameterKind::DwPo:
            r.baseline = 12.0; r.diurnal_amplitude = 2.0; r.diurnal_peak_hour = 15.0;
            r.ar_coeff = 0.9; r.noise_sd = 1.0;
            break;
        case ParameterKind::SoRa:
            r.baseline = 250.0; r.diurnal_amplitude = 320.0; r.diurnal_peak_hour = 13.0;
            r.ar_coeff = 0.7; r.noise_sd = 40.0;
            break;
    }
    return r;
}

ScenarioSpec standard_scenario(const StandardScenarioOptions& opt) {
    ScenarioSpec spec;
    spec.duration_hours = 24.0 * opt.days;
    spec.dropout = opt.dropout;
    spec.jitter_seconds = opt.jitter_seconds;
    const auto topo = standard_topology();
    for (const auto& [node, sensors] : topo.nodes)
        for (const auto& s : sensors)
            for (const auto kind : s.parameters) spec.channels.push_back(default_recipe(Channel{node, s.id, kind}));
    for (const int node : opt.coupled_nodes) {
        const auto te = topo.sensor_for(node, ParameterKind::TeSoil);
        const auto mo = topo.sensor_for(node, ParameterKind::Mo);
        if (!te || !mo) throw ValidationError("standard scenario: node " + std::to_string(node) + " lacks Te/Mo");
        spec.couplings.push_back({Channel{node, *te, ParameterKind::TeSoil}, Channel{node, *mo, ParameterKind::Mo},
                                  opt.coupling_gain, opt.coupling_lag_hours});
    }
    if (opt.outages && opt.days >= 30.0) {
        spec.outages.push_back({2, 24.0 * 20.0 + 7.0, 10.0});  // repaired by AR interpolation
        spec.outages.push_back({4, 24.0 * 12.0 + 3.0, 2.0});   // repaired linearly
    }
    return spec;
}

std::vector<std::vector<double>> synthetic_components(const ScenarioSpec& spec, std::uint64_t seed,
                                                      bool include_noise) {
    spec.validate();
    return compose(spec, seed, include_noise);
}

std::vector<RawRecord> generate_synthetic(const ScenarioSpec& spec, std::uint64_t seed) {
    spec.validate();
    const auto values = compose(spec, seed, true);
    const std::size_t n = sample_count(spec);
    const std::int64_t step = native_step(spec);
    std::vector<std::mt19937_64> rngs;
    for (std::size_t c = 0; c < spec.channels.size(); ++c) rngs.push_back(stream_for(seed, c, 2));
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::uniform_int_distribution<std::int64_t> jitter(-spec.jitter_seconds, spec.jitter_seconds);

    std::vector<RawRecord> out;
    out.reserve(n * spec.channels.size());
    for (std::size_t k = 0; k < n; ++k) {
        const double t_h = static_cast<double>(k) / spec.samples_per_hour;
        for (std::size_t c = 0; c < spec.channels.size(); ++c) {
            const auto& rc = spec.channels[c];
            auto& rng = rngs[c];
            // Draw both variates unconditionally so every channel's stream stays aligned.
            const bool dropped = unit(rng) < spec.dropout;
            const std::int64_t dt = spec.jitter_seconds > 0 ? jitter(rng) : 0;
            if (dropped) continue;
            const bool in_outage = std::any_of(spec.outages.begin(), spec.outages.end(), [&](const Outage& o) {
                return o.node_id == rc.channel.node_id && t_h >= o.start_hour && t_h < o.start_hour + o.hours;
            });
            if (in_outage) continue;
            const auto& p = info(rc.channel.parameter);
            RawRecord r;
            r.timestamp = spec.start + static_cast<std::int64_t>(k) * step + dt;
            r.node_id = rc.channel.node_id;
            r.sensor_id = rc.channel.sensor_id;
            r.category = rc.category;
            r.parameter = rc.channel.parameter;
            r.value = std::clamp(values[c][k], p.range_min, p.range_max);
            out.push_back(r);
        }
    }
    return out;
}

}  // namespace eko::ingest
