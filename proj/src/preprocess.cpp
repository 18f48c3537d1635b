#include "eko/preprocess.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include <Eigen/Dense>

#include "eko/ident.hpp"

namespace eko::preprocess {

namespace {

constexpr std::int64_t kHour = 3600;

double median_of(std::vector<double> v) {
    const auto mid = v.size() / 2;
    std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
    const double hi = v[mid];
    if (v.size() % 2 == 1) return hi;
    const double lo = *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid));
    return 0.5 * (lo + hi);
}

// Length of the run of present samples ending at `last` (inclusive) going left.
std::size_t present_run_left(const TimeSeries& s, std::size_t end_exclusive) {
    std::size_t n = 0;
    while (n < end_exclusive && s[end_exclusive - 1 - n]) ++n;
    return n;
}

std::size_t present_run_right(const TimeSeries& s, std::size_t begin) {
    std::size_t n = 0;
    while (begin + n < s.size() && s[begin + n]) ++n;
    return n;
}

std::vector<double> ar_extrapolate(std::span<const double> history, std::size_t max_order,
                                   std::size_t steps) {
    const auto model = ident::fit_ar_fpe(history, max_order, ident::ArEstimator::burg);
    std::vector<double> z(history.size() + steps);
    for (std::size_t t = 0; t < history.size(); ++t) z[t] = history[t] - model.mean;
    for (std::size_t t = history.size(); t < z.size(); ++t) {
        double v = 0.0;
        for (std::size_t i = 0; i < model.order(); ++i) v += model.a[i] * z[t - i - 1];
        z[t] = v;
    }
    std::vector<double> out(steps);
    for (std::size_t k = 0; k < steps; ++k) out[k] = z[history.size() + k] + model.mean;
    return out;
}

}  // namespace

// ---------------------------------------------------------------------------
// Synchronisation

TimeSeries synchronize_hourly(std::span<const TimedValue> samples) {
    if (samples.empty()) throw ValidationError("synchronize_hourly: no samples, grid undefined");
    auto [lo, hi] = std::minmax_element(samples.begin(), samples.end(),
                                        [](const auto& a, const auto& b) { return a.time < b.time; });
    const auto start = lo->time.floor_to(kHour);
    const auto hours = static_cast<std::size_t>((hi->time.floor_to(kHour) - start) / kHour + 1);
    return synchronize_hourly(samples, start, hours);
}

TimeSeries synchronize_hourly(std::span<const TimedValue> samples, Timestamp grid_start,
                              std::size_t hours) {
    std::vector<double> sum(hours, 0.0);
    std::vector<std::size_t> count(hours, 0);
    for (const auto& s : samples) {
        const auto offset = s.time - grid_start;
        if (offset < 0) continue;
        const auto bin = static_cast<std::size_t>(offset / kHour);
        if (bin >= hours) continue;
        sum[bin] += s.value;
        ++count[bin];
    }
    std::vector<TimeSeries::Sample> values(hours);
    for (std::size_t k = 0; k < hours; ++k)
        if (count[k] > 0) values[k] = sum[k] / static_cast<double>(count[k]);
    return TimeSeries(grid_start, kHour, std::move(values));
}

// ---------------------------------------------------------------------------
// Gaps

std::string_view to_string(GapClass c) {
    switch (c) {
        case GapClass::isolated: return "isolated";
        case GapClass::extended: return "extended";
        case GapClass::unrecoverable: return "unrecoverable";
    }
    return "?";
}

std::vector<GapDescriptor> classify_gaps(const TimeSeries& series, std::size_t g_iso,
                                         std::size_t g_max) {
    if (g_iso < 1 || g_max <= g_iso) throw ValidationError("classify_gaps: need 1 <= g_iso < g_max");
    std::vector<GapDescriptor> gaps;
    const std::size_t n = series.size();
    for (std::size_t k = 0; k < n;) {
        if (series[k]) {
            ++k;
            continue;
        }
        std::size_t len = 0;
        while (k + len < n && !series[k + len]) ++len;
        GapDescriptor g{k, len, GapClass::unrecoverable};
        const bool anchored = k > 0 && k + len < n;
        if (anchored && len <= g_iso) g.cls = GapClass::isolated;
        else if (anchored && len <= g_max) g.cls = GapClass::extended;
        gaps.push_back(g);
        k += len;
    }
    return gaps;
}

TimeSeries interpolate_linear(const TimeSeries& series, const GapDescriptor& gap) {
    if (gap.cls != GapClass::isolated) throw ValidationError("interpolate_linear: gap is not isolated");
    if (gap.start == 0 || gap.start + gap.length >= series.size() || !series[gap.start - 1] ||
        !series[gap.start + gap.length])
        throw ValidationError("interpolate_linear: gap lacks a present neighbour on both sides");
    for (std::size_t k = gap.start; k < gap.start + gap.length; ++k)
        if (series[k]) throw ValidationError("interpolate_linear: gap descriptor covers present samples");
    auto values = series.samples();
    const double left = *series[gap.start - 1];
    const double right = *series[gap.start + gap.length];
    const double span = static_cast<double>(gap.length + 1);
    for (std::size_t i = 0; i < gap.length; ++i)
        values[gap.start + i] = left + (right - left) * static_cast<double>(i + 1) / span;
    return TimeSeries(series.start(), series.step(), std::move(values));
}

TimeSeries interpolate_ar(const TimeSeries& series, const GapDescriptor& gap,
                          std::size_t max_order) {
    if (gap.cls != GapClass::extended) throw ValidationError("interpolate_ar: gap is not extended");
    if (max_order < 1) throw ValidationError("interpolate_ar: max_order must be >= 1");
    const std::size_t need = 4 * max_order;
    const std::size_t end = gap.start + gap.length;
    if (gap.start == 0 || end >= series.size())
        throw InsufficientAnchors("interpolate_ar: gap touches the series boundary");
    const std::size_t left = present_run_left(series, gap.start);
    const std::size_t right = present_run_right(series, end);
    if (left < need || right < need)
        throw InsufficientAnchors("interpolate_ar: need " + std::to_string(need) +
                                  " anchor samples on both sides, have " + std::to_string(left) +
                                  " and " + std::to_string(right));

    std::vector<double> pre(left), post(right);
    for (std::size_t i = 0; i < left; ++i) pre[i] = *series[gap.start - left + i];
    for (std::size_t i = 0; i < right; ++i) post[i] = *series[end + right - 1 - i];  // reversed

    const auto fwd = ar_extrapolate(pre, max_order, gap.length);
    auto bwd = ar_extrapolate(post, max_order, gap.length);
    std::reverse(bwd.begin(), bwd.end());

    auto values = series.samples();
    const std::size_t L = gap.length;
    for (std::size_t i = 0; i < L; ++i) {
        const double w = L == 1 ? 0.5 : 1.0 - static_cast<double>(i) / static_cast<double>(L - 1);
        values[gap.start + i] = w * fwd[i] + (1.0 - w) * bwd[i];
    }
    return TimeSeries(series.start(), series.step(), std::move(values));
}

TimeSeries downsample_mean(const TimeSeries& series, std::size_t factor) {
    if (factor < 1) throw ValidationError("downsample_mean: factor must be >= 1");
    const auto x = series.values();
    if (x.size() < factor) throw ValidationError("downsample_mean: series shorter than factor");
    const std::size_t m = x.size() / factor;
    std::vector<double> out(m);
    for (std::size_t k = 0; k < m; ++k) {
        double s = 0.0;
        for (std::size_t i = 0; i < factor; ++i) s += x[k * factor + i];
        out[k] = s / static_cast<double>(factor);
    }
    return TimeSeries::complete(series.start(), series.step() * static_cast<std::int64_t>(factor), out);
}

// ---------------------------------------------------------------------------
// Chebyshev type II

void validate(const FilterSpec& spec) {
    if (spec.order < 2 || spec.order % 2 != 0) throw ValidationError("filter order must be an even integer >= 2");
    if (!(spec.atten_db > 0.0)) throw ValidationError("filter attenuation must be positive (dB)");
    if (!(spec.edge > 0.0 && spec.edge < 1.0)) throw ValidationError("filter stopband edge must lie in (0, 1)");
}

FilterCoefficients design_cheby2(const FilterSpec& spec) {
    using cd = std::complex<double>;
    using std::numbers::pi;
    validate(spec);
    const int n = spec.order;
    const double eps = 1.0 / std::sqrt(std::pow(10.0, spec.atten_db / 10.0) - 1.0);
    const double mu = std::asinh(1.0 / eps) / n;
    const double warped = 2.0 * std::tan(pi * spec.edge / 2.0);

    std::vector<cd> zeros, poles;
    for (int k = 1; k <= n; ++k) {
        const double theta = (2.0 * k - 1.0) * pi / (2.0 * n);
        const cd p1{-std::sinh(mu) * std::sin(theta), std::cosh(mu) * std::cos(theta)};
        const cd s_pole = warped / p1;
        const cd s_zero = cd{0.0, warped / std::cos(theta)};
        poles.push_back((2.0 + s_pole) / (2.0 - s_pole));
        zeros.push_back((2.0 + s_zero) / (2.0 - s_zero));
    }
    for (const auto& p : poles)
        if (std::abs(p) >= 1.0) throw NumericalError("design_cheby2: unstable design (pole on/outside unit circle)");

    auto expand = [](const std::vector<cd>& roots) {
        std::vector<cd> c{1.0};
        for (const auto& r : roots) {
            std::vector<cd> next(c.size() + 1, 0.0);
            for (std::size_t i = 0; i < c.size(); ++i) {
                next[i] += c[i];
                next[i + 1] -= r * c[i];
            }
            c = std::move(next);
        }
        std::vector<double> out(c.size());
        for (std::size_t i = 0; i < c.size(); ++i) out[i] = c[i].real();
        return out;
    };
    FilterCoefficients f{expand(zeros), expand(poles)};
    const double gain = std::accumulate(f.a.begin(), f.a.end(), 0.0) /
                        std::accumulate(f.b.begin(), f.b.end(), 0.0);
    for (auto& v : f.b) v *= gain;
    return f;
}

std::complex<double> frequency_response(const FilterCoefficients& f, double normalized_freq) {
    const auto zinv = std::polar(1.0, -std::numbers::pi * normalized_freq);
    std::complex<double> num = 0.0, den = 0.0, zk = 1.0;
    for (std::size_t k = 0; k < std::max(f.a.size(), f.b.size()); ++k) {
        if (k < f.b.size()) num += f.b[k] * zk;
        if (k < f.a.size()) den += f.a[k] * zk;
        zk *= zinv;
    }
    return num / den;
}

std::vector<double> lfilter(const FilterCoefficients& f, std::span<const double> x,
                            std::span<const double> initial_state) {
    const std::size_t order = std::max(f.a.size(), f.b.size()) - 1;
    std::vector<double> b(order + 1, 0.0), a(order + 1, 0.0);
    for (std::size_t i = 0; i < f.b.size(); ++i) b[i] = f.b[i] / f.a[0];
    for (std::size_t i = 0; i < f.a.size(); ++i) a[i] = f.a[i] / f.a[0];
    std::vector<double> z(order, 0.0);
    if (!initial_state.empty()) std::copy(initial_state.begin(), initial_state.end(), z.begin());
    std::vector<double> y(x.size());
    for (std::size_t n = 0; n < x.size(); ++n) {
        const double out = b[0] * x[n] + (order > 0 ? z[0] : 0.0);
        for (std::size_t i = 0; i + 1 < order; ++i) z[i] = b[i + 1] * x[n] + z[i + 1] - a[i + 1] * out;
        if (order > 0) z[order - 1] = b[order] * x[n] - a[order] * out;
        y[n] = out;
    }
    return y;
}

std::vector<double> lfilter_zi(const FilterCoefficients& f) {
    const std::size_t order = std::max(f.a.size(), f.b.size()) - 1;
    if (order == 0) return {};
    std::vector<double> b(order + 1, 0.0), a(order + 1, 0.0);
    for (std::size_t i = 0; i < f.b.size(); ++i) b[i] = f.b[i] / f.a[0];
    for (std::size_t i = 0; i < f.a.size(); ++i) a[i] = f.a[i] / f.a[0];
    const auto m = static_cast<Eigen::Index>(order);
    // (I - companion(a)^T) zi = b[1:] - a[1:] b[0]
    Eigen::MatrixXd lhs = Eigen::MatrixXd::Identity(m, m);
    for (Eigen::Index i = 0; i < m; ++i) lhs(i, 0) += a[static_cast<std::size_t>(i) + 1];
    for (Eigen::Index i = 0; i + 1 < m; ++i) lhs(i, i + 1) -= 1.0;
    Eigen::VectorXd rhs(m);
    for (Eigen::Index i = 0; i < m; ++i)
        rhs(i) = b[static_cast<std::size_t>(i) + 1] - a[static_cast<std::size_t>(i) + 1] * b[0];
    const Eigen::VectorXd zi = lhs.partialPivLu().solve(rhs);
    return {zi.data(), zi.data() + m};
}

namespace {

// One forward-then-backward pass over an odd-reflected extension of x.
std::vector<double> forward_backward(const FilterCoefficients& f, std::span<const double> x,
                                     std::size_t pad) {
    const std::size_t n = x.size();
    std::vector<double> ext;
    ext.reserve(n + 2 * pad);
    for (std::size_t i = pad; i >= 1; --i) ext.push_back(2.0 * x[0] - x[i]);
    ext.insert(ext.end(), x.begin(), x.end());
    for (std::size_t i = 1; i <= pad; ++i) ext.push_back(2.0 * x[n - 1] - x[n - 1 - i]);

    const auto zi = lfilter_zi(f);
    auto scaled = [&](double v) {
        std::vector<double> s(zi);
        for (auto& e : s) e *= v;
        return s;
    };
    auto fwd = lfilter(f, ext, scaled(ext.front()));
    std::reverse(fwd.begin(), fwd.end());
    auto bwd = lfilter(f, fwd, scaled(fwd.front()));
    std::reverse(bwd.begin(), bwd.end());
    return {bwd.begin() + static_cast<std::ptrdiff_t>(pad),
            bwd.begin() + static_cast<std::ptrdiff_t>(pad + n)};
}

}  // namespace

std::vector<double> filtfilt(const FilterCoefficients& f, std::span<const double> x) {
    const std::size_t order = std::max(f.a.size(), f.b.size()) - 1;
    const std::size_t pad = 3 * order;
    if (x.size() <= pad)
        throw ValidationError("filtfilt: series length " + std::to_string(x.size()) +
                              " must exceed 3 x filter order (" + std::to_string(pad) + ")");
    // Averaging the pass over x with the mirrored pass over reversed x makes the
    // edge transients symmetric, so reversing the input reverses the output exactly.
    const std::size_t n = x.size();
    const auto a = forward_backward(f, x, pad);
    std::vector<double> rx(x.rbegin(), x.rend());
    const auto b = forward_backward(f, rx, pad);
    std::vector<double> y(n);
    for (std::size_t i = 0; i < n; ++i) y[i] = 0.5 * (a[i] + b[n - 1 - i]);
    return y;
}

TimeSeries filtfilt(const FilterCoefficients& f, const TimeSeries& series) {
    const auto y = filtfilt(f, series.values());
    return TimeSeries::complete(series.start(), series.step(), y);
}

Decomposition split_trend(const TimeSeries& series, const FilterSpec& spec) {
    const auto x = series.values();
    const auto smooth = filtfilt(design_cheby2(spec), x);
    std::vector<double> stochastic(x.size()), deterministic(x.size());
    for (std::size_t t = 0; t < x.size(); ++t) {
        deterministic[t] = smooth[t];
        stochastic[t] = exact_residual(x[t], deterministic[t]);
    }
    return {TimeSeries::complete(series.start(), series.step(), deterministic),
            TimeSeries::complete(series.start(), series.step(), stochastic)};
}

// ---------------------------------------------------------------------------
// Despiking

DespikeResult despike(const TimeSeries& series, std::size_t window, double k) {
    if (window < 3 || window % 2 == 0) throw ValidationError("despike: window must be odd and >= 3");
    if (!(k > 0.0)) throw ValidationError("despike: threshold multiplier must be positive");
    DespikeResult out{series, {}};
    auto values = series.samples();
    const std::size_t n = series.size();
    const std::size_t half = window / 2;
    for (std::size_t seg = 0; seg < n;) {
        if (!series[seg]) {
            ++seg;
            continue;
        }
        const std::size_t len = present_run_right(series, seg);
        if (len >= window) {
            for (std::size_t i = seg; i < seg + len; ++i) {
                std::size_t lo = i >= seg + half ? i - half : seg;
                lo = std::min(lo, seg + len - window);
                std::vector<double> w(window);
                for (std::size_t j = 0; j < window; ++j) w[j] = *series[lo + j];
                const double med = median_of(w);
                std::vector<double> dev(window);
                for (std::size_t j = 0; j < window; ++j) dev[j] = std::abs(w[j] - med);
                const double mad = median_of(dev);
                if (std::abs(*series[i] - med) > k * 1.4826 * mad) {
                    values[i] = med;
                    out.replaced.push_back(i);
                }
            }
        }
        seg += len;
    }
    out.series = TimeSeries(series.start(), series.step(), std::move(values));
    return out;
}

// ---------------------------------------------------------------------------
// Pipeline

void PipelineConfig::validate() const {
    if (g_iso < 1 || g_max <= g_iso) throw ValidationError("config: need 1 <= g_iso < g_max");
    if (ar_max_order < 1) throw ValidationError("config: ar_max_order must be >= 1");
    preprocess::validate(filter);
    if (downsample_factor < 1) throw ValidationError("config: downsample.factor must be >= 1");
    if (despike_window < 3 || despike_window % 2 == 0)
        throw ValidationError("config: despike.window must be odd and >= 3");
    if (!(despike_k > 0.0)) throw ValidationError("config: despike.k must be positive");
}

TimeSeries repair_hourly(const TimeSeries& hourly, const PipelineConfig& cfg,
                         ChannelRepairReport& report) {
    TimeSeries s = hourly;
    if (cfg.despike_enabled) {
        auto d = despike(s, cfg.despike_window, cfg.despike_k);
        report.spikes = std::move(d.replaced);
        s = std::move(d.series);
    }
    const auto gaps = classify_gaps(s, cfg.g_iso, cfg.g_max);
    // Short gaps first, so they never starve an AR fill of anchor samples.
    for (const auto& g : gaps)
        if (g.cls == GapClass::isolated) {
            s = interpolate_linear(s, g);
            ++report.isolated;
        }
    for (const auto& g : gaps) {
        if (g.cls == GapClass::unrecoverable) {
            ++report.unrecoverable;
        } else if (g.cls == GapClass::extended) {
            try {
                s = interpolate_ar(s, g, cfg.ar_max_order);
                ++report.extended;
            } catch (const InsufficientAnchors&) {
                ++report.ar_fallbacks;
                ++report.unrecoverable;
            }
        }
    }
    return s;
}

BlockAssembly assemble_block(const std::string& code, std::span<const ChannelSamples> channels,
                             const PipelineConfig& cfg) {
    cfg.validate();
    std::optional<Timestamp> lo, hi;
    for (const auto& c : channels)
        for (const auto& s : c.samples) {
            if (!lo || s.time < *lo) lo = s.time;
            if (!hi || s.time > *hi) hi = s.time;
        }
    if (!lo) throw ValidationError("block '" + code + "' has no samples");
    const auto start = lo->floor_to(kHour);
    const auto hours = static_cast<std::size_t>((hi->floor_to(kHour) - start) / kHour + 1);

    std::map<std::string, ChannelRepairReport> reports;
    std::vector<TimeSeries> repaired;
    for (const auto& c : channels) {
        ChannelRepairReport rep;
        repaired.push_back(repair_hourly(synchronize_hourly(c.samples, start, hours), cfg, rep));
        reports.emplace(std::string(info(c.channel.parameter).id), std::move(rep));
    }

    // Longest run of hours present in every channel.
    std::size_t best_first = 0, best_len = 0;
    for (std::size_t k = 0; k < hours;) {
        auto all_present = [&](std::size_t t) {
            return std::all_of(repaired.begin(), repaired.end(), [&](const TimeSeries& s) { return s[t].has_value(); });
        };
        if (!all_present(k)) {
            ++k;
            continue;
        }
        std::size_t len = 0;
        while (k + len < hours && all_present(k + len)) ++len;
        if (len > best_len) {
            best_first = k;
            best_len = len;
        }
        k += len;
    }
    if (best_len < cfg.downsample_factor)
        throw ValidationError("block '" + code + "' has no complete common window");

    std::vector<DataBlock::Member> members;
    for (std::size_t i = 0; i < channels.size(); ++i)
        members.push_back({channels[i].channel,
                           downsample_mean(repaired[i].slice(best_first, best_len), cfg.downsample_factor)});
    return BlockAssembly{DataBlock(code, std::move(members)), std::move(reports), hours, best_first, best_len};
}

}  // namespace eko::preprocess
