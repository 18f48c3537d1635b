#include <array>
#include <bit>
#include <cmath>

#include "eko/ident.hpp"

namespace eko::ident {

namespace {

// Daubechies scaling filters (2 and 4 vanishing moments), unit l2 norm.
constexpr std::array<double, 4> kDb4Taps = {
    0.48296291314453414337, 0.83651630373780790558, 0.22414386804201338103,
    -0.12940952255126038117};
constexpr std::array<double, 8> kDb8Taps = {
    0.23037781330889650086,  0.71484657055291564709,  0.63088076792985890788,
    -0.027983769416859854211, -0.18703481171909308408, 0.030841381835560763627,
    0.032883011666885199735, -0.010597401785069032105};

std::vector<double> highpass(std::span<const double> h) {
    const std::size_t L = h.size();
    std::vector<double> g(L);
    for (std::size_t k = 0; k < L; ++k) g[k] = ((k % 2) ? -1.0 : 1.0) * h[L - 1 - k];
    return g;
}

void analyze(std::span<const double> x, std::span<const double> h, std::span<const double> g,
             std::vector<double>& approx, std::vector<double>& detail) {
    const std::size_t n = x.size();
    const std::size_t half = n / 2;
    approx.assign(half, 0.0);
    detail.assign(half, 0.0);
    for (std::size_t i = 0; i < half; ++i) {
        double a = 0.0, d = 0.0;
        for (std::size_t k = 0; k < h.size(); ++k) {
            const double v = x[(2 * i + k) % n];
            a += h[k] * v;
            d += g[k] * v;
        }
        approx[i] = a;
        detail[i] = d;
    }
}

std::vector<double> synthesize(std::span<const double> approx, std::span<const double> detail,
                               std::span<const double> h, std::span<const double> g) {
    const std::size_t n = approx.size() * 2;
    std::vector<double> x(n, 0.0);
    for (std::size_t i = 0; i < approx.size(); ++i)
        for (std::size_t k = 0; k < h.size(); ++k)
            x[(2 * i + k) % n] += h[k] * approx[i] + g[k] * detail[i];
    return x;
}

}  // namespace

std::span<const double> daubechies_lowpass(int taps) {
    if (taps == 4) return kDb4Taps;
    if (taps == 8) return kDb8Taps;
    throw ValidationError("wavelet taps must be 4 or 8, got " + std::to_string(taps));
}

int max_wavelet_levels(std::size_t n) {
    if (n < 4) return 0;
    return static_cast<int>(std::bit_width(n)) - 2;  // floor(log2 n) - 1
}

WaveletDecomposition dwt(std::span<const double> x, int taps, int levels) {
    const auto h = daubechies_lowpass(taps);
    if (levels < 1 || levels > max_wavelet_levels(x.size()))
        throw ValidationError("dwt: " + std::to_string(levels) + " levels not admissible for length " +
                              std::to_string(x.size()));
    const std::size_t block = std::size_t{1} << levels;
    const std::size_t padded = (x.size() + block - 1) / block * block;
    std::vector<double> signal(x.begin(), x.end());
    // Symmetric reflection of the tail.
    for (std::size_t i = 0; signal.size() < padded; ++i)
        signal.push_back(x[x.size() - 1 - (i % x.size())]);

    const auto g = highpass(h);
    WaveletDecomposition d;
    d.taps = taps;
    d.levels = levels;
    d.original_length = x.size();
    d.padded_length = padded;
    std::vector<double> current = std::move(signal);
    for (int j = 0; j < levels; ++j) {
        std::vector<double> approx, detail;
        analyze(current, h, g, approx, detail);
        d.details.push_back(std::move(detail));
        current = std::move(approx);
    }
    d.approximation = std::move(current);
    return d;
}

std::vector<double> idwt_padded(const WaveletDecomposition& d) {
    const auto h = daubechies_lowpass(d.taps);
    const auto g = highpass(h);
    if (d.details.size() != static_cast<std::size_t>(d.levels))
        throw ValidationError("idwt: detail level count does not match decomposition");
    std::vector<double> current = d.approximation;
    for (int j = d.levels - 1; j >= 0; --j) {
        const auto& detail = d.details[static_cast<std::size_t>(j)];
        if (detail.size() != current.size())
            throw ValidationError("idwt: coefficient counts inconsistent at level " + std::to_string(j + 1));
        current = synthesize(current, detail, h, g);
    }
    return current;
}

std::vector<double> idwt(const WaveletDecomposition& d) {
    auto x = idwt_padded(d);
    x.resize(d.original_length);
    return x;
}

}  // namespace eko::ident
