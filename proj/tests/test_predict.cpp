#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <numbers>

#include "eko/predict.hpp"
#include "eko/quality.hpp"
#include "test_support.hpp"

using namespace eko;
using namespace eko::predict;
using eko::testing::simulate_arma;
using eko::testing::white_noise;

namespace {

constexpr std::int64_t kStep = 3 * 3600;
const Timestamp kStart = Timestamp::from_civil(2010, 6, 1);

TimeSeries series_of(const std::vector<double>& v, std::int64_t step = kStep) {
    return TimeSeries::complete(kStart, step, v);
}

std::vector<double> diurnal_ar(std::size_t n, std::uint64_t seed, double amp = 3.0) {
    auto v = simulate_arma({0.6}, {}, 1.0, n, seed);
    for (std::size_t t = 0; t < n; ++t) v[t] += 20.0 + amp * std::cos(2.0 * std::numbers::pi * double(t) / 8.0);
    return v;
}

// Target driven by u1 two steps back; u2 independent of both.
DataBlock coupled_block(std::size_t n, std::uint64_t seed, double gain) {
    const auto u1 = simulate_arma({0.8}, {}, 1.0, n, seed * 3 + 1);
    const auto u2 = simulate_arma({0.5}, {}, 1.0, n, seed * 3 + 2);
    auto y = simulate_arma({0.5}, {}, 0.5, n, seed * 3 + 3);
    for (std::size_t t = 2; t < n; ++t) y[t] += gain * u1[t - 2];
    for (auto& v : y) v += 50.0;
    return DataBlock("N1-soil-Mo-Te-WaCo",
                     {{make_channel(1, 0, ParameterKind::Mo), series_of(y)},
                      {make_channel(1, 1, ParameterKind::TeSoil), series_of(u1)},
                      {make_channel(1, 2, ParameterKind::WaCo), series_of(u2)}});
}

std::vector<double> add(std::vector<double> v, double c) {
    for (auto& x : v) x += c;
    return v;
}

std::vector<double> mul(std::vector<double> v, double s) {
    for (auto& x : v) x *= s;
    return v;
}

DataBlock transform_block(const DataBlock& b, double shift, double scale) {
    std::vector<DataBlock::Member> m;
    for (const auto& mem : b.members())
        m.push_back({mem.channel, series_of(add(mul(mem.series.values(), scale), shift), mem.series.step())});
    return DataBlock(b.code(), m);
}

void check_close(const std::vector<double>& a, const std::vector<double>& b, double tol) {
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i] == doctest::Approx(b[i]).epsilon(0).scale(0).epsilon(tol));
}

double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

}  // namespace

TEST_CASE("names and quantile") {
    CHECK(to_string(PredictorKind::forwaver) == "FORWAVER");
    CHECK(predictor_from_string("parmax") == PredictorKind::parmax);
    CHECK_THROWS_AS(predictor_from_string("arima"), ValidationError);
    CHECK(normal_quantile(0.95) == doctest::Approx(1.959964).epsilon(1e-6));
    CHECK_THROWS_AS(normal_quantile(1.0), ValidationError);
}

TEST_CASE("trend fitting") {
    SUBCASE("exact cubic + diurnal basis is recovered and extrapolates") {
        TrendModel truth;
        truth.degree = 3;
        truth.diurnal = true;
        truth.period_steps = 8.0;
        truth.fit_length = 200;
        truth.coeffs = {5.0, -2.0, 3.0, 1.5, 0.7, -0.4};
        const auto y = truth.evaluate(0, 200);
        const auto m = fit_trend_basis(y, kStep, 3, true);
        for (std::size_t i = 0; i < 6; ++i) CHECK(m.coeffs[i] == doctest::Approx(truth.coeffs[i]).epsilon(1e-8));
        CHECK(m(230.0) == doctest::Approx(truth(230.0)).epsilon(1e-8));
        CHECK(m.basis() == "poly3+diurnal");
    }
    SUBCASE("least squares matches a normal-equation oracle") {
        const auto y = diurnal_ar(150, 4);
        const auto m = fit_trend_basis(y, kStep, 2, true);
        Eigen::MatrixXd X(150, 5);
        Eigen::VectorXd b(150);
        for (int t = 0; t < 150; ++t) {
            const double u = t / 150.0;
            X.row(t) << 1.0, u, u * u, std::cos(2 * std::numbers::pi * t / 8.0), std::sin(2 * std::numbers::pi * t / 8.0);
            b(t) = y[std::size_t(t)];
        }
        const Eigen::VectorXd theta = (X.transpose() * X).ldlt().solve(X.transpose() * b);
        for (int i = 0; i < 5; ++i) CHECK(m.coeffs[std::size_t(i)] == doctest::Approx(theta(i)).epsilon(1e-7));
    }
    SUBCASE("BIC picks the smallest adequate basis") {
        std::vector<double> ramp(200);
        const auto noise = white_noise(200, 0.05, 8);
        for (std::size_t t = 0; t < 200; ++t) ramp[t] = 1.0 + 0.02 * double(t) + noise[t];
        const auto m = fit_trend(ramp, kStep);
        CHECK(m.degree == 1);
        CHECK_FALSE(m.diurnal);
        const auto flat = fit_trend(std::vector<double>(100, 4.0), kStep);
        CHECK(flat.degree == 0);
        CHECK_FALSE(flat.diurnal);
        CHECK(flat(150.0) == doctest::Approx(4.0));
    }
    SUBCASE("diurnal basis is skipped when the step cannot resolve it") {
        const auto m = fit_trend(white_noise(100, 1.0, 1), 86400);
        CHECK_FALSE(m.diurnal);
    }
}

TEST_CASE("fit_parma") {
    SUBCASE("linear ramp with tiny noise") {
        std::vector<double> y(300);
        const auto noise = white_noise(300, 0.01, 21);
        for (std::size_t t = 0; t < 300; ++t) y[t] = 10.0 + 0.05 * double(t) + noise[t];
        const auto fp = fit_parma(series_of(y));
        CHECK(fp.trend.degree == 1);
        CHECK_FALSE(fp.trend.diurnal);
        double sum_abs = 0.0;
        for (double a : fp.arma->a) sum_abs += std::abs(a);
        CHECK(sum_abs < 0.2);
        const auto fc = forecast(fp, 12);
        for (std::size_t k = 0; k < 12; ++k) CHECK(std::abs(fc.values[k] - (10.0 + 0.05 * double(300 + k))) < 0.05);
    }
    SUBCASE("white noise: flat forecast at the mean, constant tube z * sigma") {
        const auto fp = fit_parma(series_of(white_noise(400, 1.0, 5)));
        REQUIRE(fp.meta.orders.na == 0);
        REQUIRE(fp.meta.orders.nc == 0);
        CHECK(fp.trend.degree == 0);
        CHECK(std::abs(fp.trend.coeffs[0]) < 0.2);
        const auto fc = forecast(fp, 12);
        const double sigma = std::sqrt(fp.arma->sigma2);
        for (std::size_t k = 0; k < 12; ++k) {
            CHECK(fc.values[k] == doctest::Approx(fc.values[0]).epsilon(1e-12));
            CHECK(fc.radii[k] == doctest::Approx(1.959964 * sigma).epsilon(1e-6));
        }
        CHECK(fc.values[0] == doctest::Approx(fp.trend(400.0) + fp.arma->mean));
    }
    SUBCASE("diurnal sinusoid + AR(1): sinusoid basis in >= 80% of 50 seeds") {
        int hits = 0;
        for (std::uint64_t seed = 0; seed < 50; ++seed) hits += fit_parma(series_of(diurnal_ar(240, 100 + seed))).trend.diurnal;
        MESSAGE("diurnal basis chosen in " << hits << "/50");
        CHECK(hits >= 40);
    }
    SUBCASE("preconditions") {
        CHECK_THROWS_AS(fit_parma(series_of(white_noise(59, 1.0, 1))), ValidationError);
        std::vector<TimeSeries::Sample> s(100, 1.0);
        s[50] = std::nullopt;
        CHECK_THROWS_AS(fit_parma(TimeSeries(kStart, kStep, s)), ValidationError);
    }
}

TEST_CASE("forecast closed forms") {
    FittedPredictor fp;
    fp.kind = PredictorKind::parma;
    const std::vector<double> resid = {0.3, -1.0, 0.4, 2.0};
    fp.history = series_of(resid);
    fp.trend.fit_length = 4;
    fp.trend.coeffs = {0.0};
    fp.trend_values.assign(4, 0.0);
    fp.residual = resid;
    ident::ArmaModel m;
    m.a = {0.5};
    m.sigma2 = 1.0;
    fp.arma = m;
    fp.innovations = series_of(ident::arma_innovations(m, resid));

    SUBCASE("AR(1) a = 0.5 halves the last detrended value each step") {
        const auto fc = forecast(fp, 3);
        CHECK(fc.values[0] == doctest::Approx(1.0));
        CHECK(fc.values[1] == doctest::Approx(0.5));
        CHECK(fc.values[2] == doctest::Approx(0.25));
        CHECK(fc.radii[0] == doctest::Approx(1.959964).epsilon(1e-6));
        CHECK(fc.radii[1] == doctest::Approx(1.959964 * std::sqrt(1.25)).epsilon(1e-6));
        CHECK(fc.start == fp.history.time_at(4));
    }
    SUBCASE("white-noise model: value = trend, constant radius") {
        fp.arma->a.clear();
        fp.trend.degree = 1;
        fp.trend.coeffs = {2.0, 4.0};
        const auto fc = forecast(fp, 5);
        for (std::size_t k = 0; k < 5; ++k) {
            CHECK(fc.values[k] == doctest::Approx(2.0 + 4.0 * double(4 + k) / 4.0));
            CHECK(fc.radii[k] == doctest::Approx(fc.radii[0]));
        }
    }
    SUBCASE("horizon limits") {
        CHECK_THROWS_AS(forecast(fp, 0), ValidationError);
        CHECK_THROWS_AS(forecast(fp, 57), ValidationError);
        CHECK_NOTHROW(forecast(fp, 56));
    }
}

TEST_CASE("tube radii") {
    SUBCASE("k = 1 is z * sigma; white noise is flat") {
        const auto r = tube_radii({}, {}, 4.0, 6, 0.95);
        for (double v : r) CHECK(v == doctest::Approx(1.959964 * 2.0).epsilon(1e-6));
        const auto r2 = tube_radii(std::vector<double>{0.7}, std::vector<double>{0.2}, 1.0, 1, 0.95);
        CHECK(r2[0] == doctest::Approx(1.959964).epsilon(1e-6));
    }
    SUBCASE("ARMA(2,1) radii match the empirical 95% band of 100000 trajectories") {
        const std::vector<double> a = {0.75, -0.3}, c = {0.4};
        const double sigma = 1.3;
        const std::size_t h = 12, trials = 100000;
        const auto r = tube_radii(a, c, sigma * sigma, h, 0.95);
        // Future deviations from the point forecast: the model driven by fresh
        // noise from a zero state.
        std::vector<std::vector<double>> dev(h, std::vector<double>(trials));
        std::mt19937_64 rng(2024);
        std::normal_distribution<double> g(0.0, sigma);
        for (std::size_t i = 0; i < trials; ++i) {
            double y1 = 0, y2 = 0, e1 = 0;
            for (std::size_t k = 0; k < h; ++k) {
                const double e = g(rng);
                const double y = a[0] * y1 + a[1] * y2 + e + c[0] * e1;
                dev[k][i] = std::abs(y);
                y2 = y1;
                y1 = y;
                e1 = e;
            }
        }
        for (std::size_t k = 0; k < h; ++k) {
            auto& d = dev[k];
            std::nth_element(d.begin(), d.begin() + long(0.95 * trials), d.end());
            const double q = d[std::size_t(0.95 * trials)];
            CHECK(std::abs(r[k] - q) / q < 0.05);
        }
    }
}

TEST_CASE("fit_parmax") {
    SUBCASE("coupled input is selected in >= 80% of 30 seeds") {
        int hits = 0;
        for (std::uint64_t seed = 0; seed < 30; ++seed) {
            const auto fp = fit_parmax(coupled_block(300, seed, 0.8), 0);
            bool has_u1 = false;
            for (const auto& in : fp.inputs) has_u1 = has_u1 || in.channel.parameter == ParameterKind::TeSoil;
            hits += has_u1;
        }
        MESSAGE("coupled input selected in " << hits << "/30");
        CHECK(hits >= 24);
    }
    SUBCASE("independent inputs bring no systematic gain over PARMA (paired, 30 seeds)") {
        std::vector<double> diff;
        const std::size_t n = 300, h = 12;
        for (std::uint64_t seed = 0; seed < 30; ++seed) {
            const auto full = coupled_block(n, seed + 500, 0.0);
            const auto block = full.slice(0, n - h);
            const auto actual = full.series(0).values();
            const std::vector<double> truth(actual.end() - long(h), actual.end());
            const double sy = standard_deviation(block.series(0).values());
            const auto fa = forecast(fit_parma(block.series(0)), h);
            const auto fb = forecast(fit_parmax(block, 0), h);
            diff.push_back(prediction_quality(truth, fb.values, fb.radii, sy).value -
                           prediction_quality(truth, fa.values, fa.radii, sy).value);
        }
        double mean = 0.0, ss = 0.0;
        for (double d : diff) mean += d / 30.0;
        for (double d : diff) ss += (d - mean) * (d - mean);
        const double se = std::sqrt(ss / 29.0 / 30.0);
        MESSAGE("mean PQ gain " << mean << " (se " << se << ")");
        CHECK(mean < 2.0 * se + 1.0);
    }
    SUBCASE("subset counts") {
        const auto block = coupled_block(200, 3, 0.8);
        PredictorConfig cfg;
        cfg.parmax_singletons_only = true;
        CHECK(fit_parmax(block, 0, cfg).meta.subsets_evaluated == 2);
        cfg.parmax_singletons_only = false;
        CHECK(fit_parmax(block, 0, cfg).meta.subsets_evaluated == 3);
    }
    SUBCASE("every subset failing is reported per subset") {
        PredictorConfig cfg;
        cfg.armax_na = {6, 6};
        try {
            fit_parmax(coupled_block(80, 1, 0.8), 0, cfg);
            FAIL("expected failure");
        } catch (const NumericalError& e) {
            const std::string msg = e.what();
            CHECK(msg.find("every input subset failed") != std::string::npos);
            CHECK(msg.find("{Te_soil}") != std::string::npos);
            CHECK(msg.find("{WaCo}") != std::string::npos);
            CHECK(msg.find("{Te_soil+WaCo}") != std::string::npos);
        }
    }
    SUBCASE("hold-last policy changes only the exogenous future") {
        const auto fp = fit_parmax(coupled_block(300, 2, 0.8), 0);
        PredictorConfig hold;
        hold.exogenous = ExogenousPolicy::hold_last;
        const auto a = forecast(fp, 12), b = forecast(fp, 12, hold);
        CHECK(a.radii == b.radii);
        std::size_t min_delay = 99;
        for (const auto& in : fp.armax->inputs) min_delay = std::min(min_delay, in.delay);
        // Steps reachable by observed inputs only agree exactly.
        for (std::size_t k = 0; k < min_delay; ++k) CHECK(a.values[k] == b.values[k]);
    }
    SUBCASE("target index out of range") {
        CHECK_THROWS_AS(fit_parmax(coupled_block(100, 1, 0.8), 3), ValidationError);
    }
}

TEST_CASE("fit_karma") {
    SUBCASE("same realised model as PARMA gives the same forecasts") {
        int compared = 0;
        for (std::uint64_t seed = 0; seed < 10; ++seed) {
            const auto y = simulate_arma({0.7}, {0.4}, 1.0, 2000, 900 + seed);
            const auto pa = fit_parma(series_of(y));
            if (pa.meta.orders.na != 1 || pa.meta.orders.nc != 1) continue;
            PredictorConfig cfg;
            cfg.karma_force_n = 1;
            const auto ka = fit_karma(series_of(y), cfg);
            const auto fa = forecast(pa, 12), fk = forecast(ka, 12);
            CHECK(max_abs_diff(fa.values, fk.values) < 1e-6);
            CHECK(max_abs_diff(fa.radii, fk.radii) < 1e-6);
            ++compared;
        }
        CHECK(compared >= 5);
    }
    SUBCASE("state dimension n and n + 1 give different forecasts") {
        const auto y = simulate_arma({0.7}, {0.4}, 1.0, 400, 77);
        PredictorConfig c2, c3;
        c2.karma_force_n = 2;
        c3.karma_force_n = 3;
        const auto f2 = forecast(fit_karma(series_of(y), c2), 12);
        const auto f3 = forecast(fit_karma(series_of(y), c3), 12);
        CHECK(max_abs_diff(f2.values, f3.values) > 1e-6);
    }
    SUBCASE("searched dimension is recorded in the metadata") {
        const auto fp = fit_karma(series_of(diurnal_ar(300, 3)));
        CHECK(fp.statespace);
        CHECK(fp.meta.orders.n == int(fp.statespace->dim()));
        CHECK(fp.innovations.same_grid(fp.history));
    }
    SUBCASE("deterministic signal gives a vanishing tube") {
        TrendModel t;
        t.degree = 2;
        t.diurnal = true;
        t.period_steps = 8;
        t.fit_length = 200;
        t.coeffs = {3.0, 1.0, -2.0, 0.5, 0.25};
        const auto fp = fit_karma(series_of(t.evaluate(0, 200)));
        for (double r : forecast(fp, 12).radii) CHECK(r < 1e-6);
    }
}

TEST_CASE("fit_forwaver") {
    SUBCASE("constant series") {
        const auto fp = fit_forwaver(series_of(std::vector<double>(128, 7.5)));
        for (double d : fp.trend_values) CHECK(d == doctest::Approx(7.5).epsilon(1e-12));
        for (double s : fp.residual) CHECK(std::abs(s) < 1e-9);
        const auto fc = forecast(fp, 12);
        for (std::size_t k = 0; k < 12; ++k) {
            CHECK(fc.values[k] == doctest::Approx(7.5).epsilon(1e-9));
            CHECK(fc.radii[k] < 1e-9);
        }
    }
    SUBCASE("slow sinusoid lands in the deterministic part") {
        for (std::uint64_t seed = 0; seed < 10; ++seed) {
            const std::size_t n = 512;
            const auto noise = white_noise(n, 0.5, 40 + seed);
            std::vector<double> s(n), x(n);
            for (std::size_t t = 0; t < n; ++t) {
                s[t] = 2.0 * std::sin(2.0 * std::numbers::pi * double(t) / 128.0);
                x[t] = s[t] + noise[t];
            }
            PredictorConfig cfg;
            cfg.wavelet_levels = 4;
            const auto fp = fit_forwaver(series_of(x), cfg);
            CHECK(fp.meta.wavelet_levels == 4);
            double dot = 0.0, ss = 0.0;
            for (std::size_t t = 0; t < n; ++t) {
                dot += fp.trend_values[t] * s[t];
                ss += s[t] * s[t];
            }
            CHECK(dot / ss >= 0.9);
        }
    }
    SUBCASE("levels are reduced for short series") {
        PredictorConfig cfg;
        cfg.min_samples = 20;
        cfg.wavelet_levels = 6;
        const auto fp = fit_forwaver(series_of(white_noise(40, 1.0, 3)), cfg);
        CHECK(fp.meta.levels_reduced);
        CHECK(fp.meta.wavelet_levels == ident::max_wavelet_levels(40));
        CHECK_FALSE(fit_forwaver(series_of(white_noise(400, 1.0, 3))).meta.levels_reduced);
    }
}

TEST_CASE("properties across predictors") {
    const auto block = coupled_block(240, 11, 0.8);
    auto fit_all = [](const DataBlock& b, const PredictorConfig& cfg = {}) {
        std::vector<FittedPredictor> out;
        for (auto k : kAllPredictors) out.push_back(fit_predictor(k, b, 0, cfg));
        return out;
    };
    const auto base = fit_all(block);

    SUBCASE("decomposition identity, innovations grid, tube monotonicity") {
        for (const auto& fp : base) {
            const auto x = fp.history.values();
            for (std::size_t t = 0; t < x.size(); ++t) CHECK(fp.trend_values[t] + fp.residual[t] == x[t]);
            CHECK(fp.innovations.same_grid(fp.history));
            for (std::size_t h : {1, 12, 56}) {
                const auto r = confidence_tube(fp, h, 0.95);
                CHECK(r[0] >= 0.0);
                for (std::size_t k = 1; k < h; ++k) CHECK(r[k] >= r[k - 1]);
            }
        }
    }
    SUBCASE("shift and scale equivariance") {
        const auto shifted = fit_all(transform_block(block, 1000.0, 1.0));
        const auto scaled = fit_all(transform_block(block, 0.0, 7.5));
        for (std::size_t i = 0; i < base.size(); ++i) {
            INFO(to_string(base[i].kind));
            const auto f0 = forecast(base[i], 12);
            const auto fs = forecast(shifted[i], 12);
            const auto fm = forecast(scaled[i], 12);
            CHECK(max_abs_diff(add(f0.values, 1000.0), fs.values) < 1e-6);
            CHECK(max_abs_diff(f0.radii, fs.radii) < 1e-6);
            CHECK(max_abs_diff(mul(f0.values, 7.5), fm.values) < 1e-6 * 7.5 * 60);
            CHECK(max_abs_diff(mul(f0.radii, 7.5), fm.radii) < 1e-6 * 7.5);
        }
    }
    SUBCASE("determinism, including threaded order selection") {
        PredictorConfig threaded;
        threaded.workers = 3;
        const auto again = fit_all(block);
        const auto par = fit_all(block, threaded);
        for (std::size_t i = 0; i < base.size(); ++i) {
            CHECK(forecast(base[i], 12) == forecast(again[i], 12));
            CHECK(forecast(base[i], 12) == forecast(par[i], 12));
            CHECK(base[i].innovations == par[i].innovations);
            CHECK(base[i].meta == par[i].meta);
        }
    }
    SUBCASE("structural cost ordering") {
        CHECK(base[0].meta.fit_cost < base[2].meta.fit_cost);
        CHECK(base[0].meta.fit_cost < base[3].meta.fit_cost);
        for (std::size_t i : {0, 2, 3}) CHECK(base[1].meta.fit_cost > base[i].meta.fit_cost);
    }
}
