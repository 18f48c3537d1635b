#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <map>
#include <random>
#include <set>
#include <sstream>

#include "eko/eval.hpp"
#include "test_support.hpp"

using namespace eko;
using namespace eko::eval;
using eko::predict::PredictorKind;
using eko::testing::simulate_arma;

namespace {

TimeSeries series_of(const std::vector<double>& v) {
    return TimeSeries::complete(Timestamp::from_civil(2010, 6, 1), 3 * 3600, v);
}

// Mo depends on lagged Te; WaCo and LeWe are independent.
DataBlock four_channel_block(std::size_t n, std::uint64_t seed, double scale = 1.0) {
    const auto te = simulate_arma({0.8}, {}, 1.0, n, seed * 5 + 1);
    const auto waco = simulate_arma({0.6}, {}, 1.0, n, seed * 5 + 2);
    const auto lewe = simulate_arma({0.3}, {0.4}, 2.0, n, seed * 5 + 3);
    auto mo = simulate_arma({0.5}, {}, 0.5, n, seed * 5 + 4);
    for (std::size_t t = 2; t < n; ++t) mo[t] += 1.5 * te[t - 2];
    auto shape = [&](std::vector<double> v, double offset) {
        for (auto& x : v) x = scale * (x + offset);
        return series_of(v);
    };
    return DataBlock("N1-soil-Mo-Te-WaCo-LeWe", {{make_channel(1, 1, ParameterKind::Mo), shape(mo, 60.0)},
                                                {make_channel(1, 1, ParameterKind::TeSoil), shape(te, 18.0)},
                                                {make_channel(1, 1, ParameterKind::WaCo), shape(waco, 30.0)},
                                                {make_channel(1, 2, ParameterKind::LeWe), shape(lewe, 250.0)}});
}

std::vector<Medal> medals_of(const ReportBundle& b) {
    std::vector<Medal> out;
    for (const auto& r : b.ranking)
        for (const auto& e : r.order) out.push_back(e.medal);
    return out;
}

std::vector<PredictorKind> order_of(const ReportBundle& b) {
    std::vector<PredictorKind> out;
    for (const auto& r : b.ranking)
        for (const auto& e : r.order) out.push_back(e.predictor);
    return out;
}

std::filesystem::path fresh_dir(const std::string& name) {
    const auto dir = std::filesystem::temp_directory_path() / ("eko_test_eval_" + name);
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

ChannelReport scored(PredictorKind p, double pq, std::size_t cost = 10) {
    ChannelReport c;
    c.channel = "Mo";
    c.predictor = p;
    c.pq.value = pq;
    c.fit_cost = cost;
    return c;
}

}  // namespace

TEST_CASE("prediction quality examples") {
    const std::vector<double> actual{1.0, 2.0, 3.0, 4.0};
    const std::vector<double> zeros(4, 0.0);

    SUBCASE("exact forecast with zero tube scores 100") {
        const auto s = prediction_quality(actual, actual, zeros, 1.0);
        CHECK(s.value == 100.0);
        CHECK(s.accuracy == 1.0);
        CHECK(s.tightness == 1.0);
    }
    SUBCASE("rmse equal to sigma scores 0 whatever the tube") {
        std::vector<double> off(actual);
        for (auto& v : off) v += 2.0;
        CHECK(prediction_quality(actual, off, zeros, 2.0).value == 0.0);
        CHECK(prediction_quality(actual, off, std::vector<double>(4, 0.1), 2.0).value == 0.0);
    }
    SUBCASE("half-sigma error and two-sigma tube give 25") {
        // Alternating errors of +/-1 have rmse 1; sigma 2; mean radius 4.
        const std::vector<double> pred{2.0, 1.0, 4.0, 3.0};
        const std::vector<double> radii{3.0, 4.0, 4.0, 5.0};
        const auto s = prediction_quality(actual, pred, radii, 2.0);
        CHECK(s.accuracy == doctest::Approx(0.5).epsilon(1e-15));
        CHECK(s.tightness == doctest::Approx(0.5).epsilon(1e-15));
        CHECK(s.value == doctest::Approx(25.0).epsilon(1e-13));
    }
    SUBCASE("preconditions") {
        CHECK_THROWS_AS(prediction_quality(actual, std::vector<double>(3, 0.0), zeros, 1.0), ValidationError);
        CHECK_THROWS_AS(prediction_quality(actual, actual, std::vector<double>(5, 0.0), 1.0), ValidationError);
        CHECK_THROWS_AS(prediction_quality(actual, actual, zeros, 0.0), ValidationError);
        CHECK_THROWS_AS(prediction_quality(std::vector<double>{}, std::vector<double>{}, std::vector<double>{}, 1.0),
                        ValidationError);
    }
    SUBCASE("forecast overload uses the forecast values and radii") {
        predict::Forecast fc;
        fc.values = {2.0, 1.0, 4.0, 3.0};
        fc.radii = {3.0, 4.0, 4.0, 5.0};
        CHECK(prediction_quality(actual, fc, 2.0).value == doctest::Approx(25.0).epsilon(1e-13));
    }
}

TEST_CASE("prediction quality properties") {
    std::mt19937_64 rng(5);
    std::normal_distribution<double> g(0.0, 1.0);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int trial = 0; trial < 500; ++trial) {
        const std::size_t h = 4 + trial % 20;
        const double sigma = 0.1 + 5.0 * u(rng);
        std::vector<double> actual(h), err(h), radii(h);
        for (std::size_t k = 0; k < h; ++k) {
            actual[k] = 10.0 * g(rng);
            err[k] = sigma * 0.3 * g(rng);
            radii[k] = sigma * 2.0 * u(rng);
        }
        auto pred_with = [&](double f) {
            std::vector<double> p(h);
            for (std::size_t k = 0; k < h; ++k) p[k] = actual[k] + f * err[k];
            return p;
        };
        auto widened = [&](double f) {
            auto r = radii;
            for (auto& v : r) v *= f;
            return r;
        };
        const auto base = prediction_quality(actual, pred_with(1.0), radii, sigma);
        REQUIRE(base.value >= 0.0);
        REQUIRE(base.value <= 100.0);
        CHECK(base.value == doctest::Approx(100.0 * base.accuracy * base.tightness).epsilon(1e-14));

        const auto worse_error = prediction_quality(actual, pred_with(1.5), radii, sigma);
        if (base.accuracy > 0.0 && base.tightness > 0.0) CHECK(worse_error.value < base.value);
        else CHECK(worse_error.value <= base.value);

        const auto wider = prediction_quality(actual, pred_with(1.0), widened(1.3), sigma);
        if (base.accuracy > 0.0 && base.tightness > 0.0) CHECK(wider.value < base.value);
        else CHECK(wider.value <= base.value);

        // Scale invariance of the score itself.
        std::vector<double> sa(actual), sp = pred_with(1.0), sr(radii);
        for (std::size_t k = 0; k < h; ++k) {
            sa[k] *= 3.7;
            sp[k] *= 3.7;
            sr[k] *= 3.7;
        }
        CHECK(prediction_quality(sa, sp, sr, 3.7 * sigma).value == doctest::Approx(base.value).epsilon(1e-12));
    }
}

TEST_CASE("rank_channel") {
    SUBCASE("descending score, medals to the top three") {
        const std::vector<ChannelReport> cells{scored(PredictorKind::parma, 40.0), scored(PredictorKind::parmax, 70.0),
                                               scored(PredictorKind::karma, 10.0),
                                               scored(PredictorKind::forwaver, 55.0)};
        const auto r = rank_channel(cells);
        CHECK(r.channel == "Mo");
        REQUIRE(r.order.size() == 4);
        CHECK(r.order[0].predictor == PredictorKind::parmax);
        CHECK(r.order[0].medal == Medal::gold);
        CHECK(r.order[1].predictor == PredictorKind::forwaver);
        CHECK(r.order[1].medal == Medal::silver);
        CHECK(r.order[2].predictor == PredictorKind::parma);
        CHECK(r.order[2].medal == Medal::bronze);
        CHECK(r.order[3].medal == Medal::none);
        CHECK(r.order[3].pq == 10.0);
    }
    SUBCASE("ties go to the cheaper fit, then the name") {
        const std::vector<ChannelReport> cells{scored(PredictorKind::karma, 50.0, 48),
                                               scored(PredictorKind::parma, 50.0 + 1e-11, 34),
                                               scored(PredictorKind::forwaver, 50.0, 34)};
        const auto r = rank_channel(cells);
        CHECK(r.order[0].predictor == PredictorKind::forwaver);
        CHECK(r.order[1].predictor == PredictorKind::parma);
        CHECK(r.order[2].predictor == PredictorKind::karma);
    }
    SUBCASE("failed cells rank last without a medal") {
        auto failed = scored(PredictorKind::parma, 99.0);
        failed.failure = "boom";
        const std::vector<ChannelReport> cells{failed, scored(PredictorKind::karma, 1.0)};
        const auto r = rank_channel(cells);
        CHECK(r.order[0].predictor == PredictorKind::karma);
        CHECK(r.order[0].medal == Medal::gold);
        CHECK(r.order[1].medal == Medal::none);
        CHECK_FALSE(r.order[1].pq.has_value());
    }
    SUBCASE("rank order does not depend on input order") {
        std::vector<ChannelReport> cells{scored(PredictorKind::parma, 20.0, 5), scored(PredictorKind::parmax, 20.0, 5),
                                         scored(PredictorKind::karma, 30.0), scored(PredictorKind::forwaver, 20.0, 3)};
        const auto ref = rank_channel(cells);
        std::sort(cells.begin(), cells.end(),
                  [](const ChannelReport& a, const ChannelReport& b) { return a.predictor > b.predictor; });
        CHECK(rank_channel(cells) == ref);
    }
}

TEST_CASE("compare") {
    const auto block = four_channel_block(320, 3);
    CompareConfig cfg;
    cfg.horizon = 12;
    const auto b = compare(block, cfg);

    SUBCASE("four channels by four predictors give sixteen reports") {
        CHECK(b.cells.size() == 16);
        CHECK(b.ranking.size() == 4);
        CHECK(b.block_code == block.code());
        CHECK(b.n == 320);
        CHECK(b.horizon == 12);
        CHECK(b.start == block.start());
        CHECK(b.step_seconds == block.step());
        std::set<std::pair<std::string, PredictorKind>> seen;
        for (const auto& c : b.cells) {
            CHECK(c.ok());
            seen.insert({c.channel, c.predictor});
            CHECK(c.series.size() == 308);
            CHECK(c.trend_values.size() == 308);
            CHECK(c.innovations.size() == 308);
            CHECK(c.actual.size() == 12);
            CHECK(c.forecast.values.size() == 12);
            CHECK(c.forecast.radii.size() == 12);
            CHECK(c.forecast.start == block.start() + 308 * block.step());
            CHECK(c.pq.value >= 0.0);
            CHECK(c.pq.value <= 100.0);
            CHECK_FALSE(c.fit_ms.has_value());
            CHECK(c.fit_cost > 0);
        }
        CHECK(seen.size() == 16);
        for (const auto& r : b.ranking) {
            std::size_t medals = 0;
            for (const auto& e : r.order) medals += e.medal != Medal::none;
            CHECK(medals == 3);
        }
    }
    SUBCASE("withheld window is the tail of the block") {
        const auto mo = block.series(0).values();
        for (std::size_t k = 0; k < 12; ++k) CHECK(b.cells[0].actual[k] == mo[308 + k]);
    }
    SUBCASE("scores are recomputable from the stored forecast") {
        for (const auto& c : b.cells) {
            const double sigma = standard_deviation(c.series);
            CHECK(prediction_quality(c.actual, c.forecast, sigma).value == c.pq.value);
        }
    }
    SUBCASE("single predictor gets gold on every channel") {
        CompareConfig one = cfg;
        one.predictors = {PredictorKind::forwaver};
        const auto b1 = compare(block, one);
        CHECK(b1.cells.size() == 4);
        for (const auto& r : b1.ranking) {
            REQUIRE(r.order.size() == 1);
            CHECK(r.order[0].medal == Medal::gold);
        }
    }
    SUBCASE("timing is recorded only when requested") {
        CompareConfig timed = cfg;
        timed.predictors = {PredictorKind::parma};
        timed.timing = true;
        for (const auto& c : compare(block, timed).cells) {
            REQUIRE(c.fit_ms.has_value());
            CHECK(*c.fit_ms >= 0.0);
        }
    }
    SUBCASE("identical bundles for any worker count") {
        CompareConfig par = cfg;
        par.workers = 3;
        CHECK(compare(block, par) == b);
        par.workers = 16;
        CHECK(compare(block, par) == b);
    }
    SUBCASE("medals survive rescaling the data") {
        const auto scaled = compare(four_channel_block(320, 3, 6.5), cfg);
        CHECK(medals_of(scaled) == medals_of(b));
        CHECK(order_of(scaled) == order_of(b));
    }
}

TEST_CASE("compare records per-cell failures") {
    auto base = four_channel_block(200, 9);
    std::vector<DataBlock::Member> m = base.members();
    // A constant channel has zero spread: every cell on it fails to score.
    m[3].series = series_of(std::vector<double>(200, 250.0));
    const DataBlock block(base.code(), m);
    const auto b = compare(block);
    REQUIRE(b.cells.size() == 16);
    for (std::size_t i = 0; i < 12; ++i) CHECK(b.cells[i].ok());
    for (std::size_t i = 12; i < 16; ++i) {
        CHECK_FALSE(b.cells[i].ok());
        CHECK(b.cells[i].failure.find("standard deviation") != std::string::npos);
    }
    for (const auto& e : b.ranking[3].order) {
        CHECK(e.medal == Medal::none);
        CHECK_FALSE(e.pq.has_value());
    }
    CHECK(b.ranking[0].order[0].medal == Medal::gold);
}

TEST_CASE("compare preconditions") {
    const auto block = four_channel_block(70, 1);
    CompareConfig cfg;
    CHECK_THROWS_AS(compare(block, cfg), ValidationError);  // 70 < 60 + 12
    cfg.horizon = 3;
    CHECK_THROWS_AS(compare(four_channel_block(200, 1), cfg), ValidationError);
    cfg.horizon = 12;
    cfg.predictors = {};
    CHECK_THROWS_AS(compare(four_channel_block(200, 1), cfg), ValidationError);
    cfg.predictors = {PredictorKind::parma, PredictorKind::parma};
    CHECK_THROWS_AS(compare(four_channel_block(200, 1), cfg), ValidationError);
    cfg.predictors = {PredictorKind::parma};
    cfg.horizon = 57;
    CHECK_THROWS_AS(compare(four_channel_block(200, 1), cfg), ValidationError);
}

TEST_CASE("medal_table") {
    auto ranking = [](std::vector<PredictorKind> order) {
        ChannelRanking r;
        const Medal m[] = {Medal::gold, Medal::silver, Medal::bronze, Medal::none};
        for (std::size_t i = 0; i < order.size(); ++i) r.order.push_back({order[i], 50.0 - double(i), m[std::min<std::size_t>(i, 3)]});
        return r;
    };
    using K = PredictorKind;

    SUBCASE("six channels with FORWAVER best on four") {
        const std::vector<ChannelRanking> rs{
            ranking({K::forwaver, K::parmax, K::parma, K::karma}), ranking({K::forwaver, K::parma, K::parmax, K::karma}),
            ranking({K::forwaver, K::parmax, K::parma, K::karma}), ranking({K::forwaver, K::parma, K::karma, K::parmax}),
            ranking({K::parmax, K::forwaver, K::parma, K::karma}), ranking({K::parmax, K::parma, K::forwaver, K::karma})};
        const auto table = medal_table(rs);
        std::map<K, MedalRow> by;
        for (const auto& row : table) by[row.predictor] = row;
        CHECK(by[K::forwaver].gold == 4);
        CHECK(by[K::parmax].gold == 2);
        CHECK(by[K::parma].gold == 0);
        CHECK(by[K::karma].bronze == 1);
        for (const auto& row : table) CHECK(row.cells == 6);
    }
    SUBCASE("counts equal a brute-force recount") {
        std::mt19937_64 rng(17);
        for (int trial = 0; trial < 50; ++trial) {
            std::vector<ChannelRanking> rs;
            const std::size_t channels = 1 + rng() % 40;
            for (std::size_t c = 0; c < channels; ++c) {
                std::vector<K> order(std::begin(predict::kAllPredictors), std::end(predict::kAllPredictors));
                std::shuffle(order.begin(), order.end(), rng);
                order.resize(1 + rng() % 4);
                rs.push_back(ranking(order));
            }
            std::map<std::pair<K, Medal>, std::size_t> oracle;
            for (const auto& r : rs)
                for (const auto& e : r.order) ++oracle[{e.predictor, e.medal}];
            for (const auto& row : medal_table(rs)) {
                CHECK(row.gold == oracle[{row.predictor, Medal::gold}]);
                CHECK(row.silver == oracle[{row.predictor, Medal::silver}]);
                CHECK(row.bronze == oracle[{row.predictor, Medal::bronze}]);
            }
        }
    }
    SUBCASE("no rankings is an error") {
        CHECK_THROWS_AS(medal_table(std::span<const ChannelRanking>{}), ValidationError);
        CHECK_THROWS_AS(medal_table(std::span<const ReportBundle>{}), ValidationError);
    }
    SUBCASE("bundle table carries mean fit cost and time") {
        CompareConfig cfg;
        cfg.predictors = {K::parma, K::forwaver};
        cfg.timing = true;
        const std::vector<ReportBundle> bundles{compare(four_channel_block(200, 2), cfg),
                                                compare(four_channel_block(200, 4), cfg)};
        for (const auto& row : medal_table(bundles)) {
            CHECK(row.cells == 8);
            CHECK(row.gold + row.silver == 8);
            REQUIRE(row.mean_fit_ms.has_value());
            double cost = 0.0;
            for (const auto& b : bundles)
                for (const auto& c : b.cells)
                    if (c.predictor == row.predictor) cost += double(c.fit_cost);
            CHECK(row.mean_fit_cost == doctest::Approx(cost / 8.0));
        }
    }
}

TEST_CASE("report artifacts") {
    CompareConfig cfg;
    cfg.timing = true;
    auto b = compare(four_channel_block(240, 6), cfg);
    b.cells[5].failure = "synthetic failure";
    b.ranking[1] = rank_channel(std::span(b.cells).subspan(4, 4));

    SUBCASE("json round trip") {
        const auto text = to_json(b);
        CHECK(parse_json(text) == b);
        CHECK(to_json(parse_json(text)) == text);
        CHECK(text.find("\"block_code\"") != std::string::npos);
        CHECK(text.find("\"grid\"") != std::string::npos);
        CHECK(text.find("\"tightness\"") != std::string::npos);
        CHECK_THROWS_AS(parse_json("{\"block_code\": 3}"), ValidationError);
        CHECK_THROWS_AS(parse_json("not json"), ValidationError);
    }
    SUBCASE("csv has one row per channel, predictor and step") {
        const auto csv = to_csv(b);
        std::istringstream in(csv);
        std::string line;
        std::getline(in, line);
        CHECK(line == kCsvHeader);
        std::size_t rows = 0, empty_pred = 0;
        while (std::getline(in, line)) {
            ++rows;
            if (line.find(",Te_soil,PARMAX,") != std::string::npos && line.ends_with(",,")) ++empty_pred;
        }
        CHECK(rows == 4 * 4 * 12);
        CHECK(empty_pred == 12);
        CHECK(to_csv(b, false).size() == csv.size() - kCsvHeader.size() - 1);
    }
    SUBCASE("svg: one chart per cell plus a ranking summary") {
        const auto dir = fresh_dir("svg");
        const auto files = emit_report(b, ReportFormat::svg, dir);
        CHECK(files.size() == 17);
        std::set<std::string> names;
        for (const auto& entry : std::filesystem::directory_iterator(dir)) names.insert(entry.path().filename().string());
        CHECK(names.size() == 17);
        CHECK(names.count(b.block_code + "__ranking.svg") == 1);
        CHECK(names.count(chart_name(b.block_code, "Mo", PredictorKind::forwaver)) == 1);
        CHECK(chart_name("N1-soil-Mo-Te", "Te_soil", PredictorKind::parmax) == "N1-soil-Mo-Te__Te_soil__PARMAX.svg");
        std::ifstream f(dir / chart_name(b.block_code, "Mo", PredictorKind::parma));
        std::stringstream s;
        s << f.rdbuf();
        CHECK(s.str().starts_with("<svg"));
        CHECK(s.str().find("polygon") != std::string::npos);
        // Re-emitting yields the same bytes.
        const auto again = fresh_dir("svg2");
        emit_report(b, ReportFormat::svg, again);
        for (const auto& n : names) {
            std::ifstream a(dir / n), c(again / n);
            std::stringstream sa, sc;
            sa << a.rdbuf();
            sc << c.rdbuf();
            CHECK(sa.str() == sc.str());
        }
    }
    SUBCASE("json and csv files") {
        const auto dir = fresh_dir("files");
        CHECK(emit_report(b, ReportFormat::json, dir).size() == 1);
        CHECK(emit_report(b, ReportFormat::csv, dir).size() == 1);
        CHECK(std::filesystem::exists(dir / (b.block_code + ".json")));
        CHECK(std::filesystem::exists(dir / (b.block_code + ".csv")));
    }
    SUBCASE("unwritable destination") {
        const auto dir = fresh_dir("blocked");
        const auto file = dir / "not_a_dir";
        std::ofstream(file) << "x";
        CHECK_THROWS_AS(emit_report(b, ReportFormat::json, file), IoError);
    }
    SUBCASE("format names") {
        CHECK(report_format_from_string("svg") == ReportFormat::svg);
        CHECK(report_format_from_string("json") == ReportFormat::json);
        CHECK_THROWS_AS(report_format_from_string("png"), ValidationError);
    }
}
