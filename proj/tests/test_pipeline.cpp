#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <algorithm>
#include <fstream>

#include "eko/pipeline.hpp"

using namespace eko;
using namespace eko::pipeline;

TEST_CASE("settings parser") {
    SUBCASE("empty text gives the defaults") {
        const auto s = parse_settings("");
        CHECK(s.seed == 7);
        CHECK_FALSE(s.workers.has_value());
        CHECK(s.grouping.size() == 30);
        CHECK(s.compare.horizon == 12);
        CHECK(s.scenario.coupled_nodes == std::vector<int>{5, 6});
    }
    SUBCASE("values, comments and quotes") {
        const auto s = parse_settings(R"(
# run settings
seed = 42
workers = 3            # trailing comment
scenario.days = 30.5
scenario.outages = off
compare.predictors = "PARMA, FORWAVER"
compare.horizon = 6
parmax.nk = 2..3
karma.n = 4
forwaver.levels = 2
grouping = N1-soil-Mo-Te-WaCo N2-ambient-Hu-Te-DwPo
)");
        CHECK(s.seed == 42);
        CHECK(s.worker_count() == 3);
        CHECK(s.scenario.days == 30.5);
        CHECK_FALSE(s.scenario.outages);
        CHECK(s.compare.predictors ==
              std::vector<predict::PredictorKind>{predict::PredictorKind::parma, predict::PredictorKind::forwaver});
        CHECK(s.compare.horizon == 6);
        CHECK(s.compare.predictor.armax_nk.lo == 2);
        CHECK(s.compare.predictor.armax_nk.hi == 3);
        CHECK(s.compare.predictor.karma_n.lo == 4);
        CHECK(s.compare.predictor.karma_n.hi == 4);
        CHECK(s.compare.predictor.wavelet_levels == 2);
        REQUIRE(s.grouping.size() == 2);
        CHECK(block_code(s.grouping[1]) == "N2-ambient-Hu-Te-DwPo");
    }
    SUBCASE("topology keys replace the network") {
        const auto s = parse_settings(R"(
topology.node.1 = 1:Mo,Te_soil,WaCo 2:LeWe
topology.node.2 = 1:Hu,Te_amb,DwPo
scenario.coupled_nodes = 1
grouping = N1-soil-Mo-Te-WaCo
)");
        CHECK(s.topology.nodes.size() == 2);
        CHECK(s.topology.sensor_for(1, ParameterKind::LeWe) == 2);
        const auto spec = scenario(s);
        CHECK(spec.channels.size() == 7);
        REQUIRE(spec.couplings.size() == 1);
        CHECK(spec.couplings[0].target.node_id == 1);
    }
    SUBCASE("rejections") {
        CHECK_THROWS_WITH_AS(parse_settings("sed = 1"), doctest::Contains("unknown key 'sed'"), ValidationError);
        CHECK_THROWS_WITH_AS(parse_settings("seed = 1\nseed = 2"), doctest::Contains("line 2"), ValidationError);
        CHECK_THROWS_AS(parse_settings("[compare]"), ValidationError);
        CHECK_THROWS_AS(parse_settings("seed"), ValidationError);
        CHECK_THROWS_AS(parse_settings("seed = -1"), ValidationError);
        CHECK_THROWS_AS(parse_settings("workers = 0"), ValidationError);
        CHECK_THROWS_AS(parse_settings("scenario.dropout = 1.5"), ValidationError);
        CHECK_THROWS_AS(parse_settings("scenario.outages = maybe"), ValidationError);
        CHECK_THROWS_AS(parse_settings("parmax.nk = 3..1"), ValidationError);
        CHECK_THROWS_AS(parse_settings("compare.predictors = ARIMA"), ValidationError);
        CHECK_THROWS_AS(parse_settings("compare.horizon = 0"), ValidationError);
        CHECK_THROWS_AS(parse_settings("grouping = N1-soil-Mo-Te-WaCo N1-soil-Mo-Te-WaCo"), ValidationError);
        CHECK_THROWS_AS(parse_settings("topology.node.1 = 1:Mo,Te_soil\ngrouping = N1-soil-Mo-Te-WaCo"), ValidationError);
        CHECK_THROWS_AS(parse_settings("topology.node.1 = 1:Foo"), ValidationError);
        CHECK_THROWS_AS(parse_settings("scenario.coupled_nodes = 9"), ValidationError);
    }
    SUBCASE("every documented key parses") {
        CHECK(settings_keys().size() > 30);
        CHECK(settings_keys().back() == "topology.node.<id>");
    }
    SUBCASE("missing file") {
        CHECK_THROWS_AS(load_settings("/nonexistent/eko.conf"), IoError);
    }
}

TEST_CASE("block file round trip") {
    const auto start = Timestamp::from_civil(2010, 6, 1, 3);
    const std::vector<double> mo{0.1, 1.0 / 3.0, 1e-300}, te{-4.5, 17.25, 3e8}, wc{12.0, 0.0, -0.0};
    const DataBlock b("N3-soil-Mo-Te-WaCo",
                      {{make_channel(3, 1, ParameterKind::Mo), TimeSeries::complete(start, 10800, mo)},
                       {make_channel(3, 1, ParameterKind::TeSoil), TimeSeries::complete(start, 10800, te)},
                       {make_channel(3, 1, ParameterKind::WaCo), TimeSeries::complete(start, 10800, wc)}});
    const auto text = block_to_json(b);
    const auto back = block_from_json(text);
    CHECK(back == b);
    CHECK(block_to_json(back) == text);
    CHECK_THROWS_AS(block_from_json("{}"), ValidationError);
    CHECK_THROWS_AS(block_from_json("[1,2"), ValidationError);
}

TEST_CASE("simulated standard blocks") {
    Settings s;
    s.workers = 1;
    const auto blocks = simulate_blocks(s);
    REQUIRE(blocks.size() == 30);
    for (std::size_t i = 0; i < blocks.size(); ++i) {
        CHECK(blocks[i].code() == block_code(s.grouping[i]));
        CHECK(blocks[i].step() == 3 * 3600);
        CHECK(blocks[i].length() == 480);
        for (std::size_t c = 0; c < blocks[i].size(); ++c) CHECK(blocks[i].series(c).missing_count() == 0);
    }
    s.workers = 4;
    CHECK(simulate_blocks(s) == blocks);
    s.seed = 8;
    CHECK_FALSE(simulate_blocks(s) == blocks);
}

TEST_CASE("medal table text") {
    const std::vector<eval::MedalRow> rows{{predict::PredictorKind::parma, 3, 1, 0, 4, std::nullopt, 12.5},
                                           {predict::PredictorKind::forwaver, 1, 3, 0, 4, 1.25, 20.0}};
    const auto text = format_medal_table(rows);
    CHECK(text.find("PARMA") != std::string::npos);
    CHECK(text.find("1.25") != std::string::npos);
    CHECK(std::count(text.begin(), text.end(), '\n') == 3);
}
