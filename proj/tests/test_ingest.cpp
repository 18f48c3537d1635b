#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>
#include <set>
#include <thread>

#include "eko/ingest.hpp"

using namespace eko;
using namespace eko::ingest;

namespace {

std::vector<RawRecord> random_records(std::size_t n, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::vector<RawRecord> out(n);
    std::uniform_int_distribution<std::int64_t> when(0, 400LL * 24 * 3600);
    std::uniform_int_distribution<int> kind(0, 7), node(1, 6), sensor(0, 4);
    std::normal_distribution<double> g(0.0, 1.0);
    for (auto& r : out) {
        r.timestamp = Timestamp::from_civil(2009, 1, 1) + when(rng);
        r.node_id = node(rng);
        r.sensor_id = sensor(rng);
        r.parameter = kAllKinds[kind(rng)];
        r.category = info(r.parameter).category;
        if (r.parameter == ParameterKind::LeWe && rng() % 2) r.category = Category::soil;
        const auto& p = info(r.parameter);
        // Mix awkward binary fractions with arbitrary magnitudes.
        r.value = p.range_min + (p.range_max - p.range_min) * std::uniform_real_distribution<double>(0, 1)(rng);
        if (rng() % 5 == 0) r.value = g(rng) * 1e-7;
        if (rng() % 7 == 0) r.value = std::nextafter(r.value, 1e300);
    }
    return out;
}

}  // namespace

TEST_CASE("parse_export examples") {
    const auto res = parse_export_text("2010-06-01T10:05:00Z,3,2,soil,Mo,120.0\n");
    REQUIRE(res.records.size() == 1);
    const auto& r = res.records[0];
    CHECK(r.node_id == 3);
    CHECK(r.sensor_id == 2);
    CHECK(r.parameter == ParameterKind::Mo);
    CHECK(r.value == 120.0);
    CHECK(r.timestamp == Timestamp::from_civil(2010, 6, 1, 10, 5, 0));

    const auto bad = parse_export_text(std::string(kCsvHeader) + "\n2010-06-01T10:05:00Z,9,2,soil,Mo,1\n");
    CHECK(bad.records.empty());
    REQUIRE(bad.rejected.size() == 1);
    CHECK(bad.rejected[0].reason == "node_id out of range");
    CHECK(bad.rejected[0].line_number == 2);

    const auto empty = parse_export_text("");
    CHECK(empty.records.empty());
    CHECK(empty.rejected.empty());
}

TEST_CASE("malformed lines are collected with line numbers") {
    const std::string text =
        "2010-06-01T10:05:00Z,3,2,soil,Mo,1\n"
        "2010-06-01T10:05:00,3,2,soil,Mo,1\n"
        "2010-06-01T10:05:00Z,3,2,soil,Hu,1\n"
        "2010-06-01T10:05:00Z,3,2,ambient,Te,abc\n"
        "2010-06-01T10:05:00Z,3,2,ambient,Te,21.5,extra\n"
        "\n"
        "2010-06-01T10:05:00Z,1,4,ambient,SoRa,nan\n"
        "2010-06-01T11:05:00Z,1,1,ambient,Te,21.5\n"
        "#END\n"
        "2010-06-01T12:05:00Z,1,1,ambient,Te,21.5\n";
    const auto res = parse_export_text(text);
    CHECK(res.saw_end_marker);
    REQUIRE(res.records.size() == 2);
    CHECK(res.records[1].parameter == ParameterKind::TeAmb);
    std::vector<std::size_t> lines;
    for (const auto& r : res.rejected) lines.push_back(r.line_number);
    CHECK(lines == std::vector<std::size_t>{2, 3, 4, 5, 6, 7});
    CHECK(res.rejected[1].reason == "unknown parameter");
}

TEST_CASE("serialize/parse round-trip on random records") {
    const auto records = random_records(10000, 42);
    const auto text = serialize(records);
    const auto back = parse_export_text(text);
    CHECK(back.rejected.empty());
    CHECK(back.records == records);
    // Re-serialising is byte-identical.
    CHECK(serialize(back.records) == text);
}

TEST_CASE("out_of_range flags catalogue violations") {
    std::vector<RawRecord> rs(3);
    rs[0].parameter = ParameterKind::Hu;
    rs[0].value = 150;
    rs[1].parameter = ParameterKind::Hu;
    rs[1].value = 100;
    rs[2].parameter = ParameterKind::DwPo;
    rs[2].value = -10.5;
    CHECK(out_of_range(rs) == std::vector<std::size_t>{0, 2});
}

TEST_CASE("evaluate_alerts") {
    RawRecord hu;
    hu.node_id = 1;
    hu.category = Category::ambient;
    hu.parameter = ParameterKind::Hu;
    hu.value = 95;
    const std::vector<AlertRule> high = {{"hu-high", 1, ParameterKind::Hu, std::nullopt, 90.0}};
    const auto ev = evaluate_alerts(high, std::span(&hu, 1));
    REQUIRE(ev.size() == 1);
    CHECK(ev[0].violated == Bound::high);
    CHECK(ev[0].observed == 95);

    RawRecord mo;
    mo.node_id = 2;
    mo.value = 10;
    const std::vector<AlertRule> low = {{"mo-low", 2, ParameterKind::Mo, 10.0, std::nullopt}};
    CHECK(evaluate_alerts(low, std::span(&mo, 1)).empty());

    const std::vector<AlertRule> invalid = {{"x", 1, ParameterKind::Mo, 5.0, 5.0}};
    CHECK_THROWS_AS(evaluate_alerts(invalid, std::span(&mo, 1)), ValidationError);

    SUBCASE("matches a brute-force double loop") {
        std::mt19937_64 rng(9);
        for (int rep = 0; rep < 20; ++rep) {
            auto records = random_records(1000, 100 + rep);
            std::vector<AlertRule> rules;
            for (int i = 0; i < 3; ++i) {
                AlertRule r;
                r.rule_id = "r" + std::to_string(i);
                r.node_id = 1 + int(rng() % 6);
                r.parameter = kAllKinds[rng() % 8];
                const auto& p = info(r.parameter);
                const double mid = 0.5 * (p.range_min + p.range_max), span = p.range_max - p.range_min;
                if (rng() % 3) r.low = mid - 0.3 * span;
                if (!r.low || rng() % 2) r.high = mid + 0.3 * span;
                rules.push_back(r);
            }
            const auto events = evaluate_alerts(rules, records);
            std::multiset<std::tuple<std::string, std::int64_t, double, int>> expected, got;
            for (const auto& rec : records)
                for (const auto& rule : rules) {
                    if (rule.node_id != rec.node_id || rule.parameter != rec.parameter) continue;
                    if (rule.low && rec.value < *rule.low)
                        expected.insert({rule.rule_id, rec.timestamp.seconds(), rec.value, 0});
                    if (rule.high && rec.value > *rule.high)
                        expected.insert({rule.rule_id, rec.timestamp.seconds(), rec.value, 1});
                }
            for (const auto& e : events)
                got.insert({e.rule_id, e.timestamp.seconds(), e.observed, e.violated == Bound::high});
            CHECK(got == expected);
            for (std::size_t i = 1; i < events.size(); ++i) CHECK(events[i - 1].timestamp <= events[i].timestamp);
        }
    }
}

TEST_CASE("group_blocks") {
    const auto topo = standard_topology();
    const auto grouping = standard_grouping();
    SUBCASE("selector semantics") {
        auto records = random_records(3000, 5);
        const std::vector<BlockSelector> one = {parse_block_code("N3-soil-Mo-Te-WaCo")};
        const auto g = group_blocks(records, topo, one);
        const auto& block = g.blocks.at("N3-soil-Mo-Te-WaCo");
        CHECK_FALSE(block.empty());
        for (const auto& r : block) {
            CHECK(r.node_id == 3);
            CHECK((r.parameter == ParameterKind::Mo || r.parameter == ParameterKind::TeSoil ||
                   r.parameter == ParameterKind::WaCo));
        }
        CHECK(block.size() + g.orphans.size() == records.size());
    }
    SUBCASE("30 groupings give 30 keyed sets; empty input gives empty sets") {
        const auto g = group_blocks({}, topo, grouping);
        CHECK(g.blocks.size() == 30);
        CHECK(g.codes.size() == 30);
        for (const auto& [code, recs] : g.blocks) CHECK(recs.empty());
        CHECK(g.orphans.empty());
    }
    SUBCASE("every record lands in each matching block or is an orphan") {
        const auto records = random_records(5000, 6);
        const auto g = group_blocks(records, topo, grouping);
        std::size_t expected_orphans = 0;
        for (const auto& r : records) {
            bool any = false;
            for (const auto& sel : grouping) any = any || selector_matches(sel, r);
            expected_orphans += !any;
        }
        CHECK(g.orphans.size() == expected_orphans);
    }
    SUBCASE("unknown node or parameter in grouping") {
        const std::vector<BlockSelector> bad = {parse_block_code("N4-soil-Mo-Te-LeWe")};
        CHECK_THROWS_AS(group_blocks({}, topo, bad), ValidationError);
        NetworkTopology small;
        small.nodes[1] = {{1, {ParameterKind::Mo}}};
        const std::vector<BlockSelector> other = {parse_block_code("N2-soil-Mo")};
        CHECK_THROWS_AS(group_blocks({}, small, other), ValidationError);
    }
}

TEST_CASE("generate_synthetic") {
    ScenarioSpec spec;
    spec.duration_hours = 24.0 * 20;
    auto te = default_recipe(Channel{1, 3, ParameterKind::TeAmb});
    auto hu = default_recipe(Channel{1, 3, ParameterKind::Hu});
    hu.diurnal_amplitude = 0.0;
    hu.noise_sd = 0.0;
    hu.drift_per_day = 0.0;
    spec.channels = {te, hu};

    SUBCASE("dropout 0 gives duration x rate records per channel") {
        const auto recs = generate_synthetic(spec, 1);
        CHECK(recs.size() == std::size_t(24 * 20 * 4 * 2));
    }
    SUBCASE("same seed gives byte-identical output, different seeds differ") {
        spec.dropout = 0.1;
        spec.jitter_seconds = 300;
        CHECK(serialize(generate_synthetic(spec, 7)) == serialize(generate_synthetic(spec, 7)));
        CHECK(serialize(generate_synthetic(spec, 7)) != serialize(generate_synthetic(spec, 8)));
    }
    SUBCASE("dropout rate within 20% relative") {
        spec.dropout = 0.1;
        const auto recs = generate_synthetic(spec, 3);
        const double expected = 0.9 * 24 * 20 * 4 * 2;
        CHECK(std::abs(double(recs.size()) - expected) < 0.2 * 0.1 * 24 * 20 * 4 * 2);
    }
    SUBCASE("coupling Te -> Hu, gain -0.5, lag 2 h: cross-correlation peaks at lag 2, negative") {
        spec.couplings = {{te.channel, hu.channel, -0.5, 2.0}};
        const auto recs = generate_synthetic(spec, 11);
        std::vector<double> x, y;
        for (const auto& r : recs) (r.parameter == ParameterKind::TeAmb ? x : y).push_back(r.value);
        REQUIRE(x.size() == y.size());
        const auto n = x.size();
        auto mean = [](const std::vector<double>& v) {
            double s = 0;
            for (double e : v) s += e;
            return s / double(v.size());
        };
        const double mx = mean(x), my = mean(y);
        int best_lag = -1;
        double best = 0.0, best_signed = 0.0;
        for (int lag_h = 0; lag_h <= 12; ++lag_h) {
            const std::size_t lag = std::size_t(lag_h) * 4;
            double sxy = 0, sxx = 0, syy = 0;
            for (std::size_t t = lag; t < n; ++t) {
                sxy += (y[t] - my) * (x[t - lag] - mx);
                sxx += (x[t - lag] - mx) * (x[t - lag] - mx);
                syy += (y[t] - my) * (y[t] - my);
            }
            const double c = sxy / std::sqrt(sxx * syy);
            if (std::abs(c) > best) {
                best = std::abs(c);
                best_signed = c;
                best_lag = lag_h;
            }
        }
        CHECK(best_lag == 2);
        CHECK(best_signed < 0.0);
    }
    SUBCASE("values respect the catalogue range") {
        const auto full = standard_scenario({.days = 10});
        for (const auto& r : generate_synthetic(full, 5))
            CHECK(validate_value(r.parameter, r.value) == ValueCheck::valid);
    }
    SUBCASE("timestamps are ordered per channel") {
        spec.jitter_seconds = 400;
        const auto recs = generate_synthetic(spec, 13);
        Timestamp last[2] = {Timestamp(-1LL << 40), Timestamp(-1LL << 40)};
        for (const auto& r : recs) {
            const int c = r.parameter == ParameterKind::TeAmb ? 0 : 1;
            CHECK(last[c] < r.timestamp);
            last[c] = r.timestamp;
        }
    }
    SUBCASE("invalid specs") {
        auto bad = spec;
        bad.dropout = 1.0;
        CHECK_THROWS_AS(generate_synthetic(bad, 1), ValidationError);
        bad = spec;
        bad.jitter_seconds = 450;
        CHECK_THROWS_AS(generate_synthetic(bad, 1), ValidationError);
        bad = spec;
        bad.samples_per_hour = 7;
        CHECK_THROWS_AS(generate_synthetic(bad, 1), ValidationError);
    }
    SUBCASE("standard scenario covers 33 channels") {
        CHECK(standard_scenario().channels.size() == 33);
        CHECK(standard_scenario().couplings.size() == 2);
    }
}

TEST_CASE("stream serve/consume over loopback") {
    const auto records = random_records(100, 77);
    SUBCASE("lossless transfer") {
        StreamServer server(records, "127.0.0.1", 0);
        const auto got = consume_stream("127.0.0.1", server.port());
        server.wait();
        CHECK_FALSE(got.truncated);
        CHECK(got.malformed == 0);
        CHECK(got.records == records);
    }
    SUBCASE("server closes after 40 of 100") {
        StreamServer server(records, "127.0.0.1", 0, {1, 40});
        const auto got = consume_stream("127.0.0.1", server.port());
        server.wait();
        CHECK(got.truncated);
        REQUIRE(got.records.size() == 40);
        CHECK(std::equal(got.records.begin(), got.records.end(), records.begin()));
    }
    SUBCASE("two clients each receive the full sequence") {
        StreamServer server(records, "127.0.0.1", 0, {2, std::nullopt});
        StreamResult a, b;
        std::thread ta([&] { a = consume_stream("127.0.0.1", server.port()); });
        std::thread tb([&] { b = consume_stream("127.0.0.1", server.port()); });
        ta.join();
        tb.join();
        server.wait();
        CHECK(a.records == records);
        CHECK(b.records == records);
        CHECK_FALSE(a.truncated);
        CHECK_FALSE(b.truncated);
    }
    SUBCASE("large stream") {
        const auto many = random_records(10000, 78);
        StreamServer server(many, "127.0.0.1", 0);
        const auto got = consume_stream("127.0.0.1", server.port());
        CHECK(got.records == many);
    }
    SUBCASE("unreachable endpoint") {
        std::uint16_t port = 0;
        {
            StreamServer probe({}, "127.0.0.1", 0);
            port = probe.port();
            probe.stop();
        }
        CHECK_THROWS_AS(consume_stream("127.0.0.1", port, 500), IoError);
    }
}
