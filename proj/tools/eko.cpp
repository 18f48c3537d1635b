// eko: command-line driver for the monitoring and forecasting pipeline.
//
//   simulate -> raw.csv -> ingest -> per-block record files -> preprocess ->
//   block JSON -> forecast / compare -> report bundles -> report (json|csv|svg)
//
// Exit status: 0 success, 1 invalid input or usage, 2 runtime failure.

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "eko/parallel.hpp"
#include "eko/pipeline.hpp"

namespace fs = std::filesystem;
using namespace eko;

namespace {

struct Common {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> workers;
    std::string out;
};

// Each subcommand owns its flags, so defaults such as --out stay per command.
Common& add_common(std::map<CLI::App*, Common>& all, CLI::App& sub, const std::string& default_out,
                   const std::string& out_help) {
    Common& c = all[&sub];
    sub.add_option("--config", c.config, "Settings file (key = value lines)")->check(CLI::ExistingFile);
    sub.add_option("--seed", c.seed, "Random seed; overrides the config");
    sub.add_option("--workers", c.workers, "Worker threads; overrides the config (default: all cores)")
        ->check(CLI::PositiveNumber);
    c.out = default_out;
    sub.add_option("--out", c.out, out_help)->capture_default_str();
    return c;
}

pipeline::Settings settings(const Common& c) {
    auto s = c.config.empty() ? pipeline::parse_settings("") : pipeline::load_settings(c.config);
    if (c.seed) s.seed = *c.seed;
    if (c.workers) s.workers = *c.workers;
    s.validate();
    return s;
}

std::string read_file(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) throw IoError("cannot read " + p.string());
    std::stringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

void write_file(const fs::path& p, const std::string& text) {
    if (p.has_parent_path()) fs::create_directories(p.parent_path());
    std::ofstream out(p, std::ios::binary);
    out << text;
    if (!out) throw IoError("cannot write " + p.string());
}

fs::path ensure_dir(const std::string& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec || !fs::is_directory(dir)) throw IoError("cannot create directory " + dir);
    return dir;
}

std::vector<ingest::RawRecord> read_records(const fs::path& p) {
    auto parsed = ingest::read_export_file(p.string());
    if (!parsed.rejected.empty()) {
        const auto& r = parsed.rejected.front();
        std::fprintf(stderr, "%s: %zu malformed line(s) skipped; first at line %zu: %s\n", p.string().c_str(),
                     parsed.rejected.size(), r.line_number, r.reason.c_str());
    }
    return std::move(parsed.records);
}

// Blocks named on the command line, in config order; all when none are named.
std::vector<BlockSelector> select_blocks(const pipeline::Settings& s, const std::vector<std::string>& codes) {
    if (codes.empty()) return s.grouping;
    std::vector<BlockSelector> out;
    for (const auto& code : codes) {
        const auto it = std::find_if(s.grouping.begin(), s.grouping.end(),
                                     [&](const BlockSelector& b) { return block_code(b) == code; });
        if (it == s.grouping.end()) throw ValidationError("unknown block code '" + code + "'");
        out.push_back(*it);
    }
    return out;
}

// Block JSON files from `dir`, or a fresh simulation when dir is empty.
std::vector<DataBlock> load_blocks(const pipeline::Settings& s, const std::string& dir,
                                   const std::vector<BlockSelector>& wanted) {
    std::vector<DataBlock> blocks;
    if (dir.empty()) {
        auto settings = s;
        settings.grouping = wanted;
        return pipeline::simulate_blocks(settings);
    }
    for (const auto& sel : wanted) {
        const auto code = block_code(sel);
        auto b = pipeline::block_from_json(read_file(fs::path(dir) / (code + ".json")));
        if (b.code() != code) throw ValidationError("block file " + code + ".json holds block " + b.code());
        blocks.push_back(std::move(b));
    }
    return blocks;
}

// ---------------------------------------------------------------------------

int run_simulate(const Common& c) {
    const auto s = settings(c);
    const auto records = ingest::generate_synthetic(pipeline::scenario(s), s.seed);
    ingest::write_export_file(c.out, records);
    std::printf("wrote %zu records to %s\n", records.size(), c.out.c_str());
    return 0;
}

int run_ingest(const Common& c, const std::string& in) {
    const auto s = settings(c);
    const auto records = read_records(in);
    const auto grouped = ingest::group_blocks(records, s.topology, s.grouping);
    const auto dir = ensure_dir(c.out);
    for (const auto& code : grouped.codes) {
        const auto& recs = grouped.blocks.at(code);
        write_file(dir / (code + ".csv"), ingest::serialize(recs));
        std::printf("%-28s %7zu records\n", code.c_str(), recs.size());
    }
    if (!grouped.orphans.empty()) {
        write_file(dir / "orphans.csv", ingest::serialize(grouped.orphans));
        std::printf("%-28s %7zu records\n", "orphans", grouped.orphans.size());
    }
    return 0;
}

int run_preprocess(const Common& c, const std::string& in) {
    const auto s = settings(c);
    const auto dir = ensure_dir(c.out);
    std::vector<std::optional<preprocess::BlockAssembly>> done(s.grouping.size());
    std::vector<std::string> failures(s.grouping.size());
    std::vector<std::vector<ingest::RawRecord>> inputs;
    for (const auto& sel : s.grouping) inputs.push_back(read_records(fs::path(in) / (block_code(sel) + ".csv")));
    parallel_for(s.grouping.size(), s.worker_count(), [&](std::size_t i) {
        try {
            const auto samples = pipeline::channel_samples(s.grouping[i], inputs[i], s.topology);
            done[i] = preprocess::assemble_block(block_code(s.grouping[i]), samples, s.preprocess);
        } catch (const std::exception& e) {
            failures[i] = e.what();
        }
    });
    int status = 0;
    for (std::size_t i = 0; i < done.size(); ++i) {
        const auto code = block_code(s.grouping[i]);
        if (!done[i]) {
            std::fprintf(stderr, "%s: %s\n", code.c_str(), failures[i].c_str());
            status = 2;
            continue;
        }
        const auto& a = *done[i];
        write_file(dir / (code + ".json"), pipeline::block_to_json(a.block));
        std::size_t iso = 0, ext = 0, lost = 0, spikes = 0;
        for (const auto& [name, r] : a.channel_reports) {
            iso += r.isolated;
            ext += r.extended;
            lost += r.unrecoverable;
            spikes += r.spikes.size();
        }
        std::printf("%-28s n=%-4zu kept %zu/%zu h  gaps: %zu linear %zu ar %zu lost  spikes %zu\n", code.c_str(),
                    a.block.length(), a.window_length, a.hourly_length, iso, ext, lost, spikes);
    }
    return status;
}

int run_forecast(const Common& c, const std::string& in, const std::vector<std::string>& codes,
                 const std::string& predictor, std::optional<std::size_t> horizon) {
    auto s = settings(c);
    const auto kind = predict::predictor_from_string(predictor);
    const std::size_t h = horizon.value_or(s.compare.horizon);
    if (h > s.compare.predictor.max_horizon)
        throw ValidationError("horizon " + std::to_string(h) + " exceeds predict.max_horizon");
    const auto blocks = load_blocks(s, in, select_blocks(s, codes));
    const auto dir = ensure_dir(c.out);
    const auto& cfg = s.compare.predictor;

    std::vector<std::string> files(blocks.size()), lines(blocks.size()), errors(blocks.size());
    parallel_for(blocks.size(), s.worker_count(), [&](std::size_t i) {
        const auto& b = blocks[i];
        nlohmann::ordered_json j;
        j["block_code"] = b.code();
        j["predictor"] = predict::to_string(kind);
        j["horizon"] = h;
        auto chans = nlohmann::ordered_json::array();
        std::string summary;
        for (std::size_t t = 0; t < b.size(); ++t) {
            const auto name = std::string(info(b.channel(t).parameter).id);
            nlohmann::ordered_json cj{{"channel", name}};
            try {
                const auto fp = predict::fit_predictor(kind, b, t, cfg);
                const auto fc = predict::forecast(fp, h, cfg);
                cj["start"] = fc.start.iso8601();
                cj["step_seconds"] = fc.step;
                cj["level"] = fc.level;
                cj["values"] = fc.values;
                cj["radii"] = fc.radii;
                cj["na"] = fp.meta.orders.na;
                cj["nc"] = fp.meta.orders.nc;
                char buf[96];
                std::snprintf(buf, sizeof buf, " %s=%.4g+-%.3g", name.c_str(), fc.values.back(), fc.radii.back());
                summary += buf;
            } catch (const std::exception& e) {
                cj["failure"] = e.what();
                summary += " " + name + "=failed";
            }
            chans.push_back(std::move(cj));
        }
        j["channels"] = std::move(chans);
        files[i] = j.dump(1) + "\n";
        lines[i] = b.code() + " " + std::string(predict::to_string(kind)) + " h=" + std::to_string(h) + summary;
    });
    for (std::size_t i = 0; i < blocks.size(); ++i) {
        write_file(dir / (blocks[i].code() + ".forecast.json"), files[i]);
        std::printf("%s\n", lines[i].c_str());
    }
    return 0;
}

int run_compare(const Common& c, const std::string& in, const std::vector<std::string>& codes,
                const std::string& predictors, std::optional<std::size_t> horizon, bool timing) {
    auto s = settings(c);
    if (!predictors.empty()) {
        s.compare.predictors.clear();
        std::stringstream list(predictors);
        for (std::string name; std::getline(list, name, ',');) s.compare.predictors.push_back(predict::predictor_from_string(name));
    }
    if (horizon) s.compare.horizon = *horizon;
    if (timing) s.compare.timing = true;
    s.compare.validate();

    const auto blocks = load_blocks(s, in, select_blocks(s, codes));
    const auto bundles = pipeline::compare_all(blocks, s.compare, s.worker_count());
    const auto dir = ensure_dir(c.out);
    for (const auto& b : bundles) {
        eval::emit_report(b, eval::ReportFormat::json, dir);
        std::string line = b.block_code;
        std::size_t failed = 0;
        for (const auto& r : b.ranking) {
            const auto& top = r.order.front();
            line += " " + r.channel + ":" + (top.medal == eval::Medal::gold ? std::string(predict::to_string(top.predictor)) : "-");
        }
        for (const auto& cell : b.cells) failed += !cell.ok();
        if (failed) line += " failed=" + std::to_string(failed);
        std::printf("%s\n", line.c_str());
    }
    const auto table = pipeline::format_medal_table(eval::medal_table(bundles));
    write_file(dir / "medals.txt", table);
    std::printf("\n%s", table.c_str());
    return 0;
}

int run_report(const Common& c, const std::string& in, const std::string& format) {
    const auto fmt = eval::report_format_from_string(format);
    std::vector<fs::path> files;
    std::error_code ec;
    for (const auto& entry : fs::directory_iterator(in, ec))
        if (entry.path().extension() == ".json") files.push_back(entry.path());
    if (ec) throw IoError("cannot list " + in);
    if (files.empty()) throw ValidationError("no report bundles (*.json) in " + in);
    std::sort(files.begin(), files.end());
    const auto dir = ensure_dir(c.out);
    std::size_t written = 0;
    for (const auto& f : files) written += eval::emit_report(eval::parse_json(read_file(f)), fmt, dir).size();
    std::printf("wrote %zu %s file(s) for %zu bundle(s) to %s\n", written, format.c_str(), files.size(), c.out.c_str());
    return 0;
}

int run_serve(const Common& c, const std::string& in, const std::string& host, std::uint16_t port,
              std::size_t clients, std::optional<std::size_t> close_after) {
    const auto s = settings(c);
    auto records = in.empty() ? ingest::generate_synthetic(pipeline::scenario(s), s.seed) : read_records(in);
    ingest::StreamOptions opt;
    opt.max_clients = clients;
    opt.close_after = close_after;
    const auto n = records.size();
    ingest::StreamServer server(std::move(records), host, port, opt);
    std::printf("serving %zu records on %s:%u for %zu client(s)\n", n, host.c_str(), unsigned(server.port()), clients);
    std::fflush(stdout);
    server.wait();
    return 0;
}

int run_consume(const Common& c, const std::string& host, std::uint16_t port, int timeout_ms) {
    const auto r = ingest::consume_stream(host, port, timeout_ms);
    ingest::write_export_file(c.out, r.records);
    std::printf("received %zu records (%zu malformed) into %s\n", r.records.size(), r.malformed, c.out.c_str());
    if (r.truncated) {
        std::fprintf(stderr, "stream truncated after %zu records: no end marker\n", r.records.size());
        return 2;
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"eko: sensor data pipeline and forecaster comparison"};
    app.require_subcommand(1);
    app.set_help_all_flag("--help-all", "Help for every subcommand");

    std::map<CLI::App*, Common> commons;
    std::string in, predictor = "parma", predictors, format = "svg", host = "127.0.0.1";
    std::vector<std::string> codes;
    std::optional<std::size_t> horizon, close_after;
    bool all = false, timing = false;
    std::uint16_t port = 0;
    std::size_t clients = 1;
    int timeout_ms = 10000;

    auto* simulate = app.add_subcommand("simulate", "Generate a synthetic gateway export");
    add_common(commons, *simulate, "raw.csv", "Export file to write");

    auto* ing = app.add_subcommand("ingest", "Parse an export and split it into per-block record files");
    add_common(commons, *ing, "raw_blocks", "Directory for <block>.csv files");
    ing->add_option("--in", in, "Gateway export (CSV)")->required()->check(CLI::ExistingFile);

    auto* pre = app.add_subcommand("preprocess", "Repair, filter and downsample each block");
    add_common(commons, *pre, "blocks", "Directory for <block>.json files");
    pre->add_option("--in", in, "Directory written by ingest")->required()->check(CLI::ExistingDirectory);

    auto* fc = app.add_subcommand("forecast", "Fit one predictor per channel and forecast past the data");
    add_common(commons, *fc, "forecasts", "Directory for <block>.forecast.json files");
    fc->add_option("--in", in, "Directory of block files (default: simulate from the seed)")
        ->check(CLI::ExistingDirectory);
    fc->add_option("--block", codes, "Block code; repeatable (default: every block)");
    fc->add_option("--predictor", predictor, "parma, parmax, karma or forwaver")->capture_default_str();
    fc->add_option("--horizon", horizon, "Forecast steps (default: config compare.horizon)")
        ->check(CLI::PositiveNumber);

    auto* cmp = app.add_subcommand("compare", "Withhold the tail, forecast it with every predictor, rank");
    add_common(commons, *cmp, "reports", "Directory for <block>.json bundles and medals.txt");
    cmp->add_option("--in", in, "Directory of block files (default: simulate from the seed)")
        ->check(CLI::ExistingDirectory);
    auto* all_flag = cmp->add_flag("--all", all, "Compare every configured block (the default)");
    cmp->add_option("--block", codes, "Block code; repeatable")->excludes(all_flag);
    cmp->add_option("--predictors", predictors, "Comma-separated predictor list (default: config)");
    cmp->add_option("--horizon", horizon, "Withheld steps (default: config compare.horizon)")
        ->check(CLI::PositiveNumber);
    cmp->add_flag("--timing", timing, "Record wall-clock fit times (output no longer reproducible)");

    auto* rep = app.add_subcommand("report", "Render comparison bundles");
    add_common(commons, *rep, "charts", "Output directory");
    rep->add_option("--in", in, "Directory of bundles written by compare")->required()->check(CLI::ExistingDirectory);
    rep->add_option("--format", format, "json, csv or svg")->capture_default_str();

    auto* srv = app.add_subcommand("serve", "Stream an export over TCP, one line per record");
    add_common(commons, *srv, "", "Unused");
    srv->add_option("--in", in, "Export to stream (default: simulate from the seed)")->check(CLI::ExistingFile);
    srv->add_option("--host", host, "Listen address")->capture_default_str();
    srv->add_option("--port", port, "Listen port; 0 picks a free one")->capture_default_str();
    srv->add_option("--clients", clients, "Sessions to serve before exiting")->capture_default_str()
        ->check(CLI::PositiveNumber);
    srv->add_option("--close-after", close_after, "Drop each connection after this many records");

    auto* con = app.add_subcommand("consume", "Receive a record stream and write it as an export");
    add_common(commons, *con, "raw.csv", "Export file to write");
    con->add_option("--host", host, "Server address")->capture_default_str();
    con->add_option("--port", port, "Server port")->required();
    con->add_option("--timeout-ms", timeout_ms, "Connect and read timeout")->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::fprintf(stderr, "error: %s\n\n", e.what());
        const auto parsed = app.get_subcommands();
        std::cerr << (parsed.empty() ? app.help() : parsed.front()->help());
        return 1;
    }

    const auto& common = commons.at(app.get_subcommands().front());
    try {
        if (*simulate) return run_simulate(common);
        if (*ing) return run_ingest(common, in);
        if (*pre) return run_preprocess(common, in);
        if (*fc) return run_forecast(common, in, codes, predictor, horizon);
        if (*cmp) return run_compare(common, in, codes, predictors, horizon, timing);
        if (*rep) return run_report(common, in, format);
        if (*srv) return run_serve(common, in, host, port, clients, close_after);
        if (*con) return run_consume(common, host, port, timeout_ms);
    } catch (const ValidationError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "failure: %s\n", e.what());
        return 2;
    }
    return 1;
}
