#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>

#include <json.hpp>

#include "eko/eval.hpp"

namespace eko::eval {

using ordered_json = nlohmann::ordered_json;

namespace {

ordered_json array_of(const std::vector<double>& v) {
    ordered_json a = ordered_json::array();
    for (double x : v) a.push_back(x);
    return a;
}

std::vector<double> doubles(const ordered_json& j) {
    std::vector<double> v;
    for (const auto& x : j) v.push_back(x.get<double>());
    return v;
}

Timestamp parse_time(const std::string& s) {
    const auto t = Timestamp::parse_iso8601(s);
    if (!t) throw ValidationError("report: bad timestamp '" + s + "'");
    return *t;
}

Medal medal_from_string(std::string_view s) {
    for (auto m : {Medal::gold, Medal::silver, Medal::bronze, Medal::none})
        if (to_string(m) == s) return m;
    throw ValidationError("report: unknown medal '" + std::string(s) + "'");
}

std::string shortest(double v) {
    char buf[32];
    const auto r = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, r.ptr);
}

void write_file(const std::filesystem::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
    out << content;
    out.close();
    if (!out) throw IoError("failed writing '" + path.string() + "'");
}

}  // namespace

// ---------------------------------------------------------------------------
// JSON

std::string to_json(const ReportBundle& b, int indent) {
    ordered_json j;
    j["block_code"] = b.block_code;
    j["grid"] = {{"start", b.start.iso8601()}, {"step_seconds", b.step_seconds}, {"n", b.n}};
    j["horizon"] = b.horizon;
    ordered_json cells = ordered_json::array();
    for (const auto& c : b.cells) {
        ordered_json cj;
        cj["channel"] = c.channel;
        cj["predictor"] = predict::to_string(c.predictor);
        cj["status"] = c.ok() ? "ok" : "failed";
        cj["failure"] = c.failure;
        cj["pq"] = c.pq.value;
        cj["accuracy"] = c.pq.accuracy;
        cj["tightness"] = c.pq.tightness;
        cj["fit_ms"] = c.fit_ms ? ordered_json(*c.fit_ms) : ordered_json(nullptr);
        cj["fit_cost"] = c.fit_cost;
        cj["orders"] = {{"na", c.orders.na}, {"nc", c.orders.nc}, {"nb", c.orders.nb},
                        {"nk", c.orders.nk}, {"n", c.orders.n}};
        cj["inputs"] = c.inputs;
        cj["trend"] = {{"basis", c.trend_basis}, {"coeffs", array_of(c.trend_coeffs)},
                       {"values", array_of(c.trend_values)}};
        cj["series"] = array_of(c.series);
        cj["actual"] = array_of(c.actual);
        cj["forecast"] = {{"start", c.forecast.start.iso8601()},
                          {"step_seconds", c.forecast.step},
                          {"level", c.forecast.level},
                          {"values", array_of(c.forecast.values)},
                          {"radii", array_of(c.forecast.radii)}};
        cj["innovations"] = array_of(c.innovations);
        cells.push_back(std::move(cj));
    }
    j["cells"] = std::move(cells);
    ordered_json ranking = ordered_json::array();
    for (const auto& r : b.ranking) {
        ordered_json order = ordered_json::array();
        for (const auto& e : r.order)
            order.push_back({{"predictor", predict::to_string(e.predictor)},
                             {"pq", e.pq ? ordered_json(*e.pq) : ordered_json(nullptr)},
                             {"medal", to_string(e.medal)}});
        ranking.push_back({{"channel", r.channel}, {"order", std::move(order)}});
    }
    j["ranking"] = std::move(ranking);
    return j.dump(indent) + "\n";
}

ReportBundle parse_json(std::string_view text) {
    ordered_json j;
    try {
        j = ordered_json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(std::string("report: invalid JSON: ") + e.what());
    }
    try {
        ReportBundle b;
        b.block_code = j.at("block_code").get<std::string>();
        b.start = parse_time(j.at("grid").at("start").get<std::string>());
        b.step_seconds = j.at("grid").at("step_seconds").get<std::int64_t>();
        b.n = j.at("grid").at("n").get<std::size_t>();
        b.horizon = j.at("horizon").get<std::size_t>();
        for (const auto& cj : j.at("cells")) {
            ChannelReport c;
            c.channel = cj.at("channel").get<std::string>();
            c.predictor = predict::predictor_from_string(cj.at("predictor").get<std::string>());
            c.failure = cj.at("failure").get<std::string>();
            c.pq = {cj.at("pq").get<double>(), cj.at("accuracy").get<double>(), cj.at("tightness").get<double>()};
            if (!cj.at("fit_ms").is_null()) c.fit_ms = cj.at("fit_ms").get<double>();
            c.fit_cost = cj.at("fit_cost").get<std::size_t>();
            const auto& o = cj.at("orders");
            c.orders = {o.at("na").get<int>(), o.at("nc").get<int>(), o.at("nb").get<int>(),
                        o.at("nk").get<int>(), o.at("n").get<int>()};
            c.inputs = cj.at("inputs").get<std::vector<std::string>>();
            c.trend_basis = cj.at("trend").at("basis").get<std::string>();
            c.trend_coeffs = doubles(cj.at("trend").at("coeffs"));
            c.trend_values = doubles(cj.at("trend").at("values"));
            c.series = doubles(cj.at("series"));
            c.actual = doubles(cj.at("actual"));
            const auto& f = cj.at("forecast");
            c.forecast.start = parse_time(f.at("start").get<std::string>());
            c.forecast.step = f.at("step_seconds").get<std::int64_t>();
            c.forecast.level = f.at("level").get<double>();
            c.forecast.values = doubles(f.at("values"));
            c.forecast.radii = doubles(f.at("radii"));
            c.innovations = doubles(cj.at("innovations"));
            b.cells.push_back(std::move(c));
        }
        for (const auto& rj : j.at("ranking")) {
            ChannelRanking r;
            r.channel = rj.at("channel").get<std::string>();
            for (const auto& ej : rj.at("order")) {
                RankEntry e;
                e.predictor = predict::predictor_from_string(ej.at("predictor").get<std::string>());
                if (!ej.at("pq").is_null()) e.pq = ej.at("pq").get<double>();
                e.medal = medal_from_string(ej.at("medal").get<std::string>());
                r.order.push_back(e);
            }
            b.ranking.push_back(std::move(r));
        }
        return b;
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(std::string("report: malformed bundle: ") + e.what());
    }
}

// ---------------------------------------------------------------------------
// CSV

std::string to_csv(const ReportBundle& b, bool header) {
    std::string out;
    if (header) out.append(kCsvHeader).append("\n");
    for (const auto& c : b.cells)
        for (std::size_t k = 0; k < b.horizon; ++k) {
            out += b.block_code + "," + c.channel + "," + std::string(predict::to_string(c.predictor)) + "," +
                   std::to_string(k + 1) + ",";
            out += k < c.actual.size() ? shortest(c.actual[k]) : "";
            out += ",";
            if (c.ok()) out += shortest(c.forecast.values[k]) + "," + shortest(c.forecast.radii[k]);
            else out += ",";
            out += "\n";
        }
    return out;
}

// ---------------------------------------------------------------------------
// SVG

namespace {

constexpr double kWidth = 760, kHeight = 380, kLeft = 60, kRight = 20, kTop = 40, kBottom = 40;

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return buf;
}

std::string escape(std::string_view s) {
    std::string out;
    for (char ch : s) {
        switch (ch) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '"': out += "&quot;"; break;
            default: out += ch;
        }
    }
    return out;
}

struct Frame {
    double x0, x1, y0, y1;

    double px(double i) const { return kLeft + (i - x0) / (x1 - x0) * (kWidth - kLeft - kRight); }
    double py(double v) const { return kHeight - kBottom - (v - y0) / (y1 - y0) * (kHeight - kTop - kBottom); }
};

std::string polyline(const Frame& f, const std::vector<double>& v, std::size_t offset, const char* colour,
                     const char* extra = "") {
    if (v.empty()) return {};
    std::string pts;
    for (std::size_t i = 0; i < v.size(); ++i)
        pts += (i ? " " : "") + fmt(f.px(double(offset + i))) + "," + fmt(f.py(v[i]));
    return "  <polyline fill=\"none\" stroke=\"" + std::string(colour) + "\" stroke-width=\"1.2\"" + extra +
           " points=\"" + pts + "\"/>\n";
}

}  // namespace

std::string chart_name(const std::string& block, const std::string& channel, PredictorKind p) {
    return block + "__" + channel + "__" + std::string(predict::to_string(p)) + ".svg";
}

std::string chart_svg(const ChannelReport& c, const std::string& block, Timestamp start,
                      std::int64_t step_seconds) {
    const std::size_t n = c.series.size();
    const std::size_t h = c.actual.size();
    double lo = HUGE_VAL, hi = -HUGE_VAL;
    auto extend = [&](double v) {
        if (std::isfinite(v)) {
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
    };
    for (double v : c.series) extend(v);
    for (double v : c.actual) extend(v);
    for (double v : c.trend_values) extend(v);
    if (c.ok())
        for (std::size_t k = 0; k < c.forecast.values.size(); ++k) {
            extend(c.forecast.values[k] - c.forecast.radii[k]);
            extend(c.forecast.values[k] + c.forecast.radii[k]);
        }
    if (!(hi > lo)) {
        lo = (std::isfinite(lo) ? lo : 0.0) - 1.0;
        hi = lo + 2.0;
    }
    const double pad = 0.05 * (hi - lo);
    const Frame f{0.0, double(std::max<std::size_t>(n + h, 2) - 1), lo - pad, hi + pad};

    std::string s;
    s += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + fmt(kWidth) + "\" height=\"" + fmt(kHeight) +
         "\" viewBox=\"0 0 " + fmt(kWidth) + " " + fmt(kHeight) + "\">\n";
    s += "  <rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    std::string title = block + " / " + c.channel + " / " + std::string(predict::to_string(c.predictor));
    title += c.ok() ? "  PQ = " + fmt(c.pq.value) + "%" : "  failed";
    s += "  <text x=\"" + fmt(kLeft) + "\" y=\"22\" font-family=\"sans-serif\" font-size=\"14\">" + escape(title) +
         "</text>\n";
    // Axes with min/max labels and the forecast origin.
    s += "  <g stroke=\"#444\" stroke-width=\"1\">\n";
    s += "    <line x1=\"" + fmt(kLeft) + "\" y1=\"" + fmt(kHeight - kBottom) + "\" x2=\"" + fmt(kWidth - kRight) +
         "\" y2=\"" + fmt(kHeight - kBottom) + "\"/>\n";
    s += "    <line x1=\"" + fmt(kLeft) + "\" y1=\"" + fmt(kTop) + "\" x2=\"" + fmt(kLeft) + "\" y2=\"" +
         fmt(kHeight - kBottom) + "\"/>\n";
    s += "  </g>\n";
    s += "  <g font-family=\"sans-serif\" font-size=\"10\" fill=\"#444\">\n";
    s += "    <text x=\"4\" y=\"" + fmt(f.py(hi) + 4) + "\">" + fmt(hi) + "</text>\n";
    s += "    <text x=\"4\" y=\"" + fmt(f.py(lo) + 4) + "\">" + fmt(lo) + "</text>\n";
    s += "    <text x=\"" + fmt(kLeft) + "\" y=\"" + fmt(kHeight - 12) + "\">" + start.iso8601() + "</text>\n";
    s += "    <text x=\"" + fmt(kWidth - kRight - 150) + "\" y=\"" + fmt(kHeight - 12) + "\">" +
         (start + static_cast<std::int64_t>(n + h - 1) * step_seconds).iso8601() + "</text>\n";
    s += "  </g>\n";
    if (n > 0) {
        const double xo = f.px(double(n) - 0.5);
        s += "  <line x1=\"" + fmt(xo) + "\" y1=\"" + fmt(kTop) + "\" x2=\"" + fmt(xo) + "\" y2=\"" +
             fmt(kHeight - kBottom) + "\" stroke=\"#999\" stroke-dasharray=\"4 3\"/>\n";
    }
    if (c.ok() && !c.forecast.values.empty()) {
        std::string band;
        const auto& v = c.forecast.values;
        const auto& r = c.forecast.radii;
        for (std::size_t k = 0; k < v.size(); ++k)
            band += (k ? " " : "") + fmt(f.px(double(n + k))) + "," + fmt(f.py(v[k] + r[k]));
        for (std::size_t k = v.size(); k-- > 0;) band += " " + fmt(f.px(double(n + k))) + "," + fmt(f.py(v[k] - r[k]));
        s += "  <polygon fill=\"#f4a259\" fill-opacity=\"0.35\" stroke=\"none\" points=\"" + band + "\"/>\n";
    }
    s += polyline(f, c.series, 0, "#1d3557");
    s += polyline(f, c.trend_values, 0, "#2a9d8f", " stroke-dasharray=\"6 3\"");
    s += polyline(f, c.actual, n, "#1d3557", " stroke-dasharray=\"2 2\"");
    if (c.ok()) s += polyline(f, c.forecast.values, n, "#e63946");
    s += "</svg>\n";
    return s;
}

std::string ranking_svg(const ReportBundle& b) {
    std::size_t cols = 0;
    for (const auto& r : b.ranking) cols = std::max(cols, r.order.size());
    const double row_h = 26, col_w = 150, first_w = 110;
    const double w = first_w + col_w * double(cols) + 20, h = 50 + row_h * double(b.ranking.size() + 1);
    std::string s = "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + fmt(w) + "\" height=\"" + fmt(h) + "\">\n";
    s += "  <rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    s += "  <text x=\"10\" y=\"24\" font-family=\"sans-serif\" font-size=\"14\">" + escape(b.block_code) +
         " ranking</text>\n";
    s += "  <g font-family=\"sans-serif\" font-size=\"12\">\n";
    for (std::size_t i = 0; i < cols; ++i)
        s += "    <text x=\"" + fmt(first_w + col_w * double(i)) + "\" y=\"" + fmt(50) + "\">#" + std::to_string(i + 1) +
             "</text>\n";
    for (std::size_t r = 0; r < b.ranking.size(); ++r) {
        const double y = 50 + row_h * double(r + 1);
        s += "    <text x=\"10\" y=\"" + fmt(y) + "\">" + escape(b.ranking[r].channel) + "</text>\n";
        for (std::size_t i = 0; i < b.ranking[r].order.size(); ++i) {
            const auto& e = b.ranking[r].order[i];
            const char* colour = e.medal == Medal::gold     ? "#d4af37"
                                 : e.medal == Medal::silver ? "#a8a9ad"
                                 : e.medal == Medal::bronze ? "#cd7f32"
                                                            : "#eeeeee";
            const double x = first_w + col_w * double(i);
            s += "    <rect x=\"" + fmt(x - 4) + "\" y=\"" + fmt(y - 16) + "\" width=\"" + fmt(col_w - 8) +
                 "\" height=\"22\" rx=\"4\" fill=\"" + colour + "\"/>\n";
            s += "    <text x=\"" + fmt(x) + "\" y=\"" + fmt(y) + "\">" + std::string(predict::to_string(e.predictor)) +
                 " " + (e.pq ? fmt(*e.pq) : std::string("failed")) + "</text>\n";
        }
    }
    s += "  </g>\n</svg>\n";
    return s;
}

// ---------------------------------------------------------------------------

ReportFormat report_format_from_string(std::string_view s) {
    if (s == "json") return ReportFormat::json;
    if (s == "csv") return ReportFormat::csv;
    if (s == "svg") return ReportFormat::svg;
    throw ValidationError("unknown report format '" + std::string(s) + "' (expected json, csv or svg)");
}

std::vector<std::filesystem::path> emit_report(const ReportBundle& b, ReportFormat format,
                                               const std::filesystem::path& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw IoError("cannot create '" + dir.string() + "': " + ec.message());
    std::vector<std::filesystem::path> written;
    auto emit = [&](const std::string& name, const std::string& content) {
        write_file(dir / name, content);
        written.emplace_back(name);
    };
    switch (format) {
        case ReportFormat::json: emit(b.block_code + ".json", to_json(b)); break;
        case ReportFormat::csv: emit(b.block_code + ".csv", to_csv(b)); break;
        case ReportFormat::svg:
            for (const auto& c : b.cells)
                emit(chart_name(b.block_code, c.channel, c.predictor), chart_svg(c, b.block_code, b.start, b.step_seconds));
            emit(b.block_code + "__ranking.svg", ranking_svg(b));
            break;
    }
    return written;
}

}  // namespace eko::eval
