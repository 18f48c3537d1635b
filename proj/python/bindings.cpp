#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "eko/pipeline.hpp"

namespace py = pybind11;
using namespace eko;

namespace {

using Vec = std::vector<double>;

const Timestamp kEpoch = Timestamp::from_civil(2010, 6, 1);

predict::PredictorConfig predictor_config(const std::string& settings) {
    return pipeline::parse_settings(settings).compare.predictor;
}

py::dict forecast_series(const Vec& values, const std::string& predictor, std::size_t horizon,
                         std::int64_t step_seconds, const std::string& settings) {
    const auto kind = predict::predictor_from_string(predictor);
    if (kind == predict::PredictorKind::parmax)
        throw ValidationError("PARMAX needs a block; use compare_block");
    const auto cfg = predictor_config(settings);
    predict::Forecast fc;
    predict::FitMeta meta;
    {
        py::gil_scoped_release release;
        const auto series = TimeSeries::complete(kEpoch, step_seconds, values);
        const auto fp = kind == predict::PredictorKind::parma ? predict::fit_parma(series, cfg)
                        : kind == predict::PredictorKind::karma ? predict::fit_karma(series, cfg)
                                                                : predict::fit_forwaver(series, cfg);
        fc = predict::forecast(fp, horizon, cfg);
        meta = fp.meta;
    }
    py::dict out;
    out["values"] = fc.values;
    out["radii"] = fc.radii;
    out["level"] = fc.level;
    out["na"] = meta.orders.na;
    out["nc"] = meta.orders.nc;
    out["fit_cost"] = meta.fit_cost;
    return out;
}

std::vector<std::string> simulate(std::uint64_t seed, const std::string& settings) {
    auto s = pipeline::parse_settings(settings);
    s.seed = seed;
    py::gil_scoped_release release;
    std::vector<std::string> out;
    for (const auto& b : pipeline::simulate_blocks(s)) out.push_back(pipeline::block_to_json(b));
    return out;
}

std::string compare_block(const std::string& block_json, const std::string& settings) {
    const auto s = pipeline::parse_settings(settings);
    const auto block = pipeline::block_from_json(block_json);
    py::gil_scoped_release release;
    return eval::to_json(eval::compare(block, s.compare));
}

std::vector<std::string> compare_ensemble(std::uint64_t seed, const std::string& settings,
                                          std::optional<std::size_t> workers) {
    auto s = pipeline::parse_settings(settings);
    s.seed = seed;
    if (workers) s.workers = *workers;
    py::gil_scoped_release release;
    const auto blocks = pipeline::simulate_blocks(s);
    std::vector<std::string> out;
    for (const auto& b : pipeline::compare_all(blocks, s.compare, s.worker_count())) out.push_back(eval::to_json(b));
    return out;
}

std::vector<py::dict> medal_rows(const std::vector<std::string>& bundles) {
    std::vector<eval::ReportBundle> parsed;
    for (const auto& text : bundles) parsed.push_back(eval::parse_json(text));
    std::vector<py::dict> out;
    for (const auto& r : eval::medal_table(parsed)) {
        py::dict d;
        d["predictor"] = std::string(predict::to_string(r.predictor));
        d["gold"] = r.gold;
        d["silver"] = r.silver;
        d["bronze"] = r.bronze;
        d["cells"] = r.cells;
        d["mean_fit_cost"] = r.mean_fit_cost;
        d["mean_fit_ms"] = r.mean_fit_ms ? py::cast(*r.mean_fit_ms) : py::none();
        out.push_back(std::move(d));
    }
    return out;
}

py::tuple parse_export(const std::string& text) {
    const auto parsed = ingest::parse_export_text(text);
    py::list records, rejected;
    for (const auto& r : parsed.records)
        records.append(py::make_tuple(r.timestamp.iso8601(), r.node_id, r.sensor_id,
                                      std::string(to_string(r.category)), std::string(info(r.parameter).id), r.value));
    for (const auto& r : parsed.rejected) rejected.append(py::make_tuple(r.line_number, r.text, r.reason));
    return py::make_tuple(records, rejected);
}

}  // namespace

PYBIND11_MODULE(_eko, m) {
    m.doc() = "Sensor data preprocessing, ARMA-family forecasting and forecaster comparison";

    py::register_exception<ValidationError>(m, "ValidationError", PyExc_ValueError);
    py::register_exception<NumericalError>(m, "NumericalError", PyExc_ArithmeticError);
    py::register_exception<IoError>(m, "IoError", PyExc_OSError);

    py::class_<PQScore>(m, "PQScore")
        .def_readonly("value", &PQScore::value)
        .def_readonly("accuracy", &PQScore::accuracy)
        .def_readonly("tightness", &PQScore::tightness)
        .def("__repr__", [](const PQScore& s) {
            return "PQScore(value=" + std::to_string(s.value) + ", accuracy=" + std::to_string(s.accuracy) +
                   ", tightness=" + std::to_string(s.tightness) + ")";
        });
    m.def("prediction_quality",
          [](const Vec& actual, const Vec& predicted, const Vec& radii, double sigma) {
              return prediction_quality(actual, predicted, radii, sigma);
          },
          py::arg("actual"), py::arg("predicted"), py::arg("radii"), py::arg("sigma"));

    py::class_<ident::LevinsonResult>(m, "LevinsonResult")
        .def_property_readonly("a", [](const ident::LevinsonResult& r) { return r.model.a; })
        .def_property_readonly("sigma2", [](const ident::LevinsonResult& r) { return r.model.sigma2; })
        .def_readonly("reflection", &ident::LevinsonResult::reflection)
        .def_readonly("error_variance", &ident::LevinsonResult::error_variance);
    m.def("levinson_durbin", [](const Vec& r, std::size_t order) { return ident::levinson_durbin(r, order); },
          py::arg("autocovariance"), py::arg("order"));
    m.def("autocovariance", [](const Vec& y, std::size_t lag) { return ident::autocovariance(y, lag); },
          py::arg("y"), py::arg("max_lag"));

    py::class_<ident::ArmaModel>(m, "ArmaModel")
        .def(py::init<>())
        .def_readwrite("a", &ident::ArmaModel::a)
        .def_readwrite("c", &ident::ArmaModel::c)
        .def_readwrite("sigma2", &ident::ArmaModel::sigma2)
        .def_readwrite("mean", &ident::ArmaModel::mean)
        .def_readonly("stabilized", &ident::ArmaModel::stabilized);
    m.def("fit_arma", [](const Vec& y, std::size_t na, std::size_t nc) { return ident::fit_arma(y, na, nc).model; },
          py::arg("y"), py::arg("na"), py::arg("nc"), py::call_guard<py::gil_scoped_release>());
    m.def("kalman_forecast",
          [](const ident::ArmaModel& model, const Vec& y, std::size_t h) {
              const auto r = ident::kalman_predict(ident::to_statespace(model), y, h);
              return py::make_tuple(r.predictions, r.variances);
          },
          py::arg("model"), py::arg("y"), py::arg("h"));

    py::class_<ident::WaveletDecomposition>(m, "WaveletDecomposition")
        .def_readonly("taps", &ident::WaveletDecomposition::taps)
        .def_readonly("levels", &ident::WaveletDecomposition::levels)
        .def_readonly("approximation", &ident::WaveletDecomposition::approximation)
        .def_readonly("details", &ident::WaveletDecomposition::details);
    m.def("dwt", [](const Vec& x, int taps, int levels) { return ident::dwt(x, taps, levels); }, py::arg("x"),
          py::arg("taps") = 8, py::arg("levels") = 4);
    m.def("idwt", &ident::idwt, py::arg("decomposition"));

    m.def("design_cheby2",
          [](int order, double atten_db, double edge) {
              const auto f = preprocess::design_cheby2({order, atten_db, edge});
              return py::make_tuple(f.b, f.a);
          },
          py::arg("order") = 4, py::arg("atten_db") = 40.0, py::arg("edge") = 0.3);
    m.def("filtfilt",
          [](const Vec& b, const Vec& a, const Vec& x) { return preprocess::filtfilt({b, a}, x); }, py::arg("b"),
          py::arg("a"), py::arg("x"));

    m.def("forecast", &forecast_series, py::arg("values"), py::arg("predictor") = "parma", py::arg("horizon") = 12,
          py::arg("step_seconds") = 3600, py::arg("settings") = "",
          "Fit a single-channel predictor (PARMA, KARMA or FORWAVER) and forecast past the data.");
    m.def("simulate_blocks", &simulate, py::arg("seed") = 7, py::arg("settings") = "",
          "Simulate the scenario and return each assembled block as JSON text.");
    m.def("compare_block", &compare_block, py::arg("block_json"), py::arg("settings") = "",
          "Compare the configured predictors on one block; returns the report bundle as JSON text.");
    m.def("compare_ensemble", &compare_ensemble, py::arg("seed") = 7, py::arg("settings") = "",
          py::arg("workers") = py::none(), "Simulate and compare every block; returns bundle JSON texts.");
    m.def("medal_table", &medal_rows, py::arg("bundles"));
    m.def("parse_export", &parse_export, py::arg("text"),
          "Parse export text into (records, rejected) tuples.");
}
