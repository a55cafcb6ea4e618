#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "jamaica/errors.hpp"
#include "jamaica/geo.hpp"
#include "jamaica/ids.hpp"
#include "jamaica/mlengine.hpp"
#include "jamaica/observation.hpp"
#include "jamaica/report.hpp"
#include "jamaica/synth.hpp"
#include "jamaica/time.hpp"

namespace py = pybind11;
using namespace jamaica;

namespace {

// Snapshots cross the boundary as plain dicts/lists rather than opaque text.
py::object json_to_py(const nlohmann::json& j) {
  return py::module_::import("json").attr("loads")(j.dump());
}

nlohmann::json py_to_json(const py::object& o) {
  const auto text = py::module_::import("json").attr("dumps")(o).cast<std::string>();
  return nlohmann::json::parse(text);
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() =
      "Native core: anomaly detectors, a multiclass perceptron, synthetic "
      "archives, and value reports.";
  m.attr("__version__") = "0.1.0";

  static py::exception<Error> exc(m, "Error");
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      const std::string msg = std::string(errc_code(e.code())) + ": " + e.what();
      PyErr_SetString(exc.ptr(), msg.c_str());
    }
  });

  py::class_<GeoPoint>(m, "GeoPoint")
      .def(py::init<>())
      .def(py::init([](double lat, double lon) { return GeoPoint{lat, lon}; }),
           py::arg("lat"), py::arg("lon"))
      .def_readwrite("lat", &GeoPoint::lat)
      .def_readwrite("lon", &GeoPoint::lon)
      .def("__eq__", [](const GeoPoint& a, const GeoPoint& b) { return a == b; })
      .def("__repr__", [](const GeoPoint& p) {
        return "GeoPoint(lat=" + std::to_string(p.lat) + ", lon=" + std::to_string(p.lon) + ")";
      });

  py::class_<Timestamp>(m, "Timestamp")
      .def(py::init<>())
      .def(py::init<std::int64_t>(), py::arg("unix_ms"))
      .def_static(
          "parse", [](const std::string& text) { return Timestamp::parse(text); },
          py::arg("text"))
      .def_static("now", &Timestamp::now)
      .def("unix_ms", &Timestamp::unix_ms)
      .def("to_rfc3339", &Timestamp::to_rfc3339)
      .def("__eq__", [](const Timestamp& a, const Timestamp& b) { return a == b; })
      .def("__lt__", [](const Timestamp& a, const Timestamp& b) { return a < b; })
      .def("__le__", [](const Timestamp& a, const Timestamp& b) { return a <= b; })
      .def("__hash__", [](const Timestamp& t) { return py::hash(py::int_(t.unix_ms())); })
      .def("__repr__",
           [](const Timestamp& t) { return "Timestamp(" + t.to_rfc3339() + ")"; });

  py::class_<Observation>(m, "Observation")
      .def(py::init<>())
      .def_readwrite("entity_id", &Observation::entity_id)
      .def_readwrite("entity_type", &Observation::entity_type)
      .def_readwrite("attribute", &Observation::attribute)
      .def_readwrite("value", &Observation::value)
      .def_readwrite("timestamp", &Observation::timestamp)
      .def_readwrite("location", &Observation::location)
      .def("__repr__", [](const Observation& o) {
        return "Observation(" + o.entity_id + ", " + o.attribute + "=" +
               std::to_string(o.value) + " @ " + o.timestamp.to_rfc3339() + ")";
      });

  py::class_<LofModel>(m, "LofModel")
      .def(py::init<std::size_t, std::size_t>(), py::arg("capacity"), py::arg("k"))
      .def("add", &LofModel::add, py::arg("features"))
      .def("train", &LofModel::train)
      .def("score", &LofModel::score, py::arg("features"))
      .def("trained", &LofModel::trained)
      .def("size", &LofModel::size)
      .def("dim", &LofModel::dim)
      .def("capacity", &LofModel::capacity)
      .def("k", &LofModel::k)
      .def("reference", &LofModel::reference)
      .def("snapshot", [](const LofModel& model) { return json_to_py(model.snapshot()); })
      .def_static(
          "restore", [](const py::object& j) { return LofModel::restore(py_to_json(j)); },
          py::arg("snapshot"));

  py::class_<RangeModel>(m, "RangeModel")
      .def_static("fit", &RangeModel::fit, py::arg("values"), py::arg("q_low"),
                  py::arg("q_high"))
      .def_static("explicit_range", &RangeModel::explicit_range, py::arg("low"),
                  py::arg("high"))
      .def("low", &RangeModel::low)
      .def("high", &RangeModel::high)
      .def("learned", &RangeModel::learned)
      .def("anomalous", &RangeModel::anomalous, py::arg("value"))
      .def("score", &RangeModel::score, py::arg("value"))
      .def("snapshot", [](const RangeModel& model) { return json_to_py(model.snapshot()); })
      .def_static(
          "restore", [](const py::object& j) { return RangeModel::restore(py_to_json(j)); },
          py::arg("snapshot"));

  py::class_<LabeledExample>(m, "LabeledExample")
      .def(py::init([](FeatureVector features, std::string label) {
             return LabeledExample{std::move(features), std::move(label)};
           }),
           py::arg("features"), py::arg("label"))
      .def_readwrite("features", &LabeledExample::features)
      .def_readwrite("label", &LabeledExample::label);

  py::class_<ClassifierModel>(m, "ClassifierModel")
      .def(py::init<std::vector<std::string>>(), py::arg("classes"))
      .def("train_batch", &ClassifierModel::train_batch, py::arg("batch"), py::arg("epochs"))
      .def("predict", &ClassifierModel::predict, py::arg("features"))
      .def("trained_count", &ClassifierModel::trained_count)
      .def("dim", &ClassifierModel::dim)
      .def("classes", &ClassifierModel::classes)
      .def("snapshot",
           [](const ClassifierModel& model) { return json_to_py(model.snapshot()); })
      .def_static(
          "restore",
          [](const py::object& j) { return ClassifierModel::restore(py_to_json(j)); },
          py::arg("snapshot"));

  py::class_<SynthSpec>(m, "SynthSpec")
      .def(py::init<>())
      .def_readwrite("n_train", &SynthSpec::n_train)
      .def_readwrite("n_stream", &SynthSpec::n_stream)
      .def_readwrite("band_low", &SynthSpec::band_low)
      .def_readwrite("band_high", &SynthSpec::band_high)
      .def_readwrite("frac_negative", &SynthSpec::frac_negative)
      .def_readwrite("frac_high", &SynthSpec::frac_high)
      .def_readwrite("seed", &SynthSpec::seed)
      .def_readwrite("limit", &SynthSpec::limit)
      .def_readwrite("entity_id", &SynthSpec::entity_id)
      .def_readwrite("entity_type", &SynthSpec::entity_type)
      .def_readwrite("attribute", &SynthSpec::attribute)
      .def_readwrite("start_unix_ms", &SynthSpec::start_unix_ms)
      .def_readwrite("step_ms", &SynthSpec::step_ms)
      .def("validate", &SynthSpec::validate);

  py::class_<SynthData>(m, "SynthData")
      .def_readonly("train", &SynthData::train)
      .def_readonly("stream", &SynthData::stream)
      .def_readonly("negative_rows", &SynthData::negative_rows)
      .def_readonly("high_rows", &SynthData::high_rows);

  py::class_<SynthResult>(m, "SynthResult")
      .def_readonly("train_path", &SynthResult::train_path)
      .def_readonly("stream_path", &SynthResult::stream_path)
      .def_readonly("train_rows", &SynthResult::train_rows)
      .def_readonly("stream_rows", &SynthResult::stream_rows)
      .def_readonly("negative_rows", &SynthResult::negative_rows)
      .def_readonly("high_rows", &SynthResult::high_rows);

  m.def("generate_synth_data", &generate_synth_data, py::arg("spec"));
  m.def("write_synth", &write_synth, py::arg("spec"), py::arg("out_dir"));

  py::class_<Band>(m, "Band")
      .def(py::init<>())
      .def(py::init([](double low, double high) { return Band{low, high}; }),
           py::arg("low"), py::arg("high"))
      .def_readwrite("low", &Band::low)
      .def_readwrite("high", &Band::high);

  py::class_<HistogramReport>(m, "HistogramReport")
      .def_readonly("bin_edges", &HistogramReport::bin_edges)
      .def_readonly("counts", &HistogramReport::counts)
      .def_readonly("total", &HistogramReport::total)
      .def_readonly("below_band", &HistogramReport::below_band)
      .def_readonly("above_band", &HistogramReport::above_band);

  py::class_<SummaryReport>(m, "SummaryReport")
      .def_readonly("count", &SummaryReport::count)
      .def_readonly("min", &SummaryReport::min)
      .def_readonly("max", &SummaryReport::max)
      .def_readonly("mean", &SummaryReport::mean)
      .def_readonly("stddev", &SummaryReport::stddev)
      .def_readonly("below_band", &SummaryReport::below_band)
      .def_readonly("above_band", &SummaryReport::above_band);

  m.def(
      "build_histogram",
      [](const std::vector<double>& values, std::size_t bins, std::optional<Band> range,
         std::optional<Band> band) { return build_histogram(values, bins, range, band); },
      py::arg("values"), py::arg("bins"), py::arg("range") = std::nullopt,
      py::arg("band") = std::nullopt);
  m.def("histogram_to_csv", &histogram_to_csv, py::arg("report"));
  m.def(
      "build_summary",
      [](const std::vector<double>& values, std::optional<Band> band) {
        return build_summary(values, band);
      },
      py::arg("values"), py::arg("band") = std::nullopt);

  m.def("new_ulid", &new_ulid);
}
