#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <json.hpp>

#include "bodyshape/bodymodel.hpp"
#include "bodyshape/datasetgen.hpp"
#include "bodyshape/errors.hpp"
#include "bodyshape/labeling.hpp"
#include "bodyshape/losseval.hpp"
#include "bodyshape/measure.hpp"
#include "bodyshape/shape_text.hpp"
#include "bodyshape/solver.hpp"
#include "bodyshape/textlang.hpp"
#include "bodyshape/version.hpp"

namespace py = pybind11;
using namespace bodyshape;

namespace {

ShapeParams to_params(const std::vector<double>& beta) { return ShapeParams(std::span<const double>(beta)); }

std::vector<double> to_list(const ShapeParams& p) { return {p.values().begin(), p.values().end()}; }

py::dict measurement_dict(const MeasurementVector& m) {
  py::dict d;
  for (auto k : all_measurements()) d[py::str(std::string(name(k)))] = m[k];
  return d;
}

py::dict label_dict(const LabelSet& l) {
  py::dict d;
  for (auto k : all_measurements()) d[py::str(std::string(name(k)))] = std::string(name(l[k]));
  return d;
}

Measurement measurement_arg(const std::string& s) {
  const auto m = measurement_from_name(s);
  if (!m) throw Error(ErrorKind::Input, "unknown measurement '" + s + "'");
  return *m;
}

Level level_arg(const std::string& s) {
  const auto l = level_from_name(s);
  if (!l) throw Error(ErrorKind::Input, "unknown level '" + s + "'");
  return *l;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Text-driven parametric body shapes";
  m.attr("__version__") = std::string(kVersion);

  static py::exception<Error> error_type(m, "BodyShapeError", PyExc_ValueError);
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      py::object exc = py::reinterpret_borrow<py::object>(error_type.ptr())(e.what());
      exc.attr("kind") = std::string(to_string(e.kind()));
      PyErr_SetObject(error_type.ptr(), exc.ptr());
    }
  });

  m.def("measurement_names", [] {
    std::vector<std::string> out;
    for (auto k : all_measurements()) out.emplace_back(name(k));
    return out;
  });

  m.def("asset_info", [] {
    const auto& a = builtin_asset();
    py::dict d;
    d["vertices"] = a.vertex_count();
    d["faces"] = a.faces().size();
    d["checksum"] = a.checksum();
    return d;
  });

  m.def("evaluate_mesh", [](const std::vector<double>& beta) {
    const auto mesh = evaluate_mesh(builtin_asset(), to_params(beta));
    Eigen::Matrix<std::uint32_t, Eigen::Dynamic, 3, Eigen::RowMajor> faces(mesh.faces().size(), 3);
    for (std::size_t i = 0; i < mesh.faces().size(); ++i)
      for (int k = 0; k < 3; ++k) faces(static_cast<Eigen::Index>(i), k) = mesh.faces()[i][static_cast<std::size_t>(k)];
    return py::make_tuple(Eigen::MatrixXd(mesh.vertices), faces);
  }, py::arg("beta"), "Vertices (V, 3) and faces (F, 3) of the builtin body for beta.");

  m.def("measure", [](const std::vector<double>& beta) {
    const auto& a = builtin_asset();
    return measurement_dict(measure_all(a, evaluate_mesh(a, to_params(beta))));
  }, py::arg("beta"));

  m.def("labels", [](const std::vector<double>& beta) {
    const auto& a = builtin_asset();
    return label_dict(assign_labels(default_bins(), measure_all(a, evaluate_mesh(a, to_params(beta)))));
  }, py::arg("beta"));

  m.def("format_shape_params", [](const std::vector<double>& beta) { return format_shape_params(to_params(beta)); });
  m.def("parse_shape_string", [](const std::string& s) { return to_list(parse_shape_string(s)); });

  m.def("parse_description", [](const std::string& text) {
    const auto r = parse_description(Lexicon::builtin(), text);
    py::dict constraints;
    for (const auto& c : r.constraints.items)
      constraints[py::str(std::string(name(c.measurement)))] = std::string(name(c.level));
    std::vector<std::string> unmatched;
    for (const auto& u : r.unmatched) unmatched.push_back(u.text);
    py::dict d;
    d["constraints"] = constraints;
    d["unmatched"] = unmatched;
    d["overrides"] = r.overrides;
    return d;
  }, py::arg("text"));

  m.def("generate_description", [](const std::map<std::string, std::string>& levels,
                                   const std::vector<std::string>& mentioned, std::uint64_t seed) {
    LabelSet labels;
    labels.levels.fill(Level::Average);
    for (const auto& [k, v] : levels) labels.levels[index(measurement_arg(k))] = level_arg(v);
    std::vector<Measurement> ms;
    for (const auto& s : mentioned) ms.push_back(measurement_arg(s));
    return generate_description(Lexicon::builtin(), labels, ms, seed);
  }, py::arg("levels"), py::arg("mentioned"), py::arg("seed") = 0);

  m.def("solve", [](const std::string& text, std::uint64_t seed) {
    const auto parsed = parse_description(Lexicon::builtin(), text);
    SolverOptions o;
    o.seed = seed;
    SolveResult r;
    {
      py::gil_scoped_release release;
      r = solve_shape(builtin_asset(), default_bins(), parsed.constraints, o);
    }
    py::dict d;
    d["beta"] = to_list(r.beta);
    d["measurements"] = measurement_dict(r.measurements);
    d["labels"] = label_dict(r.labels);
    d["satisfied"] = r.satisfied;
    d["total"] = r.constraints.size();
    d["objective"] = r.objective;
    return d;
  }, py::arg("text"), py::arg("seed") = 0);

  m.def("generate_dataset", [](std::size_t count, std::uint64_t seed) {
    std::vector<std::pair<std::string, std::string>> out;
    const GenerationContext ctx{builtin_asset(), default_bins(), Lexicon::builtin()};
    generate_dataset(ctx, count, seed, nullptr, MentionPolicy{}, [&](const DatasetEntry& e) {
      out.emplace_back(e.description, format_shape_params(e.shape_params));
    });
    return out;
  }, py::arg("count"), py::arg("seed") = 1, "(description, shape_params string) pairs.");

  m.def("jsonl_line", [](const std::string& description, const std::vector<double>& beta) {
    return to_jsonl_line({description, to_params(beta)});
  });

  m.def("loss_shape", [](const std::vector<double>& pred, const std::vector<double>& ref) {
    return loss_shape(to_params(pred), to_params(ref), BetaWeights::from_asset(builtin_asset()));
  });
  m.def("loss_llm", [](const std::vector<double>& probs) { return loss_llm(probs); });
  m.def("loss_measurements", [](const std::vector<double>& pred, const std::vector<double>& ref, double tau) {
    return loss_measurements(builtin_asset(), default_bins(), to_params(pred), to_params(ref), tau);
  }, py::arg("pred"), py::arg("ref"), py::arg("temperature") = kDefaultTemperature);

  m.def("evaluate", [](const std::string& jsonl) {
    const auto records = parse_predictions(jsonl);
    return report_json(evaluate_predictions(builtin_asset(), default_bins(), Lexicon::builtin(), records));
  }, py::arg("jsonl"), "Accuracy report (JSON text) for prediction JSONL.");

  m.def("default_bins_json", [] { return default_bins().to_json(); });
  m.def("calibrate_bins_json", [](std::size_t samples, std::uint64_t seed) {
    py::gil_scoped_release release;
    return calibrate_bins(builtin_asset(), samples, kDefaultQuantiles, seed).to_json();
  }, py::arg("samples"), py::arg("seed") = kDefaultCalibrationSeed);
}
