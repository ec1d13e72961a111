#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <optional>
#include <string>

#include "elstm_lab/elm.hpp"
#include "elstm_lab/error.hpp"
#include "elstm_lab/gradcheck.hpp"
#include "elstm_lab/linalg.hpp"
#include "elstm_lab/serialization.hpp"
#include "elstm_lab/textdata.hpp"
#include "elstm_lab/trainer.hpp"

namespace py = pybind11;
using namespace elstm_lab;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

Matrix to_matrix(const Array& a) {
  if (a.ndim() != 2) throw ShapeError("expected a 2-D array");
  const auto rows = static_cast<std::size_t>(a.shape(0));
  const auto cols = static_cast<std::size_t>(a.shape(1));
  return Matrix(rows, cols, std::vector<double>(a.data(), a.data() + a.size()));
}

Array to_array(const Matrix& m) {
  Array out({m.rows(), m.cols()});
  std::copy(m.data().begin(), m.data().end(), out.mutable_data());
  return out;
}

py::object to_python(const nlohmann::json& j) {
  return py::module_::import("json").attr("loads")(j.dump());
}

CharDataset dataset_from(const std::optional<std::string>& text,
                         const std::optional<std::filesystem::path>& path) {
  if (text.has_value() == path.has_value()) {
    throw ShapeError("pass exactly one of text or path");
  }
  return text ? CharDataset::from_text(decode_utf8(*text)) : load_corpus(*path);
}

TrainConfig make_config(const std::string& model, std::size_t hidden, std::size_t epochs,
                        std::size_t seg_len, double lr, double clip, std::uint64_t seed,
                        std::optional<std::size_t> egate_window, double egate_lambda,
                        double egate_gain) {
  TrainConfig cfg;
  cfg.model = parse_model_kind(model);
  cfg.hidden = hidden;
  cfg.epochs = epochs;
  cfg.seg_len = seg_len;
  cfg.lr = lr;
  cfg.clip = clip;
  cfg.seed = seed;
  cfg.egate.window = egate_window.value_or(seg_len);
  cfg.egate.lambda = egate_lambda;
  cfg.egate.gain = egate_gain;
  cfg.validate();
  cfg.egate.validate();
  return cfg;
}

py::list metrics_list(const std::vector<EpochMetrics>& ms) {
  py::list out;
  for (const auto& m : ms) {
    py::dict d;
    d["epoch"] = m.epoch;
    d["loss"] = m.mean_loss;
    d["accuracy"] = m.accuracy;
    d["seconds"] = m.seconds;
    out.append(d);
  }
  return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "LSTM and E-LSTM character models with a pseudoinverse gate";

  py::register_exception<NumericError>(m, "NumericError", PyExc_ArithmeticError);
  py::register_exception<InputError>(m, "InputError", PyExc_ValueError);

  m.def("matmul", [](const Array& a, const Array& b) {
    return to_array(matmul(to_matrix(a), to_matrix(b)));
  });
  m.def("pinv", [](const Array& a, double tol) { return to_array(pinv(to_matrix(a), tol)); },
        py::arg("a"), py::arg("tol") = kDefaultPinvTolerance);
  m.def("ridge_solve",
        [](const Array& f, const Array& t, double lambda) {
          return to_array(ridge_solve(to_matrix(f), to_matrix(t), lambda));
        },
        py::arg("f"), py::arg("t"), py::arg("lam"));

  py::class_<ElmModel>(m, "ElmModel")
      .def_property_readonly("w", [](const ElmModel& e) { return to_array(e.w); })
      .def_property_readonly("b", [](const ElmModel& e) { return e.b; })
      .def_property_readonly("beta", [](const ElmModel& e) { return to_array(e.beta); })
      .def_property_readonly("activation",
                             [](const ElmModel& e) { return std::string(to_string(e.activation)); })
      .def("predict", [](const ElmModel& e, const Array& x) {
        return to_array(elm_predict(e, to_matrix(x)));
      });
  m.def("elm_fit",
        [](const Array& x, const Array& t, std::size_t hidden_nodes, std::uint64_t seed,
           const std::string& activation) {
          return elm_fit(to_matrix(x), to_matrix(t), hidden_nodes, seed,
                         parse_activation(activation));
        },
        py::arg("x"), py::arg("t"), py::arg("hidden_nodes"), py::arg("seed") = 0,
        py::arg("activation") = "sigmoid");

  m.def("gen_random_letters",
        [](std::size_t n, std::uint64_t seed) { return gen_random_letters(n, seed).utf8(); },
        py::arg("n") = 11000, py::arg("seed") = 0);

  py::class_<Model>(m, "Model")
      .def_property_readonly("kind", [](const Model& mo) { return std::string(to_string(mo.kind)); })
      .def_property_readonly("vocab",
                             [](const Model& mo) { return encode_utf8(mo.vocab.chars()); })
      .def_property_readonly("hidden", [](const Model& mo) { return mo.params.hidden; })
      .def_property_readonly("parameter_count",
                             [](const Model& mo) { return mo.params.parameter_count(); })
      .def("sample",
           [](const Model& mo, std::size_t length, std::uint64_t seed, double temperature) {
             return encode_utf8(sample_text(mo, length, seed, temperature));
           },
           py::arg("length") = 200, py::arg("seed") = 0, py::arg("temperature") = 1.0)
      .def("evaluate",
           [](const Model& mo, const std::string& text, std::size_t seg_len) {
             const EvalResult r = evaluate(
                 mo, CharDataset::from_text(decode_utf8(text), mo.vocab), seg_len);
             return py::make_tuple(r.loss, r.accuracy);
           },
           py::arg("text"), py::arg("seg_len") = 25)
      .def("save", [](const Model& mo, const std::filesystem::path& p) { save_checkpoint(mo, p); })
      .def("to_json", [](const Model& mo) { return to_python(model_to_json(mo)); });
  m.def("load_checkpoint", &load_checkpoint);

  m.def("train",
        [](std::optional<std::string> text, std::optional<std::filesystem::path> path,
           const std::string& model, std::size_t hidden, std::size_t epochs,
           std::size_t seg_len, double lr, double clip, std::uint64_t seed,
           std::optional<std::size_t> egate_window, double egate_lambda, double egate_gain) {
          const TrainConfig cfg = make_config(model, hidden, epochs, seg_len, lr, clip, seed,
                                              egate_window, egate_lambda, egate_gain);
          const CharDataset ds = dataset_from(text, path);
          TrainResult r;
          {
            py::gil_scoped_release release;
            r = train_run(cfg, ds);
          }
          return py::make_tuple(metrics_list(r.metrics), r.model);
        },
        py::kw_only(), py::arg("text") = py::none(), py::arg("path") = py::none(),
        py::arg("model") = "lstm", py::arg("hidden") = 100, py::arg("epochs") = 80,
        py::arg("seg_len") = 25, py::arg("lr") = 0.1, py::arg("clip") = 5.0,
        py::arg("seed") = 0, py::arg("egate_window") = py::none(),
        py::arg("egate_lambda") = 1e-3, py::arg("egate_gain") = 1.0);

  m.def("compare",
        [](std::optional<std::string> text, std::optional<std::filesystem::path> path,
           std::vector<double> targets, std::size_t hidden, std::size_t epochs,
           std::size_t seg_len, double lr, double clip, std::uint64_t seed,
           std::optional<std::size_t> egate_window, double egate_lambda, double egate_gain,
           bool serial) {
          const CharDataset ds = dataset_from(text, path);
          const TrainConfig lstm = make_config("lstm", hidden, epochs, seg_len, lr, clip,
                                               seed, egate_window, egate_lambda, egate_gain);
          TrainConfig elstm = lstm;
          elstm.model = ModelKind::kElstm;
          ComparisonReport report;
          {
            py::gil_scoped_release release;
            report = compare_run(lstm, elstm, ds, targets, {serial, {}}).report;
          }
          nlohmann::json config = {{"hidden", hidden}, {"epochs", epochs},
                                   {"seg_len", seg_len}, {"lr", lr},
                                   {"clip", clip}, {"seed", seed},
                                   {"egate_window", elstm.egate.window},
                                   {"egate_lambda", egate_lambda},
                                   {"egate_gain", egate_gain}};
          return to_python(report_to_json(report, config));
        },
        py::kw_only(), py::arg("text") = py::none(), py::arg("path") = py::none(),
        py::arg("targets") = std::vector<double>{1.5, 1.2}, py::arg("hidden") = 100,
        py::arg("epochs") = 80, py::arg("seg_len") = 25, py::arg("lr") = 0.1,
        py::arg("clip") = 5.0, py::arg("seed") = 0, py::arg("egate_window") = py::none(),
        py::arg("egate_lambda") = 1e-3, py::arg("egate_gain") = 1.0,
        py::arg("serial") = true);

  m.def("gradcheck",
        [](const std::string& model, std::size_t hidden, std::size_t seg_len,
           std::uint64_t seed) {
          const GradcheckResult r = run_gradcheck(parse_model_kind(model), hidden, seg_len, seed);
          py::dict d;
          d["max_rel_error"] = r.max_rel_error;
          d["worst_block"] = r.worst_block;
          d["parameter_count"] = r.parameter_count;
          d["gate_terms_applied"] = r.gate_terms_applied;
          return d;
        },
        py::arg("model") = "lstm", py::arg("hidden") = 3, py::arg("seg_len") = 5,
        py::arg("seed") = 0);
}
