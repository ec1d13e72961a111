#include "elstm_lab/serialization.hpp"

#include <cstdio>
#include <fstream>
#include <ostream>

namespace elstm_lab {
namespace {

using nlohmann::json;

json matrix_to_json(const Matrix& m) {
  json rows = json::array();
  for (std::size_t r = 0; r < m.rows(); ++r) {
    auto row = m.row(r);
    rows.push_back(json(std::vector<double>(row.begin(), row.end())));
  }
  return rows;
}

Matrix matrix_from_json(const json& j, std::size_t rows, std::size_t cols,
                        const char* name) {
  if (!j.is_array() || j.size() != rows) {
    throw InputError(std::string("checkpoint: '") + name + "' must have " +
                     std::to_string(rows) + " rows");
  }
  std::vector<double> data;
  data.reserve(rows * cols);
  for (const json& row : j) {
    if (!row.is_array() || row.size() != cols) {
      throw InputError(std::string("checkpoint: '") + name + "' must have " +
                       std::to_string(cols) + " columns");
    }
    for (const json& v : row) {
      if (!v.is_number()) {
        throw InputError(std::string("checkpoint: '") + name + "' has a non-number");
      }
      data.push_back(v.get<double>());
    }
  }
  try {
    return Matrix(rows, cols, std::move(data));
  } catch (const std::exception& e) {
    throw InputError(std::string("checkpoint: '") + name + "': " + e.what());
  }
}

Vector vector_from_json(const json& j, std::size_t n, const char* name) {
  if (!j.is_array() || j.size() != n) {
    throw InputError(std::string("checkpoint: '") + name + "' must have length " +
                     std::to_string(n));
  }
  Vector v;
  v.reserve(n);
  for (const json& x : j) {
    if (!x.is_number()) {
      throw InputError(std::string("checkpoint: '") + name + "' has a non-number");
    }
    v.push_back(x.get<double>());
  }
  if (!all_finite(v)) {
    throw InputError(std::string("checkpoint: '") + name + "' has a non-finite entry");
  }
  return v;
}

const json& field(const json& j, const char* key) {
  if (!j.is_object() || !j.contains(key)) {
    throw InputError(std::string("checkpoint: missing field '") + key + "'");
  }
  return j.at(key);
}

template <typename T>
T scalar(const json& j, const char* key) {
  const json& v = field(j, key);
  try {
    return v.get<T>();
  } catch (const json::exception&) {
    throw InputError(std::string("checkpoint: field '") + key + "' has the wrong type");
  }
}

json optional_number(const std::optional<double>& v) { return v ? json(*v) : json(); }
json optional_count(const std::optional<std::size_t>& v) { return v ? json(*v) : json(); }

json series_to_json(const ModelSeries& s) {
  json epochs = json::array();
  for (const EpochMetrics& m : s.metrics) {
    epochs.push_back({{"epoch", m.epoch},
                      {"loss", m.mean_loss},
                      {"accuracy", m.accuracy},
                      {"seconds", m.seconds}});
  }
  return {{"mean_epoch_seconds", s.mean_epoch_seconds}, {"epochs", epochs}};
}

}  // namespace

json model_to_json(const Model& model) {
  const LstmParams& p = model.params;
  json params = json::object();
  params["W_f"] = matrix_to_json(p.w_f);
  params["W_i"] = matrix_to_json(p.w_i);
  params["W_c"] = matrix_to_json(p.w_c);
  params["W_o"] = matrix_to_json(p.w_o);
  params["b_f"] = p.b_f;
  params["b_i"] = p.b_i;
  params["b_c"] = p.b_c;
  params["b_o"] = p.b_o;
  params["W_y"] = matrix_to_json(p.w_y);
  params["b_y"] = p.b_y;

  std::vector<std::uint32_t> vocab;
  for (char32_t ch : model.vocab.chars()) vocab.push_back(static_cast<std::uint32_t>(ch));

  json doc = {{"format_version", kCheckpointFormatVersion},
              {"model", std::string(to_string(model.kind))},
              {"seed", model.seed},
              {"dims", {{"d", p.input}, {"h", p.hidden}, {"v", p.vocab}}},
              {"vocab", vocab},
              {"params", params}};
  if (model.egate) {
    const EGateConfig& c = model.egate_config;
    doc["egate"] = {{"window", c.window},
                    {"lambda", c.lambda},
                    {"gain", c.gain},
                    {"encode_scale", c.encode_scale},
                    {"p_encode", matrix_to_json(model.egate->p_encode)},
                    {"beta", matrix_to_json(model.egate->beta)},
                    {"fitted", model.egate->beta_fit_end.has_value()}};
  }
  return doc;
}

Model model_from_json(const json& doc) {
  if (!doc.is_object()) throw InputError("checkpoint: document is not an object");
  const int version = scalar<int>(doc, "format_version");
  if (version != kCheckpointFormatVersion) {
    throw InputError("checkpoint: unsupported format_version " + std::to_string(version));
  }
  Model m;
  try {
    m.kind = parse_model_kind(scalar<std::string>(doc, "model"));
  } catch (const ShapeError& e) {
    throw InputError(std::string("checkpoint: ") + e.what());
  }
  m.seed = scalar<std::uint64_t>(doc, "seed");
  const json& dims = field(doc, "dims");
  const auto d = scalar<std::size_t>(dims, "d");
  const auto h = scalar<std::size_t>(dims, "h");
  const auto v = scalar<std::size_t>(dims, "v");
  if (d == 0 || h == 0 || v == 0) throw InputError("checkpoint: dims must be >= 1");

  const auto codes = scalar<std::vector<std::uint32_t>>(doc, "vocab");
  if (codes.size() != v || d != v) {
    throw InputError("checkpoint: vocabulary size disagrees with dims");
  }
  std::u32string chars;
  for (std::uint32_t c : codes) chars.push_back(static_cast<char32_t>(c));
  try {
    m.vocab = Vocab::from_chars(chars);
  } catch (const ShapeError& e) {
    throw InputError(std::string("checkpoint: ") + e.what());
  }
  if (m.vocab.chars() != chars) throw InputError("checkpoint: vocab must be sorted");

  const json& params = field(doc, "params");
  LstmParams& p = m.params;
  p.input = d;
  p.hidden = h;
  p.vocab = v;
  p.w_f = matrix_from_json(field(params, "W_f"), h, h + d, "W_f");
  p.w_i = matrix_from_json(field(params, "W_i"), h, h + d, "W_i");
  p.w_c = matrix_from_json(field(params, "W_c"), h, h + d, "W_c");
  p.w_o = matrix_from_json(field(params, "W_o"), h, h + d, "W_o");
  p.b_f = vector_from_json(field(params, "b_f"), h, "b_f");
  p.b_i = vector_from_json(field(params, "b_i"), h, "b_i");
  p.b_c = vector_from_json(field(params, "b_c"), h, "b_c");
  p.b_o = vector_from_json(field(params, "b_o"), h, "b_o");
  p.w_y = matrix_from_json(field(params, "W_y"), v, h, "W_y");
  p.b_y = vector_from_json(field(params, "b_y"), v, "b_y");

  if (m.kind == ModelKind::kElstm) {
    const json& eg = field(doc, "egate");
    EGateConfig& c = m.egate_config;
    c.window = scalar<std::size_t>(eg, "window");
    c.lambda = scalar<double>(eg, "lambda");
    c.gain = scalar<double>(eg, "gain");
    c.encode_scale = scalar<double>(eg, "encode_scale");
    try {
      c.validate();
    } catch (const ShapeError& e) {
      throw InputError(std::string("checkpoint: ") + e.what());
    }
    EGateState g;
    g.p_encode = matrix_from_json(field(eg, "p_encode"), v, h, "p_encode");
    g.beta = matrix_from_json(field(eg, "beta"), h, h, "beta");
    if (scalar<bool>(eg, "fitted")) g.beta_fit_end = 0;
    m.egate = std::move(g);
  }
  return m;
}

void save_checkpoint(const Model& model, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw InputError("cannot write checkpoint '" + path.string() + "'");
  out << model_to_json(model).dump() << '\n';
  if (!out) throw InputError("failed writing checkpoint '" + path.string() + "'");
}

Model load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open checkpoint '" + path.string() + "'");
  json doc;
  try {
    in >> doc;
  } catch (const json::exception& e) {
    throw InputError("checkpoint '" + path.string() + "' is not valid JSON: " + e.what());
  }
  return model_from_json(doc);
}

json elm_to_json(const ElmModel& model) {
  return {{"format_version", kCheckpointFormatVersion},
          {"activation", std::string(to_string(model.activation))},
          {"dims", {{"l", model.hidden_nodes()},
                    {"d", model.input_dim()},
                    {"m", model.output_dim()}}},
          {"w", matrix_to_json(model.w)},
          {"b", model.b},
          {"beta", matrix_to_json(model.beta)}};
}

ElmModel elm_from_json(const json& doc) {
  if (scalar<int>(doc, "format_version") != kCheckpointFormatVersion) {
    throw InputError("elm checkpoint: unsupported format_version");
  }
  const json& dims = field(doc, "dims");
  const auto l = scalar<std::size_t>(dims, "l");
  const auto d = scalar<std::size_t>(dims, "d");
  const auto mdim = scalar<std::size_t>(dims, "m");
  ElmModel m;
  try {
    m.activation = parse_activation(scalar<std::string>(doc, "activation"));
  } catch (const ShapeError& e) {
    throw InputError(std::string("elm checkpoint: ") + e.what());
  }
  m.w = matrix_from_json(field(doc, "w"), l, d, "w");
  m.b = vector_from_json(field(doc, "b"), l, "b");
  m.beta = matrix_from_json(field(doc, "beta"), l, mdim, "beta");
  return m;
}

void write_metrics_rows(std::ostream& out, ModelKind kind,
                        const std::vector<EpochMetrics>& metrics) {
  char line[256];
  const std::string name(to_string(kind));
  for (const EpochMetrics& m : metrics) {
    std::snprintf(line, sizeof line, "%zu,%s,%.6f,%.6f,%.6f\n", m.epoch, name.c_str(),
                  m.mean_loss, m.accuracy, m.seconds);
    out << line;
  }
}

void write_metrics_csv(const std::filesystem::path& path,
                       const std::vector<ModelSeries>& series) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw InputError("cannot write metrics '" + path.string() + "'");
  out << kMetricsCsvHeader << '\n';
  for (const ModelSeries& s : series) write_metrics_rows(out, s.kind, s.metrics);
  if (!out) throw InputError("failed writing metrics '" + path.string() + "'");
}

json report_to_json(const ComparisonReport& report, const json& config) {
  json targets = json::array();
  for (const TargetEpochs& t : report.epochs_to_target) {
    targets.push_back({{"target", t.target},
                       {"lstm", optional_count(t.lstm)},
                       {"elstm", optional_count(t.elstm)},
                       {"ratio", optional_number(t.ratio)}});
  }
  return {{"models",
           {{"lstm", series_to_json(report.lstm)}, {"elstm", series_to_json(report.elstm)}}},
          {"overhead_pct", optional_number(report.overhead_pct)},
          {"epochs_to_target", targets},
          {"reference_overhead_pct", {17.53, 24.26}},
          {"config", config}};
}

}  // namespace elstm_lab
