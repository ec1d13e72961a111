#include "elstm_lab/elm.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "elstm_lab/error.hpp"
#include "elstm_lab/rng.hpp"

namespace elstm_lab {
namespace {

double activate(Activation a, double z) {
  switch (a) {
    case Activation::kSigmoid:
      return sigmoid(z);
    case Activation::kTanh:
      return std::tanh(z);
    case Activation::kRelu:
      return std::max(z, 0.0);
  }
  return z;
}

}  // namespace

std::string_view to_string(Activation a) {
  switch (a) {
    case Activation::kSigmoid:
      return "sigmoid";
    case Activation::kTanh:
      return "tanh";
    case Activation::kRelu:
      return "relu";
  }
  return "unknown";
}

Activation parse_activation(std::string_view name) {
  if (name == "sigmoid") return Activation::kSigmoid;
  if (name == "tanh") return Activation::kTanh;
  if (name == "relu") return Activation::kRelu;
  throw ShapeError("unknown activation '" + std::string(name) + "'");
}

Matrix elm_hidden(const ElmModel& m, const Matrix& x) {
  if (x.cols() != m.input_dim()) {
    throw ShapeError("elm: input " + x.shape_string() + " does not match " +
                     std::to_string(m.input_dim()) + " features");
  }
  Matrix h(x.rows(), m.hidden_nodes());
  for (std::size_t n = 0; n < x.rows(); ++n) {
    auto xr = x.row(n);
    for (std::size_t l = 0; l < m.hidden_nodes(); ++l) {
      auto wr = m.w.row(l);
      double z = m.b[l];
      for (std::size_t d = 0; d < xr.size(); ++d) z += wr[d] * xr[d];
      h(n, l) = activate(m.activation, z);
    }
  }
  return h;
}

ElmModel elm_fit(const Matrix& x, const Matrix& t, std::size_t hidden_nodes,
                 std::uint64_t seed, Activation activation) {
  if (x.empty() || t.empty()) throw ShapeError("elm_fit: empty training data");
  if (x.rows() != t.rows()) {
    throw ShapeError("elm_fit: inputs " + x.shape_string() + " and targets " +
                     t.shape_string() + " have different sample counts");
  }
  if (hidden_nodes == 0) throw ShapeError("elm_fit: need at least one hidden node");

  ElmModel m;
  m.activation = activation;
  m.w = Matrix(hidden_nodes, x.cols());
  m.b = Vector(hidden_nodes);
  Substream rng(seed, "elm");
  for (double& v : m.w.data()) v = rng.uniform(-1.0, 1.0);
  for (double& v : m.b) v = rng.uniform(-1.0, 1.0);

  m.beta = matmul(pinv(elm_hidden(m, x)), t);
  return m;
}

Matrix elm_predict(const ElmModel& m, const Matrix& x) {
  return matmul(elm_hidden(m, x), m.beta);
}

}  // namespace elstm_lab
