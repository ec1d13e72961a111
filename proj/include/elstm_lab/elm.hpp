#pragma once

#include <cstddef>
#include <cstdint>
#include <string_view>

#include "elstm_lab/linalg.hpp"

namespace elstm_lab {

enum class Activation { kSigmoid, kTanh, kRelu };

std::string_view to_string(Activation a);
/// Parses "sigmoid", "tanh" or "relu"; throws ShapeError otherwise.
Activation parse_activation(std::string_view name);

/// Single-hidden-layer extreme learning machine.
struct ElmModel {
  Matrix w;      // L x D, random and frozen
  Vector b;      // L
  Matrix beta;   // L x M, solved in closed form
  Activation activation = Activation::kSigmoid;

  std::size_t hidden_nodes() const { return w.rows(); }
  std::size_t input_dim() const { return w.cols(); }
  std::size_t output_dim() const { return beta.cols(); }
};

/// Hidden-layer output H = g(X W^T + b), one row per sample.
Matrix elm_hidden(const ElmModel& m, const Matrix& x);

/// Draws w, b uniform on [-1, 1] from substream "elm", then solves
/// beta = pinv(H) T.
ElmModel elm_fit(const Matrix& x, const Matrix& t, std::size_t hidden_nodes,
                 std::uint64_t seed, Activation activation = Activation::kSigmoid);

/// H(X) beta.
Matrix elm_predict(const ElmModel& m, const Matrix& x);

}  // namespace elstm_lab
