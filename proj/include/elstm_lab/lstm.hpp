#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>
#include <utility>
#include <vector>

#include "elstm_lab/error.hpp"
#include "elstm_lab/linalg.hpp"

namespace elstm_lab {

/// Weights of a single-layer LSTM with a softmax readout.
///
/// Gate matrices act on the concatenation [h_{t-1}, x_t], so each is
/// hidden x (hidden + input). The readout maps h_t to vocabulary logits.
/// Gradients use the same type (see LstmGrads).
struct LstmParams {
  std::size_t input = 0;   // D
  std::size_t hidden = 0;  // H
  std::size_t vocab = 0;   // V

  Matrix w_f, w_i, w_c, w_o;  // H x (H + D)
  Vector b_f, b_i, b_c, b_o;  // H
  Matrix w_y;                 // V x H
  Vector b_y;                 // V

  /// All-zero parameters of the given dimensions.
  static LstmParams zeros(std::size_t d, std::size_t h, std::size_t v);

  std::size_t parameter_count() const;
  /// Throws ShapeError if any block disagrees with (input, hidden, vocab).
  void validate() const;

  friend bool operator==(const LstmParams&, const LstmParams&) = default;
};

using LstmGrads = LstmParams;

/// Named view of one parameter block, in a fixed canonical order.
template <typename T>
struct ParamBlock {
  std::string_view name;
  std::span<T> values;
};

inline constexpr std::size_t kParamBlockCount = 10;

std::array<ParamBlock<double>, kParamBlockCount> blocks(LstmParams& p);
std::array<ParamBlock<const double>, kParamBlockCount> blocks(const LstmParams& p);

struct LstmState {
  Vector h;
  Vector c;

  static LstmState zeros(std::size_t hidden) {
    return {Vector(hidden, 0.0), Vector(hidden, 0.0)};
  }
  friend bool operator==(const LstmState&, const LstmState&) = default;
};

/// Everything one timestep needs for exact backward replay.
struct StepCache {
  std::size_t x = 0;  // index of the hot input entry
  Vector h_prev, c_prev;
  Vector f, i, g, o;  // g is the cell candidate
  Vector e;           // additive cell term actually applied; empty when none
  Vector c, tanh_c, h;
  Vector logits, probs;
};

/// Uniform [-0.08, 0.08] weights from substream "weights"; zero biases.
LstmParams init_params(std::size_t d, std::size_t h, std::size_t v, std::uint64_t seed);

/// One step of the standard LSTM cell on a one-hot input with hot index x.
std::pair<LstmState, StepCache> lstm_step(const LstmParams& p, const LstmState& s,
                                          std::size_t x);

/// Same cell with an extra additive term in the cell update:
///   c_t = f * c_{t-1} + i * g + extra(f).
/// The callback sees the forget activation and returns the term (or an empty
/// vector for none). Plain lstm_step is this with no callback.
template <typename ExtraFn>
std::pair<LstmState, StepCache> lstm_step_with(const LstmParams& p, const LstmState& s,
                                               std::size_t x, ExtraFn&& extra);

struct ForwardResult {
  double loss = 0.0;  // mean cross-entropy over timesteps
  std::vector<StepCache> caches;
  LstmState end;
};

ForwardResult forward_sequence(const LstmParams& p, const LstmState& s0,
                               std::span<const std::size_t> xs,
                               std::span<const std::size_t> ys);

/// Exact BPTT gradients of the mean cross-entropy over the cached segment.
/// Each cache's e term is treated as a constant input.
LstmGrads backward_sequence(const LstmParams& p, std::span<const StepCache> caches,
                            std::span<const std::size_t> ys);

/// Global L2 norm over every gradient block.
double global_norm(const LstmGrads& g);

/// Clips g to global norm <= clip, then returns p - lr * g. Throws NumericError
/// naming the block when a gradient entry is non-finite.
LstmParams sgd_update(const LstmParams& p, const LstmGrads& g, double lr, double clip);

struct LagNorm {
  std::size_t lag = 0;
  double norm = 0.0;
};

/// ||dL_T / dh_{T-q}|| for the loss of the final step alone, q = 0 .. T-1.
/// The cell state at each step is held fixed; only the hidden-state path
/// (and the cell path it feeds forward) is differentiated.
std::vector<LagNorm> grad_norm_profile(const LstmParams& p,
                                       std::span<const StepCache> caches,
                                       std::span<const std::size_t> ys);

// ---------------------------------------------------------------------------

namespace detail {
void gate_preactivations(const LstmParams& p, const LstmState& s, std::size_t x,
                         StepCache& cache);
void finish_step(const LstmParams& p, StepCache& cache);
void check_step_shapes(const LstmParams& p, const LstmState& s, std::size_t x);
}  // namespace detail

template <typename ExtraFn>
std::pair<LstmState, StepCache> lstm_step_with(const LstmParams& p, const LstmState& s,
                                               std::size_t x, ExtraFn&& extra) {
  detail::check_step_shapes(p, s, x);
  StepCache cache;
  detail::gate_preactivations(p, s, x, cache);
  cache.e = extra(std::span<const double>(cache.f));
  if (!cache.e.empty() && cache.e.size() != p.hidden) {
    throw ShapeError("lstm_step: additive cell term has wrong length");
  }
  detail::finish_step(p, cache);
  LstmState next{cache.h, cache.c};
  return {std::move(next), std::move(cache)};
}

}  // namespace elstm_lab
