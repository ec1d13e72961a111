#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "elstm_lab/linalg.hpp"
#include "elstm_lab/lstm.hpp"

namespace elstm_lab {

/// Tuning of the pseudoinverse gate.
struct EGateConfig {
  std::size_t window = 25;    // forget activations per least-squares solve
  double lambda = 1e-3;       // ridge penalty; 0 selects the plain pseudoinverse
  double gain = 1.0;          // scale of the applied term; 0 disables the gate
  double encode_scale = 0.1;  // bound on the target embedding entries

  void validate() const;
  friend bool operator==(const EGateConfig&, const EGateConfig&) = default;
};

/// Entries of the applied gate term above this magnitude are counted in
/// EGateState::large_term_steps.
inline constexpr double kLargeGateTerm = 10.0;

/// Readout fitted over a sliding window of forget-gate activations.
///
/// The readout beta (H x H) maps a forget activation f_t to a cell-space term
/// beta^T f_t. It is refit by least squares each time the window of
/// (f_t, encoded target) pairs fills, and only the fit from a completed window
/// is ever applied, so a step never sees its own or any later target.
struct EGateState {
  Matrix p_encode;  // V x H, frozen target embedding
  std::vector<Vector> f_window;
  std::vector<Vector> t_window;
  Matrix beta;  // H x H, zero until the first solve

  std::size_t steps = 0;        // steps recorded since creation
  std::size_t window_start = 0; // step index of f_window.front()
  std::optional<std::size_t> beta_fit_end;  // beta fitted on steps < this
  std::size_t solves = 0;
  std::size_t large_term_steps = 0;

  /// Fresh gate: embedding from substream "egate-encode", uniform [-1, 1]
  /// scaled by cfg.encode_scale; empty window; zero beta.
  static EGateState create(std::size_t hidden, std::size_t vocab,
                           const EGateConfig& cfg, std::uint64_t seed);

  std::size_t hidden() const { return beta.rows(); }
  std::size_t vocab() const { return p_encode.rows(); }

  /// Drops the pending window; keeps beta and the embedding.
  void reset_window();
};

/// Row y of the target embedding.
Vector encode_target(std::size_t y, const EGateState& g);

/// Least-squares readout over a full window: ridge_solve(F, T_enc, lambda)
/// with F and T_enc the stacked window rows. Does not modify g.
Matrix egate_solve(const EGateState& g, const EGateConfig& cfg);

struct ElstmStep {
  LstmState state;
  StepCache cache;
  std::size_t step = 0;                     // index of this step in g
  std::optional<std::size_t> beta_fit_end;  // provenance of the beta applied
};

/// One E-LSTM step. Gates are computed as in lstm_step; the cell update gains
/// the term e_t = gain * beta^T f_t from the currently installed beta.
///
/// With a window_target, (f_t, encode_target(window_target)) is appended to
/// the window after the step's output is computed, and a full window is solved
/// and installed for subsequent steps. Without one the gate is frozen: beta
/// is applied but nothing is recorded.
ElstmStep elstm_step(const LstmParams& p, const LstmState& s, EGateState& g,
                     const EGateConfig& cfg, std::size_t x,
                     std::optional<std::size_t> window_target);

/// Runs elstm_step over a segment, recording (f_t, ys[t]) into the window.
ForwardResult elstm_forward_sequence(const LstmParams& p, const LstmState& s0,
                                     EGateState& g, const EGateConfig& cfg,
                                     std::span<const std::size_t> xs,
                                     std::span<const std::size_t> ys);

/// BPTT for E-LSTM segments. The applied gate terms stored in the caches are
/// treated as constants (no gradient flows through beta or through the
/// dependence of e_t on f_t).
LstmGrads elstm_backward(const LstmParams& p, std::span<const StepCache> caches,
                         std::span<const std::size_t> ys);

}  // namespace elstm_lab
