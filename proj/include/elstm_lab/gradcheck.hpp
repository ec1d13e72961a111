#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>

#include "elstm_lab/elstm.hpp"
#include "elstm_lab/lstm.hpp"
#include "elstm_lab/trainer.hpp"

namespace elstm_lab {

/// Gradients this small are compared in absolute rather than relative terms:
/// rel = |analytic - numeric| / max(|analytic|, |numeric|, kGradcheckFloor).
inline constexpr double kGradcheckFloor = 1e-5;

struct GradcheckResult {
  double max_rel_error = 0.0;
  std::string worst_block;
  std::size_t worst_index = 0;
  double worst_analytic = 0.0;
  double worst_numeric = 0.0;
  std::size_t parameter_count = 0;
  std::size_t gate_terms_applied = 0;  // steps whose cell update had an e_t term
};

double relative_error(double analytic, double numeric);

/// Mean cross-entropy of the LSTM cell over a segment, with fixed per-step
/// additive cell terms (empty entries mean none). The loss the E-LSTM computes
/// when its gate terms are frozen.
double loss_with_fixed_terms(const LstmParams& p, const LstmState& s0,
                             std::span<const std::size_t> xs,
                             std::span<const std::size_t> ys,
                             std::span<const Vector> terms);

/// Central differences of every parameter against backward_sequence.
GradcheckResult gradcheck_lstm(const LstmParams& p, std::span<const std::size_t> xs,
                               std::span<const std::size_t> ys, double eps = 1e-5);

/// Runs the E-LSTM forward (updating gate), then compares elstm_backward with
/// central differences of the frozen-gate loss.
GradcheckResult gradcheck_elstm(const LstmParams& p, EGateState& gate,
                                const EGateConfig& cfg, std::span<const std::size_t> xs,
                                std::span<const std::size_t> ys, double eps = 1e-5);

/// Tiny network (vocabulary 4) with weights uniform on [-0.5, 0.5] and a
/// random sequence, all from substream "gradcheck". For E-LSTM the gate
/// window is half the segment, so later steps carry a fitted gate term.
GradcheckResult run_gradcheck(ModelKind kind, std::size_t hidden, std::size_t seg_len,
                              std::uint64_t seed, double eps = 1e-5);

}  // namespace elstm_lab
