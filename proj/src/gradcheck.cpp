#include "elstm_lab/gradcheck.hpp"

#include <algorithm>
#include <cmath>

#include "elstm_lab/rng.hpp"

namespace elstm_lab {
namespace {

constexpr std::size_t kGradcheckVocab = 4;

template <typename LossFn>
GradcheckResult compare(const LstmParams& p, const LstmGrads& analytic, double eps,
                        LossFn&& loss) {
  GradcheckResult r;
  r.parameter_count = p.parameter_count();
  LstmParams probe = p;
  auto probe_blocks = blocks(probe);
  const auto grad_blocks = blocks(analytic);
  for (std::size_t b = 0; b < kParamBlockCount; ++b) {
    auto values = probe_blocks[b].values;
    for (std::size_t k = 0; k < values.size(); ++k) {
      const double saved = values[k];
      values[k] = saved + eps;
      const double up = loss(probe);
      values[k] = saved - eps;
      const double down = loss(probe);
      values[k] = saved;
      const double numeric = (up - down) / (2.0 * eps);
      const double a = grad_blocks[b].values[k];
      const double err = relative_error(a, numeric);
      if (err > r.max_rel_error || r.worst_block.empty()) {
        r.max_rel_error = err;
        r.worst_block = std::string(probe_blocks[b].name);
        r.worst_index = k;
        r.worst_analytic = a;
        r.worst_numeric = numeric;
      }
    }
  }
  return r;
}

}  // namespace

double relative_error(double analytic, double numeric) {
  const double denom = std::max({std::abs(analytic), std::abs(numeric), kGradcheckFloor});
  return std::abs(analytic - numeric) / denom;
}

double loss_with_fixed_terms(const LstmParams& p, const LstmState& s0,
                             std::span<const std::size_t> xs,
                             std::span<const std::size_t> ys,
                             std::span<const Vector> terms) {
  if (xs.size() != ys.size() || xs.size() != terms.size() || xs.empty()) {
    throw ShapeError("loss_with_fixed_terms: length mismatch");
  }
  LstmState s = s0;
  double total = 0.0;
  for (std::size_t t = 0; t < xs.size(); ++t) {
    auto [next, cache] = lstm_step_with(p, s, xs[t],
                                        [&](std::span<const double>) { return terms[t]; });
    total -= std::log(std::max(cache.probs[ys[t]], kProbabilityFloor));
    s = std::move(next);
  }
  return total / static_cast<double>(xs.size());
}

GradcheckResult gradcheck_lstm(const LstmParams& p, std::span<const std::size_t> xs,
                               std::span<const std::size_t> ys, double eps) {
  const LstmState s0 = LstmState::zeros(p.hidden);
  const ForwardResult fw = forward_sequence(p, s0, xs, ys);
  const LstmGrads g = backward_sequence(p, fw.caches, ys);
  return compare(p, g, eps, [&](const LstmParams& q) {
    return forward_sequence(q, s0, xs, ys).loss;
  });
}

GradcheckResult gradcheck_elstm(const LstmParams& p, EGateState& gate,
                                const EGateConfig& cfg, std::span<const std::size_t> xs,
                                std::span<const std::size_t> ys, double eps) {
  const LstmState s0 = LstmState::zeros(p.hidden);
  const ForwardResult fw = elstm_forward_sequence(p, s0, gate, cfg, xs, ys);
  std::vector<Vector> terms;
  std::size_t applied = 0;
  for (const StepCache& c : fw.caches) {
    terms.push_back(c.e);
    if (!c.e.empty()) ++applied;
  }
  const LstmGrads g = elstm_backward(p, fw.caches, ys);
  GradcheckResult r = compare(p, g, eps, [&](const LstmParams& q) {
    return loss_with_fixed_terms(q, s0, xs, ys, terms);
  });
  r.gate_terms_applied = applied;
  return r;
}

GradcheckResult run_gradcheck(ModelKind kind, std::size_t hidden, std::size_t seg_len,
                              std::uint64_t seed, double eps) {
  if (hidden < 1 || seg_len < 1) {
    throw ShapeError("run_gradcheck: hidden and seg_len must be >= 1");
  }
  if (!(eps > 0.0)) throw ShapeError("run_gradcheck: eps must be > 0");
  Substream rng(seed, "gradcheck");
  LstmParams p = LstmParams::zeros(kGradcheckVocab, hidden, kGradcheckVocab);
  for (auto& b : blocks(p))
    for (double& v : b.values) v = rng.uniform(-0.5, 0.5);
  std::vector<std::size_t> xs(seg_len), ys(seg_len);
  for (std::size_t t = 0; t < seg_len; ++t) {
    xs[t] = rng.below(kGradcheckVocab);
    ys[t] = rng.below(kGradcheckVocab);
  }
  if (kind == ModelKind::kLstm) return gradcheck_lstm(p, xs, ys, eps);

  EGateConfig cfg;
  cfg.window = std::max<std::size_t>(1, seg_len / 2);
  EGateState gate = EGateState::create(hidden, kGradcheckVocab, cfg, seed);
  return gradcheck_elstm(p, gate, cfg, xs, ys, eps);
}

}  // namespace elstm_lab
