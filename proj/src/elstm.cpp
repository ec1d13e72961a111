#include "elstm_lab/elstm.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "elstm_lab/error.hpp"
#include "elstm_lab/rng.hpp"

namespace elstm_lab {

void EGateConfig::validate() const {
  if (window < 1) throw ShapeError("EGateConfig: window must be >= 1");
  if (!(lambda >= 0.0)) throw ShapeError("EGateConfig: lambda must be >= 0");
  if (!(gain >= 0.0)) throw ShapeError("EGateConfig: gain must be >= 0");
  if (!(encode_scale >= 0.0)) {
    throw ShapeError("EGateConfig: encode_scale must be >= 0");
  }
}

EGateState EGateState::create(std::size_t hidden, std::size_t vocab,
                              const EGateConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  if (hidden == 0 || vocab == 0) {
    throw ShapeError("EGateState: dimensions must be >= 1");
  }
  EGateState g;
  g.p_encode = Matrix(vocab, hidden);
  Substream rng(seed, "egate-encode");
  for (double& v : g.p_encode.data()) v = cfg.encode_scale * rng.uniform(-1.0, 1.0);
  g.beta = Matrix(hidden, hidden);
  return g;
}

void EGateState::reset_window() {
  f_window.clear();
  t_window.clear();
  window_start = steps;
}

Vector encode_target(std::size_t y, const EGateState& g) {
  if (y >= g.p_encode.rows()) {
    throw ShapeError("encode_target: index " + std::to_string(y) +
                     " out of range for vocabulary " +
                     std::to_string(g.p_encode.rows()));
  }
  auto row = g.p_encode.row(y);
  return Vector(row.begin(), row.end());
}

Matrix egate_solve(const EGateState& g, const EGateConfig& cfg) {
  if (g.f_window.size() != cfg.window || g.t_window.size() != cfg.window) {
    throw ShapeError("egate_solve: window holds " + std::to_string(g.f_window.size()) +
                     " rows, needs " + std::to_string(cfg.window));
  }
  const std::size_t n = g.hidden();
  Matrix f(cfg.window, n);
  Matrix t(cfg.window, n);
  for (std::size_t r = 0; r < cfg.window; ++r) {
    std::copy(g.f_window[r].begin(), g.f_window[r].end(), f.row(r).begin());
    std::copy(g.t_window[r].begin(), g.t_window[r].end(), t.row(r).begin());
  }
  return ridge_solve(f, t, cfg.lambda);
}

ElstmStep elstm_step(const LstmParams& p, const LstmState& s, EGateState& g,
                     const EGateConfig& cfg, std::size_t x,
                     std::optional<std::size_t> window_target) {
  if (g.hidden() != p.hidden || g.vocab() != p.vocab) {
    throw ShapeError("elstm_step: gate dimensions do not match parameters");
  }
  if (window_target && *window_target >= p.vocab) {
    throw ShapeError("elstm_step: window target out of range");
  }
  const bool active = cfg.gain != 0.0 && g.beta_fit_end.has_value();
  bool large = false;
  auto gate_term = [&](std::span<const double> f) {
    if (!active) return Vector{};
    const std::size_t n = f.size();
    Vector e(n, 0.0);
    for (std::size_t k = 0; k < n; ++k) {
      const double fk = f[k];
      auto row = g.beta.row(k);
      for (std::size_t j = 0; j < n; ++j) e[j] += row[j] * fk;
    }
    for (double& v : e) {
      v *= cfg.gain;
      if (std::abs(v) > kLargeGateTerm) large = true;
    }
    return e;
  };

  auto [state, cache] = lstm_step_with(p, s, x, gate_term);
  ElstmStep out{std::move(state), std::move(cache), g.steps, g.beta_fit_end};
  if (large) ++g.large_term_steps;

  if (window_target) {
    if (g.f_window.empty()) g.window_start = g.steps;
    g.f_window.push_back(out.cache.f);
    g.t_window.push_back(encode_target(*window_target, g));
    ++g.steps;
    if (g.f_window.size() >= cfg.window) {
      g.beta = egate_solve(g, cfg);
      g.beta_fit_end = g.steps;
      ++g.solves;
      g.reset_window();
    }
  }
  return out;
}

ForwardResult elstm_forward_sequence(const LstmParams& p, const LstmState& s0,
                                     EGateState& g, const EGateConfig& cfg,
                                     std::span<const std::size_t> xs,
                                     std::span<const std::size_t> ys) {
  if (xs.size() != ys.size() || xs.empty()) {
    throw ShapeError("elstm_forward_sequence: need equal non-zero lengths");
  }
  ForwardResult out;
  out.caches.reserve(xs.size());
  LstmState s = s0;
  double total = 0.0;
  for (std::size_t t = 0; t < xs.size(); ++t) {
    if (ys[t] >= p.vocab) throw ShapeError("elstm_forward_sequence: target out of range");
    ElstmStep step = elstm_step(p, s, g, cfg, xs[t], ys[t]);
    total -= std::log(std::max(step.cache.probs[ys[t]], kProbabilityFloor));
    out.caches.push_back(std::move(step.cache));
    s = std::move(step.state);
  }
  out.loss = total / static_cast<double>(xs.size());
  out.end = std::move(s);
  return out;
}

LstmGrads elstm_backward(const LstmParams& p, std::span<const StepCache> caches,
                         std::span<const std::size_t> ys) {
  for (const StepCache& c : caches) {
    if (!c.e.empty() && c.e.size() != p.hidden) {
      throw ShapeError("elstm_backward: cached gate term has wrong length");
    }
  }
  // The cell recurrence is unchanged by a constant additive term; the applied
  // e_t already shaped the cached c_t, tanh(c_t) and h_t.
  return backward_sequence(p, caches, ys);
}

}  // namespace elstm_lab
