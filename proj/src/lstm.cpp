#include "elstm_lab/lstm.hpp"

#include <cmath>
#include <string>

#include "elstm_lab/error.hpp"
#include "elstm_lab/rng.hpp"

namespace elstm_lab {
namespace {

constexpr double kInitRange = 0.08;

void fill_uniform(Matrix& m, Substream& rng) {
  for (double& x : m.data()) x = rng.uniform(-kInitRange, kInitRange);
}

// out += W * [h, onehot(x)] for one gate.
void gate_affine(const Matrix& w, const Vector& b, std::span<const double> h,
                 std::size_t x, std::size_t hidden, Vector& out) {
  out.assign(b.begin(), b.end());
  for (std::size_t r = 0; r < hidden; ++r) {
    auto row = w.row(r);
    double acc = 0.0;
    for (std::size_t k = 0; k < hidden; ++k) acc += row[k] * h[k];
    out[r] += acc + row[hidden + x];
  }
}

void check_matrix(const Matrix& m, std::size_t rows, std::size_t cols,
                  const char* name) {
  if (m.rows() != rows || m.cols() != cols) {
    throw ShapeError(std::string("LstmParams: ") + name + " is " + m.shape_string() +
                     ", expected (" + std::to_string(rows) + "x" +
                     std::to_string(cols) + ")");
  }
}

void check_vector(const Vector& v, std::size_t n, const char* name) {
  if (v.size() != n) {
    throw ShapeError(std::string("LstmParams: ") + name + " has length " +
                     std::to_string(v.size()) + ", expected " + std::to_string(n));
  }
}

// Accumulates dW += da * [h_prev, onehot(x)]^T and db += da for one gate.
void accumulate_gate(const Vector& da, const StepCache& c, std::size_t hidden,
                     Matrix& dw, Vector& db) {
  for (std::size_t r = 0; r < hidden; ++r) {
    const double d = da[r];
    if (d == 0.0) continue;
    auto row = dw.row(r);
    for (std::size_t k = 0; k < hidden; ++k) row[k] += d * c.h_prev[k];
    row[hidden + c.x] += d;
    db[r] += d;
  }
}

// dh_prev += W[:, :H]^T * da for one gate.
void backprop_gate_to_h(const Matrix& w, const Vector& da, std::size_t hidden,
                        Vector& dh_prev) {
  for (std::size_t r = 0; r < hidden; ++r) {
    const double d = da[r];
    if (d == 0.0) continue;
    auto row = w.row(r);
    for (std::size_t k = 0; k < hidden; ++k) dh_prev[k] += row[k] * d;
  }
}

struct GateDeltas {
  Vector f, i, g, o;
};

// Given dL/dh_t and dL/dc_t (excluding the h_t path), computes gate
// pre-activation deltas and the carried dL/dc_{t-1}.
GateDeltas cell_backward(const StepCache& c, const Vector& dh, Vector& dc_carry) {
  const std::size_t n = dh.size();
  GateDeltas d{Vector(n), Vector(n), Vector(n), Vector(n)};
  for (std::size_t k = 0; k < n; ++k) {
    const double dc = dc_carry[k] + dh[k] * c.o[k] * (1.0 - c.tanh_c[k] * c.tanh_c[k]);
    d.o[k] = dh[k] * c.tanh_c[k] * c.o[k] * (1.0 - c.o[k]);
    d.f[k] = dc * c.c_prev[k] * c.f[k] * (1.0 - c.f[k]);
    d.i[k] = dc * c.g[k] * c.i[k] * (1.0 - c.i[k]);
    d.g[k] = dc * c.i[k] * (1.0 - c.g[k] * c.g[k]);
    dc_carry[k] = dc * c.f[k];
  }
  return d;
}

Vector hidden_from_gates(const LstmParams& p, const GateDeltas& d) {
  Vector dh_prev(p.hidden, 0.0);
  backprop_gate_to_h(p.w_f, d.f, p.hidden, dh_prev);
  backprop_gate_to_h(p.w_i, d.i, p.hidden, dh_prev);
  backprop_gate_to_h(p.w_c, d.g, p.hidden, dh_prev);
  backprop_gate_to_h(p.w_o, d.o, p.hidden, dh_prev);
  return dh_prev;
}

void check_targets(const LstmParams& p, std::span<const StepCache> caches,
                   std::span<const std::size_t> ys) {
  if (caches.size() != ys.size()) {
    throw ShapeError("backward: " + std::to_string(caches.size()) + " caches for " +
                     std::to_string(ys.size()) + " targets");
  }
  for (std::size_t y : ys) {
    if (y >= p.vocab) throw ShapeError("backward: target index out of range");
  }
}

}  // namespace

LstmParams LstmParams::zeros(std::size_t d, std::size_t h, std::size_t v) {
  if (d == 0 || h == 0 || v == 0) {
    throw ShapeError("LstmParams: dimensions must be >= 1");
  }
  LstmParams p;
  p.input = d;
  p.hidden = h;
  p.vocab = v;
  p.w_f = p.w_i = p.w_c = p.w_o = Matrix(h, h + d);
  p.b_f = p.b_i = p.b_c = p.b_o = Vector(h, 0.0);
  p.w_y = Matrix(v, h);
  p.b_y = Vector(v, 0.0);
  return p;
}

std::size_t LstmParams::parameter_count() const {
  std::size_t n = 0;
  for (const auto& b : blocks(*this)) n += b.values.size();
  return n;
}

void LstmParams::validate() const {
  if (input == 0 || hidden == 0 || vocab == 0) {
    throw ShapeError("LstmParams: dimensions must be >= 1");
  }
  check_matrix(w_f, hidden, hidden + input, "W_f");
  check_matrix(w_i, hidden, hidden + input, "W_i");
  check_matrix(w_c, hidden, hidden + input, "W_c");
  check_matrix(w_o, hidden, hidden + input, "W_o");
  check_vector(b_f, hidden, "b_f");
  check_vector(b_i, hidden, "b_i");
  check_vector(b_c, hidden, "b_c");
  check_vector(b_o, hidden, "b_o");
  check_matrix(w_y, vocab, hidden, "W_y");
  check_vector(b_y, vocab, "b_y");
}

std::array<ParamBlock<double>, kParamBlockCount> blocks(LstmParams& p) {
  return {{{"W_f", p.w_f.data()},
           {"W_i", p.w_i.data()},
           {"W_c", p.w_c.data()},
           {"W_o", p.w_o.data()},
           {"b_f", p.b_f},
           {"b_i", p.b_i},
           {"b_c", p.b_c},
           {"b_o", p.b_o},
           {"W_y", p.w_y.data()},
           {"b_y", p.b_y}}};
}

std::array<ParamBlock<const double>, kParamBlockCount> blocks(const LstmParams& p) {
  return {{{"W_f", p.w_f.data()},
           {"W_i", p.w_i.data()},
           {"W_c", p.w_c.data()},
           {"W_o", p.w_o.data()},
           {"b_f", p.b_f},
           {"b_i", p.b_i},
           {"b_c", p.b_c},
           {"b_o", p.b_o},
           {"W_y", p.w_y.data()},
           {"b_y", p.b_y}}};
}

LstmParams init_params(std::size_t d, std::size_t h, std::size_t v, std::uint64_t seed) {
  LstmParams p = LstmParams::zeros(d, h, v);
  Substream rng(seed, "weights");
  fill_uniform(p.w_f, rng);
  fill_uniform(p.w_i, rng);
  fill_uniform(p.w_c, rng);
  fill_uniform(p.w_o, rng);
  fill_uniform(p.w_y, rng);
  return p;
}

namespace detail {

void check_step_shapes(const LstmParams& p, const LstmState& s, std::size_t x) {
  if (s.h.size() != p.hidden || s.c.size() != p.hidden) {
    throw ShapeError("lstm_step: state length " + std::to_string(s.h.size()) + "/" +
                     std::to_string(s.c.size()) + " does not match hidden size " +
                     std::to_string(p.hidden));
  }
  if (x >= p.input) {
    throw ShapeError("lstm_step: input index " + std::to_string(x) +
                     " out of range for input size " + std::to_string(p.input));
  }
}

void gate_preactivations(const LstmParams& p, const LstmState& s, std::size_t x,
                         StepCache& cache) {
  const std::size_t n = p.hidden;
  cache.x = x;
  cache.h_prev = s.h;
  cache.c_prev = s.c;
  gate_affine(p.w_f, p.b_f, s.h, x, n, cache.f);
  gate_affine(p.w_i, p.b_i, s.h, x, n, cache.i);
  gate_affine(p.w_c, p.b_c, s.h, x, n, cache.g);
  gate_affine(p.w_o, p.b_o, s.h, x, n, cache.o);
  for (std::size_t k = 0; k < n; ++k) {
    cache.f[k] = sigmoid(cache.f[k]);
    cache.i[k] = sigmoid(cache.i[k]);
    cache.g[k] = std::tanh(cache.g[k]);
    cache.o[k] = sigmoid(cache.o[k]);
  }
}

void finish_step(const LstmParams& p, StepCache& cache) {
  const std::size_t n = p.hidden;
  cache.c.resize(n);
  cache.tanh_c.resize(n);
  cache.h.resize(n);
  for (std::size_t k = 0; k < n; ++k) {
    double c = cache.f[k] * cache.c_prev[k] + cache.i[k] * cache.g[k];
    if (!cache.e.empty()) c += cache.e[k];
    cache.c[k] = c;
    cache.tanh_c[k] = std::tanh(c);
    cache.h[k] = cache.o[k] * cache.tanh_c[k];
  }
  cache.logits.assign(p.b_y.begin(), p.b_y.end());
  for (std::size_t r = 0; r < p.vocab; ++r) {
    auto row = p.w_y.row(r);
    double acc = 0.0;
    for (std::size_t k = 0; k < n; ++k) acc += row[k] * cache.h[k];
    cache.logits[r] += acc;
  }
  cache.probs.resize(p.vocab);
  softmax(cache.logits, cache.probs);
}

}  // namespace detail

std::pair<LstmState, StepCache> lstm_step(const LstmParams& p, const LstmState& s,
                                          std::size_t x) {
  return lstm_step_with(p, s, x, [](std::span<const double>) { return Vector{}; });
}

ForwardResult forward_sequence(const LstmParams& p, const LstmState& s0,
                               std::span<const std::size_t> xs,
                               std::span<const std::size_t> ys) {
  if (xs.size() != ys.size() || xs.empty()) {
    throw ShapeError("forward_sequence: need equal non-zero lengths, got " +
                     std::to_string(xs.size()) + " inputs and " +
                     std::to_string(ys.size()) + " targets");
  }
  ForwardResult out;
  out.caches.reserve(xs.size());
  LstmState s = s0;
  double total = 0.0;
  for (std::size_t t = 0; t < xs.size(); ++t) {
    if (ys[t] >= p.vocab) throw ShapeError("forward_sequence: target out of range");
    auto [next, cache] = lstm_step(p, s, xs[t]);
    total -= std::log(std::max(cache.probs[ys[t]], kProbabilityFloor));
    out.caches.push_back(std::move(cache));
    s = std::move(next);
  }
  out.loss = total / static_cast<double>(xs.size());
  out.end = std::move(s);
  return out;
}

LstmGrads backward_sequence(const LstmParams& p, std::span<const StepCache> caches,
                            std::span<const std::size_t> ys) {
  check_targets(p, caches, ys);
  LstmGrads g = LstmParams::zeros(p.input, p.hidden, p.vocab);
  const std::size_t n = p.hidden;
  const double inv_len = 1.0 / static_cast<double>(caches.size());
  Vector dh_next(n, 0.0);
  Vector dc_carry(n, 0.0);

  for (std::size_t t = caches.size(); t-- > 0;) {
    const StepCache& c = caches[t];
    // Softmax + cross-entropy: dlogits = (probs - onehot(y)) / T.
    Vector dh = dh_next;
    for (std::size_t r = 0; r < p.vocab; ++r) {
      const double dl = (c.probs[r] - (r == ys[t] ? 1.0 : 0.0)) * inv_len;
      g.b_y[r] += dl;
      auto gw = g.w_y.row(r);
      auto w = p.w_y.row(r);
      for (std::size_t k = 0; k < n; ++k) {
        gw[k] += dl * c.h[k];
        dh[k] += w[k] * dl;
      }
    }
    const GateDeltas d = cell_backward(c, dh, dc_carry);
    accumulate_gate(d.f, c, n, g.w_f, g.b_f);
    accumulate_gate(d.i, c, n, g.w_i, g.b_i);
    accumulate_gate(d.g, c, n, g.w_c, g.b_c);
    accumulate_gate(d.o, c, n, g.w_o, g.b_o);
    dh_next = hidden_from_gates(p, d);
  }
  return g;
}

double global_norm(const LstmGrads& g) {
  // Scaled by the largest entry so huge gradients do not overflow to inf.
  double peak = 0.0;
  for (const auto& b : blocks(g))
    for (double x : b.values) peak = std::max(peak, std::abs(x));
  if (peak == 0.0 || !std::isfinite(peak)) return peak;
  double s = 0.0;
  for (const auto& b : blocks(g))
    for (double x : b.values) s += (x / peak) * (x / peak);
  return peak * std::sqrt(s);
}

LstmParams sgd_update(const LstmParams& p, const LstmGrads& g, double lr, double clip) {
  if (!(lr >= 0.0)) throw ShapeError("sgd_update: learning rate must be >= 0");
  if (!(clip > 0.0)) throw ShapeError("sgd_update: clip must be > 0");
  p.validate();
  g.validate();
  if (g.input != p.input || g.hidden != p.hidden || g.vocab != p.vocab) {
    throw ShapeError("sgd_update: gradient dimensions differ from parameters");
  }
  for (const auto& b : blocks(g)) {
    if (!all_finite(b.values)) {
      throw NumericError("sgd_update: non-finite gradient in block " +
                         std::string(b.name));
    }
  }
  const double norm = global_norm(g);
  const double factor = norm > clip ? clip / norm : 1.0;
  const double step = lr * factor;

  LstmParams out = p;
  auto out_blocks = blocks(out);
  const auto g_blocks = blocks(g);
  for (std::size_t b = 0; b < kParamBlockCount; ++b) {
    auto dst = out_blocks[b].values;
    auto src = g_blocks[b].values;
    for (std::size_t k = 0; k < dst.size(); ++k) dst[k] -= step * src[k];
    if (!all_finite(dst)) {
      throw NumericError("sgd_update: update overflowed in block " +
                         std::string(out_blocks[b].name));
    }
  }
  return out;
}

std::vector<LagNorm> grad_norm_profile(const LstmParams& p,
                                       std::span<const StepCache> caches,
                                       std::span<const std::size_t> ys) {
  check_targets(p, caches, ys);
  if (caches.empty()) return {};
  const std::size_t n = p.hidden;
  const StepCache& last = caches.back();
  Vector dh(n, 0.0);
  for (std::size_t r = 0; r < p.vocab; ++r) {
    const double dl = last.probs[r] - (r == ys.back() ? 1.0 : 0.0);
    auto w = p.w_y.row(r);
    for (std::size_t k = 0; k < n; ++k) dh[k] += w[k] * dl;
  }

  auto norm = [](const Vector& v) {
    double s = 0.0;
    for (double x : v) s += x * x;
    return std::sqrt(s);
  };

  std::vector<LagNorm> profile;
  profile.push_back({0, norm(dh)});
  Vector dc_carry(n, 0.0);
  for (std::size_t lag = 1; lag < caches.size(); ++lag) {
    const StepCache& c = caches[caches.size() - lag];
    const GateDeltas d = cell_backward(c, dh, dc_carry);
    dh = hidden_from_gates(p, d);
    profile.push_back({lag, norm(dh)});
  }
  return profile;
}

}  // namespace elstm_lab
