#pragma once

// Test-only reference computations. Nothing here calls into the library's
// numeric paths; each oracle restates the math directly.

#include <cmath>
#include <cstddef>
#include <random>
#include <vector>

#include "elstm_lab/linalg.hpp"
#include "elstm_lab/lstm.hpp"

namespace oracle {

using elstm_lab::LstmParams;
using elstm_lab::Matrix;

inline Matrix random_matrix(std::size_t rows, std::size_t cols, std::mt19937_64& rng,
                            double lo = -1.0, double hi = 1.0) {
  std::uniform_real_distribution<double> dist(lo, hi);
  Matrix m(rows, cols);
  for (double& x : m.data()) x = dist(rng);
  return m;
}

inline Matrix naive_matmul(const Matrix& a, const Matrix& b) {
  Matrix out(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < b.cols(); ++j) {
      double s = 0.0;
      for (std::size_t k = 0; k < a.cols(); ++k) s += a(i, k) * b(k, j);
      out(i, j) = s;
    }
  return out;
}

inline Matrix naive_transpose(const Matrix& a) {
  Matrix t(a.cols(), a.rows());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) t(j, i) = a(i, j);
  return t;
}

inline double max_abs_diff(const Matrix& a, const Matrix& b) {
  double d = 0.0;
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) d = std::max(d, std::abs(a(i, j) - b(i, j)));
  return d;
}

struct PenroseResiduals {
  double mxm = 0.0;    // ||M X M - M||_inf
  double xmx = 0.0;    // ||X M X - X||_inf
  double mx_sym = 0.0; // ||M X - (M X)^T||_inf
  double xm_sym = 0.0; // ||X M - (X M)^T||_inf
  double worst() const { return std::max({mxm, xmx, mx_sym, xm_sym}); }
};

inline PenroseResiduals penrose(const Matrix& m, const Matrix& x) {
  PenroseResiduals r;
  const Matrix mx = naive_matmul(m, x);
  const Matrix xm = naive_matmul(x, m);
  r.mxm = max_abs_diff(naive_matmul(mx, m), m);
  r.xmx = max_abs_diff(naive_matmul(xm, x), x);
  r.mx_sym = max_abs_diff(mx, naive_transpose(mx));
  r.xm_sym = max_abs_diff(xm, naive_transpose(xm));
  return r;
}

/// Rank-r matrix as a product of random rows x r and r x cols factors.
inline Matrix random_low_rank(std::size_t rows, std::size_t cols, std::size_t rank,
                              std::mt19937_64& rng) {
  return naive_matmul(random_matrix(rows, rank, rng), random_matrix(rank, cols, rng));
}

inline Matrix inverse_gauss_jordan(Matrix a) {
  const std::size_t n = a.rows();
  Matrix inv = Matrix::identity(n);
  for (std::size_t c = 0; c < n; ++c) {
    std::size_t piv = c;
    for (std::size_t r = c + 1; r < n; ++r)
      if (std::abs(a(r, c)) > std::abs(a(piv, c))) piv = r;
    for (std::size_t k = 0; k < n; ++k) {
      std::swap(a(c, k), a(piv, k));
      std::swap(inv(c, k), inv(piv, k));
    }
    const double d = a(c, c);
    for (std::size_t k = 0; k < n; ++k) {
      a(c, k) /= d;
      inv(c, k) /= d;
    }
    for (std::size_t r = 0; r < n; ++r) {
      if (r == c) continue;
      const double f = a(r, c);
      for (std::size_t k = 0; k < n; ++k) {
        a(r, k) -= f * a(c, k);
        inv(r, k) -= f * inv(c, k);
      }
    }
  }
  return inv;
}

inline double sig(double x) { return 1.0 / (1.0 + std::exp(-x)); }

struct RefState {
  std::vector<double> h, c;
};

/// LSTM step written straight from the gate equations with a dense one-hot
/// input and an explicit concatenation. An optional e is added to the cell.
/// Returns the next-step probabilities.
inline std::vector<double> reference_step(const LstmParams& p, RefState& s, std::size_t x,
                                          const std::vector<double>* e = nullptr) {
  const std::size_t H = p.hidden, D = p.input;
  std::vector<double> z(H + D, 0.0);
  for (std::size_t k = 0; k < H; ++k) z[k] = s.h[k];
  z[H + x] = 1.0;
  auto affine = [&](const Matrix& w, const std::vector<double>& b, std::size_t r) {
    double a = b[r];
    for (std::size_t k = 0; k < H + D; ++k) a += w(r, k) * z[k];
    return a;
  };
  std::vector<double> h(H), c(H);
  for (std::size_t r = 0; r < H; ++r) {
    const double f = sig(affine(p.w_f, p.b_f, r));
    const double i = sig(affine(p.w_i, p.b_i, r));
    const double g = std::tanh(affine(p.w_c, p.b_c, r));
    const double o = sig(affine(p.w_o, p.b_o, r));
    c[r] = f * s.c[r] + i * g + (e && !e->empty() ? (*e)[r] : 0.0);
    h[r] = o * std::tanh(c[r]);
  }
  std::vector<double> logits(p.vocab);
  double mx = -1e300;
  for (std::size_t v = 0; v < p.vocab; ++v) {
    double a = p.b_y[v];
    for (std::size_t k = 0; k < H; ++k) a += p.w_y(v, k) * h[k];
    logits[v] = a;
    mx = std::max(mx, a);
  }
  double sum = 0.0;
  for (double& l : logits) {
    l = std::exp(l - mx);
    sum += l;
  }
  for (double& l : logits) l /= sum;
  s.h = h;
  s.c = c;
  return logits;
}

inline double reference_loss(const LstmParams& p, const std::vector<std::size_t>& xs,
                             const std::vector<std::size_t>& ys,
                             const std::vector<std::vector<double>>* terms = nullptr) {
  RefState s{std::vector<double>(p.hidden, 0.0), std::vector<double>(p.hidden, 0.0)};
  double total = 0.0;
  for (std::size_t t = 0; t < xs.size(); ++t) {
    const auto probs = reference_step(p, s, xs[t], terms ? &(*terms)[t] : nullptr);
    total -= std::log(probs[ys[t]]);
  }
  return total / static_cast<double>(xs.size());
}

}  // namespace oracle
