#include "elstm_lab/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "elstm_lab/error.hpp"

namespace elstm_lab {
namespace {

void require_finite(std::span<const double> v, const char* what) {
  if (!all_finite(v)) {
    throw NumericError(std::string(what) + ": non-finite entry");
  }
}

void require_same_shape(const Matrix& a, const Matrix& b, const char* op) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw ShapeError(std::string(op) + ": shape mismatch " + a.shape_string() +
                     " vs " + b.shape_string());
  }
}

constexpr int kMaxJacobiSweeps = 80;

}  // namespace

Matrix::Matrix(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols), data_(rows * cols, fill) {
  if (rows == 0 || cols == 0) {
    throw ShapeError("Matrix: dimensions must be positive, got " + shape_string());
  }
  require_finite(data_, "Matrix");
}

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
  if (rows == 0 || cols == 0) {
    throw ShapeError("Matrix: dimensions must be positive, got " + shape_string());
  }
  if (data_.size() != rows * cols) {
    throw ShapeError("Matrix: " + std::to_string(data_.size()) +
                     " values do not fill " + shape_string());
  }
  require_finite(data_, "Matrix");
}

Matrix::Matrix(std::initializer_list<std::initializer_list<double>> rows) {
  rows_ = rows.size();
  cols_ = rows_ == 0 ? 0 : rows.begin()->size();
  if (rows_ == 0 || cols_ == 0) {
    throw ShapeError("Matrix: empty initializer");
  }
  data_.reserve(rows_ * cols_);
  for (const auto& r : rows) {
    if (r.size() != cols_) {
      throw ShapeError("Matrix: ragged initializer");
    }
    data_.insert(data_.end(), r.begin(), r.end());
  }
  require_finite(data_, "Matrix");
}

Matrix Matrix::identity(std::size_t n) {
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

Matrix Matrix::column(std::span<const double> v) {
  return Matrix(v.size(), 1, std::vector<double>(v.begin(), v.end()));
}

std::string Matrix::shape_string() const {
  std::ostringstream os;
  os << "(" << rows_ << "x" << cols_ << ")";
  return os.str();
}

Matrix transpose(const Matrix& m) {
  Matrix t(m.cols(), m.rows());
  for (std::size_t r = 0; r < m.rows(); ++r)
    for (std::size_t c = 0; c < m.cols(); ++c) t(c, r) = m(r, c);
  return t;
}

Matrix matmul(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.rows()) {
    throw ShapeError("matmul: inner dimensions differ, " + a.shape_string() +
                     " x " + b.shape_string());
  }
  Matrix out(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    auto out_row = out.row(i);
    for (std::size_t k = 0; k < a.cols(); ++k) {
      const double aik = a(i, k);
      if (aik == 0.0) continue;
      auto b_row = b.row(k);
      for (std::size_t j = 0; j < b.cols(); ++j) out_row[j] += aik * b_row[j];
    }
  }
  return out;
}

Matrix matmul_tn(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows()) {
    throw ShapeError("matmul_tn: row counts differ, " + a.shape_string() +
                     "^T x " + b.shape_string());
  }
  Matrix out(a.cols(), b.cols());
  for (std::size_t k = 0; k < a.rows(); ++k) {
    auto a_row = a.row(k);
    auto b_row = b.row(k);
    for (std::size_t i = 0; i < a.cols(); ++i) {
      const double aki = a_row[i];
      if (aki == 0.0) continue;
      auto out_row = out.row(i);
      for (std::size_t j = 0; j < b.cols(); ++j) out_row[j] += aki * b_row[j];
    }
  }
  return out;
}

Matrix add(const Matrix& a, const Matrix& b) {
  require_same_shape(a, b, "add");
  Matrix out = a;
  auto o = out.data();
  auto bd = b.data();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] += bd[i];
  return out;
}

Matrix subtract(const Matrix& a, const Matrix& b) {
  require_same_shape(a, b, "subtract");
  Matrix out = a;
  auto o = out.data();
  auto bd = b.data();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] -= bd[i];
  return out;
}

Matrix scale(const Matrix& m, double s) {
  Matrix out = m;
  for (double& x : out.data()) x *= s;
  return out;
}

double max_abs(const Matrix& m) {
  double best = 0.0;
  for (double x : m.data()) best = std::max(best, std::abs(x));
  return best;
}

double frobenius_sq(const Matrix& m) {
  double s = 0.0;
  for (double x : m.data()) s += x * x;
  return s;
}

bool all_finite(std::span<const double> v) {
  return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

// Hestenes one-sided Jacobi: orthogonalize the columns of a working copy of m
// by plane rotations, accumulating the rotations into v. On convergence the
// column norms are the singular values.
Svd svd_jacobi(const Matrix& m) {
  if (m.empty()) throw ShapeError("svd_jacobi: empty matrix");
  if (m.rows() < m.cols()) {
    Svd t = svd_jacobi(transpose(m));
    return Svd{std::move(t.v), std::move(t.s), std::move(t.u)};
  }
  const std::size_t rows = m.rows();
  const std::size_t n = m.cols();
  // Column-major working storage keeps each column contiguous.
  std::vector<double> u(rows * n);
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t c = 0; c < n; ++c) u[c * rows + r] = m(r, c);
  std::vector<double> v(n * n, 0.0);
  for (std::size_t c = 0; c < n; ++c) v[c * n + c] = 1.0;

  constexpr double eps = 1e-15;
  bool converged = false;
  for (int sweep = 0; sweep < kMaxJacobiSweeps && !converged; ++sweep) {
    converged = true;
    for (std::size_t p = 0; p + 1 < n; ++p) {
      double* up = &u[p * rows];
      for (std::size_t q = p + 1; q < n; ++q) {
        double* uq = &u[q * rows];
        double alpha = 0.0, beta = 0.0, gamma = 0.0;
        for (std::size_t r = 0; r < rows; ++r) {
          alpha += up[r] * up[r];
          beta += uq[r] * uq[r];
          gamma += up[r] * uq[r];
        }
        if (gamma == 0.0 || std::abs(gamma) <= eps * std::sqrt(alpha * beta)) {
          continue;
        }
        converged = false;
        const double zeta = (beta - alpha) / (2.0 * gamma);
        const double t = std::copysign(1.0, zeta) /
                         (std::abs(zeta) + std::sqrt(1.0 + zeta * zeta));
        const double c = 1.0 / std::sqrt(1.0 + t * t);
        const double s = c * t;
        for (std::size_t r = 0; r < rows; ++r) {
          const double a = up[r];
          const double b = uq[r];
          up[r] = c * a - s * b;
          uq[r] = s * a + c * b;
        }
        double* vp = &v[p * n];
        double* vq = &v[q * n];
        for (std::size_t r = 0; r < n; ++r) {
          const double a = vp[r];
          const double b = vq[r];
          vp[r] = c * a - s * b;
          vq[r] = s * a + c * b;
        }
      }
    }
  }
  if (!converged) {
    throw NumericError("svd_jacobi: no convergence after " +
                       std::to_string(kMaxJacobiSweeps) + " sweeps on " +
                       m.shape_string());
  }

  Svd out{Matrix(rows, n), Vector(n), Matrix(n, n)};
  for (std::size_t c = 0; c < n; ++c) {
    const double* uc = &u[c * rows];
    double norm = 0.0;
    for (std::size_t r = 0; r < rows; ++r) norm += uc[r] * uc[r];
    norm = std::sqrt(norm);
    out.s[c] = norm;
    if (norm > 0.0) {
      for (std::size_t r = 0; r < rows; ++r) out.u(r, c) = uc[r] / norm;
    }
    for (std::size_t r = 0; r < n; ++r) out.v(r, c) = v[c * n + r];
  }
  return out;
}

Matrix pinv(const Matrix& m, double tol) {
  if (m.empty()) throw ShapeError("pinv: empty matrix");
  if (!(tol >= 0.0)) throw ShapeError("pinv: tolerance must be non-negative");
  const Svd svd = svd_jacobi(m);
  const double smax = *std::max_element(svd.s.begin(), svd.s.end());
  const double cutoff = tol * smax;

  // pinv = V diag(1/s) U^T over the retained singular values.
  Matrix out(m.cols(), m.rows());
  for (std::size_t k = 0; k < svd.s.size(); ++k) {
    const double s = svd.s[k];
    if (s <= cutoff || s == 0.0) continue;
    const double inv = 1.0 / s;
    for (std::size_t i = 0; i < m.cols(); ++i) {
      const double vik = svd.v(i, k) * inv;
      if (vik == 0.0) continue;
      auto out_row = out.row(i);
      for (std::size_t j = 0; j < m.rows(); ++j) out_row[j] += vik * svd.u(j, k);
    }
  }
  require_finite(out.data(), "pinv");
  return out;
}

Matrix cholesky_solve(const Matrix& a, const Matrix& b) {
  if (a.rows() != a.cols() || a.rows() != b.rows()) {
    throw ShapeError("cholesky_solve: incompatible shapes " + a.shape_string() +
                     " and " + b.shape_string());
  }
  const std::size_t n = a.rows();
  Matrix l(n, n);
  for (std::size_t j = 0; j < n; ++j) {
    double d = a(j, j);
    for (std::size_t k = 0; k < j; ++k) d -= l(j, k) * l(j, k);
    if (!(d > 0.0)) {
      throw NumericError("cholesky_solve: matrix is not positive definite");
    }
    const double ljj = std::sqrt(d);
    l(j, j) = ljj;
    for (std::size_t i = j + 1; i < n; ++i) {
      double s = a(i, j);
      for (std::size_t k = 0; k < j; ++k) s -= l(i, k) * l(j, k);
      l(i, j) = s / ljj;
    }
  }
  Matrix x = b;
  for (std::size_t c = 0; c < x.cols(); ++c) {
    for (std::size_t i = 0; i < n; ++i) {
      double s = x(i, c);
      for (std::size_t k = 0; k < i; ++k) s -= l(i, k) * x(k, c);
      x(i, c) = s / l(i, i);
    }
    for (std::size_t ii = n; ii-- > 0;) {
      double s = x(ii, c);
      for (std::size_t k = ii + 1; k < n; ++k) s -= l(k, ii) * x(k, c);
      x(ii, c) = s / l(ii, ii);
    }
  }
  return x;
}

Matrix ridge_solve(const Matrix& f, const Matrix& t, double lambda) {
  if (f.rows() != t.rows()) {
    throw ShapeError("ridge_solve: design " + f.shape_string() +
                     " and target " + t.shape_string() + " row counts differ");
  }
  if (!(lambda >= 0.0)) throw ShapeError("ridge_solve: lambda must be >= 0");
  if (lambda == 0.0) return matmul(pinv(f), t);

  Matrix beta;
  if (f.rows() < f.cols()) {
    // Fewer samples than features: the equivalent dual form
    // F^T (F F^T + lambda I)^-1 T needs only a rows x rows factorization.
    Matrix gram = matmul(f, transpose(f));
    for (std::size_t i = 0; i < gram.rows(); ++i) gram(i, i) += lambda;
    beta = matmul_tn(f, cholesky_solve(gram, t));
  } else {
    Matrix gram = matmul_tn(f, f);
    for (std::size_t i = 0; i < gram.rows(); ++i) gram(i, i) += lambda;
    beta = cholesky_solve(gram, matmul_tn(f, t));
  }
  require_finite(beta.data(), "ridge_solve");
  return beta;
}

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

Matrix sigmoid(const Matrix& x) {
  Matrix out = x;
  for (double& v : out.data()) v = sigmoid(v);
  return out;
}

Matrix tanh(const Matrix& x) {
  Matrix out = x;
  for (double& v : out.data()) v = std::tanh(v);
  return out;
}

void softmax(std::span<const double> logits, std::span<double> out) {
  const double mx = *std::max_element(logits.begin(), logits.end());
  double sum = 0.0;
  for (std::size_t j = 0; j < logits.size(); ++j) {
    out[j] = std::exp(logits[j] - mx);
    sum += out[j];
  }
  for (double& p : out) p /= sum;
}

Matrix softmax_rows(const Matrix& x) {
  Matrix out = x;
  for (std::size_t r = 0; r < x.rows(); ++r) softmax(x.row(r), out.row(r));
  return out;
}

double cross_entropy(const Matrix& probs, std::span<const std::size_t> targets) {
  if (targets.size() != probs.rows()) {
    throw ShapeError("cross_entropy: " + std::to_string(targets.size()) +
                     " targets for " + std::to_string(probs.rows()) + " rows");
  }
  double total = 0.0;
  for (std::size_t r = 0; r < probs.rows(); ++r) {
    if (targets[r] >= probs.cols()) {
      throw ShapeError("cross_entropy: target " + std::to_string(targets[r]) +
                       " out of range for " + std::to_string(probs.cols()) +
                       " classes");
    }
    total -= std::log(std::max(probs(r, targets[r]), kProbabilityFloor));
  }
  return total / static_cast<double>(probs.rows());
}

}  // namespace elstm_lab
