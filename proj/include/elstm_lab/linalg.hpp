#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

namespace elstm_lab {

using Vector = std::vector<double>;

/// Dense row-major matrix of doubles.
///
/// A default-constructed Matrix is the empty 0x0 placeholder; every other
/// Matrix has positive dimensions and data.size() == rows * cols.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0);
  /// Takes ownership of row-major data; throws ShapeError on a size mismatch
  /// and NumericError on a non-finite entry.
  Matrix(std::size_t rows, std::size_t cols, std::vector<double> data);
  /// Nested-list construction, e.g. Matrix{{1, 2}, {3, 4}}.
  Matrix(std::initializer_list<std::initializer_list<double>> rows);

  static Matrix identity(std::size_t n);
  /// Single-column matrix holding v.
  static Matrix column(std::span<const double> v);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  bool empty() const { return data_.empty(); }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const {
    return {data_.data() + r * cols_, cols_};
  }

  std::span<double> data() { return data_; }
  std::span<const double> data() const { return data_; }

  std::string shape_string() const;

  friend bool operator==(const Matrix&, const Matrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

Matrix transpose(const Matrix& m);
Matrix matmul(const Matrix& a, const Matrix& b);
/// a^T * b without materializing the transpose.
Matrix matmul_tn(const Matrix& a, const Matrix& b);
Matrix add(const Matrix& a, const Matrix& b);
Matrix subtract(const Matrix& a, const Matrix& b);
Matrix scale(const Matrix& m, double s);

/// Largest absolute entry.
double max_abs(const Matrix& m);
/// Sum of squared entries.
double frobenius_sq(const Matrix& m);
bool all_finite(std::span<const double> v);

/// Result of a singular value decomposition m = U diag(s) V^T (thin form).
struct Svd {
  Matrix u;  // rows(m) x k
  Vector s;  // k, non-negative, unsorted
  Matrix v;  // cols(m) x k
};

/// One-sided Jacobi SVD. Throws NumericError if the sweeps do not converge.
Svd svd_jacobi(const Matrix& m);

inline constexpr double kDefaultPinvTolerance = 1e-12;

/// Moore-Penrose pseudoinverse via SVD. Singular values at or below
/// tol * (largest singular value) are treated as zero.
Matrix pinv(const Matrix& m, double tol = kDefaultPinvTolerance);

/// Regularized least squares: argmin ||F beta - T||^2 + lambda ||beta||^2.
///
/// lambda > 0 solves the normal equations (F^T F + lambda I) beta = F^T T by
/// Cholesky (in the dual form when F has more columns than rows); lambda == 0
/// returns pinv(F) * T, the minimum-norm solution.
Matrix ridge_solve(const Matrix& f, const Matrix& t, double lambda);

/// Solves the symmetric positive definite system a x = b (b may have several
/// columns). Throws NumericError if a is not positive definite.
Matrix cholesky_solve(const Matrix& a, const Matrix& b);

double sigmoid(double x);
Matrix sigmoid(const Matrix& x);
Matrix tanh(const Matrix& x);
/// Row-wise softmax with max subtraction.
Matrix softmax_rows(const Matrix& x);
/// Softmax of one row written into out (same length as logits).
void softmax(std::span<const double> logits, std::span<double> out);

inline constexpr double kProbabilityFloor = 1e-12;

/// Mean over rows of -ln(probs[row][target[row]]), with probabilities floored
/// at kProbabilityFloor.
double cross_entropy(const Matrix& probs, std::span<const std::size_t> targets);

}  // namespace elstm_lab
