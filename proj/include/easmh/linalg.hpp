#pragma once

#include <cstddef>
#include <vector>

#include "easmh/common.hpp"

namespace easmh {

/// Dense row-major matrix. All problem sizes here are small (m <= ~40),
/// so no attempt is made at cache blocking or sparsity.
class Matrix {
public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  static Matrix identity(std::size_t n) {
    Matrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
  }

  double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
  double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }

  Vec col(std::size_t j) const {
    Vec v(rows_);
    for (std::size_t i = 0; i < rows_; ++i) v[i] = (*this)(i, j);
    return v;
  }
  void set_col(std::size_t j, const Vec& v) {
    for (std::size_t i = 0; i < rows_; ++i) (*this)(i, j) = v[i];
  }

  const std::vector<double>& data() const { return data_; }

private:
  std::size_t rows_ = 0, cols_ = 0;
  std::vector<double> data_;
};

Matrix operator*(const Matrix& a, const Matrix& b);
Matrix transpose(const Matrix& a);

/// A x
Vec matvec(const Matrix& a, const Vec& x);
/// A^T x
Vec matvec_transposed(const Matrix& a, const Vec& x);

double dot(const Vec& a, const Vec& b);
double norm2(const Vec& a);
Vec axpy(double alpha, const Vec& x, Vec y);  // alpha*x + y

/// a b^T
Matrix outer_product(const Vec& a, const Vec& b);

struct EigenDecomposition {
  Vec eigenvalues;      // sorted non-increasing
  Matrix eigenvectors;  // orthonormal columns, paired with eigenvalues
};

/// Cyclic Jacobi eigensolver for symmetric matrices. Deterministic sweep
/// order; eigenvector sign fixed so the first nonzero component is positive.
EigenDecomposition symmetric_eigendecompose(const Matrix& a);

/// Extend k orthonormal columns in R^m to a full orthonormal basis; returns
/// the m-k new columns. Candidates are the standard basis vectors in index
/// order, skipped when the projected residual norm falls below 1e-8.
Matrix complete_orthonormal_basis(const Matrix& partial);

struct MeanCovariance {
  Vec mean;
  Matrix covariance;
};

/// Self-normalized weighted mean and covariance (1/sum(w) normalization).
MeanCovariance weighted_mean_covariance(const std::vector<Vec>& points,
                                        const Vec& weights);

struct LinearFit {
  Vec coefficients;
  double intercept = 0.0;
};

/// Ordinary least squares of outputs on inputs plus an intercept. Inputs are
/// standardized internally; coefficients are reported on the original scale.
LinearFit least_squares_fit(const std::vector<Vec>& inputs, const Vec& outputs);

/// Lower-triangular Cholesky factor; throws on a non-positive pivot.
Matrix cholesky(const Matrix& a);

/// Solve L x = b (forward substitution), L lower triangular.
Vec solve_lower_triangular(const Matrix& l, Vec b);

/// Solve A x = b for symmetric positive definite A via Cholesky.
Vec solve_spd(const Matrix& a, const Vec& b);

}  // namespace easmh
