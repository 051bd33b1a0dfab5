#include "easmh/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

namespace easmh {

Matrix operator*(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.rows()) throw Error("matrix product: inner dimensions disagree");
  Matrix c(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t k = 0; k < a.cols(); ++k) {
      double aik = a(i, k);
      if (aik == 0.0) continue;
      for (std::size_t j = 0; j < b.cols(); ++j) c(i, j) += aik * b(k, j);
    }
  return c;
}

Matrix transpose(const Matrix& a) {
  Matrix t(a.cols(), a.rows());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) t(j, i) = a(i, j);
  return t;
}

Vec matvec(const Matrix& a, const Vec& x) {
  if (a.cols() != x.size()) throw Error("matvec: dimension mismatch");
  Vec y(a.rows(), 0.0);
  for (std::size_t i = 0; i < a.rows(); ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < a.cols(); ++j) s += a(i, j) * x[j];
    y[i] = s;
  }
  return y;
}

Vec matvec_transposed(const Matrix& a, const Vec& x) {
  if (a.rows() != x.size()) throw Error("matvec_transposed: dimension mismatch");
  Vec y(a.cols(), 0.0);
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) y[j] += a(i, j) * x[i];
  return y;
}

double dot(const Vec& a, const Vec& b) {
  if (a.size() != b.size()) throw Error("dot: dimension mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double norm2(const Vec& a) { return std::sqrt(dot(a, a)); }

Vec axpy(double alpha, const Vec& x, Vec y) {
  for (std::size_t i = 0; i < x.size(); ++i) y[i] += alpha * x[i];
  return y;
}

Matrix outer_product(const Vec& a, const Vec& b) {
  Matrix m(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = 0; j < b.size(); ++j) m(i, j) = a[i] * b[j];
  return m;
}

namespace {

double frobenius_norm(const Matrix& a) {
  double s = 0.0;
  for (double x : a.data()) s += x * x;
  return std::sqrt(s);
}

double off_diagonal_norm(const Matrix& a) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j)
      if (i != j) s += a(i, j) * a(i, j);
  return std::sqrt(s);
}

void check_symmetric(const Matrix& a) {
  if (a.rows() != a.cols())
    throw Error("symmetric_eigendecompose: matrix is not square (" +
                std::to_string(a.rows()) + "x" + std::to_string(a.cols()) + ")");
  double scale = 0.0;
  for (double x : a.data()) {
    if (!std::isfinite(x)) throw Error("symmetric_eigendecompose: non-finite entry");
    scale = std::max(scale, std::fabs(x));
  }
  double tol = 1e-10 * std::max(scale, 1e-300);
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = i + 1; j < a.cols(); ++j)
      if (std::fabs(a(i, j) - a(j, i)) > tol)
        throw Error("symmetric_eigendecompose: matrix is not symmetric at (" +
                    std::to_string(i) + "," + std::to_string(j) + ")");
}

void fix_sign(Vec& v) {
  for (double x : v) {
    if (x != 0.0) {
      if (x < 0.0)
        for (double& y : v) y = -y;
      return;
    }
  }
}

}  // namespace

EigenDecomposition symmetric_eigendecompose(const Matrix& input) {
  check_symmetric(input);
  const std::size_t n = input.rows();
  Matrix a = input;
  // symmetrize exactly so the sweeps see a(i,j) == a(j,i)
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) {
      double v = 0.5 * (a(i, j) + a(j, i));
      a(i, j) = a(j, i) = v;
    }

  Matrix v = Matrix::identity(n);
  const double threshold = 1e-12 * std::max(frobenius_norm(a), 1e-300);
  const int max_sweeps = 100;

  int sweep = 0;
  for (; sweep < max_sweeps; ++sweep) {
    if (off_diagonal_norm(a) <= threshold) break;
    for (std::size_t p = 0; p + 1 < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        double apq = a(p, q);
        if (apq == 0.0) continue;
        double app = a(p, p), aqq = a(q, q);
        double tau = (aqq - app) / (2.0 * apq);
        double t = (tau >= 0.0) ? 1.0 / (tau + std::sqrt(1.0 + tau * tau))
                                : 1.0 / (tau - std::sqrt(1.0 + tau * tau));
        double c = 1.0 / std::sqrt(1.0 + t * t);
        double s = t * c;

        for (std::size_t k = 0; k < n; ++k) {
          double akp = a(k, p), akq = a(k, q);
          a(k, p) = c * akp - s * akq;
          a(k, q) = s * akp + c * akq;
        }
        for (std::size_t k = 0; k < n; ++k) {
          double apk = a(p, k), aqk = a(q, k);
          a(p, k) = c * apk - s * aqk;
          a(q, k) = s * apk + c * aqk;
        }
        for (std::size_t k = 0; k < n; ++k) {
          double vkp = v(k, p), vkq = v(k, q);
          v(k, p) = c * vkp - s * vkq;
          v(k, q) = s * vkp + c * vkq;
        }
      }
    }
  }
  if (sweep == max_sweeps && off_diagonal_norm(a) > threshold)
    throw Error("symmetric_eigendecompose: Jacobi iteration did not converge within 100 sweeps");

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t i, std::size_t j) { return a(i, i) > a(j, j); });

  EigenDecomposition out;
  out.eigenvalues.resize(n);
  out.eigenvectors = Matrix(n, n);
  for (std::size_t j = 0; j < n; ++j) {
    out.eigenvalues[j] = a(order[j], order[j]);
    Vec col = v.col(order[j]);
    fix_sign(col);
    out.eigenvectors.set_col(j, col);
  }
  return out;
}

Matrix complete_orthonormal_basis(const Matrix& partial) {
  const std::size_t m = partial.rows();
  const std::size_t k = partial.cols();
  if (k >= m) throw Error("complete_orthonormal_basis: need k < m columns");

  std::vector<Vec> basis;
  basis.reserve(m);
  for (std::size_t j = 0; j < k; ++j) basis.push_back(partial.col(j));
  for (std::size_t i = 0; i < k; ++i) {
    if (std::fabs(norm2(basis[i]) - 1.0) > 1e-10)
      throw Error("complete_orthonormal_basis: input column " + std::to_string(i) +
                  " is not unit norm");
    for (std::size_t j = i + 1; j < k; ++j)
      if (std::fabs(dot(basis[i], basis[j])) > 1e-10)
        throw Error("complete_orthonormal_basis: input columns " + std::to_string(i) +
                    " and " + std::to_string(j) + " are not orthogonal");
  }

  Matrix out(m, m - k);
  std::size_t found = 0;
  for (std::size_t cand = 0; cand < m && found < m - k; ++cand) {
    Vec v(m, 0.0);
    v[cand] = 1.0;
    // two Gram-Schmidt passes for numerical orthogonality
    for (int pass = 0; pass < 2; ++pass)
      for (const Vec& b : basis) {
        double coeff = -dot(v, b);  // before the move: argument order is unspecified
        v = axpy(coeff, b, std::move(v));
      }
    double nrm = norm2(v);
    if (nrm < 1e-8) continue;  // near-parallel candidate
    for (double& x : v) x /= nrm;
    out.set_col(found++, v);
    basis.push_back(std::move(v));
  }
  if (found != m - k)
    throw Error("complete_orthonormal_basis: failed to complete basis");
  return out;
}

MeanCovariance weighted_mean_covariance(const std::vector<Vec>& points,
                                        const Vec& weights) {
  if (points.size() < 2) throw Error("weighted_mean_covariance: need at least 2 points");
  if (weights.size() != points.size())
    throw Error("weighted_mean_covariance: weights/points length mismatch");
  const std::size_t m = points[0].size();
  double wsum = 0.0;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    if (!(weights[i] >= 0.0) || !std::isfinite(weights[i]))
      throw Error("weighted_mean_covariance: weights must be finite and nonnegative");
    if (points[i].size() != m || !all_finite(points[i]))
      throw Error("weighted_mean_covariance: invalid point at index " + std::to_string(i));
    wsum += weights[i];
  }
  if (wsum <= 0.0)
    throw Error("weighted_mean_covariance: importance sample degenerate (all weights zero)");

  Vec mean(m, 0.0);
  for (std::size_t i = 0; i < points.size(); ++i)
    mean = axpy(weights[i] / wsum, points[i], std::move(mean));

  Matrix cov(m, m);
  Vec d(m);
  for (std::size_t i = 0; i < points.size(); ++i) {
    double w = weights[i] / wsum;
    if (w == 0.0) continue;
    for (std::size_t a = 0; a < m; ++a) d[a] = points[i][a] - mean[a];
    for (std::size_t a = 0; a < m; ++a)
      for (std::size_t b = a; b < m; ++b) cov(a, b) += w * d[a] * d[b];
  }
  for (std::size_t a = 0; a < m; ++a)
    for (std::size_t b = 0; b < a; ++b) cov(a, b) = cov(b, a);
  return {std::move(mean), std::move(cov)};
}

LinearFit least_squares_fit(const std::vector<Vec>& inputs, const Vec& outputs) {
  if (inputs.empty()) throw Error("least_squares_fit: no input points");
  const std::size_t n = inputs.size();
  const std::size_t m = inputs[0].size();
  if (outputs.size() != n) throw Error("least_squares_fit: inputs/outputs length mismatch");
  if (n < m + 1)
    throw Error("least_squares_fit: need at least " + std::to_string(m + 1) + " points");

  // standardize inputs and center outputs for conditioning
  Vec xmean(m, 0.0), xstd(m, 0.0);
  for (const Vec& p : inputs)
    for (std::size_t j = 0; j < m; ++j) xmean[j] += p[j] / double(n);
  for (const Vec& p : inputs)
    for (std::size_t j = 0; j < m; ++j) {
      double d = p[j] - xmean[j];
      xstd[j] += d * d / double(n);
    }
  for (std::size_t j = 0; j < m; ++j) {
    xstd[j] = std::sqrt(xstd[j]);
    if (xstd[j] <= 0.0)
      throw Error("least_squares_fit: rank-deficient design (input dimension " +
                  std::to_string(j) + " is constant); provide more or better-spread points");
  }
  double ymean = 0.0;
  for (double y : outputs) ymean += y / double(n);

  Matrix g(m, m);
  Vec rhs(m, 0.0);
  Vec z(m);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < m; ++j) z[j] = (inputs[i][j] - xmean[j]) / xstd[j];
    double yc = outputs[i] - ymean;
    for (std::size_t a = 0; a < m; ++a) {
      rhs[a] += z[a] * yc;
      for (std::size_t b = a; b < m; ++b) g(a, b) += z[a] * z[b];
    }
  }
  for (std::size_t a = 0; a < m; ++a)
    for (std::size_t b = 0; b < a; ++b) g(a, b) = g(b, a);

  Vec beta;
  try {
    beta = solve_spd(g, rhs);
  } catch (const Error&) {
    throw Error("least_squares_fit: rank-deficient design matrix; "
                "provide more or better-spread points");
  }

  LinearFit fit;
  fit.coefficients.resize(m);
  fit.intercept = ymean;
  for (std::size_t j = 0; j < m; ++j) {
    fit.coefficients[j] = beta[j] / xstd[j];
    fit.intercept -= fit.coefficients[j] * xmean[j];
  }
  return fit;
}

Matrix cholesky(const Matrix& a) {
  if (a.rows() != a.cols()) throw Error("cholesky: matrix is not square");
  const std::size_t n = a.rows();
  double scale = 0.0;
  for (std::size_t i = 0; i < n; ++i) scale = std::max(scale, std::fabs(a(i, i)));
  Matrix l(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j <= i; ++j) {
      double s = a(i, j);
      for (std::size_t k = 0; k < j; ++k) s -= l(i, k) * l(j, k);
      if (i == j) {
        if (s <= 1e-14 * std::max(scale, 1e-300))
          throw Error("cholesky: matrix is not positive definite (pivot " +
                      std::to_string(i) + ")");
        l(i, i) = std::sqrt(s);
      } else {
        l(i, j) = s / l(j, j);
      }
    }
  }
  return l;
}

Vec solve_lower_triangular(const Matrix& l, Vec b) {
  const std::size_t n = l.rows();
  for (std::size_t i = 0; i < n; ++i) {
    double s = b[i];
    for (std::size_t k = 0; k < i; ++k) s -= l(i, k) * b[k];
    b[i] = s / l(i, i);
  }
  return b;
}

Vec solve_spd(const Matrix& a, const Vec& b) {
  Matrix l = cholesky(a);
  Vec y = solve_lower_triangular(l, b);
  const std::size_t n = l.rows();
  // back substitution with L^T
  for (std::size_t ii = n; ii-- > 0;) {
    double s = y[ii];
    for (std::size_t k = ii + 1; k < n; ++k) s -= l(k, ii) * y[k];
    y[ii] = s / l(ii, ii);
  }
  return y;
}

}  // namespace easmh
