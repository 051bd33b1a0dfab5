#include "easmh/subspace.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

namespace easmh {

std::string method_name(SubspaceMethod m) {
  switch (m) {
    case SubspaceMethod::GradientCovariance: return "gradient_covariance";
    case SubspaceMethod::PosteriorCovariance: return "posterior_covariance";
    case SubspaceMethod::LinearRegression: return "linear_regression";
  }
  throw Error("method_name: unknown method");
}

SubspaceMethod method_from_name(const std::string& name) {
  if (name == "gradient_covariance") return SubspaceMethod::GradientCovariance;
  if (name == "posterior_covariance") return SubspaceMethod::PosteriorCovariance;
  if (name == "linear_regression") return SubspaceMethod::LinearRegression;
  throw Error("unknown subspace method '" + name +
              "'; expected gradient_covariance, posterior_covariance or linear_regression");
}

Vec ActiveSubspace::reconstruct(const Vec& y, const Vec& z) const {
  Vec x = matvec(basis_active, y);
  Vec xi = matvec(basis_inactive, z);
  for (std::size_t i = 0; i < x.size(); ++i) x[i] += xi[i];
  return x;
}

SpectralGap detect_spectral_gap(const Vec& eigenvalues,
                                std::optional<std::size_t> max_active_dim) {
  const std::size_t len = eigenvalues.size();
  if (len < 2) throw Error("detect_spectral_gap: need at least 2 eigenvalues");
  for (std::size_t i = 0; i < len; ++i) {
    if (eigenvalues[i] < 0.0)
      throw Error("detect_spectral_gap: eigenvalues must be nonnegative");
    if (i > 0 && eigenvalues[i] > eigenvalues[i - 1])
      throw Error("detect_spectral_gap: eigenvalues must be sorted descending");
  }
  const double eps = 1e-12 * std::max(eigenvalues[0], 1e-300);
  std::size_t kmax = len - 1;
  if (max_active_dim) kmax = std::min(kmax, *max_active_dim);
  if (kmax < 1) throw Error("detect_spectral_gap: max_active_dim must be >= 1");

  SpectralGap best{1, 0.0};
  for (std::size_t k = 1; k <= kmax; ++k) {
    double ratio = std::max(eigenvalues[k - 1], eps) / std::max(eigenvalues[k], eps);
    if (ratio > best.gap_ratio) best = {k, ratio};
  }
  return best;
}

namespace {

ActiveSubspace split_from_covariance(const Matrix& sigma, SubspaceMethod method,
                                     std::optional<std::size_t> active_dim) {
  EigenDecomposition eig = symmetric_eigendecompose(sigma);
  // covariance estimates are PSD up to roundoff; floor tiny negatives
  for (double& v : eig.eigenvalues) v = std::max(v, 0.0);

  const std::size_t m = sigma.rows();
  std::size_t n;
  if (active_dim) {
    if (*active_dim < 1 || *active_dim >= m)
      throw Error("active_dim must satisfy 1 <= n < m");
    n = *active_dim;
  } else {
    n = detect_spectral_gap(eig.eigenvalues).cut_index;
  }

  ActiveSubspace ss;
  ss.ambient_dim = m;
  ss.active_dim = n;
  ss.method = method;
  ss.eigenvalues = eig.eigenvalues;
  ss.basis_active = Matrix(m, n);
  ss.basis_inactive = Matrix(m, m - n);
  for (std::size_t j = 0; j < n; ++j) ss.basis_active.set_col(j, eig.eigenvectors.col(j));
  for (std::size_t j = n; j < m; ++j)
    ss.basis_inactive.set_col(j - n, eig.eigenvectors.col(j));
  return ss;
}

}  // namespace

ActiveSubspace construct_gradient_covariance(const GradientFn& loglik_gradient,
                                             const SamplerFn& prior_sampler,
                                             std::size_t ambient_dim, std::size_t n_draws,
                                             Rng& rng,
                                             std::optional<std::size_t> active_dim) {
  if (n_draws < 1) throw Error("construct_gradient_covariance: need at least 1 draw");
  if (n_draws < ambient_dim)
    std::cerr << "warning: gradient-covariance construction with N=" << n_draws
              << " draws in dimension " << ambient_dim << " (N >= m recommended)\n";

  Matrix sigma(ambient_dim, ambient_dim);
  for (std::size_t i = 0; i < n_draws; ++i) {
    Vec x = prior_sampler(rng);
    Vec g = loglik_gradient(x);
    if (g.size() != ambient_dim)
      throw Error("construct_gradient_covariance: gradient dimension mismatch");
    if (!all_finite(g)) {
      std::ostringstream os;
      os << "construct_gradient_covariance: non-finite gradient at point (";
      for (std::size_t j = 0; j < x.size(); ++j) os << (j ? "," : "") << x[j];
      os << ")";
      throw Error(os.str());
    }
    for (std::size_t a = 0; a < ambient_dim; ++a)
      for (std::size_t b = 0; b < ambient_dim; ++b)
        sigma(a, b) += g[a] * g[b] / double(n_draws);
  }
  return split_from_covariance(sigma, SubspaceMethod::GradientCovariance, active_dim);
}

ActiveSubspace construct_posterior_covariance(const LogDensityFn& log_target,
                                              const SamplerFn& prior_sampler,
                                              const LogDensityFn& log_prior,
                                              std::size_t ambient_dim, std::size_t n_draws,
                                              Rng& rng,
                                              std::optional<std::size_t> active_dim) {
  if (n_draws < 2) throw Error("construct_posterior_covariance: need at least 2 draws");
  std::vector<Vec> points;
  Vec log_w;
  points.reserve(n_draws);
  log_w.reserve(n_draws);
  for (std::size_t i = 0; i < n_draws; ++i) {
    Vec x = prior_sampler(rng);
    if (x.size() != ambient_dim)
      throw Error("construct_posterior_covariance: sampler dimension mismatch");
    double lp = log_prior(x);
    if (!std::isfinite(lp))
      throw Error("construct_posterior_covariance: prior density must be strictly "
                  "positive at drawn points");
    log_w.push_back(log_target(x) - lp);
    points.push_back(std::move(x));
  }
  double mx = neg_inf;
  for (double lw : log_w) mx = std::max(mx, lw);
  if (!std::isfinite(mx))
    throw Error("construct_posterior_covariance: all importance weights are zero; "
                "the prior sampler misses the posterior mass, use a broader sampler");
  Vec w(log_w.size());
  for (std::size_t i = 0; i < log_w.size(); ++i) w[i] = std::exp(log_w[i] - mx);

  MeanCovariance mc = weighted_mean_covariance(points, w);
  return split_from_covariance(mc.covariance, SubspaceMethod::PosteriorCovariance,
                               active_dim);
}

ActiveSubspace construct_linear_regression(const LogDensityFn& scalar_field,
                                           const std::vector<Vec>& points) {
  if (points.empty()) throw Error("construct_linear_regression: no points");
  const std::size_t m = points[0].size();
  Vec values(points.size());
  for (std::size_t i = 0; i < points.size(); ++i) {
    values[i] = scalar_field(points[i]);
    if (!std::isfinite(values[i]))
      throw Error("construct_linear_regression: scalar field non-finite at point " +
                  std::to_string(i));
  }
  LinearFit fit = least_squares_fit(points, values);
  double nrm = norm2(fit.coefficients);
  if (nrm < 1e-14)
    throw Error("construct_linear_regression: fitted coefficient vector is zero "
                "(field is constant on the points)");
  Vec dir = fit.coefficients;
  for (double& x : dir) x /= nrm;
  // deterministic sign: first nonzero component positive
  for (double x : dir) {
    if (x != 0.0) {
      if (x < 0.0)
        for (double& y : dir) y = -y;
      break;
    }
  }

  ActiveSubspace ss;
  ss.ambient_dim = m;
  ss.active_dim = 1;
  ss.method = SubspaceMethod::LinearRegression;
  ss.basis_active = Matrix(m, 1);
  ss.basis_active.set_col(0, dir);
  ss.basis_inactive = complete_orthonormal_basis(ss.basis_active);
  return ss;
}

void save_subspace(const ActiveSubspace& ss, const std::filesystem::path& file) {
  std::ofstream out(file);
  if (!out) throw Error("save_subspace: cannot open " + file.string());
  char buf[64];
  auto put = [&](double v) {
    std::snprintf(buf, sizeof buf, "%.17g", v);
    out << buf;
  };
  out << "easmh_subspace 1\n";
  out << "method " << method_name(ss.method) << "\n";
  out << "ambient_dim " << ss.ambient_dim << "\n";
  out << "active_dim " << ss.active_dim << "\n";
  out << "eigenvalues " << ss.eigenvalues.size();
  for (double v : ss.eigenvalues) {
    out << " ";
    put(v);
  }
  out << "\n";
  for (const char* name : {"B_a", "B_i"}) {
    const Matrix& b = (name[2] == 'a') ? ss.basis_active : ss.basis_inactive;
    out << name << "\n";
    for (std::size_t i = 0; i < b.rows(); ++i) {
      for (std::size_t j = 0; j < b.cols(); ++j) {
        if (j) out << " ";
        put(b(i, j));
      }
      out << "\n";
    }
  }
  if (!out) throw Error("save_subspace: write failed for " + file.string());
}

ActiveSubspace load_subspace(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw Error("load_subspace: cannot open " + file.string());
  std::string word;
  int version;
  in >> word >> version;
  if (word != "easmh_subspace" || version != 1)
    throw Error("load_subspace: not a subspace artifact: " + file.string());

  ActiveSubspace ss;
  std::string key;
  in >> key >> word;
  if (key != "method") throw Error("load_subspace: expected 'method'");
  ss.method = method_from_name(word);
  in >> key >> ss.ambient_dim;
  if (key != "ambient_dim") throw Error("load_subspace: expected 'ambient_dim'");
  in >> key >> ss.active_dim;
  if (key != "active_dim") throw Error("load_subspace: expected 'active_dim'");
  std::size_t n_eig;
  in >> key >> n_eig;
  if (key != "eigenvalues") throw Error("load_subspace: expected 'eigenvalues'");
  ss.eigenvalues.resize(n_eig);
  for (double& v : ss.eigenvalues) in >> v;

  const std::size_t m = ss.ambient_dim, n = ss.active_dim;
  if (n < 1 || n >= m) throw Error("load_subspace: invalid dimensions");
  ss.basis_active = Matrix(m, n);
  ss.basis_inactive = Matrix(m, m - n);
  in >> key;
  if (key != "B_a") throw Error("load_subspace: expected 'B_a'");
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) in >> ss.basis_active(i, j);
  in >> key;
  if (key != "B_i") throw Error("load_subspace: expected 'B_i'");
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < m - n; ++j) in >> ss.basis_inactive(i, j);
  if (!in) throw Error("load_subspace: truncated artifact: " + file.string());
  return ss;
}

}  // namespace easmh
