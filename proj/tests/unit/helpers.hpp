#pragma once

#include "scfa/factor_model.hpp"
#include "scfa/rng.hpp"
#include "scfa/scfa.hpp"
#include "scfa/spatial_weights.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <numbers>
#include <vector>

namespace scfa::testing {

inline FactorModel random_model(Rng& rng, int p, int m) {
  FactorModel f;
  f.loadings.resize(p, m);
  for (int j = 0; j < p; ++j)
    for (int k = 0; k < m; ++k) f.loadings(j, k) = rng.normal(0.0, 0.8);
  f.uniquenesses.resize(p);
  for (int j = 0; j < p; ++j) f.uniquenesses[j] = rng.uniform(0.1, 1.5);
  return f;
}

inline Eigen::VectorXd random_vector(Rng& rng, int p, double sd = 1.0) {
  Eigen::VectorXd x(p);
  for (int j = 0; j < p; ++j) x[j] = rng.normal(0.0, sd);
  return x;
}

inline Eigen::MatrixXd random_matrix(Rng& rng, int r, int c, double sd = 1.0) {
  Eigen::MatrixXd a(r, c);
  for (int i = 0; i < r; ++i)
    for (int j = 0; j < c; ++j) a(i, j) = rng.normal(0.0, sd);
  return a;
}

inline Eigen::MatrixXd random_orthogonal(Rng& rng, int m) {
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(random_matrix(rng, m, m));
  return qr.householderQ() * Eigen::MatrixXd::Identity(m, m);
}

// Dense Gaussian log-density through an explicit Cholesky of the full covariance.
inline double dense_log_density(const Eigen::VectorXd& x, const Eigen::MatrixXd& sigma) {
  Eigen::LLT<Eigen::MatrixXd> llt(sigma);
  const Eigen::MatrixXd l = llt.matrixL();
  const Eigen::VectorXd z = l.triangularView<Eigen::Lower>().solve(x);
  double log_det = 0.0;
  for (Eigen::Index i = 0; i < l.rows(); ++i) log_det += 2.0 * std::log(l(i, i));
  return -0.5 * (static_cast<double>(x.size()) * std::log(2.0 * std::numbers::pi) + log_det + z.squaredNorm());
}

inline LocationTable random_locations(Rng& rng, int n) {
  LocationTable t;
  t.coords.resize(n, 2);
  for (int i = 0; i < n; ++i) {
    t.coords(i, 0) = rng.uniform(-1.0, 1.0);
    t.coords(i, 1) = rng.uniform(-1.0, 1.0);
    t.ids.push_back(std::to_string(i + 1));
  }
  return t;
}

inline DataMatrix as_data(Eigen::MatrixXd v) {
  DataMatrix d;
  d.values = std::move(v);
  d.centered = true;
  d.standardized = true;
  return d;
}

inline std::vector<std::size_t> all_rows(Eigen::Index n) {
  std::vector<std::size_t> r(static_cast<std::size_t>(n));
  for (std::size_t i = 0; i < r.size(); ++i) r[i] = i;
  return r;
}

// Draws n rows from N(0, A A^T + Psi).
inline Eigen::MatrixXd sample_factor_model(Rng& rng, const FactorModel& f, int n) {
  const int p = static_cast<int>(f.num_vars());
  const int m = static_cast<int>(f.num_factors());
  Eigen::MatrixXd x(n, p);
  Eigen::VectorXd z(m);
  for (int i = 0; i < n; ++i) {
    for (int k = 0; k < m; ++k) z[k] = rng.normal();
    x.row(i) = (f.loadings * z).transpose();
    for (int j = 0; j < p; ++j) x(i, j) += std::sqrt(f.uniquenesses[j]) * rng.normal();
  }
  return x;
}

}  // namespace scfa::testing
