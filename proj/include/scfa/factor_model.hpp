#pragma once

#include "scfa/error.hpp"
#include "scfa/optimize.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <span>
#include <string>
#include <vector>

namespace scfa {

/// n x p observations. `standardized` data have zero column means and unit
/// sample (n-1) column variances.
struct DataMatrix {
  Eigen::MatrixXd values;
  bool centered = false;
  bool standardized = false;

  Eigen::Index rows() const { return values.rows(); }
  Eigen::Index cols() const { return values.cols(); }
};

/// Column-wise z-scores with sample (n-1) scaling.
inline DataMatrix standardize(const Eigen::MatrixXd& raw) {
  const Eigen::Index n = raw.rows();
  if (n < 2) throw PreconditionError("standardize: need at least two rows");
  DataMatrix out;
  out.values.resize(n, raw.cols());
  for (Eigen::Index j = 0; j < raw.cols(); ++j) {
    const double mean = raw.col(j).mean();
    const Eigen::VectorXd c = raw.col(j).array() - mean;
    const double var = c.squaredNorm() / static_cast<double>(n - 1);
    if (!(var > 0.0) || !std::isfinite(var)) throw ZeroVarianceColumn(static_cast<std::size_t>(j));
    out.values.col(j) = c / std::sqrt(var);
  }
  out.centered = true;
  out.standardized = true;
  return out;
}

/// Loadings A (p x m) and the diagonal of Psi (p). Sigma = A A^T + Psi.
struct FactorModel {
  Eigen::MatrixXd loadings;
  Eigen::VectorXd uniquenesses;

  Eigen::Index num_vars() const { return loadings.rows(); }
  Eigen::Index num_factors() const { return loadings.cols(); }

  void validate() const {
    if (uniquenesses.size() != loadings.rows())
      throw PreconditionError("FactorModel: uniquenesses length does not match loadings rows");
    if (loadings.cols() > loadings.rows())
      throw PreconditionError("FactorModel: more factors than variables");
    if (!(uniquenesses.array() > 0.0).all() || !loadings.allFinite())
      throw PreconditionError("FactorModel: uniquenesses must be positive and finite");
  }
};

inline Eigen::MatrixXd implied_covariance(const FactorModel& model) {
  Eigen::MatrixXd sigma = model.loadings * model.loadings.transpose();
  sigma.diagonal() += model.uniquenesses;
  return sigma;
}

/// Zero-mean Gaussian log-density with covariance A A^T + Psi, evaluated in
/// O(p m) per point through the Woodbury identity and the determinant lemma.
class GaussianDensity {
 public:
  explicit GaussianDensity(const FactorModel& model)
      : inv_psi_(model.uniquenesses.cwiseInverse()),
        psi_inv_loadings_(inv_psi_.asDiagonal() * model.loadings) {
    const Eigen::Index m = model.num_factors();
    Eigen::MatrixXd core = Eigen::MatrixXd::Identity(m, m);
    core.noalias() += model.loadings.transpose() * psi_inv_loadings_;
    chol_.compute(core);
    double log_det = model.uniquenesses.array().log().sum();
    if (m > 0) log_det += 2.0 * chol_.matrixLLT().diagonal().array().log().sum();
    log_norm_ = -0.5 * (static_cast<double>(model.num_vars()) * std::log(2.0 * std::numbers::pi) +
                        log_det);
  }

  template <class Vec>
  double operator()(const Vec& x) const {
    double quad = (x.array().square() * inv_psi_.array()).sum();
    if (psi_inv_loadings_.cols() > 0) {
      Eigen::VectorXd b = psi_inv_loadings_.transpose() * x;
      chol_.matrixL().solveInPlace(b);
      quad -= b.squaredNorm();
    }
    return log_norm_ - 0.5 * quad;
  }

 private:
  Eigen::VectorXd inv_psi_;
  Eigen::MatrixXd psi_inv_loadings_;
  Eigen::LLT<Eigen::MatrixXd> chol_;
  double log_norm_ = 0.0;
};

inline double log_density(const Eigen::VectorXd& x, const FactorModel& model) {
  if (x.size() != model.num_vars()) throw ShapeMismatch("log_density: x has wrong length");
  return GaussianDensity(model)(x);
}

inline double group_log_likelihood(const DataMatrix& data, const FactorModel& model,
                                   std::span<const std::size_t> rows) {
  if (rows.empty()) return 0.0;
  const GaussianDensity dens(model);
  double total = 0.0;
  for (std::size_t i : rows) {
    if (i >= static_cast<std::size_t>(data.rows()))
      throw PreconditionError("group_log_likelihood: row index out of range");
    total += dens(data.values.row(static_cast<Eigen::Index>(i)).transpose());
  }
  return total;
}

// Largest m with nonnegative degrees of freedom for p variables.
inline int lederman_bound(int p) {
  const double b = (2.0 * p + 1.0 - std::sqrt(8.0 * p + 1.0)) / 2.0;
  return std::max(0, static_cast<int>(std::floor(b + 1e-12)));
}

struct EfaOptions {
  double heywood_floor = 0.005;  // lower bound on correlation-scale uniquenesses
  int max_iters = 200;
  double grad_tol = 1e-7;
  double near_singular_cond = 1e8;
};

struct EfaFit {
  FactorModel model;
  double discrepancy = 0.0;  // profile objective at the solution
  double projected_grad_norm = 0.0;
  int iterations = 0;
};

/// Profile ML discrepancy F(psi) = min_A [log|Sigma| + tr(Sigma^-1 R)] - log|R| - p
/// as a function of log-uniquenesses, for a unit-diagonal moment matrix R.
/// F equals -(2/n) times the log-likelihood up to a constant; it has a closed
/// form in the eigenvalues e_k of Psi^-1/2 R Psi^-1/2. When `grad` is given,
/// the gradient with respect to log(psi) is written into it.
inline double profile_discrepancy(const Eigen::MatrixXd& corr, const Eigen::VectorXd& log_psi,
                                  int m, Eigen::VectorXd* grad = nullptr) {
  const Eigen::Index p = corr.rows();
  const Eigen::VectorXd scale = (-0.5 * log_psi.array()).exp();
  const Eigen::MatrixXd scaled = scale.asDiagonal() * corr * scale.asDiagonal();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(scaled);
  const Eigen::VectorXd& ev = es.eigenvalues();  // ascending
  double f = 0.0;
  if (grad) grad->setZero(p);
  for (Eigen::Index r = 0; r < p; ++r) {
    const Eigen::Index k = p - 1 - r;  // r-th largest
    const double e = ev[k];
    const double fitted = (r < m) ? std::max(e, 1.0) : 1.0;
    if (fitted != e) {
      const double ratio = e / fitted;
      f += ratio - std::log(ratio) - 1.0;
    }
    if (grad) {
      const double w = (fitted - e) / (fitted * fitted);
      if (w != 0.0) *grad += w * es.eigenvectors().col(k).cwiseAbs2();
    }
  }
  return f;
}

/// Canonical loadings at fixed psi: A = Psi^1/2 V_m diag(sqrt(max(e - 1, 0))),
/// so A^T Psi^-1 A is diagonal and descending. Each column's largest-magnitude
/// entry is made nonnegative.
inline Eigen::MatrixXd canonical_loadings(const Eigen::MatrixXd& corr, const Eigen::VectorXd& psi,
                                          int m) {
  const Eigen::Index p = corr.rows();
  const Eigen::VectorXd sqrt_psi = psi.cwiseSqrt();
  const Eigen::VectorXd scale = sqrt_psi.cwiseInverse();
  const Eigen::MatrixXd scaled = scale.asDiagonal() * corr * scale.asDiagonal();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(scaled);
  Eigen::MatrixXd a(p, m);
  for (int r = 0; r < m; ++r) {
    const Eigen::Index k = p - 1 - r;
    const double mag = std::sqrt(std::max(es.eigenvalues()[k] - 1.0, 0.0));
    a.col(r) = sqrt_psi.cwiseProduct(es.eigenvectors().col(k)) * mag;
    Eigen::Index arg = 0;
    a.col(r).cwiseAbs().maxCoeff(&arg);
    if (a(arg, r) < 0.0) a.col(r) = -a.col(r);
  }
  return a;
}

/// ML factor analysis of a unit-diagonal moment (correlation) matrix.
inline EfaFit fit_ml_efa_correlation(const Eigen::MatrixXd& corr, int m,
                                     const EfaOptions& opts = {}) {
  const int p = static_cast<int>(corr.rows());
  if (corr.cols() != p) throw ShapeMismatch("fit_ml_efa: moment matrix is not square");
  if (m < 1 || m > lederman_bound(p))
    throw PreconditionError("fit_ml_efa: m=" + std::to_string(m) + " outside [1, " +
                            std::to_string(lederman_bound(p)) + "] for p=" + std::to_string(p));

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(corr);
  const double lmin = es.eigenvalues()[0];
  const double lmax = es.eigenvalues()[p - 1];
  if (!(lmin > 1e-12 * std::max(1.0, lmax))) throw RankDeficientSample();

  const double lo_log = std::log(opts.heywood_floor);
  Eigen::VectorXd start(p);
  if (lmax / lmin > opts.near_singular_cond) {
    start.setConstant(0.5);
  } else {
    const Eigen::MatrixXd inv =
        es.eigenvectors() * es.eigenvalues().cwiseInverse().asDiagonal() * es.eigenvectors().transpose();
    for (int j = 0; j < p; ++j) {
      const double smc = 1.0 - 1.0 / inv(j, j);
      start[j] = std::clamp(1.0 - static_cast<double>(m) / (2.0 * p) * smc, opts.heywood_floor, 1.0);
    }
  }

  BoxBfgsOptions bo;
  bo.max_iters = opts.max_iters;
  bo.grad_tol = opts.grad_tol;
  auto objective = [&](const Eigen::VectorXd& x, Eigen::VectorXd& g) {
    return profile_discrepancy(corr, x, m, &g);
  };
  const BoxBfgsResult r =
      minimize_box_bfgs(objective, start.array().log().matrix(), Eigen::VectorXd::Constant(p, lo_log),
                        Eigen::VectorXd::Zero(p), bo);
  if (!r.converged) throw DidNotConverge(opts.max_iters);

  EfaFit fit;
  fit.model.uniquenesses = r.x.array().exp();
  fit.model.loadings = canonical_loadings(corr, fit.model.uniquenesses, m);
  fit.discrepancy = r.value;
  fit.projected_grad_norm = r.projected_grad_norm;
  fit.iterations = r.iterations;
  return fit;
}

/// ML fit of N(0, A A^T + Psi) to a second-moment matrix S (not necessarily
/// unit diagonal). Solved on the correlation scale of S and mapped back, which
/// is exact because the ML solution is scale equivariant.
inline EfaFit fit_ml_efa_moments(const Eigen::MatrixXd& moments, int m, const EfaOptions& opts = {}) {
  const Eigen::VectorXd d = moments.diagonal();
  if (!(d.array() > 0.0).all()) throw RankDeficientSample();
  const Eigen::VectorXd inv_sd = d.cwiseSqrt().cwiseInverse();
  Eigen::MatrixXd corr = inv_sd.asDiagonal() * moments * inv_sd.asDiagonal();
  corr.diagonal().setOnes();
  EfaFit fit = fit_ml_efa_correlation(corr, m, opts);
  fit.model.loadings = d.cwiseSqrt().asDiagonal() * fit.model.loadings;
  fit.model.uniquenesses = fit.model.uniquenesses.cwiseProduct(d);
  return fit;
}

// Zero-mean second moments X^T X / n over the selected rows.
inline Eigen::MatrixXd second_moments(const DataMatrix& data, std::span<const std::size_t> rows) {
  const Eigen::Index p = data.cols();
  Eigen::MatrixXd s = Eigen::MatrixXd::Zero(p, p);
  for (std::size_t i : rows) {
    const auto x = data.values.row(static_cast<Eigen::Index>(i));
    s.selfadjointView<Eigen::Lower>().rankUpdate(x.transpose());
  }
  s = s.selfadjointView<Eigen::Lower>();
  return s / static_cast<double>(rows.size());
}

/// Maximum-likelihood EFA of the selected rows under the zero-mean model used
/// by the clustered likelihood. Requires more rows than variables.
inline EfaFit fit_ml_efa_rows(const DataMatrix& data, std::span<const std::size_t> rows, int m,
                              const EfaOptions& opts = {}) {
  if (rows.size() <= static_cast<std::size_t>(data.cols()))
    throw PreconditionError("fit_ml_efa: need more rows than variables");
  return fit_ml_efa_moments(second_moments(data, rows), m, opts);
}

inline FactorModel fit_ml_efa(const DataMatrix& data, int m, const EfaOptions& opts = {}) {
  if (!data.standardized) throw PreconditionError("fit_ml_efa: data must be standardized");
  std::vector<std::size_t> all(static_cast<std::size_t>(data.rows()));
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
  return fit_ml_efa_rows(data, all, m, opts).model;
}

/// Loadings on the correlation scale of the implied covariance.
inline Eigen::MatrixXd standardized_loadings(const FactorModel& model) {
  const Eigen::VectorXd sd = implied_covariance(model).diagonal().cwiseSqrt();
  return sd.cwiseInverse().asDiagonal() * model.loadings;
}

/// Varimax rotation with Kaiser row normalization. Reporting only; the
/// likelihood never sees rotated loadings.
inline Eigen::MatrixXd varimax(const Eigen::MatrixXd& loadings, double eps = 1e-5,
                               int max_iters = 1000) {
  const Eigen::Index p = loadings.rows();
  const Eigen::Index k = loadings.cols();
  if (k < 2) return loadings;
  Eigen::VectorXd row_norm = loadings.rowwise().norm();
  for (Eigen::Index i = 0; i < p; ++i)
    if (row_norm[i] == 0.0) row_norm[i] = 1.0;
  const Eigen::MatrixXd x = row_norm.cwiseInverse().asDiagonal() * loadings;
  Eigen::MatrixXd rot = Eigen::MatrixXd::Identity(k, k);
  double d = 0.0;
  for (int it = 0; it < max_iters; ++it) {
    const Eigen::MatrixXd z = x * rot;
    const Eigen::RowVectorXd col_ss = z.array().square().colwise().sum();
    const Eigen::MatrixXd target =
        z.array().cube().matrix() - z * (col_ss / static_cast<double>(p)).asDiagonal();
    const Eigen::MatrixXd b = x.transpose() * target;
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(b, Eigen::ComputeFullU | Eigen::ComputeFullV);
    rot = svd.matrixU() * svd.matrixV().transpose();
    const double prev = d;
    d = svd.singularValues().sum();
    if (d < prev * (1.0 + eps)) break;
  }
  return row_norm.asDiagonal() * (x * rot);
}

}  // namespace scfa
