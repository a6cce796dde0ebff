#pragma once

#include "scfa/error.hpp"
#include "scfa/factor_model.hpp"
#include "scfa/scfa.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <string>
#include <vector>

namespace scfa {

using MatrixSequence = std::vector<Eigen::MatrixXd>;

struct EvaluationResult {
  double frobenius = 0.0;
  double wasserstein = 0.0;
  double chebyshev = 0.0;
  double aic = 0.0;
  std::string method_label;
  std::string scenario_label;
  int replication = 0;
};

namespace detail {

inline void check_shapes(const MatrixSequence& a, const MatrixSequence& b) {
  if (a.size() != b.size()) throw ShapeMismatch("matrix sequences differ in length");
  for (std::size_t k = 0; k < a.size(); ++k)
    if (a[k].rows() != b[k].rows() || a[k].cols() != b[k].cols())
      throw ShapeMismatch("matrix " + std::to_string(k) + " differs in shape");
}

// Symmetric PSD square root; eigenvalues below the clip level count as zero.
inline Eigen::MatrixXd psd_sqrt(const Eigen::MatrixXd& s) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(s);
  const double top = std::max(1.0, es.eigenvalues().cwiseAbs().maxCoeff());
  Eigen::VectorXd r = es.eigenvalues();
  for (Eigen::Index i = 0; i < r.size(); ++i) r[i] = r[i] > 1e-10 * top ? std::sqrt(r[i]) : 0.0;
  return es.eigenvectors() * r.asDiagonal() * es.eigenvectors().transpose();
}

inline void check_symmetric(const Eigen::MatrixXd& s) {
  if ((s - s.transpose()).cwiseAbs().maxCoeff() > 1e-8) throw NotSymmetric("matrix is not symmetric");
}

}  // namespace detail

inline double frobenius_distance(const MatrixSequence& truth, const MatrixSequence& est) {
  detail::check_shapes(truth, est);
  if (truth.empty()) return 0.0;
  double sum = 0.0;
  for (std::size_t k = 0; k < truth.size(); ++k) sum += (truth[k] - est[k]).norm();
  return sum / static_cast<double>(truth.size());
}

// 2-Wasserstein distance between N(0, a) and N(0, b) (Bures form).
inline double gaussian_w2(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  detail::check_symmetric(a);
  detail::check_symmetric(b);
  const Eigen::MatrixXd ra = detail::psd_sqrt(a);
  Eigen::MatrixXd cross = ra * b * ra;
  cross = 0.5 * (cross + cross.transpose());
  const double v = a.trace() + b.trace() - 2.0 * detail::psd_sqrt(cross).trace();
  return std::sqrt(std::max(v, 0.0));
}

inline double gaussian_w2_distance(const MatrixSequence& truth, const MatrixSequence& est) {
  detail::check_shapes(truth, est);
  if (truth.empty()) return 0.0;
  double sum = 0.0;
  for (std::size_t k = 0; k < truth.size(); ++k) sum += gaussian_w2(truth[k], est[k]);
  return sum / static_cast<double>(truth.size());
}

// Global maximum over samples and entries; not averaged.
inline double chebyshev_distance(const MatrixSequence& truth, const MatrixSequence& est) {
  detail::check_shapes(truth, est);
  double worst = 0.0;
  for (std::size_t k = 0; k < truth.size(); ++k)
    if (truth[k].size() > 0) worst = std::max(worst, (truth[k] - est[k]).cwiseAbs().maxCoeff());
  return worst;
}

/// Per-sample A A^T for a single model broadcast n times.
inline MatrixSequence expand_per_sample(const FactorModel& model, std::size_t n) {
  return MatrixSequence(n, model.loadings * model.loadings.transpose());
}

inline MatrixSequence expand_per_sample(const std::vector<Eigen::MatrixXd>& loadings,
                                        const std::optional<Partition>& part, std::size_t n) {
  if (!part) throw MissingPartition();
  if (part->size() != n) throw ShapeMismatch("expand_per_sample: partition length differs from n");
  std::vector<Eigen::MatrixXd> cov;
  cov.reserve(loadings.size());
  for (const auto& a : loadings) cov.push_back(a * a.transpose());
  MatrixSequence out;
  out.reserve(n);
  for (int g : part->labels) {
    if (g < 0 || static_cast<std::size_t>(g) >= cov.size())
      throw ShapeMismatch("expand_per_sample: label without a model");
    out.push_back(cov[static_cast<std::size_t>(g)]);
  }
  return out;
}

inline MatrixSequence expand_per_sample(const GroupModels& models, const std::optional<Partition>& part,
                                        std::size_t n) {
  if (!part) throw MissingPartition();
  std::vector<Eigen::MatrixXd> loadings;
  loadings.reserve(models.size());
  for (std::size_t g = 0; g < models.size(); ++g) {
    if (models[g]) {
      loadings.push_back(models[g]->loadings);
    } else {
      for (int l : part->labels)
        if (static_cast<std::size_t>(l) == g) throw ShapeMismatch("expand_per_sample: label without a model");
      loadings.emplace_back();
    }
  }
  return expand_per_sample(loadings, part, n);
}

/// Maximum-weight assignment on a square matrix (Hungarian method,
/// O(k^3)). Returns the column assigned to each row.
inline std::vector<int> max_weight_assignment(const Eigen::MatrixXd& weight) {
  const int k = static_cast<int>(weight.rows());
  const double inf = std::numeric_limits<double>::infinity();
  const double top = k > 0 ? weight.maxCoeff() : 0.0;
  // Minimize cost = top - weight with 1-based potentials.
  std::vector<double> u(k + 1, 0.0), v(k + 1, 0.0);
  std::vector<int> match(k + 1, 0), way(k + 1, 0);
  for (int i = 1; i <= k; ++i) {
    match[0] = i;
    int j0 = 0;
    std::vector<double> minv(k + 1, inf);
    std::vector<bool> used(k + 1, false);
    do {
      used[j0] = true;
      const int i0 = match[j0];
      double delta = inf;
      int j1 = 0;
      for (int j = 1; j <= k; ++j) {
        if (used[j]) continue;
        const double cur = (top - weight(i0 - 1, j - 1)) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (int j = 0; j <= k; ++j) {
        if (used[j]) {
          u[match[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (match[j0] != 0);
    do {
      const int j1 = way[j0];
      match[j0] = match[j1];
      j0 = j1;
    } while (j0);
  }
  std::vector<int> row_to_col(static_cast<std::size_t>(k), -1);
  for (int j = 1; j <= k; ++j)
    if (match[j] > 0) row_to_col[static_cast<std::size_t>(match[j] - 1)] = j - 1;
  return row_to_col;
}

/// Fraction of samples whose labels agree under the best relabeling of `est`.
inline double label_agreement(const Partition& truth, const Partition& est) {
  if (truth.size() != est.size()) throw ShapeMismatch("label_agreement: partitions differ in length");
  if (truth.size() == 0) return 1.0;
  const int k = std::max(truth.num_groups, est.num_groups);
  Eigen::MatrixXd table = Eigen::MatrixXd::Zero(k, k);
  for (std::size_t i = 0; i < truth.size(); ++i) table(truth.labels[i], est.labels[i]) += 1.0;
  const auto assign = max_weight_assignment(table);
  double hit = 0.0;
  for (int r = 0; r < k; ++r) hit += table(r, assign[static_cast<std::size_t>(r)]);
  return hit / static_cast<double>(truth.size());
}

}  // namespace scfa
