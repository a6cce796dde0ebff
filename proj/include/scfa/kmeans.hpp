#pragma once

#include "scfa/error.hpp"
#include "scfa/rng.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <limits>
#include <vector>

namespace scfa {

struct KMeansResult {
  std::vector<int> labels;
  Eigen::MatrixXd centers;
  double inertia = 0.0;
};

struct KMeansOptions {
  int restarts = 10;
  int max_iters = 300;
};

namespace detail {

inline Eigen::MatrixXd kmeanspp_centers(const Eigen::MatrixXd& pts, int k, Rng& rng) {
  const Eigen::Index n = pts.rows();
  Eigen::MatrixXd centers(k, pts.cols());
  centers.row(0) = pts.row(static_cast<Eigen::Index>(rng.below(static_cast<std::uint64_t>(n))));
  Eigen::VectorXd d2 = (pts.rowwise() - centers.row(0)).rowwise().squaredNorm();
  for (int c = 1; c < k; ++c) {
    const double total = d2.sum();
    Eigen::Index pick = n - 1;
    if (total > 0.0) {
      double target = rng.uniform() * total;
      for (Eigen::Index i = 0; i < n; ++i) {
        target -= d2[i];
        if (target < 0.0) {
          pick = i;
          break;
        }
      }
    } else {
      pick = static_cast<Eigen::Index>(rng.below(static_cast<std::uint64_t>(n)));
    }
    centers.row(c) = pts.row(pick);
    d2 = d2.cwiseMin((pts.rowwise() - centers.row(c)).rowwise().squaredNorm());
  }
  return centers;
}

inline KMeansResult lloyd(const Eigen::MatrixXd& pts, Eigen::MatrixXd centers, int max_iters) {
  const Eigen::Index n = pts.rows();
  const Eigen::Index k = centers.rows();
  KMeansResult r;
  r.labels.assign(static_cast<std::size_t>(n), -1);
  for (int it = 0; it < max_iters; ++it) {
    bool changed = false;
    Eigen::VectorXd best(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      int arg = 0;
      double bd = std::numeric_limits<double>::infinity();
      for (Eigen::Index c = 0; c < k; ++c) {
        const double d = (pts.row(i) - centers.row(c)).squaredNorm();
        if (d < bd) {
          bd = d;
          arg = static_cast<int>(c);
        }
      }
      best[i] = bd;
      if (r.labels[static_cast<std::size_t>(i)] != arg) {
        r.labels[static_cast<std::size_t>(i)] = arg;
        changed = true;
      }
    }
    Eigen::MatrixXd sums = Eigen::MatrixXd::Zero(k, pts.cols());
    Eigen::VectorXd counts = Eigen::VectorXd::Zero(k);
    for (Eigen::Index i = 0; i < n; ++i) {
      sums.row(r.labels[static_cast<std::size_t>(i)]) += pts.row(i);
      counts[r.labels[static_cast<std::size_t>(i)]] += 1.0;
    }
    for (Eigen::Index c = 0; c < k; ++c) {
      if (counts[c] > 0.0) {
        centers.row(c) = sums.row(c) / counts[c];
      } else {
        // Empty cluster: move it to the point farthest from its center.
        Eigen::Index far = 0;
        best.maxCoeff(&far);
        centers.row(c) = pts.row(far);
        best[far] = 0.0;
        changed = true;
      }
    }
    if (!changed) break;
  }
  r.inertia = 0.0;
  for (Eigen::Index i = 0; i < n; ++i)
    r.inertia += (pts.row(i) - centers.row(r.labels[static_cast<std::size_t>(i)])).squaredNorm();
  r.centers = std::move(centers);
  return r;
}

}  // namespace detail

/// Lloyd's algorithm with k-means++ seeding; the lowest-inertia restart wins
/// (earliest restart on ties).
inline KMeansResult kmeans(const Eigen::MatrixXd& pts, int k, std::uint64_t seed,
                           const KMeansOptions& opts = {}) {
  if (k < 1 || k > pts.rows()) throw PreconditionError("kmeans: need 1 <= k <= n");
  Rng rng(seed);
  KMeansResult best;
  best.inertia = std::numeric_limits<double>::infinity();
  for (int r = 0; r < opts.restarts; ++r) {
    KMeansResult cand = detail::lloyd(pts, detail::kmeanspp_centers(pts, k, rng), opts.max_iters);
    if (cand.inertia < best.inertia) best = std::move(cand);
  }
  return best;
}

}  // namespace scfa
