#pragma once

#include "scfa/error.hpp"
#include "scfa/factor_model.hpp"
#include "scfa/parallel.hpp"
#include "scfa/rng.hpp"
#include "scfa/scfa.hpp"
#include "scfa/spatial_weights.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

namespace scfa {

/// IC(G) = -2 * sum log f + c_n * G * (p*m + p).
inline double information_criterion(double log_likelihood, int G, double c_n, int p, int m) {
  return -2.0 * log_likelihood + c_n * G * (p * m + p);
}

inline double information_criterion(const FitReport& report, double c_n, int p, int m) {
  return information_criterion(report.log_likelihood(), report.partition.num_groups, c_n, p, m);
}

struct ICResult {
  std::vector<int> candidate_G;
  std::vector<double> ic_values;  // +inf for failed candidates
  std::vector<bool> failed;
  std::vector<std::string> errors;
  int chosen_G = 0;
  double c_n = 0.0;
  std::optional<FitReport> chosen_report;
};

// Index of the minimum; ties go to the smaller G.
inline std::size_t argmin_ic(const std::vector<int>& Gs, const std::vector<double>& ic) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < ic.size(); ++i)
    if (ic[i] < ic[best] || (ic[i] == ic[best] && Gs[i] < Gs[best])) best = i;
  return best;
}

/// Fits every candidate G (seed = template seed + G) and returns the IC
/// minimizer. Candidate fits run on `threads` workers into indexed slots.
inline ICResult select_G(const DataMatrix& data, const LocationTable& locs, const WeightMatrix& weights,
                         const ScfaConfig& config_template, const std::vector<int>& candidates,
                         double c_n, int threads = 1) {
  if (candidates.empty()) throw PreconditionError("select_G: no candidates");
  for (int g : candidates)
    if (g < 1) throw PreconditionError("select_G: candidates must be >= 1");
  const int p = static_cast<int>(data.cols());
  const std::size_t L = candidates.size();
  ICResult res;
  res.candidate_G = candidates;
  res.c_n = c_n;
  res.ic_values.assign(L, std::numeric_limits<double>::infinity());
  res.failed.assign(L, false);
  res.errors.assign(L, "");
  std::vector<std::optional<FitReport>> reports(L);

  parallel_for(L, threads, [&](std::size_t i) {
    ScfaConfig cfg = config_template;
    cfg.num_groups = candidates[i];
    cfg.seed = config_template.seed + static_cast<std::uint64_t>(candidates[i]);
    try {
      FitReport r = fit_scfa(data, locs, weights, cfg);
      res.ic_values[i] = information_criterion(r, c_n, p, cfg.num_factors);
      reports[i] = std::move(r);
    } catch (const Error& e) {
      res.failed[i] = true;
      res.errors[i] = e.what();
    }
  });

  const std::size_t best = argmin_ic(candidates, res.ic_values);
  res.chosen_G = candidates[best];
  res.chosen_report = std::move(reports[best]);
  return res;
}

struct ParallelAnalysisResult {
  Eigen::VectorXd observed_eigenvalues;   // descending
  Eigen::VectorXd reference_eigenvalues;  // descending
  int chosen_m = 0;
  int num_sims = 0;
  double percentile = 95.0;
  bool use_mean = false;
};

inline Eigen::MatrixXd sample_correlation(const Eigen::MatrixXd& x) {
  const Eigen::MatrixXd c = x.rowwise() - x.colwise().mean();
  Eigen::MatrixXd s = c.transpose() * c;
  const Eigen::VectorXd inv_sd = s.diagonal().cwiseSqrt().cwiseInverse();
  s = inv_sd.asDiagonal() * s * inv_sd.asDiagonal();
  s.diagonal().setOnes();
  return s;
}

inline Eigen::VectorXd descending_eigenvalues(const Eigen::MatrixXd& s) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(s, Eigen::EigenvaluesOnly);
  return es.eigenvalues().reverse();
}

// Linear-interpolation percentile (q in [0, 100]) of unsorted values.
inline double percentile_of(std::vector<double> v, double q) {
  std::sort(v.begin(), v.end());
  const double pos = q / 100.0 * static_cast<double>(v.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

/// Horn's parallel analysis against B standard-normal datasets of the same
/// shape. Counting stops at the first factor that does not beat the reference.
inline ParallelAnalysisResult parallel_analysis(const DataMatrix& data, int B = 100, double percentile = 95.0,
                                                std::uint64_t seed = 0, bool use_mean = false) {
  if (B < 10) throw PreconditionError("parallel_analysis: need B >= 10");
  if (!(percentile >= 50.0 && percentile <= 100.0))
    throw PreconditionError("parallel_analysis: percentile must lie in [50, 100]");
  const Eigen::Index n = data.rows();
  const Eigen::Index p = data.cols();
  ParallelAnalysisResult res;
  res.num_sims = B;
  res.percentile = percentile;
  res.use_mean = use_mean;
  res.observed_eigenvalues = descending_eigenvalues(sample_correlation(data.values));

  std::vector<std::vector<double>> sims(static_cast<std::size_t>(p));
  for (int b = 0; b < B; ++b) {
    Rng rng(derive_seed({seed, static_cast<std::uint64_t>(b)}));
    Eigen::MatrixXd z(n, p);
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index j = 0; j < p; ++j) z(i, j) = rng.normal();
    const Eigen::VectorXd ev = descending_eigenvalues(sample_correlation(z));
    for (Eigen::Index j = 0; j < p; ++j) sims[static_cast<std::size_t>(j)].push_back(ev[j]);
  }
  res.reference_eigenvalues.resize(p);
  for (Eigen::Index j = 0; j < p; ++j) {
    const auto& v = sims[static_cast<std::size_t>(j)];
    double ref;
    if (use_mean) {
      ref = 0.0;
      for (double x : v) ref += x;
      ref /= static_cast<double>(v.size());
    } else {
      ref = percentile_of(v, percentile);
    }
    res.reference_eigenvalues[j] = ref;
  }
  res.chosen_m = 0;
  while (res.chosen_m < p && res.observed_eigenvalues[res.chosen_m] > res.reference_eigenvalues[res.chosen_m])
    ++res.chosen_m;
  return res;
}

}  // namespace scfa
