#pragma once

#include "scfa/error.hpp"
#include "scfa/factor_model.hpp"
#include "scfa/kmeans.hpp"
#include "scfa/rng.hpp"
#include "scfa/spatial_weights.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace scfa {

/// Group memberships. Labels are 0-based in [0, num_groups); files and
/// reports show them 1-based.
struct Partition {
  std::vector<int> labels;
  int num_groups = 0;

  std::size_t size() const { return labels.size(); }

  std::vector<std::size_t> sizes() const {
    std::vector<std::size_t> s(static_cast<std::size_t>(num_groups), 0);
    for (int g : labels) ++s[static_cast<std::size_t>(g)];
    return s;
  }

  std::vector<std::size_t> members(int group) const {
    std::vector<std::size_t> rows;
    for (std::size_t i = 0; i < labels.size(); ++i)
      if (labels[i] == group) rows.push_back(i);
    return rows;
  }

  void validate() const {
    if (num_groups < 1) throw PreconditionError("Partition: need at least one group");
    for (int g : labels)
      if (g < 0 || g >= num_groups) throw PreconditionError("Partition: label out of range");
  }

  bool operator==(const Partition&) const = default;
};

enum class InitMethod { kmeans_on_coords, random };
enum class SweepMode { sequential, synchronous };

inline const char* to_string(InitMethod m) {
  return m == InitMethod::kmeans_on_coords ? "kmeans" : "random";
}

struct ScfaConfig {
  double phi = 1.0;
  int num_factors = 3;
  int num_groups = 4;
  double tolerance = 1e-6;
  int max_outer_iters = 100;
  int min_group_size = 0;  // 0 means p + 1
  InitMethod init = InitMethod::kmeans_on_coords;
  std::uint64_t seed = 0;
  SweepMode sweep = SweepMode::sequential;
  EfaOptions efa;

  int effective_min_group_size(int p) const { return min_group_size > 0 ? min_group_size : p + 1; }

  void validate(int p) const {
    if (!(phi >= 0.0)) throw PreconditionError("ScfaConfig: phi must be nonnegative");
    if (!(tolerance > 0.0)) throw PreconditionError("ScfaConfig: tolerance must be positive");
    if (num_groups < 1) throw PreconditionError("ScfaConfig: num_groups must be >= 1");
    if (max_outer_iters < 1) throw PreconditionError("ScfaConfig: max_outer_iters must be >= 1");
    if (effective_min_group_size(p) < num_factors + 1)
      throw PreconditionError("ScfaConfig: min_group_size must be at least m + 1");
  }
};

/// One slot per group; empty for a group that never had enough members to fit.
using GroupModels = std::vector<std::optional<FactorModel>>;

struct FitReport {
  GroupModels models;
  Partition partition;
  std::vector<double> objective_trace;
  std::vector<double> d_trace;  // +inf for the first iteration
  std::vector<std::size_t> label_changes;
  int iterations = 0;
  bool converged = false;
  Eigen::VectorXd per_sample_loglik;

  double log_likelihood() const { return per_sample_loglik.sum(); }
};

class ScfaDidNotConverge : public DidNotConverge {
 public:
  ScfaDidNotConverge(int max_iters, FitReport partial)
      : DidNotConverge(max_iters), report_(std::move(partial)) {}
  const FitReport& report() const noexcept { return report_; }

 private:
  FitReport report_;
};

namespace detail {

// n x G log-densities; -inf where a group has no model.
inline Eigen::MatrixXd log_density_table(const DataMatrix& data, const GroupModels& models) {
  const Eigen::Index n = data.rows();
  Eigen::MatrixXd table(n, static_cast<Eigen::Index>(models.size()));
  for (std::size_t g = 0; g < models.size(); ++g) {
    const auto col = static_cast<Eigen::Index>(g);
    if (!models[g]) {
      table.col(col).setConstant(-std::numeric_limits<double>::infinity());
      continue;
    }
    const GaussianDensity dens(*models[g]);
    for (Eigen::Index i = 0; i < n; ++i) table(i, col) = dens(data.values.row(i).transpose());
  }
  return table;
}

inline double potts_term(const Partition& part, const WeightMatrix& w) {
  double s = 0.0;
  const auto n = static_cast<Eigen::Index>(part.size());
  for (Eigen::Index l = 1; l < n; ++l)
    for (Eigen::Index i = 0; i < l; ++i)
      if (part.labels[static_cast<std::size_t>(i)] == part.labels[static_cast<std::size_t>(l)])
        s += w.weights(i, l);
  return s;
}

/// One ICM sweep in ascending index order. A point moves only to a strictly
/// better group; ties keep the incumbent, then favour the smallest index.
inline Partition sweep(const Eigen::MatrixXd& logdens, const std::vector<bool>& eligible,
                       const Partition& start, const WeightMatrix& w, double phi, SweepMode mode,
                       std::size_t* changes) {
  Partition out = start;
  const std::vector<int>& ref = (mode == SweepMode::sequential) ? out.labels : start.labels;
  const auto n = static_cast<Eigen::Index>(start.size());
  const int G = start.num_groups;
  std::vector<double> same(static_cast<std::size_t>(G));
  std::size_t moved = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    std::fill(same.begin(), same.end(), 0.0);
    if (phi != 0.0) {
      for (Eigen::Index l = 0; l < n; ++l) {
        if (l == i) continue;
        const double wil = w.weights(i, l);
        if (wil != 0.0) same[static_cast<std::size_t>(ref[static_cast<std::size_t>(l)])] += wil;
      }
    }
    const int inc = start.labels[static_cast<std::size_t>(i)];
    int best = -1;
    double best_val = -std::numeric_limits<double>::infinity();
    if (eligible[static_cast<std::size_t>(inc)]) {
      best = inc;
      best_val = logdens(i, inc) + phi * same[static_cast<std::size_t>(inc)];
    }
    for (int g = 0; g < G; ++g) {
      if (g == inc || !eligible[static_cast<std::size_t>(g)]) continue;
      const double v = logdens(i, g) + phi * same[static_cast<std::size_t>(g)];
      if (v > best_val) {
        best_val = v;
        best = g;
      }
    }
    if (best < 0) throw PreconditionError("update_membership: no eligible group");
    if (best != out.labels[static_cast<std::size_t>(i)]) ++moved;
    out.labels[static_cast<std::size_t>(i)] = best;
  }
  if (changes) *changes = moved;
  return out;
}

inline std::vector<bool> eligible_groups(const GroupModels& models, const Partition& part) {
  const auto sizes = part.sizes();
  std::vector<bool> e(models.size());
  for (std::size_t g = 0; g < models.size(); ++g) e[g] = models[g].has_value() && sizes[g] > 0;
  return e;
}

inline GroupModels wrap(std::span<const FactorModel> models) {
  return GroupModels(models.begin(), models.end());
}

}  // namespace detail

/// Q(A, Psi, g): sample log-likelihood plus phi times the summed weights of
/// same-label unordered pairs.
inline double penalized_objective(const DataMatrix& data, const GroupModels& models,
                                  const Partition& part, const WeightMatrix& w, double phi) {
  if (part.size() != static_cast<std::size_t>(data.rows()) || w.size() != part.size())
    throw ShapeMismatch("penalized_objective: inconsistent sizes");
  double ll = 0.0;
  for (int g = 0; g < part.num_groups; ++g) {
    const auto rows = part.members(g);
    if (rows.empty()) continue;
    if (!models[static_cast<std::size_t>(g)])
      throw PreconditionError("penalized_objective: populated group without a model");
    ll += group_log_likelihood(data, *models[static_cast<std::size_t>(g)], rows);
  }
  return ll + phi * detail::potts_term(part, w);
}

inline double penalized_objective(const DataMatrix& data, std::span<const FactorModel> models,
                                  const Partition& part, const WeightMatrix& w, double phi) {
  return penalized_objective(data, detail::wrap(models), part, w, phi);
}

/// One membership sweep over every group that has a model. (Inside fit_scfa
/// groups that have emptied are also excluded.)
inline Partition update_membership(const DataMatrix& data, const GroupModels& models,
                                   const Partition& part, const WeightMatrix& w, double phi,
                                   SweepMode mode = SweepMode::sequential,
                                   std::size_t* changes = nullptr) {
  part.validate();
  if (models.size() != static_cast<std::size_t>(part.num_groups))
    throw ShapeMismatch("update_membership: one model per group required");
  if (part.size() != static_cast<std::size_t>(data.rows()) || w.size() != part.size())
    throw ShapeMismatch("update_membership: inconsistent sizes");
  std::vector<bool> eligible(models.size());
  for (std::size_t g = 0; g < models.size(); ++g) eligible[g] = models[g].has_value();
  const Eigen::MatrixXd table = detail::log_density_table(data, models);
  return detail::sweep(table, eligible, part, w, phi, mode, changes);
}

inline Partition update_membership(const DataMatrix& data, std::span<const FactorModel> models,
                                   const Partition& part, const WeightMatrix& w, double phi,
                                   SweepMode mode = SweepMode::sequential,
                                   std::size_t* changes = nullptr) {
  return update_membership(data, detail::wrap(models), part, w, phi, mode, changes);
}

/// Sum over groups of Tr|Psi_curr - Psi_prev| / Tr(Psi_prev). Groups without
/// a model on either side contribute 0.
inline double convergence_statistic(const GroupModels& prev, const GroupModels& curr) {
  if (prev.size() != curr.size()) throw ShapeMismatch("convergence_statistic: group counts differ");
  double d = 0.0;
  for (std::size_t g = 0; g < prev.size(); ++g) {
    if (!prev[g] || !curr[g]) continue;
    const Eigen::VectorXd& a = prev[g]->uniquenesses;
    const Eigen::VectorXd& b = curr[g]->uniquenesses;
    if (a.size() != b.size()) throw ShapeMismatch("convergence_statistic: p differs");
    d += (b - a).cwiseAbs().sum() / a.sum();
  }
  return d;
}

inline double convergence_statistic(std::span<const FactorModel> prev,
                                    std::span<const FactorModel> curr) {
  return convergence_statistic(detail::wrap(prev), detail::wrap(curr));
}

inline Partition init_partition(const LocationTable& locs, int G, InitMethod method,
                                std::uint64_t seed) {
  const std::size_t n = locs.size();
  if (G < 1 || static_cast<std::size_t>(G) > n)
    throw PreconditionError("init_partition: need 1 <= G <= n");
  Partition p{std::vector<int>(n, 0), G};
  if (G == 1) return p;
  if (method == InitMethod::random) {
    Rng rng(seed);
    for (auto& l : p.labels) l = static_cast<int>(rng.below(static_cast<std::uint64_t>(G)));
  } else {
    p.labels = kmeans(Eigen::MatrixXd(locs.coords), G, seed).labels;
  }
  return p;
}

/// Alternates per-group ML factor analysis with membership sweeps until the
/// relative uniqueness change drops below tolerance and no label moved.
inline FitReport fit_scfa(const DataMatrix& data, const WeightMatrix& weights,
                          const ScfaConfig& config, Partition initial) {
  const int p = static_cast<int>(data.cols());
  const std::size_t n = static_cast<std::size_t>(data.rows());
  config.validate(p);
  initial.validate();
  if (initial.size() != n || weights.size() != n)
    throw ShapeMismatch("fit_scfa: data, weights and partition sizes differ");
  if (initial.num_groups != config.num_groups)
    throw PreconditionError("fit_scfa: initial partition has the wrong group count");
  const std::size_t min_size = static_cast<std::size_t>(config.effective_min_group_size(p));
  {
    bool any = false;
    for (std::size_t s : initial.sizes()) any = any || s >= min_size;
    if (!any) throw InvalidInit("fit_scfa: every initial group is smaller than min_group_size");
  }

  const std::size_t G = static_cast<std::size_t>(config.num_groups);
  FitReport rep;
  rep.models.assign(G, std::nullopt);
  rep.partition = std::move(initial);

  Eigen::MatrixXd table;
  for (int k = 1; k <= config.max_outer_iters; ++k) {
    const GroupModels prev = rep.models;
    for (std::size_t g = 0; g < G; ++g) {
      const auto rows = rep.partition.members(static_cast<int>(g));
      if (rows.size() < min_size) continue;
      try {
        FactorModel cand = fit_ml_efa_rows(data, rows, config.num_factors, config.efa).model;
        if (prev[g] && group_log_likelihood(data, *prev[g], rows) >
                           group_log_likelihood(data, cand, rows))
          continue;  // the refit landed in a worse local optimum
        rep.models[g] = std::move(cand);
      } catch (const Error&) {
        // keep the previous parameters for this group
      }
    }
    if (k == 1) {
      bool any = false;
      for (const auto& m : rep.models) any = any || m.has_value();
      if (!any) throw InvalidInit("fit_scfa: no initial group could be fitted");
    }

    table = detail::log_density_table(data, rep.models);
    std::size_t moved = 0;
    rep.partition = detail::sweep(table, detail::eligible_groups(rep.models, rep.partition),
                                  rep.partition, weights, config.phi, config.sweep, &moved);

    const double d = (k == 1) ? std::numeric_limits<double>::infinity()
                              : convergence_statistic(prev, rep.models);
    double ll = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      ll += table(static_cast<Eigen::Index>(i), rep.partition.labels[i]);
    rep.objective_trace.push_back(ll + config.phi * detail::potts_term(rep.partition, weights));
    rep.d_trace.push_back(d);
    rep.label_changes.push_back(moved);
    rep.iterations = k;
    if (d < config.tolerance && moved == 0) {
      rep.converged = true;
      break;
    }
  }

  rep.per_sample_loglik.resize(static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i)
    rep.per_sample_loglik[static_cast<Eigen::Index>(i)] =
        table(static_cast<Eigen::Index>(i), rep.partition.labels[i]);
  if (!rep.converged) throw ScfaDidNotConverge(config.max_outer_iters, std::move(rep));
  return rep;
}

inline FitReport fit_scfa(const DataMatrix& data, const LocationTable& locs,
                          const WeightMatrix& weights, const ScfaConfig& config) {
  if (locs.size() != static_cast<std::size_t>(data.rows()))
    throw ShapeMismatch("fit_scfa: locations and data differ in length");
  return fit_scfa(data, weights, config,
                  init_partition(locs, config.num_groups, config.init, config.seed));
}

}  // namespace scfa
