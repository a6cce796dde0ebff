#pragma once

#include "scfa/error.hpp"
#include "scfa/factor_model.hpp"
#include "scfa/rng.hpp"
#include "scfa/scfa.hpp"
#include "scfa/spatial_weights.hpp"

#include <Eigen/Dense>

#include <array>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace scfa {

enum class Scenario { uniform, radial, gaussian, anisotropic, varied, uneven };

inline constexpr std::array<Scenario, 6> all_scenarios = {
    Scenario::uniform, Scenario::radial,  Scenario::gaussian,
    Scenario::anisotropic, Scenario::varied, Scenario::uneven};

inline const char* to_string(Scenario s) {
  switch (s) {
    case Scenario::uniform: return "uniform";
    case Scenario::radial: return "radial";
    case Scenario::gaussian: return "gaussian";
    case Scenario::anisotropic: return "anisotropic";
    case Scenario::varied: return "varied";
    case Scenario::uneven: return "uneven";
  }
  return "?";
}

inline Scenario parse_scenario(std::string_view name) {
  for (Scenario s : all_scenarios)
    if (name == to_string(s)) return s;
  throw PreconditionError("unknown scenario '" + std::string(name) + "'");
}

// Group means of the loading columns, one row per group.
inline Eigen::MatrixXd default_mu_table() {
  Eigen::MatrixXd mu(4, 3);
  mu << 1.0, 1.0, 1.0,
       -1.0, 0.5, 0.5,
        0.5, -1.0, 0.5,
        0.5, 0.5, -1.0;
  return mu;
}

struct ScenarioSpec {
  Scenario scenario = Scenario::uniform;
  int n = 200;
  int p = 10;
  int m = 3;
  int G = 4;
  double noise_sd = 1.0;
  std::vector<double> loading_sd = {0.5, 0.5, 0.5, 0.5};
  std::uint64_t seed = 0;

  std::array<double, 3> radii = {0.25, 0.5, 0.75};
  double cluster_sd = 0.2;
  std::array<double, 4> varied_sds = {0.2, 0.15, 0.3, 0.06};
  std::array<int, 4> uneven_sizes = {50, 40, 100, 10};
  Eigen::Matrix2d transform = (Eigen::Matrix2d() << 0.6, -0.6, -0.4, 0.8).finished();
  double center_half_width = 0.5;
  Eigen::MatrixXd mu_table = default_mu_table();

  // Debug and test hooks.
  std::optional<Eigen::Matrix<double, 4, 2>> fixed_centers;
  std::optional<std::uint64_t> fixed_loadings_seed;  // draw loadings from their own stream
  bool zero_factors = false;

  void validate() const {
    if (G != 4) throw PreconditionError("ScenarioSpec: the scenario domains define four groups");
    if (n < G || p < 1 || m < 1 || m > p) throw PreconditionError("ScenarioSpec: invalid n, p or m");
    if (mu_table.rows() != G || mu_table.cols() != m)
      throw PreconditionError("ScenarioSpec: mu_table must be G x m");
    if (loading_sd.size() != static_cast<std::size_t>(G))
      throw PreconditionError("ScenarioSpec: one loading sd per group");
    if (scenario == Scenario::uneven) {
      int total = 0;
      for (int s : uneven_sizes) total += s;
      if (total != n) throw PreconditionError("ScenarioSpec: uneven sizes must sum to n");
    }
  }
};

struct SyntheticDataset {
  Eigen::MatrixXd data;  // raw, before standardization
  LocationTable locs;
  Partition true_partition;
  std::vector<Eigen::MatrixXd> true_loadings;
  Eigen::MatrixXd true_mu_table;
};

/// Column k of group g's loadings is i.i.d. N(mu(g, k), tau_g^2).
inline std::vector<Eigen::MatrixXd> generate_loadings(int G, int p, int m,
                                                      const Eigen::MatrixXd& mu_table,
                                                      const std::vector<double>& tau, Rng& rng) {
  if (mu_table.rows() != G || mu_table.cols() != m || tau.size() != static_cast<std::size_t>(G))
    throw PreconditionError("generate_loadings: mu_table must be G x m with one tau per group");
  std::vector<Eigen::MatrixXd> out;
  out.reserve(static_cast<std::size_t>(G));
  for (int g = 0; g < G; ++g) {
    Eigen::MatrixXd a(p, m);
    for (int k = 0; k < m; ++k)
      for (int j = 0; j < p; ++j) a(j, k) = rng.normal(mu_table(g, k), tau[static_cast<std::size_t>(g)]);
    out.push_back(std::move(a));
  }
  return out;
}

inline std::vector<Eigen::MatrixXd> generate_loadings(int G, int p, int m,
                                                      const Eigen::MatrixXd& mu_table,
                                                      const std::vector<double>& tau,
                                                      std::uint64_t seed) {
  Rng rng(seed);
  return generate_loadings(G, p, m, mu_table, tau, rng);
}

// Quadrant groups: (+,+), (-,+), (-,-), (+,-).
inline int uniform_scenario_label(double x, double y) {
  if (x > 0.0) return y > 0.0 ? 0 : 3;
  return y > 0.0 ? 1 : 2;
}

// Concentric bands, closed on the outer edge of each band.
inline int radial_scenario_label(double x, double y, const std::array<double, 3>& radii) {
  const double d = std::sqrt(x * x + y * y);
  if (d <= radii[0]) return 0;
  if (d <= radii[1]) return 1;
  if (d <= radii[2]) return 2;
  return 3;
}

inline std::pair<LocationTable, Partition> generate_locations(const ScenarioSpec& spec, Rng& rng) {
  spec.validate();
  const int n = spec.n;
  LocationTable locs;
  locs.coords.resize(n, 2);
  locs.ids.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) locs.ids.push_back(std::to_string(i + 1));
  Partition part{std::vector<int>(static_cast<std::size_t>(n)), spec.G};

  if (spec.scenario == Scenario::uniform || spec.scenario == Scenario::radial) {
    for (int i = 0; i < n; ++i) {
      const double x = rng.uniform(-1.0, 1.0);
      const double y = rng.uniform(-1.0, 1.0);
      locs.coords(i, 0) = x;
      locs.coords(i, 1) = y;
      part.labels[static_cast<std::size_t>(i)] = spec.scenario == Scenario::uniform
                                                     ? uniform_scenario_label(x, y)
                                                     : radial_scenario_label(x, y, spec.radii);
    }
    return {std::move(locs), std::move(part)};
  }

  std::array<int, 4> sizes{};
  std::array<double, 4> sds{};
  for (int g = 0; g < 4; ++g) {
    sizes[g] = n / 4 + (g < n % 4 ? 1 : 0);
    sds[g] = spec.cluster_sd;
  }
  if (spec.scenario == Scenario::varied) sds = spec.varied_sds;
  if (spec.scenario == Scenario::uneven) sizes = spec.uneven_sizes;

  Eigen::Matrix<double, 4, 2> centers;
  for (int g = 0; g < 4; ++g)
    for (int c = 0; c < 2; ++c) centers(g, c) = rng.uniform(-spec.center_half_width, spec.center_half_width);
  if (spec.fixed_centers) centers = *spec.fixed_centers;

  int row = 0;
  for (int g = 0; g < 4; ++g) {
    for (int i = 0; i < sizes[g]; ++i, ++row) {
      locs.coords(row, 0) = rng.normal(centers(g, 0), sds[g]);
      locs.coords(row, 1) = rng.normal(centers(g, 1), sds[g]);
      part.labels[static_cast<std::size_t>(row)] = g;
    }
  }
  if (spec.scenario == Scenario::anisotropic) locs.coords = locs.coords * spec.transform;
  return {std::move(locs), std::move(part)};
}

inline std::pair<LocationTable, Partition> generate_locations(const ScenarioSpec& spec) {
  Rng rng(spec.seed);
  return generate_locations(spec, rng);
}

/// x_i = A_{g_i} f_i + eps_i. One stream, drawn in the order: locations,
/// loadings, all factor scores, all noise terms.
inline SyntheticDataset generate_dataset(const ScenarioSpec& spec) {
  Rng rng(spec.seed);
  auto [locs, part] = generate_locations(spec, rng);
  SyntheticDataset ds;
  ds.true_mu_table = spec.mu_table;
  if (spec.fixed_loadings_seed) {
    ds.true_loadings =
        generate_loadings(spec.G, spec.p, spec.m, spec.mu_table, spec.loading_sd, *spec.fixed_loadings_seed);
  } else {
    ds.true_loadings = generate_loadings(spec.G, spec.p, spec.m, spec.mu_table, spec.loading_sd, rng);
  }

  const int n = spec.n;
  Eigen::MatrixXd factors(n, spec.m);
  for (int i = 0; i < n; ++i)
    for (int k = 0; k < spec.m; ++k) factors(i, k) = rng.normal();
  if (spec.zero_factors) factors.setZero();

  ds.data.resize(n, spec.p);
  for (int i = 0; i < n; ++i) {
    const auto& a = ds.true_loadings[static_cast<std::size_t>(part.labels[static_cast<std::size_t>(i)])];
    ds.data.row(i) = (a * factors.row(i).transpose()).transpose();
  }
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < spec.p; ++j) ds.data(i, j) += spec.noise_sd * rng.normal();

  ds.locs = std::move(locs);
  ds.true_partition = std::move(part);
  return ds;
}

}  // namespace scfa
