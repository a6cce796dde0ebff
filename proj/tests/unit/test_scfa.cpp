#include "helpers.hpp"
#include "scfa/scfa.hpp"
#include "scfa/simulation.hpp"

#include <gtest/gtest.h>

#include <limits>

using namespace scfa;
using namespace scfa::testing;

namespace {

WeightMatrix dense_weights(const Eigen::MatrixXd& w) { return {w, WeightScheme::knn}; }

struct Toy {
  DataMatrix data;
  std::vector<FactorModel> models;
  WeightMatrix w;
};

Toy make_toy(std::uint64_t seed, int n, int p, int G) {
  Rng rng(seed);
  Toy t;
  t.data = as_data(random_matrix(rng, n, p, 1.2));
  for (int g = 0; g < G; ++g) t.models.push_back(random_model(rng, p, 1));
  Eigen::MatrixXd w = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i < n; ++i)
    for (int l = i + 1; l < n; ++l)
      if (rng.uniform() < 0.4) w(i, l) = w(l, i) = rng.uniform();
  t.w = dense_weights(w);
  return t;
}

Partition random_partition(Rng& rng, int n, int G) {
  Partition p{std::vector<int>(static_cast<std::size_t>(n)), G};
  for (auto& l : p.labels) l = static_cast<int>(rng.below(static_cast<std::uint64_t>(G)));
  return p;
}

}  // namespace

TEST(PenalizedObjective, PhiZeroIsSumOfGroupLikelihoods) {
  Toy t = make_toy(1, 12, 3, 2);
  Rng rng(2);
  const Partition part = random_partition(rng, 12, 2);
  double ll = 0.0;
  for (int g = 0; g < 2; ++g) ll += group_log_likelihood(t.data, t.models[g], part.members(g));
  EXPECT_NEAR(penalized_objective(t.data, t.models, part, t.w, 0.0), ll, 1e-12);
  const WeightMatrix zero = dense_weights(Eigen::MatrixXd::Zero(12, 12));
  EXPECT_NEAR(penalized_objective(t.data, t.models, part, zero, 3.0), ll, 1e-12);
}

TEST(PenalizedObjective, HandBuiltFourPoints) {
  Toy t = make_toy(3, 4, 2, 2);
  Eigen::MatrixXd w(4, 4);
  w << 0, .5, .2, 0, .5, 0, 1, .3, .2, 1, 0, .7, 0, .3, .7, 0;
  t.w = dense_weights(w);
  const Partition part{{0, 0, 1, 1}, 2};
  double oracle = 0.0;
  for (int i = 0; i < 4; ++i) {
    oracle += log_density(t.data.values.row(i).transpose(), t.models[part.labels[i]]);
    for (int l = i + 1; l < 4; ++l)
      if (part.labels[i] == part.labels[l]) oracle += 1.5 * w(i, l);
  }
  EXPECT_NEAR(penalized_objective(t.data, t.models, part, t.w, 1.5), oracle, 1e-12);
}

TEST(UpdateMembership, PhiZeroIsDensityArgmax) {
  Rng rng(4);
  for (int rep = 0; rep < 20; ++rep) {
    const int n = 5 + static_cast<int>(rng.below(16));
    Toy t = make_toy(100 + rep, n, 3, 3);
    const Partition start = random_partition(rng, n, 3);
    const Partition out = update_membership(t.data, t.models, start, t.w, 0.0);
    for (int i = 0; i < n; ++i) {
      int best = 0;
      double bv = -std::numeric_limits<double>::infinity();
      for (int g = 0; g < 3; ++g) {
        const double v = log_density(t.data.values.row(i).transpose(), t.models[g]);
        if (v > bv) {
          bv = v;
          best = g;
        }
      }
      EXPECT_EQ(out.labels[i], best);
    }
  }
}

TEST(UpdateMembership, IdenticalModelsKeepIncumbent) {
  Toy t = make_toy(5, 4, 3, 1);
  const std::vector<FactorModel> same(2, t.models[0]);
  // 4-cycle with heavier diagonals: every point has mass 2 to each label.
  Eigen::MatrixXd w(4, 4);
  w << 0, 1, 2, 1, 1, 0, 1, 2, 2, 1, 0, 1, 1, 2, 1, 0;
  const Partition start{{0, 1, 0, 1}, 2};
  std::size_t changes = 99;
  const Partition out =
      update_membership(t.data, same, start, dense_weights(w), 1.0, SweepMode::sequential, &changes);
  EXPECT_EQ(out, start);
  EXPECT_EQ(changes, 0u);
}

TEST(UpdateMembership, SequentialSweepMatchesPerPointOracle) {
  Rng rng(6);
  for (int rep = 0; rep < 30; ++rep) {
    Toy t = make_toy(200 + rep, 5, 2, 2);
    const Partition start = random_partition(rng, 5, 2);
    const double phi = rng.uniform(0.0, 3.0);
    const Partition out = update_membership(t.data, t.models, start, t.w, phi);
    std::vector<int> cur = start.labels;
    for (int i = 0; i < 5; ++i) {
      double val[2];
      for (int g = 0; g < 2; ++g) {
        val[g] = log_density(t.data.values.row(i).transpose(), t.models[g]);
        for (int l = 0; l < 5; ++l)
          if (l != i && cur[l] == g) val[g] += phi * t.w.weights(i, l);
      }
      const int inc = cur[i];
      cur[i] = val[1 - inc] > val[inc] ? 1 - inc : inc;
    }
    EXPECT_EQ(out.labels, cur);
  }
}

TEST(UpdateMembership, SweepNeverDecreasesObjective) {
  Rng rng(7);
  for (int rep = 0; rep < 30; ++rep) {
    Toy t = make_toy(300 + rep, 15, 3, 3);
    const Partition start = random_partition(rng, 15, 3);
    const Partition out = update_membership(t.data, t.models, start, t.w, 1.0);
    EXPECT_GE(penalized_objective(t.data, t.models, out, t.w, 1.0),
              penalized_objective(t.data, t.models, start, t.w, 1.0) - 1e-12);
  }
}

TEST(UpdateMembership, SynchronousUsesPreviousLabels) {
  // Two points joined by a strong weight, each preferring the other's label.
  Toy t = make_toy(8, 2, 2, 2);
  Eigen::MatrixXd w(2, 2);
  w << 0, 1, 1, 0;
  const Partition start{{0, 1}, 2};
  const Partition sync = update_membership(t.data, t.models, start, dense_weights(w), 1e6, SweepMode::synchronous);
  const Partition seq = update_membership(t.data, t.models, start, dense_weights(w), 1e6);
  EXPECT_EQ(sync.labels, (std::vector<int>{1, 0}));
  EXPECT_EQ(seq.labels[0], seq.labels[1]);
}

TEST(ConvergenceStatistic, Cases) {
  FactorModel a{Eigen::MatrixXd::Zero(2, 1), Eigen::Vector2d(1.0, 1.0)};
  FactorModel b{Eigen::MatrixXd::Zero(2, 1), Eigen::Vector2d(1.1, 0.9)};
  const std::vector<FactorModel> pa{a}, pb{b};
  EXPECT_EQ(convergence_statistic(pa, pa), 0.0);
  EXPECT_NEAR(convergence_statistic(pa, pb), 0.1, 1e-15);
  Rng rng(9);
  for (int rep = 0; rep < 20; ++rep) {
    std::vector<FactorModel> x, y;
    for (int g = 0; g < 3; ++g) {
      x.push_back(random_model(rng, 5, 1));
      y.push_back(random_model(rng, 5, 1));
    }
    double oracle = 0.0;
    for (int g = 0; g < 3; ++g) {
      double num = 0.0, den = 0.0;
      for (int j = 0; j < 5; ++j) {
        num += std::abs(y[g].uniquenesses[j] - x[g].uniquenesses[j]);
        den += x[g].uniquenesses[j];
      }
      oracle += num / den;
    }
    EXPECT_NEAR(convergence_statistic(x, y), oracle, 1e-14);
  }
}

TEST(InitPartition, SingleGroupAndDeterminism) {
  Rng rng(10);
  const LocationTable locs = random_locations(rng, 30);
  const Partition one = init_partition(locs, 1, InitMethod::kmeans_on_coords, 0);
  for (int l : one.labels) EXPECT_EQ(l, 0);
  EXPECT_EQ(init_partition(locs, 4, InitMethod::random, 77), init_partition(locs, 4, InitMethod::random, 77));
  EXPECT_EQ(init_partition(locs, 4, InitMethod::kmeans_on_coords, 5),
            init_partition(locs, 4, InitMethod::kmeans_on_coords, 5));
}

TEST(InitPartition, KmeansSeparatesBlobs) {
  Rng rng(11);
  LocationTable locs;
  locs.coords.resize(40, 2);
  for (int i = 0; i < 40; ++i) {
    locs.coords(i, 0) = rng.normal(i < 20 ? 0.0 : 4.0, 0.3);
    locs.coords(i, 1) = rng.normal(i < 20 ? 0.0 : 4.0, 0.3);
  }
  const Partition p = init_partition(locs, 2, InitMethod::kmeans_on_coords, 3);
  for (int i = 0; i < 40; ++i) EXPECT_EQ(p.labels[i] == p.labels[0], i < 20);
}

namespace {

struct Scenario1 {
  SyntheticDataset ds;
  DataMatrix data;
  WeightMatrix w;
};

Scenario1 scenario1(std::uint64_t seed) {
  ScenarioSpec spec;
  spec.seed = seed;
  Scenario1 s;
  s.ds = generate_dataset(spec);
  s.data = standardize(s.ds.data);
  s.w = knn_weights(s.ds.locs, 5);
  return s;
}

}  // namespace

TEST(FitScfa, SingleGroupEqualsPlainEfa) {
  const Scenario1 s = scenario1(1);
  ScfaConfig cfg;
  cfg.num_groups = 1;
  const FitReport rep = fit_scfa(s.data, s.ds.locs, s.w, cfg);
  const FactorModel efa = fit_ml_efa(s.data, 3);
  ASSERT_TRUE(rep.models[0]);
  EXPECT_LT((rep.models[0]->loadings - efa.loadings).cwiseAbs().maxCoeff(), 1e-8);
  EXPECT_LT((rep.models[0]->uniquenesses - efa.uniquenesses).cwiseAbs().maxCoeff(), 1e-8);
  EXPECT_EQ(rep.iterations, 2);
  EXPECT_TRUE(rep.converged);
}

TEST(FitScfa, TraceLengthsAndConvergenceFlag) {
  const Scenario1 s = scenario1(2);
  ScfaConfig cfg;
  const FitReport rep = fit_scfa(s.data, s.ds.locs, s.w, cfg);
  EXPECT_EQ(rep.objective_trace.size(), static_cast<std::size_t>(rep.iterations));
  EXPECT_EQ(rep.d_trace.size(), static_cast<std::size_t>(rep.iterations));
  EXPECT_TRUE(std::isinf(rep.d_trace.front()));
  EXPECT_LT(rep.d_trace.back(), cfg.tolerance);
  EXPECT_EQ(rep.label_changes.back(), 0u);
  for (std::size_t k = 1; k < rep.objective_trace.size(); ++k)
    EXPECT_GE(rep.objective_trace[k], rep.objective_trace[k - 1] - 1e-6);
  EXPECT_NEAR(rep.objective_trace.back(), penalized_objective(s.data, rep.models, rep.partition, s.w, 1.0),
              1e-8);
}

TEST(FitScfa, Deterministic) {
  const Scenario1 s = scenario1(3);
  ScfaConfig cfg;
  cfg.init = InitMethod::random;
  cfg.seed = 9;
  const FitReport a = fit_scfa(s.data, s.ds.locs, s.w, cfg);
  const FitReport b = fit_scfa(s.data, s.ds.locs, s.w, cfg);
  EXPECT_EQ(a.partition, b.partition);
  EXPECT_EQ(a.objective_trace, b.objective_trace);
}

TEST(FitScfa, HugePenaltyCollapsesToOneLabel) {
  const Scenario1 s = scenario1(4);
  ScfaConfig cfg;
  cfg.phi = 1e6;
  Eigen::MatrixXd all = Eigen::MatrixXd::Ones(200, 200);
  all.diagonal().setZero();
  const FitReport rep = fit_scfa(s.data, s.ds.locs, dense_weights(all), cfg);
  for (int l : rep.partition.labels) EXPECT_EQ(l, rep.partition.labels[0]);
}

TEST(FitScfa, PermutedInitialLabelsPermuteResult) {
  const Scenario1 s = scenario1(5);
  ScfaConfig cfg;
  const Partition init = init_partition(s.ds.locs, 4, InitMethod::kmeans_on_coords, 1);
  const int perm[4] = {2, 0, 3, 1};
  Partition permuted = init;
  for (int& l : permuted.labels) l = perm[l];
  const FitReport a = fit_scfa(s.data, s.w, cfg, init);
  const FitReport b = fit_scfa(s.data, s.w, cfg, permuted);
  ASSERT_EQ(a.iterations, b.iterations);
  for (std::size_t i = 0; i < a.partition.size(); ++i) EXPECT_EQ(perm[a.partition.labels[i]], b.partition.labels[i]);
  for (int g = 0; g < 4; ++g) {
    ASSERT_EQ(a.models[g].has_value(), b.models[perm[g]].has_value());
    if (a.models[g]) EXPECT_EQ(a.models[g]->uniquenesses, b.models[perm[g]]->uniquenesses);
  }
}

TEST(FitScfa, InvalidInitWhenAllGroupsTooSmall) {
  const Scenario1 s = scenario1(6);
  ScfaConfig cfg;
  cfg.num_groups = 40;
  Partition init{std::vector<int>(200), 40};
  for (int i = 0; i < 200; ++i) init.labels[i] = i % 40;  // 5 points each, below p + 1
  EXPECT_THROW(fit_scfa(s.data, s.w, cfg, init), InvalidInit);
}

TEST(FitScfa, BudgetOverrunCarriesPartialReport) {
  const Scenario1 s = scenario1(7);
  ScfaConfig cfg;
  cfg.max_outer_iters = 1;
  try {
    fit_scfa(s.data, s.ds.locs, s.w, cfg);
    FAIL();
  } catch (const ScfaDidNotConverge& e) {
    EXPECT_EQ(e.max_iters(), 1);
    EXPECT_EQ(e.report().iterations, 1);
    EXPECT_FALSE(e.report().converged);
    EXPECT_EQ(e.report().partition.size(), 200u);
  }
}

TEST(ScfaConfig, Validation) {
  ScfaConfig cfg;
  cfg.phi = -1.0;
  EXPECT_THROW(cfg.validate(10), PreconditionError);
  cfg.phi = 1.0;
  cfg.min_group_size = 2;
  EXPECT_THROW(cfg.validate(10), PreconditionError);
}
