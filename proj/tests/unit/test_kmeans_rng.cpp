#include "helpers.hpp"
#include "scfa/kmeans.hpp"
#include "scfa/parallel.hpp"
#include "scfa/rng.hpp"

#include <gtest/gtest.h>

#include <atomic>
#include <set>
#include <stdexcept>

using namespace scfa;
using namespace scfa::testing;

TEST(Rng, ReproducibleStream) {
  Rng a(42), b(42), c(43);
  bool differs = false;
  for (int i = 0; i < 100; ++i) {
    const double x = a.normal();
    EXPECT_EQ(x, b.normal());
    differs = differs || x != c.normal();
  }
  EXPECT_TRUE(differs);
}

TEST(Rng, UniformRangeAndMoments) {
  Rng rng(7);
  double sum = 0.0, sq = 0.0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    const double u = rng.uniform();
    ASSERT_GE(u, 0.0);
    ASSERT_LT(u, 1.0);
    const double z = rng.normal();
    sum += z;
    sq += z * z;
  }
  EXPECT_NEAR(sum / n, 0.0, 0.01);
  EXPECT_NEAR(sq / n, 1.0, 0.01);
}

TEST(Rng, BelowIsInRangeAndCoversAll) {
  Rng rng(8);
  std::set<std::uint64_t> seen;
  for (int i = 0; i < 1000; ++i) {
    const auto v = rng.below(7);
    ASSERT_LT(v, 7u);
    seen.insert(v);
  }
  EXPECT_EQ(seen.size(), 7u);
}

TEST(Rng, DerivedSeedsDiffer) {
  EXPECT_NE(derive_seed({1, 0, 0, 0}), derive_seed({1, 0, 0, 1}));
  EXPECT_NE(derive_seed({1, 2}), derive_seed({2, 1}));
  EXPECT_EQ(derive_seed({5, 6, 7}), derive_seed({5, 6, 7}));
}

TEST(KMeans, SeparatedBlobsExact) {
  Rng rng(9);
  Eigen::MatrixXd pts(60, 2);
  for (int i = 0; i < 60; ++i) {
    const double cx = i < 30 ? -5.0 : 5.0;
    pts(i, 0) = rng.normal(cx, 0.3);
    pts(i, 1) = rng.normal(0.0, 0.3);
  }
  const KMeansResult r = kmeans(pts, 2, 1);
  for (int i = 1; i < 30; ++i) EXPECT_EQ(r.labels[i], r.labels[0]);
  for (int i = 31; i < 60; ++i) EXPECT_EQ(r.labels[i], r.labels[30]);
  EXPECT_NE(r.labels[0], r.labels[30]);
}

TEST(KMeans, DeterministicAndLocallyOptimal) {
  Rng rng(10);
  const Eigen::MatrixXd pts = random_matrix(rng, 80, 2);
  const KMeansResult a = kmeans(pts, 4, 3);
  const KMeansResult b = kmeans(pts, 4, 3);
  EXPECT_EQ(a.labels, b.labels);
  EXPECT_EQ(a.inertia, b.inertia);
  // Every point sits with its nearest center.
  for (Eigen::Index i = 0; i < 80; ++i) {
    Eigen::Index best = 0;
    (a.centers.rowwise() - pts.row(i)).rowwise().squaredNorm().minCoeff(&best);
    EXPECT_EQ(a.labels[static_cast<std::size_t>(i)], static_cast<int>(best));
  }
  std::set<int> used(a.labels.begin(), a.labels.end());
  EXPECT_EQ(used.size(), 4u);
}

TEST(ParallelFor, IndexedSlotsAndExceptions) {
  std::vector<int> out(100, -1);
  parallel_for(100, 8, [&](std::size_t i) { out[i] = static_cast<int>(i * i); });
  for (int i = 0; i < 100; ++i) EXPECT_EQ(out[static_cast<std::size_t>(i)], i * i);
  EXPECT_THROW(parallel_for(10, 4,
                            [&](std::size_t i) {
                              if (i == 3) throw std::runtime_error("boom");
                            }),
               std::runtime_error);
}
