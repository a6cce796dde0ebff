#include "scfa/cli/bench.hpp"
#include "scfa/cli/config.hpp"
#include "scfa/cli/fit.hpp"
#include "scfa/io.hpp"

#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <set>

using namespace scfa;
using namespace scfa::cli;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / "scfa_cli_tests" / name;
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::size_t data_lines(const fs::path& p) {
  std::ifstream in(p);
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line))
    if (!line.empty()) ++n;
  return n - 1;
}

const fs::path two_blobs = fs::path(SCFA_DATA_DIR) / "two_blobs.csv";

}  // namespace

TEST(Bench, SingleCellCounts) {
  BenchConfig cfg;
  cfg.scenarios = {Scenario::uniform};
  cfg.methods = {MethodSpec{}};
  cfg.replications = 1;
  cfg.output_dir = scratch("bench_single");
  const BenchResult r = run_benchmark(cfg);
  EXPECT_EQ(r.rows.size(), 1u);
  EXPECT_EQ(r.summary.size(), 1u);
  EXPECT_EQ(data_lines(cfg.output_dir / "bench_detail.csv"), 1u);
  EXPECT_EQ(data_lines(cfg.output_dir / "bench_summary.csv"), 1u);
  EXPECT_TRUE(fs::exists(cfg.output_dir / "bench.json"));
}

TEST(Bench, ByteIdenticalAcrossRunsAndThreads) {
  BenchConfig cfg;
  cfg.scenarios = {Scenario::uniform, Scenario::uneven};
  cfg.methods = {MethodSpec{}, MethodSpec::parse("scfa-kmeans-n")};
  cfg.replications = 2;
  cfg.output_dir = scratch("bench_a");
  run_benchmark(cfg);
  cfg.output_dir = scratch("bench_b");
  run_benchmark(cfg);
  cfg.output_dir = scratch("bench_c");
  cfg.threads = 8;
  const BenchResult r = run_benchmark(cfg);
  EXPECT_EQ(r.summary.size(), 4u);
  for (const char* f : {"bench_detail.csv", "bench_summary.csv", "bench.json"}) {
    const fs::path root = fs::temp_directory_path() / "scfa_cli_tests";
    const std::string a = io::read_file(root / "bench_a" / f);
    EXPECT_FALSE(a.empty());
    EXPECT_EQ(a, io::read_file(root / "bench_b" / f));
    EXPECT_EQ(a, io::read_file(cfg.output_dir / f));
  }
}

TEST(Bench, MethodLabelsRoundTrip) {
  for (const MethodSpec& m : default_methods()) EXPECT_EQ(MethodSpec::parse(m.label()).label(), m.label());
  EXPECT_THROW(MethodSpec::parse("pca"), PreconditionError);
}

TEST(Fit, TwoBlobsAutoSelectsTwo) {
  FitJob job;
  job.data_path = two_blobs;
  job.candidates = {1, 2, 3};
  job.factors = 1;
  job.output_dir = scratch("fit_blobs");
  const FitArtifacts art = run_fit(job);
  EXPECT_EQ(art.chosen_G, 2);
  const auto truth = io::read_csv((fs::path(SCFA_DATA_DIR) / "two_blobs_truth.csv").string());
  Partition t{std::vector<int>(truth.rows.size()), 2};
  for (std::size_t i = 0; i < truth.rows.size(); ++i) t.labels[i] = std::stoi(truth.rows[i][1]) - 1;
  EXPECT_GE(label_agreement(t, art.report.partition), 0.95);
  EXPECT_EQ(data_lines(job.output_dir / "ic_curve.csv"), 3u);
  EXPECT_EQ(data_lines(job.output_dir / "assignments.csv"), 40u);
  for (const char* f : {"fit_report.json", "loadings.csv", "loadings_varimax.csv", "structure_group_1.json",
                        "structure_group_2.json"})
    EXPECT_TRUE(fs::exists(job.output_dir / f)) << f;
  const auto report = nlohmann::json::parse(io::read_file(job.output_dir / "fit_report.json"));
  EXPECT_EQ(report["G"], 2);
  EXPECT_EQ(report["group_selection"]["chosen_G"], 2);
}

TEST(Fit, SingleGroupMatchesEfaAndThresholdOneHasNoEdges) {
  FitJob job;
  job.data_path = two_blobs;
  job.groups = 1;
  job.factors = 1;
  job.loading_threshold = 1.0;
  job.output_dir = scratch("fit_one");
  const FitArtifacts art = run_fit(job);
  EXPECT_NEAR(art.aic, art.efa_aic, 1e-8);
  EXPECT_NEAR(art.bic, art.efa_bic, 1e-8);
  for (int l : art.report.partition.labels) EXPECT_EQ(l, 0);
  ASSERT_EQ(art.structure_edges.size(), 1u);
  EXPECT_EQ(art.structure_edges[0], 0u);
  const auto g = nlohmann::json::parse(io::read_file(job.output_dir / "structure_group_1.json"));
  EXPECT_TRUE(g["links"].empty());
  EXPECT_EQ(g["nodes"].size(), 4u + 1u);
}

TEST(Fit, ParallelAnalysisWritesScree) {
  FitJob job;
  job.data_path = two_blobs;
  job.groups = 2;
  job.output_dir = scratch("fit_pa");
  const FitArtifacts art = run_fit(job);
  ASSERT_TRUE(art.parallel);
  EXPECT_GE(art.chosen_m, 1);
  EXPECT_EQ(data_lines(job.output_dir / "scree.csv"), 4u);
}

TEST(Fit, Validation) {
  FitJob job;
  job.data_path = two_blobs;
  job.loading_threshold = 1.5;
  EXPECT_THROW(run_fit(job), PreconditionError);
  job.loading_threshold = 0.4;
  job.weights_scheme = WeightScheme::topology;
  EXPECT_THROW(run_fit(job), PreconditionError);
}

TEST(Config, UnknownKeysRejected) {
  BenchConfig b;
  EXPECT_THROW(apply_bench_config(nlohmann::json{{"replicates", 3}}, b), PreconditionError);
  FitJob f;
  EXPECT_THROW(apply_fit_config(nlohmann::json{{"group", 3}}, f), PreconditionError);
}

TEST(Config, AppliesValues) {
  BenchConfig b;
  apply_bench_config(nlohmann::json::parse(R"({"scenarios":["radial"],"methods":["efa","scfa-random-e"],
      "replications":3,"loading_sd":0.25})"),
                     b);
  EXPECT_EQ(b.scenarios, std::vector<Scenario>{Scenario::radial});
  EXPECT_EQ(b.methods.size(), 2u);
  EXPECT_EQ(b.replications, 3);
  EXPECT_EQ(b.spec.loading_sd[3], 0.25);
  FitJob f;
  apply_fit_config(nlohmann::json::parse(R"({"groups":"auto","factors":2,"candidates":[1,4]})"), f);
  EXPECT_FALSE(f.groups);
  EXPECT_EQ(f.factors, 2);
  EXPECT_EQ(f.candidates, (std::vector<int>{1, 4}));
}

TEST(Executable, SimulateWritesScatter) {
  const fs::path out = scratch("simulate");
  const std::string cmd = std::string("\"") + SCFA_CLI + "\" simulate --scenario radial --seed 3 --output-dir \"" +
                          out.string() + "\" > /dev/null";
  ASSERT_EQ(std::system(cmd.c_str()), 0);
  EXPECT_EQ(data_lines(out / "scatter.csv"), 200u);
  EXPECT_EQ(data_lines(out / "dataset.csv"), 200u);
  std::set<std::string> groups;
  const auto t = io::read_csv((out / "scatter.csv").string());
  for (const auto& r : t.rows) groups.insert(r[2]);
  EXPECT_EQ(groups, (std::set<std::string>{"1", "2", "3", "4"}));
}

TEST(Executable, BadArgumentsFail) {
  const fs::path out = scratch("bad_args");
  const std::string cmd = std::string("\"") + SCFA_CLI + "\" fit --data /nonexistent.csv --output-dir \"" +
                          out.string() + "\" > /dev/null 2>&1";
  EXPECT_NE(std::system(cmd.c_str()), 0);
}
