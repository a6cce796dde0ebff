#pragma once

#include "scfa/factor_model.hpp"
#include "scfa/io.hpp"
#include "scfa/metrics.hpp"
#include "scfa/model_selection.hpp"
#include "scfa/parallel.hpp"
#include "scfa/rng.hpp"
#include "scfa/scfa.hpp"
#include "scfa/simulation.hpp"
#include "scfa/spatial_weights.hpp"

#include <json.hpp>

#include <cmath>
#include <filesystem>
#include <limits>
#include <string>
#include <string_view>
#include <vector>

namespace scfa::cli {

/// One column of the comparison: plain EFA, or SCFA with an initial grouping
/// and a weight scheme.
struct MethodSpec {
  bool efa = true;
  InitMethod init = InitMethod::kmeans_on_coords;
  WeightScheme weights = WeightScheme::knn;

  std::string label() const {
    if (efa) return "efa";
    return std::string("scfa-") + to_string(init) + (weights == WeightScheme::knn ? "-n" : "-e");
  }

  static MethodSpec parse(std::string_view s) {
    if (s == "efa") return {};
    for (InitMethod init : {InitMethod::kmeans_on_coords, InitMethod::random})
      for (WeightScheme w : {WeightScheme::knn, WeightScheme::exponential}) {
        MethodSpec m{false, init, w};
        if (m.label() == s) return m;
      }
    throw PreconditionError("unknown method '" + std::string(s) + "'");
  }
};

inline std::vector<MethodSpec> default_methods() {
  return {MethodSpec{}, {false, InitMethod::kmeans_on_coords, WeightScheme::knn},
          {false, InitMethod::kmeans_on_coords, WeightScheme::exponential},
          {false, InitMethod::random, WeightScheme::knn},
          {false, InitMethod::random, WeightScheme::exponential}};
}

struct BenchConfig {
  std::vector<Scenario> scenarios{all_scenarios.begin(), all_scenarios.end()};
  std::vector<MethodSpec> methods = default_methods();
  int replications = 10;
  std::uint64_t base_seed = 1;
  std::filesystem::path output_dir = "bench_out";
  int threads = 1;
  ScenarioSpec spec;  // n, p, m, tau, sigma overrides; scenario and seed are set per cell
  double phi = 1.0;
  std::size_t knn_k = 5;
  double bandwidth = 0.1;

  void validate() const {
    if (replications < 1) throw PreconditionError("bench: replications must be >= 1");
    if (methods.empty()) throw PreconditionError("bench: method list is empty");
    if (scenarios.empty()) throw PreconditionError("bench: scenario list is empty");
  }
};

struct BenchRow {
  std::string scenario;
  std::string method;
  int replication = 0;
  EvaluationResult result;
  std::string error;
  bool ok() const { return error.empty(); }
};

struct BenchSummaryRow {
  std::string scenario;
  std::string method;
  double frobenius = 0.0;
  double wasserstein = 0.0;
  double chebyshev = 0.0;
  double aic = 0.0;
  int successes = 0;
};

struct BenchResult {
  std::vector<BenchRow> rows;  // scenario-major, then replication, then method
  std::vector<BenchSummaryRow> summary;
};

inline EvaluationResult evaluate_method(const MethodSpec& method, const SyntheticDataset& ds,
                                        const DataMatrix& data, const WeightMatrix& knn,
                                        const WeightMatrix& expo, const BenchConfig& cfg,
                                        std::uint64_t seed) {
  const int p = static_cast<int>(data.cols());
  const int m = cfg.spec.m;
  const auto n = static_cast<std::size_t>(data.rows());
  const MatrixSequence truth = expand_per_sample(ds.true_loadings, ds.true_partition, n);
  MatrixSequence est;
  EvaluationResult r;
  if (method.efa) {
    const FactorModel model = fit_ml_efa(data, m);
    est = expand_per_sample(model, n);
    std::vector<std::size_t> all(n);
    for (std::size_t i = 0; i < n; ++i) all[i] = i;
    r.aic = information_criterion(group_log_likelihood(data, model, all), 1, 2.0, p, m);
  } else {
    ScfaConfig sc;
    sc.phi = cfg.phi;
    sc.num_factors = m;
    sc.num_groups = cfg.spec.G;
    sc.init = method.init;
    sc.seed = seed;
    const FitReport rep =
        fit_scfa(data, ds.locs, method.weights == WeightScheme::knn ? knn : expo, sc);
    est = expand_per_sample(rep.models, rep.partition, n);
    r.aic = information_criterion(rep, 2.0, p, m);
  }
  r.frobenius = frobenius_distance(truth, est);
  r.wasserstein = gaussian_w2_distance(truth, est);
  r.chebyshev = chebyshev_distance(truth, est);
  r.method_label = method.label();
  return r;
}

/// Every (scenario, replication) cell on the worker pool; per-method fits use
/// seeds derived from (base_seed, scenario, method, replication). Failures
/// become NaN rows carrying the error text.
inline BenchResult run_benchmark_table(const BenchConfig& cfg) {
  cfg.validate();
  const std::size_t S = cfg.scenarios.size();
  const std::size_t R = static_cast<std::size_t>(cfg.replications);
  const std::size_t M = cfg.methods.size();
  constexpr double nan = std::numeric_limits<double>::quiet_NaN();

  BenchResult res;
  res.rows.resize(S * R * M);
  parallel_for(S * R, cfg.threads, [&](std::size_t cell) {
    const std::size_t s = cell / R;
    const std::size_t rep = cell % R;
    ScenarioSpec spec = cfg.spec;
    spec.scenario = cfg.scenarios[s];
    spec.seed = cfg.base_seed + rep;
    std::string setup_error;
    SyntheticDataset ds;
    DataMatrix data;
    WeightMatrix knn, expo;
    try {
      ds = generate_dataset(spec);
      data = standardize(ds.data);
      knn = knn_weights(ds.locs, cfg.knn_k);
      expo = exponential_weights(ds.locs, cfg.bandwidth);
    } catch (const std::exception& e) {
      setup_error = e.what();
    }
    for (std::size_t mi = 0; mi < M; ++mi) {
      BenchRow& row = res.rows[(s * R + rep) * M + mi];
      row.scenario = to_string(spec.scenario);
      row.method = cfg.methods[mi].label();
      row.replication = static_cast<int>(rep);
      row.result = {nan, nan, nan, nan, row.method, row.scenario, row.replication};
      if (!setup_error.empty()) {
        row.error = setup_error;
        continue;
      }
      try {
        const std::uint64_t seed = derive_seed({cfg.base_seed, s, mi, rep});
        row.result = evaluate_method(cfg.methods[mi], ds, data, knn, expo, cfg, seed);
        row.result.scenario_label = row.scenario;
        row.result.replication = row.replication;
      } catch (const std::exception& e) {
        row.error = e.what();
      }
    }
  });

  for (std::size_t s = 0; s < S; ++s) {
    for (std::size_t mi = 0; mi < M; ++mi) {
      BenchSummaryRow sum;
      sum.scenario = to_string(cfg.scenarios[s]);
      sum.method = cfg.methods[mi].label();
      for (std::size_t rep = 0; rep < R; ++rep) {
        const BenchRow& row = res.rows[(s * R + rep) * M + mi];
        if (!row.ok()) continue;
        sum.frobenius += row.result.frobenius;
        sum.wasserstein += row.result.wasserstein;
        sum.chebyshev += row.result.chebyshev;
        sum.aic += row.result.aic;
        ++sum.successes;
      }
      const double k = sum.successes > 0 ? sum.successes : nan;
      sum.frobenius /= k;
      sum.wasserstein /= k;
      sum.chebyshev /= k;
      sum.aic /= k;
      res.summary.push_back(sum);
    }
  }
  return res;
}

inline nlohmann::ordered_json json_number(double v) {
  return std::isfinite(v) ? nlohmann::ordered_json(v) : nlohmann::ordered_json(nullptr);
}

inline void write_benchmark(const BenchConfig& cfg, const BenchResult& res) {
  namespace fs = std::filesystem;
  using io::format_double;
  {
    auto out = io::open_output(cfg.output_dir / "bench_detail.csv");
    out << "scenario,method,replication,frobenius,wasserstein,chebyshev,aic,error\n";
    for (const BenchRow& r : res.rows) {
      std::string err = r.error;
      for (char& c : err)
        if (c == ',' || c == '\n' || c == '"') c = ' ';
      out << r.scenario << ',' << r.method << ',' << r.replication << ',' << format_double(r.result.frobenius)
          << ',' << format_double(r.result.wasserstein) << ',' << format_double(r.result.chebyshev) << ','
          << format_double(r.result.aic) << ',' << err << '\n';
    }
  }
  {
    auto out = io::open_output(cfg.output_dir / "bench_summary.csv");
    out << "scenario,method,frobenius,wasserstein,chebyshev,aic,successes\n";
    for (const BenchSummaryRow& r : res.summary)
      out << r.scenario << ',' << r.method << ',' << format_double(r.frobenius) << ','
          << format_double(r.wasserstein) << ',' << format_double(r.chebyshev) << ',' << format_double(r.aic)
          << ',' << r.successes << '\n';
  }
  nlohmann::ordered_json j;
  auto& c = j["config"];
  c["scenarios"] = nlohmann::ordered_json::array();
  for (Scenario s : cfg.scenarios) c["scenarios"].push_back(to_string(s));
  c["methods"] = nlohmann::ordered_json::array();
  for (const auto& m : cfg.methods) c["methods"].push_back(m.label());
  c["replications"] = cfg.replications;
  c["base_seed"] = cfg.base_seed;
  c["n"] = cfg.spec.n;
  c["p"] = cfg.spec.p;
  c["m"] = cfg.spec.m;
  c["G"] = cfg.spec.G;
  c["loading_sd"] = cfg.spec.loading_sd;
  c["noise_sd"] = cfg.spec.noise_sd;
  c["phi"] = cfg.phi;
  c["knn_k"] = cfg.knn_k;
  c["bandwidth"] = cfg.bandwidth;
  j["summary"] = nlohmann::ordered_json::array();
  for (const BenchSummaryRow& r : res.summary) {
    nlohmann::ordered_json e;
    e["scenario"] = r.scenario;
    e["method"] = r.method;
    e["frobenius"] = json_number(r.frobenius);
    e["wasserstein"] = json_number(r.wasserstein);
    e["chebyshev"] = json_number(r.chebyshev);
    e["aic"] = json_number(r.aic);
    e["successes"] = r.successes;
    j["summary"].push_back(std::move(e));
  }
  auto out = io::open_output(cfg.output_dir / "bench.json");
  out << j.dump(2) << '\n';
}

inline BenchResult run_benchmark(const BenchConfig& cfg) {
  BenchResult res = run_benchmark_table(cfg);
  write_benchmark(cfg, res);
  return res;
}

}  // namespace scfa::cli
