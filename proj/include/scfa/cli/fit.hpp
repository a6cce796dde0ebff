#pragma once

#include "scfa/cli/bench.hpp"
#include "scfa/cli/plot_data.hpp"
#include "scfa/factor_model.hpp"
#include "scfa/io.hpp"
#include "scfa/model_selection.hpp"
#include "scfa/scfa.hpp"
#include "scfa/spatial_weights.hpp"

#include <json.hpp>

#include <cmath>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace scfa::cli {

struct FitJob {
  std::filesystem::path data_path;
  std::optional<std::filesystem::path> graph_path;
  WeightScheme weights_scheme = WeightScheme::knn;
  std::size_t knn_k = 5;
  double bandwidth = 0.1;
  DistanceTransform topology;
  std::optional<int> groups;  // empty = select by BIC over `candidates`
  std::vector<int> candidates = {1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
  std::optional<int> factors;  // empty = parallel analysis
  int pa_sims = 100;
  double pa_percentile = 95.0;
  double phi = 1.0;
  InitMethod init = InitMethod::kmeans_on_coords;
  std::uint64_t seed = 1;
  double loading_threshold = 0.4;
  std::filesystem::path output_dir = "fit_out";
  int threads = 1;

  void validate() const {
    if (!(loading_threshold >= 0.0 && loading_threshold <= 1.0))
      throw PreconditionError("fit: loading threshold must lie in [0, 1]");
    if (weights_scheme == WeightScheme::topology && !graph_path)
      throw PreconditionError("fit: topology weights need a graph edge list");
    if (!groups && candidates.empty()) throw PreconditionError("fit: no candidate G values");
  }
};

struct FitArtifacts {
  FitReport report;
  int chosen_G = 0;
  int chosen_m = 0;
  double aic = 0.0;
  double bic = 0.0;
  double efa_aic = 0.0;
  double efa_bic = 0.0;
  std::optional<ParallelAnalysisResult> parallel;
  std::optional<ICResult> selection;
  std::vector<std::size_t> structure_edges;  // per group
};

/// Node-link graph of variable -> factor edges whose varimax-rotated,
/// correlation-scale loading exceeds the threshold in magnitude.
inline nlohmann::ordered_json structure_graph(const FactorModel& model, int group,
                                              const std::vector<std::string>& names, double threshold,
                                              std::size_t* edge_count = nullptr) {
  const Eigen::MatrixXd rotated = varimax(standardized_loadings(model));
  nlohmann::ordered_json j;
  j["directed"] = true;
  j["multigraph"] = false;
  j["graph"] = {{"group", group}, {"threshold", threshold}, {"rotation", "varimax"}};
  j["nodes"] = nlohmann::ordered_json::array();
  for (const auto& n : names) j["nodes"].push_back({{"id", n}, {"kind", "variable"}});
  for (Eigen::Index k = 0; k < rotated.cols(); ++k)
    j["nodes"].push_back({{"id", "F" + std::to_string(k + 1)}, {"kind", "factor"}});
  j["links"] = nlohmann::ordered_json::array();
  std::size_t count = 0;
  for (Eigen::Index v = 0; v < rotated.rows(); ++v)
    for (Eigen::Index k = 0; k < rotated.cols(); ++k)
      if (std::abs(rotated(v, k)) > threshold) {
        j["links"].push_back({{"source", names[static_cast<std::size_t>(v)]},
                              {"target", "F" + std::to_string(k + 1)},
                              {"loading", rotated(v, k)}});
        ++count;
      }
  if (edge_count) *edge_count = count;
  return j;
}

namespace detail {

inline void write_loadings_csv(const GroupModels& models, const std::vector<std::string>& names, bool rotate,
                               const std::filesystem::path& path) {
  auto out = io::open_output(path);
  std::size_t m = 0;
  for (const auto& mod : models)
    if (mod) m = static_cast<std::size_t>(mod->num_factors());
  out << "group,variable";
  for (std::size_t k = 0; k < m; ++k) out << ",F" << k + 1;
  out << ",uniqueness\n";
  for (std::size_t g = 0; g < models.size(); ++g) {
    if (!models[g]) continue;
    const Eigen::MatrixXd a = rotate ? varimax(standardized_loadings(*models[g])) : models[g]->loadings;
    for (Eigen::Index v = 0; v < a.rows(); ++v) {
      out << g + 1 << ',' << names[static_cast<std::size_t>(v)];
      for (Eigen::Index k = 0; k < a.cols(); ++k) out << ',' << io::format_double(a(v, k));
      out << ',' << io::format_double(models[g]->uniquenesses[v]) << '\n';
    }
  }
}

inline nlohmann::ordered_json trace_json(const std::vector<double>& v) {
  auto a = nlohmann::ordered_json::array();
  for (double x : v) a.push_back(json_number(x));
  return a;
}

}  // namespace detail

inline void write_fit_outputs(const FitJob& job, const FitArtifacts& art, const io::SpatialDataset& input) {
  const auto& dir = job.output_dir;
  emit_group_map_csv(input.locs, art.report.partition, dir / "assignments.csv");
  detail::write_loadings_csv(art.report.models, input.variable_names, false, dir / "loadings.csv");
  detail::write_loadings_csv(art.report.models, input.variable_names, true, dir / "loadings_varimax.csv");
  for (std::size_t g = 0; g < art.report.models.size(); ++g) {
    if (!art.report.models[g]) continue;
    auto out = io::open_output(dir / ("structure_group_" + std::to_string(g + 1) + ".json"));
    out << structure_graph(*art.report.models[g], static_cast<int>(g + 1), input.variable_names,
                           job.loading_threshold)
               .dump(2)
        << '\n';
  }
  if (art.parallel) emit_scree_csv(*art.parallel, dir / "scree.csv");
  if (art.selection) emit_ic_curve_csv(*art.selection, dir / "ic_curve.csv");

  nlohmann::ordered_json j;
  j["n"] = input.values.rows();
  j["p"] = input.values.cols();
  j["G"] = art.chosen_G;
  j["m"] = art.chosen_m;
  j["phi"] = job.phi;
  j["weights"] = to_string(job.weights_scheme);
  j["init"] = to_string(job.init);
  j["seed"] = job.seed;
  j["iterations"] = art.report.iterations;
  j["converged"] = art.report.converged;
  j["objective_trace"] = detail::trace_json(art.report.objective_trace);
  j["d_trace"] = detail::trace_json(art.report.d_trace);
  j["log_likelihood"] = json_number(art.report.log_likelihood());
  j["aic"] = json_number(art.aic);
  j["bic"] = json_number(art.bic);
  j["efa"] = {{"aic", json_number(art.efa_aic)}, {"bic", json_number(art.efa_bic)}};
  auto sizes = art.report.partition.sizes();
  j["group_sizes"] = sizes;
  if (art.parallel) {
    j["parallel_analysis"] = {
        {"observed", std::vector<double>(art.parallel->observed_eigenvalues.begin(),
                                         art.parallel->observed_eigenvalues.end())},
        {"reference", std::vector<double>(art.parallel->reference_eigenvalues.begin(),
                                          art.parallel->reference_eigenvalues.end())},
        {"num_sims", art.parallel->num_sims},
        {"percentile", art.parallel->percentile},
        {"suggested_m", art.parallel->chosen_m}};
  }
  if (art.selection) {
    nlohmann::ordered_json s;
    s["c_n"] = art.selection->c_n;
    s["candidates"] = art.selection->candidate_G;
    s["ic"] = detail::trace_json(art.selection->ic_values);
    s["failed"] = art.selection->failed;
    s["errors"] = art.selection->errors;
    s["chosen_G"] = art.selection->chosen_G;
    j["group_selection"] = std::move(s);
  }
  auto out = io::open_output(dir / "fit_report.json");
  out << j.dump(2) << '\n';
}

/// Real-data workflow: ingest, standardize, build weights, resolve m and G,
/// fit, and write every artifact. A fit that does not converge still writes
/// its partial report before the error propagates.
inline FitArtifacts run_fit(const FitJob& job) {
  job.validate();
  const io::SpatialDataset input = io::read_spatial_csv(job.data_path.string());
  if (input.variable_names.empty()) throw PreconditionError("fit: data file has no variable columns");
  const DataMatrix data = standardize(input.values);
  const int n = static_cast<int>(data.rows());
  const int p = static_cast<int>(data.cols());

  WeightMatrix w;
  switch (job.weights_scheme) {
    case WeightScheme::knn: w = knn_weights(input.locs, job.knn_k); break;
    case WeightScheme::exponential: w = exponential_weights(input.locs, job.bandwidth); break;
    case WeightScheme::topology:
      w = topology_weights(io::read_edge_list(job.graph_path->string()), input.locs, job.topology);
      break;
  }

  FitArtifacts art;
  if (job.factors) {
    art.chosen_m = *job.factors;
  } else {
    art.parallel = parallel_analysis(data, job.pa_sims, job.pa_percentile, job.seed);
    art.chosen_m = std::clamp(art.parallel->chosen_m, 1, std::max(1, lederman_bound(p)));
  }

  ScfaConfig cfg;
  cfg.phi = job.phi;
  cfg.num_factors = art.chosen_m;
  cfg.init = job.init;
  cfg.seed = job.seed;

  {
    std::vector<std::size_t> all(static_cast<std::size_t>(n));
    for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
    const FactorModel efa = fit_ml_efa(data, art.chosen_m);
    const double ll = group_log_likelihood(data, efa, all);
    art.efa_aic = information_criterion(ll, 1, 2.0, p, art.chosen_m);
    art.efa_bic = information_criterion(ll, 1, std::log(static_cast<double>(n)), p, art.chosen_m);
  }

  bool partial = false;
  std::string partial_error;
  if (job.groups) {
    cfg.num_groups = *job.groups;
    try {
      art.report = fit_scfa(data, input.locs, w, cfg);
    } catch (const ScfaDidNotConverge& e) {
      art.report = e.report();
      partial = true;
      partial_error = e.what();
    }
    art.chosen_G = cfg.num_groups;
  } else {
    art.selection = select_G(data, input.locs, w, cfg, job.candidates, std::log(static_cast<double>(n)),
                             job.threads);
    art.chosen_G = art.selection->chosen_G;
    if (!art.selection->chosen_report) {
      write_fit_outputs(job, art, input);
      throw Error("fit: every candidate G failed");
    }
    art.report = *art.selection->chosen_report;
  }
  art.aic = information_criterion(art.report, 2.0, p, art.chosen_m);
  art.bic = information_criterion(art.report, std::log(static_cast<double>(n)), p, art.chosen_m);
  for (const auto& m : art.report.models) {
    std::size_t edges = 0;
    if (m) structure_graph(*m, 0, input.variable_names, job.loading_threshold, &edges);
    art.structure_edges.push_back(edges);
  }
  write_fit_outputs(job, art, input);
  if (partial) throw Error("fit: " + partial_error + " (partial report written)");
  return art;
}

}  // namespace scfa::cli
