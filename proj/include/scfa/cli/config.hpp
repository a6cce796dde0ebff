#pragma once

#include "scfa/cli/bench.hpp"
#include "scfa/cli/fit.hpp"
#include "scfa/error.hpp"

#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <set>
#include <string>

namespace scfa::cli {

// JSON config files. Keys mirror the command-line flags; unknown keys are
// rejected so a typo cannot silently fall back to a default.

inline nlohmann::json load_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FormatError(path.string(), 0, "cannot open config file");
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw FormatError(path.string(), 0, e.what());
  }
}

namespace detail {

inline void check_keys(const nlohmann::json& j, const std::set<std::string>& allowed, const char* what) {
  if (!j.is_object()) throw PreconditionError(std::string(what) + " config must be a JSON object");
  for (const auto& [k, v] : j.items())
    if (!allowed.count(k)) throw PreconditionError(std::string(what) + " config: unknown key '" + k + "'");
}

inline WeightScheme parse_weights(const std::string& s) {
  if (s == "knn") return WeightScheme::knn;
  if (s == "exponential") return WeightScheme::exponential;
  if (s == "topology") return WeightScheme::topology;
  throw PreconditionError("unknown weight scheme '" + s + "'");
}

inline InitMethod parse_init(const std::string& s) {
  if (s == "kmeans") return InitMethod::kmeans_on_coords;
  if (s == "random") return InitMethod::random;
  throw PreconditionError("unknown init method '" + s + "'");
}

}  // namespace detail

inline void apply_bench_config(const nlohmann::json& j, BenchConfig& cfg) {
  detail::check_keys(j,
                     {"scenarios", "methods", "replications", "base_seed", "output_dir", "threads", "n", "p", "m",
                      "loading_sd", "noise_sd", "phi", "knn_k", "bandwidth"},
                     "bench");
  if (j.contains("scenarios")) {
    cfg.scenarios.clear();
    for (const auto& s : j["scenarios"]) cfg.scenarios.push_back(parse_scenario(s.get<std::string>()));
  }
  if (j.contains("methods")) {
    cfg.methods.clear();
    for (const auto& s : j["methods"]) cfg.methods.push_back(MethodSpec::parse(s.get<std::string>()));
  }
  if (j.contains("replications")) cfg.replications = j["replications"].get<int>();
  if (j.contains("base_seed")) cfg.base_seed = j["base_seed"].get<std::uint64_t>();
  if (j.contains("output_dir")) cfg.output_dir = j["output_dir"].get<std::string>();
  if (j.contains("threads")) cfg.threads = j["threads"].get<int>();
  if (j.contains("n")) cfg.spec.n = j["n"].get<int>();
  if (j.contains("p")) cfg.spec.p = j["p"].get<int>();
  if (j.contains("m")) {
    cfg.spec.m = j["m"].get<int>();
    if (cfg.spec.m != 3) throw PreconditionError("bench config: the scenario mean table has m = 3");
  }
  if (j.contains("loading_sd")) {
    const auto& v = j["loading_sd"];
    if (v.is_array())
      cfg.spec.loading_sd = v.get<std::vector<double>>();
    else
      cfg.spec.loading_sd.assign(static_cast<std::size_t>(cfg.spec.G), v.get<double>());
  }
  if (j.contains("noise_sd")) cfg.spec.noise_sd = j["noise_sd"].get<double>();
  if (j.contains("phi")) cfg.phi = j["phi"].get<double>();
  if (j.contains("knn_k")) cfg.knn_k = j["knn_k"].get<std::size_t>();
  if (j.contains("bandwidth")) cfg.bandwidth = j["bandwidth"].get<double>();
}

inline void apply_fit_config(const nlohmann::json& j, FitJob& job) {
  detail::check_keys(j,
                     {"data", "graph", "weights", "knn_k", "bandwidth", "topology_transform", "topology_bandwidth",
                      "topology_k", "groups", "candidates", "factors", "pa_sims", "percentile", "phi", "init", "seed",
                      "loading_threshold", "output_dir", "threads"},
                     "fit");
  if (j.contains("data")) job.data_path = j["data"].get<std::string>();
  if (j.contains("graph")) job.graph_path = j["graph"].get<std::string>();
  if (j.contains("weights")) job.weights_scheme = detail::parse_weights(j["weights"].get<std::string>());
  if (j.contains("knn_k")) job.knn_k = j["knn_k"].get<std::size_t>();
  if (j.contains("bandwidth")) job.bandwidth = j["bandwidth"].get<double>();
  if (j.contains("topology_transform")) {
    const auto s = j["topology_transform"].get<std::string>();
    if (s == "gaussian")
      job.topology.kind = DistanceTransform::Kind::gaussian;
    else if (s == "knn")
      job.topology.kind = DistanceTransform::Kind::knn;
    else
      throw PreconditionError("unknown topology transform '" + s + "'");
  }
  if (j.contains("topology_bandwidth")) job.topology.bandwidth = j["topology_bandwidth"].get<double>();
  if (j.contains("topology_k")) job.topology.k = j["topology_k"].get<std::size_t>();
  if (j.contains("groups")) {
    const auto& v = j["groups"];
    if (v.is_string() && v.get<std::string>() == "auto")
      job.groups.reset();
    else
      job.groups = v.get<int>();
  }
  if (j.contains("candidates")) job.candidates = j["candidates"].get<std::vector<int>>();
  if (j.contains("factors")) {
    const auto& v = j["factors"];
    if (v.is_string() && v.get<std::string>() == "auto")
      job.factors.reset();
    else
      job.factors = v.get<int>();
  }
  if (j.contains("pa_sims")) job.pa_sims = j["pa_sims"].get<int>();
  if (j.contains("percentile")) job.pa_percentile = j["percentile"].get<double>();
  if (j.contains("phi")) job.phi = j["phi"].get<double>();
  if (j.contains("init")) job.init = detail::parse_init(j["init"].get<std::string>());
  if (j.contains("seed")) job.seed = j["seed"].get<std::uint64_t>();
  if (j.contains("loading_threshold")) job.loading_threshold = j["loading_threshold"].get<double>();
  if (j.contains("output_dir")) job.output_dir = j["output_dir"].get<std::string>();
  if (j.contains("threads")) job.threads = j["threads"].get<int>();
}

}  // namespace scfa::cli
