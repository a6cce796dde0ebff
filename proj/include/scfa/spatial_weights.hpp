#pragma once

#include "scfa/error.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <numbers>
#include <numeric>
#include <optional>
#include <queue>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

namespace scfa {

/// Locations s_i. `coords` is n x 2; `node_ids` maps rows to graph vertices
/// for topology weights.
struct LocationTable {
  std::vector<std::string> ids;
  Eigen::MatrixX2d coords;
  std::optional<std::vector<long long>> node_ids;

  std::size_t size() const { return static_cast<std::size_t>(coords.rows()); }
};

enum class WeightScheme { knn, exponential, topology };

inline const char* to_string(WeightScheme s) {
  switch (s) {
    case WeightScheme::knn: return "knn";
    case WeightScheme::exponential: return "exponential";
    case WeightScheme::topology: return "topology";
  }
  return "?";
}

/// Symmetric pairwise weights in [0, 1] with zero diagonal.
struct WeightMatrix {
  Eigen::MatrixXd weights;
  WeightScheme scheme = WeightScheme::knn;

  std::size_t size() const { return static_cast<std::size_t>(weights.rows()); }
};

struct Edge {
  long long u = 0;
  long long v = 0;
  double length = 0.0;
};

/// Undirected graph on arbitrary integer vertex ids.
struct StationGraph {
  std::vector<Edge> edges;

  void validate() const {
    for (const Edge& e : edges)
      if (!(e.length >= 0.0) || !std::isfinite(e.length))
        throw PreconditionError("StationGraph: edge lengths must be finite and nonnegative");
  }
};

inline Eigen::MatrixXd pairwise_distances(const LocationTable& locs) {
  const Eigen::Index n = locs.coords.rows();
  Eigen::MatrixXd d(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    d(i, i) = 0.0;
    for (Eigen::Index l = i + 1; l < n; ++l) {
      const double v = (locs.coords.row(i) - locs.coords.row(l)).norm();
      d(i, l) = v;
      d(l, i) = v;
    }
  }
  return d;
}

// Indices of the k nearest other rows of `dist` row i; ties go to the smaller index.
inline std::vector<Eigen::Index> nearest_indices(const Eigen::MatrixXd& dist, Eigen::Index i,
                                                 std::size_t k) {
  std::vector<Eigen::Index> order;
  order.reserve(static_cast<std::size_t>(dist.cols()));
  for (Eigen::Index l = 0; l < dist.cols(); ++l)
    if (l != i) order.push_back(l);
  const auto closer = [&](Eigen::Index a, Eigen::Index b) {
    return dist(i, a) < dist(i, b) || (dist(i, a) == dist(i, b) && a < b);
  };
  std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k), order.end(),
                    closer);
  order.resize(k);
  return order;
}

// w_il = 1 if either point is among the other's k nearest under `dist`.
inline Eigen::MatrixXd knn_from_distances(const Eigen::MatrixXd& dist, std::size_t k) {
  const Eigen::Index n = dist.rows();
  if (static_cast<std::size_t>(n) <= k) throw TooFewPoints(static_cast<std::size_t>(n), k);
  Eigen::MatrixXd w = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index l : nearest_indices(dist, i, k)) {
      if (!std::isfinite(dist(i, l))) continue;
      w(i, l) = 1.0;
      w(l, i) = 1.0;
    }
  }
  return w;
}

inline WeightMatrix knn_weights(const LocationTable& locs, std::size_t k) {
  if (locs.size() <= k) throw TooFewPoints(locs.size(), k);
  return {knn_from_distances(pairwise_distances(locs), k), WeightScheme::knn};
}

inline WeightMatrix exponential_weights(const LocationTable& locs, double bandwidth) {
  if (!(bandwidth > 0.0)) throw PreconditionError("exponential_weights: bandwidth must be positive");
  const Eigen::Index n = locs.coords.rows();
  Eigen::MatrixXd w(n, n);
  const double inv_h2 = 1.0 / (bandwidth * bandwidth);
  for (Eigen::Index i = 0; i < n; ++i) {
    w(i, i) = 0.0;
    for (Eigen::Index l = i + 1; l < n; ++l) {
      const double d2 = (locs.coords.row(i) - locs.coords.row(l)).squaredNorm();
      const double v = std::exp(-d2 * inv_h2);
      w(i, l) = v;
      w(l, i) = v;
    }
  }
  return {std::move(w), WeightScheme::exponential};
}

/// All-pairs shortest-path lengths between the graph vertices `nodes`
/// (Dijkstra from each source). Unreachable pairs are +inf.
inline Eigen::MatrixXd shortest_path_distances(const StationGraph& graph,
                                               const std::vector<long long>& nodes) {
  graph.validate();
  std::unordered_map<long long, std::size_t> index;
  for (const Edge& e : graph.edges) {
    index.try_emplace(e.u, index.size());
    index.try_emplace(e.v, index.size());
  }
  std::vector<std::vector<std::pair<std::size_t, double>>> adj(index.size());
  for (const Edge& e : graph.edges) {
    const std::size_t a = index.at(e.u), b = index.at(e.v);
    adj[a].emplace_back(b, e.length);
    adj[b].emplace_back(a, e.length);
  }
  std::vector<std::size_t> targets;
  targets.reserve(nodes.size());
  for (long long id : nodes) {
    auto it = index.find(id);
    if (it == index.end()) throw UnknownNode(id);
    targets.push_back(it->second);
  }

  constexpr double inf = std::numeric_limits<double>::infinity();
  const Eigen::Index n = static_cast<Eigen::Index>(nodes.size());
  Eigen::MatrixXd out(n, n);
  std::vector<double> dist(index.size());
  using Item = std::pair<double, std::size_t>;
  for (Eigen::Index s = 0; s < n; ++s) {
    std::fill(dist.begin(), dist.end(), inf);
    std::priority_queue<Item, std::vector<Item>, std::greater<>> heap;
    dist[targets[static_cast<std::size_t>(s)]] = 0.0;
    heap.emplace(0.0, targets[static_cast<std::size_t>(s)]);
    while (!heap.empty()) {
      const auto [du, u] = heap.top();
      heap.pop();
      if (du > dist[u]) continue;
      for (const auto& [v, len] : adj[u]) {
        const double alt = du + len;
        if (alt < dist[v]) {
          dist[v] = alt;
          heap.emplace(alt, v);
        }
      }
    }
    for (Eigen::Index t = 0; t < n; ++t) out(s, t) = dist[targets[static_cast<std::size_t>(t)]];
  }
  return out;
}

/// How graph distance becomes a weight. `gaussian` uses exp(-(d / bandwidth)^2),
/// with bandwidth <= 0 meaning the median finite pairwise distance; `knn`
/// connects each node to its k nearest by graph distance (OR-symmetrized).
struct DistanceTransform {
  enum class Kind { gaussian, knn } kind = Kind::gaussian;
  double bandwidth = 0.0;
  std::size_t k = 5;
};

struct TopologyReport {
  bool disconnected = false;
  std::size_t unreachable_pairs = 0;
  double bandwidth = 0.0;
};

inline WeightMatrix topology_weights(const StationGraph& graph, const LocationTable& locs,
                                     const DistanceTransform& transform = {},
                                     TopologyReport* report = nullptr) {
  if (!locs.node_ids) throw PreconditionError("topology_weights: locations carry no node ids");
  const Eigen::MatrixXd d = shortest_path_distances(graph, *locs.node_ids);
  const Eigen::Index n = d.rows();
  TopologyReport rep;
  std::vector<double> finite;
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index l = i + 1; l < n; ++l) {
      if (std::isfinite(d(i, l)))
        finite.push_back(d(i, l));
      else
        ++rep.unreachable_pairs;
    }
  rep.disconnected = rep.unreachable_pairs > 0;

  WeightMatrix out{Eigen::MatrixXd::Zero(n, n), WeightScheme::topology};
  if (transform.kind == DistanceTransform::Kind::knn) {
    out.weights = knn_from_distances(d, transform.k);
  } else {
    double h = transform.bandwidth;
    if (!(h > 0.0) && !finite.empty()) {
      const auto mid = finite.begin() + static_cast<std::ptrdiff_t>(finite.size() / 2);
      std::nth_element(finite.begin(), mid, finite.end());
      h = *mid;
      if (finite.size() % 2 == 0) {
        const double lower = *std::max_element(finite.begin(), mid);
        h = 0.5 * (h + lower);
      }
    }
    if (!(h > 0.0)) h = 1.0;
    rep.bandwidth = h;
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index l = i + 1; l < n; ++l) {
        if (!std::isfinite(d(i, l))) continue;
        const double r = d(i, l) / h;
        out.weights(i, l) = out.weights(l, i) = std::exp(-r * r);
      }
  }
  if (report) *report = rep;
  return out;
}

/// Equirectangular projection of (longitude, latitude) degrees to planar
/// kilometres around the mean latitude.
inline LocationTable equirectangular(const LocationTable& lonlat) {
  constexpr double earth_radius_km = 6371.0088;
  constexpr double deg = std::numbers::pi / 180.0;
  LocationTable out = lonlat;
  const double lat0 = lonlat.coords.col(1).mean() * deg;
  out.coords.col(0) = lonlat.coords.col(0) * (deg * std::cos(lat0) * earth_radius_km);
  out.coords.col(1) = lonlat.coords.col(1) * (deg * earth_radius_km);
  return out;
}

}  // namespace scfa
