#pragma once

#include "scfa/io.hpp"
#include "scfa/model_selection.hpp"
#include "scfa/scfa.hpp"
#include "scfa/spatial_weights.hpp"

#include <filesystem>

namespace scfa::cli {

// Tidy CSVs behind the scatter, group-map, scree and IC-curve figures.

/// x,y,group (1-based groups).
inline void emit_scatter_csv(const LocationTable& locs, const Partition& part,
                             const std::filesystem::path& path) {
  auto out = io::open_output(path);
  out << "x,y,group\n";
  for (std::size_t i = 0; i < locs.size(); ++i) {
    const auto r = static_cast<Eigen::Index>(i);
    out << io::format_double(locs.coords(r, 0)) << ',' << io::format_double(locs.coords(r, 1)) << ','
        << part.labels[i] + 1 << '\n';
  }
}

/// id,x,y,group (1-based groups).
inline void emit_group_map_csv(const LocationTable& locs, const Partition& part,
                               const std::filesystem::path& path) {
  auto out = io::open_output(path);
  out << "id,x,y,group\n";
  for (std::size_t i = 0; i < locs.size(); ++i) {
    const auto r = static_cast<Eigen::Index>(i);
    out << locs.ids[i] << ',' << io::format_double(locs.coords(r, 0)) << ','
        << io::format_double(locs.coords(r, 1)) << ',' << part.labels[i] + 1 << '\n';
  }
}

/// factor_index,observed,reference; one row per variable.
inline void emit_scree_csv(const ParallelAnalysisResult& pa, const std::filesystem::path& path) {
  auto out = io::open_output(path);
  out << "factor_index,observed,reference\n";
  for (Eigen::Index k = 0; k < pa.observed_eigenvalues.size(); ++k)
    out << k + 1 << ',' << io::format_double(pa.observed_eigenvalues[k]) << ','
        << io::format_double(pa.reference_eigenvalues[k]) << '\n';
}

/// G,ic,failed; one row per candidate.
inline void emit_ic_curve_csv(const ICResult& ic, const std::filesystem::path& path) {
  auto out = io::open_output(path);
  out << "G,ic,failed\n";
  for (std::size_t i = 0; i < ic.candidate_G.size(); ++i)
    out << ic.candidate_G[i] << ',' << io::format_double(ic.ic_values[i]) << ',' << (ic.failed[i] ? 1 : 0)
        << '\n';
}

}  // namespace scfa::cli
