#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <vector>

#include "unscene/matrix.hpp"

namespace unscene {

struct PfaResult {
  std::vector<std::size_t> selected_features;  // ascending column indices
  std::size_t s = 0;
  std::size_t q = 0;
  std::map<std::size_t, std::vector<std::size_t>> feature_clusters;  // cluster -> member columns
  std::vector<double> cumulative_variance;
};

struct PfaOptions {
  double var_pfa = 0.95;
  std::size_t q_offset = 1;
  // Overrides q = s + q_offset when set.
  std::optional<std::size_t> cluster_count;
  std::uint64_t seed = 0;
};

// Principal feature analysis: k-means over |rows| of the retained eigenvector
// matrix, one representative column (closest to its centroid) per cluster.
PfaResult principal_feature_analysis(const Matrix& data, const PfaOptions& options);

inline PfaResult principal_feature_analysis(const Matrix& data, double var_pfa, std::size_t q_offset,
                                            std::uint64_t seed) {
  return principal_feature_analysis(data, PfaOptions{var_pfa, q_offset, std::nullopt, seed});
}

}  // namespace unscene
