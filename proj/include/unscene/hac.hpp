#pragma once

#include <optional>
#include <string>
#include <vector>

#include "unscene/matrix.hpp"

namespace unscene {

enum class Linkage { ward, single, complete, average };

std::string_view to_string(Linkage l) noexcept;
std::optional<Linkage> parse_linkage(std::string_view s) noexcept;

struct Merge {
  std::size_t left = 0;   // node ids: 0..n-1 leaves, n+k the k-th merge
  std::size_t right = 0;  // left < right
  double distance = 0;
  std::size_t size = 0;

  friend bool operator==(const Merge&, const Merge&) = default;
};

struct Dendrogram {
  std::size_t n_samples = 0;
  std::vector<Merge> merges;
  std::vector<std::string> row_ids;

  double root_height() const { return merges.empty() ? 0.0 : merges.back().distance; }
};

// Agglomerative clustering on Euclidean distances with Lance-Williams updates.
// Ward heights follow the sqrt(2 * increase in SSE) convention, which equals
// the plain Euclidean distance for two singletons.
Dendrogram hac(const Matrix& points, Linkage linkage);

// Connected components after discarding merges with distance > threshold.
// Cluster ids are assigned in ascending order of each cluster's smallest leaf.
std::vector<std::size_t> cut(const Dendrogram& d, double threshold);

std::size_t cluster_count(const std::vector<std::size_t>& assignments);

std::string dendrogram_to_json(const Dendrogram& d);
Dendrogram dendrogram_from_json(const std::string& text);

}  // namespace unscene
