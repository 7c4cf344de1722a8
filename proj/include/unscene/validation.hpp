#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "unscene/hac.hpp"

namespace unscene {

enum class LabelSource { rule_based_baseline, ground_truth_synthetic, manual };

std::string_view to_string(LabelSource s) noexcept;
std::optional<LabelSource> parse_label_source(std::string_view s) noexcept;

struct LabelSet {
  std::map<std::string, std::string> labels;  // scenario id -> label
  LabelSource source = LabelSource::manual;
};

struct ClusterReport {
  std::size_t cluster_id = 0;
  std::size_t size = 0;
  std::string majority_label;
  std::size_t majority_count = 0;
  double accuracy = 0;
};

struct ValidationReport {
  double threshold = 0;
  std::size_t n_clusters = 0;
  double overall_accuracy = 0;
  LabelSource label_source = LabelSource::manual;
  std::vector<ClusterReport> per_cluster;
};

// Majority label per cluster (ties: lexicographically smallest); overall is
// the summed majority counts over the sample count. Throws Error{coverage}
// naming the first id without a label.
ValidationReport overall_accuracy(const std::vector<std::size_t>& assignments,
                                  const std::vector<std::string>& ids, const LabelSet& labels,
                                  double threshold = 0.0);

// One report per threshold (ascending) from cuts of the dendrogram.
std::vector<ValidationReport> accuracy_curve(const Dendrogram& d, const LabelSet& labels,
                                             const std::vector<double>& thresholds);

// `count` thresholds spaced evenly over (0, root height].
std::vector<double> even_thresholds(const Dendrogram& d, std::size_t count);

std::string reports_to_json(const std::vector<ValidationReport>& reports);
std::vector<ValidationReport> reports_from_json(const std::string& text);

std::string labels_to_json(const std::map<std::string, std::string>& labels);
std::map<std::string, std::string> labels_from_json(const std::string& text);

}  // namespace unscene
