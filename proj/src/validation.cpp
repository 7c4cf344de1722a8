#include "unscene/validation.hpp"

#include <algorithm>

#include <json.hpp>

#include "unscene/error.hpp"

namespace unscene {

std::string_view to_string(LabelSource s) noexcept {
  switch (s) {
    case LabelSource::rule_based_baseline: return "rule_based_baseline";
    case LabelSource::ground_truth_synthetic: return "ground_truth_synthetic";
    case LabelSource::manual: return "manual";
  }
  return "manual";
}

std::optional<LabelSource> parse_label_source(std::string_view s) noexcept {
  for (auto v : {LabelSource::rule_based_baseline, LabelSource::ground_truth_synthetic, LabelSource::manual})
    if (to_string(v) == s) return v;
  return std::nullopt;
}

ValidationReport overall_accuracy(const std::vector<std::size_t>& assignments,
                                  const std::vector<std::string>& ids, const LabelSet& labels,
                                  double threshold) {
  if (assignments.size() != ids.size()) fail(ErrorKind::argument, "overall_accuracy: ids/assignments mismatch");
  std::map<std::size_t, std::map<std::string, std::size_t>> counts;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    auto it = labels.labels.find(ids[i]);
    if (it == labels.labels.end()) fail(ErrorKind::coverage, "no label for scenario " + ids[i]);
    ++counts[assignments[i]][it->second];
  }
  ValidationReport rep;
  rep.threshold = threshold;
  rep.label_source = labels.source;
  rep.n_clusters = counts.size();
  std::size_t total = 0;
  for (const auto& [cluster, by_label] : counts) {
    ClusterReport c;
    c.cluster_id = cluster;
    for (const auto& [label, count] : by_label) {
      c.size += count;
      // std::map iterates labels in order, so strict > keeps the smallest on ties.
      if (count > c.majority_count) {
        c.majority_count = count;
        c.majority_label = label;
      }
    }
    c.accuracy = static_cast<double>(c.majority_count) / static_cast<double>(c.size);
    total += c.majority_count;
    rep.per_cluster.push_back(std::move(c));
  }
  rep.overall_accuracy = ids.empty() ? 0.0 : static_cast<double>(total) / static_cast<double>(ids.size());
  return rep;
}

std::vector<ValidationReport> accuracy_curve(const Dendrogram& d, const LabelSet& labels,
                                             const std::vector<double>& thresholds) {
  if (!std::is_sorted(thresholds.begin(), thresholds.end()))
    fail(ErrorKind::argument, "accuracy_curve: thresholds must be ascending");
  if (d.row_ids.size() != d.n_samples) fail(ErrorKind::argument, "accuracy_curve: dendrogram lacks row ids");
  std::vector<ValidationReport> out;
  for (double t : thresholds) out.push_back(overall_accuracy(cut(d, t), d.row_ids, labels, t));
  return out;
}

std::vector<double> even_thresholds(const Dendrogram& d, std::size_t count) {
  std::vector<double> out;
  const double root = d.root_height();
  for (std::size_t k = 1; k <= count; ++k) out.push_back(root * static_cast<double>(k) / static_cast<double>(count));
  return out;
}

std::string reports_to_json(const std::vector<ValidationReport>& reports) {
  using json = nlohmann::ordered_json;
  json arr = json::array();
  for (const auto& r : reports) {
    json clusters = json::array();
    for (const auto& c : r.per_cluster)
      clusters.push_back({{"cluster_id", c.cluster_id},
                          {"size", c.size},
                          {"majority_label", c.majority_label},
                          {"majority_count", c.majority_count},
                          {"accuracy", c.accuracy}});
    arr.push_back({{"threshold", r.threshold},
                   {"n_clusters", r.n_clusters},
                   {"overall_accuracy", r.overall_accuracy},
                   {"label_source", to_string(r.label_source)},
                   {"per_cluster", clusters}});
  }
  return arr.dump(1) + "\n";
}

std::vector<ValidationReport> reports_from_json(const std::string& text) {
  try {
    std::vector<ValidationReport> out;
    for (const auto& j : nlohmann::json::parse(text)) {
      ValidationReport r;
      r.threshold = j.at("threshold").get<double>();
      r.n_clusters = j.at("n_clusters").get<std::size_t>();
      r.overall_accuracy = j.at("overall_accuracy").get<double>();
      r.label_source = parse_label_source(j.at("label_source").get<std::string>()).value_or(LabelSource::manual);
      for (const auto& c : j.at("per_cluster"))
        r.per_cluster.push_back({c.at("cluster_id").get<std::size_t>(), c.at("size").get<std::size_t>(),
                                 c.at("majority_label").get<std::string>(), c.at("majority_count").get<std::size_t>(),
                                 c.at("accuracy").get<double>()});
      out.push_back(std::move(r));
    }
    return out;
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::schema, std::string("metrics.json: ") + e.what());
  }
}

std::string labels_to_json(const std::map<std::string, std::string>& labels) {
  nlohmann::ordered_json j = nlohmann::ordered_json::object();
  for (const auto& [k, v] : labels) j[k] = v;
  return j.dump(2) + "\n";
}

std::map<std::string, std::string> labels_from_json(const std::string& text) {
  try {
    const auto j = nlohmann::json::parse(text);
    if (!j.is_object()) fail(ErrorKind::schema, "labels must be a JSON object");
    std::map<std::string, std::string> out;
    for (auto it = j.begin(); it != j.end(); ++it) out[it.key()] = it.value().get<std::string>();
    return out;
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::schema, std::string("labels: ") + e.what());
  }
}

}  // namespace unscene
