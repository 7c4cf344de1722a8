#include <doctest.h>

#include "unscene/error.hpp"
#include "unscene/hac.hpp"
#include "unscene/validation.hpp"

using namespace unscene;

namespace {

LabelSet labels_of(const std::vector<std::string>& ids, const std::vector<std::string>& labels) {
  LabelSet s;
  for (std::size_t i = 0; i < ids.size(); ++i) s.labels[ids[i]] = labels[i];
  return s;
}

std::vector<std::string> ids_of(std::size_t n) {
  std::vector<std::string> ids;
  for (std::size_t i = 0; i < n; ++i) ids.push_back("s" + std::to_string(i));
  return ids;
}

}  // namespace

TEST_CASE("majority accuracy on a small example") {
  const auto ids = ids_of(10);
  const auto labels = labels_of(ids, {"a", "a", "a", "a", "b", "b", "b", "b", "a", "b"});
  const std::vector<std::size_t> assign{0, 0, 0, 0, 0, 1, 1, 1, 1, 1};
  const auto r = overall_accuracy(assign, ids, labels, 2.5);
  CHECK(r.overall_accuracy == doctest::Approx(0.8));
  CHECK(r.n_clusters == 2);
  CHECK(r.threshold == 2.5);
  REQUIRE(r.per_cluster.size() == 2);
  CHECK(r.per_cluster[0].majority_label == "a");
  CHECK(r.per_cluster[0].majority_count == 4);
  CHECK(r.per_cluster[1].majority_label == "b");
  CHECK(r.per_cluster[1].accuracy == doctest::Approx(0.8));
}

TEST_CASE("ties go to the lexicographically smallest label") {
  const auto ids = ids_of(2);
  const auto r = overall_accuracy({0, 0}, ids, labels_of(ids, {"zeta", "alpha"}));
  CHECK(r.per_cluster[0].majority_label == "alpha");
  CHECK(r.overall_accuracy == 0.5);
}

TEST_CASE("singletons are perfect and one cluster gives the modal frequency") {
  const auto ids = ids_of(6);
  const auto labels = labels_of(ids, {"a", "b", "c", "a", "a", "b"});
  CHECK(overall_accuracy({0, 1, 2, 3, 4, 5}, ids, labels).overall_accuracy == 1.0);
  CHECK(overall_accuracy({0, 0, 0, 0, 0, 0}, ids, labels).overall_accuracy == doctest::Approx(0.5));
}

TEST_CASE("a missing label is a coverage error naming the id") {
  const auto ids = ids_of(3);
  const auto labels = labels_of({"s0", "s2"}, {"a", "b"});
  try {
    overall_accuracy({0, 0, 1}, ids, labels);
    FAIL("expected coverage error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::coverage);
    CHECK(std::string(e.what()).find("s1") != std::string::npos);
  }
}

TEST_CASE("the accuracy curve over a dendrogram") {
  const auto pts = Matrix::from_rows({{0, 0}, {0.1, 0}, {5, 5}, {5.1, 5}, {10, 0}, {10, 0.2}});
  auto d = hac(pts, Linkage::average);
  d.row_ids = ids_of(6);
  const auto labels = labels_of(d.row_ids, {"x", "x", "y", "y", "z", "z"});
  const auto thresholds = even_thresholds(d, 10);
  REQUIRE(thresholds.size() == 10);
  CHECK(thresholds.front() > 0);
  CHECK(thresholds.back() == d.root_height());
  CHECK(std::is_sorted(thresholds.begin(), thresholds.end()));
  const auto curve = accuracy_curve(d, labels, thresholds);
  REQUIRE(curve.size() == 10);
  for (std::size_t k = 1; k < curve.size(); ++k) {
    CHECK(curve[k].n_clusters <= curve[k - 1].n_clusters);
    CHECK(curve[k].overall_accuracy <= curve[k - 1].overall_accuracy + 1e-12);
  }
  CHECK(curve.back().n_clusters == 1);
  CHECK(curve.back().overall_accuracy == doctest::Approx(1.0 / 3));
  const auto three = accuracy_curve(d, labels, {1.0});
  CHECK(three[0].overall_accuracy == 1.0);
  CHECK(three[0].n_clusters == 3);
}

TEST_CASE("reports and labels json round trips") {
  const auto ids = ids_of(4);
  LabelSet labels = labels_of(ids, {"a", "b", "a", "b"});
  labels.source = LabelSource::ground_truth_synthetic;
  const auto r = overall_accuracy({0, 1, 0, 1}, ids, labels, 1.5);
  CHECK(r.label_source == LabelSource::ground_truth_synthetic);
  const auto back = reports_from_json(reports_to_json({r}));
  REQUIRE(back.size() == 1);
  CHECK(back[0].overall_accuracy == r.overall_accuracy);
  CHECK(back[0].per_cluster.size() == 2);
  CHECK(back[0].label_source == LabelSource::ground_truth_synthetic);
  CHECK(labels_from_json(labels_to_json(labels.labels)) == labels.labels);
  CHECK_THROWS_AS(labels_from_json("[1, 2]"), Error);
  for (auto s : {LabelSource::rule_based_baseline, LabelSource::ground_truth_synthetic, LabelSource::manual})
    CHECK(parse_label_source(to_string(s)) == s);
}
