#include <doctest.h>

#include <random>
#include <set>

#include "unscene/error.hpp"
#include "unscene/pfa.hpp"

using namespace unscene;

namespace {

// Columns grouped into blocks; each block is noisy copies of one latent signal.
Matrix block_matrix(const std::vector<std::size_t>& blocks, std::size_t n, double noise, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0, 1);
  std::size_t cols = 0;
  for (auto b : blocks) cols += b;
  Matrix m(n, cols);
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t c = 0;
    for (auto b : blocks) {
      const double latent = g(rng);
      for (std::size_t k = 0; k < b; ++k) m(i, c++) = latent + noise * g(rng);
    }
  }
  return m;
}

std::size_t block_of(std::size_t col, const std::vector<std::size_t>& blocks) {
  std::size_t start = 0;
  for (std::size_t b = 0; b < blocks.size(); ++b) {
    if (col < start + blocks[b]) return b;
    start += blocks[b];
  }
  return blocks.size();
}

}  // namespace

TEST_CASE("a duplicated column is selected once") {
  std::mt19937_64 rng(1);
  std::normal_distribution<double> g(0, 1);
  Matrix m(60, 3);
  for (std::size_t i = 0; i < 60; ++i) {
    m(i, 0) = g(rng);
    m(i, 1) = m(i, 0);
    m(i, 2) = g(rng);
  }
  PfaOptions opt;
  opt.cluster_count = 2;
  const auto r = principal_feature_analysis(m, opt);
  REQUIRE(r.selected_features.size() == 2);
  CHECK(r.selected_features.back() == 2);
}

TEST_CASE("independent columns are all kept") {
  std::mt19937_64 rng(2);
  std::normal_distribution<double> g(0, 1);
  Matrix m(400, 4);
  for (std::size_t i = 0; i < 400; ++i)
    for (std::size_t j = 0; j < 4; ++j) m(i, j) = g(rng);
  PfaOptions opt;
  opt.cluster_count = 4;
  const auto r = principal_feature_analysis(m, opt);
  CHECK(r.s == 4);
  CHECK(r.selected_features == std::vector<std::size_t>{0, 1, 2, 3});
}

TEST_CASE("one feature per correlated block") {
  const std::vector<std::size_t> blocks{4, 3, 2};
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto m = block_matrix(blocks, 200, 0.05, seed);
    PfaOptions opt;
    opt.cluster_count = 3;
    opt.seed = seed;
    const auto r = principal_feature_analysis(m, opt);
    REQUIRE(r.selected_features.size() == 3);
    std::set<std::size_t> hit;
    for (auto f : r.selected_features) hit.insert(block_of(f, blocks));
    CHECK(hit.size() == 3);
    CHECK(r.s == 3);
  }
}

TEST_CASE("selection is invariant to column scaling") {
  auto m = block_matrix({3, 3, 2}, 150, 0.2, 9);
  const auto before = principal_feature_analysis(m, 0.9, 1, 5);
  const std::vector<double> scale{2, 1 / 3.0, 10, 1, 5, 0.5, 7, 3};
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t j = 0; j < m.cols(); ++j) m(i, j) *= scale[j];
  const auto after = principal_feature_analysis(m, 0.9, 1, 5);
  CHECK(after.s == before.s);
  CHECK(after.selected_features == before.selected_features);
}

TEST_CASE("s grows with the variance ratio") {
  const auto m = block_matrix({3, 3, 2, 2}, 150, 0.3, 4);
  std::size_t prev = 0;
  for (double v : {0.5, 0.7, 0.9, 0.95}) {
    const auto r = principal_feature_analysis(m, v, 1, 1);
    CHECK(r.s >= prev);
    CHECK(r.q == r.s + 1);
    prev = r.s;
  }
}

TEST_CASE("feature clusters partition the columns") {
  const auto m = block_matrix({2, 2, 2}, 80, 0.1, 6);
  const auto r = principal_feature_analysis(m, 0.95, 1, 2);
  std::size_t total = 0;
  for (const auto& [c, members] : r.feature_clusters) total += members.size();
  CHECK(total == 6);
  CHECK(r.selected_features.size() == r.feature_clusters.size());
}

TEST_CASE("invalid pfa input") {
  CHECK_THROWS_AS(principal_feature_analysis(Matrix(0, 3), 0.95, 1, 0), Error);
  CHECK_THROWS_AS(principal_feature_analysis(block_matrix({2}, 10, 0.1, 1), 1.5, 1, 0), Error);
  CHECK_THROWS_AS(principal_feature_analysis(block_matrix({2, 2}, 10, 0.1, 1), 0.9, 0, 0), Error);
}
