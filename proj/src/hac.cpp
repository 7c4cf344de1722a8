#include "unscene/hac.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include <json.hpp>

#include "unscene/error.hpp"

namespace unscene {

std::string_view to_string(Linkage l) noexcept {
  switch (l) {
    case Linkage::ward: return "ward";
    case Linkage::single: return "single";
    case Linkage::complete: return "complete";
    case Linkage::average: return "average";
  }
  return "ward";
}

std::optional<Linkage> parse_linkage(std::string_view s) noexcept {
  for (auto l : {Linkage::ward, Linkage::single, Linkage::complete, Linkage::average})
    if (to_string(l) == s) return l;
  return std::nullopt;
}

Dendrogram hac(const Matrix& points, Linkage linkage) {
  const std::size_t n = points.rows();
  if (n < 2) fail(ErrorKind::argument, "hac: need at least 2 samples");

  // Working distances between active slots; ward works on squared distances.
  const bool squared = linkage == Linkage::ward;
  Matrix d(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) {
      double s = 0.0;
      for (std::size_t k = 0; k < points.cols(); ++k) {
        const double x = points(i, k) - points(j, k);
        s += x * x;
      }
      d(i, j) = d(j, i) = squared ? s : std::sqrt(s);
    }

  std::vector<std::size_t> node(n), size(n, 1);
  std::iota(node.begin(), node.end(), 0);
  std::vector<bool> active(n, true);

  Dendrogram out;
  out.n_samples = n;
  for (std::size_t step = 0; step + 1 < n; ++step) {
    // Ties resolve to the lexicographically smallest (left, right) node-id pair.
    std::size_t bi = n, bj = n;
    double best = std::numeric_limits<double>::infinity();
    std::pair<std::size_t, std::size_t> best_nodes{n * 2, n * 2};
    for (std::size_t i = 0; i < n; ++i) {
      if (!active[i]) continue;
      for (std::size_t j = i + 1; j < n; ++j) {
        if (!active[j]) continue;
        const std::pair<std::size_t, std::size_t> nodes = std::minmax(node[i], node[j]);
        if (d(i, j) < best || (d(i, j) == best && nodes < best_nodes)) {
          best = d(i, j);
          best_nodes = nodes;
          bi = i;
          bj = j;
        }
      }
    }
    const double ni = static_cast<double>(size[bi]), nj = static_cast<double>(size[bj]);
    for (std::size_t k = 0; k < n; ++k) {
      if (!active[k] || k == bi || k == bj) continue;
      const double nk = static_cast<double>(size[k]);
      const double dki = d(k, bi), dkj = d(k, bj);
      double v = 0.0;
      switch (linkage) {
        case Linkage::single: v = std::min(dki, dkj); break;
        case Linkage::complete: v = std::max(dki, dkj); break;
        case Linkage::average: v = (ni * dki + nj * dkj) / (ni + nj); break;
        case Linkage::ward: v = ((ni + nk) * dki + (nj + nk) * dkj - nk * best) / (ni + nj + nk); break;
      }
      d(k, bi) = d(bi, k) = v;
    }
    const double height = squared ? std::sqrt(std::max(0.0, best)) : best;
    out.merges.push_back({best_nodes.first, best_nodes.second, height, size[bi] + size[bj]});
    // Slot bi now holds the merged cluster.
    active[bj] = false;
    size[bi] += size[bj];
    node[bi] = n + step;
  }
  return out;
}

namespace {

std::size_t find(std::vector<std::size_t>& parent, std::size_t x) {
  while (parent[x] != x) {
    parent[x] = parent[parent[x]];
    x = parent[x];
  }
  return x;
}

}  // namespace

std::vector<std::size_t> cut(const Dendrogram& d, double threshold) {
  const std::size_t n = d.n_samples;
  if (!(threshold >= 0)) fail(ErrorKind::argument, "cut: threshold must be >= 0");
  // Union-find over leaves; node n+k is represented by any leaf below it.
  std::vector<std::size_t> parent(n), representative(n + d.merges.size());
  std::iota(parent.begin(), parent.end(), 0);
  std::iota(representative.begin(), representative.begin() + static_cast<std::ptrdiff_t>(n), 0);
  for (std::size_t k = 0; k < d.merges.size(); ++k) {
    const auto& m = d.merges[k];
    if (m.left >= n + k || m.right >= n + k) fail(ErrorKind::schema, "dendrogram: merge references a future node");
    const std::size_t a = representative[m.left], b = representative[m.right];
    representative[n + k] = a;
    if (m.distance <= threshold) parent[find(parent, a)] = find(parent, b);
  }
  std::vector<std::size_t> label(n, n), out(n);
  std::size_t next = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const auto root = find(parent, i);
    if (label[root] == n) label[root] = next++;
    out[i] = label[root];
  }
  return out;
}

std::size_t cluster_count(const std::vector<std::size_t>& a) {
  return a.empty() ? 0 : *std::max_element(a.begin(), a.end()) + 1;
}

std::string dendrogram_to_json(const Dendrogram& d) {
  using json = nlohmann::ordered_json;
  json merges = json::array();
  for (const auto& m : d.merges) merges.push_back(json::array({m.left, m.right, m.distance, m.size}));
  json doc = {{"schema_version", 1}, {"n_samples", d.n_samples}, {"merges", merges}, {"row_ids", d.row_ids}};
  return doc.dump(1) + "\n";
}

Dendrogram dendrogram_from_json(const std::string& text) {
  try {
    const auto doc = nlohmann::json::parse(text);
    Dendrogram d;
    d.n_samples = doc.at("n_samples").get<std::size_t>();
    for (const auto& m : doc.at("merges"))
      d.merges.push_back(
          {m.at(0).get<std::size_t>(), m.at(1).get<std::size_t>(), m.at(2).get<double>(), m.at(3).get<std::size_t>()});
    if (doc.contains("row_ids")) d.row_ids = doc.at("row_ids").get<std::vector<std::string>>();
    if (d.n_samples > 0 && d.merges.size() != d.n_samples - 1)
      fail(ErrorKind::schema, "dendrogram.json: expected n_samples - 1 merges");
    return d;
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::schema, std::string("dendrogram.json: ") + e.what());
  }
}

}  // namespace unscene
