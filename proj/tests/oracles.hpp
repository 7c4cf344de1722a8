#pragma once

// Independent reference implementations used only by the tests.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <limits>
#include <map>
#include <numeric>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "unscene/filter.hpp"
#include "unscene/grid.hpp"
#include "unscene/hac.hpp"
#include "unscene/matrix.hpp"
#include "unscene/trajectory.hpp"

namespace oracle {

using unscene::Matrix;
using unscene::Trajectory;

struct Pet {
  bool accepted = false;
  double min_distance = 0;
  double pet = 0;
  std::int64_t ego_frame = 0, challenger_frame = 0;
};

// Every frame pair of the overlap, scanned without pruning.
inline Pet brute_pet(const Trajectory& ego, const Trajectory& chal, double d_traj, double t_pet, double fps) {
  Pet out;
  if (ego.points.empty() || chal.points.empty()) return out;
  const auto first = std::max(ego.first_frame(), chal.first_frame());
  const auto last = std::min(ego.last_frame(), chal.last_frame());
  double best = std::numeric_limits<double>::infinity();
  std::int64_t bi = 0, bj = 0;
  for (auto i = first; i <= last; ++i)
    for (auto j = first; j <= last; ++j) {
      const auto& a = ego.at(i);
      const auto& b = chal.at(j);
      const double d = std::sqrt((a.x_center - b.x_center) * (a.x_center - b.x_center) +
                                 (a.y_center - b.y_center) * (a.y_center - b.y_center));
      const auto gap = std::abs(i - j), best_gap = std::abs(bi - bj);
      if (d < best || (d == best && (gap < best_gap || (gap == best_gap && i < bi)))) {
        best = d;
        bi = i;
        bj = j;
      }
    }
  if (!(best <= d_traj)) return out;
  out.min_distance = best;
  out.pet = static_cast<double>(std::abs(bi - bj)) / fps;
  out.ego_frame = bi;
  out.challenger_frame = bj;
  out.accepted = out.pet <= t_pet;
  return out;
}

// Cluster distances recomputed from the member points at every step.
inline double cluster_distance(const Matrix& p, const std::vector<std::size_t>& a, const std::vector<std::size_t>& b,
                               unscene::Linkage linkage) {
  auto dist = [&](std::size_t i, std::size_t j) {
    double s = 0;
    for (std::size_t k = 0; k < p.cols(); ++k) s += (p(i, k) - p(j, k)) * (p(i, k) - p(j, k));
    return std::sqrt(s);
  };
  switch (linkage) {
    case unscene::Linkage::single: {
      double m = std::numeric_limits<double>::infinity();
      for (auto i : a)
        for (auto j : b) m = std::min(m, dist(i, j));
      return m;
    }
    case unscene::Linkage::complete: {
      double m = 0;
      for (auto i : a)
        for (auto j : b) m = std::max(m, dist(i, j));
      return m;
    }
    case unscene::Linkage::average: {
      double s = 0;
      for (auto i : a)
        for (auto j : b) s += dist(i, j);
      return s / static_cast<double>(a.size() * b.size());
    }
    case unscene::Linkage::ward: {
      // sqrt(2 * SSE increase) = sqrt(2 |A||B| / (|A|+|B|)) * |c_A - c_B|
      double sq = 0;
      for (std::size_t k = 0; k < p.cols(); ++k) {
        double ca = 0, cb = 0;
        for (auto i : a) ca += p(i, k);
        for (auto j : b) cb += p(j, k);
        ca /= static_cast<double>(a.size());
        cb /= static_cast<double>(b.size());
        sq += (ca - cb) * (ca - cb);
      }
      const double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
      return std::sqrt(2.0 * na * nb / (na + nb) * sq);
    }
  }
  return 0;
}

inline std::vector<unscene::Merge> naive_hac(const Matrix& p, unscene::Linkage linkage) {
  const std::size_t n = p.rows();
  std::map<std::size_t, std::vector<std::size_t>> clusters;  // node id -> leaves
  for (std::size_t i = 0; i < n; ++i) clusters[i] = {i};
  std::vector<unscene::Merge> merges;
  for (std::size_t step = 0; step + 1 < n; ++step) {
    double best = std::numeric_limits<double>::infinity();
    std::size_t ba = 0, bb = 0;
    for (auto ia = clusters.begin(); ia != clusters.end(); ++ia)
      for (auto ib = std::next(ia); ib != clusters.end(); ++ib) {
        const double d = cluster_distance(p, ia->second, ib->second, linkage);
        if (d < best) {
          best = d;
          ba = ia->first;
          bb = ib->first;
        }
      }
    auto members = clusters[ba];
    members.insert(members.end(), clusters[bb].begin(), clusters[bb].end());
    clusters.erase(ba);
    clusters.erase(bb);
    merges.push_back({ba, bb, best, members.size()});
    clusters[n + step] = std::move(members);
  }
  return merges;
}

// Components by repeated relabeling over the surviving merges, ids by smallest leaf.
inline std::vector<std::size_t> naive_cut(const unscene::Dendrogram& d, double threshold) {
  const std::size_t n = d.n_samples;
  std::vector<std::vector<std::size_t>> leaves(2 * n);
  for (std::size_t i = 0; i < n; ++i) leaves[i] = {i};
  std::vector<std::size_t> label(n);
  std::iota(label.begin(), label.end(), 0);
  for (std::size_t k = 0; k < d.merges.size(); ++k) {
    const auto& m = d.merges[k];
    auto& mine = leaves[n + k];
    mine = leaves[m.left];
    mine.insert(mine.end(), leaves[m.right].begin(), leaves[m.right].end());
    if (m.distance <= threshold) {
      std::size_t lo = n;
      for (auto l : mine) lo = std::min(lo, label[l]);
      for (auto l : mine) label[l] = lo;
    }
  }
  std::map<std::size_t, std::size_t> rename;
  std::vector<std::size_t> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    auto [it, fresh] = rename.emplace(label[i], rename.size());
    out[i] = it->second;
  }
  return out;
}

// Two partitions are equal up to relabeling.
inline bool same_partition(const std::vector<std::size_t>& a, const std::vector<std::size_t>& b) {
  if (a.size() != b.size()) return false;
  std::map<std::size_t, std::size_t> ab, ba;
  for (std::size_t i = 0; i < a.size(); ++i) {
    auto [i1, f1] = ab.emplace(a[i], b[i]);
    auto [i2, f2] = ba.emplace(b[i], a[i]);
    if (i1->second != b[i] || i2->second != a[i]) return false;
  }
  return true;
}

// Smoothed yaw rate by explicit formulas on a manually unwrapped copy.
inline std::vector<double> yaw_rate(const std::vector<double>& h, double fps) {
  const std::size_t n = h.size();
  std::vector<double> u(h);
  for (std::size_t k = 1; k < n; ++k) {
    double d = u[k] - u[k - 1];
    while (d > M_PI) {
      u[k] -= 2 * M_PI;
      d -= 2 * M_PI;
    }
    while (d <= -M_PI) {
      u[k] += 2 * M_PI;
      d += 2 * M_PI;
    }
  }
  std::vector<double> raw(n);
  raw[0] = (u[1] - u[0]) * fps;
  raw[n - 1] = (u[n - 1] - u[n - 2]) * fps;
  for (std::size_t k = 1; k + 1 < n; ++k) raw[k] = (u[k + 1] - u[k - 1]) * fps / 2;
  std::vector<double> out(n);
  for (std::size_t k = 0; k < n; ++k) {
    double s = 0;
    int c = 0;
    for (long j = static_cast<long>(k) - 2; j <= static_cast<long>(k) + 2; ++j)
      if (j >= 0 && j < static_cast<long>(n)) {
        s += raw[static_cast<std::size_t>(j)];
        ++c;
      }
    out[k] = s / c;
  }
  return out;
}

// Trace cells by binning every ego/challenger sample independently.
inline std::map<std::pair<long, long>, double> trace_cells(const unscene::ConcreteScenario& s,
                                                           const unscene::KeyFrame& kf, const unscene::GridParams& p) {
  std::map<std::pair<long, long>, double> out;
  const double c = std::cos(kf.ego_pose.heading), sn = std::sin(kf.ego_pose.heading);
  auto bin = [&](const Trajectory& t, double value) {
    for (const auto& pt : t.points) {
      const double dx = pt.x_center - kf.ego_pose.x, dy = pt.y_center - kf.ego_pose.y;
      const double lon = std::round((c * dx + sn * dy) * 1e6) / 1e6;
      const double lat = std::round((-sn * dx + c * dy) * 1e6) / 1e6;
      const long r = static_cast<long>(std::floor((lon + p.a_gr / 2) * p.r_lon));
      const long col = static_cast<long>(std::floor((lat + p.a_gr / 2) * p.r_lat));
      if (r < 0 || col < 0 || r >= static_cast<long>(p.rows()) || col >= static_cast<long>(p.cols())) continue;
      auto& v = out[{r, col}];
      v = std::max(v, value);
    }
  };
  bin(s.challenger, unscene::kOccupancyChallenger);
  bin(s.ego, unscene::kOccupancyEgo);
  return out;
}

// Optimal k-means partition of a tiny point set by exhaustive assignment.
inline double best_partition_inertia(const Matrix& p, std::size_t k) {
  const std::size_t n = p.rows();
  std::vector<std::size_t> a(n, 0);
  double best = std::numeric_limits<double>::infinity();
  while (true) {
    std::set<std::size_t> used(a.begin(), a.end());
    if (used.size() == k) {
      double total = 0;
      for (std::size_t c = 0; c < k; ++c) {
        std::vector<double> centroid(p.cols(), 0.0);
        std::size_t m = 0;
        for (std::size_t i = 0; i < n; ++i)
          if (a[i] == c) {
            ++m;
            for (std::size_t j = 0; j < p.cols(); ++j) centroid[j] += p(i, j);
          }
        for (auto& v : centroid) v /= static_cast<double>(m);
        for (std::size_t i = 0; i < n; ++i)
          if (a[i] == c)
            for (std::size_t j = 0; j < p.cols(); ++j) total += (p(i, j) - centroid[j]) * (p(i, j) - centroid[j]);
      }
      best = std::min(best, total);
    }
    std::size_t i = 0;
    while (i < n && ++a[i] == k) a[i++] = 0;
    if (i == n) break;
  }
  return best;
}

}  // namespace oracle

namespace testutil {

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() / ("unscene_" + tag + "_" + std::to_string(rd()));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  const std::filesystem::path& path() const { return path_; }
  std::string str() const { return path_.string(); }

 private:
  std::filesystem::path path_;
};

// Trajectory sampled at integer frames from a position function of time.
template <typename F>
unscene::Trajectory make_track(unscene::TrackId id, unscene::RoadUserClass cls, std::int64_t first, std::int64_t count,
                               double fps, F&& position) {
  unscene::Trajectory t;
  t.track_id = id;
  t.ru_class = cls;
  t.width = cls == unscene::RoadUserClass::pedestrian ? 0.0 : 1.9;
  t.length = cls == unscene::RoadUserClass::pedestrian ? 0.0 : 4.6;
  for (std::int64_t k = 0; k < count; ++k) {
    const double time = static_cast<double>(first + k) / fps;
    const auto [x, y] = position(time);
    unscene::TrackPoint p;
    p.frame = first + k;
    p.x_center = x;
    p.y_center = y;
    t.points.push_back(p);
  }
  for (std::size_t k = 0; k < t.points.size(); ++k) {
    const auto& a = t.points[k == 0 ? 0 : k - 1];
    const auto& b = t.points[k + 1 == t.points.size() ? k : k + 1];
    const double dx = b.x_center - a.x_center, dy = b.y_center - a.y_center;
    t.points[k].heading = (dx == 0 && dy == 0) ? 0.0 : std::atan2(dy, dx);
    const double span = (k == 0 || k + 1 == t.points.size()) ? 1.0 : 2.0;
    t.points[k].x_velocity = dx * fps / span;
    t.points[k].y_velocity = dy * fps / span;
  }
  return t;
}

}  // namespace testutil
