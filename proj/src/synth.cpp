#include "unscene/synth.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include <json.hpp>

#include "unscene/error.hpp"

namespace unscene::synth {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kLane = 1.75;       // lane center offset from the road axis
constexpr double kTurnRadius = 6.0;
constexpr double kInstanceGapS = 3.0;
constexpr double kEntryJitterS = 2.0;
constexpr double kSpeedScaleSpread = 0.2;

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Counter-based uniform draw in [0, 1) keyed by (seed, template, instance, counter).
double uniform(std::uint64_t seed, std::uint64_t tmpl, std::uint64_t instance, std::uint64_t counter) {
  std::uint64_t h = splitmix64(seed);
  h = splitmix64(h ^ tmpl);
  h = splitmix64(h ^ instance);
  h = splitmix64(h ^ counter);
  return static_cast<double>(h >> 11) * 0x1.0p-53;
}

}  // namespace

std::string_view to_string(TemplateName name) noexcept {
  switch (name) {
    case TemplateName::left_turn_oncoming: return "left_turn_oncoming";
    case TemplateName::pedestrian_crossing: return "pedestrian_crossing";
    case TemplateName::bicycle_crossing: return "bicycle_crossing";
    case TemplateName::straight_follow: return "straight_follow";
    case TemplateName::straight_uninvolved: return "straight_uninvolved";
  }
  return "straight_uninvolved";
}

std::optional<TemplateName> parse_template_name(std::string_view s) noexcept {
  for (auto n : {TemplateName::left_turn_oncoming, TemplateName::pedestrian_crossing,
                 TemplateName::bicycle_crossing, TemplateName::straight_follow,
                 TemplateName::straight_uninvolved})
    if (to_string(n) == s) return n;
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// Path

Pose2 Path::end_pose() const {
  if (segments_.empty()) return start_;
  const auto& seg = segments_.back();
  Pose2 p = seg.start;
  const double s = seg.length;
  if (seg.curvature == 0.0) {
    p.x += s * std::cos(p.heading);
    p.y += s * std::sin(p.heading);
  } else {
    const double k = seg.curvature;
    const double h1 = p.heading + k * s;
    p.x += (std::sin(h1) - std::sin(p.heading)) / k;
    p.y -= (std::cos(h1) - std::cos(p.heading)) / k;
    p.heading = h1;
  }
  return p;
}

Path& Path::line(double length) {
  segments_.push_back({length, 0.0, end_pose()});
  total_length_ += length;
  return *this;
}

Path& Path::arc(double radius, double angle) {
  const double k = (angle >= 0 ? 1.0 : -1.0) / radius;
  segments_.push_back({radius * std::abs(angle), k, end_pose()});
  total_length_ += radius * std::abs(angle);
  return *this;
}

Pose2 Path::pose_at(double s) const {
  s = std::max(0.0, s);
  if (segments_.empty()) return start_;
  double rest = s;
  std::size_t i = 0;
  for (; i + 1 < segments_.size() && rest > segments_[i].length; ++i) rest -= segments_[i].length;
  const auto& seg = segments_[i];
  Pose2 p = seg.start;
  if (seg.curvature == 0.0 || rest > seg.length) {
    // Past the end of an arc the path continues straight along the exit heading.
    double straight = rest;
    if (seg.curvature != 0.0) {
      const double k = seg.curvature;
      const double h1 = p.heading + k * seg.length;
      p.x += (std::sin(h1) - std::sin(p.heading)) / k;
      p.y -= (std::cos(h1) - std::cos(p.heading)) / k;
      p.heading = h1;
      straight = rest - seg.length;
    }
    p.x += straight * std::cos(p.heading);
    p.y += straight * std::sin(p.heading);
  } else {
    const double k = seg.curvature;
    const double h1 = p.heading + k * rest;
    p.x += (std::sin(h1) - std::sin(p.heading)) / k;
    p.y -= (std::cos(h1) - std::cos(p.heading)) / k;
    p.heading = h1;
  }
  p.heading = normalize_angle(p.heading);
  return p;
}

// ---------------------------------------------------------------------------
// SpeedProfile

SpeedProfile::SpeedProfile(std::vector<std::pair<double, double>> knots) : knots_(std::move(knots)) {
  if (knots_.empty() || knots_.front().first != 0.0)
    fail(ErrorKind::generation, "speed profile must start at arc length 0");
  for (std::size_t i = 0; i < knots_.size(); ++i) {
    if (!(knots_[i].second > 0.0)) fail(ErrorKind::generation, "speed profile needs positive speeds");
    if (i > 0 && !(knots_[i].first > knots_[i - 1].first))
      fail(ErrorKind::generation, "speed profile knots must be strictly increasing");
  }
}

SpeedProfile SpeedProfile::scaled(double factor) const {
  SpeedProfile out = *this;
  for (auto& k : out.knots_) k.second *= factor;
  return out;
}

double SpeedProfile::speed_at(double s) const {
  if (s <= knots_.front().first) return knots_.front().second;
  for (std::size_t i = 1; i < knots_.size(); ++i) {
    if (s <= knots_[i].first) {
      const auto [sa, va] = knots_[i - 1];
      const auto [sb, vb] = knots_[i];
      return va + (vb - va) * (s - sa) / (sb - sa);
    }
  }
  return knots_.back().second;
}

namespace {

// Time to cover `len` meters while speed moves linearly (in arc length) from va to vb.
double segment_time(double len, double va, double vb) {
  if (va == vb) return len / va;
  return len * std::log(vb / va) / (vb - va);
}

}  // namespace

double SpeedProfile::time_to(double s) const {
  double t = 0.0;
  for (std::size_t i = 1; i < knots_.size(); ++i) {
    const auto [sa, va] = knots_[i - 1];
    const auto [sb, vb] = knots_[i];
    if (s <= sb) return t + segment_time(s - sa, va, speed_at(s));
    t += segment_time(sb - sa, va, vb);
  }
  return t + (s - knots_.back().first) / knots_.back().second;
}

double SpeedProfile::distance_at(double t) const {
  double elapsed = 0.0;
  for (std::size_t i = 1; i < knots_.size(); ++i) {
    const auto [sa, va] = knots_[i - 1];
    const auto [sb, vb] = knots_[i];
    const double dt = segment_time(sb - sa, va, vb);
    if (t <= elapsed + dt) {
      const double tau = t - elapsed;
      if (va == vb) return sa + va * tau;
      // v grows exponentially in time when it is linear in arc length.
      const double k = (vb - va) / (sb - sa);
      return sa + (va / k) * std::expm1(k * tau);
    }
    elapsed += dt;
  }
  return knots_.back().first + (t - elapsed) * knots_.back().second;
}

// ---------------------------------------------------------------------------
// Templates

namespace {

Actor car(Path path, SpeedProfile speed) {
  return {RoadUserClass::car, 1.9, 4.6, std::move(path), std::move(speed)};
}

// Northbound approach from the south edge in the right-hand lane.
Pose2 south_entry() { return {kLane, -45.0, kPi / 2}; }

}  // namespace

ScenarioTemplate standard_template(TemplateName name) {
  ScenarioTemplate t;
  t.name = name;
  const SpeedProfile cruise({{0.0, 9.0}, {30.0, 9.0}, {42.0, 7.5}, {58.0, 7.5}, {70.0, 9.0}});
  const double straight_length = 90.0;
  switch (name) {
    case TemplateName::left_turn_oncoming: {
      // Arc center sits at (kLane - R, kLane - R); exit lies on the westbound lane.
      const double approach = (kLane - kTurnRadius) + 45.0;
      Path ego = Path(south_entry()).line(approach).arc(kTurnRadius, kPi / 2).line(approach);
      const double turn_start = approach;
      const double turn_end = approach + kTurnRadius * kPi / 2;
      t.ego = car(std::move(ego), SpeedProfile({{0.0, 9.0},
                                                {turn_start - 14.0, 9.0},
                                                {turn_start, 5.0},
                                                {turn_end, 5.0},
                                                {turn_end + 14.0, 9.0}}));
      t.challenger = car(Path({-kLane, 45.0, -kPi / 2}).line(straight_length), SpeedProfile({{0.0, 9.0}}));
      t.timing_offset_min_s = -2.0;
      t.timing_offset_max_s = 2.0;
      break;
    }
    case TemplateName::pedestrian_crossing: {
      const double approach = -kLane - kTurnRadius + 45.0;
      Path ego = Path(south_entry()).line(approach).arc(kTurnRadius, -kPi / 2).line(approach);
      const double turn_start = approach;
      const double turn_end = approach + kTurnRadius * kPi / 2;
      t.ego = car(std::move(ego), SpeedProfile({{0.0, 9.0},
                                                {turn_start - 14.0, 9.0},
                                                {turn_start, 4.5},
                                                {turn_end, 4.5},
                                                {turn_end + 14.0, 9.0}}));
      // Crosswalk across the eastern exit arm.
      t.challenger = Actor{RoadUserClass::pedestrian, 0.0, 0.0, Path({10.0, -7.0, kPi / 2}).line(14.0),
                           SpeedProfile({{0.0, 1.4}})};
      t.bystanders.push_back({RoadUserClass::pedestrian, 0.0, 0.0, {-6.0, -6.0, kPi / 4}});
      t.timing_offset_min_s = -2.5;
      t.timing_offset_max_s = 2.5;
      break;
    }
    case TemplateName::bicycle_crossing: {
      // The ego appears shortly before the bicycle track so the crossing is in view from the start.
      t.ego = car(Path({kLane, -kLane - 13.0, kPi / 2}).line(50.0),
                  SpeedProfile({{0.0, 7.5}, {14.0, 7.5}, {26.0, 9.0}}));
      t.challenger = Actor{RoadUserClass::bicycle, 0.6, 1.8, Path({-30.0, -kLane, 0.0}).line(60.0),
                           SpeedProfile({{0.0, 5.0}})};
      t.timing_offset_min_s = -1.0;
      t.timing_offset_max_s = 2.0;
      break;
    }
    case TemplateName::straight_follow: {
      t.ego = car(Path(south_entry()).line(straight_length), cruise);
      t.challenger = car(Path(south_entry()).line(straight_length), cruise);
      // The leader passes every point of the shared path earlier.
      t.timing_offset_min_s = -2.5;
      t.timing_offset_max_s = -1.3;
      t.shared_speed_scale = true;
      break;
    }
    case TemplateName::straight_uninvolved: {
      t.ego = car(Path(south_entry()).line(straight_length), SpeedProfile({{0.0, 10.0}}));
      break;
    }
  }
  return t;
}

// ---------------------------------------------------------------------------
// Generation

namespace {

// Arc lengths (ego, challenger) of the closest approach between two paths;
// ties resolve to the smallest arc lengths.
std::pair<double, double> closest_approach(const Path& a, const Path& b) {
  auto search = [&](double a_lo, double a_hi, double b_lo, double b_hi, double step) {
    double best = std::numeric_limits<double>::infinity();
    std::pair<double, double> arg{a_lo, b_lo};
    const int na = static_cast<int>(std::ceil((a_hi - a_lo) / step));
    const int nb = static_cast<int>(std::ceil((b_hi - b_lo) / step));
    for (int i = 0; i <= na; ++i) {
      const double sa = std::min(a_hi, a_lo + i * step);
      const auto pa = a.pose_at(sa);
      for (int j = 0; j <= nb; ++j) {
        const double sb = std::min(b_hi, b_lo + j * step);
        const auto pb = b.pose_at(sb);
        const double d = std::hypot(pa.x - pb.x, pa.y - pb.y);
        if (d < best) {
          best = d;
          arg = {sa, sb};
        }
      }
    }
    return arg;
  };
  auto coarse = search(0.0, a.length(), 0.0, b.length(), 0.5);
  return search(std::max(0.0, coarse.first - 1.0), std::min(a.length(), coarse.first + 1.0),
                std::max(0.0, coarse.second - 1.0), std::min(b.length(), coarse.second + 1.0), 0.01);
}

struct Placement {
  int quarter_turns = 0;
  double cx = kExtentSide / 2, cy = kExtentSide / 2;

  // Exact rotation by multiples of 90 degrees.
  std::pair<double, double> apply(double x, double y) const {
    switch (quarter_turns & 3) {
      case 1: return {cx - y, cy + x};
      case 2: return {cx - x, cy - y};
      case 3: return {cx + y, cy - x};
      default: return {cx + x, cy + y};
    }
  }
  double heading(double h) const { return normalize_angle(h + quarter_turns * (kPi / 2)); }
};

struct PlannedActor {
  RoadUserClass ru_class;
  double width, length;
  double start_time;  // recording time of arc length 0
  double duration;
  const Path* path;
  SpeedProfile speed;
};

std::vector<TrackPoint> sample_actor(const PlannedActor& a, const Placement& place, double frame_rate,
                                     const Extent& extent, std::string_view template_name) {
  std::vector<TrackPoint> points;
  const auto first = static_cast<std::int64_t>(std::ceil(a.start_time * frame_rate - 1e-9));
  const auto last = static_cast<std::int64_t>(std::floor((a.start_time + a.duration) * frame_rate + 1e-9));
  for (auto f = first; f <= last; ++f) {
    const double t = std::max(0.0, static_cast<double>(f) / frame_rate - a.start_time);
    const auto pose = a.path->pose_at(a.speed.distance_at(t));
    const auto [x, y] = place.apply(pose.x, pose.y);
    if (!extent.contains(x, y))
      fail(ErrorKind::generation, "template " + std::string(template_name) + " leaves the background extent");
    TrackPoint p;
    p.frame = f;
    p.x_center = x;
    p.y_center = y;
    p.heading = place.heading(pose.heading);
    points.push_back(p);
  }
  return points;
}

}  // namespace

void fill_kinematics(std::vector<TrackPoint>& pts, double frame_rate) {
  const std::size_t n = pts.size();
  if (n < 2) return;
  auto diff = [&](auto get, auto set) {
    std::vector<std::pair<double, double>> out(n);
    for (std::size_t k = 0; k < n; ++k) {
      const std::size_t lo = k == 0 ? 0 : k - 1;
      const std::size_t hi = k + 1 == n ? n - 1 : k + 1;
      const double scale = frame_rate / static_cast<double>(hi - lo);
      const auto [xa, ya] = get(pts[lo]);
      const auto [xb, yb] = get(pts[hi]);
      out[k] = {(xb - xa) * scale, (yb - ya) * scale};
    }
    for (std::size_t k = 0; k < n; ++k) set(pts[k], out[k]);
  };
  diff([](const TrackPoint& p) { return std::pair{p.x_center, p.y_center}; },
       [](TrackPoint& p, std::pair<double, double> v) {
         p.x_velocity = v.first;
         p.y_velocity = v.second;
       });
  diff([](const TrackPoint& p) { return std::pair{p.x_velocity, p.y_velocity}; },
       [](TrackPoint& p, std::pair<double, double> a) {
         p.x_acceleration = a.first;
         p.y_acceleration = a.second;
       });
  for (auto& p : pts) {
    const double c = std::cos(p.heading), s = std::sin(p.heading);
    p.lon_velocity = c * p.x_velocity + s * p.y_velocity;
    p.lat_velocity = -s * p.x_velocity + c * p.y_velocity;
    p.lon_acceleration = c * p.x_acceleration + s * p.y_acceleration;
    p.lat_acceleration = -s * p.x_acceleration + c * p.y_acceleration;
  }
}

Generated generate(const std::vector<TemplateCount>& templates, std::uint64_t seed, double frame_rate) {
  if (!(frame_rate > 0)) fail(ErrorKind::argument, "frame_rate must be > 0");
  Generated out;
  auto& rec = out.recording;
  rec.recording_id = kRecordingId;
  rec.frame_rate = frame_rate;
  rec.traffic_space_name = "synthetic_intersection";
  rec.background_extent = {0.0, 0.0, kExtentSide, kExtentSide};

  double cursor = 0.0;
  TrackId next_id = 1;
  for (const auto& [tmpl, count] : templates) {
    if (count < 0) fail(ErrorKind::argument, "template counts must be >= 0");
    const auto key = static_cast<std::uint64_t>(tmpl.name);
    std::pair<double, double> conflict{0.0, 0.0};
    if (tmpl.challenger) conflict = closest_approach(tmpl.ego.path, tmpl.challenger->path);

    for (int idx = 0; idx < count; ++idx) {
      const auto inst = static_cast<std::uint64_t>(idx);
      auto draw = [&](std::uint64_t c) { return uniform(seed, key, inst, c); };
      Placement place;
      place.quarter_turns = std::min(3, static_cast<int>(draw(0) * 4.0));
      const double ego_scale = 1.0 + kSpeedScaleSpread * (2.0 * draw(1) - 1.0);
      const double chal_scale = tmpl.shared_speed_scale ? ego_scale : 1.0 + kSpeedScaleSpread * (2.0 * draw(2) - 1.0);
      const double offset =
          tmpl.timing_offset_min_s + draw(3) * (tmpl.timing_offset_max_s - tmpl.timing_offset_min_s);
      const double jitter = draw(4) * kEntryJitterS;

      std::vector<PlannedActor> actors;
      auto ego_speed = tmpl.ego.speed.scaled(ego_scale);
      actors.push_back({tmpl.ego.ru_class, tmpl.ego.width, tmpl.ego.length, 0.0,
                        ego_speed.time_to(tmpl.ego.path.length()), &tmpl.ego.path, ego_speed});
      if (tmpl.challenger) {
        const auto& c = *tmpl.challenger;
        auto speed = c.speed.scaled(chal_scale);
        const double start = ego_speed.time_to(conflict.first) + offset - speed.time_to(conflict.second);
        actors.push_back({c.ru_class, c.width, c.length, start, speed.time_to(c.path.length()), &c.path, speed});
      }
      double earliest = 0.0, span = 0.0;
      for (const auto& a : actors) earliest = std::min(earliest, a.start_time);
      for (auto& a : actors) {
        a.start_time -= earliest;
        span = std::max(span, a.start_time + a.duration);
      }
      const double t0 = cursor + jitter;
      for (auto& a : actors) a.start_time += t0;

      std::vector<TrackId> ids;
      for (const auto& a : actors) {
        Trajectory traj{next_id, a.ru_class, a.width, a.length,
                        sample_actor(a, place, frame_rate, rec.background_extent, to_string(tmpl.name))};
        if (traj.points.size() < 2) fail(ErrorKind::generation, "actor lifetime shorter than two frames");
        fill_kinematics(traj.points, frame_rate);
        ids.push_back(next_id++);
        rec.trajectories.push_back(std::move(traj));
      }
      for (const auto& b : tmpl.bystanders) {
        Trajectory traj{next_id++, b.ru_class, b.width, b.length, {}};
        const auto [x, y] = place.apply(b.pose.x, b.pose.y);
        if (!rec.background_extent.contains(x, y))
          fail(ErrorKind::generation, "bystander outside the background extent");
        const auto first = static_cast<std::int64_t>(std::ceil(t0 * frame_rate));
        const auto last = static_cast<std::int64_t>(std::floor((t0 + span) * frame_rate));
        for (auto f = first; f <= last; ++f) {
          TrackPoint p;
          p.frame = f;
          p.x_center = x;
          p.y_center = y;
          p.heading = place.heading(b.pose.heading);
          traj.points.push_back(p);
        }
        rec.trajectories.push_back(std::move(traj));
      }

      if (ids.size() == 2) {
        const auto name = std::string(to_string(tmpl.name));
        out.ground_truth[ScenarioId{rec.recording_id, ids[0], ids[1]}.str()] = name;
        if (tmpl.challenger->ru_class == RoadUserClass::car)
          out.ground_truth[ScenarioId{rec.recording_id, ids[1], ids[0]}.str()] = name;
      }
      cursor = t0 + span + kInstanceGapS;
    }
  }
  return out;
}

std::string ground_truth_to_json(const GroundTruth& gt) {
  nlohmann::ordered_json j = nlohmann::ordered_json::object();
  for (const auto& [k, v] : gt) j[k] = v;
  return j.dump(2) + "\n";
}

GroundTruth ground_truth_from_json(const std::string& text) {
  GroundTruth gt;
  try {
    auto j = nlohmann::json::parse(text);
    if (!j.is_object()) fail(ErrorKind::schema, "ground_truth.json must be an object");
    for (auto it = j.begin(); it != j.end(); ++it) gt[it.key()] = it.value().get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::schema, std::string("ground_truth.json: ") + e.what());
  }
  return gt;
}

}  // namespace unscene::synth
