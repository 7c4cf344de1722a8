#pragma once

#include <array>
#include <cstdint>
#include <istream>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

namespace unscene {

enum class RoadUserClass { car, truck_bus, pedestrian, bicycle };

std::string_view to_string(RoadUserClass c) noexcept;
std::optional<RoadUserClass> parse_road_user_class(std::string_view s) noexcept;

inline bool is_vehicle(RoadUserClass c) noexcept {
  return c == RoadUserClass::car || c == RoadUserClass::truck_bus;
}

using TrackId = std::int64_t;

struct TrackPoint {
  std::int64_t frame = 0;
  double x_center = 0, y_center = 0;
  double heading = 0;  // radians, (-pi, pi]
  double x_velocity = 0, y_velocity = 0;
  double x_acceleration = 0, y_acceleration = 0;
  double lon_velocity = 0, lat_velocity = 0;
  double lon_acceleration = 0, lat_acceleration = 0;

  friend bool operator==(const TrackPoint&, const TrackPoint&) = default;
};

// The eleven motion features in canonical column order.
inline constexpr std::size_t kFeatureCount = 11;
extern const std::array<std::string_view, kFeatureCount> kFeatureNames;

std::array<double, kFeatureCount> feature_vector(const TrackPoint& p) noexcept;

struct Trajectory {
  TrackId track_id = 0;
  RoadUserClass ru_class = RoadUserClass::car;
  double width = 0, length = 0;
  std::vector<TrackPoint> points;

  std::int64_t first_frame() const { return points.front().frame; }
  std::int64_t last_frame() const { return points.back().frame; }
  bool covers(std::int64_t frame) const {
    return !points.empty() && frame >= first_frame() && frame <= last_frame();
  }
  // Requires covers(frame).
  const TrackPoint& at(std::int64_t frame) const {
    return points[static_cast<std::size_t>(frame - first_frame())];
  }

  // Points restricted to [from, to]; empty if disjoint.
  Trajectory slice(std::int64_t from, std::int64_t to) const;

  friend bool operator==(const Trajectory&, const Trajectory&) = default;
};

struct Extent {
  double x_min = 0, y_min = 0, x_max = 0, y_max = 0;

  bool contains(double x, double y) const {
    return x >= x_min && x <= x_max && y >= y_min && y <= y_max;
  }
  friend bool operator==(const Extent&, const Extent&) = default;
};

struct Recording {
  std::string recording_id;
  double frame_rate = 25.0;
  std::vector<Trajectory> trajectories;
  Extent background_extent;
  std::string traffic_space_name;

  const Trajectory* find(TrackId id) const;

  friend bool operator==(const Recording&, const Recording&) = default;
};

// Identifies one ego-challenger combination; orders as the tuple.
struct ScenarioId {
  std::string recording_id;
  TrackId ego = 0;
  TrackId challenger = 0;

  // "<recording>-<ego>-<challenger>"
  std::string str() const;
  static std::optional<ScenarioId> parse(std::string_view s);

  friend auto operator<=>(const ScenarioId&, const ScenarioId&) = default;
};

// Normalizes an angle to (-pi, pi].
double normalize_angle(double a) noexcept;

// Parses the three-file CSV form of a recording (see docs/formats.md).
// Throws Error{schema} for missing columns / unknown classes and
// Error{integrity} for frame gaps.
Recording parse_recording(std::istream& tracks, std::istream& tracks_meta,
                          std::istream& recording_meta);

Recording load_recording(const std::string& path_prefix);

void serialize_recording(const Recording& rec, std::ostream& tracks, std::ostream& tracks_meta,
                         std::ostream& recording_meta);

void save_recording(const Recording& rec, const std::string& path_prefix);

// All class-car trajectories in recording order.
std::vector<Trajectory> ego_candidates(const Recording& rec);

// Shortest round-trip decimal form.
std::string format_double(double v);

}  // namespace unscene
