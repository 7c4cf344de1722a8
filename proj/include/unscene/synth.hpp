#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "unscene/trajectory.hpp"

namespace unscene::synth {

enum class TemplateName {
  left_turn_oncoming,
  pedestrian_crossing,
  bicycle_crossing,
  straight_follow,
  straight_uninvolved,
};

std::string_view to_string(TemplateName name) noexcept;
std::optional<TemplateName> parse_template_name(std::string_view s) noexcept;

struct Pose2 {
  double x = 0, y = 0, heading = 0;
};

// Chain of straight lines and circular arcs starting at a pose.
class Path {
 public:
  Path() = default;
  explicit Path(Pose2 start) : start_(start) {}

  Path& line(double length);
  // Positive angle turns left (counter-clockwise).
  Path& arc(double radius, double angle);

  double length() const noexcept { return total_length_; }
  Pose2 pose_at(double s) const;

 private:
  struct Segment {
    double length;
    double curvature;  // 0 for lines
    Pose2 start;
  };
  Pose2 end_pose() const;

  Pose2 start_;
  std::vector<Segment> segments_;
  double total_length_ = 0;
};

// Speed as a piecewise-linear function of arc length (trapezoids along the
// path). Speeds stay constant past the last knot.
class SpeedProfile {
 public:
  SpeedProfile() = default;
  explicit SpeedProfile(std::vector<std::pair<double, double>> knots);

  SpeedProfile scaled(double factor) const;

  double speed_at(double s) const;
  // Seconds needed to travel from arc length 0 to s.
  double time_to(double s) const;
  // Arc length reached after t seconds.
  double distance_at(double t) const;

 private:
  std::vector<std::pair<double, double>> knots_;  // (s, v), s ascending, v > 0
};

struct Actor {
  RoadUserClass ru_class = RoadUserClass::car;
  double width = 0, length = 0;
  Path path;
  SpeedProfile speed;
};

struct Bystander {
  RoadUserClass ru_class = RoadUserClass::pedestrian;
  double width = 0, length = 0;
  Pose2 pose;
};

// Geometry is expressed around an intersection centered at the origin; the
// generator rotates each instance by a multiple of 90 degrees and shifts it to
// the center of the extent.
struct ScenarioTemplate {
  TemplateName name = TemplateName::straight_uninvolved;
  Actor ego;
  std::optional<Actor> challenger;
  std::vector<Bystander> bystanders;
  // Challenger arrival at the closest-approach point relative to the ego's
  // arrival there, in seconds.
  double timing_offset_min_s = 0, timing_offset_max_s = 0;
  // Ego and challenger share one speed-scaling factor (car following).
  bool shared_speed_scale = false;
};

ScenarioTemplate standard_template(TemplateName name);

// Scenario key -> template name.
using GroundTruth = std::map<std::string, std::string>;

struct Generated {
  Recording recording;
  GroundTruth ground_truth;
};

struct TemplateCount {
  ScenarioTemplate scenario_template;
  int count = 0;
};

inline constexpr double kExtentSide = 100.0;
inline constexpr const char* kRecordingId = "synth";

Generated generate(const std::vector<TemplateCount>& templates, std::uint64_t seed, double frame_rate);

// Per-frame signals derived from positions: central differences (one-sided at
// the ends) for velocity, then the same for acceleration.
void fill_kinematics(std::vector<TrackPoint>& points, double frame_rate);

std::string ground_truth_to_json(const GroundTruth& gt);
GroundTruth ground_truth_from_json(const std::string& text);

}  // namespace unscene::synth
