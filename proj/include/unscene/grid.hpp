#pragma once

#include <optional>
#include <string>
#include <vector>

#include "unscene/filter.hpp"
#include "unscene/matrix.hpp"
#include "unscene/numerics.hpp"

namespace unscene {

enum class Channel { occupancy, vx, vy, ax, ay };

std::string_view to_string(Channel c) noexcept;
std::optional<Channel> parse_channel(std::string_view s) noexcept;

// Maps selected motion features onto grid channels; occupancy is always present.
std::vector<Channel> channels_for_features(const std::vector<std::size_t>& feature_indices);

struct GridParams {
  double a_gr = 30.0;     // meters, side of the square region of interest
  double r_lon = 1.0;     // cells per meter along the ego heading (rows)
  double r_lat = 1.0;     // cells per meter across (columns)
  std::vector<Channel> channels{Channel::occupancy, Channel::vx, Channel::vy, Channel::ax, Channel::ay};
  // Also paint the others' velocities/accelerations at the key frame.
  bool others_dynamics = false;

  std::size_t rows() const;
  std::size_t cols() const;
};

void validate(const GridParams& p);

// Occupancy encodings.
inline constexpr double kOccupancyEgo = 1.0;
inline constexpr double kOccupancyChallenger = 0.75;
inline constexpr double kOccupancyOther = 0.5;
// Dynamic channel values are snapped to this quantum so the tensor does not
// depend on rounding noise of the world pose.
inline constexpr double kValueQuantum = 1e-6;

// Central differences on the unwrapped heading (one-sided at the ends), then a
// centered 5-sample moving average truncated at the borders.
std::vector<double> yaw_rate(const std::vector<double>& heading, double frame_rate);

struct EgoPose {
  double x = 0, y = 0, heading = 0;
};

enum class KeyFrameSource { ego, challenger };

struct KeyFrame {
  std::int64_t frame = 0;
  KeyFrameSource source = KeyFrameSource::ego;
  EgoPose ego_pose;
  bool clamped = false;  // challenger frame was outside the ego lifetime

  friend bool operator==(const KeyFrame&, const KeyFrame&) = default;
};

KeyFrame key_frame(const ConcreteScenario& s, double frame_rate);

struct Vec2 {
  double x = 0, y = 0;
};

Vec2 to_ego_frame(const EgoPose& ego, Vec2 world_point);
Vec2 rotate_to_ego(const EgoPose& ego, Vec2 world_vector);
Vec2 to_world_frame(const EgoPose& ego, Vec2 ego_point);

struct ScenarioTensor {
  std::string scenario_id;
  std::vector<Channel> channel_names;
  std::vector<Matrix> channels;  // each rows() x cols()

  friend bool operator==(const ScenarioTensor&, const ScenarioTensor&) = default;
};

// Cell of an ego-frame point (snapped to kValueQuantum first), or nullopt outside
// the region of interest.
// Row grows with the longitudinal coordinate, column with the lateral one.
struct Cell {
  std::size_t row = 0, col = 0;
};
std::optional<Cell> cell_of(const GridParams& p, Vec2 ego_point);

ScenarioTensor rasterize(const ConcreteScenario& s, const KeyFrame& kf, const GridParams& p);

// Channels side by side, read column by column.
std::vector<double> flatten(const ScenarioTensor& t);
ScenarioTensor unflatten(const std::vector<double>& v, std::size_t rows, std::size_t cols,
                         const std::vector<Channel>& channels);

struct ClusterInputMatrix {
  Matrix rows;
  std::vector<std::string> row_ids;
  numerics::PcaModel pca_model;
  std::vector<std::size_t> kept_pixels;  // flattened indices surviving the variance check
  std::size_t dropped_pixels = 0;
};

struct GridBuild {
  std::vector<KeyFrame> key_frames;
  std::vector<ScenarioTensor> tensors;
  ClusterInputMatrix cluster_input;
};

// key frame -> rasterize -> flatten per scenario, then standardize (dropping
// constant pixels) and PCA.
GridBuild build_cluster_input(const std::vector<ConcreteScenario>& scenarios, const GridParams& gp,
                              double var_pca, double frame_rate, unsigned threads = 1);

std::string tensor_to_json(const ScenarioTensor& t, const KeyFrame& kf);
ScenarioTensor tensor_from_json(const std::string& text);

std::string cluster_input_to_json(const ClusterInputMatrix& m);
ClusterInputMatrix cluster_input_from_json(const std::string& text);

// 8-bit grayscale PNG of one channel, linearly mapped from [min, max].
std::vector<unsigned char> channel_png(const Matrix& channel);

}  // namespace unscene
