#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "unscene/filter.hpp"
#include "unscene/grid.hpp"
#include "unscene/hac.hpp"
#include "unscene/synth.hpp"
#include "unscene/validation.hpp"

namespace unscene {

enum class InputSource { synth, csv };

// Flat key=value configuration. Key names carry their units.
struct PipelineConfig {
  InputSource source = InputSource::synth;
  std::string input_prefix;  // csv: path prefix of <prefix>_tracks.csv etc.
  std::vector<std::pair<synth::TemplateName, int>> synth_counts{
      {synth::TemplateName::left_turn_oncoming, 25},
      {synth::TemplateName::pedestrian_crossing, 50},
      {synth::TemplateName::bicycle_crossing, 50},
      {synth::TemplateName::straight_follow, 25},
      {synth::TemplateName::straight_uninvolved, 10}};
  double synth_frame_rate_hz = 25.0;

  double t_pet_s = 3.0;
  double d_traj_m = 1.0;

  double var_pfa = 0.95;
  std::size_t q_offset = 1;
  std::string pfa_superset = "union";  // union | pedestrian

  double a_gr_m = 30.0;
  double r_gr_lon_px_per_m = 1.0;
  double r_gr_lat_px_per_m = 1.0;
  std::string channels = "auto";  // auto | comma list of occupancy,vx,vy,ax,ay
  bool grid_others_dynamics = false;
  bool export_png = true;

  double var_pca = 0.99;
  Linkage linkage = Linkage::ward;
  std::uint64_t seed = 7;

  std::size_t thresholds_auto_count = 30;
  std::vector<double> thresholds;  // explicit list overrides the auto count
  std::string category = "all";    // all | e_to_v | e_to_p | e_to_b

  std::string labels_path;  // optional external label file for csv input
  LabelSource labels_source = LabelSource::rule_based_baseline;

  unsigned threads = 1;  // execution only; never part of stage keys

  // Throws Error{argument} for unknown keys or malformed values.
  void set(const std::string& key, const std::string& value);
  std::string get(const std::string& key) const;
  void validate() const;

  static std::vector<std::string> keys();
  // Sorted key=value lines of everything that influences results.
  std::vector<std::pair<std::string, std::string>> canonical_entries() const;
};

PipelineConfig parse_config(const std::string& text);
PipelineConfig load_config(const std::string& path);

}  // namespace unscene
