#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "unscene/matrix.hpp"
#include "unscene/trajectory.hpp"

namespace unscene {

struct FilterParams {
  double d_traj = 1.0;  // meters
  double t_pet = 3.0;   // seconds
};

void validate(const FilterParams& p);

struct InteractionRecord {
  TrackId ego_id = 0;
  TrackId challenger_id = 0;
  double min_distance = 0;  // meters
  double pet = 0;           // seconds
  std::int64_t ego_frame_at_min = 0;
  std::int64_t challenger_frame_at_min = 0;

  friend bool operator==(const InteractionRecord&, const InteractionRecord&) = default;
};

enum class ScenarioCategory { e_to_v, e_to_p, e_to_b };

std::string_view to_string(ScenarioCategory c) noexcept;
std::optional<ScenarioCategory> parse_scenario_category(std::string_view s) noexcept;
ScenarioCategory category_for(RoadUserClass challenger) noexcept;

struct FrameWindow {
  std::int64_t first = 0;
  std::int64_t last = -1;

  bool empty() const noexcept { return last < first; }
  std::int64_t size() const noexcept { return empty() ? 0 : last - first + 1; }
  friend bool operator==(const FrameWindow&, const FrameWindow&) = default;
};

FrameWindow common_window(const Trajectory& a, const Trajectory& b) noexcept;

struct ConcreteScenario {
  ScenarioId scenario_id;
  FrameWindow window;
  Trajectory ego;
  Trajectory challenger;
  std::vector<Trajectory> others;
  InteractionRecord interaction;
  ScenarioCategory category = ScenarioCategory::e_to_v;
};

// Center-to-center distances over the common observation window. Row i is
// ego frame window.first + i, column j is challenger frame window.first + j.
// A disjoint pair yields an empty window and a 0x0 matrix.
struct DistanceMatrix {
  FrameWindow window;
  Matrix distances;
};

DistanceMatrix distance_matrix(const Trajectory& ego, const Trajectory& challenger);

// Closest frame pair within d_traj (ties: smallest |i-j|, then smallest ego
// frame); accepted iff the time gap at that pair is <= t_pet.
std::optional<InteractionRecord> detect_interaction(const Trajectory& ego, const Trajectory& challenger,
                                                    const FilterParams& p, double frame_rate);

// One scenario per accepted (car ego, other road user) pair, sorted by id.
std::vector<ConcreteScenario> extract_scenarios(const Recording& rec, const FilterParams& p,
                                                unsigned threads = 1);

// Builds the scenario for an accepted pair (slicing ego, challenger, others).
ConcreteScenario make_scenario(const Recording& rec, const Trajectory& ego, const Trajectory& challenger,
                               const InteractionRecord& interaction);

std::string scenarios_to_json(const std::vector<ConcreteScenario>& scenarios);
// Rebuilds the scenario slices from the recording they were extracted from.
std::vector<ConcreteScenario> scenarios_from_json(const std::string& text, const Recording& rec);

}  // namespace unscene
