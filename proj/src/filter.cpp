#include "unscene/filter.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <map>

#include <json.hpp>

#include "unscene/error.hpp"
#include "unscene/parallel.hpp"

namespace unscene {

void validate(const FilterParams& p) {
  if (!(p.d_traj > 0)) fail(ErrorKind::argument, "d_traj must be > 0");
  if (!(p.t_pet > 0)) fail(ErrorKind::argument, "t_pet must be > 0");
}

std::string_view to_string(ScenarioCategory c) noexcept {
  switch (c) {
    case ScenarioCategory::e_to_v: return "e_to_v";
    case ScenarioCategory::e_to_p: return "e_to_p";
    case ScenarioCategory::e_to_b: return "e_to_b";
  }
  return "e_to_v";
}

std::optional<ScenarioCategory> parse_scenario_category(std::string_view s) noexcept {
  if (s == "e_to_v") return ScenarioCategory::e_to_v;
  if (s == "e_to_p") return ScenarioCategory::e_to_p;
  if (s == "e_to_b") return ScenarioCategory::e_to_b;
  return std::nullopt;
}

ScenarioCategory category_for(RoadUserClass challenger) noexcept {
  switch (challenger) {
    case RoadUserClass::pedestrian: return ScenarioCategory::e_to_p;
    case RoadUserClass::bicycle: return ScenarioCategory::e_to_b;
    default: return ScenarioCategory::e_to_v;
  }
}

FrameWindow common_window(const Trajectory& a, const Trajectory& b) noexcept {
  if (a.points.empty() || b.points.empty()) return {};
  return {std::max(a.first_frame(), b.first_frame()), std::min(a.last_frame(), b.last_frame())};
}

DistanceMatrix distance_matrix(const Trajectory& ego, const Trajectory& challenger) {
  DistanceMatrix out{common_window(ego, challenger), {}};
  if (out.window.empty()) return out;
  const auto n = static_cast<std::size_t>(out.window.size());
  out.distances = Matrix(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto& e = ego.at(out.window.first + static_cast<std::int64_t>(i));
    for (std::size_t j = 0; j < n; ++j) {
      const auto& c = challenger.at(out.window.first + static_cast<std::int64_t>(j));
      out.distances(i, j) = std::hypot(e.x_center - c.x_center, e.y_center - c.y_center);
    }
  }
  return out;
}

namespace {

struct Box {
  double x0 = std::numeric_limits<double>::infinity(), y0 = x0;
  double x1 = -std::numeric_limits<double>::infinity(), y1 = x1;
};

Box bounds(const Trajectory& t, const FrameWindow& w) {
  Box b;
  for (auto f = w.first; f <= w.last; ++f) {
    const auto& p = t.at(f);
    b.x0 = std::min(b.x0, p.x_center);
    b.y0 = std::min(b.y0, p.y_center);
    b.x1 = std::max(b.x1, p.x_center);
    b.y1 = std::max(b.y1, p.y_center);
  }
  return b;
}

double box_gap(const Box& a, const Box& b) {
  const double dx = std::max({0.0, a.x0 - b.x1, b.x0 - a.x1});
  const double dy = std::max({0.0, a.y0 - b.y1, b.y0 - a.y1});
  return std::hypot(dx, dy);
}

}  // namespace

std::optional<InteractionRecord> detect_interaction(const Trajectory& ego, const Trajectory& challenger,
                                                    const FilterParams& p, double frame_rate) {
  const auto w = common_window(ego, challenger);
  if (w.empty()) return std::nullopt;
  // Cheap rejection: no frame pair can come closer than the bounding boxes.
  if (box_gap(bounds(ego, w), bounds(challenger, w)) > p.d_traj) return std::nullopt;

  const auto n = w.size();
  double best = std::numeric_limits<double>::infinity();
  std::int64_t best_i = -1, best_j = -1;
  for (std::int64_t i = 0; i < n; ++i) {
    const auto& e = ego.at(w.first + i);
    for (std::int64_t j = 0; j < n; ++j) {
      const auto& c = challenger.at(w.first + j);
      const double d = std::hypot(e.x_center - c.x_center, e.y_center - c.y_center);
      if (d > p.d_traj) continue;
      // Scan order already yields the smallest i among equal (d, |i-j|).
      if (d < best || (d == best && std::llabs(i - j) < std::llabs(best_i - best_j))) {
        best = d;
        best_i = i;
        best_j = j;
      }
    }
  }
  if (best_i < 0) return std::nullopt;
  const double pet = static_cast<double>(std::llabs(best_i - best_j)) / frame_rate;
  if (pet > p.t_pet) return std::nullopt;
  return InteractionRecord{ego.track_id, challenger.track_id, best, pet, w.first + best_i, w.first + best_j};
}

ConcreteScenario make_scenario(const Recording& rec, const Trajectory& ego, const Trajectory& challenger,
                               const InteractionRecord& interaction) {
  ConcreteScenario s;
  s.scenario_id = {rec.recording_id, ego.track_id, challenger.track_id};
  s.window = common_window(ego, challenger);
  s.ego = ego.slice(s.window.first, s.window.last);
  s.challenger = challenger.slice(s.window.first, s.window.last);
  for (const auto& t : rec.trajectories) {
    if (t.track_id == ego.track_id || t.track_id == challenger.track_id) continue;
    auto sl = t.slice(s.window.first, s.window.last);
    if (!sl.points.empty()) s.others.push_back(std::move(sl));
  }
  s.interaction = interaction;
  s.category = category_for(challenger.ru_class);
  return s;
}

std::vector<ConcreteScenario> extract_scenarios(const Recording& rec, const FilterParams& p, unsigned threads) {
  validate(p);
  std::vector<const Trajectory*> egos;
  for (const auto& t : rec.trajectories)
    if (t.ru_class == RoadUserClass::car) egos.push_back(&t);

  std::vector<std::vector<ConcreteScenario>> per_ego(egos.size());
  parallel_for(egos.size(), threads, [&](std::size_t k) {
    const auto& ego = *egos[k];
    for (const auto& other : rec.trajectories) {
      if (other.track_id == ego.track_id) continue;
      if (auto hit = detect_interaction(ego, other, p, rec.frame_rate))
        per_ego[k].push_back(make_scenario(rec, ego, other, *hit));
    }
  });

  std::vector<ConcreteScenario> out;
  for (auto& v : per_ego)
    for (auto& s : v) out.push_back(std::move(s));
  std::sort(out.begin(), out.end(),
            [](const ConcreteScenario& a, const ConcreteScenario& b) { return a.scenario_id < b.scenario_id; });
  return out;
}

std::string scenarios_to_json(const std::vector<ConcreteScenario>& scenarios) {
  using json = nlohmann::ordered_json;
  json arr = json::array();
  for (const auto& s : scenarios) {
    json others = json::array();
    for (const auto& o : s.others) others.push_back(o.track_id);
    const auto& r = s.interaction;
    arr.push_back({
        {"id", s.scenario_id.str()},
        {"recording_id", s.scenario_id.recording_id},
        {"category", to_string(s.category)},
        {"frame_window", {s.window.first, s.window.last}},
        {"ego_id", s.ego.track_id},
        {"challenger_id", s.challenger.track_id},
        {"other_ids", others},
        {"interaction",
         {{"ego_id", r.ego_id},
          {"challenger_id", r.challenger_id},
          {"min_distance_m", r.min_distance},
          {"pet_s", r.pet},
          {"ego_frame_at_min", r.ego_frame_at_min},
          {"challenger_frame_at_min", r.challenger_frame_at_min}}},
    });
  }
  json doc = {{"schema_version", 1}, {"scenarios", arr}};
  return doc.dump(2) + "\n";
}

std::vector<ConcreteScenario> scenarios_from_json(const std::string& text, const Recording& rec) {
  std::vector<ConcreteScenario> out;
  try {
    const auto doc = nlohmann::json::parse(text);
    for (const auto& j : doc.at("scenarios")) {
      const auto& ji = j.at("interaction");
      InteractionRecord r{ji.at("ego_id").get<TrackId>(),
                          ji.at("challenger_id").get<TrackId>(),
                          ji.at("min_distance_m").get<double>(),
                          ji.at("pet_s").get<double>(),
                          ji.at("ego_frame_at_min").get<std::int64_t>(),
                          ji.at("challenger_frame_at_min").get<std::int64_t>()};
      const auto* ego = rec.find(j.at("ego_id").get<TrackId>());
      const auto* chal = rec.find(j.at("challenger_id").get<TrackId>());
      if (!ego || !chal) fail(ErrorKind::schema, "scenarios.json references unknown track ids");
      out.push_back(make_scenario(rec, *ego, *chal, r));
    }
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::schema, std::string("scenarios.json: ") + e.what());
  }
  return out;
}

}  // namespace unscene
