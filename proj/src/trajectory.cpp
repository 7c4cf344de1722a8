#include "unscene/trajectory.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <numbers>
#include <sstream>
#include <unordered_map>

#include "unscene/error.hpp"

namespace unscene {

const std::array<std::string_view, kFeatureCount> kFeatureNames = {
    "xCenter",       "yCenter",       "heading",     "xVelocity",
    "yVelocity",     "xAcceleration", "yAcceleration", "lonVelocity",
    "latVelocity",   "lonAcceleration", "latAcceleration"};

std::string_view to_string(RoadUserClass c) noexcept {
  switch (c) {
    case RoadUserClass::car: return "car";
    case RoadUserClass::truck_bus: return "truck_bus";
    case RoadUserClass::pedestrian: return "pedestrian";
    case RoadUserClass::bicycle: return "bicycle";
  }
  return "car";
}

std::optional<RoadUserClass> parse_road_user_class(std::string_view s) noexcept {
  if (s == "car") return RoadUserClass::car;
  if (s == "truck_bus") return RoadUserClass::truck_bus;
  if (s == "pedestrian") return RoadUserClass::pedestrian;
  if (s == "bicycle") return RoadUserClass::bicycle;
  return std::nullopt;
}

std::array<double, kFeatureCount> feature_vector(const TrackPoint& p) noexcept {
  return {p.x_center,       p.y_center,       p.heading,      p.x_velocity,
          p.y_velocity,     p.x_acceleration, p.y_acceleration, p.lon_velocity,
          p.lat_velocity,   p.lon_acceleration, p.lat_acceleration};
}

double normalize_angle(double a) noexcept {
  constexpr double pi = std::numbers::pi;
  a = std::remainder(a, 2.0 * pi);  // [-pi, pi]
  if (a <= -pi) a += 2.0 * pi;
  return a;
}

Trajectory Trajectory::slice(std::int64_t from, std::int64_t to) const {
  Trajectory out{track_id, ru_class, width, length, {}};
  if (points.empty()) return out;
  const auto lo = std::max(from, first_frame());
  const auto hi = std::min(to, last_frame());
  if (lo > hi) return out;
  out.points.assign(points.begin() + (lo - first_frame()), points.begin() + (hi - first_frame()) + 1);
  return out;
}

const Trajectory* Recording::find(TrackId id) const {
  auto it = std::lower_bound(trajectories.begin(), trajectories.end(), id,
                             [](const Trajectory& t, TrackId v) { return t.track_id < v; });
  if (it != trajectories.end() && it->track_id == id) return &*it;
  // Recordings built by hand may not be sorted.
  for (const auto& t : trajectories)
    if (t.track_id == id) return &t;
  return nullptr;
}

std::string ScenarioId::str() const {
  return recording_id + "-" + std::to_string(ego) + "-" + std::to_string(challenger);
}

std::optional<ScenarioId> ScenarioId::parse(std::string_view s) {
  auto last = s.rfind('-');
  if (last == std::string_view::npos || last == 0) return std::nullopt;
  auto mid = s.rfind('-', last - 1);
  if (mid == std::string_view::npos) return std::nullopt;
  ScenarioId id;
  id.recording_id = std::string(s.substr(0, mid));
  auto parse_int = [](std::string_view t, TrackId& out) {
    auto res = std::from_chars(t.data(), t.data() + t.size(), out);
    return res.ec == std::errc{} && res.ptr == t.data() + t.size() && !t.empty();
  };
  if (!parse_int(s.substr(mid + 1, last - mid - 1), id.ego)) return std::nullopt;
  if (!parse_int(s.substr(last + 1), id.challenger)) return std::nullopt;
  return id;
}

std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '"')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r' || s.back() == '"'))
    s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split_csv(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    auto pos = line.find(',', start);
    out.push_back(trim(line.substr(start, pos == std::string_view::npos ? pos : pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

// Minimal header-indexed CSV reader.
class CsvTable {
 public:
  CsvTable(std::istream& in, std::string name) : name_(std::move(name)) {
    std::string line;
    if (!std::getline(in, line)) return;
    for (auto h : split_csv(line)) header_.emplace_back(h);
    while (std::getline(in, line)) {
      if (trim(line).empty()) continue;
      lines_.push_back(std::move(line));
    }
  }

  bool has(std::string_view col) const {
    return std::find(header_.begin(), header_.end(), col) != header_.end();
  }

  std::size_t index(std::string_view col) const {
    auto it = std::find(header_.begin(), header_.end(), col);
    if (it == header_.end())
      fail(ErrorKind::schema, name_ + ": missing column '" + std::string(col) + "'");
    return static_cast<std::size_t>(it - header_.begin());
  }

  std::size_t row_count() const { return lines_.size(); }

  std::vector<std::string_view> row(std::size_t i) const {
    auto cells = split_csv(lines_[i]);
    if (cells.size() < header_.size())
      fail(ErrorKind::schema, name_ + ": row " + std::to_string(i + 2) + " has too few fields");
    return cells;
  }

  double number(std::string_view cell, std::size_t row) const {
    double v = 0;
    auto res = std::from_chars(cell.data(), cell.data() + cell.size(), v);
    if (res.ec != std::errc{} || res.ptr != cell.data() + cell.size() || !std::isfinite(v))
      fail(ErrorKind::schema, name_ + ": row " + std::to_string(row + 2) + ": bad number '" +
                                  std::string(cell) + "'");
    return v;
  }

  std::int64_t integer(std::string_view cell, std::size_t row) const {
    std::int64_t v = 0;
    auto res = std::from_chars(cell.data(), cell.data() + cell.size(), v);
    if (res.ec != std::errc{} || res.ptr != cell.data() + cell.size())
      fail(ErrorKind::schema, name_ + ": row " + std::to_string(row + 2) + ": bad integer '" +
                                  std::string(cell) + "'");
    return v;
  }

  bool header_empty() const { return header_.empty(); }

 private:
  std::string name_;
  std::vector<std::string> header_;
  std::vector<std::string> lines_;
};

constexpr double kDegPerRad = 180.0 / std::numbers::pi;

}  // namespace

Recording parse_recording(std::istream& tracks_in, std::istream& tracks_meta_in,
                          std::istream& recording_meta_in) {
  CsvTable rec_meta(recording_meta_in, "recordingMeta");
  CsvTable meta(tracks_meta_in, "tracksMeta");
  CsvTable tracks(tracks_in, "tracks");

  Recording rec;
  {
    const auto c_id = rec_meta.index("recordingId");
    const auto c_rate = rec_meta.index("frameRate");
    if (rec_meta.row_count() < 1) fail(ErrorKind::schema, "recordingMeta: no data row");
    auto r = rec_meta.row(0);
    rec.recording_id = std::string(r[c_id]);
    rec.frame_rate = rec_meta.number(r[c_rate], 0);
    if (!(rec.frame_rate > 0)) fail(ErrorKind::schema, "recordingMeta: frameRate must be > 0");
    if (rec_meta.has("locationName")) rec.traffic_space_name = std::string(r[rec_meta.index("locationName")]);
    if (rec_meta.has("xMin") && rec_meta.has("yMin") && rec_meta.has("xMax") && rec_meta.has("yMax")) {
      rec.background_extent = {rec_meta.number(r[rec_meta.index("xMin")], 0),
                               rec_meta.number(r[rec_meta.index("yMin")], 0),
                               rec_meta.number(r[rec_meta.index("xMax")], 0),
                               rec_meta.number(r[rec_meta.index("yMax")], 0)};
    } else {
      rec.background_extent = {std::nan(""), 0, 0, 0};
    }
  }

  struct MetaRow {
    RoadUserClass cls;
    double width, length;
  };
  std::unordered_map<TrackId, MetaRow> meta_rows;
  {
    const auto c_id = meta.index("trackId");
    const auto c_w = meta.index("width");
    const auto c_l = meta.index("length");
    const auto c_cls = meta.index("class");
    for (std::size_t i = 0; i < meta.row_count(); ++i) {
      auto r = meta.row(i);
      auto cls = parse_road_user_class(r[c_cls]);
      if (!cls) fail(ErrorKind::schema, "tracksMeta: unknown class '" + std::string(r[c_cls]) + "'");
      meta_rows[meta.integer(r[c_id], i)] = {*cls, meta.number(r[c_w], i), meta.number(r[c_l], i)};
    }
  }

  static constexpr std::array<std::string_view, 13> kTrackColumns = {
      "trackId",     "frame",         "xCenter",       "yCenter",     "heading",
      "xVelocity",   "yVelocity",     "xAcceleration", "yAcceleration", "lonVelocity",
      "latVelocity", "lonAcceleration", "latAcceleration"};
  std::array<std::size_t, 13> col{};
  if (!tracks.header_empty() || tracks.row_count() > 0)
    for (std::size_t k = 0; k < kTrackColumns.size(); ++k) col[k] = tracks.index(kTrackColumns[k]);

  std::map<TrackId, std::vector<TrackPoint>> by_track;
  for (std::size_t i = 0; i < tracks.row_count(); ++i) {
    auto r = tracks.row(i);
    const TrackId id = tracks.integer(r[col[0]], i);
    TrackPoint p;
    p.frame = tracks.integer(r[col[1]], i);
    if (p.frame < 0) fail(ErrorKind::integrity, "tracks: negative frame for track " + std::to_string(id));
    p.x_center = tracks.number(r[col[2]], i);
    p.y_center = tracks.number(r[col[3]], i);
    p.heading = normalize_angle(tracks.number(r[col[4]], i) / kDegPerRad);
    p.x_velocity = tracks.number(r[col[5]], i);
    p.y_velocity = tracks.number(r[col[6]], i);
    p.x_acceleration = tracks.number(r[col[7]], i);
    p.y_acceleration = tracks.number(r[col[8]], i);
    p.lon_velocity = tracks.number(r[col[9]], i);
    p.lat_velocity = tracks.number(r[col[10]], i);
    p.lon_acceleration = tracks.number(r[col[11]], i);
    p.lat_acceleration = tracks.number(r[col[12]], i);
    by_track[id].push_back(p);
  }

  for (auto& [id, points] : by_track) {
    auto m = meta_rows.find(id);
    if (m == meta_rows.end())
      fail(ErrorKind::schema, "tracksMeta: no entry for track " + std::to_string(id));
    std::stable_sort(points.begin(), points.end(),
                     [](const TrackPoint& a, const TrackPoint& b) { return a.frame < b.frame; });
    for (std::size_t k = 1; k < points.size(); ++k)
      if (points[k].frame != points[k - 1].frame + 1)
        fail(ErrorKind::integrity, "tracks: track " + std::to_string(id) + " has non-consecutive frames " +
                                        std::to_string(points[k - 1].frame) + " -> " +
                                        std::to_string(points[k].frame));
    rec.trajectories.push_back({id, m->second.cls, m->second.width, m->second.length, std::move(points)});
  }

  if (std::isnan(rec.background_extent.x_min)) {
    Extent e{0, 0, 0, 0};
    bool first = true;
    for (const auto& t : rec.trajectories)
      for (const auto& p : t.points) {
        if (first) {
          e = {p.x_center, p.y_center, p.x_center, p.y_center};
          first = false;
        }
        e.x_min = std::min(e.x_min, p.x_center);
        e.y_min = std::min(e.y_min, p.y_center);
        e.x_max = std::max(e.x_max, p.x_center);
        e.y_max = std::max(e.y_max, p.y_center);
      }
    rec.background_extent = e;
  }
  return rec;
}

namespace {

std::ifstream open_in(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::io, "cannot open " + path);
  return in;
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorKind::io, "cannot write " + path);
  return out;
}

}  // namespace

Recording load_recording(const std::string& path_prefix) {
  auto tracks = open_in(path_prefix + "_tracks.csv");
  auto meta = open_in(path_prefix + "_tracksMeta.csv");
  auto rec_meta = open_in(path_prefix + "_recordingMeta.csv");
  return parse_recording(tracks, meta, rec_meta);
}

void serialize_recording(const Recording& rec, std::ostream& tracks, std::ostream& tracks_meta,
                         std::ostream& recording_meta) {
  const auto& e = rec.background_extent;
  recording_meta << "recordingId,locationName,frameRate,xMin,yMin,xMax,yMax\n"
                 << rec.recording_id << ',' << rec.traffic_space_name << ',' << format_double(rec.frame_rate)
                 << ',' << format_double(e.x_min) << ',' << format_double(e.y_min) << ','
                 << format_double(e.x_max) << ',' << format_double(e.y_max) << '\n';

  tracks_meta << "recordingId,trackId,initialFrame,finalFrame,numFrames,width,length,class\n";
  tracks << "recordingId,trackId,frame,xCenter,yCenter,heading,xVelocity,yVelocity,xAcceleration,"
            "yAcceleration,lonVelocity,latVelocity,lonAcceleration,latAcceleration\n";
  for (const auto& t : rec.trajectories) {
    if (t.points.empty()) continue;
    tracks_meta << rec.recording_id << ',' << t.track_id << ',' << t.first_frame() << ',' << t.last_frame()
                << ',' << t.points.size() << ',' << format_double(t.width) << ','
                << format_double(t.length) << ',' << to_string(t.ru_class) << '\n';
    for (const auto& p : t.points) {
      tracks << rec.recording_id << ',' << t.track_id << ',' << p.frame << ',' << format_double(p.x_center)
             << ',' << format_double(p.y_center) << ',' << format_double(p.heading * kDegPerRad) << ','
             << format_double(p.x_velocity) << ',' << format_double(p.y_velocity) << ','
             << format_double(p.x_acceleration) << ',' << format_double(p.y_acceleration) << ','
             << format_double(p.lon_velocity) << ',' << format_double(p.lat_velocity) << ','
             << format_double(p.lon_acceleration) << ',' << format_double(p.lat_acceleration) << '\n';
    }
  }
}

void save_recording(const Recording& rec, const std::string& path_prefix) {
  auto tracks = open_out(path_prefix + "_tracks.csv");
  auto meta = open_out(path_prefix + "_tracksMeta.csv");
  auto rec_meta = open_out(path_prefix + "_recordingMeta.csv");
  serialize_recording(rec, tracks, meta, rec_meta);
  if (!tracks || !meta || !rec_meta) fail(ErrorKind::io, "failed writing recording " + path_prefix);
}

std::vector<Trajectory> ego_candidates(const Recording& rec) {
  std::vector<Trajectory> out;
  for (const auto& t : rec.trajectories)
    if (t.ru_class == RoadUserClass::car) out.push_back(t);
  return out;
}

}  // namespace unscene
