#include "unscene/grid.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <numbers>

#include <json.hpp>

#include "unscene/error.hpp"
#include "unscene/parallel.hpp"

namespace unscene {

std::string_view to_string(Channel c) noexcept {
  switch (c) {
    case Channel::occupancy: return "occupancy";
    case Channel::vx: return "vx";
    case Channel::vy: return "vy";
    case Channel::ax: return "ax";
    case Channel::ay: return "ay";
  }
  return "occupancy";
}

std::optional<Channel> parse_channel(std::string_view s) noexcept {
  for (auto c : {Channel::occupancy, Channel::vx, Channel::vy, Channel::ax, Channel::ay})
    if (to_string(c) == s) return c;
  return std::nullopt;
}

std::vector<Channel> channels_for_features(const std::vector<std::size_t>& features) {
  // Feature order follows kFeatureNames; positions and heading fold into occupancy.
  static constexpr std::array<std::optional<Channel>, kFeatureCount> kMap = {
      std::nullopt, std::nullopt, std::nullopt, Channel::vx, Channel::vy, Channel::ax,
      Channel::ay,  Channel::vx,  Channel::vy,  Channel::ax, Channel::ay};
  bool used[5] = {true, false, false, false, false};
  for (auto f : features)
    if (f < kFeatureCount && kMap[f]) used[static_cast<int>(*kMap[f])] = true;
  std::vector<Channel> out;
  for (int c = 0; c < 5; ++c)
    if (used[c]) out.push_back(static_cast<Channel>(c));
  return out;
}

namespace {

std::size_t integral_cells(double a, double r, const char* what) {
  const double cells = a * r;
  const double rounded = std::round(cells);
  if (std::abs(cells - rounded) > 1e-9 || rounded < 1)
    fail(ErrorKind::argument, std::string("grid: a_gr * ") + what + " must be a positive integer");
  return static_cast<std::size_t>(rounded);
}

double quantize(double v) { return std::round(v / kValueQuantum) * kValueQuantum + 0.0; }

}  // namespace

std::size_t GridParams::rows() const { return integral_cells(a_gr, r_lon, "r_lon"); }
std::size_t GridParams::cols() const { return integral_cells(a_gr, r_lat, "r_lat"); }

void validate(const GridParams& p) {
  if (!(p.a_gr > 0)) fail(ErrorKind::argument, "grid: a_gr must be > 0");
  if (!(p.r_lon > 0) || !(p.r_lat > 0)) fail(ErrorKind::argument, "grid: resolutions must be > 0");
  if (p.channels.empty()) fail(ErrorKind::argument, "grid: channel list must not be empty");
  (void)p.rows();
  (void)p.cols();
}

std::vector<double> yaw_rate(const std::vector<double>& heading, double frame_rate) {
  const std::size_t n = heading.size();
  if (n < 2) fail(ErrorKind::argument, "yaw_rate: need at least 2 samples");
  std::vector<double> unwrapped(n);
  unwrapped[0] = heading[0];
  for (std::size_t k = 1; k < n; ++k)
    unwrapped[k] = unwrapped[k - 1] + normalize_angle(heading[k] - heading[k - 1]);
  std::vector<double> raw(n);
  for (std::size_t k = 0; k < n; ++k) {
    const std::size_t lo = k == 0 ? 0 : k - 1;
    const std::size_t hi = k + 1 == n ? n - 1 : k + 1;
    raw[k] = (unwrapped[hi] - unwrapped[lo]) * frame_rate / static_cast<double>(hi - lo);
  }
  std::vector<double> out(n);
  for (std::size_t k = 0; k < n; ++k) {
    const std::size_t lo = k < 2 ? 0 : k - 2;
    const std::size_t hi = std::min(n - 1, k + 2);
    double s = 0.0;
    for (std::size_t j = lo; j <= hi; ++j) s += raw[j];
    out[k] = s / static_cast<double>(hi - lo + 1);
  }
  return out;
}

namespace {

// Index of the first maximum of |yaw rate|, compared at kValueQuantum
// resolution so a constant-rate turn resolves to its first frame.
std::pair<std::size_t, double> peak_yaw(const Trajectory& t, double frame_rate) {
  if (t.points.size() < 2) return {0, 0.0};
  std::vector<double> heading;
  heading.reserve(t.points.size());
  for (const auto& p : t.points) heading.push_back(p.heading);
  const auto rate = yaw_rate(heading, frame_rate);
  std::size_t arg = 0;
  double best = -1.0;
  for (std::size_t k = 0; k < rate.size(); ++k) {
    const double v = quantize(std::abs(rate[k]));
    if (v > best) {
      best = v;
      arg = k;
    }
  }
  return {arg, best};
}

}  // namespace

KeyFrame key_frame(const ConcreteScenario& s, double frame_rate) {
  if (s.ego.points.empty() || s.challenger.points.empty())
    fail(ErrorKind::argument, "key_frame: ego and challenger windows must be non-empty");
  const auto [ego_arg, ego_max] = peak_yaw(s.ego, frame_rate);
  const auto [chal_arg, chal_max] = peak_yaw(s.challenger, frame_rate);
  KeyFrame kf;
  if (ego_max >= chal_max) {
    kf.frame = s.ego.first_frame() + static_cast<std::int64_t>(ego_arg);
    kf.source = KeyFrameSource::ego;
  } else {
    kf.frame = s.challenger.first_frame() + static_cast<std::int64_t>(chal_arg);
    kf.source = KeyFrameSource::challenger;
    if (!s.ego.covers(kf.frame)) {
      kf.frame = std::clamp(kf.frame, s.ego.first_frame(), s.ego.last_frame());
      kf.clamped = true;
    }
  }
  const auto& p = s.ego.at(kf.frame);
  kf.ego_pose = {p.x_center, p.y_center, p.heading};
  return kf;
}

Vec2 rotate_to_ego(const EgoPose& ego, Vec2 v) {
  const double c = std::cos(ego.heading), s = std::sin(ego.heading);
  return {c * v.x + s * v.y, -s * v.x + c * v.y};
}

Vec2 to_ego_frame(const EgoPose& ego, Vec2 p) { return rotate_to_ego(ego, {p.x - ego.x, p.y - ego.y}); }

Vec2 to_world_frame(const EgoPose& ego, Vec2 p) {
  const double c = std::cos(ego.heading), s = std::sin(ego.heading);
  return {ego.x + c * p.x - s * p.y, ego.y + s * p.x + c * p.y};
}

std::optional<Cell> cell_of(const GridParams& p, Vec2 q) {
  const double half = p.a_gr / 2.0;
  const double r = std::floor((quantize(q.x) + half) * p.r_lon);
  const double c = std::floor((quantize(q.y) + half) * p.r_lat);
  if (r < 0 || c < 0 || r >= static_cast<double>(p.rows()) || c >= static_cast<double>(p.cols()))
    return std::nullopt;
  return Cell{static_cast<std::size_t>(r), static_cast<std::size_t>(c)};
}

namespace {

void paint_max(Matrix& m, Cell c, double v) { m(c.row, c.col) = std::max(m(c.row, c.col), v); }

void paint_footprint(Matrix& occ, const GridParams& p, const EgoPose& ego, const Trajectory& t,
                     const TrackPoint& at) {
  const Vec2 center = to_ego_frame(ego, {at.x_center, at.y_center});
  if (auto c = cell_of(p, center)) paint_max(occ, *c, kOccupancyOther);
  if (!(t.width > 0 && t.length > 0)) return;
  const double rel = at.heading - ego.heading;
  const double cr = std::cos(rel), sr = std::sin(rel);
  const double half = p.a_gr / 2.0;
  for (std::size_t r = 0; r < occ.rows(); ++r) {
    const double x = (static_cast<double>(r) + 0.5) / p.r_lon - half;
    for (std::size_t col = 0; col < occ.cols(); ++col) {
      const double y = (static_cast<double>(col) + 0.5) / p.r_lat - half;
      const double dx = x - center.x, dy = y - center.y;
      const double lon = quantize(cr * dx + sr * dy);
      const double lat = quantize(-sr * dx + cr * dy);
      if (std::abs(lon) <= t.length / 2.0 && std::abs(lat) <= t.width / 2.0)
        paint_max(occ, {r, col}, kOccupancyOther);
    }
  }
}

double channel_value(Channel ch, const EgoPose& ego, const TrackPoint& pt) {
  switch (ch) {
    case Channel::vx: return rotate_to_ego(ego, {pt.x_velocity, pt.y_velocity}).x;
    case Channel::vy: return rotate_to_ego(ego, {pt.x_velocity, pt.y_velocity}).y;
    case Channel::ax: return rotate_to_ego(ego, {pt.x_acceleration, pt.y_acceleration}).x;
    case Channel::ay: return rotate_to_ego(ego, {pt.x_acceleration, pt.y_acceleration}).y;
    case Channel::occupancy: break;
  }
  return 0.0;
}

}  // namespace

ScenarioTensor rasterize(const ConcreteScenario& s, const KeyFrame& kf, const GridParams& p) {
  validate(p);
  const std::size_t rows = p.rows(), cols = p.cols();
  ScenarioTensor t{s.scenario_id.str(), p.channels, std::vector<Matrix>(p.channels.size(), Matrix(rows, cols))};
  const auto& ego = kf.ego_pose;

  for (std::size_t ci = 0; ci < p.channels.size(); ++ci) {
    Matrix& g = t.channels[ci];
    const Channel ch = p.channels[ci];
    if (ch == Channel::occupancy) {
      for (const auto& o : s.others)
        if (o.covers(kf.frame)) paint_footprint(g, p, ego, o, o.at(kf.frame));
      for (const auto& pt : s.challenger.points)
        if (auto c = cell_of(p, to_ego_frame(ego, {pt.x_center, pt.y_center}))) paint_max(g, *c, kOccupancyChallenger);
      for (const auto& pt : s.ego.points)
        if (auto c = cell_of(p, to_ego_frame(ego, {pt.x_center, pt.y_center}))) paint_max(g, *c, kOccupancyEgo);
      continue;
    }
    if (p.others_dynamics)
      for (const auto& o : s.others)
        if (o.covers(kf.frame)) {
          const auto& pt = o.at(kf.frame);
          if (auto c = cell_of(p, to_ego_frame(ego, {pt.x_center, pt.y_center})))
            g(c->row, c->col) = quantize(channel_value(ch, ego, pt));
        }
    // Later samples overwrite earlier ones; the ego is painted last.
    for (const auto* traj : {&s.challenger, &s.ego})
      for (const auto& pt : traj->points)
        if (auto c = cell_of(p, to_ego_frame(ego, {pt.x_center, pt.y_center})))
          g(c->row, c->col) = quantize(channel_value(ch, ego, pt));
  }
  return t;
}

std::vector<double> flatten(const ScenarioTensor& t) {
  std::vector<double> out;
  if (t.channels.empty()) return out;
  const std::size_t rows = t.channels.front().rows(), cols = t.channels.front().cols();
  out.reserve(rows * cols * t.channels.size());
  for (const auto& g : t.channels)
    for (std::size_t c = 0; c < cols; ++c)
      for (std::size_t r = 0; r < rows; ++r) out.push_back(g(r, c));
  return out;
}

ScenarioTensor unflatten(const std::vector<double>& v, std::size_t rows, std::size_t cols,
                         const std::vector<Channel>& channels) {
  if (v.size() != rows * cols * channels.size()) fail(ErrorKind::argument, "unflatten: length mismatch");
  ScenarioTensor t{"", channels, std::vector<Matrix>(channels.size(), Matrix(rows, cols))};
  std::size_t k = 0;
  for (auto& g : t.channels)
    for (std::size_t c = 0; c < cols; ++c)
      for (std::size_t r = 0; r < rows; ++r) g(r, c) = v[k++];
  return t;
}

GridBuild build_cluster_input(const std::vector<ConcreteScenario>& input, const GridParams& gp, double var_pca,
                              double frame_rate, unsigned threads) {
  if (input.size() < 2) fail(ErrorKind::argument, "build_cluster_input: need at least 2 scenarios");
  validate(gp);
  std::vector<const ConcreteScenario*> scenarios;
  for (const auto& s : input) scenarios.push_back(&s);
  std::stable_sort(scenarios.begin(), scenarios.end(),
                   [](auto* a, auto* b) { return a->scenario_id < b->scenario_id; });

  const std::size_t n = scenarios.size();
  GridBuild out;
  out.key_frames.resize(n);
  out.tensors.resize(n);
  std::vector<std::vector<double>> flat(n);
  parallel_for(n, threads, [&](std::size_t i) {
    out.key_frames[i] = key_frame(*scenarios[i], frame_rate);
    out.tensors[i] = rasterize(*scenarios[i], out.key_frames[i], gp);
    flat[i] = flatten(out.tensors[i]);
  });

  const std::size_t width = flat.front().size();
  Matrix stacked(n, width);
  for (std::size_t i = 0; i < n; ++i) std::copy(flat[i].begin(), flat[i].end(), stacked.row(i).begin());
  auto standardized = numerics::standardize(stacked);

  auto& m = out.cluster_input;
  for (std::size_t c = 0; c < width; ++c)
    if (!standardized.zero_variance[c]) m.kept_pixels.push_back(c);
  m.dropped_pixels = width - m.kept_pixels.size();
  if (m.kept_pixels.empty()) fail(ErrorKind::argument, "build_cluster_input: all scenario grids are identical");

  numerics::StandardizedMatrix kept{Matrix(n, m.kept_pixels.size()), {}, {}, {}};
  for (std::size_t k = 0; k < m.kept_pixels.size(); ++k) {
    const auto c = m.kept_pixels[k];
    for (std::size_t i = 0; i < n; ++i) kept.values(i, k) = standardized.values(i, c);
    kept.col_means.push_back(standardized.col_means[c]);
    kept.col_stds.push_back(standardized.col_stds[c]);
    kept.zero_variance.push_back(false);
  }
  auto pca = numerics::pca_reduce_standardized(std::move(kept), var_pca);
  m.rows = std::move(pca.reduced);
  m.pca_model = std::move(pca.model);
  for (const auto* s : scenarios) m.row_ids.push_back(s->scenario_id.str());
  return out;
}

std::string tensor_to_json(const ScenarioTensor& t, const KeyFrame& kf) {
  using json = nlohmann::ordered_json;
  const std::size_t rows = t.channels.empty() ? 0 : t.channels.front().rows();
  const std::size_t cols = t.channels.empty() ? 0 : t.channels.front().cols();
  json channels = json::object();
  for (std::size_t i = 0; i < t.channels.size(); ++i) {
    json grid = json::array();
    for (std::size_t r = 0; r < rows; ++r) {
      const auto row = t.channels[i].row(r);
      grid.push_back(std::vector<double>(row.begin(), row.end()));
    }
    channels[std::string(to_string(t.channel_names[i]))] = std::move(grid);
  }
  json doc = {
      {"schema_version", 1},
      {"scenario_id", t.scenario_id},
      {"shape", {rows, cols, t.channels.size()}},
      {"key_frame",
       {{"frame", kf.frame},
        {"source", kf.source == KeyFrameSource::ego ? "ego" : "challenger"},
        {"clamped", kf.clamped},
        {"ego_pose", {{"x", kf.ego_pose.x}, {"y", kf.ego_pose.y}, {"heading", kf.ego_pose.heading}}}}},
      {"channels", std::move(channels)},
  };
  return doc.dump() + "\n";
}

ScenarioTensor tensor_from_json(const std::string& text) {
  try {
    const auto doc = nlohmann::ordered_json::parse(text);
    ScenarioTensor t;
    t.scenario_id = doc.at("scenario_id").get<std::string>();
    for (const auto& [name, grid] : doc.at("channels").items()) {
      auto ch = parse_channel(name);
      if (!ch) fail(ErrorKind::schema, "grid json: unknown channel " + name);
      t.channel_names.push_back(*ch);
      t.channels.push_back(Matrix::from_rows(grid.get<std::vector<std::vector<double>>>()));
    }
    return t;
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::schema, std::string("grid json: ") + e.what());
  }
}

std::string cluster_input_to_json(const ClusterInputMatrix& m) {
  using json = nlohmann::ordered_json;
  json rows = json::array();
  for (std::size_t i = 0; i < m.rows.rows(); ++i) {
    const auto r = m.rows.row(i);
    rows.push_back(std::vector<double>(r.begin(), r.end()));
  }
  json doc = {{"schema_version", 1},
              {"row_ids", m.row_ids},
              {"s", m.pca_model.s},
              {"retained_variance", m.pca_model.retained_variance},
              {"eigenvalues", m.pca_model.eigenvalues},
              {"kept_pixels", m.kept_pixels},
              {"dropped_pixels", m.dropped_pixels},
              {"rows", std::move(rows)}};
  return doc.dump() + "\n";
}

ClusterInputMatrix cluster_input_from_json(const std::string& text) {
  try {
    const auto doc = nlohmann::json::parse(text);
    ClusterInputMatrix m;
    m.row_ids = doc.at("row_ids").get<std::vector<std::string>>();
    m.pca_model.s = doc.at("s").get<std::size_t>();
    m.pca_model.retained_variance = doc.at("retained_variance").get<double>();
    m.pca_model.eigenvalues = doc.at("eigenvalues").get<std::vector<double>>();
    m.kept_pixels = doc.at("kept_pixels").get<std::vector<std::size_t>>();
    m.dropped_pixels = doc.at("dropped_pixels").get<std::size_t>();
    const auto rows = doc.at("rows").get<std::vector<std::vector<double>>>();
    m.rows = rows.empty() ? Matrix() : Matrix::from_rows(rows);
    if (m.rows.rows() != m.row_ids.size()) {
      // Zero-dimensional rows serialize as empty arrays.
      m.rows = Matrix(m.row_ids.size(), 0);
    }
    return m;
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::schema, std::string("cluster_input.json: ") + e.what());
  }
}

std::vector<unsigned char> channel_png(const Matrix& g) {
  const auto rows = static_cast<png_uint_32>(g.rows()), cols = static_cast<png_uint_32>(g.cols());
  double lo = 0.0, hi = 0.0;
  for (double v : g.data()) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  std::vector<unsigned char> pixels(g.rows() * g.cols());
  for (std::size_t i = 0; i < pixels.size(); ++i) {
    const double v = g.data()[i];
    pixels[i] = hi > lo ? static_cast<unsigned char>(std::lround(255.0 * (v - lo) / (hi - lo))) : 0;
  }

  std::vector<unsigned char> out;
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!png) fail(ErrorKind::io, "png: cannot create writer");
  png_infop info = png_create_info_struct(png);
  if (!info || setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    fail(ErrorKind::io, "png: encoding failed");
  }
  png_set_write_fn(
      png, &out,
      [](png_structp p, png_bytep data, png_size_t len) {
        auto* buf = static_cast<std::vector<unsigned char>*>(png_get_io_ptr(p));
        buf->insert(buf->end(), data, data + len);
      },
      nullptr);
  png_set_IHDR(png, info, cols, rows, 8, PNG_COLOR_TYPE_GRAY, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
               PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  // Image top row is the most forward grid row.
  for (std::size_t r = 0; r < g.rows(); ++r) png_write_row(png, pixels.data() + (g.rows() - 1 - r) * g.cols());
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
  return out;
}

}  // namespace unscene
