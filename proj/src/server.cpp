#include "unscene/server.hpp"

#include <charconv>
#include <cmath>
#include <filesystem>
#include <mutex>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "unscene/error.hpp"
#include "unscene/filter.hpp"
#include "unscene/grid.hpp"
#include "unscene/hac.hpp"
#include "unscene/pipeline.hpp"
#include "unscene/validation.hpp"

namespace unscene {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace {

HttpResponse json_response(const json& j, int status = 200) { return {status, "application/json", j.dump() + "\n"}; }

HttpResponse error_response(int status, const std::string& message) {
  return json_response({{"error", message}}, status);
}

json trajectory_json(const Trajectory& t) {
  json frames = json::array(), x = json::array(), y = json::array(), heading = json::array();
  json vx = json::array(), vy = json::array();
  for (const auto& p : t.points) {
    frames.push_back(p.frame);
    x.push_back(p.x_center);
    y.push_back(p.y_center);
    heading.push_back(p.heading);
    vx.push_back(p.x_velocity);
    vy.push_back(p.y_velocity);
  }
  return {{"track_id", t.track_id}, {"class", to_string(t.ru_class)}, {"width", t.width}, {"length", t.length},
          {"frames", frames},       {"x", x},                         {"y", y},             {"heading", heading},
          {"x_velocity", vx},       {"y_velocity", vy}};
}

std::optional<double> parse_threshold(const std::string& s) {
  double v = 0;
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc{} || res.ptr != s.data() + s.size() || !std::isfinite(v) || v < 0) return std::nullopt;
  return v;
}

}  // namespace

struct ExplorerService::Impl {
  fs::path dir;
  Dendrogram dendrogram;
  Recording recording;
  std::vector<ConcreteScenario> scenarios;
  std::map<std::string, std::size_t> scenario_index;
  std::string dendrogram_text, scenarios_text, metrics_text;

  std::mutex labels_mutex;
  std::map<std::string, std::string> labels;

  httplib::Server http;
  std::thread thread;
  int bound_port = -1;

  HttpResponse clusters(const std::map<std::string, std::string>& query) {
    auto it = query.find("threshold");
    if (it == query.end()) return error_response(400, "missing threshold");
    const auto t = parse_threshold(it->second);
    if (!t) return error_response(400, "malformed threshold '" + it->second + "'");
    const auto assignment = cut(dendrogram, *t);
    const auto k = cluster_count(assignment);
    json members(k, json::array());
    json by_id = json::object();
    for (std::size_t i = 0; i < assignment.size(); ++i) {
      members[assignment[i]].push_back(dendrogram.row_ids[i]);
      by_id[dendrogram.row_ids[i]] = assignment[i];
    }
    json clusters = json::array();
    for (std::size_t c = 0; c < k; ++c) clusters.push_back({{"cluster_id", c}, {"members", members[c]}});
    return json_response({{"threshold", *t}, {"n_clusters", k}, {"assignments", by_id}, {"clusters", clusters}});
  }

  HttpResponse scenario(const std::string& id) {
    auto it = scenario_index.find(id);
    if (it == scenario_index.end()) return error_response(404, "unknown scenario " + id);
    const auto& s = scenarios[it->second];
    const auto& r = s.interaction;
    json others = json::array();
    for (const auto& o : s.others) others.push_back(trajectory_json(o));
    json key_frame = nullptr;
    const auto grid_path = dir / artifacts::kGridsDir / (id + ".json");
    std::error_code ec;
    if (fs::is_regular_file(grid_path, ec)) key_frame = json::parse(read_file(grid_path.string())).at("key_frame");
    return json_response({{"id", id},
                          {"category", to_string(s.category)},
                          {"frame_window", {s.window.first, s.window.last}},
                          {"frame_rate", recording.frame_rate},
                          {"key_frame", key_frame},
                          {"interaction",
                           {{"ego_id", r.ego_id},
                            {"challenger_id", r.challenger_id},
                            {"min_distance_m", r.min_distance},
                            {"pet_s", r.pet},
                            {"ego_frame_at_min", r.ego_frame_at_min},
                            {"challenger_frame_at_min", r.challenger_frame_at_min}}},
                          {"ego", trajectory_json(s.ego)},
                          {"challenger", trajectory_json(s.challenger)},
                          {"others", others}});
  }

  HttpResponse grid(const std::string& id, const std::string& channel_name, bool png) {
    if (!scenario_index.count(id)) return error_response(404, "unknown scenario " + id);
    const auto channel = parse_channel(channel_name);
    if (!channel) return error_response(404, "unknown channel " + channel_name);
    const auto path = dir / artifacts::kGridsDir / (id + ".json");
    std::error_code ec;
    if (!fs::is_regular_file(path, ec)) return error_response(404, "no grid for " + id);
    const auto t = tensor_from_json(read_file(path.string()));
    for (std::size_t c = 0; c < t.channel_names.size(); ++c) {
      if (t.channel_names[c] != *channel) continue;
      const auto& g = t.channels[c];
      if (png) {
        const auto bytes = channel_png(g);
        return {200, "image/png", std::string(bytes.begin(), bytes.end())};
      }
      json values = json::array();
      for (std::size_t r = 0; r < g.rows(); ++r) {
        const auto row = g.row(r);
        values.push_back(std::vector<double>(row.begin(), row.end()));
      }
      return json_response({{"scenario_id", id}, {"channel", channel_name}, {"shape", {g.rows(), g.cols()}},
                            {"values", values}});
    }
    return error_response(404, "channel " + channel_name + " not in grid of " + id);
  }

  HttpResponse background(bool image) {
    const auto png = dir / "background.png";
    std::error_code ec;
    const bool has_image = fs::is_regular_file(png, ec);
    if (image) {
      if (!has_image) return error_response(404, "no background image");
      return {200, "image/png", read_file(png.string())};
    }
    const auto& e = recording.background_extent;
    return json_response({{"recording_id", recording.recording_id},
                          {"traffic_space_name", recording.traffic_space_name},
                          {"extent", std::isnan(e.x_min) ? json(nullptr)
                                                         : json{{"x_min", e.x_min},
                                                                {"y_min", e.y_min},
                                                                {"x_max", e.x_max},
                                                                {"y_max", e.y_max}}},
                          {"image", has_image ? json("/api/background/image") : json(nullptr)}});
  }

  HttpResponse get_labels() {
    std::lock_guard lock(labels_mutex);
    return {200, "application/json", labels_to_json(labels)};
  }

  HttpResponse post_labels(const std::string& body) {
    std::map<std::string, std::string> update;
    try {
      update = labels_from_json(body);
    } catch (const Error& e) {
      return error_response(400, e.what());
    }
    for (const auto& [id, label] : update)
      if (!scenario_index.count(id)) return error_response(404, "unknown scenario " + id);
    std::lock_guard lock(labels_mutex);
    auto next = labels;
    for (const auto& [id, label] : update) next[id] = label;
    const auto text = labels_to_json(next);
    const auto tmp = dir / (std::string(artifacts::kLabels) + ".tmp");
    write_file(tmp.string(), text);
    fs::rename(tmp, dir / artifacts::kLabels);
    labels = std::move(next);
    return {200, "application/json", text};
  }
};

ExplorerService::ExplorerService(std::string artifact_dir) : impl_(std::make_unique<Impl>()) {
  auto& m = *impl_;
  m.dir = std::move(artifact_dir);
  auto at = [&](const char* rel) { return (m.dir / rel).string(); };
  std::error_code ec;
  if (!fs::is_regular_file(at(artifacts::kDendrogram), ec))
    fail(ErrorKind::not_found, "no dendrogram.json in " + m.dir.string() + "; run the pipeline first");
  m.dendrogram_text = read_file(at(artifacts::kDendrogram));
  m.dendrogram = dendrogram_from_json(m.dendrogram_text);
  m.recording = load_recording(at(artifacts::kRecordingPrefix));
  m.scenarios_text = read_file(at(artifacts::kScenarios));
  m.scenarios = scenarios_from_json(m.scenarios_text, m.recording);
  for (std::size_t i = 0; i < m.scenarios.size(); ++i) m.scenario_index[m.scenarios[i].scenario_id.str()] = i;
  m.metrics_text = fs::is_regular_file(at(artifacts::kMetrics), ec) ? read_file(at(artifacts::kMetrics)) : "[]\n";
  if (fs::is_regular_file(at(artifacts::kLabels), ec)) m.labels = labels_from_json(read_file(at(artifacts::kLabels)));
}

ExplorerService::~ExplorerService() { stop(); }

HttpResponse ExplorerService::handle(const std::string& method, const std::string& path,
                                     const std::map<std::string, std::string>& query, const std::string& body) {
  auto& m = *impl_;
  auto segments = [&] {
    std::vector<std::string> out;
    std::size_t start = 1;
    while (start <= path.size()) {
      auto pos = path.find('/', start);
      out.push_back(path.substr(start, pos == std::string::npos ? std::string::npos : pos - start));
      if (pos == std::string::npos) break;
      start = pos + 1;
    }
    return out;
  }();
  try {
    if (segments.size() < 2 || segments[0] != "api") return error_response(404, "not found");
    const auto& what = segments[1];
    if (method == "POST") {
      if (what == "labels" && segments.size() == 2) return m.post_labels(body);
      return error_response(405, "method not allowed");
    }
    if (method != "GET") return error_response(405, "method not allowed");
    if (segments.size() == 2) {
      if (what == "dendrogram") return {200, "application/json", m.dendrogram_text};
      if (what == "clusters") return m.clusters(query);
      if (what == "scenarios") return {200, "application/json", m.scenarios_text};
      if (what == "metrics") return {200, "application/json", m.metrics_text};
      if (what == "labels") return m.get_labels();
      if (what == "background") return m.background(false);
    }
    if (segments.size() == 3 && what == "background" && segments[2] == "image") return m.background(true);
    if (segments.size() == 3 && what == "scenario") return m.scenario(segments[2]);
    if (segments.size() == 4 && what == "grid") {
      auto fmt = query.find("format");
      return m.grid(segments[2], segments[3], fmt != query.end() && fmt->second == "png");
    }
    return error_response(404, "not found");
  } catch (const std::exception& e) {
    return error_response(500, e.what());
  }
}

void ExplorerService::start(const std::string& host, int port) {
  auto& m = *impl_;
  auto route = [this](const httplib::Request& req, httplib::Response& res) {
    std::map<std::string, std::string> query;
    for (const auto& [k, v] : req.params) query.emplace(k, v);
    const auto r = handle(req.method, req.path, query, req.body);
    res.status = r.status;
    res.set_content(r.body, r.content_type);
  };
  m.http.Get(R"(/api/.*)", route);
  m.http.Post(R"(/api/.*)", route);
  if (port == 0) {
    m.bound_port = m.http.bind_to_any_port(host);
  } else {
    m.bound_port = m.http.bind_to_port(host, port) ? port : -1;
  }
  if (m.bound_port < 0) fail(ErrorKind::io, "cannot bind " + host + ":" + std::to_string(port));
  m.thread = std::thread([&m] { m.http.listen_after_bind(); });
  m.http.wait_until_ready();
}

int ExplorerService::port() const { return impl_->bound_port; }

void ExplorerService::wait() {
  if (impl_->thread.joinable()) impl_->thread.join();
}

void ExplorerService::stop() {
  if (!impl_) return;
  impl_->http.stop();
  if (impl_->thread.joinable()) impl_->thread.join();
}

}  // namespace unscene
