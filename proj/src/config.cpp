#include "unscene/config.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include "unscene/error.hpp"

namespace unscene {

namespace {

std::string trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return std::string(s);
}

std::vector<std::string> split(std::string_view s, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (start <= s.size()) {
    auto pos = s.find(sep, start);
    auto item = trim(s.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
    if (!item.empty()) out.push_back(item);
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

double to_double(const std::string& key, const std::string& v) {
  double out = 0;
  auto res = std::from_chars(v.data(), v.data() + v.size(), out);
  if (res.ec != std::errc{} || res.ptr != v.data() + v.size())
    fail(ErrorKind::argument, "config: " + key + " expects a number, got '" + v + "'");
  return out;
}

std::uint64_t to_uint(const std::string& key, const std::string& v) {
  std::uint64_t out = 0;
  auto res = std::from_chars(v.data(), v.data() + v.size(), out);
  if (res.ec != std::errc{} || res.ptr != v.data() + v.size())
    fail(ErrorKind::argument, "config: " + key + " expects a non-negative integer, got '" + v + "'");
  return out;
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  fail(ErrorKind::argument, "config: " + key + " expects true/false, got '" + v + "'");
}

struct Field {
  std::function<void(PipelineConfig&, const std::string&)> set;
  std::function<std::string(const PipelineConfig&)> get;
  bool affects_results = true;
};

template <typename T>
Field number_field(T PipelineConfig::*member) {
  return {[member](PipelineConfig& c, const std::string& v) {
            if constexpr (std::is_floating_point_v<T>)
              c.*member = to_double("value", v);
            else
              c.*member = static_cast<T>(to_uint("value", v));
          },
          [member](const PipelineConfig& c) {
            if constexpr (std::is_floating_point_v<T>)
              return format_double(c.*member);
            else
              return std::to_string(c.*member);
          }};
}

Field string_field(std::string PipelineConfig::*member) {
  return {[member](PipelineConfig& c, const std::string& v) { c.*member = v; },
          [member](const PipelineConfig& c) { return c.*member; }};
}

Field bool_field(bool PipelineConfig::*member) {
  return {[member](PipelineConfig& c, const std::string& v) { c.*member = to_bool("value", v); },
          [member](const PipelineConfig& c) { return std::string(c.*member ? "true" : "false"); }};
}

const std::map<std::string, Field>& fields() {
  static const std::map<std::string, Field> kFields = [] {
    std::map<std::string, Field> f;
    f["source"] = {[](PipelineConfig& c, const std::string& v) {
                     if (v == "synth") c.source = InputSource::synth;
                     else if (v == "csv") c.source = InputSource::csv;
                     else fail(ErrorKind::argument, "config: source must be synth or csv");
                   },
                   [](const PipelineConfig& c) { return std::string(c.source == InputSource::synth ? "synth" : "csv"); }};
    f["input_prefix"] = string_field(&PipelineConfig::input_prefix);
    f["synth_counts"] = {[](PipelineConfig& c, const std::string& v) {
                           c.synth_counts.clear();
                           for (const auto& item : split(v, ',')) {
                             auto parts = split(item, ':');
                             if (parts.size() != 2) fail(ErrorKind::argument, "config: synth_counts expects name:count");
                             auto name = synth::parse_template_name(parts[0]);
                             if (!name) fail(ErrorKind::argument, "config: unknown template " + parts[0]);
                             c.synth_counts.emplace_back(*name, static_cast<int>(to_uint("synth_counts", parts[1])));
                           }
                         },
                         [](const PipelineConfig& c) {
                           std::string out;
                           for (const auto& [n, k] : c.synth_counts) {
                             if (!out.empty()) out += ',';
                             out += std::string(synth::to_string(n)) + ":" + std::to_string(k);
                           }
                           return out;
                         }};
    f["synth_frame_rate_hz"] = number_field(&PipelineConfig::synth_frame_rate_hz);
    f["t_pet_s"] = number_field(&PipelineConfig::t_pet_s);
    f["d_traj_m"] = number_field(&PipelineConfig::d_traj_m);
    f["var_pfa"] = number_field(&PipelineConfig::var_pfa);
    f["q_offset"] = number_field(&PipelineConfig::q_offset);
    f["pfa_superset"] = string_field(&PipelineConfig::pfa_superset);
    f["a_gr_m"] = number_field(&PipelineConfig::a_gr_m);
    f["r_gr_lon_px_per_m"] = number_field(&PipelineConfig::r_gr_lon_px_per_m);
    f["r_gr_lat_px_per_m"] = number_field(&PipelineConfig::r_gr_lat_px_per_m);
    f["channels"] = string_field(&PipelineConfig::channels);
    f["grid_others_dynamics"] = bool_field(&PipelineConfig::grid_others_dynamics);
    f["export_png"] = bool_field(&PipelineConfig::export_png);
    f["var_pca"] = number_field(&PipelineConfig::var_pca);
    f["linkage"] = {[](PipelineConfig& c, const std::string& v) {
                      auto l = parse_linkage(v);
                      if (!l) fail(ErrorKind::argument, "config: unknown linkage " + v);
                      c.linkage = *l;
                    },
                    [](const PipelineConfig& c) { return std::string(to_string(c.linkage)); }};
    f["seed"] = number_field(&PipelineConfig::seed);
    f["thresholds"] = {[](PipelineConfig& c, const std::string& v) {
                         c.thresholds.clear();
                         if (v.rfind("auto:", 0) == 0) {
                           c.thresholds_auto_count = to_uint("thresholds", v.substr(5));
                           return;
                         }
                         for (const auto& item : split(v, ',')) c.thresholds.push_back(to_double("thresholds", item));
                       },
                       [](const PipelineConfig& c) {
                         if (c.thresholds.empty()) return "auto:" + std::to_string(c.thresholds_auto_count);
                         std::string out;
                         for (double t : c.thresholds) {
                           if (!out.empty()) out += ',';
                           out += format_double(t);
                         }
                         return out;
                       }};
    f["category"] = string_field(&PipelineConfig::category);
    f["labels_path"] = string_field(&PipelineConfig::labels_path);
    f["labels_source"] = {[](PipelineConfig& c, const std::string& v) {
                            auto s = parse_label_source(v);
                            if (!s) fail(ErrorKind::argument, "config: unknown labels_source " + v);
                            c.labels_source = *s;
                          },
                          [](const PipelineConfig& c) { return std::string(to_string(c.labels_source)); }};
    auto threads = number_field(&PipelineConfig::threads);
    threads.affects_results = false;
    f["threads"] = threads;
    return f;
  }();
  return kFields;
}

}  // namespace

void PipelineConfig::set(const std::string& key, const std::string& value) {
  auto it = fields().find(key);
  if (it == fields().end()) fail(ErrorKind::argument, "config: unknown key '" + key + "'");
  try {
    it->second.set(*this, trim(value));
  } catch (const Error& e) {
    fail(ErrorKind::argument, "config: " + key + ": " + e.what());
  }
}

std::string PipelineConfig::get(const std::string& key) const {
  auto it = fields().find(key);
  if (it == fields().end()) fail(ErrorKind::argument, "config: unknown key '" + key + "'");
  return it->second.get(*this);
}

std::vector<std::string> PipelineConfig::keys() {
  std::vector<std::string> out;
  for (const auto& [k, f] : fields()) out.push_back(k);
  return out;
}

std::vector<std::pair<std::string, std::string>> PipelineConfig::canonical_entries() const {
  std::vector<std::pair<std::string, std::string>> out;
  for (const auto& [k, f] : fields())
    if (f.affects_results) out.emplace_back(k, f.get(*this));
  return out;
}

void PipelineConfig::validate() const {
  if (source == InputSource::csv && input_prefix.empty())
    fail(ErrorKind::argument, "config: source=csv requires input_prefix");
  if (!(synth_frame_rate_hz > 0)) fail(ErrorKind::argument, "config: synth_frame_rate_hz must be > 0");
  unscene::validate(FilterParams{d_traj_m, t_pet_s});
  if (!(var_pfa > 0 && var_pfa < 1)) fail(ErrorKind::argument, "config: var_pfa must be in (0, 1)");
  if (q_offset < 1) fail(ErrorKind::argument, "config: q_offset must be >= 1");
  if (pfa_superset != "union" && pfa_superset != "pedestrian")
    fail(ErrorKind::argument, "config: pfa_superset must be union or pedestrian");
  GridParams gp{a_gr_m, r_gr_lon_px_per_m, r_gr_lat_px_per_m};
  unscene::validate(gp);
  if (channels != "auto")
    for (const auto& c : split(channels, ','))
      if (!parse_channel(c)) fail(ErrorKind::argument, "config: unknown channel " + c);
  if (!(var_pca > 0 && var_pca <= 1)) fail(ErrorKind::argument, "config: var_pca must be in (0, 1]");
  if (category != "all" && !parse_scenario_category(category))
    fail(ErrorKind::argument, "config: category must be all, e_to_v, e_to_p or e_to_b");
  if (thresholds.empty() && thresholds_auto_count == 0)
    fail(ErrorKind::argument, "config: thresholds needs at least one value");
  if (!std::is_sorted(thresholds.begin(), thresholds.end()))
    fail(ErrorKind::argument, "config: thresholds must be ascending");
  for (double t : thresholds)
    if (!(t >= 0)) fail(ErrorKind::argument, "config: thresholds must be >= 0");
}

PipelineConfig parse_config(const std::string& text) {
  PipelineConfig cfg;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    auto t = trim(line);
    if (t.empty()) continue;
    auto eq = t.find('=');
    if (eq == std::string::npos)
      fail(ErrorKind::argument, "config line " + std::to_string(lineno) + ": expected key = value");
    cfg.set(trim(std::string_view(t).substr(0, eq)), trim(std::string_view(t).substr(eq + 1)));
  }
  return cfg;
}

PipelineConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::io, "cannot open config " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

}  // namespace unscene
