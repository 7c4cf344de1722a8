#include "unscene/pipeline.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include <json.hpp>

#include "unscene/hash.hpp"
#include "unscene/numerics.hpp"
#include "unscene/parallel.hpp"

namespace unscene {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace {

constexpr std::array<std::string_view, 6> kStageNames = {"ingest", "filter", "pfa", "grids", "cluster", "validate"};

}  // namespace

std::string_view to_string(Stage s) noexcept { return kStageNames[static_cast<std::size_t>(s)]; }

std::optional<Stage> parse_stage(std::string_view s) noexcept {
  for (std::size_t i = 0; i < kStageNames.size(); ++i)
    if (kStageNames[i] == s) return static_cast<Stage>(i);
  return std::nullopt;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::io, "cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, std::string_view content) {
  const fs::path p(path);
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorKind::io, "cannot write " + path);
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  if (!out) fail(ErrorKind::io, "short write to " + path);
}

PfaStageResult pfa_stage(const std::vector<ConcreteScenario>& scenarios, const PipelineConfig& cfg) {
  std::map<RoadUserClass, std::map<TrackId, const Trajectory*>> tracks;
  for (const auto& s : scenarios) {
    tracks[s.ego.ru_class].emplace(s.ego.track_id, &s.ego);
    tracks[s.challenger.ru_class].emplace(s.challenger.track_id, &s.challenger);
  }

  PfaStageResult out;
  for (const auto& [cls, members] : tracks) {
    std::size_t n = 0;
    for (const auto& [id, t] : members) n += t->points.size();
    if (n < 2) continue;
    Matrix data(n, kFeatureCount);
    std::size_t r = 0;
    for (const auto& [id, t] : members)
      for (const auto& p : t->points) {
        const auto f = feature_vector(p);
        for (std::size_t c = 0; c < kFeatureCount; ++c) data(r, c) = f[c];
        ++r;
      }
    // q = s + q_offset, capped at the feature count.
    const auto st = numerics::standardize(data);
    auto lambda = numerics::sym_eigen(numerics::covariance(st.values)).eigenvalues;
    for (auto& l : lambda) l = std::max(0.0, l);
    const std::size_t s = numerics::retained_dimension(lambda, cfg.var_pfa);
    PfaOptions opt{cfg.var_pfa, cfg.q_offset, std::min(s + cfg.q_offset, kFeatureCount), cfg.seed};
    out.per_class.push_back({cls, n, principal_feature_analysis(data, opt)});
  }

  std::set<std::size_t> superset;
  const ClassPfa* ped = nullptr;
  for (const auto& c : out.per_class)
    if (c.ru_class == RoadUserClass::pedestrian) ped = &c;
  if (cfg.pfa_superset == "pedestrian" && ped) {
    superset.insert(ped->result.selected_features.begin(), ped->result.selected_features.end());
  } else {
    for (const auto& c : out.per_class) superset.insert(c.result.selected_features.begin(), c.result.selected_features.end());
  }
  out.superset.assign(superset.begin(), superset.end());

  if (cfg.channels == "auto") {
    out.channels = channels_for_features(out.superset);
  } else {
    std::stringstream ss(cfg.channels);
    std::string item;
    while (std::getline(ss, item, ',')) {
      item.erase(std::remove_if(item.begin(), item.end(), ::isspace), item.end());
      if (item.empty()) continue;
      auto ch = parse_channel(item);
      if (!ch) fail(ErrorKind::argument, "unknown channel " + item);
      out.channels.push_back(*ch);
    }
    if (out.channels.empty()) fail(ErrorKind::argument, "channel list is empty");
  }
  return out;
}

std::string pfa_to_json(const PfaStageResult& r, const PipelineConfig& cfg) {
  auto names = [](const std::vector<std::size_t>& idx) {
    json a = json::array();
    for (auto i : idx) a.push_back(std::string(kFeatureNames[i]));
    return a;
  };
  json classes = json::object();
  for (const auto& c : r.per_class) {
    json clusters = json::array();
    for (const auto& [id, members] : c.result.feature_clusters) clusters.push_back(names(members));
    classes[std::string(to_string(c.ru_class))] = {
        {"n_samples", c.n_samples},
        {"s", c.result.s},
        {"q", c.result.q},
        {"selected_features", names(c.result.selected_features)},
        {"feature_clusters", clusters},
        {"cumulative_variance", c.result.cumulative_variance},
    };
  }
  json channels = json::array();
  for (auto ch : r.channels) channels.push_back(std::string(to_string(ch)));
  json doc = {{"schema_version", 1},
              {"var_pfa", cfg.var_pfa},
              {"q_offset", cfg.q_offset},
              {"superset_rule", cfg.pfa_superset},
              {"classes", classes},
              {"superset_features", names(r.superset)},
              {"channels", channels}};
  return doc.dump(2) + "\n";
}

std::vector<Channel> channels_from_pfa_json(const std::string& text) {
  std::vector<Channel> out;
  try {
    for (const auto& c : json::parse(text).at("channels")) {
      auto ch = parse_channel(c.get<std::string>());
      if (!ch) fail(ErrorKind::schema, "pfa.json: unknown channel");
      out.push_back(*ch);
    }
  } catch (const json::exception& e) {
    fail(ErrorKind::schema, std::string("pfa.json: ") + e.what());
  }
  return out;
}

std::optional<LabelSet> load_labels(const PipelineConfig& cfg, const std::string& out_dir) {
  if (!cfg.labels_path.empty()) return LabelSet{labels_from_json(read_file(cfg.labels_path)), cfg.labels_source};
  if (cfg.source == InputSource::synth) {
    const auto gt = synth::ground_truth_from_json(read_file((fs::path(out_dir) / artifacts::kGroundTruth).string()));
    return LabelSet{{gt.begin(), gt.end()}, LabelSource::ground_truth_synthetic};
  }
  return std::nullopt;
}

namespace {

struct StageRecord {
  std::string key;
  std::map<std::string, std::string> artifacts;  // relative path -> sha256
};

std::map<std::string, StageRecord> read_manifest(const fs::path& path) {
  std::map<std::string, StageRecord> out;
  std::error_code ec;
  if (!fs::exists(path, ec)) return out;
  try {
    const auto doc = json::parse(read_file(path.string()));
    for (const auto& s : doc.at("stages")) {
      StageRecord r;
      r.key = s.at("key").get<std::string>();
      for (const auto& [k, v] : s.at("artifacts").items()) r.artifacts[k] = v.get<std::string>();
      out[s.at("name").get<std::string>()] = std::move(r);
    }
  } catch (const std::exception&) {
    out.clear();  // unreadable manifest: recompute everything
  }
  return out;
}

class Runner {
 public:
  Runner(const PipelineConfig& cfg, const std::string& out_dir, const StageCallback& cb)
      : cfg_(cfg), dir_(out_dir), cb_(cb), previous_(read_manifest(dir_ / artifacts::kManifest)) {
    threads_ = cfg.threads;
  }

  RunOutcome run(Stage last) {
    fs::create_directories(dir_);
    std::string key;
    for (int i = 0; i <= static_cast<int>(last); ++i) {
      const auto stage = static_cast<Stage>(i);
      try {
        key = sha256_hex(key + "\n" + std::string(to_string(stage)) + "\n" + params(stage));
        execute(stage, key);
      } catch (const StageError&) {
        throw;
      } catch (const Error& e) {
        throw StageError(stage, e);
      } catch (const std::exception& e) {
        throw StageError(stage, Error(ErrorKind::io, e.what()));
      }
      if (stage == Stage::filter && scenarios_.empty()) {
        outcome_.no_relevant_scenarios = true;
        break;
      }
    }
    if (!outcome_.no_relevant_scenarios)
      for (int i = static_cast<int>(last) + 1; i < static_cast<int>(kStageNames.size()); ++i) {
        auto it = previous_.find(std::string(kStageNames[i]));
        if (it != previous_.end()) done_.emplace_back(it->first, it->second);
      }
    write_manifest();
    outcome_.n_scenarios = scenarios_.size();
    return outcome_;
  }

 private:
  fs::path at(const std::string& rel) const { return dir_ / rel; }

  std::string params(Stage s) const {
    auto kv = [this](std::initializer_list<const char*> keys) {
      std::string out;
      for (const char* k : keys) out += std::string(k) + "=" + cfg_.get(k) + "\n";
      return out;
    };
    switch (s) {
      case Stage::ingest:
        if (cfg_.source == InputSource::synth) return kv({"source", "synth_counts", "synth_frame_rate_hz", "seed"});
        return kv({"source"}) + "tracks=" + sha256_file(cfg_.input_prefix + "_tracks.csv") +
               "\nmeta=" + sha256_file(cfg_.input_prefix + "_tracksMeta.csv") +
               "\nrecmeta=" + sha256_file(cfg_.input_prefix + "_recordingMeta.csv") + "\n";
      case Stage::filter:
        return kv({"t_pet_s", "d_traj_m", "category"});
      case Stage::pfa:
        return kv({"var_pfa", "q_offset", "pfa_superset", "channels", "seed"});
      case Stage::grids:
        return kv({"a_gr_m", "r_gr_lon_px_per_m", "r_gr_lat_px_per_m", "grid_others_dynamics", "export_png",
                   "var_pca"});
      case Stage::cluster:
        return kv({"linkage"});
      case Stage::validate: {
        auto out = kv({"thresholds", "labels_source", "labels_path"});
        if (!cfg_.labels_path.empty()) out += "labels=" + sha256_file(cfg_.labels_path) + "\n";
        return out;
      }
    }
    return {};
  }

  bool cache_valid(Stage stage, const std::string& key) const {
    auto it = previous_.find(std::string(to_string(stage)));
    if (it == previous_.end() || it->second.key != key) return false;
    std::error_code ec;
    for (const auto& [rel, sha] : it->second.artifacts) {
      if (!fs::is_regular_file(at(rel), ec)) return false;
      if (sha256_file(at(rel).string()) != sha) return false;
    }
    return true;
  }

  void record(Stage stage, const std::string& key, const std::vector<std::string>& rels) {
    StageRecord r{key, {}};
    for (const auto& rel : rels) r.artifacts[rel] = sha256_file(at(rel).string());
    done_.emplace_back(std::string(to_string(stage)), std::move(r));
  }

  void execute(Stage stage, const std::string& key) {
    const bool cached = cache_valid(stage, key);
    if (cached) {
      done_.emplace_back(std::string(to_string(stage)), previous_.at(std::string(to_string(stage))));
    }
    switch (stage) {
      case Stage::ingest:
        if (!cached) record(stage, key, ingest());
        recording_ = load_recording(at(artifacts::kRecordingPrefix).string());
        break;
      case Stage::filter:
        if (!cached) {
          scenarios_ = extract_scenarios(recording_, FilterParams{cfg_.d_traj_m, cfg_.t_pet_s}, threads_);
          if (cfg_.category != "all") {
            const auto want = *parse_scenario_category(cfg_.category);
            std::erase_if(scenarios_, [&](const ConcreteScenario& s) { return s.category != want; });
          }
          write_file(at(artifacts::kScenarios).string(), scenarios_to_json(scenarios_));
          record(stage, key, {artifacts::kScenarios});
        } else {
          scenarios_ = scenarios_from_json(read_file(at(artifacts::kScenarios).string()), recording_);
        }
        break;
      case Stage::pfa:
        if (!cached) {
          const auto r = pfa_stage(scenarios_, cfg_);
          channels_ = r.channels;
          write_file(at(artifacts::kPfa).string(), pfa_to_json(r, cfg_));
          record(stage, key, {artifacts::kPfa});
        } else {
          channels_ = channels_from_pfa_json(read_file(at(artifacts::kPfa).string()));
        }
        break;
      case Stage::grids:
        if (!cached) {
          record(stage, key, grids());
        } else {
          cluster_input_ = cluster_input_from_json(read_file(at(artifacts::kClusterInput).string()));
        }
        break;
      case Stage::cluster:
        if (!cached) {
          dendrogram_ = hac(cluster_input_.rows, cfg_.linkage);
          dendrogram_.row_ids = cluster_input_.row_ids;
          write_file(at(artifacts::kDendrogram).string(), dendrogram_to_json(dendrogram_));
          record(stage, key, {artifacts::kDendrogram});
        } else {
          dendrogram_ = dendrogram_from_json(read_file(at(artifacts::kDendrogram).string()));
        }
        break;
      case Stage::validate:
        if (!cached) {
          std::vector<ValidationReport> reports;
          if (auto labels = load_labels(cfg_, dir_.string())) {
            const auto thresholds =
                cfg_.thresholds.empty() ? even_thresholds(dendrogram_, cfg_.thresholds_auto_count) : cfg_.thresholds;
            reports = accuracy_curve(dendrogram_, *labels, thresholds);
          }
          write_file(at(artifacts::kMetrics).string(), reports_to_json(reports));
          record(stage, key, {artifacts::kMetrics});
        }
        break;
    }
    outcome_.stages.emplace_back(stage, cached);
    if (cb_) cb_(stage, cached);
  }

  std::vector<std::string> ingest() {
    std::vector<std::string> rels;
    const std::string prefix = artifacts::kRecordingPrefix;
    fs::create_directories(at(prefix).parent_path());
    if (cfg_.source == InputSource::synth) {
      std::vector<synth::TemplateCount> counts;
      for (const auto& [name, n] : cfg_.synth_counts) counts.push_back({synth::standard_template(name), n});
      const auto gen = synth::generate(counts, cfg_.seed, cfg_.synth_frame_rate_hz);
      save_recording(gen.recording, at(prefix).string());
      write_file(at(artifacts::kGroundTruth).string(), synth::ground_truth_to_json(gen.ground_truth));
      rels.push_back(artifacts::kGroundTruth);
    } else {
      save_recording(load_recording(cfg_.input_prefix), at(prefix).string());
    }
    for (const char* suffix : {"_tracks.csv", "_tracksMeta.csv", "_recordingMeta.csv"}) rels.push_back(prefix + suffix);
    std::sort(rels.begin(), rels.end());
    return rels;
  }

  std::vector<std::string> grids() {
    GridParams gp;
    gp.a_gr = cfg_.a_gr_m;
    gp.r_lon = cfg_.r_gr_lon_px_per_m;
    gp.r_lat = cfg_.r_gr_lat_px_per_m;
    gp.channels = channels_;
    gp.others_dynamics = cfg_.grid_others_dynamics;
    auto build = build_cluster_input(scenarios_, gp, cfg_.var_pca, recording_.frame_rate, threads_);
    cluster_input_ = std::move(build.cluster_input);

    const auto grid_dir = at(artifacts::kGridsDir);
    fs::remove_all(grid_dir);
    fs::create_directories(grid_dir);
    std::vector<std::vector<std::string>> written(build.tensors.size());
    parallel_for(build.tensors.size(), threads_, [&](std::size_t i) {
      const auto& t = build.tensors[i];
      const std::string base = std::string(artifacts::kGridsDir) + "/" + t.scenario_id;
      write_file(at(base + ".json").string(), tensor_to_json(t, build.key_frames[i]));
      written[i].push_back(base + ".json");
      if (cfg_.export_png)
        for (std::size_t c = 0; c < t.channels.size(); ++c) {
          const auto png = channel_png(t.channels[c]);
          const auto rel = base + "_" + std::string(to_string(t.channel_names[c])) + ".png";
          write_file(at(rel).string(), std::string_view(reinterpret_cast<const char*>(png.data()), png.size()));
          written[i].push_back(rel);
        }
    });
    write_file(at(artifacts::kClusterInput).string(), cluster_input_to_json(cluster_input_));
    std::vector<std::string> rels{artifacts::kClusterInput};
    for (auto& w : written) rels.insert(rels.end(), w.begin(), w.end());
    std::sort(rels.begin(), rels.end());
    return rels;
  }

  void write_manifest() {
    json config = json::object();
    for (const auto& [k, v] : cfg_.canonical_entries()) config[k] = v;
    json stages = json::array();
    for (const auto& [name, r] : done_) {
      json arts = json::object();
      for (const auto& [rel, sha] : r.artifacts) arts[rel] = sha;
      stages.push_back({{"name", name}, {"key", r.key}, {"artifacts", arts}});
    }
    json doc = {{"schema_version", 1},
                {"status", outcome_.no_relevant_scenarios ? "no relevant scenarios" : "ok"},
                {"config", config},
                {"stages", stages}};
    write_file(at(artifacts::kManifest).string(), doc.dump(2) + "\n");
  }

  const PipelineConfig& cfg_;
  fs::path dir_;
  StageCallback cb_;
  std::map<std::string, StageRecord> previous_;
  std::vector<std::pair<std::string, StageRecord>> done_;
  unsigned threads_ = 1;
  RunOutcome outcome_;

  Recording recording_;
  std::vector<ConcreteScenario> scenarios_;
  std::vector<Channel> channels_;
  ClusterInputMatrix cluster_input_;
  Dendrogram dendrogram_;
};

}  // namespace

RunOutcome run_pipeline(const PipelineConfig& cfg, const std::string& out_dir, Stage last,
                        const StageCallback& on_stage) {
  cfg.validate();
  return Runner(cfg, out_dir, on_stage).run(last);
}

}  // namespace unscene
