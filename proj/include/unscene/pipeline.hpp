#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "unscene/config.hpp"
#include "unscene/error.hpp"
#include "unscene/pfa.hpp"

namespace unscene {

enum class Stage { ingest, filter, pfa, grids, cluster, validate };

std::string_view to_string(Stage s) noexcept;
std::optional<Stage> parse_stage(std::string_view s) noexcept;

// Relative artifact locations inside an output directory.
namespace artifacts {
inline constexpr const char* kRecordingPrefix = "recording/recording";
inline constexpr const char* kGroundTruth = "ground_truth.json";
inline constexpr const char* kScenarios = "scenarios.json";
inline constexpr const char* kPfa = "pfa.json";
inline constexpr const char* kGridsDir = "grids";
inline constexpr const char* kClusterInput = "cluster_input.json";
inline constexpr const char* kDendrogram = "dendrogram.json";
inline constexpr const char* kMetrics = "metrics.json";
inline constexpr const char* kManifest = "run_manifest.json";
inline constexpr const char* kLabels = "labels.json";
}  // namespace artifacts

struct RunOutcome {
  bool no_relevant_scenarios = false;
  std::size_t n_scenarios = 0;
  std::vector<std::pair<Stage, bool>> stages;  // executed stages, true when served from cache
};

// Raised for failures inside a stage; wraps the original error kind.
class StageError : public Error {
 public:
  StageError(Stage stage, const Error& cause)
      : Error(cause.kind(), std::string(to_string(stage)) + ": " + cause.what()), stage_(stage) {}
  Stage stage() const noexcept { return stage_; }

 private:
  Stage stage_;
};

using StageCallback = std::function<void(Stage, bool cached)>;

// Runs ingest through `last`, reusing artifacts whose stage key and content
// hashes are unchanged since the previous run in out_dir.
RunOutcome run_pipeline(const PipelineConfig& cfg, const std::string& out_dir, Stage last = Stage::validate,
                        const StageCallback& on_stage = {});

// PFA over every road-user class taking part in the scenarios.
struct ClassPfa {
  RoadUserClass ru_class;
  std::size_t n_samples = 0;
  PfaResult result;
};

struct PfaStageResult {
  std::vector<ClassPfa> per_class;
  std::vector<std::size_t> superset;  // feature indices
  std::vector<Channel> channels;
};

PfaStageResult pfa_stage(const std::vector<ConcreteScenario>& scenarios, const PipelineConfig& cfg);
std::string pfa_to_json(const PfaStageResult& r, const PipelineConfig& cfg);
std::vector<Channel> channels_from_pfa_json(const std::string& text);

// Labels for the clustered scenarios: synthetic ground truth or labels_path.
std::optional<LabelSet> load_labels(const PipelineConfig& cfg, const std::string& out_dir);

std::string read_file(const std::string& path);
void write_file(const std::string& path, std::string_view content);

}  // namespace unscene
