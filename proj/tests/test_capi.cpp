#include <doctest.h>

#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "unscene/unscene.h"

namespace fs = std::filesystem;

namespace {

struct Dir {
  fs::path root;
  explicit Dir(const char* tag) {
    root = fs::temp_directory_path() / (std::string("unscene_capi_") + tag + std::to_string(std::random_device{}()));
    fs::create_directories(root);
  }
  ~Dir() {
    std::error_code ec;
    fs::remove_all(root, ec);
  }
};

void count_stage(unscene_stage, int cached, void* user) {
  auto* counts = static_cast<std::vector<int>*>(user);
  counts->push_back(cached);
}

unscene_config* small_config() {
  unscene_config* cfg = nullptr;
  REQUIRE(unscene_config_create(&cfg) == UNSCENE_OK);
  REQUIRE(unscene_config_set(cfg, "synth_counts", "left_turn_oncoming:3,pedestrian_crossing:3,straight_follow:3") ==
          UNSCENE_OK);
  REQUIRE(unscene_config_set(cfg, "export_png", "false") == UNSCENE_OK);
  return cfg;
}

}  // namespace

TEST_CASE("names and version") {
  CHECK(std::string(unscene_version()) == "0.1.0");
  CHECK(std::string(unscene_status_name(UNSCENE_ERR_COVERAGE)) == "coverage error");
  CHECK(std::string(unscene_stage_name(UNSCENE_STAGE_GRIDS)) == "grids");
  CHECK(std::string(unscene_stage_name(static_cast<unscene_stage>(42))) == "unknown");
}

TEST_CASE("config handles") {
  unscene_config* cfg = nullptr;
  REQUIRE(unscene_config_create(&cfg) == UNSCENE_OK);
  CHECK(unscene_config_set(cfg, "t_pet_s", "2.5") == UNSCENE_OK);
  size_t needed = 0;
  CHECK(unscene_config_get(cfg, "t_pet_s", nullptr, 0, &needed) == UNSCENE_OK);
  CHECK(needed == 4);
  char buf[3];
  CHECK(unscene_config_get(cfg, "t_pet_s", buf, sizeof buf, &needed) == UNSCENE_OK);
  CHECK(std::string(buf) == "2.");
  CHECK(unscene_config_set(cfg, "bogus", "1") == UNSCENE_ERR_ARGUMENT);
  CHECK(std::string(unscene_last_error()).find("bogus") != std::string::npos);
  CHECK(unscene_config_set(cfg, "var_pca", "0") == UNSCENE_OK);
  CHECK(unscene_config_validate(cfg) == UNSCENE_ERR_ARGUMENT);
  CHECK(unscene_config_set(nullptr, "a", "b") == UNSCENE_ERR_ARGUMENT);
  CHECK(unscene_config_create(nullptr) == UNSCENE_ERR_ARGUMENT);
  unscene_config_destroy(cfg);
  unscene_config* loaded = nullptr;
  CHECK(unscene_config_load("/nonexistent/unscene.conf", &loaded) == UNSCENE_ERR_IO);
  CHECK(loaded == nullptr);
}

TEST_CASE("run, cache, cut and serve through the C API") {
  Dir dir("run");
  unscene_config* cfg = small_config();
  std::vector<int> flags;
  REQUIRE(unscene_run(cfg, dir.root.c_str(), UNSCENE_STAGE_VALIDATE, count_stage, &flags) == UNSCENE_OK);
  CHECK(flags == std::vector<int>(6, 0));
  flags.clear();
  REQUIRE(unscene_run(cfg, dir.root.c_str(), UNSCENE_STAGE_VALIDATE, count_stage, &flags) == UNSCENE_OK);
  CHECK(flags == std::vector<int>(6, 1));
  CHECK(unscene_run(cfg, dir.root.c_str(), static_cast<unscene_stage>(9), nullptr, nullptr) == UNSCENE_ERR_ARGUMENT);
  unscene_config_destroy(cfg);

  unscene_dendrogram* d = nullptr;
  REQUIRE(unscene_dendrogram_load((dir.root / "dendrogram.json").c_str(), &d) == UNSCENE_OK);
  const size_t n = unscene_dendrogram_samples(d);
  CHECK(n >= 9);
  std::vector<size_t> a(n);
  size_t k = 0;
  CHECK(unscene_dendrogram_cut(d, unscene_dendrogram_root_height(d), a.data(), &k) == UNSCENE_OK);
  CHECK(k == 1);
  CHECK(unscene_dendrogram_cut(d, 0.0, a.data(), &k) == UNSCENE_OK);
  CHECK(k <= n);
  CHECK(unscene_dendrogram_cut(d, -1.0, a.data(), &k) == UNSCENE_ERR_ARGUMENT);
  unscene_dendrogram_destroy(d);
  CHECK(unscene_dendrogram_load((dir.root / "missing.json").c_str(), &d) == UNSCENE_ERR_IO);

  unscene_server* server = nullptr;
  REQUIRE(unscene_server_start(dir.root.c_str(), "127.0.0.1", 0, &server) == UNSCENE_OK);
  CHECK(unscene_server_port(server) > 0);
  unscene_server_stop(server);
  unscene_server_destroy(server);
  CHECK(unscene_server_start(dir.root.c_str(), "127.0.0.1", 70000, &server) == UNSCENE_ERR_ARGUMENT);
}

TEST_CASE("no relevant scenarios has its own status") {
  Dir dir("none");
  unscene_config* cfg = nullptr;
  REQUIRE(unscene_config_create(&cfg) == UNSCENE_OK);
  REQUIRE(unscene_config_set(cfg, "synth_counts", "straight_uninvolved:3") == UNSCENE_OK);
  CHECK(unscene_run(cfg, dir.root.c_str(), UNSCENE_STAGE_VALIDATE, nullptr, nullptr) ==
        UNSCENE_NO_RELEVANT_SCENARIOS);
  CHECK(std::string(unscene_last_error()).find("no relevant scenarios") != std::string::npos);
  unscene_config_destroy(cfg);
}

TEST_CASE("stage errors map to status codes") {
  Dir dir("err");
  unscene_config* cfg = nullptr;
  REQUIRE(unscene_config_create(&cfg) == UNSCENE_OK);
  REQUIRE(unscene_config_set(cfg, "source", "csv") == UNSCENE_OK);
  REQUIRE(unscene_config_set(cfg, "input_prefix", (dir.root / "nothing").c_str()) == UNSCENE_OK);
  CHECK(unscene_run(cfg, dir.root.c_str(), UNSCENE_STAGE_VALIDATE, nullptr, nullptr) == UNSCENE_ERR_IO);
  CHECK(std::string(unscene_last_error()).rfind("ingest: ", 0) == 0);
  unscene_config_destroy(cfg);
}
