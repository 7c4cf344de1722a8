#include <chrono>
#include <csignal>
#include <cstdio>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "unscene/unscene.h"

namespace {

volatile std::sig_atomic_t g_interrupted = 0;

void on_sigint(int) { g_interrupted = 1; }

struct Common {
  std::string config_path;
  std::string out_dir = "out";
  std::string seed;
  std::string threads;
  std::vector<std::string> overrides;  // key=value
};

void add_common(CLI::App* sub, Common& c) {
  sub->add_option("--config", c.config_path, "key = value configuration file");
  sub->add_option("--out", c.out_dir, "artifact directory")->capture_default_str();
  sub->add_option("--seed", c.seed, "random seed for synthesis and k-means");
  sub->add_option("--threads", c.threads, "worker threads (0 = all cores)");
  sub->add_option("--set", c.overrides, "extra key=value overrides")->take_all();
}

int report(unscene_status st) {
  if (st == UNSCENE_OK) return 0;
  std::fprintf(stderr, "unscene: %s: %s\n", unscene_status_name(st), unscene_last_error());
  return static_cast<int>(st);
}

unscene_config* make_config(const Common& c, const std::vector<std::pair<std::string, std::string>>& extra) {
  unscene_config* cfg = nullptr;
  auto st = c.config_path.empty() ? unscene_config_create(&cfg) : unscene_config_load(c.config_path.c_str(), &cfg);
  if (st != UNSCENE_OK) {
    report(st);
    return nullptr;
  }
  std::vector<std::pair<std::string, std::string>> sets;
  if (!c.seed.empty()) sets.emplace_back("seed", c.seed);
  if (!c.threads.empty()) sets.emplace_back("threads", c.threads);
  for (const auto& kv : c.overrides) {
    auto eq = kv.find('=');
    if (eq == std::string::npos) {
      std::fprintf(stderr, "unscene: --set expects key=value, got '%s'\n", kv.c_str());
      unscene_config_destroy(cfg);
      return nullptr;
    }
    sets.emplace_back(kv.substr(0, eq), kv.substr(eq + 1));
  }
  sets.insert(sets.end(), extra.begin(), extra.end());
  for (const auto& [k, v] : sets) {
    st = unscene_config_set(cfg, k.c_str(), v.c_str());
    if (st != UNSCENE_OK) {
      report(st);
      unscene_config_destroy(cfg);
      return nullptr;
    }
  }
  return cfg;
}

void print_stage(unscene_stage stage, int cached, void*) {
  std::printf("%-8s %s\n", unscene_stage_name(stage), cached ? "cached" : "done");
  std::fflush(stdout);
}

int run_until(const Common& c, unscene_stage last, const std::vector<std::pair<std::string, std::string>>& extra) {
  unscene_config* cfg = make_config(c, extra);
  if (!cfg) return static_cast<int>(UNSCENE_ERR_ARGUMENT);
  const auto st = unscene_run(cfg, c.out_dir.c_str(), last, print_stage, nullptr);
  unscene_config_destroy(cfg);
  if (st == UNSCENE_NO_RELEVANT_SCENARIOS) {
    std::fprintf(stderr, "unscene: no relevant scenarios; extraction aborted after the filter stage\n");
    return static_cast<int>(st);
  }
  return report(st);
}

int serve(const std::string& dir, const std::string& host, int port) {
  unscene_server* server = nullptr;
  const auto st = unscene_server_start(dir.c_str(), host.c_str(), port, &server);
  if (st != UNSCENE_OK) return report(st);
  std::printf("serving %s on http://%s:%d\n", dir.c_str(), host.c_str(), unscene_server_port(server));
  std::fflush(stdout);
  std::signal(SIGINT, on_sigint);
  std::signal(SIGTERM, on_sigint);
  while (!g_interrupted) std::this_thread::sleep_for(std::chrono::milliseconds(100));
  unscene_server_stop(server);
  unscene_server_destroy(server);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Unsupervised traffic scenario extraction"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(unscene_version()));

  Common common;
  std::string input_prefix, labels_path, host = "127.0.0.1";
  int port = 8080;

  struct Sub {
    const char* name;
    const char* help;
    unscene_stage last;
  };
  const Sub stages[] = {
      {"synth", "generate a synthetic recording with ground truth", UNSCENE_STAGE_INGEST},
      {"ingest", "import a CSV recording", UNSCENE_STAGE_INGEST},
      {"filter", "extract ego-challenger scenarios with the PET filter", UNSCENE_STAGE_FILTER},
      {"pfa", "principal feature analysis per road-user class", UNSCENE_STAGE_PFA},
      {"grids", "scenario tensors and the cluster input matrix", UNSCENE_STAGE_GRIDS},
      {"cluster", "hierarchical clustering into dendrogram.json", UNSCENE_STAGE_CLUSTER},
      {"validate", "accuracy curve into metrics.json", UNSCENE_STAGE_VALIDATE},
      {"run", "all stages", UNSCENE_STAGE_VALIDATE},
  };
  std::vector<std::pair<CLI::App*, const Sub*>> subs;
  for (const auto& s : stages) {
    auto* sub = app.add_subcommand(s.name, s.help);
    add_common(sub, common);
    auto* input = sub->add_option("--input", input_prefix, "CSV recording path prefix (switches source to csv)");
    if (std::string(s.name) == "ingest") input->required();
    if (std::string(s.name) == "synth") sub->remove_option(input);
    if (std::string(s.name) == "validate" || std::string(s.name) == "run")
      sub->add_option("--labels", labels_path, "labels.json with scenario id -> label");
    subs.emplace_back(sub, &s);
  }
  auto* serve_cmd = app.add_subcommand("serve", "HTTP/JSON service over an artifact directory");
  serve_cmd->add_option("--out", common.out_dir, "artifact directory")->capture_default_str();
  serve_cmd->add_option("--host", host, "bind address")->capture_default_str();
  serve_cmd->add_option("--port", port, "port (0 picks a free one)")->capture_default_str();

  CLI11_PARSE(app, argc, argv);

  if (serve_cmd->parsed()) return serve(common.out_dir, host, port);
  for (const auto& [sub, s] : subs) {
    if (!sub->parsed()) continue;
    std::vector<std::pair<std::string, std::string>> extra;
    const std::string name = s->name;
    if (name == "synth") extra.emplace_back("source", "synth");
    if (!input_prefix.empty()) {
      extra.emplace_back("source", "csv");
      extra.emplace_back("input_prefix", input_prefix);
    }
    if (!labels_path.empty()) extra.emplace_back("labels_path", labels_path);
    return run_until(common, s->last, extra);
  }
  return 1;
}
