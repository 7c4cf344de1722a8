#include "unscene/unscene.h"

#include <cstring>
#include <string>

#include "unscene/config.hpp"
#include "unscene/hac.hpp"
#include "unscene/pipeline.hpp"
#include "unscene/server.hpp"

struct unscene_config {
  unscene::PipelineConfig cfg;
};

struct unscene_dendrogram {
  unscene::Dendrogram d;
};

struct unscene_server {
  std::unique_ptr<unscene::ExplorerService> service;
};

namespace {

thread_local std::string last_error;

unscene_status status_of(unscene::ErrorKind kind) {
  using unscene::ErrorKind;
  switch (kind) {
    case ErrorKind::argument: return UNSCENE_ERR_ARGUMENT;
    case ErrorKind::schema: return UNSCENE_ERR_SCHEMA;
    case ErrorKind::integrity: return UNSCENE_ERR_INTEGRITY;
    case ErrorKind::coverage: return UNSCENE_ERR_COVERAGE;
    case ErrorKind::generation: return UNSCENE_ERR_GENERATION;
    case ErrorKind::io: return UNSCENE_ERR_IO;
    case ErrorKind::not_found: return UNSCENE_ERR_NOT_FOUND;
  }
  return UNSCENE_ERR_INTERNAL;
}

template <typename F>
unscene_status guarded(F&& body) {
  last_error.clear();
  try {
    return body();
  } catch (const unscene::Error& e) {
    last_error = e.what();
    return status_of(e.kind());
  } catch (const std::exception& e) {
    last_error = e.what();
    return UNSCENE_ERR_INTERNAL;
  } catch (...) {
    last_error = "unknown error";
    return UNSCENE_ERR_INTERNAL;
  }
}

unscene_status null_argument(const char* what) {
  last_error = std::string(what) + " must not be null";
  return UNSCENE_ERR_ARGUMENT;
}

}  // namespace

extern "C" {

const char* unscene_version(void) { return "0.1.0"; }

const char* unscene_status_name(unscene_status status) {
  switch (status) {
    case UNSCENE_OK: return "ok";
    case UNSCENE_ERR_ARGUMENT: return "argument error";
    case UNSCENE_ERR_SCHEMA: return "schema error";
    case UNSCENE_ERR_INTEGRITY: return "integrity error";
    case UNSCENE_ERR_COVERAGE: return "coverage error";
    case UNSCENE_ERR_GENERATION: return "generation error";
    case UNSCENE_ERR_IO: return "io error";
    case UNSCENE_ERR_NOT_FOUND: return "not found";
    case UNSCENE_NO_RELEVANT_SCENARIOS: return "no relevant scenarios";
    case UNSCENE_ERR_INTERNAL: return "internal error";
  }
  return "unknown status";
}

const char* unscene_stage_name(unscene_stage stage) {
  if (stage < UNSCENE_STAGE_INGEST || stage > UNSCENE_STAGE_VALIDATE) return "unknown";
  return unscene::to_string(static_cast<unscene::Stage>(stage)).data();
}

const char* unscene_last_error(void) { return last_error.c_str(); }

unscene_status unscene_config_create(unscene_config** out) {
  if (!out) return null_argument("out");
  return guarded([&] {
    *out = new unscene_config{};
    return UNSCENE_OK;
  });
}

unscene_status unscene_config_load(const char* path, unscene_config** out) {
  if (!path) return null_argument("path");
  if (!out) return null_argument("out");
  return guarded([&] {
    auto cfg = unscene::load_config(path);
    *out = new unscene_config{std::move(cfg)};
    return UNSCENE_OK;
  });
}

unscene_status unscene_config_set(unscene_config* cfg, const char* key, const char* value) {
  if (!cfg) return null_argument("cfg");
  if (!key || !value) return null_argument("key/value");
  return guarded([&] {
    cfg->cfg.set(key, value);
    return UNSCENE_OK;
  });
}

unscene_status unscene_config_get(const unscene_config* cfg, const char* key, char* buf, size_t buf_size,
                                  size_t* needed) {
  if (!cfg) return null_argument("cfg");
  if (!key) return null_argument("key");
  return guarded([&] {
    const auto v = cfg->cfg.get(key);
    if (needed) *needed = v.size() + 1;
    if (buf && buf_size > 0) {
      const auto n = std::min(buf_size - 1, v.size());
      std::memcpy(buf, v.data(), n);
      buf[n] = '\0';
    }
    return UNSCENE_OK;
  });
}

unscene_status unscene_config_validate(const unscene_config* cfg) {
  if (!cfg) return null_argument("cfg");
  return guarded([&] {
    cfg->cfg.validate();
    return UNSCENE_OK;
  });
}

void unscene_config_destroy(unscene_config* cfg) { delete cfg; }

unscene_status unscene_run(const unscene_config* cfg, const char* out_dir, unscene_stage last_stage,
                           unscene_stage_callback on_stage, void* user) {
  if (!cfg) return null_argument("cfg");
  if (!out_dir) return null_argument("out_dir");
  if (last_stage < UNSCENE_STAGE_INGEST || last_stage > UNSCENE_STAGE_VALIDATE) {
    last_error = "unknown stage";
    return UNSCENE_ERR_ARGUMENT;
  }
  return guarded([&] {
    unscene::StageCallback cb;
    if (on_stage)
      cb = [on_stage, user](unscene::Stage s, bool cached) {
        on_stage(static_cast<unscene_stage>(s), cached ? 1 : 0, user);
      };
    const auto outcome = unscene::run_pipeline(cfg->cfg, out_dir, static_cast<unscene::Stage>(last_stage), cb);
    if (outcome.no_relevant_scenarios) {
      last_error = "no relevant scenarios: the filter kept no ego-challenger pair";
      return UNSCENE_NO_RELEVANT_SCENARIOS;
    }
    return UNSCENE_OK;
  });
}

unscene_status unscene_dendrogram_load(const char* path, unscene_dendrogram** out) {
  if (!path) return null_argument("path");
  if (!out) return null_argument("out");
  return guarded([&] {
    *out = new unscene_dendrogram{unscene::dendrogram_from_json(unscene::read_file(path))};
    return UNSCENE_OK;
  });
}

size_t unscene_dendrogram_samples(const unscene_dendrogram* d) { return d ? d->d.n_samples : 0; }

double unscene_dendrogram_root_height(const unscene_dendrogram* d) { return d ? d->d.root_height() : 0.0; }

unscene_status unscene_dendrogram_cut(const unscene_dendrogram* d, double threshold, size_t* assignments,
                                      size_t* n_clusters) {
  if (!d) return null_argument("d");
  return guarded([&] {
    const auto a = unscene::cut(d->d, threshold);
    if (assignments) std::copy(a.begin(), a.end(), assignments);
    if (n_clusters) *n_clusters = unscene::cluster_count(a);
    return UNSCENE_OK;
  });
}

void unscene_dendrogram_destroy(unscene_dendrogram* d) { delete d; }

unscene_status unscene_server_start(const char* artifact_dir, const char* host, int port, unscene_server** out) {
  if (!artifact_dir) return null_argument("artifact_dir");
  if (!host) return null_argument("host");
  if (!out) return null_argument("out");
  if (port < 0 || port > 65535) {
    last_error = "port must be in [0, 65535]";
    return UNSCENE_ERR_ARGUMENT;
  }
  return guarded([&] {
    auto s = std::make_unique<unscene_server>();
    s->service = std::make_unique<unscene::ExplorerService>(artifact_dir);
    s->service->start(host, port);
    *out = s.release();
    return UNSCENE_OK;
  });
}

int unscene_server_port(const unscene_server* s) { return s ? s->service->port() : -1; }

void unscene_server_wait(unscene_server* s) {
  if (s) s->service->wait();
}

void unscene_server_stop(unscene_server* s) {
  if (s) s->service->stop();
}

void unscene_server_destroy(unscene_server* s) { delete s; }

}  // extern "C"
