#ifndef UNSCENE_UNSCENE_H
#define UNSCENE_UNSCENE_H

#include <stddef.h>
#include <stdint.h>

#if defined(UNSCENE_BUILDING_LIBRARY)
#define UNSCENE_API __attribute__((visibility("default")))
#else
#define UNSCENE_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum unscene_status {
  UNSCENE_OK = 0,
  UNSCENE_ERR_ARGUMENT = 1,
  UNSCENE_ERR_SCHEMA = 2,
  UNSCENE_ERR_INTEGRITY = 3,
  UNSCENE_ERR_COVERAGE = 4,
  UNSCENE_ERR_GENERATION = 5,
  UNSCENE_ERR_IO = 6,
  UNSCENE_ERR_NOT_FOUND = 7,
  /* The filter kept no scenario; the run stopped after writing scenarios.json. */
  UNSCENE_NO_RELEVANT_SCENARIOS = 8,
  UNSCENE_ERR_INTERNAL = 9
} unscene_status;

typedef enum unscene_stage {
  UNSCENE_STAGE_INGEST = 0,
  UNSCENE_STAGE_FILTER = 1,
  UNSCENE_STAGE_PFA = 2,
  UNSCENE_STAGE_GRIDS = 3,
  UNSCENE_STAGE_CLUSTER = 4,
  UNSCENE_STAGE_VALIDATE = 5
} unscene_stage;

typedef struct unscene_config unscene_config;
typedef struct unscene_dendrogram unscene_dendrogram;
typedef struct unscene_server unscene_server;

typedef void (*unscene_stage_callback)(unscene_stage stage, int cached, void* user);

UNSCENE_API const char* unscene_version(void);
UNSCENE_API const char* unscene_status_name(unscene_status status);
UNSCENE_API const char* unscene_stage_name(unscene_stage stage);
/* Message of the last failed call on this thread; empty after success. */
UNSCENE_API const char* unscene_last_error(void);

UNSCENE_API unscene_status unscene_config_create(unscene_config** out);
UNSCENE_API unscene_status unscene_config_load(const char* path, unscene_config** out);
UNSCENE_API unscene_status unscene_config_set(unscene_config* cfg, const char* key, const char* value);
/* Copies the value with a terminating NUL; *needed receives the full size including the NUL. */
UNSCENE_API unscene_status unscene_config_get(const unscene_config* cfg, const char* key, char* buf, size_t buf_size,
                                              size_t* needed);
UNSCENE_API unscene_status unscene_config_validate(const unscene_config* cfg);
UNSCENE_API void unscene_config_destroy(unscene_config* cfg);

/* Runs every stage up to and including last_stage. */
UNSCENE_API unscene_status unscene_run(const unscene_config* cfg, const char* out_dir, unscene_stage last_stage,
                                       unscene_stage_callback on_stage, void* user);

UNSCENE_API unscene_status unscene_dendrogram_load(const char* path, unscene_dendrogram** out);
UNSCENE_API size_t unscene_dendrogram_samples(const unscene_dendrogram* d);
UNSCENE_API double unscene_dendrogram_root_height(const unscene_dendrogram* d);
/* assignments must hold unscene_dendrogram_samples(d) entries. */
UNSCENE_API unscene_status unscene_dendrogram_cut(const unscene_dendrogram* d, double threshold, size_t* assignments,
                                                  size_t* n_clusters);
UNSCENE_API void unscene_dendrogram_destroy(unscene_dendrogram* d);

/* port 0 binds a free port. */
UNSCENE_API unscene_status unscene_server_start(const char* artifact_dir, const char* host, int port,
                                                unscene_server** out);
UNSCENE_API int unscene_server_port(const unscene_server* s);
UNSCENE_API void unscene_server_wait(unscene_server* s);
UNSCENE_API void unscene_server_stop(unscene_server* s);
UNSCENE_API void unscene_server_destroy(unscene_server* s);

#ifdef __cplusplus
}
#endif

#endif
