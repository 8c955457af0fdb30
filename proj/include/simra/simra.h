/* C interface to the simra library. All functions return a status code;
 * on failure simra_last_error() describes the problem for the calling
 * thread. Strings returned through char** are owned by the caller and
 * released with simra_string_free(). */
#ifndef SIMRA_SIMRA_H
#define SIMRA_SIMRA_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define SIMRA_API __declspec(dllexport)
#else
#define SIMRA_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum simra_status {
  SIMRA_OK = 0,
  SIMRA_E_FORMAT = 1,
  SIMRA_E_VALIDATION = 2,
  SIMRA_E_DETECTION = 3,
  SIMRA_E_EMPTY_RIDE = 4,
  SIMRA_E_INSUFFICIENT_DATA = 5,
  SIMRA_E_BUILD = 6,
  SIMRA_E_CONSISTENCY = 7,
  SIMRA_E_UNDEFINED_SCORE = 8,
  SIMRA_E_IO = 9,
  SIMRA_E_INVALID_ARGUMENT = 10,
  SIMRA_E_NOT_FOUND = 11,
  SIMRA_E_CONFLICT = 12,
  SIMRA_E_UNAUTHORIZED = 13,
  SIMRA_E_INTERNAL = 99
} simra_status;

SIMRA_API const char* simra_last_error(void);
SIMRA_API const char* simra_status_name(simra_status status);
SIMRA_API void simra_string_free(char* s);

/* ---- rides ------------------------------------------------------------ */

typedef struct simra_ride simra_ride;

typedef struct simra_incident_info {
  double lat;
  double lon;
  int64_t timestamp_ms;
  int type_code; /* 0 unlabeled, 1..8 taxonomy order */
  int scary;
  int auto_detected;
} simra_incident_info;

SIMRA_API simra_status simra_ride_parse(const char* bytes, size_t len, simra_ride** out);
SIMRA_API simra_status simra_ride_load(const char* path, simra_ride** out);
SIMRA_API simra_status simra_ride_save(const simra_ride* ride, const char* path);
SIMRA_API simra_status simra_ride_serialize(const simra_ride* ride, char** out, size_t* len);
SIMRA_API void simra_ride_free(simra_ride* ride);
SIMRA_API const char* simra_ride_id(const simra_ride* ride);
SIMRA_API const char* simra_ride_region(const simra_ride* ride);
SIMRA_API size_t simra_ride_sample_count(const simra_ride* ride);
SIMRA_API size_t simra_ride_incident_count(const simra_ride* ride);
SIMRA_API simra_status simra_ride_incident(const simra_ride* ride, size_t index, simra_incident_info* out);

/* ---- detection -------------------------------------------------------- */

typedef enum simra_rank_mode { SIMRA_RANK_MAX = 0, SIMRA_RANK_SUM = 1, SIMRA_RANK_L2 = 2 } simra_rank_mode;

typedef struct simra_detect_config {
  size_t moving_avg_width;
  size_t keep_every;
  double bucket_seconds;
  size_t top_k_buckets;
  simra_rank_mode rank_mode;
  double min_diff; /* candidates ranked below this are not appended */
} simra_detect_config;

SIMRA_API void simra_detect_config_default(simra_detect_config* cfg);
/* Appends Unlabeled auto-detected candidates to the ride. */
SIMRA_API simra_status simra_detect(simra_ride* ride, const simra_detect_config* cfg, size_t* added);

/* ---- privacy and quality ---------------------------------------------- */

/* Negative values leave a bound unset. */
typedef struct simra_crop_spec {
  double start_time_s;
  double start_distance_m;
  double end_time_s;
  double end_distance_m;
} simra_crop_spec;

SIMRA_API void simra_crop_spec_default(simra_crop_spec* spec);
SIMRA_API simra_status simra_crop(simra_ride* ride, const simra_crop_spec* spec);

/* ---- pipeline configuration ------------------------------------------- */

typedef struct simra_config simra_config;

SIMRA_API simra_status simra_config_default(simra_config** out);
SIMRA_API simra_status simra_config_load(const char* path, simra_config** out);
/* Merges a JSON object shaped like the config file into cfg. */
SIMRA_API simra_status simra_config_override(simra_config* cfg, const char* json_patch);
SIMRA_API simra_status simra_config_json(const simra_config* cfg, char** out);
SIMRA_API void simra_config_free(simra_config* cfg);

/* CSV of ride_id, mode_flag, trailing_stop_trimmed_s for *.ride in dir. */
SIMRA_API simra_status simra_quality_report(const simra_config* cfg, const char* rides_dir, unsigned jobs,
                                            char** csv_out);
/* Profile file aggregating the statistics of *.ride in dir. */
SIMRA_API simra_status simra_profile_stats(const simra_config* cfg, const char* rides_dir, const char* tz,
                                           unsigned jobs, char** profile_out);

/* ---- map graph -------------------------------------------------------- */

typedef struct simra_graph simra_graph;

SIMRA_API simra_status simra_graph_build(const char* extract_path, const char* region, double buffer_width_m,
                                         simra_graph** out);
SIMRA_API simra_status simra_graph_load(const char* path, simra_graph** out);
SIMRA_API simra_status simra_graph_save(const simra_graph* graph, const char* path);
SIMRA_API simra_status simra_graph_geojson(const simra_graph* graph, char** out);
SIMRA_API size_t simra_graph_node_count(const simra_graph* graph);
SIMRA_API size_t simra_graph_edge_count(const simra_graph* graph);
SIMRA_API void simra_graph_free(simra_graph* graph);

/* OpenStreetMap XML to the JSON-lines extract format. */
SIMRA_API simra_status simra_osm_convert(const char* xml_path, char** jsonl_out);

/* ---- matching and population ------------------------------------------ */

typedef struct simra_matched simra_matched;

SIMRA_API simra_status simra_match(const simra_graph* graph, const simra_config* cfg, const char* rides_dir,
                                   unsigned jobs, simra_matched** out);
SIMRA_API simra_status simra_matched_load(const char* path, simra_matched** out);
SIMRA_API simra_status simra_matched_save(const simra_matched* matched, const char* path);
SIMRA_API size_t simra_matched_count(const simra_matched* matched);
SIMRA_API void simra_matched_free(simra_matched* matched);
SIMRA_API simra_status simra_populate(simra_graph* graph, const simra_matched* matched);

/* ---- scoring ---------------------------------------------------------- */

typedef enum simra_selection { SIMRA_SELECT_ALL = 0, SIMRA_SELECT_TOP_K = 1, SIMRA_SELECT_THRESHOLD = 2 } simra_selection;

typedef struct simra_score_config {
  const char* alpha; /* decimal literal; NULL means 4.4 */
  int64_t min_rides;
  int length_adjusted;
  int pool_directions;
  simra_selection selection;
  size_t top_k;
  const char* threshold; /* decimal literal, for SIMRA_SELECT_THRESHOLD */
} simra_score_config;

SIMRA_API void simra_score_config_default(simra_score_config* cfg);
SIMRA_API simra_status simra_score(const simra_graph* graph, const simra_score_config* cfg, char** report_json);
SIMRA_API simra_status simra_hotspots_geojson(const char* report_json, char** out);

/* ---- full pipeline ---------------------------------------------------- */

typedef struct simra_run_summary {
  int skipped;
  size_t rides;
  size_t rides_matched;
  size_t rides_excluded;
  size_t incidents_matched;
} simra_run_summary;

SIMRA_API simra_status simra_run(const simra_config* cfg, const char* rides_dir, const char* out_dir, int force,
                                 unsigned jobs, simra_run_summary* summary);

/* ---- service ---------------------------------------------------------- */

typedef struct simra_service simra_service;

/* listen ("host:port") overrides the config's address when not NULL. */
SIMRA_API simra_status simra_service_create(const char* config_path, const char* listen, simra_service** out);
SIMRA_API simra_status simra_service_bind(simra_service* svc, int* port);
/* Blocks until simra_service_stop() is called from another thread. */
SIMRA_API simra_status simra_service_run(simra_service* svc);
SIMRA_API void simra_service_stop(simra_service* svc);
SIMRA_API void simra_service_free(simra_service* svc);

SIMRA_API simra_status simra_export(const char* config_path, const char* region, const char* out_dir, size_t* count);
/* Key for the UTC day containing unix_seconds. */
SIMRA_API simra_status simra_access_key(const char* salt, int64_t unix_seconds, char** out);

/* ---- synthetic data --------------------------------------------------- */

/* Writes map.jsonl and rides/<n>.ride for a '#'-shaped street grid. */
SIMRA_API simra_status simra_synth_grid(const char* out_dir, size_t rides, uint64_t seed);
/* Writes rides carrying exactly the given incident counts; tally holds
 * scary and non-scary counts for each of the 8 labeled types, in order. */
SIMRA_API simra_status simra_synth_incidents(const char* out_dir, const char* region, const int64_t tally[16],
                                             size_t per_ride, uint64_t seed);

#ifdef __cplusplus
}
#endif

#endif
