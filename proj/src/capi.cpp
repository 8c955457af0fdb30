#include "simra/simra.h"

#include <cstdlib>
#include <cstring>
#include <random>

#include "simra/detection.hpp"
#include "simra/error.hpp"
#include "simra/graph_io.hpp"
#include "simra/pipeline.hpp"
#include "simra/report.hpp"
#include "simra/ride_io.hpp"
#include "simra/scoring.hpp"
#include "simra/service.hpp"
#include "simra/synth.hpp"
#include "simra/util.hpp"

struct simra_ride {
  simra::Ride ride;
};
struct simra_config {
  simra::PipelineConfig cfg;
};
struct simra_graph {
  simra::MapGraph graph;
};
struct simra_matched {
  std::vector<simra::MatchedRide> rides;
};
struct simra_service {
  std::unique_ptr<simra::Service> service;
};

namespace {

thread_local std::string g_last_error;

simra_status status_of(simra::ErrorKind kind) {
  using simra::ErrorKind;
  switch (kind) {
    case ErrorKind::Format: return SIMRA_E_FORMAT;
    case ErrorKind::Validation: return SIMRA_E_VALIDATION;
    case ErrorKind::Detection: return SIMRA_E_DETECTION;
    case ErrorKind::EmptyRide: return SIMRA_E_EMPTY_RIDE;
    case ErrorKind::InsufficientData: return SIMRA_E_INSUFFICIENT_DATA;
    case ErrorKind::Build: return SIMRA_E_BUILD;
    case ErrorKind::Consistency: return SIMRA_E_CONSISTENCY;
    case ErrorKind::UndefinedScore: return SIMRA_E_UNDEFINED_SCORE;
    case ErrorKind::Io: return SIMRA_E_IO;
    case ErrorKind::InvalidArgument: return SIMRA_E_INVALID_ARGUMENT;
    case ErrorKind::NotFound: return SIMRA_E_NOT_FOUND;
    case ErrorKind::Conflict: return SIMRA_E_CONFLICT;
    case ErrorKind::Unauthorized: return SIMRA_E_UNAUTHORIZED;
  }
  return SIMRA_E_INTERNAL;
}

template <class F>
simra_status guard(F&& f) {
  try {
    g_last_error.clear();
    f();
    return SIMRA_OK;
  } catch (simra::Error const& e) {
    g_last_error = e.what();
    return status_of(e.kind());
  } catch (std::bad_alloc const&) {
    g_last_error = "out of memory";
    return SIMRA_E_INTERNAL;
  } catch (std::exception const& e) {
    g_last_error = e.what();
    return SIMRA_E_INTERNAL;
  }
}

void require(bool ok, char const* what) {
  if (!ok) simra::fail(simra::ErrorKind::InvalidArgument, std::string(what) + " is null");
}

char* dup_string(std::string const& s) {
  auto* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, s.data(), s.size() + 1);
  return out;
}

simra::PipelineConfig config_or_default(simra_config const* cfg) { return cfg ? cfg->cfg : simra::PipelineConfig{}; }

std::vector<simra::Ride> load_rides(std::string const& dir, unsigned jobs) {
  auto const files = simra::list_files(dir, ".ride");
  if (files.empty()) simra::fail(simra::ErrorKind::InvalidArgument, "no rides found in " + dir);
  std::vector<simra::Ride> rides(files.size());
  simra::parallel_for(files.size(), jobs, [&](std::size_t i) {
    try {
      rides[i] = simra::parse_ride(simra::read_file(files[i]));
    } catch (simra::Error const& e) {
      throw simra::Error(e.kind(), files[i].filename().string() + ": " + e.what());
    }
  });
  return rides;
}

simra::ScoreConfig to_score_config(simra_score_config const& c) {
  simra::ScoreConfig cfg;
  if (c.alpha) cfg.alpha = simra::parse_decimal(c.alpha);
  cfg.min_rides = c.min_rides;
  cfg.length_adjusted = c.length_adjusted != 0;
  cfg.pool_directions = c.pool_directions != 0;
  switch (c.selection) {
    case SIMRA_SELECT_TOP_K:
      cfg.selection = {simra::SelectionMode::TopK, c.top_k, 0};
      break;
    case SIMRA_SELECT_THRESHOLD:
      require(c.threshold != nullptr, "threshold");
      cfg.selection = {simra::SelectionMode::Threshold, 0, simra::parse_decimal(c.threshold)};
      break;
    case SIMRA_SELECT_ALL:
      break;
    default:
      simra::fail(simra::ErrorKind::InvalidArgument, "unknown selection mode");
  }
  cfg.validate();
  return cfg;
}

}  // namespace

extern "C" {

const char* simra_last_error(void) { return g_last_error.c_str(); }

const char* simra_status_name(simra_status status) {
  switch (status) {
    case SIMRA_OK: return "ok";
    case SIMRA_E_FORMAT: return "format error";
    case SIMRA_E_VALIDATION: return "validation error";
    case SIMRA_E_DETECTION: return "detection error";
    case SIMRA_E_EMPTY_RIDE: return "empty ride";
    case SIMRA_E_INSUFFICIENT_DATA: return "insufficient data";
    case SIMRA_E_BUILD: return "build error";
    case SIMRA_E_CONSISTENCY: return "consistency error";
    case SIMRA_E_UNDEFINED_SCORE: return "undefined score";
    case SIMRA_E_IO: return "i/o error";
    case SIMRA_E_INVALID_ARGUMENT: return "invalid argument";
    case SIMRA_E_NOT_FOUND: return "not found";
    case SIMRA_E_CONFLICT: return "conflict";
    case SIMRA_E_UNAUTHORIZED: return "unauthorized";
    case SIMRA_E_INTERNAL: break;
  }
  return "internal error";
}

void simra_string_free(char* s) { std::free(s); }

// ---- rides ----------------------------------------------------------------

simra_status simra_ride_parse(const char* bytes, size_t len, simra_ride** out) {
  return guard([&] {
    require(out, "out");
    require(bytes || len == 0, "bytes");
    auto r = std::make_unique<simra_ride>();
    r->ride = simra::parse_ride(std::string_view(bytes ? bytes : "", len));
    *out = r.release();
  });
}

simra_status simra_ride_load(const char* path, simra_ride** out) {
  return guard([&] {
    require(path && out, "argument");
    auto r = std::make_unique<simra_ride>();
    r->ride = simra::load_ride_file(path);
    *out = r.release();
  });
}

simra_status simra_ride_save(const simra_ride* ride, const char* path) {
  return guard([&] {
    require(ride && path, "argument");
    simra::save_ride_file(ride->ride, path);
  });
}

simra_status simra_ride_serialize(const simra_ride* ride, char** out, size_t* len) {
  return guard([&] {
    require(ride && out, "argument");
    auto const text = simra::serialize_ride(ride->ride);
    *out = dup_string(text);
    if (len) *len = text.size();
  });
}

void simra_ride_free(simra_ride* ride) { delete ride; }

const char* simra_ride_id(const simra_ride* ride) { return ride ? ride->ride.ride_id.c_str() : ""; }

const char* simra_ride_region(const simra_ride* ride) { return ride ? ride->ride.region.c_str() : ""; }

size_t simra_ride_sample_count(const simra_ride* ride) { return ride ? ride->ride.samples.size() : 0; }

size_t simra_ride_incident_count(const simra_ride* ride) { return ride ? ride->ride.incidents.size() : 0; }

simra_status simra_ride_incident(const simra_ride* ride, size_t index, simra_incident_info* out) {
  return guard([&] {
    require(ride && out, "argument");
    if (index >= ride->ride.incidents.size()) simra::fail(simra::ErrorKind::NotFound, "incident index out of range");
    auto const& inc = ride->ride.incidents[index];
    *out = {inc.location.lat, inc.location.lon, inc.timestamp, static_cast<int>(inc.type), inc.scary ? 1 : 0,
            inc.auto_detected ? 1 : 0};
  });
}

// ---- detection -------------------------------------------------------------

void simra_detect_config_default(simra_detect_config* cfg) {
  if (!cfg) return;
  simra::AccelWindowConfig const d;
  *cfg = {d.moving_avg_width, d.keep_every, d.bucket_seconds, d.top_k_buckets, SIMRA_RANK_MAX, 0.1};
}

simra_status simra_detect(simra_ride* ride, const simra_detect_config* cfg, size_t* added) {
  return guard([&] {
    require(ride && cfg, "argument");
    simra::AccelWindowConfig c;
    c.moving_avg_width = cfg->moving_avg_width;
    c.keep_every = cfg->keep_every;
    c.bucket_seconds = cfg->bucket_seconds;
    c.top_k_buckets = cfg->top_k_buckets;
    switch (cfg->rank_mode) {
      case SIMRA_RANK_MAX: c.rank_mode = simra::RankMode::Max; break;
      case SIMRA_RANK_SUM: c.rank_mode = simra::RankMode::Sum; break;
      case SIMRA_RANK_L2: c.rank_mode = simra::RankMode::L2; break;
      default: simra::fail(simra::ErrorKind::InvalidArgument, "unknown rank mode");
    }
    auto const n = simra::append_candidates(ride->ride, c, cfg->min_diff);
    if (added) *added = n;
  });
}

// ---- privacy ---------------------------------------------------------------

void simra_crop_spec_default(simra_crop_spec* spec) {
  if (spec) *spec = {-1.0, -1.0, -1.0, -1.0};
}

simra_status simra_crop(simra_ride* ride, const simra_crop_spec* spec) {
  return guard([&] {
    require(ride && spec, "argument");
    auto opt = [](double v) { return v >= 0.0 ? std::optional<double>(v) : std::nullopt; };
    simra::CropSpec c{opt(spec->start_time_s), opt(spec->start_distance_m), opt(spec->end_time_s),
                      opt(spec->end_distance_m)};
    ride->ride = simra::crop_ride(ride->ride, c);
  });
}

// ---- configuration -----------------------------------------------------------

simra_status simra_config_default(simra_config** out) {
  return guard([&] {
    require(out, "out");
    *out = new simra_config{};
  });
}

simra_status simra_config_load(const char* path, simra_config** out) {
  return guard([&] {
    require(path && out, "argument");
    auto c = std::make_unique<simra_config>();
    c->cfg = simra::load_pipeline_config(path);
    *out = c.release();
  });
}

simra_status simra_config_override(simra_config* cfg, const char* json_patch) {
  return guard([&] {
    require(cfg && json_patch, "argument");
    simra::apply_overrides(cfg->cfg, json_patch, std::filesystem::current_path());
  });
}

simra_status simra_config_json(const simra_config* cfg, char** out) {
  return guard([&] {
    require(cfg && out, "argument");
    *out = dup_string(simra::pipeline_config_json(cfg->cfg));
  });
}

void simra_config_free(simra_config* cfg) { delete cfg; }

simra_status simra_quality_report(const simra_config* cfg, const char* rides_dir, unsigned jobs, char** csv_out) {
  return guard([&] {
    require(rides_dir && csv_out, "argument");
    auto const c = config_or_default(cfg);
    auto const rides = load_rides(rides_dir, jobs);
    std::vector<simra::QualityRow> rows(rides.size());
    simra::parallel_for(rides.size(), jobs,
                        [&](std::size_t i) { rows[i] = simra::assess_quality(rides[i], c.quality).row; });
    *csv_out = dup_string(simra::quality_csv(rows));
  });
}

simra_status simra_profile_stats(const simra_config* cfg, const char* rides_dir, const char* tz, unsigned jobs,
                                 char** profile_out) {
  return guard([&] {
    require(rides_dir && profile_out, "argument");
    auto const c = config_or_default(cfg);
    auto const rides = load_rides(rides_dir, jobs);
    simra::RegionClock const clock(tz ? std::string(tz) : c.region.timezone);
    simra::Profile profile;
    profile.region = rides.front().region;
    profile.stats = simra::compute_stats(rides, clock, c.wait, jobs);
    *profile_out = dup_string(simra::serialize_profile(profile));
  });
}

// ---- graph -------------------------------------------------------------------

simra_status simra_graph_build(const char* extract_path, const char* region, double buffer_width_m,
                               simra_graph** out) {
  return guard([&] {
    require(extract_path && out, "argument");
    simra::BuildParams params;
    params.region = region ? region : "";
    if (buffer_width_m > 0.0) params.buffer_width_m = buffer_width_m;
    auto g = std::make_unique<simra_graph>();
    g->graph = simra::build_graph(simra::parse_extract(simra::read_file(extract_path)), params);
    *out = g.release();
  });
}

simra_status simra_graph_load(const char* path, simra_graph** out) {
  return guard([&] {
    require(path && out, "argument");
    auto g = std::make_unique<simra_graph>();
    g->graph = simra::parse_graph(simra::read_file(path));
    *out = g.release();
  });
}

simra_status simra_graph_save(const simra_graph* graph, const char* path) {
  return guard([&] {
    require(graph && path, "argument");
    simra::write_file_atomic(path, simra::serialize_graph(graph->graph));
  });
}

simra_status simra_graph_geojson(const simra_graph* graph, char** out) {
  return guard([&] {
    require(graph && out, "argument");
    *out = dup_string(simra::graph_to_geojson(graph->graph));
  });
}

size_t simra_graph_node_count(const simra_graph* graph) { return graph ? graph->graph.nodes.size() : 0; }

size_t simra_graph_edge_count(const simra_graph* graph) { return graph ? graph->graph.edges.size() : 0; }

void simra_graph_free(simra_graph* graph) { delete graph; }

simra_status simra_osm_convert(const char* xml_path, char** jsonl_out) {
  return guard([&] {
    require(xml_path && jsonl_out, "argument");
    *jsonl_out = dup_string(simra::serialize_extract(simra::extract_from_osm_xml(simra::read_file(xml_path))));
  });
}

// ---- matching ------------------------------------------------------------------

simra_status simra_match(const simra_graph* graph, const simra_config* cfg, const char* rides_dir, unsigned jobs,
                         simra_matched** out) {
  return guard([&] {
    require(graph && rides_dir && out, "argument");
    auto const c = config_or_default(cfg);
    auto const rides = load_rides(rides_dir, jobs);
    simra::GraphIndex const index(graph->graph);
    auto m = std::make_unique<simra_matched>();
    m->rides.resize(rides.size());
    simra::parallel_for(rides.size(), jobs,
                        [&](std::size_t i) { m->rides[i] = simra::match_ride(rides[i], index, c.matching); });
    *out = m.release();
  });
}

simra_status simra_matched_load(const char* path, simra_matched** out) {
  return guard([&] {
    require(path && out, "argument");
    auto m = std::make_unique<simra_matched>();
    m->rides = simra::parse_matched(simra::read_file(path));
    *out = m.release();
  });
}

simra_status simra_matched_save(const simra_matched* matched, const char* path) {
  return guard([&] {
    require(matched && path, "argument");
    simra::write_file_atomic(path, simra::serialize_matched(matched->rides));
  });
}

size_t simra_matched_count(const simra_matched* matched) { return matched ? matched->rides.size() : 0; }

void simra_matched_free(simra_matched* matched) { delete matched; }

simra_status simra_populate(simra_graph* graph, const simra_matched* matched) {
  return guard([&] {
    require(graph && matched, "argument");
    simra::populate(graph->graph, matched->rides);
  });
}

// ---- scoring -------------------------------------------------------------------

void simra_score_config_default(simra_score_config* cfg) {
  if (cfg) *cfg = {nullptr, 10, 0, 0, SIMRA_SELECT_ALL, 0, nullptr};
}

simra_status simra_score(const simra_graph* graph, const simra_score_config* cfg, char** report_json) {
  return guard([&] {
    require(graph && cfg && report_json, "argument");
    auto const sc = to_score_config(*cfg);
    auto const scores = simra::score_graph(graph->graph, sc);
    auto const ranking = simra::rank_hotspots(scores.scores, sc);
    *report_json = dup_string(simra::build_report(graph->graph, scores, ranking, sc));
  });
}

simra_status simra_hotspots_geojson(const char* report_json, char** out) {
  return guard([&] {
    require(report_json && out, "argument");
    *out = dup_string(simra::hotspots_geojson(report_json));
  });
}

// ---- pipeline -------------------------------------------------------------------

simra_status simra_run(const simra_config* cfg, const char* rides_dir, const char* out_dir, int force,
                       unsigned jobs, simra_run_summary* summary) {
  return guard([&] {
    require(cfg && rides_dir && out_dir, "argument");
    auto const s = simra::run_pipeline(cfg->cfg, {rides_dir, out_dir, force != 0, jobs});
    if (summary) {
      *summary = {s.skipped ? 1 : 0, s.rides, s.rides_matched, s.rides_excluded, s.incidents_matched};
    }
  });
}

// ---- service ---------------------------------------------------------------------

simra_status simra_service_create(const char* config_path, const char* listen, simra_service** out) {
  return guard([&] {
    require(config_path && out, "argument");
    auto cfg = simra::load_service_config(config_path);
    if (listen) simra::set_listen(cfg, listen);
    auto s = std::make_unique<simra_service>();
    s->service = std::make_unique<simra::Service>(std::move(cfg));
    *out = s.release();
  });
}

simra_status simra_service_bind(simra_service* svc, int* port) {
  return guard([&] {
    require(svc, "service");
    int const p = svc->service->bind();
    if (port) *port = p;
  });
}

simra_status simra_service_run(simra_service* svc) {
  return guard([&] {
    require(svc, "service");
    svc->service->run();
  });
}

void simra_service_stop(simra_service* svc) {
  if (svc) svc->service->stop();
}

void simra_service_free(simra_service* svc) { delete svc; }

simra_status simra_export(const char* config_path, const char* region, const char* out_dir, size_t* count) {
  return guard([&] {
    require(config_path && region && out_dir, "argument");
    auto const cfg = simra::load_service_config(config_path);
    for (auto const& r : cfg.regions) {
      if (r.id != region) continue;
      simra::RegionStore const store(cfg.data_dir / r.id, r, cfg.pipeline, false);
      auto const n = store.export_rides(out_dir);
      if (count) *count = n;
      return;
    }
    simra::fail(simra::ErrorKind::NotFound, std::string("unknown region '") + region + "'");
  });
}

simra_status simra_access_key(const char* salt, int64_t unix_seconds, char** out) {
  return guard([&] {
    require(salt && out, "argument");
    auto const t = std::chrono::system_clock::time_point(std::chrono::seconds(unix_seconds));
    *out = dup_string(simra::access_key_for(simra::utc_date(t), salt));
  });
}

// ---- synthetic data ------------------------------------------------------------------

simra_status simra_synth_grid(const char* out_dir, size_t rides, uint64_t seed) {
  return guard([&] {
    require(out_dir, "out_dir");
    std::filesystem::path const dir(out_dir);
    std::filesystem::create_directories(dir / "rides");
    simra::GridSpec const spec;
    simra::write_file_atomic(dir / "map.jsonl", simra::serialize_extract(simra::grid_extract(spec)));
    std::mt19937_64 rng(seed);
    simra::SynthRideParams const params;
    for (size_t i = 0; i < rides; ++i) {
      auto const r = simra::synth_grid_ride(spec, params, rng);
      char name[32];
      std::snprintf(name, sizeof name, "%05zu.ride", i);
      simra::write_file_atomic(dir / "rides" / name, simra::serialize_ride(r.ride));
    }
  });
}

simra_status simra_synth_incidents(const char* out_dir, const char* region, const int64_t tally[16],
                                   size_t per_ride, uint64_t seed) {
  return guard([&] {
    require(out_dir && region && tally, "argument");
    simra::IncidentTally t{};
    for (std::size_t i = 0; i < simra::kLabeledTypeCount; ++i) t[i] = {tally[2 * i], tally[2 * i + 1]};
    std::mt19937_64 rng(seed);
    auto const rides = simra::synth_incident_rides(region, {52.52, 13.405}, t, per_ride, rng);
    std::filesystem::create_directories(out_dir);
    for (std::size_t i = 0; i < rides.size(); ++i) {
      char name[32];
      std::snprintf(name, sizeof name, "%05zu.ride", i);
      simra::write_file_atomic(std::filesystem::path(out_dir) / name, simra::serialize_ride(rides[i]));
    }
  });
}

}  // extern "C"
