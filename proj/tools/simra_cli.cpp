// simra command-line tool. Everything goes through the C interface.
#include <csignal>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <pthread.h>

#include "CLI11.hpp"
#include "json.hpp"
#include "simra/simra.h"

namespace {

struct Failure {
  simra_status status;
  std::string context;
};

void check(simra_status status, std::string const& context = {}) {
  if (status != SIMRA_OK) throw Failure{status, context};
}

struct CString {
  char* ptr = nullptr;
  ~CString() { simra_string_free(ptr); }
  std::string str() const { return ptr ? ptr : ""; }
};

template <class T, void (*Free)(T*)>
struct Handle {
  T* ptr = nullptr;
  ~Handle() { Free(ptr); }
};

using RideHandle = Handle<simra_ride, simra_ride_free>;
using GraphHandle = Handle<simra_graph, simra_graph_free>;
using MatchedHandle = Handle<simra_matched, simra_matched_free>;
using ConfigHandle = Handle<simra_config, simra_config_free>;
using ServiceHandle = Handle<simra_service, simra_service_free>;

void write_output(std::optional<std::string> const& path, std::string const& content) {
  if (!path || *path == "-") {
    std::cout << content;
    return;
  }
  std::ofstream out(*path, std::ios::binary | std::ios::trunc);
  out << content;
  if (!out.flush()) throw std::runtime_error("cannot write " + *path);
}

struct Globals {
  std::optional<std::string> config;
  unsigned jobs = 1;
  std::uint64_t seed = 1;
};

void load_config(Globals const& g, ConfigHandle& cfg) {
  if (g.config) {
    check(simra_config_load(g.config->c_str(), &cfg.ptr), "config");
  } else {
    check(simra_config_default(&cfg.ptr), "config");
  }
}

void override_config(ConfigHandle& cfg, nlohmann::json const& patch) {
  if (patch.empty()) return;
  check(simra_config_override(cfg.ptr, patch.dump().c_str()), "config");
}

std::string utc_today() {
  std::time_t const now = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[16];
  std::strftime(buf, sizeof buf, "%Y-%m-%d", &tm);
  return buf;
}

std::int64_t unix_seconds_of(std::string const& date) {
  std::tm tm{};
  std::istringstream in(date);
  in >> std::get_time(&tm, "%Y-%m-%d");
  if (in.fail()) throw CLI::ValidationError("--date", "expected YYYY-MM-DD");
  return static_cast<std::int64_t>(timegm(&tm));
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Crowdsourced cycling safety pipeline: ride files, incident detection, "
               "street-graph matching, dangerousness scores and an ingest service."};
  app.require_subcommand(1);
  Globals g;
  app.add_option("--config", g.config, "Configuration file (pipeline, or service for serve/export)");
  app.add_option("--jobs", g.jobs, "Worker threads")->check(CLI::Range(1u, 1024u));
  app.add_option("--seed", g.seed, "Seed for randomized tooling");

  // detect
  auto* detect = app.add_subcommand("detect", "Append auto-detected incident candidates to a ride");
  std::string detect_in, detect_out;
  std::optional<std::size_t> detect_top_k;
  std::optional<double> detect_bucket_s, detect_min_diff;
  detect->add_option("--in", detect_in, "Ride file")->required();
  detect->add_option("--out", detect_out, "Output ride file")->required();
  detect->add_option("--top-k", detect_top_k, "Buckets to report (default 6)");
  detect->add_option("--bucket-s", detect_bucket_s, "Bucket length in seconds (default 3)");
  detect->add_option("--min-diff", detect_min_diff, "Smallest rank value kept, m/s^2 (default 0.1)");

  // crop
  auto* crop = app.add_subcommand("crop", "Cut the start and end of a ride by time or distance");
  std::string crop_in, crop_out;
  double crop_start_s = -1, crop_start_m = -1, crop_end_s = -1, crop_end_m = -1;
  crop->add_option("--in", crop_in, "Ride file")->required();
  crop->add_option("--out", crop_out, "Output ride file")->required();
  crop->add_option("--start-s", crop_start_s, "Seconds removed at the start");
  crop->add_option("--start-m", crop_start_m, "Meters removed at the start");
  crop->add_option("--end-s", crop_end_s, "Seconds removed at the end");
  crop->add_option("--end-m", crop_end_m, "Meters removed at the end");

  // quality
  auto* quality = app.add_subcommand("quality", "Transport-mode and forgotten-stop report for a ride directory");
  std::string quality_in;
  std::optional<std::string> quality_out;
  quality->add_option("--in", quality_in, "Directory of .ride files")->required();
  quality->add_option("--out", quality_out, "CSV output (default stdout)");

  // profile-stats
  auto* profile = app.add_subcommand("profile-stats", "Aggregate ride statistics into a profile file");
  std::string profile_rides, profile_out;
  std::optional<std::string> profile_tz;
  profile->add_option("--rides", profile_rides, "Directory of .ride files")->required();
  profile->add_option("--tz", profile_tz, "IANA time zone for the hour histogram");
  profile->add_option("--out", profile_out, "Profile file")->required();

  // convert-osm
  auto* osm = app.add_subcommand("convert-osm", "Convert an OpenStreetMap XML extract to a map extract");
  std::string osm_in, osm_out;
  osm->add_option("--in", osm_in, "OSM XML file")->required();
  osm->add_option("--out", osm_out, "Map extract (JSON lines)")->required();

  // build-graph
  auto* build = app.add_subcommand("build-graph", "Build the street graph from a map extract");
  std::string build_extract, build_out, build_region = "region";
  std::optional<std::string> build_geojson;
  double build_width = 10.0;
  build->add_option("--extract", build_extract, "Map extract (JSON lines)")->required();
  build->add_option("--region", build_region, "Region id");
  build->add_option("--width", build_width, "Buffer width in meters")->check(CLI::PositiveNumber);
  build->add_option("--out", build_out, "Graph file")->required();
  build->add_option("--geojson", build_geojson, "Also write the graph as GeoJSON");

  // match
  auto* match = app.add_subcommand("match", "Match rides onto the street graph");
  std::string match_graph, match_rides, match_out;
  match->add_option("--graph", match_graph, "Graph file")->required();
  match->add_option("--rides", match_rides, "Directory of .ride files")->required();
  match->add_option("--out", match_out, "Matched rides (JSON lines)")->required();

  // populate
  auto* populate = app.add_subcommand("populate", "Add matched rides and incidents to a graph");
  std::string pop_graph, pop_matched, pop_out;
  populate->add_option("--graph", pop_graph, "Graph file")->required();
  populate->add_option("--matched", pop_matched, "Matched rides")->required();
  populate->add_option("--out", pop_out, "Populated graph file")->required();

  // score
  auto* score = app.add_subcommand("score", "Score a populated graph and rank hotspots");
  std::string score_graph, score_out, score_alpha = "4.4";
  bool score_la = false, score_pool = false;
  std::optional<std::size_t> score_top_k;
  std::optional<std::string> score_threshold;
  std::int64_t score_min_rides = 10;
  score->add_option("--graph", score_graph, "Populated graph file")->required();
  score->add_option("--alpha", score_alpha, "Severity factor for scary incidents");
  score->add_flag("--length-adjusted", score_la, "Rank edges by score per meter");
  score->add_flag("--pool-directions", score_pool, "Score edges on direction-summed counts");
  auto* top_k_opt = score->add_option("--top-k", score_top_k, "Keep the k highest-ranked elements");
  score->add_option("--threshold", score_threshold, "Keep elements scoring at least this")->excludes(top_k_opt);
  score->add_option("--min-rides", score_min_rides, "Rides needed to qualify as a hotspot");
  score->add_option("--out", score_out, "Report file")->required();

  // hotspots
  auto* hotspots = app.add_subcommand("hotspots", "Export ranked hotspots of a report");
  std::string hot_report, hot_format = "geojson";
  std::optional<std::string> hot_out;
  hotspots->add_option("--report", hot_report, "Report file")->required();
  hotspots->add_option("--format", hot_format, "Output format")->check(CLI::IsMember({"geojson"}));
  hotspots->add_option("--out", hot_out, "Output file (default stdout)");

  // serve
  auto* serve = app.add_subcommand("serve", "Run the ingest and query service (needs --config)");
  std::optional<std::string> serve_listen;
  serve->add_option("--listen", serve_listen, "host:port, overrides the config");

  // export
  auto* exp = app.add_subcommand("export", "Copy a region's stored rides verbatim (needs --config)");
  std::string exp_region, exp_out;
  exp->add_option("--region", exp_region, "Region id")->required();
  exp->add_option("--out", exp_out, "Output directory")->required();

  // run
  auto* run = app.add_subcommand("run", "Full pipeline from ride files to hotspots");
  std::string run_rides, run_out;
  bool run_force = false;
  std::optional<std::string> run_alpha, run_extract, run_threshold;
  std::optional<std::size_t> run_top_k;
  std::optional<std::int64_t> run_min_rides;
  bool run_la = false;
  run->add_option("--rides", run_rides, "Directory of .ride files")->required();
  run->add_option("--out", run_out, "Output directory")->required();
  run->add_flag("--force", run_force, "Recompute even if the manifest is current");
  run->add_option("--extract", run_extract, "Map extract, overrides the config");
  run->add_option("--alpha", run_alpha, "Severity factor");
  run->add_flag("--length-adjusted", run_la, "Rank edges by score per meter");
  auto* run_top_k_opt = run->add_option("--top-k", run_top_k, "Keep the k highest-ranked elements");
  run->add_option("--threshold", run_threshold, "Keep elements scoring at least this")->excludes(run_top_k_opt);
  run->add_option("--min-rides", run_min_rides, "Rides needed to qualify as a hotspot");

  // synth
  auto* synth = app.add_subcommand("synth", "Generate synthetic fixtures");
  synth->require_subcommand(1);
  auto* synth_grid = synth->add_subcommand("grid", "Street grid extract plus rides along it");
  std::string grid_out;
  std::size_t grid_rides = 50;
  synth_grid->add_option("--out", grid_out, "Output directory")->required();
  synth_grid->add_option("--rides", grid_rides, "Number of rides");
  auto* synth_inc = synth->add_subcommand("incidents", "Rides carrying given incident counts");
  std::string inc_out, inc_region = "region";
  std::vector<std::int64_t> inc_tally;
  std::size_t inc_per_ride = 10;
  synth_inc->add_option("--out", inc_out, "Output directory")->required();
  synth_inc->add_option("--region", inc_region, "Region id");
  synth_inc->add_option("--tally", inc_tally,
                        "16 counts: scary and non-scary for each incident type in taxonomy order")
      ->delimiter(',')
      ->expected(16)
      ->required();
  synth_inc->add_option("--per-ride", inc_per_ride, "Incidents per ride")->check(CLI::PositiveNumber);

  // access-key
  auto* key = app.add_subcommand("access-key", "Print the upload access key for a UTC day");
  std::string key_salt;
  std::optional<std::string> key_date;
  key->add_option("--salt", key_salt, "Salt shared with the service")->required();
  key->add_option("--date", key_date, "UTC day YYYY-MM-DD (default today)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*detect) {
      RideHandle ride;
      check(simra_ride_load(detect_in.c_str(), &ride.ptr), detect_in);
      simra_detect_config cfg;
      simra_detect_config_default(&cfg);
      if (detect_top_k) cfg.top_k_buckets = *detect_top_k;
      if (detect_bucket_s) cfg.bucket_seconds = *detect_bucket_s;
      if (detect_min_diff) cfg.min_diff = *detect_min_diff;
      std::size_t added = 0;
      check(simra_detect(ride.ptr, &cfg, &added), detect_in);
      check(simra_ride_save(ride.ptr, detect_out.c_str()), detect_out);
      std::cout << "added " << added << " candidate incidents\n";
    } else if (*crop) {
      RideHandle ride;
      check(simra_ride_load(crop_in.c_str(), &ride.ptr), crop_in);
      simra_crop_spec spec{crop_start_s, crop_start_m, crop_end_s, crop_end_m};
      auto const before = simra_ride_sample_count(ride.ptr);
      check(simra_crop(ride.ptr, &spec), crop_in);
      check(simra_ride_save(ride.ptr, crop_out.c_str()), crop_out);
      std::cout << "kept " << simra_ride_sample_count(ride.ptr) << " of " << before << " samples\n";
    } else if (*quality) {
      ConfigHandle cfg;
      load_config(g, cfg);
      CString csv;
      check(simra_quality_report(cfg.ptr, quality_in.c_str(), g.jobs, &csv.ptr), "quality");
      write_output(quality_out, csv.str());
    } else if (*profile) {
      ConfigHandle cfg;
      load_config(g, cfg);
      CString out;
      check(simra_profile_stats(cfg.ptr, profile_rides.c_str(), profile_tz ? profile_tz->c_str() : nullptr, g.jobs,
                                &out.ptr),
            "profile-stats");
      write_output(profile_out, out.str());
    } else if (*osm) {
      CString out;
      check(simra_osm_convert(osm_in.c_str(), &out.ptr), osm_in);
      write_output(osm_out, out.str());
    } else if (*build) {
      GraphHandle graph;
      check(simra_graph_build(build_extract.c_str(), build_region.c_str(), build_width, &graph.ptr), "build-graph");
      check(simra_graph_save(graph.ptr, build_out.c_str()), build_out);
      if (build_geojson) {
        CString gj;
        check(simra_graph_geojson(graph.ptr, &gj.ptr), "build-graph");
        write_output(build_geojson, gj.str());
      }
      std::cout << simra_graph_node_count(graph.ptr) << " nodes, " << simra_graph_edge_count(graph.ptr)
                << " edges\n";
    } else if (*match) {
      ConfigHandle cfg;
      load_config(g, cfg);
      GraphHandle graph;
      check(simra_graph_load(match_graph.c_str(), &graph.ptr), match_graph);
      MatchedHandle matched;
      check(simra_match(graph.ptr, cfg.ptr, match_rides.c_str(), g.jobs, &matched.ptr), "match");
      check(simra_matched_save(matched.ptr, match_out.c_str()), match_out);
      std::cout << "matched " << simra_matched_count(matched.ptr) << " rides\n";
    } else if (*populate) {
      GraphHandle graph;
      check(simra_graph_load(pop_graph.c_str(), &graph.ptr), pop_graph);
      MatchedHandle matched;
      check(simra_matched_load(pop_matched.c_str(), &matched.ptr), pop_matched);
      check(simra_populate(graph.ptr, matched.ptr), "populate");
      check(simra_graph_save(graph.ptr, pop_out.c_str()), pop_out);
    } else if (*score) {
      GraphHandle graph;
      check(simra_graph_load(score_graph.c_str(), &graph.ptr), score_graph);
      simra_score_config cfg;
      simra_score_config_default(&cfg);
      cfg.alpha = score_alpha.c_str();
      cfg.min_rides = score_min_rides;
      cfg.length_adjusted = score_la ? 1 : 0;
      cfg.pool_directions = score_pool ? 1 : 0;
      if (score_top_k) {
        cfg.selection = SIMRA_SELECT_TOP_K;
        cfg.top_k = *score_top_k;
      } else if (score_threshold) {
        cfg.selection = SIMRA_SELECT_THRESHOLD;
        cfg.threshold = score_threshold->c_str();
      }
      CString report;
      check(simra_score(graph.ptr, &cfg, &report.ptr), "score");
      write_output(score_out, report.str());
    } else if (*hotspots) {
      std::ifstream in(hot_report, std::ios::binary);
      if (!in) throw std::runtime_error("cannot read " + hot_report);
      std::stringstream buf;
      buf << in.rdbuf();
      CString out;
      check(simra_hotspots_geojson(buf.str().c_str(), &out.ptr), hot_report);
      write_output(hot_out, out.str());
    } else if (*serve) {
      if (!g.config) throw CLI::RequiredError("--config");
      // Block termination signals so a helper thread can receive them.
      sigset_t signals;
      sigemptyset(&signals);
      sigaddset(&signals, SIGINT);
      sigaddset(&signals, SIGTERM);
      pthread_sigmask(SIG_BLOCK, &signals, nullptr);
      ServiceHandle svc;
      check(simra_service_create(g.config->c_str(), serve_listen ? serve_listen->c_str() : nullptr, &svc.ptr),
            "serve");
      int port = 0;
      check(simra_service_bind(svc.ptr, &port), "serve");
      std::thread waiter([&] {
        int sig = 0;
        sigwait(&signals, &sig);
        simra_service_stop(svc.ptr);
      });
      std::cout << "listening on port " << port << std::endl;
      auto const status = simra_service_run(svc.ptr);
      pthread_kill(waiter.native_handle(), SIGTERM);
      waiter.join();
      check(status, "serve");
    } else if (*exp) {
      if (!g.config) throw CLI::RequiredError("--config");
      std::size_t count = 0;
      check(simra_export(g.config->c_str(), exp_region.c_str(), exp_out.c_str(), &count), "export");
      std::cout << "exported " << count << " rides\n";
    } else if (*run) {
      ConfigHandle cfg;
      load_config(g, cfg);
      nlohmann::json patch = nlohmann::json::object();
      if (run_extract) patch["region"]["map_extract"] = *run_extract;
      if (run_alpha) patch["scoring"]["alpha"] = *run_alpha;
      if (run_la) patch["scoring"]["length_adjusted"] = true;
      if (run_min_rides) patch["scoring"]["min_rides"] = *run_min_rides;
      if (run_top_k) {
        patch["scoring"]["top_k"] = *run_top_k;
        patch["scoring"]["threshold"] = nullptr;
      }
      if (run_threshold) {
        patch["scoring"]["threshold"] = *run_threshold;
        patch["scoring"]["top_k"] = nullptr;
      }
      override_config(cfg, patch);
      simra_run_summary summary{};
      check(simra_run(cfg.ptr, run_rides.c_str(), run_out.c_str(), run_force ? 1 : 0, g.jobs, &summary), "run");
      if (summary.skipped) {
        std::cout << "up to date (" << summary.rides << " rides); use --force to recompute\n";
      } else {
        std::cout << summary.rides << " rides, " << summary.rides_matched << " matched, " << summary.rides_excluded
                  << " excluded, " << summary.incidents_matched << " incidents placed\n";
      }
    } else if (*synth_grid) {
      check(simra_synth_grid(grid_out.c_str(), grid_rides, g.seed), "synth");
      std::cout << "wrote map.jsonl and " << grid_rides << " rides to " << grid_out << "\n";
    } else if (*synth_inc) {
      check(simra_synth_incidents(inc_out.c_str(), inc_region.c_str(), inc_tally.data(), inc_per_ride, g.seed),
            "synth");
    } else if (*key) {
      std::int64_t const t = unix_seconds_of(key_date ? *key_date : utc_today());
      CString out;
      check(simra_access_key(key_salt.c_str(), t, &out.ptr), "access-key");
      std::cout << out.str() << "\n";
    }
  } catch (Failure const& f) {
    std::cerr << "error: ";
    if (!f.context.empty()) std::cerr << f.context << ": ";
    std::cerr << simra_last_error() << " (" << simra_status_name(f.status) << ")\n";
    return 1;
  } catch (CLI::Error const& e) {
    return app.exit(e);
  } catch (std::exception const& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
