#include "simra/pipeline.hpp"

#include <algorithm>
#include <cstdio>
#include <functional>
#include <map>

#include "csv.hpp"
#include "json.hpp"
#include "simra/error.hpp"
#include "simra/graph_io.hpp"
#include "simra/mapgraph.hpp"
#include "simra/report.hpp"
#include "simra/ride_io.hpp"
#include "simra/util.hpp"

namespace simra {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

using Handler = std::function<void(json const&)>;

// Applies handlers to the keys of `obj`; any other key is an error.
void visit(json const& obj, std::string const& where, std::map<std::string, Handler> const& handlers) {
  if (!obj.is_object()) fail(ErrorKind::InvalidArgument, "config: '" + where + "' must be an object");
  for (auto const& [key, value] : obj.items()) {
    auto it = handlers.find(key);
    if (it == handlers.end()) fail(ErrorKind::InvalidArgument, "config: unknown key '" + where + "." + key + "'");
    try {
      it->second(value);
    } catch (json::exception const& e) {
      fail(ErrorKind::InvalidArgument, "config: '" + where + "." + key + "': " + e.what());
    }
  }
}

template <class T>
Handler set(T& target) {
  return [&target](json const& v) { target = v.get<T>(); };
}

Rational number_or_exact(json const& v) {
  if (v.is_number()) return rational_from_double(v.get<double>());
  auto const s = v.get<std::string>();
  return s.find('/') != std::string::npos ? parse_exact(s) : parse_decimal(s);
}

RankMode rank_mode_from(std::string const& s) {
  if (s == "max") return RankMode::Max;
  if (s == "sum") return RankMode::Sum;
  if (s == "l2") return RankMode::L2;
  fail(ErrorKind::InvalidArgument, "config: unknown rank_mode '" + s + "'");
}

char const* rank_mode_name(RankMode m) {
  switch (m) {
    case RankMode::Sum: return "sum";
    case RankMode::L2: return "l2";
    case RankMode::Max: break;
  }
  return "max";
}

void read_config(PipelineConfig& cfg, json const& doc, fs::path const& base_dir) {
  std::optional<std::size_t> top_k;
  std::optional<Rational> threshold;
  bool selection_seen = false;
  visit(doc, "config",
        {{"region",
          [&](json const& v) {
            visit(v, "region",
                  {{"id", set(cfg.region.id)},
                   {"timezone", set(cfg.region.timezone)},
                   {"map_extract",
                    [&](json const& p) {
                      fs::path path = p.get<std::string>();
                      cfg.region.map_extract = path.is_absolute() ? path : base_dir / path;
                    }},
                   {"buffer_width_m", set(cfg.region.buffer_width_m)}});
          }},
         {"detection",
          [&](json const& v) {
            visit(v, "detection",
                  {{"moving_avg_width", set(cfg.detection.moving_avg_width)},
                   {"keep_every", set(cfg.detection.keep_every)},
                   {"bucket_seconds", set(cfg.detection.bucket_seconds)},
                   {"top_k_buckets", set(cfg.detection.top_k_buckets)},
                   {"rank_mode",
                    [&](json const& m) { cfg.detection.rank_mode = rank_mode_from(m.get<std::string>()); }},
                   {"min_diff", set(cfg.min_diff)}});
          }},
         {"quality",
          [&](json const& v) {
            visit(v, "quality",
                  {{"auto_crop", set(cfg.quality.auto_crop)},
                   {"trailing_stop_radius_m", set(cfg.quality.trailing_stop.radius_m)},
                   {"trailing_stop_min_s", set(cfg.quality.trailing_stop.min_stationary_s)},
                   {"sustained_kmh", set(cfg.quality.screen.sustained_kmh)},
                   {"sustained_s", set(cfg.quality.screen.sustained_s)},
                   {"exclude_motorized", set(cfg.quality.exclude_motorized)}});
          }},
         {"wait",
          [&](json const& v) {
            visit(v, "wait", {{"speed_ms", set(cfg.wait.speed_ms)}, {"min_s", set(cfg.wait.min_s)}});
          }},
         {"matching",
          [&](json const& v) {
            visit(v, "matching",
                  {{"snap_radius_m", set(cfg.matching.snap_radius_m)},
                   {"max_accuracy_m", set(cfg.matching.max_accuracy_m)}});
          }},
         {"scoring", [&](json const& v) {
            visit(v, "scoring",
                  {{"alpha", [&](json const& a) { cfg.scoring.alpha = number_or_exact(a); }},
                   {"min_rides", set(cfg.scoring.min_rides)},
                   {"length_adjusted", set(cfg.scoring.length_adjusted)},
                   {"pool_directions", set(cfg.scoring.pool_directions)},
                   {"top_k",
                    [&](json const& k) {
                      selection_seen = true;
                      if (!k.is_null()) top_k = k.get<std::size_t>();
                    }},
                   {"threshold", [&](json const& t) {
                      selection_seen = true;
                      if (!t.is_null()) threshold = number_or_exact(t);
                    }}});
          }}});
  if (top_k && threshold) fail(ErrorKind::InvalidArgument, "config: top_k and threshold are exclusive");
  if (top_k) {
    cfg.scoring.selection = {SelectionMode::TopK, *top_k, 0};
  } else if (threshold) {
    cfg.scoring.selection = {SelectionMode::Threshold, 0, *threshold};
  } else if (selection_seen) {
    cfg.scoring.selection = {};
  }
}

json config_json(PipelineConfig const& cfg) {
  auto const& sel = cfg.scoring.selection;
  return {
      {"region",
       {{"id", cfg.region.id},
        {"timezone", cfg.region.timezone},
        {"map_extract", cfg.region.map_extract.string()},
        {"buffer_width_m", cfg.region.buffer_width_m}}},
      {"detection",
       {{"moving_avg_width", cfg.detection.moving_avg_width},
        {"keep_every", cfg.detection.keep_every},
        {"bucket_seconds", cfg.detection.bucket_seconds},
        {"top_k_buckets", cfg.detection.top_k_buckets},
        {"rank_mode", rank_mode_name(cfg.detection.rank_mode)},
        {"min_diff", cfg.min_diff}}},
      {"quality",
       {{"auto_crop", cfg.quality.auto_crop},
        {"trailing_stop_radius_m", cfg.quality.trailing_stop.radius_m},
        {"trailing_stop_min_s", cfg.quality.trailing_stop.min_stationary_s},
        {"sustained_kmh", cfg.quality.screen.sustained_kmh},
        {"sustained_s", cfg.quality.screen.sustained_s},
        {"exclude_motorized", cfg.quality.exclude_motorized}}},
      {"wait", {{"speed_ms", cfg.wait.speed_ms}, {"min_s", cfg.wait.min_s}}},
      {"matching",
       {{"snap_radius_m", cfg.matching.snap_radius_m}, {"max_accuracy_m", cfg.matching.max_accuracy_m}}},
      {"scoring",
       {{"alpha", exact_string(cfg.scoring.alpha)},
        {"min_rides", cfg.scoring.min_rides},
        {"length_adjusted", cfg.scoring.length_adjusted},
        {"pool_directions", cfg.scoring.pool_directions},
        {"top_k", sel.mode == SelectionMode::TopK ? json(sel.k) : json(nullptr)},
        {"threshold",
         sel.mode == SelectionMode::Threshold ? json(exact_string(sel.threshold)) : json(nullptr)}}}};
}

json parse_json(std::string_view text, char const* what) {
  try {
    return json::parse(text);
  } catch (json::exception const& e) {
    fail(ErrorKind::InvalidArgument, std::string(what) + ": " + e.what());
  }
}

// Re-raises an error with the stage (and item) prefixed to its message.
template <class F>
auto in_stage(std::string const& stage, F&& f) {
  try {
    return f();
  } catch (Error const& e) {
    throw Error(e.kind(), "stage " + stage + ": " + e.what());
  }
}

}  // namespace

void PipelineConfig::validate() const {
  detection.validate();
  scoring.validate();
  if (!(region.buffer_width_m > 0.0)) fail(ErrorKind::InvalidArgument, "buffer_width_m must be positive");
  if (!(matching.snap_radius_m >= 0.0)) fail(ErrorKind::InvalidArgument, "snap_radius_m must be >= 0");
  if (!(matching.max_accuracy_m > 0.0)) fail(ErrorKind::InvalidArgument, "max_accuracy_m must be positive");
  if (!(min_diff >= 0.0)) fail(ErrorKind::InvalidArgument, "min_diff must be >= 0");
  if (!(quality.trailing_stop.radius_m > 0.0) || !(quality.trailing_stop.min_stationary_s >= 0.0)) {
    fail(ErrorKind::InvalidArgument, "trailing stop thresholds out of range");
  }
  if (!(quality.screen.sustained_kmh > 0.0) || !(quality.screen.sustained_s >= 0.0)) {
    fail(ErrorKind::InvalidArgument, "transport screening thresholds out of range");
  }
  if (!(wait.speed_ms >= 0.0) || !(wait.min_s >= 0.0)) {
    fail(ErrorKind::InvalidArgument, "wait thresholds out of range");
  }
  RegionClock{region.timezone};
}

PipelineConfig parse_pipeline_config(std::string_view json_text, fs::path const& base_dir) {
  PipelineConfig cfg;
  read_config(cfg, parse_json(json_text, "config"), base_dir);
  cfg.validate();
  return cfg;
}

PipelineConfig load_pipeline_config(fs::path const& path) {
  return parse_pipeline_config(read_file(path), path.parent_path());
}

void apply_overrides(PipelineConfig& cfg, std::string_view json_patch, fs::path const& base_dir) {
  PipelineConfig next = cfg;
  read_config(next, parse_json(json_patch, "overrides"), base_dir);
  next.validate();
  cfg = std::move(next);
}

std::string pipeline_config_json(PipelineConfig const& cfg) { return config_json(cfg).dump(1) + "\n"; }

QualityOutcome assess_quality(Ride const& ride, QualitySettings const& settings) {
  QualityOutcome out{ride, {ride.ride_id, "", 0.0}};
  if (settings.auto_crop) {
    auto cropped = auto_crop_trailing_stop(ride, settings.trailing_stop);
    out.ride = std::move(cropped.ride);
    out.row.trailing_stop_trimmed_s = static_cast<double>(cropped.trimmed_ms) / 1000.0;
  }
  try {
    out.row.mode_flag = to_string(screen_transport_mode(out.ride, settings.screen).mode);
  } catch (Error const& e) {
    if (e.kind() != ErrorKind::InsufficientData) throw;
    out.row.mode_flag = "InsufficientData";
  }
  return out;
}

std::string quality_csv(std::span<QualityRow const> rows) {
  std::string out = "ride_id,mode_flag,trailing_stop_trimmed_s\n";
  for (auto const& r : rows) {
    csv::write_field(out, r.ride_id);
    out += ',';
    out += r.mode_flag;
    out += ',';
    csv::write_fixed(out, r.trailing_stop_trimmed_s, 3);
    out += '\n';
  }
  return out;
}

Analysis analyze_rides(PipelineConfig const& cfg, std::vector<Ride> rides,
                       std::string_view extract_text, unsigned jobs) {
  Analysis out;
  out.quality.resize(rides.size());
  in_stage("quality", [&] {
    parallel_for(rides.size(), jobs, [&](std::size_t i) {
      try {
        auto outcome = assess_quality(rides[i], cfg.quality);
        rides[i] = std::move(outcome.ride);
        out.quality[i] = std::move(outcome.row);
      } catch (Error const& e) {
        throw Error(e.kind(), "ride " + rides[i].ride_id + ": " + e.what());
      }
    });
  });

  out.graph = in_stage("build-graph", [&] {
    BuildParams params{cfg.region.id, cfg.region.buffer_width_m, 0.5};
    return build_graph(parse_extract(extract_text), params);
  });

  std::vector<std::size_t> selected;
  for (std::size_t i = 0; i < rides.size(); ++i) {
    if (cfg.quality.exclude_motorized && out.quality[i].mode_flag == "SuspectMotorized") {
      ++out.rides_excluded;
      continue;
    }
    selected.push_back(i);
  }
  out.matched.resize(selected.size());
  in_stage("match", [&] {
    GraphIndex const index(out.graph);
    parallel_for(selected.size(), jobs, [&](std::size_t k) {
      auto const& ride = rides[selected[k]];
      try {
        out.matched[k] = match_ride(ride, index, cfg.matching);
      } catch (Error const& e) {
        throw Error(e.kind(), "ride " + ride.ride_id + ": " + e.what());
      }
    });
  });
  in_stage("populate", [&] { populate(out.graph, out.matched); });

  out.report_json = in_stage("score", [&] {
    auto const scores = score_graph(out.graph, cfg.scoring);
    auto const ranking = rank_hotspots(scores.scores, cfg.scoring);
    return build_report(out.graph, scores, ranking, cfg.scoring);
  });
  return out;
}

RunSummary run_pipeline(PipelineConfig const& cfg, RunOptions const& opts) {
  cfg.validate();
  RunSummary summary;
  auto const files = in_stage("load", [&] { return list_files(opts.rides_dir, ".ride"); });
  if (files.empty()) fail(ErrorKind::InvalidArgument, "no rides found in " + opts.rides_dir.string());

  std::vector<std::string> bytes(files.size());
  std::vector<std::string> hashes(files.size());
  parallel_for(files.size(), opts.jobs, [&](std::size_t i) {
    bytes[i] = read_file(files[i]);
    hashes[i] = sha256_hex(bytes[i]);
  });
  auto const extract_text = in_stage("build-graph", [&] { return read_file(cfg.region.map_extract); });

  json inputs = json::array();
  for (std::size_t i = 0; i < files.size(); ++i) {
    inputs.push_back({{"file", files[i].filename().string()}, {"sha256", hashes[i]}});
  }
  json manifest = {{"format", "simra-manifest v1"},
                   {"config_sha256", sha256_hex(pipeline_config_json(cfg))},
                   {"map_extract_sha256", sha256_hex(extract_text)},
                   {"inputs", inputs}};

  auto const manifest_path = opts.out_dir / "manifest.json";
  summary.manifest_path = manifest_path.string();
  if (!opts.force && fs::exists(manifest_path)) {
    try {
      auto const previous = json::parse(read_file(manifest_path));
      bool same = previous.at("config_sha256") == manifest["config_sha256"] &&
                  previous.at("map_extract_sha256") == manifest["map_extract_sha256"] &&
                  previous.at("inputs") == manifest["inputs"];
      for (auto const& [name, hash] : previous.at("outputs").items()) {
        if (!same) break;
        auto const path = opts.out_dir / name;
        same = fs::exists(path) && sha256_hex(read_file(path)) == hash.get<std::string>();
      }
      if (same) {
        summary.skipped = true;
        summary.rides = files.size();
        return summary;
      }
    } catch (std::exception const&) {
      // unreadable manifest: recompute
    }
  }

  std::vector<Ride> rides(files.size());
  in_stage("load", [&] {
    parallel_for(files.size(), opts.jobs, [&](std::size_t i) {
      try {
        rides[i] = parse_ride(bytes[i]);
      } catch (Error const& e) {
        throw Error(e.kind(), "ride " + files[i].filename().string() + ": " + e.what());
      }
    });
  });
  summary.rides = rides.size();
  auto analysis = analyze_rides(cfg, std::move(rides), extract_text, opts.jobs);
  auto const hotspots = in_stage("hotspots", [&] { return hotspots_geojson(analysis.report_json); });

  std::vector<std::pair<std::string, std::string>> outputs = {
      {"graph.json", serialize_graph(analysis.graph)},
      {"matched.jsonl", serialize_matched(analysis.matched)},
      {"report.json", analysis.report_json},
      {"hotspots.geojson", hotspots},
      {"quality.csv", quality_csv(analysis.quality)},
  };
  in_stage("write", [&] {
    fs::create_directories(opts.out_dir);
    json out_hashes = json::object();
    for (auto const& [name, content] : outputs) {
      write_file_atomic(opts.out_dir / name, content);
      out_hashes[name] = sha256_hex(content);
    }
    manifest["outputs"] = out_hashes;
    write_file_atomic(manifest_path, manifest.dump(1) + "\n");
  });

  summary.rides_excluded = analysis.rides_excluded;
  for (auto const& m : analysis.matched) {
    if (!m.traversal.empty()) ++summary.rides_matched;
    summary.incidents_matched += m.incidents.size();
  }
  return summary;
}

}  // namespace simra
