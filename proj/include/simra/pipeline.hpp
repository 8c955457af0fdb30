#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "simra/detection.hpp"
#include "simra/matching.hpp"
#include "simra/privacy.hpp"
#include "simra/profile_stats.hpp"
#include "simra/scoring.hpp"

namespace simra {

struct RegionSettings {
  std::string id = "region";
  std::string timezone = "UTC";
  std::filesystem::path map_extract;  // resolved against the config file
  double buffer_width_m = 10.0;
};

struct QualitySettings {
  bool auto_crop = true;
  TrailingStopParams trailing_stop;
  ScreenParams screen;
  bool exclude_motorized = true;
};

struct PipelineConfig {
  RegionSettings region;
  AccelWindowConfig detection;
  double min_diff = 0.1;
  QualitySettings quality;
  WaitParams wait;
  MatchConfig matching;
  ScoreConfig scoring;

  void validate() const;
};

/// Parses a JSON config. Relative paths resolve against `base_dir`.
/// Unknown keys are rejected.
PipelineConfig parse_pipeline_config(std::string_view json_text,
                                     std::filesystem::path const& base_dir = {});
PipelineConfig load_pipeline_config(std::filesystem::path const& path);
/// Merges a JSON object of overrides (same shape as the file) into `cfg`.
void apply_overrides(PipelineConfig& cfg, std::string_view json_patch,
                     std::filesystem::path const& base_dir = {});
/// Canonical JSON of the config; its hash goes into run manifests.
std::string pipeline_config_json(PipelineConfig const& cfg);

struct QualityRow {
  std::string ride_id;
  std::string mode_flag;  // PlausibleBicycle, SuspectMotorized or InsufficientData
  double trailing_stop_trimmed_s = 0.0;
};

struct QualityOutcome {
  Ride ride;  // after auto-crop
  QualityRow row;
};

QualityOutcome assess_quality(Ride const& ride, QualitySettings const& settings);
std::string quality_csv(std::span<QualityRow const> rows);

struct Analysis {
  MapGraph graph;  // populated
  std::vector<MatchedRide> matched;
  std::vector<QualityRow> quality;  // one per input ride
  std::string report_json;
  std::size_t rides_excluded = 0;
};

/// Quality screening, matching, population and scoring of `rides` against
/// the map extract text. Output is independent of `jobs`.
Analysis analyze_rides(PipelineConfig const& cfg, std::vector<Ride> rides,
                       std::string_view extract_text, unsigned jobs = 1);

struct RunOptions {
  std::filesystem::path rides_dir;
  std::filesystem::path out_dir;
  bool force = false;
  unsigned jobs = 1;
};

struct RunSummary {
  bool skipped = false;  // manifest matched, nothing recomputed
  std::size_t rides = 0;
  std::size_t rides_matched = 0;
  std::size_t rides_excluded = 0;
  std::size_t incidents_matched = 0;
  std::string manifest_path;
};

/// Full batch: load, quality, build graph, match, populate, score, rank.
/// Writes graph.json, matched.jsonl, report.json, hotspots.geojson,
/// quality.csv and manifest.json (last) into out_dir.
RunSummary run_pipeline(PipelineConfig const& cfg, RunOptions const& opts);

}  // namespace simra
