#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <shared_mutex>
#include <string>
#include <string_view>
#include <vector>

#include "simra/pipeline.hpp"
#include "simra/ride.hpp"

namespace simra {

using Clock = std::function<std::chrono::system_clock::time_point()>;

/// "YYYY-MM-DD" of the UTC day containing `t`.
std::string utc_date(std::chrono::system_clock::time_point t);
/// Hex SHA-256 of the UTC date string followed by the salt.
std::string access_key_for(std::string_view utc_date, std::string_view salt);
/// Accepts keys for the current or the previous UTC day; compares in
/// constant time.
bool access_key_valid(std::string_view key, std::chrono::system_clock::time_point now,
                      std::string_view salt);

struct ServiceRegion {
  std::string id;
  std::string timezone = "UTC";
  std::filesystem::path map_extract;
};

struct ServiceConfig {
  std::string host = "127.0.0.1";
  int port = 8080;  // 0 picks a free port
  std::filesystem::path data_dir = "data";
  std::string salt;
  std::vector<ServiceRegion> regions;
  PipelineConfig pipeline;  // region section is taken from `regions`
  unsigned pipeline_jobs = 1;
};

/// Sets host and port from "host:port".
void set_listen(ServiceConfig& cfg, std::string_view listen);

ServiceConfig parse_service_config(std::string_view json_text,
                                   std::filesystem::path const& base_dir = {});
ServiceConfig load_service_config(std::filesystem::path const& path);

struct QueryFilter {
  std::optional<TimestampMs> from;  // inclusive
  std::optional<TimestampMs> to;    // exclusive
  std::vector<IncidentType> incident_types;  // empty: any
  std::optional<bool> scary;
  std::vector<BikeType> bike_types;
  std::vector<PhoneLocation> phone_locations;
  std::optional<bool> trailer;
  std::optional<bool> child;

  bool incident_constrained() const {
    return !incident_types.empty() || scary.has_value();
  }
};

/// Parses query parameters; unknown keys or bad values throw
/// InvalidArgument.
QueryFilter parse_filter(std::multimap<std::string, std::string> const& params);

bool ride_matches(QueryFilter const& f, Ride const& ride);
bool incident_matches(QueryFilter const& f, Ride const& ride, Incident const& incident);

struct StoredRide {
  std::string content_hash;
  std::string ride_id;  // assigned at ingest
  std::string mode_flag;
  double trailing_stop_trimmed_s = 0.0;
  std::shared_ptr<Ride const> ride;  // parsed from the stored bytes
};

struct Snapshot {
  std::uint64_t version = 0;
  std::string report_json;
  std::string graph_json;
};

// Rides and profiles of one region on disk: rides/<sha256>.ride holds the
// uploaded bytes, rides/<sha256>.json the ingest record. The record is
// written last, so a ride without one never became visible and is removed
// on open.
class RegionStore {
 public:
  /// With `repair`, leftovers of interrupted writes are deleted.
  RegionStore(std::filesystem::path dir, ServiceRegion region, PipelineConfig pipeline,
              bool repair = true);

  ServiceRegion const& region() const { return region_; }
  std::filesystem::path const& dir() const { return dir_; }

  /// Throws Format/Validation for bad rides and Conflict for duplicates.
  StoredRide ingest_ride(std::string_view bytes);
  std::string ingest_profile(std::string_view bytes);

  std::vector<StoredRide> rides() const;
  std::optional<StoredRide> find_ride(std::string_view ride_id) const;
  std::string ride_bytes(StoredRide const& ride) const;
  std::size_t profile_count() const;

  /// Recomputes graph and scores from all stored rides and publishes the
  /// result as the next snapshot.
  std::shared_ptr<Snapshot const> analyze(unsigned jobs = 1);
  std::shared_ptr<Snapshot const> snapshot() const;

  /// Copies the stored ride files verbatim into `out_dir`. Returns count.
  std::size_t export_rides(std::filesystem::path const& out_dir) const;

 private:
  void scan(bool repair);

  std::filesystem::path dir_;
  ServiceRegion region_;
  PipelineConfig pipeline_;
  mutable std::shared_mutex index_mutex_;
  std::mutex write_mutex_;
  std::mutex analyze_mutex_;
  std::vector<StoredRide> rides_;
  std::map<std::string, std::size_t, std::less<>> by_hash_;
  std::map<std::string, std::size_t, std::less<>> by_id_;
  std::size_t profiles_ = 0;
  mutable std::mutex snapshot_mutex_;
  std::shared_ptr<Snapshot const> snapshot_;
};

class Service {
 public:
  explicit Service(ServiceConfig cfg, Clock clock = {});
  ~Service();
  Service(Service const&) = delete;
  Service& operator=(Service const&) = delete;

  /// Binds the listening socket; returns the bound port.
  int bind();
  /// Serves until stop(). Call bind() first.
  void run();
  void stop();

  RegionStore* store(std::string_view region);

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace simra
