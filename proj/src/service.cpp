#include "simra/service.hpp"

#include <absl/time/time.h>
#include <openssl/crypto.h>

#include <algorithm>
#include <charconv>
#include <mutex>

#include "httplib.h"
#include "json.hpp"
#include "simra/error.hpp"
#include "simra/graph_io.hpp"
#include "simra/ride_io.hpp"
#include "simra/util.hpp"

namespace simra {

namespace fs = std::filesystem;
using nlohmann::json;

std::string utc_date(std::chrono::system_clock::time_point t) {
  return absl::FormatTime("%Y-%m-%d", absl::FromChrono(t), absl::UTCTimeZone());
}

std::string access_key_for(std::string_view date, std::string_view salt) {
  std::string input(date);
  input += salt;
  return sha256_hex(input);
}

bool access_key_valid(std::string_view key, std::chrono::system_clock::time_point now,
                      std::string_view salt) {
  using namespace std::chrono_literals;
  bool ok = false;
  for (auto day : {now, now - 24h}) {
    auto const expected = access_key_for(utc_date(day), salt);
    if (key.size() == expected.size()) {
      ok |= CRYPTO_memcmp(key.data(), expected.data(), expected.size()) == 0;
    }
  }
  return ok;
}

void set_listen(ServiceConfig& cfg, std::string_view listen) {
  auto const colon = listen.rfind(':');
  if (colon == std::string_view::npos) fail(ErrorKind::InvalidArgument, "listen must be host:port");
  auto const port = listen.substr(colon + 1);
  int value = 0;
  auto [ptr, ec] = std::from_chars(port.data(), port.data() + port.size(), value);
  if (ec != std::errc{} || ptr != port.data() + port.size() || value < 0 || value > 65535) {
    fail(ErrorKind::InvalidArgument, "bad listen port '" + std::string(port) + "'");
  }
  cfg.host = std::string(listen.substr(0, colon));
  cfg.port = value;
}

ServiceConfig parse_service_config(std::string_view json_text, fs::path const& base_dir) {
  ServiceConfig cfg;
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (json::exception const& e) {
    fail(ErrorKind::InvalidArgument, std::string("service config: ") + e.what());
  }
  auto resolve = [&](std::string const& p) {
    fs::path path = p;
    return path.is_absolute() ? path : base_dir / path;
  };
  try {
    for (auto const& [key, value] : doc.items()) {
      if (key == "listen") {
        set_listen(cfg, value.get<std::string>());
      } else if (key == "data_dir") {
        cfg.data_dir = resolve(value.get<std::string>());
      } else if (key == "jobs") {
        cfg.pipeline_jobs = std::max(1u, value.get<unsigned>());
      } else if (key == "salt") {
        cfg.salt = value.get<std::string>();
      } else if (key == "regions") {
        for (auto const& r : value) {
          ServiceRegion region;
          for (auto const& [rk, rv] : r.items()) {
            if (rk == "id") {
              region.id = rv.get<std::string>();
            } else if (rk == "timezone") {
              region.timezone = rv.get<std::string>();
            } else if (rk == "map_extract") {
              region.map_extract = resolve(rv.get<std::string>());
            } else {
              fail(ErrorKind::InvalidArgument, "service config: unknown region key '" + rk + "'");
            }
          }
          if (region.id.empty() || region.id.find_first_of("/\\.") != std::string::npos) {
            fail(ErrorKind::InvalidArgument, "service config: bad region id '" + region.id + "'");
          }
          cfg.regions.push_back(std::move(region));
        }
      } else if (key == "pipeline") {
        apply_overrides(cfg.pipeline, value.dump(), base_dir);
      } else {
        fail(ErrorKind::InvalidArgument, "service config: unknown key '" + key + "'");
      }
    }
  } catch (json::exception const& e) {
    fail(ErrorKind::InvalidArgument, std::string("service config: ") + e.what());
  }
  if (cfg.salt.empty()) fail(ErrorKind::InvalidArgument, "service config: salt is required");
  if (cfg.regions.empty()) fail(ErrorKind::InvalidArgument, "service config: no regions");
  return cfg;
}

ServiceConfig load_service_config(fs::path const& path) {
  return parse_service_config(read_file(path), path.parent_path());
}

namespace {

std::vector<std::string> split_list(std::string const& value) {
  std::vector<std::string> out;
  std::size_t pos = 0;
  while (pos <= value.size()) {
    auto end = value.find(',', pos);
    if (end == std::string::npos) end = value.size();
    if (end > pos) out.push_back(value.substr(pos, end - pos));
    pos = end + 1;
  }
  return out;
}

bool parse_bool(std::string const& key, std::string const& v) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  fail(ErrorKind::InvalidArgument, "filter '" + key + "' expects true or false");
}

TimestampMs parse_ts(std::string const& key, std::string const& v) {
  TimestampMs out = 0;
  auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc{} || ptr != v.data() + v.size()) {
    fail(ErrorKind::InvalidArgument, "filter '" + key + "' expects epoch milliseconds");
  }
  return out;
}

IncidentType parse_type(std::string const& v) {
  long code = 0;
  auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), code);
  auto const t = ec == std::errc{} && ptr == v.data() + v.size() ? incident_type_from_code(code)
                                                                  : incident_type_from_name(v);
  if (!t) fail(ErrorKind::InvalidArgument, "unknown incident type '" + v + "'");
  return *t;
}

template <class T>
bool contains_or_empty(std::vector<T> const& set, T value) {
  return set.empty() || std::find(set.begin(), set.end(), value) != set.end();
}

bool context_matches(QueryFilter const& f, Ride const& ride) {
  return contains_or_empty(f.bike_types, ride.context.bike) &&
         contains_or_empty(f.phone_locations, ride.context.phone) &&
         (!f.trailer || *f.trailer == ride.context.trailer) &&
         (!f.child || *f.child == ride.context.child_transport);
}

bool incident_fields_match(QueryFilter const& f, Incident const& inc) {
  return contains_or_empty(f.incident_types, inc.type) && (!f.scary || *f.scary == inc.scary);
}

}  // namespace

QueryFilter parse_filter(std::multimap<std::string, std::string> const& params) {
  QueryFilter f;
  for (auto const& [key, value] : params) {
    if (key == "from") {
      f.from = parse_ts(key, value);
    } else if (key == "to") {
      f.to = parse_ts(key, value);
    } else if (key == "incident_type") {
      for (auto const& v : split_list(value)) f.incident_types.push_back(parse_type(v));
    } else if (key == "scary") {
      f.scary = parse_bool(key, value);
    } else if (key == "bike_type") {
      for (auto const& v : split_list(value)) {
        auto b = bike_type_from_name(v);
        if (!b) fail(ErrorKind::InvalidArgument, "unknown bike type '" + v + "'");
        f.bike_types.push_back(*b);
      }
    } else if (key == "phone_location") {
      for (auto const& v : split_list(value)) {
        auto p = phone_location_from_name(v);
        if (!p) fail(ErrorKind::InvalidArgument, "unknown phone location '" + v + "'");
        f.phone_locations.push_back(*p);
      }
    } else if (key == "trailer") {
      f.trailer = parse_bool(key, value);
    } else if (key == "child") {
      f.child = parse_bool(key, value);
    } else {
      fail(ErrorKind::InvalidArgument, "unknown filter '" + key + "'");
    }
  }
  return f;
}

bool ride_matches(QueryFilter const& f, Ride const& ride) {
  if (!context_matches(f, ride)) return false;
  if (f.from && ride.start_ts() < *f.from) return false;
  if (f.to && ride.start_ts() >= *f.to) return false;
  if (!f.incident_constrained()) return true;
  return std::any_of(ride.incidents.begin(), ride.incidents.end(),
                     [&](Incident const& inc) { return incident_fields_match(f, inc); });
}

bool incident_matches(QueryFilter const& f, Ride const& ride, Incident const& inc) {
  if (!context_matches(f, ride) || !incident_fields_match(f, inc)) return false;
  if (f.from && inc.timestamp < *f.from) return false;
  if (f.to && inc.timestamp >= *f.to) return false;
  return true;
}

// ---------------------------------------------------------------------------

namespace {

bool has_suffix(std::string const& s, std::string_view suffix) {
  return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

std::optional<std::uint64_t> snapshot_version(std::string const& name) {
  constexpr std::string_view prefix = "report-";
  if (name.rfind(prefix, 0) != 0 || !has_suffix(name, ".json")) return std::nullopt;
  std::uint64_t v = 0;
  auto const digits = name.substr(prefix.size(), name.size() - prefix.size() - 5);
  auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), v);
  if (ec != std::errc{} || ptr != digits.data() + digits.size()) return std::nullopt;
  return v;
}

}  // namespace

RegionStore::RegionStore(fs::path dir, ServiceRegion region, PipelineConfig pipeline, bool repair)
    : dir_(std::move(dir)), region_(std::move(region)), pipeline_(std::move(pipeline)) {
  pipeline_.region.id = region_.id;
  pipeline_.region.timezone = region_.timezone;
  pipeline_.region.map_extract = region_.map_extract;
  if (repair) {
    for (auto const* sub : {"rides", "profiles", "snapshots"}) fs::create_directories(dir_ / sub);
  }
  scan(repair);
}

void RegionStore::scan(bool repair) {
  auto const rides_dir = dir_ / "rides";
  auto const profiles_dir = dir_ / "profiles";
  auto const snapshots_dir = dir_ / "snapshots";
  auto remove_if_repair = [&](fs::path const& p) {
    if (repair) fs::remove(p);
  };
  auto is_temp = [](std::string const& name) { return name.find(".tmp.") != std::string::npos; };

  if (fs::exists(rides_dir)) {
    for (auto const& path : list_files(rides_dir)) {
      auto const name = path.filename().string();
      if (is_temp(name)) {
        remove_if_repair(path);
        continue;
      }
      auto sibling = path;
      if (has_suffix(name, ".ride")) {
        if (!fs::exists(sibling.replace_extension(".json"))) remove_if_repair(path);
        continue;
      }
      if (!has_suffix(name, ".json")) continue;
      auto const ride_path = sibling.replace_extension(".ride");
      if (!fs::exists(ride_path)) {
        remove_if_repair(path);
        continue;
      }
      auto const bytes = read_file(ride_path);
      auto const hash = path.stem().string();
      if (sha256_hex(bytes) != hash) {
        fail(ErrorKind::Consistency, "stored ride " + ride_path.string() + " does not match its hash");
      }
      json meta;
      try {
        meta = json::parse(read_file(path));
      } catch (json::exception const& e) {
        fail(ErrorKind::Consistency, "ingest record " + path.string() + ": " + e.what());
      }
      StoredRide stored;
      stored.content_hash = hash;
      stored.ride_id = meta.at("ride_id").get<std::string>();
      stored.mode_flag = meta.value("mode_flag", "");
      stored.trailing_stop_trimmed_s = meta.value("trailing_stop_trimmed_s", 0.0);
      auto ride = parse_ride(bytes);
      ride.ride_id = stored.ride_id;
      stored.ride = std::make_shared<Ride const>(std::move(ride));
      rides_.push_back(std::move(stored));
    }
  }
  std::sort(rides_.begin(), rides_.end(),
            [](StoredRide const& a, StoredRide const& b) { return a.content_hash < b.content_hash; });
  by_id_.clear();
  for (std::size_t i = 0; i < rides_.size(); ++i) {
    by_hash_[rides_[i].content_hash] = i;
    by_id_[rides_[i].ride_id] = i;
  }

  if (fs::exists(profiles_dir)) {
    for (auto const& path : list_files(profiles_dir)) {
      auto const name = path.filename().string();
      if (is_temp(name)) {
        remove_if_repair(path);
      } else if (has_suffix(name, ".profile")) {
        ++profiles_;
      }
    }
  }

  if (fs::exists(snapshots_dir)) {
    std::optional<std::uint64_t> latest;
    for (auto const& path : list_files(snapshots_dir)) {
      auto const name = path.filename().string();
      if (is_temp(name)) {
        remove_if_repair(path);
        continue;
      }
      auto v = snapshot_version(name);
      if (v && (!latest || *v > *latest)) latest = v;
    }
    if (latest) {
      auto snap = std::make_shared<Snapshot>();
      snap->version = *latest;
      auto const stem = std::to_string(*latest) + ".json";
      snap->report_json = read_file(snapshots_dir / ("report-" + stem));
      auto const graph_path = snapshots_dir / ("graph-" + stem);
      if (fs::exists(graph_path)) snap->graph_json = read_file(graph_path);
      snapshot_ = std::move(snap);
    }
  }
}

StoredRide RegionStore::ingest_ride(std::string_view bytes) {
  auto ride = parse_ride(bytes);
  if (ride.region != region_.id) {
    fail(ErrorKind::Validation, "ride belongs to region '" + ride.region + "', not '" + region_.id + "'");
  }
  auto const quality = assess_quality(ride, pipeline_.quality).row;
  StoredRide stored;
  stored.content_hash = sha256_hex(bytes);
  stored.mode_flag = quality.mode_flag;
  stored.trailing_stop_trimmed_s = quality.trailing_stop_trimmed_s;

  std::lock_guard write_lock(write_mutex_);
  {
    std::shared_lock read_lock(index_mutex_);
    if (by_hash_.contains(stored.content_hash)) fail(ErrorKind::Conflict, "ride already uploaded");
    do {
      stored.ride_id = new_ride_id();
    } while (by_id_.contains(stored.ride_id));
  }
  ride.ride_id = stored.ride_id;
  stored.ride = std::make_shared<Ride const>(std::move(ride));

  auto const base = dir_ / "rides" / stored.content_hash;
  write_file_atomic(fs::path(base).concat(".ride"), bytes);
  json meta = {{"ride_id", stored.ride_id},
               {"content_hash", stored.content_hash},
               {"mode_flag", stored.mode_flag},
               {"trailing_stop_trimmed_s", stored.trailing_stop_trimmed_s}};
  write_file_atomic(fs::path(base).concat(".json"), meta.dump() + "\n");

  std::unique_lock index_lock(index_mutex_);
  // Keep the hash order so listings stay deterministic.
  auto const pos = std::lower_bound(rides_.begin(), rides_.end(), stored.content_hash,
                                    [](StoredRide const& r, std::string const& h) { return r.content_hash < h; });
  rides_.insert(pos, stored);
  by_hash_.clear();
  by_id_.clear();
  for (std::size_t i = 0; i < rides_.size(); ++i) {
    by_hash_[rides_[i].content_hash] = i;
    by_id_[rides_[i].ride_id] = i;
  }
  return stored;
}

std::string RegionStore::ingest_profile(std::string_view bytes) {
  auto const profile = parse_profile(bytes);
  if (profile.region != region_.id) {
    fail(ErrorKind::Validation, "profile belongs to region '" + profile.region + "', not '" + region_.id + "'");
  }
  auto const hash = sha256_hex(bytes);
  auto const path = dir_ / "profiles" / (hash + ".profile");
  std::lock_guard write_lock(write_mutex_);
  if (fs::exists(path)) fail(ErrorKind::Conflict, "profile already uploaded");
  write_file_atomic(path, bytes);
  std::unique_lock index_lock(index_mutex_);
  ++profiles_;
  return hash;
}

std::vector<StoredRide> RegionStore::rides() const {
  std::shared_lock lock(index_mutex_);
  return rides_;
}

std::optional<StoredRide> RegionStore::find_ride(std::string_view ride_id) const {
  std::shared_lock lock(index_mutex_);
  auto it = by_id_.find(ride_id);
  if (it == by_id_.end()) return std::nullopt;
  return rides_[it->second];
}

std::string RegionStore::ride_bytes(StoredRide const& ride) const {
  return read_file(dir_ / "rides" / (ride.content_hash + ".ride"));
}

std::size_t RegionStore::profile_count() const {
  std::shared_lock lock(index_mutex_);
  return profiles_;
}

std::shared_ptr<Snapshot const> RegionStore::analyze(unsigned jobs) {
  std::lock_guard lock(analyze_mutex_);
  auto const stored = rides();
  std::vector<Ride> rides;
  rides.reserve(stored.size());
  for (auto const& s : stored) rides.push_back(*s.ride);
  auto const analysis = analyze_rides(pipeline_, std::move(rides), read_file(region_.map_extract), jobs);

  auto snap = std::make_shared<Snapshot>();
  auto const previous = snapshot();
  snap->version = previous ? previous->version + 1 : 1;
  snap->report_json = analysis.report_json;
  snap->graph_json = serialize_graph(analysis.graph);
  auto const stem = std::to_string(snap->version) + ".json";
  write_file_atomic(dir_ / "snapshots" / ("graph-" + stem), snap->graph_json);
  write_file_atomic(dir_ / "snapshots" / ("report-" + stem), snap->report_json);
  std::lock_guard swap_lock(snapshot_mutex_);
  snapshot_ = snap;
  return snap;
}

std::shared_ptr<Snapshot const> RegionStore::snapshot() const {
  std::lock_guard lock(snapshot_mutex_);
  return snapshot_;
}

std::size_t RegionStore::export_rides(fs::path const& out_dir) const {
  fs::create_directories(out_dir);
  auto const all = rides();
  for (auto const& r : all) write_file_atomic(out_dir / (r.content_hash + ".ride"), ride_bytes(r));
  return all.size();
}

// ---------------------------------------------------------------------------

namespace {

int http_status(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Format:
    case ErrorKind::Validation:
    case ErrorKind::EmptyRide:
    case ErrorKind::InsufficientData:
      return 422;
    case ErrorKind::Conflict: return 409;
    case ErrorKind::NotFound: return 404;
    case ErrorKind::Unauthorized: return 401;
    case ErrorKind::InvalidArgument: return 400;
    default: return 500;
  }
}

void send_json(httplib::Response& res, json const& body, int status = 200) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

json coordinates(GeoPoint const& p) { return json::array({p.lon, p.lat}); }

json ride_properties(StoredRide const& s) {
  auto const& ride = *s.ride;
  return {{"ride_id", s.ride_id},
          {"start_ts", ride.start_ts()},
          {"end_ts", ride.end_ts()},
          {"bike_type", to_string(ride.context.bike)},
          {"phone_location", to_string(ride.context.phone)},
          {"trailer", ride.context.trailer},
          {"child", ride.context.child_transport},
          {"incident_count", ride.incidents.size()},
          {"mode_flag", s.mode_flag},
          {"trailing_stop_trimmed_s", s.trailing_stop_trimmed_s}};
}

json ride_feature(StoredRide const& s) {
  json line = json::array();
  for (auto const& sample : s.ride->samples) {
    if (sample.location) line.push_back(coordinates(*sample.location));
  }
  json geometry = line.size() >= 2 ? json{{"type", "LineString"}, {"coordinates", line}} : json(nullptr);
  return {{"type", "Feature"}, {"geometry", geometry}, {"properties", ride_properties(s)}};
}

json incident_feature(StoredRide const& s, Incident const& inc) {
  json participants = json::array();
  for (std::size_t p = 0; p < kParticipantCount; ++p) {
    if (inc.participants.test(p)) participants.push_back(to_string(static_cast<Participant>(p)));
  }
  return {{"type", "Feature"},
          {"geometry", {{"type", "Point"}, {"coordinates", coordinates(inc.location)}}},
          {"properties",
           {{"ride_id", s.ride_id},
            {"timestamp", inc.timestamp},
            {"incident_type", to_string(inc.type)},
            {"incident_code", static_cast<int>(inc.type)},
            {"scary", inc.scary},
            {"participants", participants},
            {"description", inc.description},
            {"auto_detected", inc.auto_detected},
            {"bike_type", to_string(s.ride->context.bike)},
            {"phone_location", to_string(s.ride->context.phone)},
            {"trailer", s.ride->context.trailer},
            {"child", s.ride->context.child_transport}}}};
}

std::multimap<std::string, std::string> query_params(httplib::Request const& req) {
  return {req.params.begin(), req.params.end()};
}

}  // namespace

struct Service::Impl {
  ServiceConfig cfg;
  Clock clock;
  std::map<std::string, std::unique_ptr<RegionStore>, std::less<>> stores;
  httplib::Server server;

  RegionStore& region(std::string const& id) {
    auto it = stores.find(id);
    if (it == stores.end()) fail(ErrorKind::NotFound, "unknown region '" + id + "'");
    return *it->second;
  }

  void authorize(httplib::Request const& req) {
    auto const key = req.get_header_value("X-Access-Key");
    if (!access_key_valid(key, clock(), cfg.salt)) fail(ErrorKind::Unauthorized, "invalid access key");
  }

  template <class F>
  httplib::Server::Handler guarded(F f) {
    return [f](httplib::Request const& req, httplib::Response& res) {
      try {
        f(req, res);
      } catch (Error const& e) {
        send_json(res, {{"error", to_string(e.kind())}, {"message", e.what()}}, http_status(e.kind()));
      } catch (std::exception const& e) {
        send_json(res, {{"error", "Internal"}, {"message", e.what()}}, 500);
      }
    };
  }

  void routes() {
    server.Post(R"(/api/([^/]+)/rides)", guarded([this](auto const& req, auto& res) {
      authorize(req);
      auto const stored = region(req.matches[1]).ingest_ride(req.body);
      send_json(res, {{"ride_id", stored.ride_id}, {"mode_flag", stored.mode_flag}});
    }));
    server.Post(R"(/api/([^/]+)/profiles)", guarded([this](auto const& req, auto& res) {
      authorize(req);
      send_json(res, {{"profile_id", region(req.matches[1]).ingest_profile(req.body)}});
    }));
    server.Post(R"(/api/([^/]+)/analyze)", guarded([this](auto const& req, auto& res) {
      authorize(req);
      auto const snap = region(req.matches[1]).analyze(cfg.pipeline_jobs);
      send_json(res, {{"version", snap->version}});
    }));
    server.Get(R"(/api/([^/]+)/rides)", guarded([this](auto const& req, auto& res) {
      auto& store = region(req.matches[1]);
      auto const filter = parse_filter(query_params(req));
      json features = json::array();
      for (auto const& s : store.rides()) {
        if (ride_matches(filter, *s.ride)) features.push_back(ride_feature(s));
      }
      auto const count = features.size();
      send_json(res, {{"type", "FeatureCollection"}, {"count", count}, {"features", std::move(features)}});
    }));
    server.Get(R"(/api/([^/]+)/rides/([^/]+))", guarded([this](auto const& req, auto& res) {
      auto& store = region(req.matches[1]);
      auto const found = store.find_ride(std::string(req.matches[2]));
      if (!found) fail(ErrorKind::NotFound, "unknown ride");
      res.set_content(store.ride_bytes(*found), "text/plain; charset=utf-8");
    }));
    server.Get(R"(/api/([^/]+)/incidents)", guarded([this](auto const& req, auto& res) {
      auto& store = region(req.matches[1]);
      auto const filter = parse_filter(query_params(req));
      json features = json::array();
      for (auto const& s : store.rides()) {
        for (auto const& inc : s.ride->incidents) {
          if (incident_matches(filter, *s.ride, inc)) features.push_back(incident_feature(s, inc));
        }
      }
      auto const count = features.size();
      send_json(res, {{"type", "FeatureCollection"}, {"count", count}, {"features", std::move(features)}});
    }));
    server.Get(R"(/api/([^/]+)/stats)", guarded([this](auto const& req, auto& res) {
      auto& store = region(req.matches[1]);
      auto const filter = parse_filter(query_params(req));
      std::array<std::array<std::int64_t, 2>, kLabeledTypeCount> counts{};
      std::int64_t unlabeled = 0;
      std::int64_t rides = 0;
      for (auto const& s : store.rides()) {
        if (ride_matches(filter, *s.ride)) ++rides;
        for (auto const& inc : s.ride->incidents) {
          if (!incident_matches(filter, *s.ride, inc)) continue;
          if (!inc.labeled()) {
            ++unlabeled;
          } else {
            ++counts[type_row(inc.type)][inc.scary ? 0 : 1];
          }
        }
      }
      json types = json::object();
      for (std::size_t t = 0; t < kLabeledTypeCount; ++t) {
        types[std::string(to_string(type_from_row(t)))] = {{"scary", counts[t][0]}, {"non_scary", counts[t][1]}};
      }
      send_json(res, {{"region", store.region().id},
                      {"rides", rides},
                      {"profiles", store.profile_count()},
                      {"incidents", types},
                      {"unlabeled", unlabeled}});
    }));
    server.Get(R"(/api/([^/]+)/hotspots)", guarded([this](auto const& req, auto& res) {
      auto const snap = region(req.matches[1]).snapshot();
      if (!snap) fail(ErrorKind::NotFound, "no analysis snapshot yet");
      res.set_header("X-Snapshot-Version", std::to_string(snap->version));
      res.set_content(snap->report_json, "application/json");
    }));
  }
};

Service::Service(ServiceConfig cfg, Clock clock) : impl_(std::make_unique<Impl>()) {
  impl_->cfg = std::move(cfg);
  impl_->clock = clock ? std::move(clock) : Clock([] { return std::chrono::system_clock::now(); });
  for (auto const& r : impl_->cfg.regions) {
    if (impl_->stores.contains(r.id)) fail(ErrorKind::InvalidArgument, "duplicate region '" + r.id + "'");
    impl_->stores.emplace(r.id, std::make_unique<RegionStore>(impl_->cfg.data_dir / r.id, r, impl_->cfg.pipeline));
  }
  impl_->routes();
}

Service::~Service() { stop(); }

int Service::bind() {
  auto& cfg = impl_->cfg;
  if (cfg.port == 0) {
    int const port = impl_->server.bind_to_any_port(cfg.host);
    if (port < 0) fail(ErrorKind::Io, "cannot bind " + cfg.host);
    return port;
  }
  if (!impl_->server.bind_to_port(cfg.host, cfg.port)) {
    fail(ErrorKind::Io, "cannot bind " + cfg.host + ":" + std::to_string(cfg.port));
  }
  return cfg.port;
}

void Service::run() { impl_->server.listen_after_bind(); }

void Service::stop() {
  if (impl_->server.is_running()) impl_->server.stop();
}

RegionStore* Service::store(std::string_view region) {
  auto it = impl_->stores.find(region);
  return it == impl_->stores.end() ? nullptr : it->second.get();
}

}  // namespace simra
