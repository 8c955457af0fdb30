#include "simra/ride_io.hpp"

#include <fstream>
#include <limits>
#include <sstream>

#include "csv.hpp"
#include "simra/error.hpp"
#include "simra/util.hpp"

namespace simra {

namespace {

constexpr std::string_view kIncidentHeader =
    "key,lat,lon,ts,bike,childCheckBox,trailerCheckBox,pLoc,incident,scary,desc,"
    "i1,i2,i3,i4,i5,i6,i7,i8,i9,i10";
constexpr std::string_view kSampleHeader = "lat,lon,X,Y,Z,timeStamp,acc,a,b,c";
constexpr std::size_t kIncidentColumns = 21;
constexpr std::size_t kSampleColumns = 10;

// User-added incidents are keyed from 1000 upwards, detector candidates below.
constexpr std::int64_t kManualKeyBase = 1000;
constexpr std::size_t kMaxIncidents = 1000;

[[noreturn]] void format_error(std::size_t line, std::string const& what) {
  fail(ErrorKind::Format, "line " + std::to_string(line) + ": " + what);
}

std::string join(std::vector<std::string> const& fields) {
  std::string out;
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i) out.push_back(',');
    out += fields[i];
  }
  return out;
}

double need_double(std::string const& s, std::size_t line, char const* column) {
  auto v = csv::to_double(s);
  if (!v) {
    format_error(line, std::string("invalid number in column '") + column + "'");
  }
  return *v;
}

std::int64_t need_int(std::string const& s, std::size_t line, char const* column) {
  auto v = csv::to_int(s);
  if (!v) {
    format_error(line, std::string("invalid integer in column '") + column + "'");
  }
  return *v;
}

bool need_flag(std::string const& s, std::size_t line, char const* column) {
  if (s == "0") return false;
  if (s == "1") return true;
  format_error(line, std::string("expected 0 or 1 in column '") + column + "'");
}

bool valid_ride_id(std::string_view id) {
  for (char c : id) {
    bool const ok = (c >= '0' && c <= '9') || (c >= 'a' && c <= 'z') ||
                    (c >= 'A' && c <= 'Z') || c == '-' || c == '_';
    if (!ok) return false;
  }
  return true;
}

// ride=<id>;bike=<n>;pLoc=<n>;trailer=<0|1>;child=<0|1>
bool parse_metadata(std::string_view line, std::size_t line_no, Ride& ride) {
  if (!line.starts_with("ride=")) {
    return false;
  }
  bool seen[5] = {};
  while (!line.empty()) {
    auto const semi = line.find(';');
    auto item = line.substr(0, semi);
    line = semi == std::string_view::npos ? std::string_view{} : line.substr(semi + 1);
    auto const eq = item.find('=');
    if (eq == std::string_view::npos) {
      format_error(line_no, "malformed ride metadata entry");
    }
    auto const key = item.substr(0, eq);
    auto const value = std::string(item.substr(eq + 1));
    if (key == "ride") {
      if (!valid_ride_id(value)) format_error(line_no, "invalid ride id");
      ride.ride_id = value;
      seen[0] = true;
    } else if (key == "bike") {
      auto code = need_int(value, line_no, "bike");
      if (code < 0 || code >= static_cast<std::int64_t>(kBikeTypeCount)) {
        fail(ErrorKind::Validation, "line " + std::to_string(line_no) +
                                        ": unknown bike type code " + value);
      }
      ride.context.bike = static_cast<BikeType>(code);
      seen[1] = true;
    } else if (key == "pLoc") {
      auto code = need_int(value, line_no, "pLoc");
      if (code < 0 || code >= static_cast<std::int64_t>(kPhoneLocationCount)) {
        fail(ErrorKind::Validation, "line " + std::to_string(line_no) +
                                        ": unknown phone location code " + value);
      }
      ride.context.phone = static_cast<PhoneLocation>(code);
      seen[2] = true;
    } else if (key == "trailer") {
      ride.context.trailer = need_flag(value, line_no, "trailer");
      seen[3] = true;
    } else if (key == "child") {
      ride.context.child_transport = need_flag(value, line_no, "child");
      seen[4] = true;
    } else {
      format_error(line_no, "unknown ride metadata key '" + std::string(key) + "'");
    }
  }
  for (bool s : seen) {
    if (!s) format_error(line_no, "incomplete ride metadata");
  }
  return true;
}

struct IncidentRow {
  Incident incident;
  CyclistContext context;
};

IncidentRow parse_incident_row(std::vector<std::string> const& f, std::size_t line) {
  if (f.size() != kIncidentColumns) {
    format_error(line, "expected " + std::to_string(kIncidentColumns) +
                           " incident columns, got " + std::to_string(f.size()));
  }
  IncidentRow row;
  auto& inc = row.incident;
  auto const key = need_int(f[0], line, "key");
  if (key < 0) format_error(line, "negative incident key");
  inc.auto_detected = key < kManualKeyBase;
  inc.location = {need_double(f[1], line, "lat"), need_double(f[2], line, "lon")};
  inc.timestamp = need_int(f[3], line, "ts");

  auto const bike = need_int(f[4], line, "bike");
  if (bike < 0 || bike >= static_cast<std::int64_t>(kBikeTypeCount)) {
    fail(ErrorKind::Validation,
         "line " + std::to_string(line) + ": unknown bike type code " + f[4]);
  }
  row.context.bike = static_cast<BikeType>(bike);
  row.context.child_transport = need_flag(f[5], line, "childCheckBox");
  row.context.trailer = need_flag(f[6], line, "trailerCheckBox");
  auto const ploc = need_int(f[7], line, "pLoc");
  if (ploc < 0 || ploc >= static_cast<std::int64_t>(kPhoneLocationCount)) {
    fail(ErrorKind::Validation,
         "line " + std::to_string(line) + ": unknown phone location code " + f[7]);
  }
  row.context.phone = static_cast<PhoneLocation>(ploc);

  auto const code = need_int(f[8], line, "incident");
  auto type = incident_type_from_code(code);
  if (!type) {
    fail(ErrorKind::Validation,
         "line " + std::to_string(line) + ": unknown incident type code " + f[8]);
  }
  inc.type = *type;
  inc.scary = need_flag(f[9], line, "scary");
  inc.description = f[10];
  for (std::size_t i = 0; i < kParticipantCount; ++i) {
    inc.participants[i] = need_flag(f[11 + i], line, "participant");
  }
  return row;
}

RideSample parse_sample_row(std::vector<std::string> const& f, std::size_t line) {
  if (f.size() != kSampleColumns) {
    format_error(line, "expected " + std::to_string(kSampleColumns) +
                           " sample columns, got " + std::to_string(f.size()));
  }
  RideSample s;
  bool const has_lat = !f[0].empty();
  if (has_lat != !f[1].empty() || has_lat != !f[6].empty()) {
    fail(ErrorKind::Validation, "line " + std::to_string(line) +
                                    ": lat, lon and acc must be present together");
  }
  if (has_lat) {
    s.location = GeoPoint{need_double(f[0], line, "lat"), need_double(f[1], line, "lon")};
    s.accuracy_m = need_double(f[6], line, "acc");
  }
  s.accel = {need_double(f[2], line, "X"), need_double(f[3], line, "Y"),
             need_double(f[4], line, "Z")};
  s.timestamp = need_int(f[5], line, "timeStamp");
  int const orientation_fields = !f[7].empty() + !f[8].empty() + !f[9].empty();
  if (orientation_fields == 3) {
    s.orientation = Vec3{need_double(f[7], line, "a"), need_double(f[8], line, "b"),
                         need_double(f[9], line, "c")};
  } else if (orientation_fields != 0) {
    fail(ErrorKind::Validation,
         "line " + std::to_string(line) + ": orientation must have all three components");
  }
  return s;
}

}  // namespace

Ride parse_ride(std::string_view bytes) {
  csv::Reader reader(bytes);
  Ride ride;
  if (reader.at_end()) {
    format_error(1, "empty input");
  }
  auto const first = reader.raw_line();
  auto const hash = first.find('#');
  if (hash == std::string_view::npos || first.substr(0, hash) != kRideMagic) {
    format_error(1, "expected header 'simra-spec v1#<region>'");
  }
  ride.region = std::string(first.substr(hash + 1));
  if (ride.region.empty() || ride.region.find('#') != std::string::npos) {
    format_error(1, "invalid region identifier");
  }

  bool has_metadata = false;
  if (!reader.at_end() && reader.peek_line().starts_with("ride=")) {
    auto const line_no = reader.line();
    has_metadata = parse_metadata(reader.raw_line(), line_no, ride);
  }

  auto header_line = reader.line();
  if (reader.at_end() || join(reader.record()) != kIncidentHeader) {
    format_error(header_line, "expected incident block header");
  }

  bool separator_seen = false;
  std::optional<CyclistContext> row_context;
  while (!reader.at_end()) {
    auto const line_no = reader.line();
    if (reader.peek_line() == kBlockSeparator) {
      reader.raw_line();
      separator_seen = true;
      break;
    }
    auto row = parse_incident_row(reader.record(), line_no);
    if (!row_context) row_context = row.context;
    ride.incidents.push_back(std::move(row.incident));
    if (ride.incidents.size() > kMaxIncidents) {
      fail(ErrorKind::Validation, "too many incidents in one ride");
    }
  }
  if (!separator_seen) {
    format_error(reader.line(), "missing block separator");
  }
  if (!has_metadata && row_context) {
    ride.context = *row_context;
  }

  header_line = reader.line();
  if (reader.at_end() || join(reader.record()) != kSampleHeader) {
    format_error(header_line, "expected sample block header");
  }
  while (!reader.at_end()) {
    auto const line_no = reader.line();
    auto sample = parse_sample_row(reader.record(), line_no);
    if (!ride.samples.empty() && sample.timestamp <= ride.samples.back().timestamp) {
      fail(ErrorKind::Validation,
           "line " + std::to_string(line_no) + ": non-monotone timestamps");
    }
    ride.samples.push_back(std::move(sample));
  }
  validate(ride);
  return ride;
}

std::string serialize_ride(Ride const& ride) {
  validate(ride);
  if (!valid_ride_id(ride.ride_id)) {
    fail(ErrorKind::Validation, "invalid ride id");
  }
  if (ride.incidents.size() > kMaxIncidents) {
    fail(ErrorKind::Validation, "too many incidents in one ride");
  }
  std::string out;
  out.reserve(64 + ride.samples.size() * 64 + ride.incidents.size() * 96);
  out.append(kRideMagic).append("#").append(ride.region).append("\n");
  auto const& ctx = ride.context;
  out.append("ride=").append(ride.ride_id);
  out.append(";bike=").append(std::to_string(static_cast<int>(ctx.bike)));
  out.append(";pLoc=").append(std::to_string(static_cast<int>(ctx.phone)));
  out.append(";trailer=").append(ctx.trailer ? "1" : "0");
  out.append(";child=").append(ctx.child_transport ? "1" : "0").append("\n");

  out.append(kIncidentHeader).append("\n");
  for (std::size_t i = 0; i < ride.incidents.size(); ++i) {
    auto const& inc = ride.incidents[i];
    auto const key = static_cast<std::int64_t>(i) + (inc.auto_detected ? 0 : kManualKeyBase);
    out.append(std::to_string(key)).push_back(',');
    csv::write_fixed(out, inc.location.lat, 6);
    out.push_back(',');
    csv::write_fixed(out, inc.location.lon, 6);
    out.push_back(',');
    out.append(std::to_string(inc.timestamp)).push_back(',');
    out.append(std::to_string(static_cast<int>(ctx.bike))).push_back(',');
    out.append(ctx.child_transport ? "1," : "0,");
    out.append(ctx.trailer ? "1," : "0,");
    out.append(std::to_string(static_cast<int>(ctx.phone))).push_back(',');
    out.append(std::to_string(static_cast<int>(inc.type))).push_back(',');
    out.append(inc.scary ? "1," : "0,");
    csv::write_field(out, inc.description);
    for (std::size_t p = 0; p < kParticipantCount; ++p) {
      out.append(inc.participants[p] ? ",1" : ",0");
    }
    out.push_back('\n');
  }
  out.append(kBlockSeparator).append("\n");
  out.append(kSampleHeader).append("\n");
  for (auto const& s : ride.samples) {
    if (s.location) {
      csv::write_fixed(out, s.location->lat, 6);
      out.push_back(',');
      csv::write_fixed(out, s.location->lon, 6);
      out.push_back(',');
    } else {
      out.append(",,");
    }
    csv::write_fixed(out, s.accel.x, 3);
    out.push_back(',');
    csv::write_fixed(out, s.accel.y, 3);
    out.push_back(',');
    csv::write_fixed(out, s.accel.z, 3);
    out.push_back(',');
    out.append(std::to_string(s.timestamp)).push_back(',');
    if (s.accuracy_m) {
      csv::write_fixed(out, *s.accuracy_m, 2);
    }
    out.push_back(',');
    if (s.orientation) {
      csv::write_fixed(out, s.orientation->x, 3);
      out.push_back(',');
      csv::write_fixed(out, s.orientation->y, 3);
      out.push_back(',');
      csv::write_fixed(out, s.orientation->z, 3);
    } else {
      out.append(",,");
    }
    out.push_back('\n');
  }
  return out;
}

namespace {

std::string profile_header() {
  std::string header = "birth,gender,region,experience,rideDuration,waitDuration,numIncidents";
  for (int h = 0; h < 24; ++h) {
    header += ",h" + std::to_string(h);
  }
  return header;
}

// Seconds with exactly three decimals <-> integer milliseconds.
std::int64_t parse_seconds(std::string const& s, std::size_t line, char const* column) {
  auto const dot = s.find('.');
  auto const whole = csv::to_int(s.substr(0, dot));
  std::int64_t millis = 0;
  bool ok = whole.has_value() && *whole >= 0 && s.front() != '-';
  if (ok && dot != std::string::npos) {
    auto const frac = s.substr(dot + 1);
    ok = !frac.empty() && frac.size() <= 3 &&
         frac.find_first_not_of("0123456789") == std::string::npos;
    if (ok) {
      millis = std::stoll(frac) * (frac.size() == 1 ? 100 : frac.size() == 2 ? 10 : 1);
    }
  }
  if (!ok || *whole > std::numeric_limits<std::int64_t>::max() / 1000 - 1) {
    format_error(line, std::string("invalid duration in column '") + column + "'");
  }
  return *whole * 1000 + millis;
}

std::string format_seconds(std::int64_t ms) {
  auto frac = std::to_string(ms % 1000);
  return std::to_string(ms / 1000) + "." + std::string(3 - frac.size(), '0') + frac;
}

}  // namespace

Profile parse_profile(std::string_view bytes) {
  csv::Reader reader(bytes);
  if (reader.at_end()) {
    format_error(1, "empty input");
  }
  auto const header = reader.record();
  constexpr std::size_t kFixed = 7;
  static constexpr char const* kNames[kFixed] = {"birth",        "gender",       "region",
                                                 "experience",   "rideDuration", "waitDuration",
                                                 "numIncidents"};
  if (header.size() < kFixed) {
    format_error(1, "expected profile header");
  }
  for (std::size_t i = 0; i < kFixed; ++i) {
    if (header[i] != kNames[i]) format_error(1, "expected profile header");
  }
  for (std::size_t i = kFixed; i < header.size(); ++i) {
    if (header[i] != "h" + std::to_string(i - kFixed)) {
      format_error(1, "malformed histogram column '" + header[i] + "'");
    }
  }
  auto const bins = header.size() - kFixed;
  if (bins != 24) {
    fail(ErrorKind::Validation,
         "ride time histogram must have 24 entries, got " + std::to_string(bins));
  }
  if (reader.at_end()) {
    format_error(2, "missing profile row");
  }
  auto const line = reader.line();
  auto const row = reader.record();
  if (row.size() != header.size()) {
    fail(ErrorKind::Validation, "line " + std::to_string(line) + ": expected " +
                                    std::to_string(header.size()) + " profile fields, got " +
                                    std::to_string(row.size()));
  }
  if (!reader.at_end()) {
    format_error(reader.line(), "trailing data after profile row");
  }
  Profile p;
  p.age_group = static_cast<int>(need_int(row[0], line, "birth"));
  auto const gender = need_int(row[1], line, "gender");
  if (gender < 0 || gender > 3) {
    fail(ErrorKind::Validation, "line " + std::to_string(line) + ": unknown gender code " + row[1]);
  }
  p.gender = static_cast<Gender>(gender);
  p.region = row[2];
  p.experience_years = static_cast<int>(need_int(row[3], line, "experience"));
  p.stats.ride_duration_ms = parse_seconds(row[4], line, "rideDuration");
  p.stats.wait_duration_ms = parse_seconds(row[5], line, "waitDuration");
  p.stats.incident_count = need_int(row[6], line, "numIncidents");
  for (std::size_t h = 0; h < 24; ++h) {
    p.stats.ride_time_histogram[h] = need_int(row[kFixed + h], line, "histogram");
  }
  validate(p);
  return p;
}

std::string serialize_profile(Profile const& profile) {
  validate(profile);
  std::string out = profile_header();
  out.push_back('\n');
  out += std::to_string(profile.age_group) + ",";
  out += std::to_string(static_cast<int>(profile.gender)) + ",";
  csv::write_field(out, profile.region);
  out += "," + std::to_string(profile.experience_years);
  out += "," + format_seconds(profile.stats.ride_duration_ms);
  out += "," + format_seconds(profile.stats.wait_duration_ms);
  out += "," + std::to_string(profile.stats.incident_count);
  for (auto h : profile.stats.ride_time_histogram) {
    out += "," + std::to_string(h);
  }
  out.push_back('\n');
  return out;
}

Ride load_ride_file(std::string const& path) {
  return parse_ride(read_file(path));
}

void save_ride_file(Ride const& ride, std::string const& path) {
  write_file_atomic(path, serialize_ride(ride));
}

}  // namespace simra
