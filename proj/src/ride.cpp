#include "simra/ride.hpp"

#include <algorithm>
#include <cctype>
#include <numeric>
#include <random>

#include "simra/error.hpp"

namespace simra {

namespace {

bool iequals(std::string_view a, std::string_view b) {
  return a.size() == b.size() &&
         std::equal(a.begin(), a.end(), b.begin(), [](char x, char y) {
           return std::tolower(static_cast<unsigned char>(x)) ==
                  std::tolower(static_cast<unsigned char>(y));
         });
}

constexpr std::array<std::string_view, 9> kIncidentNames = {
    "Unlabeled",  "ClosePass",   "PullInOut",     "NearHook", "HeadOn",
    "Tailgating", "NearDooring", "DodgeObstacle", "Other"};

constexpr std::array<std::string_view, kParticipantCount> kParticipantNames = {
    "bus",        "cyclist", "pedestrian", "deliveryvan", "truck",
    "motorcycle", "car",     "taxi",       "other",       "escooter"};

constexpr std::array<std::string_view, kBikeTypeCount> kBikeNames = {
    "city", "racing", "cargo", "mountain", "e-bike", "other"};

constexpr std::array<std::string_view, kPhoneLocationCount> kPhoneNames = {
    "handlebar", "pocket", "backpack", "jacket", "other"};

template <typename Enum, std::size_t N>
std::optional<Enum> lookup(std::array<std::string_view, N> const& names,
                           std::string_view name) {
  for (std::size_t i = 0; i < N; ++i) {
    if (iequals(names[i], name)) {
      return static_cast<Enum>(i);
    }
  }
  return std::nullopt;
}

}  // namespace

std::string_view to_string(IncidentType t) {
  return kIncidentNames[static_cast<std::size_t>(t)];
}

std::optional<IncidentType> incident_type_from_code(long code) {
  if (code < 0 || code > 8) {
    return std::nullopt;
  }
  return static_cast<IncidentType>(code);
}

std::optional<IncidentType> incident_type_from_name(std::string_view name) {
  return lookup<IncidentType>(kIncidentNames, name);
}

std::string_view to_string(Participant p) {
  return kParticipantNames[static_cast<std::size_t>(p)];
}

std::string_view to_string(BikeType b) {
  return kBikeNames[static_cast<std::size_t>(b)];
}

std::string_view to_string(PhoneLocation p) {
  return kPhoneNames[static_cast<std::size_t>(p)];
}

std::optional<BikeType> bike_type_from_name(std::string_view name) {
  return lookup<BikeType>(kBikeNames, name);
}

std::optional<PhoneLocation> phone_location_from_name(std::string_view name) {
  return lookup<PhoneLocation>(kPhoneNames, name);
}

void validate(Ride const& ride) {
  if (ride.samples.empty()) {
    fail(ErrorKind::Validation, "ride has no samples");
  }
  if (ride.region.empty() || ride.region.find_first_of("#\r\n") != std::string::npos) {
    fail(ErrorKind::Validation, "invalid region identifier '" + ride.region + "'");
  }
  for (std::size_t i = 0; i < ride.samples.size(); ++i) {
    auto const& s = ride.samples[i];
    if (i > 0 && s.timestamp <= ride.samples[i - 1].timestamp) {
      fail(ErrorKind::Validation,
           "non-monotone timestamps at sample " + std::to_string(i));
    }
    if (s.location.has_value() != s.accuracy_m.has_value()) {
      fail(ErrorKind::Validation, "sample " + std::to_string(i) +
                                      ": location and accuracy must be "
                                      "present together");
    }
    if (s.location && !is_valid(*s.location)) {
      fail(ErrorKind::Validation, "sample " + std::to_string(i) + ": coordinates out of range");
    }
    if (s.accuracy_m && !(std::isfinite(*s.accuracy_m) && *s.accuracy_m >= 0.0)) {
      fail(ErrorKind::Validation, "sample " + std::to_string(i) + ": invalid accuracy");
    }
    if (!std::isfinite(s.accel.x) || !std::isfinite(s.accel.y) || !std::isfinite(s.accel.z)) {
      fail(ErrorKind::Validation, "sample " + std::to_string(i) + ": non-finite acceleration");
    }
    if (s.orientation && !(std::isfinite(s.orientation->x) && std::isfinite(s.orientation->y) &&
                           std::isfinite(s.orientation->z))) {
      fail(ErrorKind::Validation, "sample " + std::to_string(i) + ": non-finite orientation");
    }
  }
  for (std::size_t i = 0; i < ride.incidents.size(); ++i) {
    auto const& inc = ride.incidents[i];
    if (!is_valid(inc.location)) {
      fail(ErrorKind::Validation, "incident " + std::to_string(i) + ": coordinates out of range");
    }
    if (inc.timestamp < ride.start_ts() || inc.timestamp > ride.end_ts()) {
      fail(ErrorKind::Validation,
           "incident " + std::to_string(i) + " lies outside the ride's time span");
    }
  }
}

std::string new_ride_id() {
  static thread_local std::mt19937_64 rng{[] {
    std::random_device rd;
    std::seed_seq seq{rd(), rd(), rd(), rd(), rd(), rd(), rd(), rd()};
    return std::mt19937_64(seq);
  }()};
  static constexpr char kHex[] = "0123456789abcdef";
  std::string id(32, '0');
  for (int half = 0; half < 2; ++half) {
    std::uint64_t v = rng();
    for (int i = 0; i < 16; ++i) {
      id[half * 16 + i] = kHex[(v >> (60 - 4 * i)) & 0xF];
    }
  }
  return id;
}

std::int64_t ProfileStats::ride_count() const {
  return std::accumulate(ride_time_histogram.begin(), ride_time_histogram.end(),
                         std::int64_t{0});
}

ProfileStats& ProfileStats::merge(ProfileStats const& other) {
  ride_duration_ms += other.ride_duration_ms;
  wait_duration_ms += other.wait_duration_ms;
  incident_count += other.incident_count;
  for (std::size_t h = 0; h < 24; ++h) {
    ride_time_histogram[h] += other.ride_time_histogram[h];
  }
  return *this;
}

void validate(Profile const& profile) {
  auto const& s = profile.stats;
  if (profile.region.find_first_of("\r\n") != std::string::npos) {
    fail(ErrorKind::Validation, "invalid region identifier");
  }
  if (profile.age_group < 0 || profile.experience_years < 0) {
    fail(ErrorKind::Validation, "age group and experience must be non-negative");
  }
  if (s.ride_duration_ms < 0 || s.wait_duration_ms < 0 || s.incident_count < 0) {
    fail(ErrorKind::Validation, "profile statistics must be non-negative");
  }
  if (s.wait_duration_ms > s.ride_duration_ms) {
    fail(ErrorKind::Validation, "wait duration exceeds ride duration");
  }
  for (auto h : s.ride_time_histogram) {
    if (h < 0) {
      fail(ErrorKind::Validation, "negative histogram bin");
    }
  }
}

}  // namespace simra
