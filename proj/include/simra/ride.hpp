#pragma once

#include <array>
#include <bitset>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "simra/geo.hpp"

namespace simra {

using TimestampMs = std::int64_t;

struct Vec3 {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;

  bool operator==(Vec3 const&) const = default;
};

struct RideSample {
  TimestampMs timestamp = 0;
  std::optional<GeoPoint> location;
  std::optional<double> accuracy_m;  // 68% confidence radius, paired with location
  Vec3 accel;                        // m/s^2
  std::optional<Vec3> orientation;   // azimuth, pitch, roll in degrees

  bool operator==(RideSample const&) const = default;
};

// Codes are the on-disk integers; 0 marks auto-detected candidates nobody
// has labeled yet.
enum class IncidentType : std::uint8_t {
  Unlabeled = 0,
  ClosePass = 1,
  PullInOut = 2,
  NearHook = 3,
  HeadOn = 4,
  Tailgating = 5,
  NearDooring = 6,
  DodgeObstacle = 7,
  Other = 8,
};

inline constexpr std::size_t kLabeledTypeCount = 8;

/// Row index 0..7 of a labeled type in count vectors. Unlabeled has no row.
inline std::size_t type_row(IncidentType t) {
  return static_cast<std::size_t>(t) - 1;
}
inline IncidentType type_from_row(std::size_t row) {
  return static_cast<IncidentType>(row + 1);
}

std::string_view to_string(IncidentType t);
std::optional<IncidentType> incident_type_from_code(long code);
std::optional<IncidentType> incident_type_from_name(std::string_view name);

// Order matches the i1..i10 flag columns of the ride file.
enum class Participant : std::uint8_t {
  Bus,
  Cyclist,
  Pedestrian,
  DeliveryVan,
  Truck,
  Motorcycle,
  Car,
  Taxi,
  Other,
  EScooter,
};
inline constexpr std::size_t kParticipantCount = 10;
using ParticipantSet = std::bitset<kParticipantCount>;

std::string_view to_string(Participant p);

struct Incident {
  GeoPoint location;
  TimestampMs timestamp = 0;
  IncidentType type = IncidentType::Unlabeled;
  bool scary = false;
  ParticipantSet participants;
  std::string description;
  bool auto_detected = false;

  bool labeled() const { return type != IncidentType::Unlabeled; }
  bool operator==(Incident const&) const = default;
};

enum class BikeType : std::uint8_t { City, Racing, Cargo, Mountain, EBike, Other };
inline constexpr std::size_t kBikeTypeCount = 6;
enum class PhoneLocation : std::uint8_t { Handlebar, Pocket, Backpack, Jacket, Other };
inline constexpr std::size_t kPhoneLocationCount = 5;

std::string_view to_string(BikeType b);
std::string_view to_string(PhoneLocation p);
std::optional<BikeType> bike_type_from_name(std::string_view name);
std::optional<PhoneLocation> phone_location_from_name(std::string_view name);

struct CyclistContext {
  BikeType bike = BikeType::City;
  PhoneLocation phone = PhoneLocation::Handlebar;
  bool trailer = false;
  bool child_transport = false;

  bool operator==(CyclistContext const&) const = default;
};

struct Ride {
  std::string ride_id;  // 32 hex chars, random per ride
  std::string region;
  std::vector<RideSample> samples;
  std::vector<Incident> incidents;
  CyclistContext context;

  TimestampMs start_ts() const { return samples.front().timestamp; }
  TimestampMs end_ts() const { return samples.back().timestamp; }
  bool operator==(Ride const&) const = default;
};

/// Throws Validation if any Ride invariant is broken.
void validate(Ride const& ride);

/// Fresh random 128-bit pseudonym rendered as lowercase hex.
std::string new_ride_id();

enum class Gender : std::uint8_t { Unspecified, Male, Female, Other };

struct ProfileStats {
  std::int64_t ride_duration_ms = 0;
  std::int64_t wait_duration_ms = 0;
  std::int64_t incident_count = 0;
  std::array<std::int64_t, 24> ride_time_histogram{};

  std::int64_t ride_count() const;
  ProfileStats& merge(ProfileStats const& other);
  bool operator==(ProfileStats const&) const = default;
};

struct Profile {
  std::string region;
  int age_group = 0;  // ordinal bucket, 0 = not given
  Gender gender = Gender::Unspecified;
  int experience_years = 0;
  ProfileStats stats;

  bool operator==(Profile const&) const = default;
};

void validate(Profile const& profile);

}  // namespace simra
