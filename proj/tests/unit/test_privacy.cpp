#include <random>

#include "doctest.h"
#include "simra/error.hpp"
#include "simra/privacy.hpp"
#include "support/oracles.hpp"

using namespace simra;

namespace {

constexpr double kMetersPerDegLat = 111'194.93;

// One fix per `dt_ms`, walking north at the given speeds (m/s per step).
Ride track(std::vector<double> const& speeds, std::int64_t dt_ms = 1000) {
  Ride ride;
  ride.ride_id = "r";
  ride.region = "test";
  double lat = 52.0;
  TimestampMs ts = 1'000'000;
  for (std::size_t i = 0; i <= speeds.size(); ++i) {
    RideSample s;
    s.timestamp = ts;
    s.location = GeoPoint{lat, 13.0};
    s.accuracy_m = 5.0;
    s.accel = {0.0, 0.0, 9.81};
    ride.samples.push_back(s);
    if (i < speeds.size()) {
      lat += speeds[i] * static_cast<double>(dt_ms) / 1000.0 / kMetersPerDegLat;
      ts += dt_ms;
    }
  }
  return ride;
}

Incident incident_at(TimestampMs ts) {
  Incident inc;
  inc.location = {52.0, 13.0};
  inc.timestamp = ts;
  inc.type = IncidentType::Other;
  return inc;
}

// Earliest fix whose successors all stay inside the radius and whose span to
// the end is long enough, repeated until nothing changes.
std::size_t brute_trailing_end(Ride const& ride, double radius, double min_s) {
  std::size_t last = ride.samples.size() - 1;
  for (;;) {
    std::optional<std::size_t> cut;
    for (std::size_t j = 0; j <= last && !cut; ++j) {
      auto const& a = ride.samples[j];
      if (!a.location || *a.accuracy_m > kMaxFixAccuracyM) continue;
      bool inside = true;
      for (std::size_t k = j + 1; k <= last; ++k) {
        auto const& b = ride.samples[k];
        if (!b.location || *b.accuracy_m > kMaxFixAccuracyM) continue;
        inside = inside && oracle::haversine(a.location->lat, a.location->lon, b.location->lat,
                                             b.location->lon) <= radius;
      }
      double const span = static_cast<double>(ride.samples[last].timestamp - a.timestamp) / 1000.0;
      if (inside && span >= min_s && j < last) cut = j;
    }
    if (!cut) return last;
    last = *cut;
  }
}

}  // namespace

TEST_CASE("zero bounds leave the ride unchanged") {
  auto ride = track(std::vector<double>(50, 4.0));
  ride.incidents.push_back(incident_at(ride.samples[3].timestamp));
  CropSpec spec;
  spec.start_time_s = 0.0;
  spec.end_distance_m = 0.0;
  CHECK(crop_ride(ride, spec) == ride);
}

TEST_CASE("crop without any bound is an argument error") {
  auto const ride = track({1.0, 1.0});
  CHECK_THROWS_AS(crop_ride(ride, {}), Error);
  CropSpec neg;
  neg.start_time_s = -1.0;
  CHECK_THROWS_AS(crop_ride(ride, neg), Error);
}

TEST_CASE("time crop drops the first ten samples and their incidents") {
  auto ride = track(std::vector<double>(99, 4.0));
  ride.incidents.push_back(incident_at(ride.samples[4].timestamp));
  ride.incidents.push_back(incident_at(ride.samples[50].timestamp));
  CropSpec spec;
  spec.start_time_s = 10.0;
  auto const out = crop_ride(ride, spec);
  CHECK(out.samples.size() == 90);
  CHECK(out.samples.front() == ride.samples[10]);
  REQUIRE(out.incidents.size() == 1);
  CHECK(out.incidents[0].timestamp == ride.samples[50].timestamp);
}

TEST_CASE("distance crop matches a cumulative-distance scan") {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 30; ++trial) {
    std::uniform_real_distribution<double> speed(3.0, 9.0);
    std::vector<double> speeds(80);
    double const v = speed(rng);
    for (auto& s : speeds) s = v;
    auto const ride = track(speeds);
    double const meters = std::uniform_real_distribution<double>(1.0, 100.0)(rng);
    CropSpec spec;
    spec.start_distance_m = meters;
    std::vector<GeoPoint> pts;
    for (auto const& s : ride.samples) pts.push_back(*s.location);
    auto const cut = oracle::leading_cut_by_distance(pts, meters);
    auto const out = crop_ride(ride, spec);
    CHECK(out.samples.size() == ride.samples.size() - cut);
    CHECK(out.samples.front() == ride.samples[cut]);

    CropSpec tail;
    tail.end_distance_m = meters;
    std::reverse(pts.begin(), pts.end());
    auto const tail_cut = oracle::leading_cut_by_distance(pts, meters);
    CHECK(crop_ride(ride, tail).samples.size() == ride.samples.size() - tail_cut);
  }
}

TEST_CASE("the larger of time and distance cuts wins") {
  auto const ride = track(std::vector<double>(60, 5.0));
  CropSpec spec;
  spec.start_time_s = 3.0;       // 3 samples
  spec.start_distance_m = 22.0;  // 5 samples (0, 5, 10, 15, 20 m)
  CHECK(crop_ride(ride, spec).samples.front() == ride.samples[5]);
  spec.start_time_s = 8.0;
  CHECK(crop_ride(ride, spec).samples.front() == ride.samples[8]);
}

TEST_CASE("cropping everything is an empty ride") {
  auto const ride = track(std::vector<double>(10, 5.0));
  CropSpec spec;
  spec.start_time_s = 6.0;
  spec.end_time_s = 5.0;
  try {
    crop_ride(ride, spec);
    FAIL("expected EmptyRide");
  } catch (Error const& e) {
    CHECK(e.kind() == ErrorKind::EmptyRide);
  }
}

TEST_CASE("a ten minute stop at the end is trimmed") {
  std::vector<double> speeds(120, 5.0);
  speeds.insert(speeds.end(), 600, 0.005);
  auto const ride = track(speeds);
  TrailingStopParams params;
  params.radius_m = 5.0;
  auto const out = auto_crop_trailing_stop(ride, params);
  CHECK(out.ride.samples.size() == 121);
  CHECK(out.trimmed_ms == 600'000);
  CHECK(auto_crop_trailing_stop(out.ride, params).ride == out.ride);
  // The default 50 m radius reaches back into the approach.
  CHECK(auto_crop_trailing_stop(ride).ride.samples.size() == 112);
}

TEST_CASE("continuous movement is untouched") {
  auto const ride = track(std::vector<double>(900, 4.0));
  auto const out = auto_crop_trailing_stop(ride);
  CHECK(out.ride == ride);
  CHECK(out.trimmed_ms == 0);
}

TEST_CASE("randomized stationary tails agree with a linear scan") {
  std::mt19937_64 rng(21);
  for (int trial = 0; trial < 40; ++trial) {
    std::vector<double> speeds(50 + rng() % 200, 4.0);
    std::uniform_real_distribution<double> jitter(-0.08, 0.08);
    std::size_t const tail = rng() % 700;
    for (std::size_t i = 0; i < tail; ++i) speeds.push_back(jitter(rng));
    auto const ride = track(speeds);
    TrailingStopParams params;
    params.radius_m = std::uniform_real_distribution<double>(2.0, 60.0)(rng);
    params.min_stationary_s = std::uniform_real_distribution<double>(60.0, 400.0)(rng);
    auto const out = auto_crop_trailing_stop(ride, params);
    auto const want = brute_trailing_end(ride, params.radius_m, params.min_stationary_s);
    CHECK(out.ride.samples.size() == want + 1);
    CHECK(auto_crop_trailing_stop(out.ride, params).ride == out.ride);
    for (std::size_t i = 0; i < out.ride.samples.size(); ++i) REQUIRE(out.ride.samples[i] == ride.samples[i]);
  }
}

TEST_CASE("constant cycling speed is plausible") {
  auto const ride = track(std::vector<double>(600, 15.0 / 3.6));
  CHECK(screen_transport_mode(ride).mode == TransportMode::PlausibleBicycle);
}

TEST_CASE("ten minutes at 50 km/h is suspect") {
  auto const ride = track(std::vector<double>(600, 50.0 / 3.6));
  auto const r = screen_transport_mode(ride);
  CHECK(r.mode == TransportMode::SuspectMotorized);
  CHECK(*r.window_end - *r.window_start >= 120'000);
}

TEST_CASE("a three minute fast stretch is found by a sliding window") {
  std::vector<double> speeds(300, 20.0 / 3.6);
  std::fill(speeds.begin() + 100, speeds.begin() + 280, 40.0 / 3.6);
  auto const ride = track(speeds);
  auto const r = screen_transport_mode(ride);
  REQUIRE(r.mode == TransportMode::SuspectMotorized);

  // Brute force: every window of at least 120 s, earliest end first.
  double const v = 35.0 / 3.6;
  std::optional<std::size_t> first_end;
  for (std::size_t j = 1; j < ride.samples.size() && !first_end; ++j) {
    for (std::size_t i = 0; i < j; ++i) {
      double const dt = static_cast<double>(ride.samples[j].timestamp - ride.samples[i].timestamp) / 1000.0;
      if (dt < 120.0) continue;
      double d = 0;
      for (std::size_t k = i + 1; k <= j; ++k) {
        auto const& a = *ride.samples[k - 1].location;
        auto const& b = *ride.samples[k].location;
        d += oracle::haversine(a.lat, a.lon, b.lat, b.lon);
      }
      if (d / dt >= v) {
        first_end = j;
        break;
      }
    }
  }
  REQUIRE(first_end);
  CHECK(*r.window_end == ride.samples[*first_end].timestamp);
}

TEST_CASE("screening needs two fixes") {
  auto ride = track({5.0});
  ride.samples[1].accuracy_m = 80.0;
  try {
    screen_transport_mode(ride);
    FAIL("expected error");
  } catch (Error const& e) {
    CHECK(e.kind() == ErrorKind::InsufficientData);
  }
}

TEST_CASE("inaccurate fixes are ignored for speed") {
  std::vector<double> speeds(400, 4.0);
  auto ride = track(speeds);
  // A teleporting fix with a poor accuracy radius.
  ride.samples[200].location->lat += 0.05;
  ride.samples[200].accuracy_m = 150.0;
  CHECK(screen_transport_mode(ride).mode == TransportMode::PlausibleBicycle);
  CHECK(usable_fixes(ride).size() == ride.samples.size() - 1);
}
