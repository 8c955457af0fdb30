#include "generators.hpp"

#include <algorithm>
#include <atomic>
#include <set>

#include <unistd.h>

namespace gen {

namespace {

double grid(std::mt19937_64& rng, std::int64_t lo, std::int64_t hi, double scale) {
  std::uniform_int_distribution<std::int64_t> d(lo, hi);
  return static_cast<double>(d(rng)) / scale;
}

std::string random_text(std::mt19937_64& rng) {
  static std::vector<std::string> const pieces = {"car", " ", ",", "\"", "parked", "\n", "Straße", "é", "x", "  ",
                                                  "bus lane", "'", ";", "#", "="};
  std::uniform_int_distribution<int> len(0, 6);
  std::uniform_int_distribution<std::size_t> pick(0, pieces.size() - 1);
  std::string out;
  for (int i = len(rng); i > 0; --i) out += pieces[pick(rng)];
  return out;
}

std::string hex_id(std::mt19937_64& rng) {
  static char const digits[] = "0123456789abcdef";
  std::string out;
  for (int i = 0; i < 32; ++i) out.push_back(digits[rng() % 16]);
  return out;
}

}  // namespace

simra::Ride random_ride(std::mt19937_64& rng) {
  simra::Ride ride;
  ride.ride_id = hex_id(rng);
  std::uniform_int_distribution<int> region_len(1, 12);
  for (int i = region_len(rng); i > 0; --i) ride.region.push_back(static_cast<char>('a' + rng() % 26));
  std::bernoulli_distribution coin(0.5);
  ride.context = {static_cast<simra::BikeType>(rng() % simra::kBikeTypeCount),
                  static_cast<simra::PhoneLocation>(rng() % simra::kPhoneLocationCount), coin(rng), coin(rng)};

  std::uniform_int_distribution<int> count(1, 200);
  std::uniform_int_distribution<std::int64_t> gap(1, 5000);
  std::int64_t ts = std::uniform_int_distribution<std::int64_t>(1'400'000'000'000, 1'800'000'000'000)(rng);
  std::bernoulli_distribution has_fix(0.4);
  std::bernoulli_distribution has_orientation(0.7);
  for (int i = count(rng); i > 0; --i) {
    simra::RideSample s;
    s.timestamp = ts;
    ts += gap(rng);
    if (has_fix(rng)) {
      s.location = simra::GeoPoint{grid(rng, -90'000'000, 90'000'000, 1e6), grid(rng, -180'000'000, 180'000'000, 1e6)};
      s.accuracy_m = grid(rng, 0, 10'000, 1e2);
    }
    s.accel = {grid(rng, -40'000, 40'000, 1e3), grid(rng, -40'000, 40'000, 1e3), grid(rng, -40'000, 40'000, 1e3)};
    if (has_orientation(rng)) {
      s.orientation = simra::Vec3{grid(rng, -360'000, 360'000, 1e3), grid(rng, -180'000, 180'000, 1e3),
                                  grid(rng, -180'000, 180'000, 1e3)};
    }
    ride.samples.push_back(s);
  }

  std::uniform_int_distribution<int> incidents(0, 6);
  std::uniform_int_distribution<std::int64_t> when(ride.start_ts(), ride.end_ts());
  for (int i = incidents(rng); i > 0; --i) {
    simra::Incident inc;
    inc.location = {grid(rng, -90'000'000, 90'000'000, 1e6), grid(rng, -180'000'000, 180'000'000, 1e6)};
    inc.timestamp = when(rng);
    inc.type = static_cast<simra::IncidentType>(rng() % 9);
    inc.scary = coin(rng);
    inc.participants = simra::ParticipantSet(rng() & 0x3ff);
    inc.description = random_text(rng);
    inc.auto_detected = coin(rng);
    ride.incidents.push_back(std::move(inc));
  }
  return ride;
}

simra::Profile random_profile(std::mt19937_64& rng) {
  simra::Profile p;
  std::uniform_int_distribution<int> region_len(1, 10);
  for (int i = region_len(rng); i > 0; --i) p.region.push_back(static_cast<char>('a' + rng() % 26));
  p.age_group = static_cast<int>(rng() % 12);
  p.gender = static_cast<simra::Gender>(rng() % 4);
  p.experience_years = static_cast<int>(rng() % 60);
  std::uniform_int_distribution<std::int64_t> ms(0, 10'000'000'000);
  p.stats.ride_duration_ms = ms(rng);
  p.stats.wait_duration_ms = std::uniform_int_distribution<std::int64_t>(0, p.stats.ride_duration_ms)(rng);
  p.stats.incident_count = static_cast<std::int64_t>(rng() % 5000);
  for (auto& h : p.stats.ride_time_histogram) h = static_cast<std::int64_t>(rng() % 300);
  return p;
}

SpikeRide spike_ride(std::mt19937_64& rng, double seconds, std::int64_t dt_ms, double sigma, double snr, int spikes,
                     std::int64_t bucket_ms) {
  SpikeRide out;
  auto& ride = out.ride;
  ride.ride_id = hex_id(rng);
  ride.region = "synthetic";
  std::normal_distribution<double> noise(0.0, sigma);
  auto const n = static_cast<std::size_t>(seconds * 1000.0 / static_cast<double>(dt_ms));
  std::int64_t const t0 = 1'600'000'000'000;
  for (std::size_t i = 0; i < n; ++i) {
    simra::RideSample s;
    s.timestamp = t0 + static_cast<std::int64_t>(i) * dt_ms;
    s.accel = {noise(rng), noise(rng), 9.81 + noise(rng)};
    if (i % 3 == 0) {
      s.location = simra::GeoPoint{52.5 + 1e-5 * static_cast<double>(i), 13.4};
      s.accuracy_m = 5.0;
    }
    ride.samples.push_back(s);
  }
  auto const buckets = static_cast<std::int64_t>((ride.end_ts() - t0) / bucket_ms + 1);
  std::set<std::int64_t> chosen;
  std::uniform_int_distribution<std::int64_t> pick_bucket(0, buckets - 1);
  while (static_cast<int>(chosen.size()) < spikes) chosen.insert(pick_bucket(rng));
  std::bernoulli_distribution sign(0.5);
  for (auto b : chosen) {
    std::vector<std::size_t> members;
    for (std::size_t i = 0; i < n; ++i) {
      if ((ride.samples[i].timestamp - t0) / bucket_ms == b) members.push_back(i);
    }
    auto const idx = members[rng() % members.size()];
    double const amp = (sign(rng) ? 1.0 : -1.0) * snr * sigma;
    switch (rng() % 3) {
      case 0: ride.samples[idx].accel.x += amp; break;
      case 1: ride.samples[idx].accel.y += amp; break;
      default: ride.samples[idx].accel.z += amp; break;
    }
    out.spike_samples.push_back(idx);
  }
  return out;
}

std::filesystem::path temp_dir(std::string const& tag) {
  static std::atomic<int> counter{0};
  auto const dir = std::filesystem::temp_directory_path() /
                   ("simra-" + tag + "-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace gen
