#include "simra/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>

#include "simra/error.hpp"
#include "simra/ride_io.hpp"

namespace simra {

namespace {

// Round-trip through the file format so coordinates carry file precision.
Ride canonical(Ride const& ride) { return parse_ride(serialize_ride(ride)); }

double length_of(std::vector<LocalXY> const& line) {
  double total = 0.0;
  for (std::size_t i = 1; i < line.size(); ++i) {
    total += std::hypot(line[i].x - line[i - 1].x, line[i].y - line[i - 1].y);
  }
  return total;
}

LocalXY point_at(std::vector<LocalXY> const& line, double dist) {
  for (std::size_t i = 1; i < line.size(); ++i) {
    double const seg = std::hypot(line[i].x - line[i - 1].x, line[i].y - line[i - 1].y);
    if (dist <= seg || i + 1 == line.size()) {
      double const t = seg > 0.0 ? std::clamp(dist / seg, 0.0, 1.0) : 0.0;
      return {line[i - 1].x + t * (line[i].x - line[i - 1].x), line[i - 1].y + t * (line[i].y - line[i - 1].y)};
    }
    dist -= seg;
  }
  return line.back();
}

CyclistContext random_context(std::mt19937_64& rng) {
  std::uniform_int_distribution<int> bike(0, kBikeTypeCount - 1);
  std::uniform_int_distribution<int> phone(0, kPhoneLocationCount - 1);
  std::bernoulli_distribution rare(0.15);
  return {static_cast<BikeType>(bike(rng)), static_cast<PhoneLocation>(phone(rng)), rare(rng), rare(rng)};
}

Vec3 gravity_noise(std::mt19937_64& rng) {
  std::normal_distribution<double> noise(0.0, 0.2);
  return {noise(rng), noise(rng), 9.81 + noise(rng)};
}

}  // namespace

std::string synth_ride_id(std::mt19937_64& rng) {
  char buf[33];
  std::snprintf(buf, sizeof buf, "%016llx%016llx", static_cast<unsigned long long>(rng()),
                static_cast<unsigned long long>(rng()));
  return buf;
}

MapExtract grid_extract(GridSpec const& spec) {
  LocalProjection const proj(spec.origin);
  double const s = spec.spacing_m;
  MapExtract out;
  for (int k = 0; k < 2; ++k) {
    double const c = s * (k + 1);
    ExtractWay h{"h" + std::to_string(k), {}, std::nullopt, std::nullopt};
    ExtractWay v{"v" + std::to_string(k), {}, std::nullopt, std::nullopt};
    for (int i = 0; i <= 3; ++i) {
      h.coords.push_back(proj.to_geo({s * i, c}));
      v.coords.push_back(proj.to_geo({c, s * i}));
    }
    out.ways.push_back(std::move(h));
    out.ways.push_back(std::move(v));
  }
  for (int col = 0; col < 2; ++col) {
    for (int row = 0; row < 2; ++row) {
      out.junctions.push_back({"j" + std::to_string(col) + std::to_string(row),
                               proj.to_geo({s * (col + 1), s * (row + 1)}), 4});
    }
  }
  return out;
}

SynthRide synth_grid_ride(GridSpec const& spec, SynthRideParams const& params, std::mt19937_64& rng) {
  double const s = spec.spacing_m;
  double const clearance = params.min_node_clearance_m;
  if (!(clearance * 2 < s)) fail(ErrorKind::InvalidArgument, "node clearance too large for grid spacing");
  std::uniform_int_distribution<int> coin(0, 1);
  std::uniform_real_distribution<double> along(clearance, s - clearance);

  // Walk the lattice of the four crossings. Position is a crossing (i, j)
  // in {1,2}^2 scaled by s; heading is a unit step.
  bool const horizontal = coin(rng) == 1;
  int const line = coin(rng) + 1;  // which street, 1 or 2
  int const step = coin(rng) == 1 ? 1 : -1;
  // First crossing reached: street `line`, crossing index 1 or 2.
  int const first = step > 0 ? 1 : 2;
  int cx = horizontal ? first : line;
  int cy = horizontal ? line : first;
  int dx = horizontal ? step : 0;
  int dy = horizontal ? 0 : step;

  std::vector<LocalXY> route;
  double const approach = along(rng);
  route.push_back({s * cx - dx * approach, s * cy - dy * approach});
  route.push_back({s * cx, s * cy});

  std::uniform_int_distribution<int> turns_dist(1, std::max(1, params.max_turns));
  int const crossings = turns_dist(rng);
  for (int c = 1; c < crossings; ++c) {
    // Options: straight, left, right, if the next crossing exists.
    std::vector<std::pair<int, int>> options;
    for (auto [ox, oy] : {std::pair{dx, dy}, std::pair{-dy, dx}, std::pair{dy, -dx}}) {
      int const nx = cx + ox;
      int const ny = cy + oy;
      if (nx >= 1 && nx <= 2 && ny >= 1 && ny <= 2) options.emplace_back(ox, oy);
    }
    if (options.empty()) break;
    std::uniform_int_distribution<std::size_t> pick(0, options.size() - 1);
    std::tie(dx, dy) = options[pick(rng)];
    cx += dx;
    cy += dy;
    route.push_back({s * cx, s * cy});
  }
  // Leave the last crossing on any arm but the one we came from.
  std::vector<std::pair<int, int>> exits = {{dx, dy}, {-dy, dx}, {dy, -dx}};
  std::uniform_int_distribution<std::size_t> pick_exit(0, exits.size() - 1);
  auto const [ex, ey] = exits[pick_exit(rng)];
  double const depart = along(rng);
  route.push_back({s * cx + ex * depart, s * cy + ey * depart});

  LocalProjection const proj(spec.origin);
  std::normal_distribution<double> noise(0.0, params.noise_m);
  double const total = length_of(route);
  double const duration = total / params.speed_ms;
  auto const sample_ms = static_cast<TimestampMs>(std::llround(params.sample_interval_s * 1000));
  auto const fix_ms = static_cast<TimestampMs>(std::llround(params.fix_interval_s * 1000));

  Ride ride;
  ride.ride_id = synth_ride_id(rng);
  ride.region = spec.region;
  ride.context = random_context(rng);
  auto const end_ms = static_cast<TimestampMs>(std::llround(duration * 1000));
  for (TimestampMs t = 0; t <= end_ms; t += sample_ms) {
    RideSample sample;
    sample.timestamp = params.start_ts + t;
    sample.accel = gravity_noise(rng);
    if (t % fix_ms == 0) {
      auto const p = point_at(route, params.speed_ms * static_cast<double>(t) / 1000.0);
      sample.location = proj.to_geo({p.x + noise(rng), p.y + noise(rng)});
      sample.accuracy_m = std::max(3.0, std::abs(params.noise_m * 2.0));
    }
    ride.samples.push_back(sample);
  }

  std::uniform_int_distribution<int> count_dist(0, std::max(0, params.max_incidents));
  std::uniform_int_distribution<std::size_t> sample_pick(0, ride.samples.size() - 1);
  std::uniform_int_distribution<int> type_dist(1, kLabeledTypeCount);
  std::bernoulli_distribution scary(0.3);
  int const incidents = count_dist(rng);
  std::vector<std::size_t> at;
  for (int i = 0; i < incidents; ++i) at.push_back(sample_pick(rng));
  std::sort(at.begin(), at.end());
  for (auto idx : at) {
    auto const t = ride.samples[idx].timestamp - params.start_ts;
    auto const p = point_at(route, params.speed_ms * static_cast<double>(t) / 1000.0);
    Incident inc;
    inc.location = proj.to_geo({p.x + noise(rng), p.y + noise(rng)});
    inc.timestamp = ride.samples[idx].timestamp;
    inc.type = static_cast<IncidentType>(type_dist(rng));
    inc.scary = scary(rng);
    inc.participants.set(static_cast<std::size_t>(Participant::Car));
    ride.incidents.push_back(std::move(inc));
  }
  return {canonical(ride), std::move(route)};
}

std::vector<Ride> synth_incident_rides(std::string const& region, GeoPoint center, IncidentTally const& tally,
                                       std::size_t per_ride, std::mt19937_64& rng) {
  if (per_ride == 0) fail(ErrorKind::InvalidArgument, "per_ride must be positive");
  std::vector<std::pair<IncidentType, bool>> pool;
  for (std::size_t t = 0; t < kLabeledTypeCount; ++t) {
    for (int scary = 0; scary < 2; ++scary) {
      auto const count = tally[t][scary == 1 ? 0 : 1];
      if (count < 0) fail(ErrorKind::InvalidArgument, "negative incident count");
      for (std::int64_t i = 0; i < count; ++i) pool.emplace_back(type_from_row(t), scary == 1);
    }
  }
  std::shuffle(pool.begin(), pool.end(), rng);

  LocalProjection const proj(center);
  std::uniform_real_distribution<double> offset(-3000.0, 3000.0);
  std::uniform_real_distribution<double> heading(0.0, 2 * std::numbers::pi);
  std::uniform_int_distribution<TimestampMs> day(0, 364);
  std::uniform_int_distribution<TimestampMs> minute(0, 24 * 60 - 1);
  std::vector<Ride> rides;
  for (std::size_t begin = 0; begin < pool.size(); begin += per_ride) {
    auto const end = std::min(pool.size(), begin + per_ride);
    Ride ride;
    ride.ride_id = synth_ride_id(rng);
    ride.region = region;
    ride.context = random_context(rng);
    TimestampMs const start = 1'577'836'800'000 + (day(rng) * 1440 + minute(rng)) * 60'000;
    LocalXY const origin{offset(rng), offset(rng)};
    double const h = heading(rng);
    std::size_t const samples = 10 * (end - begin) + 10;
    for (std::size_t i = 0; i < samples; ++i) {
      RideSample sample;
      sample.timestamp = start + static_cast<TimestampMs>(i) * 3000;
      double const d = 15.0 * static_cast<double>(i);
      sample.location = proj.to_geo({origin.x + d * std::cos(h), origin.y + d * std::sin(h)});
      sample.accuracy_m = 5.0;
      sample.accel = gravity_noise(rng);
      ride.samples.push_back(sample);
    }
    for (std::size_t k = begin; k < end; ++k) {
      auto const& s = ride.samples[5 + 10 * (k - begin)];
      Incident inc;
      inc.location = *s.location;
      inc.timestamp = s.timestamp;
      inc.type = pool[k].first;
      inc.scary = pool[k].second;
      ride.incidents.push_back(std::move(inc));
    }
    rides.push_back(canonical(ride));
  }
  return rides;
}

}  // namespace simra
