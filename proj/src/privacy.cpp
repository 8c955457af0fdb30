#include "simra/privacy.hpp"

#include <algorithm>
#include <cmath>

#include "simra/error.hpp"

namespace simra {

std::vector<std::size_t> usable_fixes(Ride const& ride, double max_accuracy_m) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < ride.samples.size(); ++i) {
    auto const& s = ride.samples[i];
    if (s.location && s.accuracy_m.value_or(0.0) <= max_accuracy_m) {
      out.push_back(i);
    }
  }
  return out;
}

namespace {

void check_bound(std::optional<double> const& v, char const* name) {
  if (v && !(std::isfinite(*v) && *v >= 0.0)) {
    fail(ErrorKind::InvalidArgument, std::string(name) + " must be a non-negative number");
  }
}

// Ride restricted to samples [first, last], incidents filtered to the new span.
Ride slice(Ride const& ride, std::size_t first, std::size_t last) {
  Ride out;
  out.ride_id = ride.ride_id;
  out.region = ride.region;
  out.context = ride.context;
  out.samples.assign(ride.samples.begin() + static_cast<std::ptrdiff_t>(first),
                     ride.samples.begin() + static_cast<std::ptrdiff_t>(last) + 1);
  for (auto const& inc : ride.incidents) {
    if (inc.timestamp >= out.start_ts() && inc.timestamp <= out.end_ts()) {
      out.incidents.push_back(inc);
    }
  }
  return out;
}

}  // namespace

Ride crop_ride(Ride const& ride, CropSpec const& spec) {
  if (!spec.any()) {
    fail(ErrorKind::InvalidArgument, "crop requested without any bound");
  }
  check_bound(spec.start_time_s, "start time");
  check_bound(spec.start_distance_m, "start distance");
  check_bound(spec.end_time_s, "end time");
  check_bound(spec.end_distance_m, "end distance");
  validate(ride);

  auto const& samples = ride.samples;
  auto const n = samples.size();

  // Distance travelled up to (and including) each sample, along all fixes.
  std::vector<double> travelled(n, 0.0);
  std::optional<GeoPoint> last_fix;
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (samples[i].location) {
      if (last_fix) acc += haversine_m(*last_fix, *samples[i].location);
      last_fix = samples[i].location;
    }
    travelled[i] = acc;
  }
  double const total = acc;

  std::size_t lead = 0;
  if (spec.start_time_s) {
    double const limit = *spec.start_time_s * 1000.0;
    std::size_t cut = 0;
    while (cut < n && static_cast<double>(samples[cut].timestamp - ride.start_ts()) < limit) ++cut;
    lead = std::max(lead, cut);
  }
  if (spec.start_distance_m) {
    std::size_t cut = 0;
    while (cut < n && travelled[cut] < *spec.start_distance_m) ++cut;
    lead = std::max(lead, cut);
  }
  std::size_t trail = 0;
  if (spec.end_time_s) {
    double const limit = *spec.end_time_s * 1000.0;
    std::size_t cut = 0;
    while (cut < n && static_cast<double>(ride.end_ts() - samples[n - 1 - cut].timestamp) < limit) {
      ++cut;
    }
    trail = std::max(trail, cut);
  }
  if (spec.end_distance_m) {
    std::size_t cut = 0;
    while (cut < n && total - travelled[n - 1 - cut] < *spec.end_distance_m) ++cut;
    trail = std::max(trail, cut);
  }
  if (lead + trail >= n) {
    fail(ErrorKind::EmptyRide, "crop removes every sample of ride " + ride.ride_id);
  }
  return slice(ride, lead, n - 1 - trail);
}

namespace {

// Index into ride.samples of the fix opening a removable tail, if any.
std::optional<std::size_t> trailing_stop_start(Ride const& ride, TrailingStopParams const& p) {
  auto const fixes = usable_fixes(ride);
  for (std::size_t j = 0; j < fixes.size(); ++j) {
    auto const& anchor = *ride.samples[fixes[j]].location;
    bool inside = true;
    for (std::size_t k = fixes.size(); k-- > j + 1;) {
      if (haversine_m(anchor, *ride.samples[fixes[k]].location) > p.radius_m) {
        inside = false;
        break;
      }
    }
    if (!inside) continue;
    auto const span_ms = ride.end_ts() - ride.samples[fixes[j]].timestamp;
    if (static_cast<double>(span_ms) >= p.min_stationary_s * 1000.0 && fixes[j] + 1 < ride.samples.size()) {
      return fixes[j];
    }
    // The earliest anchor covering the tail was found; later anchors only
    // shorten the span.
    return std::nullopt;
  }
  return std::nullopt;
}

}  // namespace

TrailingStopResult auto_crop_trailing_stop(Ride const& ride, TrailingStopParams const& params) {
  if (!(params.radius_m >= 0.0) || !(params.min_stationary_s >= 0.0)) {
    fail(ErrorKind::InvalidArgument, "stop radius and duration must be non-negative");
  }
  validate(ride);
  TrailingStopResult result{ride, 0};
  // Trimming can expose a new qualifying tail; iterate to the fixpoint so the
  // operation is idempotent.
  while (auto start = trailing_stop_start(result.ride, params)) {
    result.ride = slice(result.ride, 0, *start);
  }
  result.trimmed_ms = ride.end_ts() - result.ride.end_ts();
  return result;
}

char const* to_string(TransportMode mode) {
  return mode == TransportMode::SuspectMotorized ? "SuspectMotorized" : "PlausibleBicycle";
}

ScreenResult screen_transport_mode(Ride const& ride, ScreenParams const& params) {
  if (!(params.sustained_kmh > 0.0) || !(params.sustained_s >= 0.0)) {
    fail(ErrorKind::InvalidArgument, "speed threshold must be positive");
  }
  auto const fixes = usable_fixes(ride);
  if (fixes.size() < 2) {
    fail(ErrorKind::InsufficientData, "speed screening needs at least two GPS fixes");
  }
  double const v = params.sustained_kmh / 3.6;
  double const window_ms = params.sustained_s * 1000.0;
  auto const t0 = ride.samples[fixes[0]].timestamp;

  // Window [i, j] has mean speed >= v iff potential[j] >= potential[i], with
  // potential = travelled distance - v * elapsed time.
  std::vector<double> potential(fixes.size());
  double travelled = 0.0;
  for (std::size_t k = 0; k < fixes.size(); ++k) {
    if (k > 0) {
      travelled += haversine_m(*ride.samples[fixes[k - 1]].location, *ride.samples[fixes[k]].location);
    }
    double const elapsed_s = static_cast<double>(ride.samples[fixes[k]].timestamp - t0) / 1000.0;
    potential[k] = travelled - v * elapsed_s;
  }

  std::size_t eligible = 0;  // windows may start at indices < eligible
  std::size_t best_start = 0;
  for (std::size_t j = 1; j < fixes.size(); ++j) {
    auto const tj = ride.samples[fixes[j]].timestamp;
    while (eligible < j &&
           static_cast<double>(tj - ride.samples[fixes[eligible]].timestamp) >= window_ms) {
      if (eligible == 0 || potential[eligible] < potential[best_start]) best_start = eligible;
      ++eligible;
    }
    if (eligible > 0 && potential[j] >= potential[best_start]) {
      return {TransportMode::SuspectMotorized, ride.samples[fixes[best_start]].timestamp, tj};
    }
  }
  return {};
}

}  // namespace simra
