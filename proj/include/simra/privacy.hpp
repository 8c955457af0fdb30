#pragma once

#include <optional>
#include <vector>

#include "simra/ride.hpp"

namespace simra {

// Fixes reporting a larger 68% radius than this are ignored for speed and
// stop estimation.
inline constexpr double kMaxFixAccuracyM = 30.0;

/// Indices of samples carrying a location with accuracy <= max_accuracy_m.
std::vector<std::size_t> usable_fixes(Ride const& ride, double max_accuracy_m = kMaxFixAccuracyM);

struct CropSpec {
  std::optional<double> start_time_s;
  std::optional<double> start_distance_m;
  std::optional<double> end_time_s;
  std::optional<double> end_distance_m;

  bool any() const {
    return start_time_s || start_distance_m || end_time_s || end_distance_m;
  }
};

/// Drops leading and trailing samples inside the requested time or
/// cumulative-distance bounds (whichever removes more at each end), along
/// with incidents outside the surviving time span. Throws EmptyRide when
/// nothing would be left.
Ride crop_ride(Ride const& ride, CropSpec const& spec);

struct TrailingStopParams {
  double radius_m = 50.0;
  double min_stationary_s = 300.0;
};

struct TrailingStopResult {
  Ride ride;
  TimestampMs trimmed_ms = 0;
};

/// Removes a forgotten-to-stop tail: the final span of at least
/// min_stationary_s whose fixes all stay within radius_m of its first fix.
/// Idempotent.
TrailingStopResult auto_crop_trailing_stop(Ride const& ride, TrailingStopParams const& params = {});

enum class TransportMode { PlausibleBicycle, SuspectMotorized };

char const* to_string(TransportMode mode);

struct ScreenParams {
  double sustained_kmh = 35.0;
  double sustained_s = 120.0;
};

struct ScreenResult {
  TransportMode mode = TransportMode::PlausibleBicycle;
  // Earliest-ending qualifying window, when flagged.
  std::optional<TimestampMs> window_start;
  std::optional<TimestampMs> window_end;
};

/// Flags rides containing a window of at least sustained_s whose mean speed
/// reaches sustained_kmh. Advisory only; never alters the ride.
ScreenResult screen_transport_mode(Ride const& ride, ScreenParams const& params = {});

}  // namespace simra
