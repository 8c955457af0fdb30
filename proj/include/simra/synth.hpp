#pragma once

#include <array>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "simra/geo.hpp"
#include "simra/mapgraph.hpp"
#include "simra/ride.hpp"

namespace simra {

// Two horizontal and two vertical streets crossing like '#'. Streets run
// from 0 to 3*spacing and cross at spacing and 2*spacing, in meters east
// and north of `origin`.
struct GridSpec {
  GeoPoint origin{52.5, 13.4};
  double spacing_m = 200.0;
  std::string region = "grid";
};

/// Ways "h0", "h1" (west to east), "v0", "v1" (south to north) and
/// junctions "j<col><row>" with arity 4.
MapExtract grid_extract(GridSpec const& spec);

struct SynthRideParams {
  double speed_ms = 5.0;
  double fix_interval_s = 3.0;
  double sample_interval_s = 1.0;
  double noise_m = 2.0;           // per-axis standard deviation of fixes
  double min_node_clearance_m = 30.0;
  int max_turns = 3;              // junctions crossed: 1..max_turns
  int max_incidents = 3;
  TimestampMs start_ts = 1'600'000'000'000;
};

struct SynthRide {
  Ride ride;                     // as it round-trips through the file format
  std::vector<LocalXY> route;    // noise-free polyline, meters from the grid origin
};

/// A ride along the grid: starts and ends mid-block, crosses 1..max_turns
/// junctions without U-turns.
SynthRide synth_grid_ride(GridSpec const& spec, SynthRideParams const& params, std::mt19937_64& rng);

// Scary / non-scary counts per labeled incident type.
using IncidentTally = std::array<std::array<std::int64_t, 2>, kLabeledTypeCount>;

/// Short rides around `center` carrying exactly the tallied incidents,
/// shuffled and packed `per_ride` to a ride, with random cyclist context.
std::vector<Ride> synth_incident_rides(std::string const& region, GeoPoint center,
                                       IncidentTally const& tally, std::size_t per_ride,
                                       std::mt19937_64& rng);

/// Random 32-hex-digit pseudonym drawn from `rng`.
std::string synth_ride_id(std::mt19937_64& rng);

}  // namespace simra
