#pragma once

// Reference implementations used as test oracles. They are deliberately
// naive (brute force, dense sampling, full recounts) and share no code with
// the library beyond plain data types.

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "simra/matching.hpp"
#include "simra/ride.hpp"

namespace oracle {

struct V3 {
  double x, y, z;
};

/// Mean of each window of width w ending at i*keep + w - 1.
std::vector<V3> windowed_means(std::vector<V3> const& raw, std::size_t w, std::size_t keep);

double haversine(double lat1, double lon1, double lat2, double lon2);

/// Number of leading points whose distance along the track from the first
/// point, summed from scratch for each point, stays below `meters`.
std::size_t leading_cut_by_distance(std::vector<simra::GeoPoint> const& track, double meters);

struct Pt {
  double x, y;
};

/// Nearest distance from p to a polyline, by sampling it every `step` meters.
double dense_nearest(std::vector<Pt> const& line, Pt p, double step);

// Crossing points of straight way segments, with the number of street arms
// meeting there.
struct Crossing {
  Pt at;
  int arms;
};

struct WayLine {
  std::string id;
  std::vector<Pt> pts;
};

/// Scans all pairs of way segments for intersections.
std::vector<Crossing> crossings(std::vector<WayLine> const& ways);

struct GraphCounts {
  std::size_t nodes;
  std::size_t edges;
};

/// Nodes are crossings with more than two arms; each way contributes one
/// edge plus one per node strictly inside it.
GraphCounts expected_counts(std::vector<WayLine> const& ways);

struct Step {
  simra::ElementKind kind;
  std::string id;
  std::optional<int> direction;

  bool operator==(Step const&) const = default;
};

/// Element sequence of a noise-free route on the '#' grid with the given
/// spacing: inside a disc of `node_radius` around a crossing it is that
/// junction, elsewhere the street block it runs along.
std::vector<Step> grid_route_truth(std::vector<Pt> const& route, double spacing, double node_radius);

std::vector<Step> steps_of(simra::MatchedRide const& m);

// Counters per element recomputed from matched rides.
struct Counters {
  std::array<std::int64_t, 2> r{};
  std::array<std::array<std::int64_t, 2>, 8> s{};
  std::array<std::array<std::int64_t, 2>, 8> n{};
};

std::map<std::pair<int, std::string>, Counters> recount(std::vector<simra::MatchedRide> const& matched);

// Exact fraction over 128-bit integers, reduced.
struct Frac {
  __int128 num = 0;
  __int128 den = 1;

  static Frac of(__int128 n, __int128 d);
  Frac operator+(Frac const& o) const;
  Frac operator/(Frac const& o) const;
  bool operator==(Frac const& o) const = default;
  std::string str() const;  // "p/q" or "p"
};

/// (alpha*s + n) / r with alpha = alpha_num / alpha_den.
Frac score_cell(std::int64_t alpha_num, std::int64_t alpha_den, std::int64_t s, std::int64_t n, std::int64_t r);

/// value * 10^scale rounded half up to two decimals.
std::string display(Frac const& value, int scale);

}  // namespace oracle
