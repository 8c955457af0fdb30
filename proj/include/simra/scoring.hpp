#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

#include "simra/mapgraph.hpp"

namespace simra {

using Rational = boost::multiprecision::cpp_rational;

/// Exact value of a decimal literal such as "4.4" or "1e-3".
Rational parse_decimal(std::string_view text);
/// Exact value of the shortest decimal that round-trips to `value`.
Rational rational_from_double(double value);
/// "659/5" style exact rendering ("3" for integers).
std::string exact_string(Rational const& value);
Rational parse_exact(std::string_view text);
/// value * 10^scale rounded half-up to `decimals` places, e.g. "131.90".
std::string format_scaled(Rational const& value, int scale, int decimals = 2);

enum class SelectionMode { TopK, Threshold, All };

struct Selection {
  SelectionMode mode = SelectionMode::All;
  std::size_t k = 0;
  Rational threshold = 0;
};

struct ScoreConfig {
  Rational alpha{22, 5};
  std::int64_t min_rides = 10;
  bool length_adjusted = false;
  // Score edges on direction-summed counts instead of per direction.
  bool pool_directions = false;
  Selection selection;

  void validate() const;
  /// Identifies the settings that change score values.
  std::string fingerprint() const;
};

// Rows are labeled incident types. Nodes and pooled edges use column 0
// only; an edge column is empty when that direction saw no rides.
struct ScoreMatrix {
  int columns = 1;
  std::array<std::array<std::optional<Rational>, 2>, kLabeledTypeCount> cells{};
  std::array<Rational, kLabeledTypeCount> by_direction{};  // row sums over defined columns
  std::array<std::optional<Rational>, 2> by_category{};    // column sums
  Rational total = 0;
};

struct ElementScore {
  ElementKind kind = ElementKind::Node;
  std::string id;
  std::int64_t total_rides = 0;
  double length_m = 0.0;  // edges only
  bool partial = false;   // an edge direction had no rides
  ScoreMatrix score;
  std::optional<ScoreMatrix> length_adjusted;  // edges only
  std::string fingerprint;

  /// Ranking key: length-adjusted total for edges when requested.
  Rational const& ranking_value(bool length_adjusted) const;
};

ElementScore score_node(Intersection const& node, ScoreConfig const& cfg);
ElementScore score_edge(StreetSegment const& edge, ScoreConfig const& cfg);

struct GraphScores {
  std::vector<ElementScore> scores;  // nodes first, then edges, each by id
  std::vector<std::string> unscored;  // ids of elements nobody rode
};

GraphScores score_graph(MapGraph const& graph, ScoreConfig const& cfg);

struct HotspotEntry {
  ElementKind kind = ElementKind::Node;
  std::string id;
  Rational value = 0;
  std::int64_t total_rides = 0;
  std::size_t rank = 0;  // 1-based within its list
};

struct HotspotRanking {
  bool separate = false;  // nodes and edges ranked apart
  std::vector<HotspotEntry> combined;
  std::vector<HotspotEntry> nodes;
  std::vector<HotspotEntry> edges;
};

/// Filters by min_rides and orders by score, then more rides, then id.
/// Throws Validation if a score was computed under other settings.
HotspotRanking rank_hotspots(std::span<ElementScore const> scores, ScoreConfig const& cfg);

}  // namespace simra
