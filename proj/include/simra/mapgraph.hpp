#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "simra/geo.hpp"
#include "simra/ride.hpp"

namespace simra {

using TypeCounts = std::array<std::int64_t, kLabeledTypeCount>;
// Rows are labeled incident types, columns are ride directions.
using DirectionalCounts = std::array<std::array<std::int64_t, 2>, kLabeledTypeCount>;

struct Intersection {
  std::string id;
  GeoPoint center;
  std::vector<GeoPoint> polygon;  // closed ring, first == last
  std::int64_t r = 0;
  TypeCounts s{};
  TypeCounts n{};
};

// Direction 0 runs along the centerline from its first to its last point,
// i.e. from `from` towards `to`.
struct StreetSegment {
  std::string id;
  std::optional<std::size_t> from;  // node index; empty at dead ends
  std::optional<std::size_t> to;
  std::vector<GeoPoint> centerline;
  std::vector<GeoPoint> polygon;
  double length_m = 0.0;
  std::array<std::int64_t, 2> r{};
  DirectionalCounts s{};
  DirectionalCounts n{};

  std::int64_t total_rides() const { return r[0] + r[1]; }
};

enum class ElementKind : std::uint8_t { Node, Edge };

struct ElementRef {
  ElementKind kind = ElementKind::Node;
  std::size_t index = 0;

  auto operator<=>(ElementRef const&) const = default;
};

struct MapGraph {
  std::string region;
  double buffer_width_m = 10.0;
  GeoPoint origin;  // projection origin for planar geometry
  std::vector<Intersection> nodes;  // sorted by id
  std::vector<StreetSegment> edges;  // sorted by id

  std::optional<std::size_t> find_node(std::string_view id) const;
  std::optional<std::size_t> find_edge(std::string_view id) const;
  std::optional<ElementRef> find(ElementKind kind, std::string_view id) const;
  std::string const& id_of(ElementRef ref) const;

  /// Throws Build if ids are unsorted or duplicated, endpoints dangle,
  /// lengths are not positive or a polygon is degenerate.
  void validate() const;
};

// Input records of a map extract (one JSON object per line).
struct ExtractWay {
  std::string id;
  std::vector<GeoPoint> coords;
  std::optional<std::string> from_ref;
  std::optional<std::string> to_ref;
};

struct ExtractJunction {
  std::string id;
  GeoPoint location;
  std::optional<int> arity;  // arms reported by the extractor
};

struct MapExtract {
  std::vector<ExtractWay> ways;
  std::vector<ExtractJunction> junctions;
};

MapExtract parse_extract(std::string_view jsonl);
std::string serialize_extract(MapExtract const& extract);

struct BuildParams {
  std::string region;
  double buffer_width_m = 10.0;
  double vertex_match_m = 0.5;  // a way vertex this close to a junction passes through it
};

/// Turns an extract into a graph: junctions where more than two street arms
/// meet become nodes, ways are split at nodes into edges, and polygons come
/// from buffering (edges: width/2 each side, nodes: disc of radius width).
MapGraph build_graph(MapExtract const& extract, BuildParams const& params);

/// Converts an OpenStreetMap XML extract into the extract record format,
/// keeping ways tagged as highways a cyclist may legally use.
MapExtract extract_from_osm_xml(std::string const& xml);

}  // namespace simra
