#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "simra/mapgraph.hpp"
#include "simra/matching.hpp"

namespace simra {

/// Graph file: one JSON document with nodes, edges, polygons and counters.
std::string serialize_graph(MapGraph const& graph);
MapGraph parse_graph(std::string_view json_text);

/// GeoJSON FeatureCollection, one polygon feature per element with its
/// r, s, n (and l for edges) as properties.
std::string graph_to_geojson(MapGraph const& graph);

/// Matched rides as JSON lines, one ride per line.
std::string serialize_matched(std::vector<MatchedRide> const& rides);
std::vector<MatchedRide> parse_matched(std::string_view jsonl);

}  // namespace simra
