#pragma once

#include <string>
#include <string_view>

#include "simra/mapgraph.hpp"
#include "simra/scoring.hpp"

namespace simra {

/// Score report JSON. Exact values are rationals written as "p/q"; display
/// strings are in units of 10^-2 (raw) and 10^-4 (length-adjusted).
std::string build_report(MapGraph const& graph, GraphScores const& scores,
                         HotspotRanking const& ranking, ScoreConfig const& cfg);

/// Hotspot overlay for a report: one polygon feature per ranked element.
std::string hotspots_geojson(std::string_view report_json);

}  // namespace simra
