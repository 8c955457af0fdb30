#pragma once

// Boost.Geometry plumbing shared by graph building and matching.

#include <boost/geometry.hpp>
#include <boost/geometry/geometries/box.hpp>
#include <boost/geometry/geometries/linestring.hpp>
#include <boost/geometry/geometries/point_xy.hpp>
#include <boost/geometry/geometries/polygon.hpp>
#include <span>
#include <vector>

#include "simra/geo.hpp"

namespace simra::planar {

namespace bg = boost::geometry;

using Point = bg::model::d2::point_xy<double>;
using Polygon = bg::model::polygon<Point>;  // clockwise, closed
using MultiPolygon = bg::model::multi_polygon<Polygon>;
using Line = bg::model::linestring<Point>;
using Box = bg::model::box<Point>;

inline Point to_point(LocalXY const& xy) { return {xy.x, xy.y}; }

inline Point project(LocalProjection const& proj, GeoPoint const& p) {
  return to_point(proj.to_local(p));
}

inline Line project(LocalProjection const& proj, std::span<GeoPoint const> pts) {
  Line line;
  for (auto const& p : pts) line.push_back(project(proj, p));
  return line;
}

inline Polygon project_ring(LocalProjection const& proj, std::span<GeoPoint const> ring) {
  Polygon poly;
  for (auto const& p : ring) poly.outer().push_back(project(proj, p));
  bg::correct(poly);
  return poly;
}

inline std::vector<GeoPoint> unproject_ring(LocalProjection const& proj, Polygon const& poly) {
  std::vector<GeoPoint> ring;
  for (auto const& p : poly.outer()) ring.push_back(proj.to_geo({p.x(), p.y()}));
  return ring;
}

// Single-polygon buffer around a centerline (flat ends, mitred joins).
inline Polygon buffer_line(Line const& line, double half_width) {
  namespace sb = bg::strategy::buffer;
  MultiPolygon out;
  bg::buffer(line, out, sb::distance_symmetric<double>(half_width), sb::side_straight(),
             sb::join_miter(), sb::end_flat(), sb::point_circle(32));
  if (out.empty()) return {};
  // Self-overlapping centerlines can yield several pieces; keep the largest.
  std::size_t best = 0;
  for (std::size_t i = 1; i < out.size(); ++i) {
    if (bg::area(out[i]) > bg::area(out[best])) best = i;
  }
  return out[best];
}

inline Polygon disc(Point const& center, double radius, int segments = 32) {
  namespace sb = bg::strategy::buffer;
  MultiPolygon out;
  bg::buffer(center, out, sb::distance_symmetric<double>(radius), sb::side_straight(),
             sb::join_round(), sb::end_round(), sb::point_circle(segments));
  return out.empty() ? Polygon{} : out.front();
}

struct Projection {
  Point foot;
  double distance = 0.0;
  double arc_length = 0.0;  // along the line up to the foot
};

// Least-squares (perpendicular) projection of a point onto a polyline.
inline Projection project_onto(Line const& line, Point const& p) {
  Projection best;
  best.distance = std::numeric_limits<double>::infinity();
  double travelled = 0.0;
  if (line.size() == 1) {
    return {line.front(), bg::distance(line.front(), p), 0.0};
  }
  for (std::size_t i = 1; i < line.size(); ++i) {
    auto const& a = line[i - 1];
    auto const& b = line[i];
    double const dx = b.x() - a.x();
    double const dy = b.y() - a.y();
    double const len2 = dx * dx + dy * dy;
    double t = 0.0;
    if (len2 > 0.0) {
      t = ((p.x() - a.x()) * dx + (p.y() - a.y()) * dy) / len2;
      t = std::clamp(t, 0.0, 1.0);
    }
    Point const foot{a.x() + t * dx, a.y() + t * dy};
    double const d = std::hypot(p.x() - foot.x(), p.y() - foot.y());
    double const seg_len = std::sqrt(len2);
    if (d < best.distance) {
      best = {foot, d, travelled + t * seg_len};
    }
    travelled += seg_len;
  }
  return best;
}

}  // namespace simra::planar
