#include <boost/property_tree/ptree.hpp>
#include <boost/property_tree/xml_parser.hpp>
#include <map>
#include <set>
#include <sstream>

#include "simra/error.hpp"
#include "simra/mapgraph.hpp"

namespace simra {

namespace {

// Highway classes open to bicycles unless tagged otherwise.
bool cyclable(std::map<std::string, std::string> const& tags) {
  static const std::set<std::string> kAllowed = {
      "primary",     "primary_link",  "secondary",   "secondary_link", "tertiary",
      "tertiary_link", "unclassified", "residential", "living_street",  "service",
      "cycleway",    "track",         "path",        "road",           "trunk",
      "trunk_link"};
  auto const bicycle = tags.find("bicycle");
  if (bicycle != tags.end()) {
    if (bicycle->second == "no") return false;
    if (bicycle->second == "yes" || bicycle->second == "designated") return tags.contains("highway");
  }
  auto const highway = tags.find("highway");
  if (highway == tags.end() || !kAllowed.contains(highway->second)) return false;
  auto const motorroad = tags.find("motorroad");
  return motorroad == tags.end() || motorroad->second != "yes";
}

}  // namespace

MapExtract extract_from_osm_xml(std::string const& xml) {
  namespace pt = boost::property_tree;
  pt::ptree tree;
  try {
    std::istringstream in(xml);
    pt::read_xml(in, tree);
  } catch (pt::xml_parser_error const& e) {
    fail(ErrorKind::Format, std::string("OSM XML: ") + e.what());
  }
  auto const osm = tree.get_child_optional("osm");
  if (!osm) fail(ErrorKind::Format, "OSM XML: missing <osm> root");

  std::map<std::string, GeoPoint> node_pos;
  struct RawWay {
    std::string id;
    std::vector<std::string> refs;
  };
  std::vector<RawWay> ways;
  for (auto const& [name, child] : *osm) {
    if (name == "node") {
      auto const id = child.get<std::string>("<xmlattr>.id");
      node_pos[id] = {child.get<double>("<xmlattr>.lat"), child.get<double>("<xmlattr>.lon")};
    } else if (name == "way") {
      RawWay way{child.get<std::string>("<xmlattr>.id"), {}};
      std::map<std::string, std::string> tags;
      for (auto const& [tag_name, item] : child) {
        if (tag_name == "nd") {
          way.refs.push_back(item.get<std::string>("<xmlattr>.ref"));
        } else if (tag_name == "tag") {
          tags[item.get<std::string>("<xmlattr>.k")] = item.get<std::string>("<xmlattr>.v");
        }
      }
      if (cyclable(tags) && way.refs.size() >= 2) ways.push_back(std::move(way));
    }
  }

  // Arms per OSM node, and how many way vertices sit on it.
  std::map<std::string, int> arms;
  std::map<std::string, int> occurrences;
  for (auto const& way : ways) {
    for (std::size_t k = 0; k < way.refs.size(); ++k) {
      arms[way.refs[k]] += (k == 0 || k + 1 == way.refs.size()) ? 1 : 2;
      ++occurrences[way.refs[k]];
    }
  }

  MapExtract extract;
  for (auto const& [ref, count] : arms) {
    if (occurrences.at(ref) < 2) continue;
    auto const pos = node_pos.find(ref);
    if (pos == node_pos.end()) fail(ErrorKind::Format, "OSM XML: way references missing node " + ref);
    extract.junctions.push_back({"n" + ref, pos->second, count});
  }
  auto is_junction = [&](std::string const& ref) { return occurrences.at(ref) >= 2; };
  for (auto const& way : ways) {
    ExtractWay out;
    out.id = "w" + way.id;
    for (auto const& ref : way.refs) {
      auto const pos = node_pos.find(ref);
      if (pos == node_pos.end()) fail(ErrorKind::Format, "OSM XML: way references missing node " + ref);
      out.coords.push_back(pos->second);
    }
    if (is_junction(way.refs.front())) out.from_ref = "n" + way.refs.front();
    if (is_junction(way.refs.back())) out.to_ref = "n" + way.refs.back();
    extract.ways.push_back(std::move(out));
  }
  return extract;
}

}  // namespace simra
