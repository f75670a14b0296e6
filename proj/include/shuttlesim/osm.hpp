#pragma once

#include "shuttlesim/route.hpp"
#include "shuttlesim/scene.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace shuttlesim::osm {

struct Node {
  double lat = 0.0;  // degrees
  double lon = 0.0;  // degrees
};

struct Way {
  std::int64_t id = 0;
  std::vector<std::int64_t> refs;  // ordered node ids
  std::vector<std::pair<std::string, std::string>> tags;

  bool has_tag(const std::string& key, const std::string& value) const;
  std::optional<std::string> tag(const std::string& key) const;
};

struct OsmDocument {
  std::map<std::int64_t, Node> nodes;  // ordered: deterministic iteration
  std::vector<Way> ways;
};

struct EnuOrigin {
  double lat0 = 0.0;  // degrees
  double lon0 = 0.0;  // degrees
  double z0 = 0.0;    // meters
};

// Parses the OSM v0.6 subset: <node id lat lon>, <way id> with <nd ref/> and
// <tag k v/> children. Malformed XML raises ParseError with a line number;
// a way referencing an unparsed node raises ReferenceError naming both ids.
OsmDocument parse_osm(const std::string& xml_text);
OsmDocument load_osm(const std::string& path);

// Equirectangular projection around the origin:
// x = R cos(lat0) dlon, y = R dlat (angles in radians, R = 6,371,000 m).
Eigen::Vector2d latlon_to_enu(double lat, double lon, const EnuOrigin& origin);

// Way filter: by id, or by exact tag key=value match. Exactly one of the two
// must be set.
struct WaySelector {
  std::optional<std::int64_t> id;
  std::optional<std::pair<std::string, std::string>> tag;

  // "id=42" or "key=value"
  static WaySelector parse(const std::string& text);
};

// Chains the selected ways end-to-end (reversing where needed), projects the
// node chain, and resamples it at uniform arclength spacing. No selected way
// raises NotFoundError; ways that cannot be chained into one polyline raise
// TopologyError listing the leftover way ids.
Route extract_route(const OsmDocument& doc, const WaySelector& selector, const EnuOrigin& origin,
                    double spacing);

// Optional convenience: ways tagged building=* become axis-aligned boxes of
// the given height from the footprint's bounding rectangle.
Scene buildings_to_scene(const OsmDocument& doc, const EnuOrigin& origin, double height = 6.0);

}  // namespace shuttlesim::osm
