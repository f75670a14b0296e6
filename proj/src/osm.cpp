#include "shuttlesim/osm.hpp"

#include "shuttlesim/errors.hpp"
#include "shuttlesim/io_util.hpp"

#include <boost/property_tree/ptree.hpp>
#include <boost/property_tree/xml_parser.hpp>

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <numbers>
#include <sstream>
#include <stdexcept>

namespace shuttlesim::osm {

namespace {

constexpr double kEarthRadius = 6371000.0;  // m
constexpr double kDegToRad = std::numbers::pi / 180.0;

void check_lat_lon(std::int64_t node_id, double lat, double lon) {
  if (!(lat >= -90.0 && lat <= 90.0) || !(lon >= -180.0 && lon <= 180.0)) {
    throw ParseError("osm: node " + std::to_string(node_id) + " has lat/lon out of range", 0);
  }
}

}  // namespace

bool Way::has_tag(const std::string& key, const std::string& value) const {
  for (const auto& [k, v] : tags) {
    if (k == key && v == value) return true;
  }
  return false;
}

std::optional<std::string> Way::tag(const std::string& key) const {
  for (const auto& [k, v] : tags) {
    if (k == key) return v;
  }
  return std::nullopt;
}

OsmDocument parse_osm(const std::string& xml_text) {
  namespace pt = boost::property_tree;
  pt::ptree tree;
  try {
    std::istringstream in(xml_text);
    pt::read_xml(in, tree);
  } catch (const pt::xml_parser_error& e) {
    throw ParseError(std::string("osm: ") + e.message(), static_cast<long>(e.line()));
  }

  OsmDocument doc;
  const auto osm_root = tree.get_child_optional("osm");
  if (!osm_root) {
    throw ParseError("osm: missing <osm> root element", 0);
  }

  try {
    for (const auto& [name, child] : *osm_root) {
      if (name == "node") {
        const auto id = child.get<std::int64_t>("<xmlattr>.id");
        Node node;
        node.lat = child.get<double>("<xmlattr>.lat");
        node.lon = child.get<double>("<xmlattr>.lon");
        check_lat_lon(id, node.lat, node.lon);
        doc.nodes[id] = node;
      } else if (name == "way") {
        Way way;
        way.id = child.get<std::int64_t>("<xmlattr>.id");
        for (const auto& [cname, cchild] : child) {
          if (cname == "nd") {
            way.refs.push_back(cchild.get<std::int64_t>("<xmlattr>.ref"));
          } else if (cname == "tag") {
            way.tags.emplace_back(cchild.get<std::string>("<xmlattr>.k"),
                                  cchild.get<std::string>("<xmlattr>.v"));
          }
        }
        doc.ways.push_back(std::move(way));
      }
    }
  } catch (const pt::ptree_error& e) {
    throw ParseError(std::string("osm: ") + e.what(), 0);
  }

  for (const Way& way : doc.ways) {
    for (std::int64_t ref : way.refs) {
      if (!doc.nodes.count(ref)) {
        throw ReferenceError("osm: way " + std::to_string(way.id) +
                                 " references missing node " + std::to_string(ref),
                             way.id, ref);
      }
    }
  }
  return doc;
}

OsmDocument load_osm(const std::string& path) { return parse_osm(read_text_file(path)); }

Eigen::Vector2d latlon_to_enu(double lat, double lon, const EnuOrigin& origin) {
  const double x = kEarthRadius * std::cos(origin.lat0 * kDegToRad) *
                   ((lon - origin.lon0) * kDegToRad);
  const double y = kEarthRadius * ((lat - origin.lat0) * kDegToRad);
  return {x, y};
}

WaySelector WaySelector::parse(const std::string& text) {
  const std::size_t eq = text.find('=');
  if (eq == std::string::npos || eq == 0 || eq + 1 >= text.size()) {
    throw std::invalid_argument("way selector must be 'id=<number>' or '<key>=<value>'");
  }
  const std::string key = text.substr(0, eq);
  const std::string value = text.substr(eq + 1);
  WaySelector sel;
  if (key == "id") {
    try {
      sel.id = std::stoll(value);
    } catch (const std::exception&) {
      throw std::invalid_argument("way selector id is not a number: '" + value + "'");
    }
  } else {
    sel.tag = {key, value};
  }
  return sel;
}

namespace {

std::vector<const Way*> select_ways(const OsmDocument& doc, const WaySelector& selector) {
  std::vector<const Way*> out;
  for (const Way& way : doc.ways) {
    if (selector.id && way.id == *selector.id) out.push_back(&way);
    if (selector.tag && way.has_tag(selector.tag->first, selector.tag->second)) {
      out.push_back(&way);
    }
  }
  return out;
}

// Joins the ways into one node chain, reversing individual ways as needed.
// Ways are consumed in document order; left-over ways mean a broken chain.
std::deque<std::int64_t> chain_ways(const std::vector<const Way*>& ways) {
  std::deque<std::int64_t> chain(ways[0]->refs.begin(), ways[0]->refs.end());
  std::vector<const Way*> remaining(ways.begin() + 1, ways.end());

  while (!remaining.empty()) {
    bool joined = false;
    for (auto it = remaining.begin(); it != remaining.end(); ++it) {
      const std::vector<std::int64_t>& refs = (*it)->refs;
      if (refs.front() == chain.back()) {
        chain.insert(chain.end(), refs.begin() + 1, refs.end());
      } else if (refs.back() == chain.back()) {
        chain.insert(chain.end(), refs.rbegin() + 1, refs.rend());
      } else if (refs.back() == chain.front()) {
        chain.insert(chain.begin(), refs.begin(), refs.end() - 1);
      } else if (refs.front() == chain.front()) {
        chain.insert(chain.begin(), refs.rbegin(), refs.rend() - 1);
      } else {
        continue;
      }
      remaining.erase(it);
      joined = true;
      break;
    }
    if (!joined) {
      std::string ids;
      for (const Way* w : remaining) {
        if (!ids.empty()) ids += ", ";
        ids += std::to_string(w->id);
      }
      throw TopologyError("osm: ways not chainable into one polyline; disconnected: " + ids);
    }
  }
  return chain;
}

}  // namespace

Route extract_route(const OsmDocument& doc, const WaySelector& selector, const EnuOrigin& origin,
                    double spacing) {
  if (!(spacing > 0.0)) throw std::invalid_argument("extract_route: spacing must be > 0");
  if (!selector.id && !selector.tag) {
    throw std::invalid_argument("extract_route: empty way selector");
  }

  const std::vector<const Way*> ways = select_ways(doc, selector);
  if (ways.empty()) throw NotFoundError("osm: no way matches the selector");

  const std::deque<std::int64_t> chain = chain_ways(ways);

  std::vector<Eigen::Vector2d> polyline;
  polyline.reserve(chain.size());
  for (std::int64_t id : chain) {
    const Node& node = doc.nodes.at(id);
    const Eigen::Vector2d p = latlon_to_enu(node.lat, node.lon, origin);
    if (!polyline.empty() && (p - polyline.back()).norm() == 0.0) continue;
    polyline.push_back(p);
  }
  if (polyline.size() < 2) {
    throw TopologyError("osm: selected ways collapse to fewer than 2 distinct points");
  }

  // Uniform arclength resampling by linear interpolation: samples at
  // 0, spacing, 2*spacing, ... plus the final endpoint if it is not already
  // (within 1e-9) the last sample.
  std::vector<double> s(polyline.size(), 0.0);
  for (std::size_t i = 1; i < polyline.size(); ++i) {
    s[i] = s[i - 1] + (polyline[i] - polyline[i - 1]).norm();
  }
  const double total = s.back();

  std::vector<Eigen::Vector2d> waypoints;
  std::size_t seg = 0;
  for (std::size_t k = 0;; ++k) {
    const double target = k * spacing;  // multiply, don't accumulate: no drift
    if (target > total) break;
    while (seg + 1 < s.size() && s[seg + 1] < target) ++seg;
    const double seg_len = s[seg + 1] - s[seg];
    const double t = std::clamp((target - s[seg]) / seg_len, 0.0, 1.0);
    waypoints.push_back(polyline[seg] + t * (polyline[seg + 1] - polyline[seg]));
  }
  if (total - (waypoints.size() - 1) * spacing > 1e-9) {
    waypoints.push_back(polyline.back());
  }
  return make_route(std::move(waypoints));
}

Scene buildings_to_scene(const OsmDocument& doc, const EnuOrigin& origin, double height) {
  Scene scene;
  scene.ground_z = origin.z0;
  scene.has_ground = true;
  for (const Way& way : doc.ways) {
    if (!way.tag("building")) continue;
    Eigen::Vector2d lo(std::numeric_limits<double>::infinity(),
                       std::numeric_limits<double>::infinity());
    Eigen::Vector2d hi = -lo;
    for (std::int64_t ref : way.refs) {
      const Node& node = doc.nodes.at(ref);
      const Eigen::Vector2d p = latlon_to_enu(node.lat, node.lon, origin);
      lo = lo.cwiseMin(p);
      hi = hi.cwiseMax(p);
    }
    if (!(hi.x() > lo.x() && hi.y() > lo.y())) continue;  // degenerate footprint
    Box box;
    box.min = Point3(lo.x(), lo.y(), origin.z0);
    box.max = Point3(hi.x(), hi.y(), origin.z0 + height);
    scene.boxes.push_back(box);
  }
  return scene;
}

}  // namespace shuttlesim::osm
