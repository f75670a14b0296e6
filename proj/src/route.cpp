#include "shuttlesim/route.hpp"

#include "shuttlesim/errors.hpp"
#include "shuttlesim/io_util.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace shuttlesim {

Route make_route(std::vector<Eigen::Vector2d> waypoints) {
  if (waypoints.size() < 2) {
    throw std::invalid_argument("route: need at least 2 waypoints");
  }
  Route route;
  route.arclength.reserve(waypoints.size());
  route.arclength.push_back(0.0);
  for (std::size_t i = 1; i < waypoints.size(); ++i) {
    const double d = (waypoints[i] - waypoints[i - 1]).norm();
    if (!(d > 0.0)) {
      throw std::invalid_argument("route: waypoints " + std::to_string(i - 1) + " and " +
                                  std::to_string(i) + " coincide");
    }
    route.arclength.push_back(route.arclength.back() + d);
  }
  route.waypoints = std::move(waypoints);
  return route;
}

RouteProjection project_onto_route(const Route& route, const Eigen::Vector2d& position) {
  if (route.size() < 2) {
    throw std::invalid_argument("route: empty or degenerate route");
  }
  RouteProjection best;
  double best_d2 = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i + 1 < route.size(); ++i) {
    const Eigen::Vector2d& a = route.waypoints[i];
    const Eigen::Vector2d seg = route.waypoints[i + 1] - a;
    const double seg_len2 = seg.squaredNorm();
    const double t = std::clamp((position - a).dot(seg) / seg_len2, 0.0, 1.0);
    const Eigen::Vector2d p = a + t * seg;
    const double d2 = (position - p).squaredNorm();
    if (d2 < best_d2) {
      best_d2 = d2;
      best.point = p;
      best.segment = i;
      best.s = route.arclength[i] + t * std::sqrt(seg_len2);
    }
  }
  best.distance = std::sqrt(best_d2);
  return best;
}

Eigen::Vector2d point_at_arclength(const Route& route, double s) {
  if (route.size() < 2) {
    throw std::invalid_argument("route: empty or degenerate route");
  }
  if (s <= 0.0) return route.waypoints.front();
  if (s >= route.length()) return route.waypoints.back();
  // First waypoint with arclength > s; its predecessor starts the segment.
  const auto it = std::upper_bound(route.arclength.begin(), route.arclength.end(), s);
  const std::size_t i = static_cast<std::size_t>(it - route.arclength.begin()) - 1;
  const double t = (s - route.arclength[i]) / (route.arclength[i + 1] - route.arclength[i]);
  return route.waypoints[i] + t * (route.waypoints[i + 1] - route.waypoints[i]);
}

Eigen::Vector2d find_goal_point(const Route& route, const Eigen::Vector2d& position,
                                double lookahead) {
  if (!(lookahead > 0.0)) {
    throw std::invalid_argument("find_goal_point: lookahead must be > 0");
  }
  const RouteProjection proj = project_onto_route(route, position);
  const double s_goal = proj.s + lookahead;
  if (s_goal >= route.length()) return route.waypoints.back();
  return point_at_arclength(route, s_goal);
}

double cross_track_error(const Route& route, const Eigen::Vector2d& position) {
  const RouteProjection proj = project_onto_route(route, position);
  const std::size_t i = proj.segment;
  const Eigen::Vector2d dir = route.waypoints[i + 1] - route.waypoints[i];
  const Eigen::Vector2d offset = position - proj.point;
  const double side = dir.x() * offset.y() - dir.y() * offset.x();
  return side >= 0.0 ? proj.distance : -proj.distance;
}

Route route_from_csv(const std::string& csv_text) {
  std::vector<Eigen::Vector2d> waypoints;
  std::size_t line_no = 0;
  for (const std::string& raw : split(csv_text, '\n')) {
    ++line_no;
    std::string line = raw;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto fields = split(line, ',');
    if (fields.size() != 2) {
      throw IoError("route csv line " + std::to_string(line_no) + ": expected 'x,y'");
    }
    try {
      waypoints.emplace_back(parse_double(fields[0]), parse_double(fields[1]));
    } catch (const std::invalid_argument& e) {
      throw IoError("route csv line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return make_route(std::move(waypoints));
}

std::string route_to_csv(const Route& route) {
  std::string out;
  for (const Eigen::Vector2d& w : route.waypoints) {
    out += format_double(w.x());
    out += ',';
    out += format_double(w.y());
    out += '\n';
  }
  return out;
}

Route load_route(const std::string& path) { return route_from_csv(read_text_file(path)); }

void save_route(const Route& route, const std::string& path) {
  write_text_file(path, route_to_csv(route));
}

}  // namespace shuttlesim
