#pragma once

#include <Eigen/Core>

#include <cstddef>
#include <string>
#include <vector>

namespace shuttlesim {

// Planar drive route: ordered waypoints plus cumulative arclength.
// Invariants (enforced by make_route): >= 2 waypoints, consecutive waypoints
// distinct, arclength strictly increasing with arclength[0] == 0.
struct Route {
  std::vector<Eigen::Vector2d> waypoints;
  std::vector<double> arclength;

  std::size_t size() const { return waypoints.size(); }
  double length() const { return arclength.empty() ? 0.0 : arclength.back(); }
};

Route make_route(std::vector<Eigen::Vector2d> waypoints);

// Closest point on the polyline by perpendicular projection onto segments
// (clamped to segment ends); ties resolved to the earliest segment.
struct RouteProjection {
  double s = 0.0;               // arclength of the projected point
  double distance = 0.0;        // unsigned distance to the route
  Eigen::Vector2d point{0, 0};  // the projected point itself
  std::size_t segment = 0;      // index of the segment containing it
};
RouteProjection project_onto_route(const Route& route, const Eigen::Vector2d& position);

// Point at arclength s, linearly interpolated; s clamped to [0, length].
Eigen::Vector2d point_at_arclength(const Route& route, double s);

// Pure pursuit goal: route point at (projected arclength + lookahead),
// clamped to the final waypoint past the route end.
Eigen::Vector2d find_goal_point(const Route& route, const Eigen::Vector2d& position,
                                double lookahead);

// Signed perpendicular distance to the nearest route segment, positive when
// the position lies left of the local route direction. Past the route end the
// magnitude is the distance to the final waypoint.
double cross_track_error(const Route& route, const Eigen::Vector2d& position);

// CSV rows "x,y" in drive order, no header.
Route route_from_csv(const std::string& csv_text);
std::string route_to_csv(const Route& route);
Route load_route(const std::string& path);
void save_route(const Route& route, const std::string& path);

}  // namespace shuttlesim
