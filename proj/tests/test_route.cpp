#include "shuttlesim/route.hpp"
#include "shuttlesim/vehicle.hpp"

#include "shuttlesim/errors.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>
#include <vector>

using namespace shuttlesim;

namespace {

Route l_route() {
  return make_route({{0.0, 0.0}, {10.0, 0.0}, {10.0, 10.0}});
}

Route straight_route() {
  return make_route({{0.0, 0.0}, {20.0, 0.0}});
}

}  // namespace

TEST_CASE("make_route validates input and accumulates arclength") {
  CHECK_THROWS_AS(make_route({}), std::invalid_argument);
  CHECK_THROWS_AS(make_route({{1.0, 2.0}}), std::invalid_argument);
  CHECK_THROWS_AS(make_route({{0.0, 0.0}, {0.0, 0.0}, {1.0, 0.0}}), std::invalid_argument);

  const Route r = make_route({{0.0, 0.0}, {1.0, 0.0}, {2.0, 1.0}});
  REQUIRE(r.size() == 3);
  CHECK(r.arclength[0] == 0.0);
  CHECK(r.arclength[1] == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(r.arclength[2] == doctest::Approx(1.0 + std::numbers::sqrt2).epsilon(1e-15));
  CHECK(r.length() == doctest::Approx(1.0 + std::numbers::sqrt2).epsilon(1e-15));
}

TEST_CASE("project_onto_route finds the perpendicular foot") {
  const Route r = l_route();

  RouteProjection p = project_onto_route(r, {3.0, 4.0});
  CHECK(p.point.x() == doctest::Approx(3.0).epsilon(1e-15));
  CHECK(p.point.y() == doctest::Approx(0.0).epsilon(1e-15));
  CHECK(p.s == doctest::Approx(3.0).epsilon(1e-15));
  CHECK(p.distance == doctest::Approx(4.0).epsilon(1e-15));
  CHECK(p.segment == 0);

  p = project_onto_route(r, {14.0, 3.0});
  CHECK(p.point.x() == doctest::Approx(10.0).epsilon(1e-15));
  CHECK(p.point.y() == doctest::Approx(3.0).epsilon(1e-15));
  CHECK(p.s == doctest::Approx(13.0).epsilon(1e-15));
  CHECK(p.segment == 1);
}

TEST_CASE("project_onto_route clamps to ends and breaks corner ties to the earlier segment") {
  const Route r = l_route();

  RouteProjection p = project_onto_route(r, {-5.0, 1.0});
  CHECK(p.s == 0.0);
  CHECK(p.point.x() == 0.0);
  CHECK(p.distance == doctest::Approx(std::sqrt(26.0)).epsilon(1e-15));

  // equidistant from both segments only via the shared corner (10, 0)
  p = project_onto_route(r, {12.0, -2.0});
  CHECK(p.point.x() == doctest::Approx(10.0).epsilon(1e-15));
  CHECK(p.point.y() == doctest::Approx(0.0).epsilon(1e-15));
  CHECK(p.s == doctest::Approx(10.0).epsilon(1e-15));
  CHECK(p.segment == 0);
}

TEST_CASE("point_at_arclength interpolates and clamps") {
  const Route r = l_route();
  CHECK(point_at_arclength(r, -3.0) == r.waypoints.front());
  CHECK(point_at_arclength(r, 0.0) == r.waypoints.front());
  CHECK(point_at_arclength(r, 50.0) == r.waypoints.back());

  const Eigen::Vector2d mid = point_at_arclength(r, 12.0);
  CHECK(mid.x() == doctest::Approx(10.0).epsilon(1e-15));
  CHECK(mid.y() == doctest::Approx(2.0).epsilon(1e-15));

  const Eigen::Vector2d corner = point_at_arclength(r, 10.0);
  CHECK(corner.x() == doctest::Approx(10.0).epsilon(1e-15));
  CHECK(corner.y() == doctest::Approx(0.0).epsilon(1e-15));
}

TEST_CASE("find_goal_point walks the lookahead along the route") {
  const Route r = straight_route();
  CHECK_THROWS_AS(find_goal_point(r, {0.0, 0.0}, 0.0), std::invalid_argument);

  const Eigen::Vector2d goal = find_goal_point(r, {2.0, 1.0}, 6.0);
  CHECK(goal.x() == doctest::Approx(8.0).epsilon(1e-15));
  CHECK(goal.y() == doctest::Approx(0.0).epsilon(1e-15));

  // goal clamps to the final waypoint near the route end
  CHECK(find_goal_point(r, {18.0, 0.0}, 6.0) == r.waypoints.back());

  // lookahead spans the corner of the L: goal lies up the second leg
  const Eigen::Vector2d around = find_goal_point(l_route(), {7.0, 0.0}, 6.0);
  CHECK(around.x() == doctest::Approx(10.0).epsilon(1e-15));
  CHECK(around.y() == doctest::Approx(3.0).epsilon(1e-15));
}

TEST_CASE("cross_track_error is signed positive-left") {
  const Route r = straight_route();
  CHECK(cross_track_error(r, {5.0, 2.0}) == doctest::Approx(2.0).epsilon(1e-15));
  CHECK(cross_track_error(r, {5.0, -3.0}) == doctest::Approx(-3.0).epsilon(1e-15));
  CHECK(cross_track_error(r, {5.0, 0.0}) == 0.0);

  // reversing the drive direction flips the sign
  const Route rev = make_route({{20.0, 0.0}, {0.0, 0.0}});
  CHECK(cross_track_error(rev, {5.0, 2.0}) == doctest::Approx(-2.0).epsilon(1e-15));
}

TEST_CASE("route csv round-trips exactly") {
  const Route r = make_route({{0.0, 0.0}, {10.125, -3.5}, {20.0625, 7.25}, {1e-3, 42.0}});
  const std::string csv = route_to_csv(r);
  const Route back = route_from_csv(csv);
  REQUIRE(back.size() == r.size());
  for (std::size_t i = 0; i < r.size(); ++i) {
    CHECK(back.waypoints[i].x() == r.waypoints[i].x());
    CHECK(back.waypoints[i].y() == r.waypoints[i].y());
  }
  CHECK(route_to_csv(back) == csv);
}

TEST_CASE("route csv accepts CRLF and blank lines, rejects junk") {
  const Route r = route_from_csv("0,0\r\n\r\n10,0\r\n");
  CHECK(r.size() == 2);
  CHECK(r.length() == doctest::Approx(10.0).epsilon(1e-15));

  CHECK_THROWS_AS(route_from_csv("1,2,3\n4,5\n"), IoError);
  CHECK_THROWS_AS(route_from_csv("1\n2\n"), IoError);
  CHECK_THROWS_AS(route_from_csv("0,zero\n1,1\n"), IoError);
  CHECK_THROWS_AS(route_from_csv("0,0\n"), std::invalid_argument);  // one waypoint
}

TEST_CASE("vehicle params validate") {
  VehicleParams p;
  CHECK_NOTHROW(p.validate());
  p.wheelbase = 0.0;
  CHECK_THROWS_AS(p.validate(), std::invalid_argument);
  p = VehicleParams{};
  p.max_steer = std::numbers::pi / 2;
  CHECK_THROWS_AS(p.validate(), std::invalid_argument);
  p = VehicleParams{};
  p.cruise_speed = 12.0;  // above the 25 mph service cap
  CHECK_THROWS_AS(p.validate(), std::invalid_argument);
  p = VehicleParams{};
  p.steer_rate_limit = 0.0;
  CHECK_THROWS_AS(p.validate(), std::invalid_argument);
}

TEST_CASE("pure pursuit steering law") {
  VehicleParams params;
  params.wheelbase = 3.0;

  CHECK(pure_pursuit_steer(0.0, params, 6.0) == 0.0);

  // e = pi/6, L = 3, lookahead = 6: atan(2 * 3 * sin(pi/6) / 6) = atan(0.5)
  CHECK(pure_pursuit_steer(std::numbers::pi / 6, params, 6.0) ==
        doctest::Approx(std::atan(0.5)).epsilon(1e-15));
  CHECK(std::atan(0.5) == doctest::Approx(0.46364760900080615).epsilon(1e-15));

  // odd symmetry
  std::mt19937_64 rng(31415);
  std::uniform_real_distribution<double> angle(-std::numbers::pi, std::numbers::pi);
  for (int i = 0; i < 1000; ++i) {
    const double e = angle(rng);
    CHECK(pure_pursuit_steer(e, params, 6.0) ==
          doctest::Approx(-pure_pursuit_steer(-e, params, 6.0)).epsilon(1e-12));
  }

  // saturation at max_steer
  params.max_steer = 0.5;
  CHECK(pure_pursuit_steer(std::numbers::pi / 2, params, 0.5) == 0.5);
  CHECK(pure_pursuit_steer(-std::numbers::pi / 2, params, 0.5) == -0.5);

  CHECK_THROWS_AS(pure_pursuit_steer(0.1, params, 0.0), std::invalid_argument);
}

TEST_CASE("heading error to goal") {
  VehicleState s;
  CHECK(heading_error_to_goal(s, {0.0, 5.0}) == doctest::Approx(std::numbers::pi / 2));
  CHECK(heading_error_to_goal(s, {-5.0, 0.0}) == doctest::Approx(std::numbers::pi));
  CHECK(heading_error_to_goal(s, {0.0, -5.0}) == doctest::Approx(-std::numbers::pi / 2));
  s.yaw = std::numbers::pi / 4;
  CHECK(heading_error_to_goal(s, {1.0, 1.0}) == doctest::Approx(0.0));
  // wraps into (-pi, pi]
  s.yaw = 3.0;
  VehicleState t = s;
  t.x = 0.0;
  CHECK(heading_error_to_goal(t, {1.0, -0.5}) <= std::numbers::pi);
  CHECK(heading_error_to_goal(t, {1.0, -0.5}) > -std::numbers::pi);
}

TEST_CASE("step_bicycle validates dt and clamps steer") {
  const VehicleParams params;
  VehicleState s;
  s.speed = 10.0;
  CHECK_THROWS_AS(step_bicycle(s, 0.0, params, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(step_bicycle(s, 0.0, params, -0.01), std::invalid_argument);
  CHECK_THROWS_AS(step_bicycle(s, 0.0, params, 0.2), std::invalid_argument);

  // steer beyond max_steer behaves exactly like max_steer
  const VehicleState a = step_bicycle(s, 5.0, params, 0.01);
  const VehicleState b = step_bicycle(s, params.max_steer, params, 0.01);
  CHECK(a.x == b.x);
  CHECK(a.y == b.y);
  CHECK(a.yaw == b.yaw);
}

TEST_CASE("step_bicycle integrates straight motion exactly") {
  const VehicleParams params;
  VehicleState s;
  s.speed = 10.0;
  VehicleState n = step_bicycle(s, 0.0, params, 0.01);
  CHECK(n.x == doctest::Approx(0.1).epsilon(1e-15));
  CHECK(n.y == 0.0);
  CHECK(n.yaw == 0.0);
  CHECK(n.speed == 10.0);

  s.yaw = std::numbers::pi / 2;
  n = step_bicycle(s, 0.0, params, 0.01);
  CHECK(n.x == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(n.y == doctest::Approx(0.1).epsilon(1e-15));
}

TEST_CASE("constant steer traces a circle of radius L / tan(delta)") {
  VehicleParams params;
  params.wheelbase = 3.0;
  const double delta = 0.2;
  const double radius = params.wheelbase / std::tan(delta);  // 14.8033...
  const double dt = 1e-3;

  VehicleState s;
  s.speed = 5.0;
  const double period = 2.0 * std::numbers::pi * radius / s.speed;
  const int steps = static_cast<int>(std::lround(period / dt));

  // exact center of the continuous-time circle for a left turn from the origin
  const Eigen::Vector2d center(0.0, radius);
  double max_radius_error = 0.0;
  for (int i = 0; i < steps; ++i) {
    s = step_bicycle(s, delta, params, dt);
    max_radius_error =
        std::max(max_radius_error, std::abs((s.position() - center).norm() - radius));
  }
  CHECK(max_radius_error / radius < 0.01);
  // back near the start after one period
  CHECK((s.position() - Eigen::Vector2d::Zero()).norm() < 0.01 * radius);
}
