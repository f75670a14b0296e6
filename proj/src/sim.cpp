#include "shuttlesim/sim.hpp"

#include "shuttlesim/errors.hpp"
#include "shuttlesim/io_util.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <limits>
#include <numbers>
#include <stdexcept>

namespace shuttlesim {

namespace {

constexpr double kRouteCompleteRadius = 1.0;     // m to the final waypoint
constexpr double kRouteCompleteFraction = 0.8;   // of route length traveled
constexpr int kMaxConsecutiveDegraded = 10;

Pose6 planar_pose(const VehicleState& s) { return Pose6(s.x, s.y, 0.0, 0.0, 0.0, s.yaw); }

double initial_heading(const Route& route) {
  const Eigen::Vector2d d = route.waypoints[1] - route.waypoints[0];
  return std::atan2(d.y(), d.x());
}

}  // namespace

const char* to_string(TerminalStatus status) {
  switch (status) {
    case TerminalStatus::RouteComplete: return "route-complete";
    case TerminalStatus::Timeout: return "timeout";
    case TerminalStatus::LocalizationLost: return "localization-lost";
  }
  return "unknown";
}

void ScenarioConfig::validate() const {
  if (!(dt > 0.0 && dt <= 0.1)) {
    throw std::invalid_argument("scenario: dt must be in (0, 0.1]");
  }
  if (!(max_duration > 0.0)) {
    throw std::invalid_argument("scenario: max_duration must be > 0");
  }
  if (!(lookahead > 0.0)) {
    throw std::invalid_argument("scenario: lookahead must be > 0");
  }
  vehicle.validate();
  lidar.validate();
  scene.validate();
  if (route.size() < 2) {
    throw std::invalid_argument("scenario: route needs at least 2 waypoints");
  }
  if (mode == LocalizationMode::Ndt && (!map || map->empty())) {
    throw std::invalid_argument("scenario: ndt mode requires a non-empty map grid");
  }
}

SimLog run_scenario(const ScenarioConfig& cfg) {
  cfg.validate();

  SimLog log;
  log.status = TerminalStatus::Timeout;

  VehicleState truth;
  truth.x = cfg.route.waypoints[0].x();
  truth.y = cfg.route.waypoints[0].y();
  truth.yaw = initial_heading(cfg.route);
  truth.speed = cfg.vehicle.cruise_speed;

  LocalizerConfig loc_cfg;
  loc_cfg.lidar_extrinsic = cfg.lidar.mount;
  loc_cfg.gps_anchor = cfg.gps_anchor;
  loc_cfg.registration = cfg.registration;

  LocalizationState loc_state;
  loc_state.prev_pose = planar_pose(truth);  // start pose is known

  const std::size_t max_steps =
      static_cast<std::size_t>(std::ceil(cfg.max_duration / cfg.dt));
  int consecutive_degraded = 0;
  double distance = 0.0;
  double prev_steer = 0.0;

  for (std::size_t k = 0; k < max_steps; ++k) {
    SimStep step;
    step.t = static_cast<double>(k) * cfg.dt;
    step.true_state = truth;

    Pose6 est;
    if (cfg.mode == LocalizationMode::Ndt) {
      const Pose6 sensor_pose = compose(planar_pose(truth), cfg.lidar.mount);
      const PointCloud scan = simulate_scan(cfg.scene, sensor_pose, cfg.lidar, cfg.seed + k);
      est = localize_scan(*cfg.map, scan, loc_state, loc_cfg, cfg.dt);
      step.ndt_score = loc_state.last_result.score;
      step.ndt_converged = loc_state.last_result.converged;
      step.degraded = loc_state.degraded;
      consecutive_degraded = loc_state.degraded ? consecutive_degraded + 1 : 0;
    } else {
      est = planar_pose(truth);
    }
    step.est_pose = est;

    // Control acts on the estimate only.
    VehicleState est_state;
    est_state.x = est.x;
    est_state.y = est.y;
    est_state.yaw = est.yaw;
    est_state.speed = truth.speed;
    step.goal = find_goal_point(cfg.route, est_state.position(), cfg.lookahead);
    double steer =
        pure_pursuit_steer(heading_error_to_goal(est_state, step.goal), cfg.vehicle, cfg.lookahead);
    if (std::isfinite(cfg.vehicle.steer_rate_limit) && k > 0) {
      const double max_delta = cfg.vehicle.steer_rate_limit * cfg.dt;
      steer = std::clamp(steer, prev_steer - max_delta, prev_steer + max_delta);
    }
    prev_steer = steer;
    step.steer = steer;
    step.cross_track = cross_track_error(cfg.route, truth.position());
    log.steps.push_back(step);

    if (consecutive_degraded >= kMaxConsecutiveDegraded) {
      log.status = TerminalStatus::LocalizationLost;
      break;
    }

    const VehicleState next = step_bicycle(truth, steer, cfg.vehicle, cfg.dt);
    distance += std::hypot(next.x - truth.x, next.y - truth.y);
    truth = next;

    if ((truth.position() - cfg.route.waypoints.back()).norm() < kRouteCompleteRadius &&
        distance >= kRouteCompleteFraction * cfg.route.length()) {
      log.status = TerminalStatus::RouteComplete;
      break;
    }
  }
  return log;
}

Metrics compute_metrics(const SimLog& log) {
  if (log.steps.empty()) throw std::invalid_argument("compute_metrics: empty log");

  Metrics m;
  m.steps = log.steps.size();
  m.status = log.status;

  double sum_sq = 0.0;
  double sum_loc = 0.0;
  for (std::size_t i = 0; i < log.steps.size(); ++i) {
    const SimStep& s = log.steps[i];
    m.max_cross_track = std::max(m.max_cross_track, std::abs(s.cross_track));
    sum_sq += s.cross_track * s.cross_track;
    sum_loc += std::hypot(s.est_pose.x - s.true_state.x, s.est_pose.y - s.true_state.y);
    if (i > 0) {
      m.distance_traveled += std::hypot(s.true_state.x - log.steps[i - 1].true_state.x,
                                        s.true_state.y - log.steps[i - 1].true_state.y);
    }
  }
  m.rms_cross_track = std::sqrt(sum_sq / static_cast<double>(log.steps.size()));
  m.mean_localization_error = sum_loc / static_cast<double>(log.steps.size());
  return m;
}

std::string log_to_csv(const SimLog& log) {
  std::string out =
      "t,true_x,true_y,true_yaw,est_x,est_y,est_yaw,steer,goal_x,goal_y,"
      "cross_track,ndt_score,ndt_converged,degraded\n";
  for (const SimStep& s : log.steps) {
    out += format_double(s.t);
    out += ',' + format_double(s.true_state.x) + ',' + format_double(s.true_state.y) + ',' +
           format_double(s.true_state.yaw);
    out += ',' + format_double(s.est_pose.x) + ',' + format_double(s.est_pose.y) + ',' +
           format_double(s.est_pose.yaw);
    out += ',' + format_double(s.steer);
    out += ',' + format_double(s.goal.x()) + ',' + format_double(s.goal.y());
    out += ',' + format_double(s.cross_track);
    out += ',' + format_double(s.ndt_score);
    out += s.ndt_converged ? ",1" : ",0";
    out += s.degraded ? ",1\n" : ",0\n";
  }
  return out;
}

SimLog log_from_csv(const std::string& csv_text) {
  SimLog log;
  std::size_t line_no = 0;
  for (const std::string& raw : split(csv_text, '\n')) {
    ++line_no;
    std::string line = raw;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line_no == 1) continue;  // header
    const auto fields = split(line, ',');
    if (fields.size() != 14) {
      throw IoError("trajectory csv line " + std::to_string(line_no) + ": expected 14 fields");
    }
    try {
      SimStep s;
      s.t = parse_double(fields[0]);
      s.true_state.x = parse_double(fields[1]);
      s.true_state.y = parse_double(fields[2]);
      s.true_state.yaw = parse_double(fields[3]);
      s.est_pose = Pose6(parse_double(fields[4]), parse_double(fields[5]), 0.0, 0.0, 0.0,
                         parse_double(fields[6]));
      s.steer = parse_double(fields[7]);
      s.goal = {parse_double(fields[8]), parse_double(fields[9])};
      s.cross_track = parse_double(fields[10]);
      s.ndt_score = parse_double(fields[11]);
      s.ndt_converged = parse_double(fields[12]) != 0.0;
      s.degraded = parse_double(fields[13]) != 0.0;
      log.steps.push_back(s);
    } catch (const std::invalid_argument& e) {
      throw IoError("trajectory csv line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return log;
}

std::string metrics_to_json(const Metrics& metrics) {
  nlohmann::json j;
  j["max_cross_track"] = metrics.max_cross_track;
  j["rms_cross_track"] = metrics.rms_cross_track;
  j["mean_localization_error"] = metrics.mean_localization_error;
  j["distance_traveled"] = metrics.distance_traveled;
  j["steps"] = metrics.steps;
  j["status"] = to_string(metrics.status);
  return j.dump(2) + "\n";
}

Metrics metrics_from_json(const std::string& json_text) {
  const nlohmann::json j = nlohmann::json::parse(json_text);
  Metrics m;
  m.max_cross_track = j.at("max_cross_track").get<double>();
  m.rms_cross_track = j.at("rms_cross_track").get<double>();
  m.mean_localization_error = j.at("mean_localization_error").get<double>();
  m.distance_traveled = j.at("distance_traveled").get<double>();
  m.steps = j.at("steps").get<std::size_t>();
  const std::string status = j.at("status").get<std::string>();
  if (status == "route-complete") m.status = TerminalStatus::RouteComplete;
  else if (status == "localization-lost") m.status = TerminalStatus::LocalizationLost;
  else m.status = TerminalStatus::Timeout;
  return m;
}

namespace {

void append_polyline(std::string& svg, const std::vector<Eigen::Vector2d>& pts,
                     const char* stroke, const char* extra) {
  svg += "  <polyline fill=\"none\" stroke=\"";
  svg += stroke;
  svg += "\" stroke-width=\"0.4\"";
  svg += extra;
  svg += " points=\"";
  for (std::size_t i = 0; i < pts.size(); ++i) {
    if (i) svg += ' ';
    // SVG y axis points down: flip y so north stays up.
    svg += format_double(pts[i].x()) + "," + format_double(-pts[i].y());
  }
  svg += "\"/>\n";
}

}  // namespace

std::string overlay_svg(const SimLog& log, const Route* route) {
  std::vector<Eigen::Vector2d> true_path, est_path;
  true_path.reserve(log.steps.size());
  est_path.reserve(log.steps.size());
  for (const SimStep& s : log.steps) {
    true_path.push_back(s.true_state.position());
    est_path.emplace_back(s.est_pose.x, s.est_pose.y);
  }

  Eigen::Vector2d lo(std::numeric_limits<double>::infinity(),
                     std::numeric_limits<double>::infinity());
  Eigen::Vector2d hi = -lo;
  auto grow = [&](const std::vector<Eigen::Vector2d>& pts) {
    for (const Eigen::Vector2d& p : pts) {
      lo = lo.cwiseMin(p);
      hi = hi.cwiseMax(p);
    }
  };
  grow(true_path);
  if (route) grow(route->waypoints);
  if (!(hi.x() >= lo.x())) {  // nothing to draw
    lo = {0, 0};
    hi = {1, 1};
  }

  const double margin = 5.0;
  const double min_x = lo.x() - margin;
  const double min_y = -(hi.y() + margin);  // flipped
  const double width = hi.x() - lo.x() + 2 * margin;
  const double height = hi.y() - lo.y() + 2 * margin;

  std::string svg = "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"";
  svg += format_double(min_x) + " " + format_double(min_y) + " " + format_double(width) + " " +
         format_double(height) + "\">\n";
  if (route) append_polyline(svg, route->waypoints, "#cc3333", "");
  append_polyline(svg, true_path, "#3366cc", "");
  append_polyline(svg, est_path, "#33a033", " stroke-dasharray=\"0.8,0.8\"");
  svg += "</svg>\n";
  return svg;
}

void emit_report(const SimLog& log, const Metrics& metrics, const Route* route,
                 const std::string& out_dir) {
  const std::filesystem::path dir(out_dir);
  write_text_file((dir / "trajectory.csv").string(), log_to_csv(log));
  write_text_file((dir / "metrics.json").string(), metrics_to_json(metrics));
  write_text_file((dir / "overlay.svg").string(), overlay_svg(log, route));
}

namespace {

Pose6 pose_from_json_array(const nlohmann::json& a) {
  if (!a.is_array() || a.size() != 6) {
    throw std::invalid_argument("scenario: pose must be a 6-element array");
  }
  return Pose6(a[0].get<double>(), a[1].get<double>(), a[2].get<double>(), a[3].get<double>(),
               a[4].get<double>(), a[5].get<double>());
}

LidarConfig lidar_from_json(const nlohmann::json& j) {
  LidarConfig cfg = LidarConfig::basic_16();
  const int channels = j.value("channels", cfg.channels());
  const double lo = j.value("elevation_min_deg", -15.0) * std::numbers::pi / 180.0;
  const double hi = j.value("elevation_max_deg", 15.0) * std::numbers::pi / 180.0;
  if (channels < 1) throw std::invalid_argument("scenario: lidar channels must be >= 1");
  cfg.elevation_angles.clear();
  for (int c = 0; c < channels; ++c) {
    const double f = channels == 1 ? 0.5 : static_cast<double>(c) / (channels - 1);
    cfg.elevation_angles.push_back(lo + f * (hi - lo));
  }
  const int azimuth_steps = j.value("azimuth_steps", 900);
  if (azimuth_steps < 4) throw std::invalid_argument("scenario: azimuth_steps must be >= 4");
  cfg.azimuth_step = 2.0 * std::numbers::pi / azimuth_steps;
  cfg.min_range = j.value("min_range", cfg.min_range);
  cfg.max_range = j.value("max_range", cfg.max_range);
  cfg.range_noise_sigma = j.value("noise_sigma", cfg.range_noise_sigma);
  if (j.contains("mount")) cfg.mount = pose_from_json_array(j.at("mount"));
  return cfg;
}

}  // namespace

ScenarioConfig load_scenario(const std::string& path, const std::string& map_override) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(read_text_file(path));
  } catch (const nlohmann::json::parse_error& e) {
    throw osm::ParseError(std::string("scenario: ") + e.what(), 0);
  }
  const std::filesystem::path base = std::filesystem::path(path).parent_path();
  const auto resolve = [&base](const std::string& p) {
    const std::filesystem::path fp(p);
    return fp.is_absolute() ? fp.string() : (base / fp).string();
  };

  ScenarioConfig cfg;
  if (!j.contains("scene") || !j.contains("route")) {
    throw std::invalid_argument("scenario: 'scene' and 'route' are required");
  }
  cfg.scene = load_scene(resolve(j.at("scene").get<std::string>()));
  cfg.route = load_route(resolve(j.at("route").get<std::string>()));

  const std::string mode = j.value("mode", "ground_truth");
  if (mode == "ndt") cfg.mode = LocalizationMode::Ndt;
  else if (mode == "ground_truth") cfg.mode = LocalizationMode::GroundTruth;
  else throw std::invalid_argument("scenario: mode must be 'ground_truth' or 'ndt'");

  // A CLI override is taken as-is (relative to the caller's cwd); a path from
  // the config file is resolved against the config's directory.
  std::string map_dir = map_override;
  if (map_dir.empty() && j.contains("map") && !j.at("map").is_null()) {
    map_dir = resolve(j.at("map").get<std::string>());
  }
  if (!map_dir.empty()) {
    cfg.map = load_grid((std::filesystem::path(map_dir) / "grid.json").string());
  }

  if (j.contains("vehicle")) {
    const nlohmann::json& v = j.at("vehicle");
    cfg.vehicle.wheelbase = v.value("wheelbase", cfg.vehicle.wheelbase);
    cfg.vehicle.max_steer = v.value("max_steer", cfg.vehicle.max_steer);
    cfg.vehicle.cruise_speed = v.value("cruise_speed", cfg.vehicle.cruise_speed);
    if (v.contains("steer_rate_limit")) {
      cfg.vehicle.steer_rate_limit = v.at("steer_rate_limit").get<double>();
    }
  }
  if (j.contains("lidar")) cfg.lidar = lidar_from_json(j.at("lidar"));
  if (j.contains("gps_anchor")) cfg.gps_anchor = pose_from_json_array(j.at("gps_anchor"));
  cfg.lookahead = j.value("lookahead", cfg.lookahead);
  cfg.dt = j.value("dt", cfg.dt);
  cfg.max_duration = j.value("max_duration", cfg.max_duration);
  cfg.seed = j.value("seed", cfg.seed);
  return cfg;
}

MapBuild drive_and_map(const Scene& scene, const Route& route, const LidarConfig& lidar,
                       const VehicleParams& vehicle, const MapParams& map_params,
                       double scan_spacing, double dt, std::uint64_t seed) {
  if (!(scan_spacing > 0.0)) {
    throw std::invalid_argument("drive_and_map: scan_spacing must be > 0");
  }
  vehicle.validate();
  lidar.validate();

  VehicleState truth;
  truth.x = route.waypoints[0].x();
  truth.y = route.waypoints[0].y();
  truth.yaw = initial_heading(route);
  truth.speed = vehicle.cruise_speed;

  std::vector<PointCloud> scans;
  double distance = 0.0;
  double next_scan_at = 0.0;
  // Twice the nominal drive time leaves headroom for the curved bits.
  const std::size_t max_steps = static_cast<std::size_t>(
      std::ceil(2.0 * route.length() / (vehicle.cruise_speed * dt))) + 10;

  for (std::size_t k = 0; k < max_steps; ++k) {
    if (distance >= next_scan_at) {
      const Pose6 sensor_pose = compose(planar_pose(truth), lidar.mount);
      scans.push_back(simulate_scan(scene, sensor_pose, lidar, seed + scans.size()));
      next_scan_at += scan_spacing;
    }

    const Eigen::Vector2d goal = find_goal_point(route, truth.position(), 6.0);
    const double steer = pure_pursuit_steer(heading_error_to_goal(truth, goal), vehicle, 6.0);
    const VehicleState next = step_bicycle(truth, steer, vehicle, dt);
    distance += std::hypot(next.x - truth.x, next.y - truth.y);
    truth = next;

    if ((truth.position() - route.waypoints.back()).norm() < kRouteCompleteRadius &&
        distance >= kRouteCompleteFraction * route.length()) {
      break;
    }
  }
  return build_map(scans, map_params);
}

std::string localization_log_csv(const Scene& scene, const Route& route, const NdtGrid& grid,
                                 const LidarConfig& lidar, const VehicleParams& vehicle,
                                 const RegistrationParams& registration, double dt,
                                 std::uint64_t seed) {
  vehicle.validate();
  lidar.validate();

  VehicleState truth;
  truth.x = route.waypoints[0].x();
  truth.y = route.waypoints[0].y();
  truth.yaw = initial_heading(route);
  truth.speed = vehicle.cruise_speed;

  LocalizerConfig loc_cfg;
  loc_cfg.lidar_extrinsic = lidar.mount;
  loc_cfg.registration = registration;
  LocalizationState loc_state;
  loc_state.prev_pose = planar_pose(truth);

  std::string csv = "t,est_x,est_y,est_yaw,true_x,true_y,true_yaw,score,converged\n";
  double distance = 0.0;
  const std::size_t max_steps = static_cast<std::size_t>(
      std::ceil(2.0 * route.length() / (vehicle.cruise_speed * dt))) + 10;

  for (std::size_t k = 0; k < max_steps; ++k) {
    const Pose6 sensor_pose = compose(planar_pose(truth), lidar.mount);
    const PointCloud scan = simulate_scan(scene, sensor_pose, lidar, seed + k);
    const Pose6 est = localize_scan(grid, scan, loc_state, loc_cfg, dt);

    csv += format_double(static_cast<double>(k) * dt);
    csv += ',' + format_double(est.x) + ',' + format_double(est.y) + ',' + format_double(est.yaw);
    csv += ',' + format_double(truth.x) + ',' + format_double(truth.y) + ',' +
           format_double(truth.yaw);
    csv += ',' + format_double(loc_state.last_result.score);
    csv += loc_state.last_result.converged ? ",1\n" : ",0\n";

    const Eigen::Vector2d goal = find_goal_point(route, truth.position(), 6.0);
    const double steer = pure_pursuit_steer(heading_error_to_goal(truth, goal), vehicle, 6.0);
    const VehicleState next = step_bicycle(truth, steer, vehicle, dt);
    distance += std::hypot(next.x - truth.x, next.y - truth.y);
    truth = next;

    if ((truth.position() - route.waypoints.back()).norm() < kRouteCompleteRadius &&
        distance >= kRouteCompleteFraction * route.length()) {
      break;
    }
  }
  return csv;
}

}  // namespace shuttlesim
