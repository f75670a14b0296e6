#pragma once

#include "shuttlesim/geom.hpp"
#include "shuttlesim/lidar.hpp"
#include "shuttlesim/localization.hpp"
#include "shuttlesim/mapping.hpp"
#include "shuttlesim/ndt.hpp"
#include "shuttlesim/route.hpp"
#include "shuttlesim/scene.hpp"
#include "shuttlesim/vehicle.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace shuttlesim {

enum class LocalizationMode { GroundTruth, Ndt };

// Closed-loop scenario description. Everything needed to rerun a scenario
// bit-for-bit lives here; see load_scenario for the JSON file schema.
struct ScenarioConfig {
  Scene scene;
  Route route;
  std::optional<NdtGrid> map;  // required in Ndt mode
  LocalizationMode mode = LocalizationMode::GroundTruth;
  LidarConfig lidar = LidarConfig::basic_16();
  VehicleParams vehicle;
  Pose6 gps_anchor;
  RegistrationParams registration;
  double lookahead = 6.0;       // m
  double dt = 0.1;              // s
  double max_duration = 120.0;  // s
  std::uint64_t seed = 1;

  void validate() const;  // throws std::invalid_argument
};

struct SimStep {
  double t = 0.0;
  VehicleState true_state;
  Pose6 est_pose;  // vehicle in map frame (== truth in GroundTruth mode)
  double steer = 0.0;
  Eigen::Vector2d goal{0, 0};
  double cross_track = 0.0;  // true pose vs route, signed
  double ndt_score = 0.0;
  bool ndt_converged = true;
  bool degraded = false;
};

enum class TerminalStatus { RouteComplete, Timeout, LocalizationLost };
const char* to_string(TerminalStatus status);

struct SimLog {
  std::vector<SimStep> steps;
  TerminalStatus status = TerminalStatus::Timeout;
};

// Fixed-step closed loop: scan at the true sensor pose, estimate the vehicle
// pose (NDT or pass-through), steer by pure pursuit on the estimate, then
// integrate the true bicycle state. The controller never sees the true pose
// in Ndt mode. Stops on route completion (within 1 m of the final waypoint
// after covering at least 80% of the route length), on timeout, or after 10
// consecutive degraded localization frames.
SimLog run_scenario(const ScenarioConfig& cfg);

struct Metrics {
  double max_cross_track = 0.0;          // max |cross-track|, m
  double rms_cross_track = 0.0;          // m
  double mean_localization_error = 0.0;  // mean ||est - true|| planar, m
  double distance_traveled = 0.0;        // m, integrated true path length
  std::size_t steps = 0;
  TerminalStatus status = TerminalStatus::Timeout;
};

Metrics compute_metrics(const SimLog& log);  // throws std::invalid_argument on empty log

// Text artifacts. All numbers use shortest round-trip formatting, so a rerun
// with identical inputs rewrites identical bytes.
std::string log_to_csv(const SimLog& log);
SimLog log_from_csv(const std::string& csv_text);  // status column not stored: stays Timeout
std::string metrics_to_json(const Metrics& metrics);
Metrics metrics_from_json(const std::string& json_text);
std::string overlay_svg(const SimLog& log, const Route* route);

// Writes trajectory.csv, metrics.json and overlay.svg into out_dir (which
// must already exist).
void emit_report(const SimLog& log, const Metrics& metrics, const Route* route,
                 const std::string& out_dir);

// Reads a scenario JSON file. Relative scene/route/map paths are resolved
// against the config file's directory. Schema (defaults shown):
//   {
//     "scene": "scene.json",          // required
//     "route": "route.csv",           // required
//     "map": "map_dir",               // optional; dir containing grid.json
//     "mode": "ground_truth"|"ndt",
//     "dt": 0.1, "max_duration": 120.0, "seed": 1, "lookahead": 6.0,
//     "vehicle": {"wheelbase": 3.0, "max_steer": 0.5, "cruise_speed": 11.176},
//     "lidar": {"channels": 16, "elevation_min_deg": -15.0,
//               "elevation_max_deg": 15.0, "azimuth_steps": 900,
//               "min_range": 0.5, "max_range": 100.0, "noise_sigma": 0.01,
//               "mount": [x, y, z, roll, pitch, yaw]},
//     "gps_anchor": [x, y, z, roll, pitch, yaw]
//   }
// map_override, when nonempty, replaces the config's map directory.
ScenarioConfig load_scenario(const std::string& path, const std::string& map_override = "");

// The ground-truth mapping drive behind the `map` CLI subcommand: drive the
// route at cruise speed, take one scan every scan_spacing meters of travel,
// and build the map from those scans.
MapBuild drive_and_map(const Scene& scene, const Route& route, const LidarConfig& lidar,
                       const VehicleParams& vehicle, const MapParams& map_params,
                       double scan_spacing, double dt, std::uint64_t seed);

// The open-loop localization replay behind the `localize` CLI subcommand:
// drive the route on ground truth, localize every scan against the grid, and
// log (t, est, true, score, converged) rows.
std::string localization_log_csv(const Scene& scene, const Route& route, const NdtGrid& grid,
                                 const LidarConfig& lidar, const VehicleParams& vehicle,
                                 const RegistrationParams& registration, double dt,
                                 std::uint64_t seed);

}  // namespace shuttlesim
