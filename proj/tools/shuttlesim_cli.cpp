// shuttlesim command line front end.
//
// Subcommands:
//   route     OSM XML -> route CSV (optionally buildings -> scene JSON)
//   map       ground-truth drive along a route, NDT map build, map/ dir out
//   localize  open-loop localization replay against a map, CSV log out
//   simulate  closed-loop scenario (trajectory.csv, metrics.json, overlay.svg)
//   report    recompute metrics + SVG from a trajectory CSV
//
// Exit codes: 0 ok, 2 usage, 3 I/O, 4 parse, 5 osm semantic
// (missing ref / broken chain / no match), 6 invalid argument,
// 7 degenerate input, 1 anything else.

#include "shuttlesim/errors.hpp"
#include "shuttlesim/io_util.hpp"
#include "shuttlesim/osm.hpp"
#include "shuttlesim/sim.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <filesystem>
#include <iostream>
#include <numbers>
#include <stdexcept>

namespace fs = std::filesystem;
using namespace shuttlesim;

namespace {

int run_route(const std::string& osm_path, const std::string& way, const std::string& origin_text,
              double spacing, const std::string& out_path, const std::string& buildings_out) {
  const auto parts = split(origin_text, ',');
  if (parts.size() != 2) {
    throw std::invalid_argument("--origin must be '<lat>,<lon>' in degrees");
  }
  osm::EnuOrigin origin;
  origin.lat0 = parse_double(parts[0]);
  origin.lon0 = parse_double(parts[1]);

  const osm::OsmDocument doc = osm::load_osm(osm_path);
  const Route route = osm::extract_route(doc, osm::WaySelector::parse(way), origin, spacing);
  save_route(route, out_path);
  std::cout << "wrote " << out_path << " (" << route.size() << " waypoints, "
            << format_double(route.length()) << " m)\n";

  if (!buildings_out.empty()) {
    const Scene scene = osm::buildings_to_scene(doc, origin);
    write_text_file(buildings_out, scene_to_json(scene));
    std::cout << "wrote " << buildings_out << " (" << scene.boxes.size() << " buildings)\n";
  }
  return 0;
}

int run_map(const std::string& scene_path, const std::string& route_path,
            const std::string& out_dir, double scan_spacing, double max_range, int azimuth_steps,
            std::uint64_t seed) {
  const Scene scene = load_scene(scene_path);
  const Route route = load_route(route_path);

  LidarConfig lidar = LidarConfig::basic_16();
  lidar.max_range = max_range;
  lidar.azimuth_step = 2.0 * std::numbers::pi / azimuth_steps;
  VehicleParams vehicle;
  MapParams map_params;

  const MapBuild build = drive_and_map(scene, route, lidar, vehicle, map_params, scan_spacing,
                                       0.1, seed);

  fs::create_directories(out_dir);
  const fs::path dir(out_dir);
  save_grid(map_grid(build, map_params), (dir / "grid.json").string());

  std::string points_csv;
  for (const Point3& p : build.map_cloud.points) {
    points_csv += format_double(p.x()) + ',' + format_double(p.y()) + ',' +
                  format_double(p.z()) + '\n';
  }
  write_text_file((dir / "map_points.csv").string(), points_csv);
  write_text_file((dir / "route.csv").string(), route_to_csv(route));

  std::cout << "wrote " << out_dir << " (" << build.map_cloud.size() << " map points, "
            << build.keyframes.size() << " keyframes, " << build.diverged.size()
            << " diverged scans)\n";
  return 0;
}

int run_localize(const std::string& map_dir, const std::string& scene_path,
                 const std::string& log_path, double max_range, int azimuth_steps,
                 std::uint64_t seed) {
  const fs::path dir(map_dir);
  const NdtGrid grid = load_grid((dir / "grid.json").string());
  const Route route = load_route((dir / "route.csv").string());
  const Scene scene = load_scene(scene_path);

  LidarConfig lidar = LidarConfig::basic_16();
  lidar.max_range = max_range;
  lidar.azimuth_step = 2.0 * std::numbers::pi / azimuth_steps;
  VehicleParams vehicle;
  RegistrationParams registration;

  write_text_file(log_path, localization_log_csv(scene, route, grid, lidar, vehicle, registration,
                                                 0.1, seed));
  std::cout << "wrote " << log_path << "\n";
  return 0;
}

int run_simulate(const std::string& config_path, const std::string& out_dir,
                 const std::string& map_override) {
  const ScenarioConfig cfg = load_scenario(config_path, map_override);
  const SimLog log = run_scenario(cfg);
  const Metrics metrics = compute_metrics(log);

  fs::create_directories(out_dir);
  emit_report(log, metrics, &cfg.route, out_dir);
  std::cout << "status: " << to_string(log.status) << ", steps: " << log.steps.size()
            << ", max |cross-track|: " << format_double(metrics.max_cross_track) << " m\n";
  return 0;
}

int run_report(const std::string& log_path, const std::string& route_path,
               const std::string& out_dir) {
  const SimLog log = log_from_csv(read_text_file(log_path));
  const Metrics metrics = compute_metrics(log);

  Route route;
  const Route* route_ptr = nullptr;
  if (!route_path.empty()) {
    route = load_route(route_path);
    route_ptr = &route;
  }

  const fs::path dir = out_dir.empty() ? fs::path(log_path).parent_path() : fs::path(out_dir);
  fs::create_directories(dir.empty() ? "." : dir.string());
  write_text_file((dir / "report.json").string(), metrics_to_json(metrics));
  write_text_file((dir / "report.svg").string(), overlay_svg(log, route_ptr));
  std::cout << "max |cross-track|: " << format_double(metrics.max_cross_track)
            << " m, rms: " << format_double(metrics.rms_cross_track) << " m over "
            << metrics.steps << " steps\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"shuttle pre-deployment simulation harness"};
  app.require_subcommand(1);

  // route
  auto* route_cmd = app.add_subcommand("route", "extract a route from OSM XML");
  std::string osm_path, way_selector, origin_text, route_out = "route.csv", buildings_out;
  double spacing = 1.0;
  route_cmd->add_option("osm", osm_path, "OSM XML file")->required();
  route_cmd->add_option("--way", way_selector, "way selector: id=<n> or <key>=<value>")
      ->required();
  route_cmd->add_option("--origin", origin_text, "ENU origin '<lat>,<lon>' degrees")->required();
  route_cmd->add_option("--spacing", spacing, "waypoint spacing, m (default 1)");
  route_cmd->add_option("-o,--out", route_out, "output route CSV (default route.csv)");
  route_cmd->add_option("--buildings-out", buildings_out, "also write buildings as a scene JSON");

  // map
  auto* map_cmd = app.add_subcommand("map", "drive a route on ground truth and build the NDT map");
  std::string scene_path, route_path, map_out = "map";
  double scan_spacing = 1.0, map_range = 60.0;
  int map_azimuth_steps = 360;
  std::uint64_t map_seed = 1;
  map_cmd->add_option("--scene", scene_path, "scene JSON")->required();
  map_cmd->add_option("--route", route_path, "route CSV")->required();
  map_cmd->add_option("--out", map_out, "output map directory (default map/)");
  map_cmd->add_option("--scan-spacing", scan_spacing, "meters between scans (default 1)");
  map_cmd->add_option("--max-range", map_range, "lidar max range, m (default 60)");
  map_cmd->add_option("--azimuth-steps", map_azimuth_steps, "rays per revolution (default 360)");
  map_cmd->add_option("--seed", map_seed, "noise seed (default 1)");

  // localize
  auto* loc_cmd = app.add_subcommand("localize", "open-loop localization replay against a map");
  std::string loc_map_dir, loc_scene_path, loc_log = "localization.csv";
  double loc_range = 60.0;
  int loc_azimuth_steps = 360;
  std::uint64_t loc_seed = 2;
  loc_cmd->add_option("--map", loc_map_dir, "map directory from `map`")->required();
  loc_cmd->add_option("--scene", loc_scene_path, "scene JSON")->required();
  loc_cmd->add_option("--log", loc_log, "output CSV (default localization.csv)");
  loc_cmd->add_option("--max-range", loc_range, "lidar max range, m (default 60)");
  loc_cmd->add_option("--azimuth-steps", loc_azimuth_steps, "rays per revolution (default 360)");
  loc_cmd->add_option("--seed", loc_seed, "noise seed (default 2)");

  // simulate
  auto* sim_cmd = app.add_subcommand("simulate", "closed-loop scenario");
  std::string sim_config, sim_out = "results", sim_map_override;
  sim_cmd->add_option("--config", sim_config, "scenario JSON")->required();
  sim_cmd->add_option("--out", sim_out, "output directory (default results/)");
  sim_cmd->add_option("--map", sim_map_override, "override the config's map directory");

  // report
  auto* rep_cmd = app.add_subcommand("report", "metrics + SVG from a trajectory CSV");
  std::string rep_log, rep_route, rep_out;
  rep_cmd->add_option("--log", rep_log, "trajectory CSV from `simulate`")->required();
  rep_cmd->add_option("--route", rep_route, "route CSV to draw as the reference");
  rep_cmd->add_option("--out", rep_out, "output directory (default: alongside the log)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (route_cmd->parsed()) {
      return run_route(osm_path, way_selector, origin_text, spacing, route_out, buildings_out);
    }
    if (map_cmd->parsed()) {
      return run_map(scene_path, route_path, map_out, scan_spacing, map_range, map_azimuth_steps,
                     map_seed);
    }
    if (loc_cmd->parsed()) {
      return run_localize(loc_map_dir, loc_scene_path, loc_log, loc_range, loc_azimuth_steps,
                          loc_seed);
    }
    if (sim_cmd->parsed()) return run_simulate(sim_config, sim_out, sim_map_override);
    if (rep_cmd->parsed()) return run_report(rep_log, rep_route, rep_out);
    return 2;
  } catch (const osm::ParseError& e) {
    std::cerr << "parse error";
    if (e.line() > 0) std::cerr << " (line " << e.line() << ")";
    std::cerr << ": " << e.what() << "\n";
    return 4;
  } catch (const nlohmann::json::parse_error& e) {
    std::cerr << "parse error: " << e.what() << "\n";
    return 4;
  } catch (const osm::ReferenceError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 5;
  } catch (const osm::TopologyError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 5;
  } catch (const osm::NotFoundError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 5;
  } catch (const DegenerateInputError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 7;
  } catch (const IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 6;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
