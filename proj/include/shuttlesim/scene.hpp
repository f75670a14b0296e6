#pragma once

#include "shuttlesim/geom.hpp"

#include <optional>
#include <string>
#include <vector>

namespace shuttlesim {

// Axis-aligned box, min corner strictly below max corner componentwise.
struct Box {
  Point3 min;
  Point3 max;
};

// Vertical cylinder. `center` is the center of the base disk; the body
// spans z in [center.z, center.z + height].
struct Cylinder {
  Point3 center;
  double radius = 0.0;
  double height = 0.0;
};

// Geometric world model: a horizontal ground plane at z = ground_z plus
// primitive obstacles. Scenes are loaded from JSON, see scene_from_json.
struct Scene {
  double ground_z = 0.0;
  bool has_ground = true;
  std::vector<Box> boxes;
  std::vector<Cylinder> cylinders;

  void validate() const;  // throws std::invalid_argument on bad primitives
};

// First hit distance of the ray origin + t*dir against ground and all
// primitives, or nullopt when nothing is hit. dir must be unit length to
// within 1e-9 (std::invalid_argument otherwise).
std::optional<double> ray_cast(const Scene& scene, const Point3& origin, const Point3& dir);

// JSON schema: {"ground_z": 0.0, "has_ground": true,
// "boxes": [{"min": [x,y,z], "max": [x,y,z]}],
// "cylinders": [{"center": [x,y,z], "radius": r, "height": h}]}. Units meters.
Scene scene_from_json(const std::string& json_text);
std::string scene_to_json(const Scene& scene);
Scene load_scene(const std::string& path);

}  // namespace shuttlesim
