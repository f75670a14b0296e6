#include "shuttlesim/scene.hpp"

#include "shuttlesim/io_util.hpp"

#include <json.hpp>

#include <cmath>
#include <limits>
#include <stdexcept>

namespace shuttlesim {

namespace {

constexpr double kMinHit = 1e-9;  // reject grazing self-hits at the origin

// Slab test. Returns the smallest positive entry/exit distance, if any.
std::optional<double> ray_box(const Point3& o, const Point3& d, const Box& b) {
  double t0 = -std::numeric_limits<double>::infinity();
  double t1 = std::numeric_limits<double>::infinity();
  for (int i = 0; i < 3; ++i) {
    if (d[i] == 0.0) {
      if (o[i] < b.min[i] || o[i] > b.max[i]) return std::nullopt;
      continue;
    }
    double ta = (b.min[i] - o[i]) / d[i];
    double tb = (b.max[i] - o[i]) / d[i];
    if (ta > tb) std::swap(ta, tb);
    t0 = std::max(t0, ta);
    t1 = std::min(t1, tb);
    if (t0 > t1) return std::nullopt;
  }
  if (t0 > kMinHit) return t0;
  if (t1 > kMinHit) return t1;  // origin inside the box: hit the exit face
  return std::nullopt;
}

std::optional<double> ray_cylinder(const Point3& o, const Point3& d, const Cylinder& c) {
  const double z_lo = c.center.z();
  const double z_hi = c.center.z() + c.height;
  double best = std::numeric_limits<double>::infinity();

  // Lateral surface: quadratic in the xy plane.
  const double ox = o.x() - c.center.x();
  const double oy = o.y() - c.center.y();
  const double a = d.x() * d.x() + d.y() * d.y();
  if (a > 0.0) {
    const double b = 2.0 * (ox * d.x() + oy * d.y());
    const double q = ox * ox + oy * oy - c.radius * c.radius;
    const double disc = b * b - 4.0 * a * q;
    if (disc >= 0.0) {
      const double sq = std::sqrt(disc);
      for (double t : {(-b - sq) / (2.0 * a), (-b + sq) / (2.0 * a)}) {
        if (t > kMinHit && t < best) {
          const double z = o.z() + t * d.z();
          if (z >= z_lo && z <= z_hi) best = t;
        }
      }
    }
  }

  // End caps.
  if (d.z() != 0.0) {
    for (double zc : {z_lo, z_hi}) {
      const double t = (zc - o.z()) / d.z();
      if (t > kMinHit && t < best) {
        const double px = ox + t * d.x();
        const double py = oy + t * d.y();
        if (px * px + py * py <= c.radius * c.radius) best = t;
      }
    }
  }

  if (std::isinf(best)) return std::nullopt;
  return best;
}

Point3 vec3_from_json(const nlohmann::json& j) {
  if (!j.is_array() || j.size() != 3) {
    throw std::invalid_argument("scene: expected a 3-element array");
  }
  return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

}  // namespace

void Scene::validate() const {
  for (const auto& b : boxes) {
    if (!(b.min.x() < b.max.x() && b.min.y() < b.max.y() && b.min.z() < b.max.z())) {
      throw std::invalid_argument("scene: box min must be < max componentwise");
    }
  }
  for (const auto& c : cylinders) {
    if (!(c.radius > 0.0) || !(c.height > 0.0)) {
      throw std::invalid_argument("scene: cylinder radius and height must be > 0");
    }
  }
}

std::optional<double> ray_cast(const Scene& scene, const Point3& origin, const Point3& dir) {
  if (std::abs(dir.norm() - 1.0) > 1e-9) {
    throw std::invalid_argument("ray_cast: direction must be unit length");
  }

  double best = std::numeric_limits<double>::infinity();
  if (scene.has_ground && dir.z() != 0.0) {
    const double t = (scene.ground_z - origin.z()) / dir.z();
    if (t > kMinHit) best = t;
  }
  for (const auto& b : scene.boxes) {
    if (auto t = ray_box(origin, dir, b); t && *t < best) best = *t;
  }
  for (const auto& c : scene.cylinders) {
    if (auto t = ray_cylinder(origin, dir, c); t && *t < best) best = *t;
  }

  if (std::isinf(best)) return std::nullopt;
  return best;
}

Scene scene_from_json(const std::string& json_text) {
  nlohmann::json j = nlohmann::json::parse(json_text);
  Scene s;
  s.ground_z = j.value("ground_z", 0.0);
  s.has_ground = j.value("has_ground", true);
  for (const auto& jb : j.value("boxes", nlohmann::json::array())) {
    s.boxes.push_back({vec3_from_json(jb.at("min")), vec3_from_json(jb.at("max"))});
  }
  for (const auto& jc : j.value("cylinders", nlohmann::json::array())) {
    s.cylinders.push_back({vec3_from_json(jc.at("center")), jc.at("radius").get<double>(),
                           jc.at("height").get<double>()});
  }
  s.validate();
  return s;
}

std::string scene_to_json(const Scene& scene) {
  nlohmann::json j;
  j["ground_z"] = scene.ground_z;
  j["has_ground"] = scene.has_ground;
  j["boxes"] = nlohmann::json::array();
  for (const auto& b : scene.boxes) {
    j["boxes"].push_back({{"min", {b.min.x(), b.min.y(), b.min.z()}},
                          {"max", {b.max.x(), b.max.y(), b.max.z()}}});
  }
  j["cylinders"] = nlohmann::json::array();
  for (const auto& c : scene.cylinders) {
    j["cylinders"].push_back({{"center", {c.center.x(), c.center.y(), c.center.z()}},
                              {"radius", c.radius},
                              {"height", c.height}});
  }
  return j.dump(2) + "\n";
}

Scene load_scene(const std::string& path) { return scene_from_json(read_text_file(path)); }

}  // namespace shuttlesim
