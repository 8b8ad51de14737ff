#pragma once

#include <array>
#include <cmath>
#include <cstdint>

namespace rubblevoid {

/// Site-frame position in meters, Z up.
struct Point3 {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;

  friend bool operator==(const Point3&, const Point3&) = default;
};

struct Rgb {
  std::uint8_t r = 0;
  std::uint8_t g = 0;
  std::uint8_t b = 0;

  friend bool operator==(const Rgb&, const Rgb&) = default;
};

inline bool is_finite(const Point3& p) {
  return std::isfinite(p.x) && std::isfinite(p.y) && std::isfinite(p.z);
}

inline double squared_distance(const Point3& a, const Point3& b) {
  const double dx = a.x - b.x, dy = a.y - b.y, dz = a.z - b.z;
  return dx * dx + dy * dy + dz * dz;
}

inline double distance(const Point3& a, const Point3& b) { return std::sqrt(squared_distance(a, b)); }

/// Closed axis-aligned box.
struct Aabb {
  Point3 min;
  Point3 max;

  bool valid() const { return min.x <= max.x && min.y <= max.y && min.z <= max.z; }

  bool contains(const Point3& p) const {
    return p.x >= min.x && p.x <= max.x && p.y >= min.y && p.y <= max.y && p.z >= min.z && p.z <= max.z;
  }

  bool contains_xy(double x, double y) const { return x >= min.x && x <= max.x && y >= min.y && y <= max.y; }

  double extent_x() const { return max.x - min.x; }
  double extent_y() const { return max.y - min.y; }
  double extent_z() const { return max.z - min.z; }

  std::array<Point3, 8> corners() const {
    return {Point3{min.x, min.y, min.z}, Point3{max.x, min.y, min.z}, Point3{min.x, max.y, min.z},
            Point3{max.x, max.y, min.z}, Point3{min.x, min.y, max.z}, Point3{max.x, min.y, max.z},
            Point3{min.x, max.y, max.z}, Point3{max.x, max.y, max.z}};
  }

  friend bool operator==(const Aabb&, const Aabb&) = default;
};

}  // namespace rubblevoid
