#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "rubblevoid/geometry.hpp"
#include "rubblevoid/timeutil.hpp"

namespace rubblevoid {

/// One epoch's points. `colors` is either empty or parallel to `points`.
struct PointCloud {
  std::vector<Point3> points;
  std::vector<Rgb> colors;
  Epoch epoch{};
  std::string source_label;

  std::size_t size() const { return points.size(); }
  bool empty() const { return points.empty(); }
  bool has_colors() const { return !colors.empty(); }
};

enum class CloudFormat { PlyAscii, PlyBinaryLe, XyzText };

std::string_view to_string(CloudFormat f);
CloudFormat cloud_format_from_string(std::string_view name);

/// PLY files are recognized by their `ply` magic line and `format` line;
/// anything else is treated as XYZ text.
CloudFormat detect_format(std::string_view bytes);

/// Parses a whole file image. Warnings (skipped properties, ignored
/// elements) are appended to `warnings` when it is non-null.
///
/// PLY comments of the form `comment epoch <iso-time>` and
/// `comment source <label>` populate the cloud metadata; XYZ text carries
/// the same information as `# epoch ...` / `# source ...` lines.
PointCloud parse_cloud(std::string_view bytes, CloudFormat format, std::vector<std::string>* warnings = nullptr);
PointCloud parse_cloud(std::string_view bytes, std::vector<std::string>* warnings = nullptr);

std::string serialize_cloud(const PointCloud& cloud, CloudFormat format);

PointCloud load_cloud(const std::string& path, std::optional<CloudFormat> format = std::nullopt,
                      std::vector<std::string>* warnings = nullptr);
void save_cloud(const std::string& path, const PointCloud& cloud, CloudFormat format);

Aabb bounding_box(const PointCloud& cloud);
Aabb bounding_box(std::span<const Point3> points);

struct CropResult {
  PointCloud cloud;
  bool empty = true;
};

CropResult crop(const PointCloud& cloud, const Aabb& region);

}  // namespace rubblevoid
