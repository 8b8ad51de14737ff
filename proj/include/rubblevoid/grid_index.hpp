#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "rubblevoid/cloud_io.hpp"

namespace rubblevoid {

struct CellCoord {
  std::int64_t i = 0;
  std::int64_t j = 0;

  friend bool operator==(const CellCoord&, const CellCoord&) = default;
};

struct Neighbor {
  std::uint32_t id = 0;
  double distance = 0.0;
};

/// Flat XY bucket grid over a point set. Point p lives in bucket
/// (floor((p.x - origin_x) / cell_size), floor((p.y - origin_y) / cell_size)).
/// Buckets are stored CSR-style over the occupied index range, so lookups are
/// O(1) and the structure is immutable after construction.
///
/// The index keeps a copy of the point coordinates so it can answer distance
/// queries without holding a reference to the source cloud.
class GridIndex {
 public:
  GridIndex() = default;

  double cell_size() const { return cell_size_; }
  double origin_x() const { return origin_x_; }
  double origin_y() const { return origin_y_; }
  std::size_t point_count() const { return points_.size(); }
  std::span<const Point3> points() const { return points_; }

  CellCoord cell_of(double x, double y) const;

  /// Point IDs in bucket (i, j); empty when the bucket holds nothing.
  std::span<const std::uint32_t> bucket(CellCoord c) const;

  /// Number of non-empty buckets.
  std::size_t bucket_count() const { return non_empty_; }

  /// Coordinates (in bucket units) of every non-empty bucket, row-major.
  std::vector<CellCoord> occupied_cells() const;

  /// IDs of every point whose bucket lies in [lo, hi] (inclusive on both axes).
  std::vector<std::uint32_t> query_cells(CellCoord lo, CellCoord hi) const;

  /// Nearest point (3D Euclidean) within `max_distance`, scanning outward in
  /// XY rings and every point of each visited column.
  std::optional<Neighbor> nearest(const Point3& q, double max_distance) const;

 private:
  friend GridIndex build_index(std::span<const Point3> points, double cell_size);

  double cell_size_ = 1.0;
  double origin_x_ = 0.0;
  double origin_y_ = 0.0;
  std::int64_t nx_ = 0;
  std::int64_t ny_ = 0;
  std::size_t non_empty_ = 0;
  std::vector<Point3> points_;
  std::vector<std::uint32_t> offsets_;  // size nx*ny + 1
  std::vector<std::uint32_t> ids_;
};

/// Origin is the XY minimum of the points. Throws NonPositiveCell for
/// cell_size <= 0 (or non-finite) and EmptyCloud for an empty input.
GridIndex build_index(std::span<const Point3> points, double cell_size);
GridIndex build_index(const PointCloud& cloud, double cell_size);

}  // namespace rubblevoid
