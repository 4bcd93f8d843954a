#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "doorkin/geometry.hpp"

namespace doorkin {

using PointSet = std::vector<Vec3>;

/// Organized cloud: pixel (x, y) lives at index width * y + x. Invalid depth
/// is stored as an empty optional.
struct PointCloud {
  int width = 0;
  int height = 0;
  std::vector<std::optional<Vec3>> points;

  static PointCloud make(int width, int height);

  std::size_t index(int x, int y) const {
    return static_cast<std::size_t>(width) * static_cast<std::size_t>(y) + static_cast<std::size_t>(x);
  }
  std::size_t valid_count() const;
};

enum class ObjectClass { kDoor, kCabinetDoor, kRefrigeratorDoor, kHandle };

std::string_view to_string(ObjectClass c);
ObjectClass parse_object_class(std::string_view s);
inline bool is_door_class(ObjectClass c) { return c != ObjectClass::kHandle; }

/// Detection in pixel coordinates, corners inclusive.
struct BoundingBox {
  ObjectClass label = ObjectClass::kDoor;
  int x_min = 0;
  int y_min = 0;
  int x_max = 0;
  int y_max = 0;
  double confidence = 1.0;

  int width() const { return x_max - x_min; }
  int height() const { return y_max - y_min; }
  bool fits(const PointCloud& cloud) const;
};

/// Plane in Hessian normal form n.p + d = 0, oriented so the sensor origin
/// lies on the non-negative side (d >= 0). Index sets refer to the fitted input.
struct PlaneModel {
  Vec3 normal = Vec3::UnitZ();
  double d = 0.0;
  std::vector<std::size_t> inliers;
  std::vector<std::size_t> outliers;

  double signed_distance(const Vec3& p) const { return normal.dot(p) + d; }
};

/// Indices of the valid points inside the box, in row-major order.
/// Throws Error(kInvalidArgument) for a box outside the cloud and Error(kEmptyRoi)
/// when no valid point falls inside.
std::vector<std::size_t> roi_segment(const PointCloud& cloud, const BoundingBox& box);

/// Valid points at the given indices.
PointSet gather(const PointCloud& cloud, std::span<const std::size_t> indices);

/// Indices of the points whose mean distance r_j to their k nearest neighbours
/// lies in [mu_r - alpha * sigma_r, mu_r + alpha * sigma_r]. sigma_r is the
/// population standard deviation of {r_j}. Throws Error(kTooFewPoints) unless
/// points.size() > k.
std::vector<std::size_t> statistical_inlier_indices(std::span<const Vec3> points, int k_neighbors, double alpha);
PointSet remove_statistical_outliers(std::span<const Vec3> points, int k_neighbors, double alpha);

/// Replaces the points of every occupied cubic voxel of edge `leaf` by their
/// centroid. Output is ordered by voxel key (lexicographic x, y, z).
PointSet voxel_downsample(std::span<const Vec3> points, double leaf);

/// Same as voxel_downsample, also reporting each voxel's member count.
struct Voxel {
  Vec3 centroid;
  std::size_t count = 0;
};
std::vector<Voxel> voxelize(std::span<const Vec3> points, double leaf);

struct RansacPlaneOptions {
  double threshold = 0.01;
  int max_iters = 500;
  std::uint64_t seed = 0;
  double early_exit_ratio = 0.9;
};

/// Inlier-count maximizing plane. Hypotheses are drawn sequentially from a
/// seeded generator; ties resolve to the earliest hypothesis. The winner is
/// polished by a total-least-squares fit of its inliers when that does not
/// lose inliers. Throws Error(kTooFewPoints) for fewer than 3 points and
/// Error(kDegenerateInput) when all points are collinear.
PlaneModel ransac_plane(std::span<const Vec3> points, const RansacPlaneOptions& options);
PlaneModel ransac_plane(std::span<const Vec3> points, double dist_threshold, int max_iters, std::uint64_t seed);

/// Component-wise mean. Throws Error(kEmptyInput).
Vec3 centroid(std::span<const Vec3> points);

/// Fits the background plane and returns the RANSAC outliers (the handle).
/// Throws Error(kNoOutliers) when every point lies on the plane.
PointSet split_handle_from_background(std::span<const Vec3> roi_points, double dist_threshold, std::uint64_t seed,
                                      int max_iters = 500);

// --- file formats -------------------------------------------------------
//
// .opc:   "OPC <width> <height>" then width*height lines "x y z" (or
//         "nan nan nan"), row-major with y outer.
// .boxes: one box per line, "class x_min y_min x_max y_max confidence".
//
// Readers throw Error(kParse) with "<source>:<line>: ..." messages.

PointCloud read_opc(std::istream& in, const std::string& source = "<stream>");
void write_opc(std::ostream& out, const PointCloud& cloud);
PointCloud load_opc(const std::string& path);
void save_opc(const std::string& path, const PointCloud& cloud);

std::vector<BoundingBox> read_boxes(std::istream& in, const std::string& source = "<stream>");
void write_boxes(std::ostream& out, std::span<const BoundingBox> boxes);
std::vector<BoundingBox> load_boxes(const std::string& path);
void save_boxes(const std::string& path, std::span<const BoundingBox> boxes);

}  // namespace doorkin
