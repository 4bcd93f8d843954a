#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "doorkin/cloud.hpp"
#include "doorkin/error.hpp"
#include "doorkin/geometry.hpp"

namespace doorkin {

enum class HandleOrientation { kHorizontal, kVertical };

std::string_view to_string(HandleOrientation o);

/// Door plane as extracted from one door box: oriented normal plus the
/// centroid of the plane inliers.
struct DoorPlane {
  Vec3 normal = Vec3::UnitX();
  Vec3 centroid = Vec3::Zero();
  std::size_t box_index = 0;

  double distance(const Vec3& p) const { return std::abs(normal.dot(p - centroid)); }
};

struct HandleDetection {
  HandleOrientation orientation = HandleOrientation::kHorizontal;
  Vec3 centroid = Vec3::Zero();
  BoundingBox source_box;
  std::optional<std::size_t> assigned_door;
};

struct GraspPose {
  Pose pose;         // world <- grasping
  Pose handle_pose;  // world <- handle
  std::size_t handle_index = 0;  // input box index of the handle
  std::size_t door_index = 0;    // input box index of the assigned door
  HandleOrientation orientation = HandleOrientation::kHorizontal;
};

struct GraspFailure {
  std::size_t box_index = 0;
  ErrorCode code = ErrorCode::kInvalidArgument;
  std::string message;
};

struct GraspConfig {
  int k_neighbors = 20;
  double alpha = 1.0;
  double leaf = 0.05;
  double plane_threshold = 0.01;
  int ransac_iters = 500;
  std::uint64_t seed = 0;
  unsigned threads = 1;
  /// handle <- grasping offsets. Defaults: 5 cm standoff along -x of the
  /// handle frame; vertical handles add a quarter turn about x.
  Pose horizontal_offset = default_offset(HandleOrientation::kHorizontal, 0.05);
  Pose vertical_offset = default_offset(HandleOrientation::kVertical, 0.05);

  static Pose default_offset(HandleOrientation o, double standoff);
  const Pose& offset_for(HandleOrientation o) const {
    return o == HandleOrientation::kVertical ? vertical_offset : horizontal_offset;
  }
};

struct GraspReport {
  std::vector<GraspPose> grasps;  // ordered by handle box index
  std::vector<GraspFailure> failures;
  std::vector<DoorPlane> doors;   // ordered by door box index
};

/// Vertical iff the box is strictly taller than wide.
HandleOrientation classify_orientation(const BoundingBox& box);

/// Index into `doors` of the plane closest to the handle centroid (absolute
/// point-to-plane distance); ties go to the lowest index. Throws Error(kNoDoors).
std::size_t assign_closest_door(const Vec3& handle_centroid, std::span<const DoorPlane> doors);

/// Door branch: ROI, statistical filter, voxel grid, RANSAC plane, centroid of inliers.
DoorPlane extract_door_plane(const PointCloud& cloud, const BoundingBox& box, const GraspConfig& config,
                             std::uint64_t seed);

/// Handle branch: ROI, background plane removal, centroid of what remains.
HandleDetection extract_handle(const PointCloud& cloud, const BoundingBox& box, const GraspConfig& config,
                               std::uint64_t seed);

/// Seed used for a box's RANSAC. Depends on the box content only, so adding or
/// removing other boxes leaves a box's result unchanged.
std::uint64_t box_seed(std::uint64_t base_seed, const BoundingBox& box);

/// Full pipeline from an organized cloud and detections to grasp poses.
/// Per-box failures are collected in the report instead of aborting.
GraspReport estimate_grasp_poses(const PointCloud& cloud, std::span<const BoundingBox> boxes,
                                 const GraspConfig& config);

/// "handle_idx door_idx tx ty tz qx qy qz qw"
std::string format_grasp_line(const GraspPose& g);
/// "failure box_idx code message"
std::string format_failure_line(const GraspFailure& f);

}  // namespace doorkin
