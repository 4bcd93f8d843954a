#include "doorkin/grasp.hpp"

#include <cmath>
#include <numbers>
#include <optional>
#include <variant>

#include "doorkin/parallel.hpp"
#include "doorkin/text.hpp"

namespace doorkin {

std::string_view to_string(HandleOrientation o) {
  return o == HandleOrientation::kVertical ? "vertical" : "horizontal";
}

Pose GraspConfig::default_offset(HandleOrientation o, double standoff) {
  Pose p = Pose::from_translation(Vec3(-standoff, 0.0, 0.0));
  if (o == HandleOrientation::kVertical) p.rotation = axis_angle(Vec3::UnitX(), std::numbers::pi / 2.0);
  return p;
}

HandleOrientation classify_orientation(const BoundingBox& box) {
  return box.height() > box.width() ? HandleOrientation::kVertical : HandleOrientation::kHorizontal;
}

std::size_t assign_closest_door(const Vec3& handle_centroid, std::span<const DoorPlane> doors) {
  if (doors.empty()) throw Error(ErrorCode::kNoDoors, "no door plane available for the handle");
  std::size_t best = 0;
  double best_d = doors[0].distance(handle_centroid);
  for (std::size_t i = 1; i < doors.size(); ++i) {
    const double d = doors[i].distance(handle_centroid);
    if (d < best_d) {
      best = i;
      best_d = d;
    }
  }
  return best;
}

std::uint64_t box_seed(std::uint64_t base_seed, const BoundingBox& box) {
  std::uint64_t s = base_seed;
  s = text::mix_seed(s, static_cast<std::uint64_t>(box.label));
  s = text::mix_seed(s, static_cast<std::uint64_t>(box.x_min));
  s = text::mix_seed(s, static_cast<std::uint64_t>(box.y_min));
  s = text::mix_seed(s, static_cast<std::uint64_t>(box.x_max));
  s = text::mix_seed(s, static_cast<std::uint64_t>(box.y_max));
  return s;
}

DoorPlane extract_door_plane(const PointCloud& cloud, const BoundingBox& box, const GraspConfig& config,
                             std::uint64_t seed) {
  const PointSet roi = gather(cloud, roi_segment(cloud, box));
  const PointSet denoised = remove_statistical_outliers(roi, config.k_neighbors, config.alpha);
  const PointSet filtered = voxel_downsample(denoised, config.leaf);
  const PlaneModel plane = ransac_plane(filtered, config.plane_threshold, config.ransac_iters, seed);
  PointSet door;
  door.reserve(plane.inliers.size());
  for (std::size_t i : plane.inliers) door.push_back(filtered[i]);
  return {plane.normal, centroid(door), 0};
}

HandleDetection extract_handle(const PointCloud& cloud, const BoundingBox& box, const GraspConfig& config,
                               std::uint64_t seed) {
  const PointSet roi = gather(cloud, roi_segment(cloud, box));
  const PointSet handle = split_handle_from_background(roi, config.plane_threshold, seed, config.ransac_iters);
  HandleDetection h;
  h.orientation = classify_orientation(box);
  h.centroid = centroid(handle);
  h.source_box = box;
  return h;
}

GraspReport estimate_grasp_poses(const PointCloud& cloud, std::span<const BoundingBox> boxes,
                                 const GraspConfig& config) {
  using Outcome = std::variant<std::monostate, DoorPlane, HandleDetection, GraspFailure>;
  std::vector<Outcome> outcome(boxes.size());
  parallel_for(boxes.size(), config.threads, [&](std::size_t i) {
    const BoundingBox& box = boxes[i];
    try {
      const std::uint64_t seed = box_seed(config.seed, box);
      if (box.label == ObjectClass::kHandle) {
        outcome[i] = extract_handle(cloud, box, config, seed);
      } else {
        DoorPlane door = extract_door_plane(cloud, box, config, seed);
        door.box_index = i;
        outcome[i] = door;
      }
    } catch (const Error& e) {
      outcome[i] = GraspFailure{i, e.code(), e.what()};
    }
  });

  GraspReport report;
  for (const auto& o : outcome) {
    if (const auto* d = std::get_if<DoorPlane>(&o)) report.doors.push_back(*d);
  }
  for (std::size_t i = 0; i < boxes.size(); ++i) {
    if (const auto* f = std::get_if<GraspFailure>(&outcome[i])) {
      report.failures.push_back(*f);
      continue;
    }
    const auto* h = std::get_if<HandleDetection>(&outcome[i]);
    if (h == nullptr) continue;
    try {
      const std::size_t door = assign_closest_door(h->centroid, report.doors);
      GraspPose g;
      g.handle_pose = handle_transform(report.doors[door].normal, h->centroid);
      g.pose = compose(g.handle_pose, config.offset_for(h->orientation));
      g.handle_index = i;
      g.door_index = report.doors[door].box_index;
      g.orientation = h->orientation;
      report.grasps.push_back(g);
    } catch (const Error& e) {
      report.failures.push_back({i, e.code(), e.what()});
    }
  }
  return report;
}

std::string format_grasp_line(const GraspPose& g) {
  return std::to_string(g.handle_index) + ' ' + std::to_string(g.door_index) + ' ' + format_pose(g.pose);
}

std::string format_failure_line(const GraspFailure& f) {
  return "failure " + std::to_string(f.box_index) + ' ' + std::string(to_string(f.code)) + ' ' + f.message;
}

}  // namespace doorkin
