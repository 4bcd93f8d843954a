#include "doorkin/cloud.hpp"

#include <Eigen/Eigenvalues>

#include <array>
#include <cmath>
#include <map>
#include <random>

#include "doorkin/error.hpp"
#include "kdtree.hpp"

namespace doorkin {

PointCloud PointCloud::make(int width, int height) {
  if (width <= 0 || height <= 0) throw Error(ErrorCode::kInvalidArgument, "cloud dimensions must be positive");
  PointCloud c;
  c.width = width;
  c.height = height;
  c.points.assign(static_cast<std::size_t>(width) * static_cast<std::size_t>(height), std::nullopt);
  return c;
}

std::size_t PointCloud::valid_count() const {
  std::size_t n = 0;
  for (const auto& p : points) n += p.has_value();
  return n;
}

std::string_view to_string(ObjectClass c) {
  switch (c) {
    case ObjectClass::kDoor: return "door";
    case ObjectClass::kCabinetDoor: return "cabinet_door";
    case ObjectClass::kRefrigeratorDoor: return "refrigerator_door";
    case ObjectClass::kHandle: return "handle";
  }
  return "door";
}

ObjectClass parse_object_class(std::string_view s) {
  if (s == "door") return ObjectClass::kDoor;
  if (s == "cabinet_door") return ObjectClass::kCabinetDoor;
  if (s == "refrigerator_door") return ObjectClass::kRefrigeratorDoor;
  if (s == "handle") return ObjectClass::kHandle;
  throw Error(ErrorCode::kParse, "unknown object class '" + std::string(s) + "'");
}

bool BoundingBox::fits(const PointCloud& cloud) const {
  return x_min >= 0 && y_min >= 0 && x_min <= x_max && y_min <= y_max && x_max < cloud.width &&
         y_max < cloud.height;
}

std::vector<std::size_t> roi_segment(const PointCloud& cloud, const BoundingBox& box) {
  if (!box.fits(cloud)) throw Error(ErrorCode::kInvalidArgument, "bounding box outside the cloud");
  std::vector<std::size_t> out;
  for (int y = box.y_min; y <= box.y_max; ++y) {
    for (int x = box.x_min; x <= box.x_max; ++x) {
      const std::size_t j = cloud.index(x, y);
      if (cloud.points[j]) out.push_back(j);
    }
  }
  if (out.empty()) throw Error(ErrorCode::kEmptyRoi, "no valid points inside the bounding box");
  return out;
}

PointSet gather(const PointCloud& cloud, std::span<const std::size_t> indices) {
  PointSet out;
  out.reserve(indices.size());
  for (std::size_t j : indices) {
    if (j < cloud.points.size() && cloud.points[j]) out.push_back(*cloud.points[j]);
  }
  return out;
}

std::vector<std::size_t> statistical_inlier_indices(std::span<const Vec3> points, int k_neighbors, double alpha) {
  if (k_neighbors < 1) throw Error(ErrorCode::kInvalidArgument, "k_neighbors must be >= 1");
  if (alpha < 0.0) throw Error(ErrorCode::kInvalidArgument, "alpha must be >= 0");
  if (points.size() <= static_cast<std::size_t>(k_neighbors)) {
    throw Error(ErrorCode::kTooFewPoints, "statistical filter needs more points than neighbours");
  }
  const detail::KdTree tree(points);
  const std::size_t n = points.size();
  std::vector<double> r(n);
  for (std::size_t j = 0; j < n; ++j) {
    const auto d2 = tree.knn_sq_distances(j, static_cast<std::size_t>(k_neighbors));
    double sum = 0.0;
    for (double v : d2) sum += std::sqrt(v);
    r[j] = sum / static_cast<double>(d2.size());
  }
  double mean = 0.0;
  for (double v : r) mean += v;
  mean /= static_cast<double>(n);
  double var = 0.0;
  for (double v : r) var += (v - mean) * (v - mean);
  const double sd = std::sqrt(var / static_cast<double>(n));
  const double lo = mean - alpha * sd;
  const double hi = mean + alpha * sd;
  // Floating-point spread of identical r_j must not reject anything.
  const double slack = 1e-12 * std::max(1.0, std::abs(mean));
  std::vector<std::size_t> keep;
  keep.reserve(n);
  for (std::size_t j = 0; j < n; ++j) {
    if (r[j] >= lo - slack && r[j] <= hi + slack) keep.push_back(j);
  }
  return keep;
}

PointSet remove_statistical_outliers(std::span<const Vec3> points, int k_neighbors, double alpha) {
  const auto keep = statistical_inlier_indices(points, k_neighbors, alpha);
  PointSet out;
  out.reserve(keep.size());
  for (std::size_t j : keep) out.push_back(points[j]);
  return out;
}

std::vector<Voxel> voxelize(std::span<const Vec3> points, double leaf) {
  if (!(leaf > 0.0)) throw Error(ErrorCode::kInvalidArgument, "voxel leaf size must be positive");
  struct Acc {
    Vec3 sum = Vec3::Zero();
    std::size_t count = 0;
  };
  std::map<std::array<std::int64_t, 3>, Acc> grid;
  for (const Vec3& p : points) {
    const std::array<std::int64_t, 3> key{static_cast<std::int64_t>(std::floor(p.x() / leaf)),
                                          static_cast<std::int64_t>(std::floor(p.y() / leaf)),
                                          static_cast<std::int64_t>(std::floor(p.z() / leaf))};
    Acc& a = grid[key];
    a.sum += p;
    ++a.count;
  }
  std::vector<Voxel> out;
  out.reserve(grid.size());
  for (const auto& [key, acc] : grid) out.push_back({acc.sum / static_cast<double>(acc.count), acc.count});
  return out;
}

PointSet voxel_downsample(std::span<const Vec3> points, double leaf) {
  PointSet out;
  for (const Voxel& v : voxelize(points, leaf)) out.push_back(v.centroid);
  return out;
}

Vec3 centroid(std::span<const Vec3> points) {
  if (points.empty()) throw Error(ErrorCode::kEmptyInput, "centroid of an empty point set");
  Vec3 sum = Vec3::Zero();
  for (const Vec3& p : points) sum += p;
  return sum / static_cast<double>(points.size());
}

namespace {

struct PlaneHypothesis {
  Vec3 normal;
  double d;
};

std::size_t count_inliers(std::span<const Vec3> points, const PlaneHypothesis& h, double threshold) {
  std::size_t n = 0;
  for (const Vec3& p : points) n += std::abs(h.normal.dot(p) + h.d) <= threshold;
  return n;
}

bool all_collinear(std::span<const Vec3> points) {
  const Vec3& p0 = points[0];
  std::size_t far = 0;
  double best = 0.0;
  for (std::size_t i = 1; i < points.size(); ++i) {
    const double d = (points[i] - p0).squaredNorm();
    if (d > best) {
      best = d;
      far = i;
    }
  }
  if (best == 0.0) return true;
  const Vec3 dir = (points[far] - p0).normalized();
  const double tol = 1e-9 * std::sqrt(best);
  for (const Vec3& p : points) {
    if ((p - p0).cross(dir).norm() > tol) return false;
  }
  return true;
}

std::optional<PlaneHypothesis> tls_plane(std::span<const Vec3> points, std::span<const std::size_t> subset) {
  if (subset.size() < 3) return std::nullopt;
  Vec3 c = Vec3::Zero();
  for (std::size_t i : subset) c += points[i];
  c /= static_cast<double>(subset.size());
  Mat3 cov = Mat3::Zero();
  for (std::size_t i : subset) {
    const Vec3 q = points[i] - c;
    cov += q * q.transpose();
  }
  Eigen::SelfAdjointEigenSolver<Mat3> eig(cov);
  if (eig.info() != Eigen::Success) return std::nullopt;
  // Eigenvalues ascend: a plane needs the two largest to be non-trivial.
  if (eig.eigenvalues()(1) <= 1e-18 * std::max(1.0, eig.eigenvalues()(2))) return std::nullopt;
  const Vec3 n = eig.eigenvectors().col(0).normalized();
  return PlaneHypothesis{n, -n.dot(c)};
}

}  // namespace

PlaneModel ransac_plane(std::span<const Vec3> points, const RansacPlaneOptions& opt) {
  const std::size_t n = points.size();
  if (n < 3) throw Error(ErrorCode::kTooFewPoints, "plane fitting needs at least 3 points");
  if (opt.max_iters < 1) throw Error(ErrorCode::kInvalidArgument, "max_iters must be >= 1");
  if (!(opt.threshold > 0.0)) throw Error(ErrorCode::kInvalidArgument, "plane threshold must be positive");
  if (all_collinear(points)) throw Error(ErrorCode::kDegenerateInput, "all points are collinear");

  std::mt19937_64 rng(opt.seed);
  std::uniform_int_distribution<std::size_t> pick(0, n - 1);
  std::optional<PlaneHypothesis> best;
  std::size_t best_count = 0;
  int valid = 0;
  const long max_attempts = 50L * opt.max_iters + 1000;
  for (long attempt = 0; attempt < max_attempts && valid < opt.max_iters; ++attempt) {
    const std::size_t i0 = pick(rng);
    std::size_t i1 = pick(rng);
    std::size_t i2 = pick(rng);
    if (i0 == i1 || i0 == i2 || i1 == i2) continue;
    const Vec3 e1 = points[i1] - points[i0];
    const Vec3 e2 = points[i2] - points[i0];
    const Vec3 cr = e1.cross(e2);
    const double cn = cr.norm();
    if (!(cn > 1e-12 * e1.norm() * e2.norm()) || cn == 0.0) continue;
    ++valid;
    const PlaneHypothesis h{cr / cn, -(cr / cn).dot(points[i0])};
    const std::size_t count = count_inliers(points, h, opt.threshold);
    if (!best || count > best_count) {
      best = h;
      best_count = count;
      if (static_cast<double>(best_count) > opt.early_exit_ratio * static_cast<double>(n)) break;
    }
  }
  if (!best) throw Error(ErrorCode::kDegenerateInput, "no non-degenerate plane sample found");

  auto inliers_of = [&](const PlaneHypothesis& h) {
    std::vector<std::size_t> in;
    for (std::size_t i = 0; i < n; ++i) {
      if (std::abs(h.normal.dot(points[i]) + h.d) <= opt.threshold) in.push_back(i);
    }
    return in;
  };
  std::vector<std::size_t> inliers = inliers_of(*best);
  if (auto polished = tls_plane(points, inliers)) {
    auto polished_inliers = inliers_of(*polished);
    if (polished_inliers.size() >= inliers.size()) {
      best = polished;
      inliers = std::move(polished_inliers);
    }
  }

  PlaneModel model;
  model.normal = best->normal;
  model.d = best->d;
  if (model.d < 0.0) {
    model.normal = -model.normal;
    model.d = -model.d;
  }
  model.inliers = std::move(inliers);
  std::size_t k = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (k < model.inliers.size() && model.inliers[k] == i) {
      ++k;
    } else {
      model.outliers.push_back(i);
    }
  }
  return model;
}

PlaneModel ransac_plane(std::span<const Vec3> points, double dist_threshold, int max_iters, std::uint64_t seed) {
  RansacPlaneOptions opt;
  opt.threshold = dist_threshold;
  opt.max_iters = max_iters;
  opt.seed = seed;
  return ransac_plane(points, opt);
}

PointSet split_handle_from_background(std::span<const Vec3> roi_points, double dist_threshold, std::uint64_t seed,
                                      int max_iters) {
  const PlaneModel plane = ransac_plane(roi_points, dist_threshold, max_iters, seed);
  if (plane.outliers.empty()) {
    throw Error(ErrorCode::kNoOutliers, "handle is indistinguishable from the door plane");
  }
  PointSet out;
  out.reserve(plane.outliers.size());
  for (std::size_t i : plane.outliers) out.push_back(roi_points[i]);
  return out;
}

}  // namespace doorkin
