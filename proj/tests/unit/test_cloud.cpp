#include <gtest/gtest.h>

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <random>
#include <set>
#include <sstream>

#include "doorkin/cloud.hpp"
#include "doorkin/error.hpp"

namespace doorkin {
namespace {

ErrorCode code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error thrown";
  return ErrorCode::kInvalidArgument;
}

PointCloud dense_cloud(int w, int h) {
  PointCloud c = PointCloud::make(w, h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) c.points[c.index(x, y)] = Vec3(1.0, 0.01 * x, 0.01 * y);
  }
  return c;
}

// Brute-force mean k-NN distances.
std::vector<double> mean_knn(const std::vector<Vec3>& pts, int k) {
  std::vector<double> r;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    std::vector<double> d;
    for (std::size_t j = 0; j < pts.size(); ++j) {
      if (j != i) d.push_back((pts[i] - pts[j]).norm());
    }
    std::sort(d.begin(), d.end());
    double s = 0.0;
    for (int q = 0; q < k; ++q) s += d[q];
    r.push_back(s / k);
  }
  return r;
}

std::vector<std::size_t> brute_inliers(const std::vector<Vec3>& pts, int k, double alpha) {
  const std::vector<double> r = mean_knn(pts, k);
  double mu = 0.0;
  for (double x : r) mu += x;
  mu /= r.size();
  double var = 0.0;
  for (double x : r) var += (x - mu) * (x - mu);
  const double sd = std::sqrt(var / r.size());
  std::vector<std::size_t> keep;
  for (std::size_t i = 0; i < r.size(); ++i) {
    if (r[i] >= mu - alpha * sd && r[i] <= mu + alpha * sd) keep.push_back(i);
  }
  return keep;
}

TEST(RoiSegment, IndexCorrespondence) {
  PointCloud c = PointCloud::make(640, 4);
  c.points[c.index(10, 2)] = Vec3(1, 0, 0);
  EXPECT_EQ(c.index(10, 2), 1290u);
  const auto idx = roi_segment(c, BoundingBox{ObjectClass::kDoor, 10, 2, 10, 2});
  ASSERT_EQ(idx.size(), 1u);
  EXPECT_EQ(idx[0], 1290u);
}

TEST(RoiSegment, SmallBoxAndFullImage) {
  const PointCloud c = dense_cloud(4, 4);
  EXPECT_EQ(roi_segment(c, BoundingBox{ObjectClass::kDoor, 1, 1, 2, 2}), (std::vector<std::size_t>{5, 6, 9, 10}));
  EXPECT_EQ(roi_segment(c, BoundingBox{ObjectClass::kDoor, 0, 0, 3, 3}).size(), 16u);
}

TEST(RoiSegment, SkipsInvalidAndReportsEmpty) {
  PointCloud c = dense_cloud(4, 4);
  c.points[5].reset();
  EXPECT_EQ(roi_segment(c, BoundingBox{ObjectClass::kDoor, 1, 1, 2, 2}), (std::vector<std::size_t>{6, 9, 10}));
  c.points[6].reset();
  c.points[9].reset();
  c.points[10].reset();
  EXPECT_EQ(code_of([&] { roi_segment(c, BoundingBox{ObjectClass::kDoor, 1, 1, 2, 2}); }), ErrorCode::kEmptyRoi);
  EXPECT_EQ(code_of([&] { roi_segment(c, BoundingBox{ObjectClass::kDoor, 0, 0, 4, 3}); }),
            ErrorCode::kInvalidArgument);
}

TEST(RoiSegment, Idempotent) {
  PointCloud c = dense_cloud(8, 6);
  c.points[c.index(3, 3)].reset();
  const BoundingBox box{ObjectClass::kHandle, 2, 1, 6, 4};
  const auto first = roi_segment(c, box);
  PointCloud cropped = PointCloud::make(8, 6);
  for (auto i : first) cropped.points[i] = c.points[i];
  EXPECT_EQ(roi_segment(cropped, box), first);
}

TEST(StatisticalFilter, GridPlusFarPointMatchesBruteForce) {
  std::vector<Vec3> pts;
  for (int i = 0; i < 10; ++i) {
    for (int j = 0; j < 10; ++j) pts.emplace_back(0.01 * i, 0.01 * j, 0.0);
  }
  pts.emplace_back(0.045, 0.045, 0.1);  // 10 spacings off the grid
  const auto keep = statistical_inlier_indices(pts, 20, 1.0);
  EXPECT_EQ(keep, brute_inliers(pts, 20, 1.0));
  EXPECT_EQ(std::count(keep.begin(), keep.end(), pts.size() - 1), 0);
}

TEST(StatisticalFilter, RandomCloudsMatchBruteForce) {
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<Vec3> pts(60 + trial * 5);
    for (auto& p : pts) p = Vec3(u(rng), u(rng), 0.2 * u(rng));
    const int k = 1 + trial % 10;
    const double alpha = 0.5 + 0.1 * trial;
    EXPECT_EQ(statistical_inlier_indices(pts, k, alpha), brute_inliers(pts, k, alpha)) << trial;
  }
}

TEST(StatisticalFilter, DegenerateSpreadKeepsAll) {
  // Vertices of a regular tetrahedron: identical r_j, sigma 0.
  const std::vector<Vec3> pts{{1, 1, 1}, {1, -1, -1}, {-1, 1, -1}, {-1, -1, 1}};
  EXPECT_EQ(remove_statistical_outliers(pts, 2, 0.0).size(), 4u);
  std::vector<Vec3> line;
  for (int i = 0; i < 30; ++i) line.emplace_back(0.1 * i * i, 0, 0);
  EXPECT_EQ(remove_statistical_outliers(line, 3, 1e6).size(), line.size());
}

TEST(StatisticalFilter, MonotoneShrinkage) {
  std::mt19937_64 rng(4);
  std::normal_distribution<double> n(0.0, 0.05);
  std::vector<Vec3> pts(300);
  for (auto& p : pts) p = Vec3(n(rng), n(rng), n(rng));
  const PointSet once = remove_statistical_outliers(pts, 10, 1.0);
  const PointSet twice = remove_statistical_outliers(once, 10, 1.0);
  EXPECT_LE(twice.size(), once.size());
  for (const auto& p : twice) EXPECT_NE(std::find(once.begin(), once.end(), p), once.end());
}

TEST(StatisticalFilter, TooFewPoints) {
  const std::vector<Vec3> pts(5, Vec3::Zero());
  EXPECT_EQ(code_of([&] { statistical_inlier_indices(pts, 5, 1.0); }), ErrorCode::kTooFewPoints);
}

TEST(Voxel, Examples) {
  const std::vector<Vec3> two{{0, 0, 0}, {0.2, 0, 0}};
  const PointSet one = voxel_downsample(two, 1.0);
  ASSERT_EQ(one.size(), 1u);
  EXPECT_NEAR(one[0].x(), 0.1, 1e-15);

  const std::vector<Vec3> apart{{0.05, 0.05, 0.05}, {1.05, 1.05, 1.05}, {2.05, 0.05, 3.05}};
  const PointSet same = voxel_downsample(apart, 0.5);
  ASSERT_EQ(same.size(), 3u);
  for (const auto& p : apart) EXPECT_NE(std::find(same.begin(), same.end(), p), same.end());
  EXPECT_TRUE(voxel_downsample(std::vector<Vec3>{}, 0.1).empty());
}

TEST(Voxel, UniformCubeMatchesBucketing) {
  std::mt19937_64 rng(99);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<Vec3> pts(1000);
  for (auto& p : pts) p = Vec3(u(rng), u(rng), u(rng));
  const auto voxels = voxelize(pts, 0.25);
  EXPECT_LE(voxels.size(), 64u);

  std::map<std::array<long, 3>, std::pair<Vec3, std::size_t>> buckets;
  for (const auto& p : pts) {
    const std::array<long, 3> key{static_cast<long>(std::floor(p.x() / 0.25)),
                                  static_cast<long>(std::floor(p.y() / 0.25)),
                                  static_cast<long>(std::floor(p.z() / 0.25))};
    auto& b = buckets.try_emplace(key, Vec3::Zero(), 0).first->second;
    b.first += p;
    ++b.second;
  }
  ASSERT_EQ(voxels.size(), buckets.size());
  std::size_t i = 0;
  Vec3 total = Vec3::Zero(), downsampled = Vec3::Zero();
  for (const auto& [key, b] : buckets) {
    EXPECT_EQ(voxels[i].count, b.second);
    EXPECT_LE((voxels[i].centroid - b.first / static_cast<double>(b.second)).norm(), 1e-12);
    total += b.first;
    downsampled += voxels[i].centroid;
    ++i;
  }
  EXPECT_LE((total / 1000.0 - downsampled / voxels.size()).norm(), 0.05);
}

TEST(Voxel, MassConservation) {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(-3.0, 3.0);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<Vec3> pts(200 + trial);
    Vec3 sum = Vec3::Zero();
    for (auto& p : pts) {
      p = Vec3(u(rng), u(rng), u(rng));
      sum += p;
    }
    Vec3 mass = Vec3::Zero();
    for (const auto& v : voxelize(pts, 0.3 + 0.02 * trial)) mass += v.centroid * static_cast<double>(v.count);
    EXPECT_LE((mass - sum).cwiseAbs().maxCoeff(), 1e-9 * pts.size());
  }
}

TEST(RansacPlane, NoiselessAndMinimal) {
  std::vector<Vec3> pts;
  for (int i = 0; i < 10; ++i) {
    for (int j = 0; j < 10; ++j) pts.emplace_back(0.1 * i, 0.1 * j, 0.0);
  }
  const PlaneModel m = ransac_plane(pts, 0.01, 100, 1);
  EXPECT_NEAR(std::abs(m.normal.z()), 1.0, 1e-12);
  EXPECT_LE(std::abs(m.d), 1e-9);
  EXPECT_EQ(m.inliers.size(), pts.size());

  const std::vector<Vec3> three{{0, 0, 0}, {1, 0, 0}, {0, 1, 0}};
  const PlaneModel t = ransac_plane(three, 0.01, 10, 1);
  EXPECT_NEAR(std::abs(t.normal.z()), 1.0, 1e-12);
}

TEST(RansacPlane, NoisyWithOutliersAgainstKnownInlierFit) {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::normal_distribution<double> n(0.0, 0.003);
  std::vector<Vec3> pts;
  std::vector<Vec3> true_inliers;
  for (int i = 0; i < 700; ++i) {
    true_inliers.emplace_back(u(rng), u(rng), n(rng));
    pts.push_back(true_inliers.back());
  }
  for (int i = 0; i < 300; ++i) pts.emplace_back(u(rng), u(rng), u(rng));
  const PlaneModel m = ransac_plane(pts, 0.01, 500, 3);
  // Oracle: total-least-squares normal of the generated inliers.
  Vec3 c = Vec3::Zero();
  for (const auto& p : true_inliers) c += p;
  c /= true_inliers.size();
  Mat3 cov = Mat3::Zero();
  for (const auto& p : true_inliers) cov += (p - c) * (p - c).transpose();
  const Vec3 oracle = Eigen::SelfAdjointEigenSolver<Mat3>(cov).eigenvectors().col(0);
  const double deg = std::acos(std::min(1.0, std::abs(oracle.dot(m.normal)))) * 180.0 / std::numbers::pi;
  EXPECT_LT(deg, 2.0);
  EXPECT_LT(std::acos(std::abs(m.normal.z())) * 180.0 / std::numbers::pi, 2.0);
  for (auto i : m.inliers) EXPECT_LE(std::abs(m.signed_distance(pts[i])), 0.01 + 1e-12);
  EXPECT_EQ(m.inliers.size() + m.outliers.size(), pts.size());
}

TEST(RansacPlane, SensorSideAndDeterminism) {
  std::vector<Vec3> pts;
  for (int i = 0; i < 20; ++i) {
    for (int j = 0; j < 20; ++j) pts.emplace_back(2.0, 0.05 * i - 0.5, 0.05 * j - 0.5);
  }
  const PlaneModel a = ransac_plane(pts, 0.01, 200, 42);
  EXPECT_GE(a.d, 0.0);
  EXPECT_NEAR(a.normal.x(), -1.0, 1e-9);
  const PlaneModel b = ransac_plane(pts, 0.01, 200, 42);
  EXPECT_EQ(a.normal, b.normal);
  EXPECT_EQ(a.d, b.d);
  EXPECT_EQ(a.inliers, b.inliers);
}

TEST(RansacPlane, CollinearAndTooFew) {
  const std::vector<Vec3> line{{0, 0, 0}, {1, 0, 0}, {2, 0, 0}, {3, 0, 0}};
  EXPECT_EQ(code_of([&] { ransac_plane(line, 0.01, 50, 0); }), ErrorCode::kDegenerateInput);
  const std::vector<Vec3> two{{0, 0, 0}, {1, 0, 0}};
  EXPECT_EQ(code_of([&] { ransac_plane(two, 0.01, 50, 0); }), ErrorCode::kTooFewPoints);
}

TEST(Centroid, Examples) {
  EXPECT_EQ(centroid(std::vector<Vec3>{{0, 0, 0}, {2, 0, 0}}), Vec3(1, 0, 0));
  EXPECT_EQ(centroid(std::vector<Vec3>{{1, 2, 3}}), Vec3(1, 2, 3));
  std::vector<Vec3> cube;
  for (int i = 0; i < 8; ++i) cube.emplace_back(i & 1, (i >> 1) & 1, (i >> 2) & 1);
  EXPECT_EQ(centroid(cube), Vec3(0.5, 0.5, 0.5));
  EXPECT_EQ(code_of([] { centroid(std::vector<Vec3>{}); }), ErrorCode::kEmptyInput);
}

TEST(SplitHandle, ProtrusionIsReturned) {
  std::vector<Vec3> pts;
  for (int i = 0; i < 20; ++i) {
    for (int j = 0; j < 10; ++j) pts.emplace_back(0.02 * i, 0.02 * j, 0.0);
  }
  std::set<std::array<double, 3>> handle;
  for (int i = 0; i < 30; ++i) {
    pts.emplace_back(0.1 + 0.005 * (i % 6), 0.08 + 0.005 * (i / 6), 0.04);
    handle.insert({pts.back().x(), pts.back().y(), pts.back().z()});
  }
  const PointSet out = split_handle_from_background(pts, 0.01, 5);
  std::set<std::array<double, 3>> got;
  for (const auto& p : out) got.insert({p.x(), p.y(), p.z()});
  EXPECT_EQ(got, handle);
}

TEST(SplitHandle, BothSidesAndPlanar) {
  std::vector<Vec3> pts;
  for (int i = 0; i < 20; ++i) {
    for (int j = 0; j < 10; ++j) pts.emplace_back(0.02 * i, 0.02 * j, 0.0);
  }
  EXPECT_EQ(code_of([&] { split_handle_from_background(pts, 0.01, 1); }), ErrorCode::kNoOutliers);
  for (int i = 0; i < 10; ++i) {
    pts.emplace_back(0.1 + 0.01 * i, 0.1, 0.03);
    pts.emplace_back(0.1 + 0.01 * i, 0.1, -0.03);
  }
  const PointSet out = split_handle_from_background(pts, 0.01, 1);
  EXPECT_EQ(out.size(), 20u);
  for (const auto& p : out) EXPECT_NEAR(std::abs(p.z()), 0.03, 1e-15);
}

TEST(CloudFiles, RoundTrip) {
  PointCloud c = dense_cloud(3, 2);
  c.points[4].reset();
  std::stringstream ss;
  write_opc(ss, c);
  const PointCloud back = read_opc(ss, "mem");
  EXPECT_EQ(back.width, 3);
  EXPECT_EQ(back.height, 2);
  EXPECT_EQ(back.points, c.points);

  const std::vector<BoundingBox> boxes{{ObjectClass::kCabinetDoor, 0, 1, 2, 3, 0.75},
                                       {ObjectClass::kHandle, 4, 5, 6, 7, 1.0}};
  std::stringstream bs;
  write_boxes(bs, boxes);
  const auto b2 = read_boxes(bs, "mem");
  ASSERT_EQ(b2.size(), 2u);
  EXPECT_EQ(b2[0].label, ObjectClass::kCabinetDoor);
  EXPECT_EQ(b2[1].x_max, 6);
  EXPECT_EQ(b2[0].confidence, 0.75);
}

TEST(CloudFiles, ErrorsCarryLineNumbers) {
  std::stringstream bad("OPC 2 1\n0 0 0\n1 x 0\n");
  try {
    read_opc(bad, "c.opc");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kParse);
    EXPECT_NE(std::string(e.what()).find("c.opc:3"), std::string::npos) << e.what();
  }
  std::stringstream bb("door 0 0 1 1 0.5\nwindow 0 0 1 1 0.5\n");
  try {
    read_boxes(bb, "b.boxes");
    FAIL();
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("b.boxes:2"), std::string::npos) << e.what();
  }
}

}  // namespace
}  // namespace doorkin
