#pragma once

#include <gtest/gtest.h>

#include <cstdint>
#include <random>

#include "doorkin/geometry.hpp"

namespace doorkin::testing {

inline ::testing::AssertionResult ValidRotation(const Mat3& r) {
  const double ortho = orthonormality_error(r);
  const double det = r.determinant();
  if (ortho < 1e-9 && std::abs(det - 1.0) < 1e-9) return ::testing::AssertionSuccess();
  return ::testing::AssertionFailure() << "orthonormality error " << ortho << ", det " << det;
}

inline Vec3 random_unit(std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  Vec3 v(n(rng), n(rng), n(rng));
  return v.normalized();
}

inline Pose random_pose(std::mt19937_64& rng, double spread = 2.0) {
  std::uniform_real_distribution<double> u(-spread, spread);
  std::uniform_real_distribution<double> ang(-3.0, 3.0);
  return Pose{axis_angle(random_unit(rng), ang(rng)), Vec3(u(rng), u(rng), u(rng))};
}

inline void ExpectPoseNear(const Pose& a, const Pose& b, double tol) {
  EXPECT_LE((a.rotation - b.rotation).cwiseAbs().maxCoeff(), tol);
  EXPECT_LE((a.translation - b.translation).cwiseAbs().maxCoeff(), tol);
}

}  // namespace doorkin::testing
