#include <gtest/gtest.h>

#include <numbers>
#include <random>

#include "doorkin/error.hpp"
#include "doorkin/kinfit.hpp"
#include "doorkin/tsr.hpp"
#include "support.hpp"

namespace doorkin {
namespace {

using testing::random_pose;
using testing::random_unit;
using testing::ValidRotation;

constexpr double kPi = std::numbers::pi;

Pose grasp_at(const Vec3& p, const Vec3& normal) { return handle_transform(normal, p); }

RevoluteModel random_revolute(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> r(0.3, 1.2);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  return RevoluteModel{Vec3(u(rng), u(rng), u(rng)), random_unit(rng), r(rng)};
}

// Point on the circle at a random phase, slightly off the model.
Pose revolute_grasp(const RevoluteModel& m, std::mt19937_64& rng) {
  const Vec3 n = m.normal.normalized();
  Vec3 y = n.unitOrthogonal();
  y = axis_angle(n, std::uniform_real_distribution<double>(-kPi, kPi)(rng)) * y;
  return Pose{axis_angle(random_unit(rng), 0.7), m.center + 1.01 * m.radius * y + 0.01 * n};
}

TEST(TsrFromPrismatic, BoundPattern) {
  const PrismaticModel m{Vec3(1, 0, 1), Vec3(-1, 0, 0)};
  const TsrSpec spec = tsr_from_prismatic(m, 0.3, grasp_at(Vec3(1, 0, 1), Vec3(-1, 0, 0)));
  for (std::size_t i = 0; i < 6; ++i) {
    EXPECT_EQ(spec.bounds[i].lo, i == 2 ? -0.3 : 0.0) << i;
    EXPECT_EQ(spec.bounds[i].hi, 0.0) << i;
  }
  EXPECT_EQ(tsr_free_axes(spec), 1);
  EXPECT_TRUE(ValidRotation(spec.t_o_w.rotation));
  EXPECT_TRUE(ValidRotation(spec.t_w_e.rotation));
  EXPECT_NEAR((spec.t_o_w.rotation.col(2) - Vec3(1, 0, 0)).norm(), 0.0, 1e-12);
}

TEST(TsrFromPrismatic, RejectsNonpositiveTravel) {
  const PrismaticModel m;
  for (double d : {0.0, -0.1, std::numeric_limits<double>::quiet_NaN()}) {
    try {
      tsr_from_prismatic(m, d, Pose{});
      ADD_FAILURE() << d;
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), ErrorCode::kNonpositiveTravel);
    }
  }
}

TEST(TsrFromPrismatic, GraspAxisParallelToDirection) {
  // Grasp x along the slide: the frame falls back to the grasp y-axis.
  const PrismaticModel m{Vec3::Zero(), Vec3::UnitX()};
  const TsrSpec spec = tsr_from_prismatic(m, 0.2, Pose{});
  EXPECT_TRUE(ValidRotation(spec.t_o_w.rotation));
  EXPECT_TRUE(tsr_contains(spec, move_along(m, Pose{}, 0.1)));
}

TEST(TsrFromRevolute, BoundPattern) {
  const RevoluteModel m{Vec3(1, 1, 0), Vec3::UnitZ(), 0.8};
  const TsrSpec spec = tsr_from_revolute(m, kPi / 2, Pose{Mat3::Identity(), Vec3(1.8, 1, 0)});
  for (std::size_t i = 0; i < 6; ++i) {
    EXPECT_EQ(spec.bounds[i].lo, i == 3 ? -kPi / 2 : 0.0) << i;
    EXPECT_EQ(spec.bounds[i].hi, 0.0) << i;
  }
  EXPECT_EQ(tsr_free_axes(spec), 1);
  EXPECT_NEAR((spec.t_o_w.translation - m.center).norm(), 0.0, 1e-12);
  EXPECT_NEAR((spec.t_w_e.translation - Vec3(0, 0.8, 0)).norm(), 0.0, 1e-12);
}

TEST(TsrFromRevolute, Rejections) {
  const RevoluteModel m{Vec3::Zero(), Vec3::UnitZ(), 0.5};
  for (double phi : {0.0, -1.0}) {
    try {
      tsr_from_revolute(m, phi, Pose::from_translation(Vec3(0.5, 0, 0)));
      ADD_FAILURE() << phi;
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), ErrorCode::kNonpositiveSweep);
    }
  }
  try {
    tsr_from_revolute(m, 1.0, Pose::from_translation(Vec3(0, 0, 0.3)));
    ADD_FAILURE();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kDegenerateInput);
  }
}

TEST(TsrContains, Examples) {
  const PrismaticModel m{Vec3(2, 0, 1), Vec3(-1, 0, 0)};
  const TsrSpec spec = tsr_from_prismatic(m, 0.3, grasp_at(Vec3(2, 0, 1), Vec3(-1, 0, 0)));
  EXPECT_TRUE(tsr_contains(spec, tsr_anchor(spec)));
  EXPECT_TRUE(tsr_contains(spec, tsr_pose_at(spec, {0, 0, -0.15, 0, 0, 0})));
  EXPECT_FALSE(tsr_contains(spec, tsr_pose_at(spec, {0, 0, -0.31, 0, 0, 0}), 1e-3));
  EXPECT_TRUE(tsr_contains(spec, tsr_pose_at(spec, {0, 0, -0.3005, 0, 0, 0}), 1e-3));
  EXPECT_FALSE(tsr_contains(spec, tsr_pose_at(spec, {0, 0, 0.01, 0, 0, 0})));
  EXPECT_FALSE(tsr_contains(spec, tsr_pose_at(spec, {0.01, 0, -0.1, 0, 0, 0})));
  EXPECT_FALSE(tsr_contains(spec, tsr_pose_at(spec, {0, 0, -0.1, 0, 0, 0.02})));
}

TEST(TsrContains, SingularPitchThrows) {
  const TsrSpec spec = tsr_from_prismatic(PrismaticModel{}, 0.3, Pose{});
  try {
    tsr_contains(spec, tsr_pose_at(spec, {0, 0, 0, 0, kPi / 2, 0}));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kRpySingularity);
  }
}

TEST(TsrProperty, PrismaticSweepAndSamples) {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 50; ++trial) {
    const PrismaticModel m{Vec3::Random(), random_unit(rng)};
    const Pose grasp{axis_angle(random_unit(rng), 1.0), m.origin + 0.3 * m.direction + 0.01 * m.direction.unitOrthogonal()};
    const double d = std::uniform_real_distribution<double>(0.01, 0.5)(rng);
    const TsrSpec spec = tsr_from_prismatic(m, d, grasp);
    const Pose anchor = tsr_anchor(spec);
    EXPECT_LE(residual(m, anchor.translation), 1e-9);
    for (int i = 0; i <= 20; ++i) {
      EXPECT_TRUE(tsr_contains(spec, move_along(m, anchor, d * i / 20.0), 1e-9));
    }
    for (int i = 0; i < 100; ++i) {
      const Pose s = tsr_sample(spec, rng);
      EXPECT_LE(residual(m, s.translation), 1e-6);
      EXPECT_TRUE(ValidRotation(s.rotation));
    }
  }
}

TEST(TsrProperty, RevoluteSweepAndSamples) {
  std::mt19937_64 rng(12);
  for (int trial = 0; trial < 50; ++trial) {
    const RevoluteModel m = random_revolute(rng);
    const double phi = std::uniform_real_distribution<double>(0.05, kPi / 2)(rng);
    const TsrSpec spec = tsr_from_revolute(m, phi, revolute_grasp(m, rng));
    const Pose anchor = tsr_anchor(spec);
    EXPECT_LE(residual(m, anchor.translation), 1e-9);
    for (int i = 0; i <= 20; ++i) {
      EXPECT_TRUE(tsr_contains(spec, move_along(m, anchor, phi * i / 20.0), 1e-9));
    }
    EXPECT_FALSE(tsr_contains(spec, move_along(m, anchor, -0.01), 1e-6));
    for (int i = 0; i < 100; ++i) {
      const Pose s = tsr_sample(spec, rng);
      EXPECT_LE(residual(m, s.translation), 1e-6);
      EXPECT_TRUE(ValidRotation(s.rotation));
    }
  }
}

TEST(TsrProperty, RigidEquivariance) {
  std::mt19937_64 rng(13);
  for (int trial = 0; trial < 30; ++trial) {
    const Pose t = random_pose(rng);
    const KinematicModel m = trial % 2 ? KinematicModel{random_revolute(rng)}
                                       : KinematicModel{PrismaticModel{Vec3::Random(), random_unit(rng)}};
    const Pose grasp = trial % 2 ? revolute_grasp(std::get<RevoluteModel>(m), rng) : random_pose(rng, 1.0);
    const double amount = 0.4;
    const TsrSpec a = tsr_from_model(m, amount, grasp);
    const TsrSpec b = tsr_from_model(transform_model(t, m), amount, compose(t, grasp));
    for (int i = 0; i < 20; ++i) {
      const Pose s = tsr_sample(a, rng);
      EXPECT_TRUE(tsr_contains(b, compose(t, s), 1e-7));
    }
    const Pose out = tsr_pose_at(a, {0, 0, 0, 0, 0, 0.3});
    EXPECT_FALSE(tsr_contains(b, compose(t, out), 1e-7));
  }
}

TEST(Rpy, RoundTrip) {
  std::mt19937_64 rng(14);
  std::uniform_real_distribution<double> a(-3.1, 3.1), p(-1.5, 1.5);
  for (int i = 0; i < 1000; ++i) {
    const Rpy in{a(rng), p(rng), a(rng)};
    const Mat3 r = rpy_to_rotation(in);
    EXPECT_TRUE(ValidRotation(r));
    const Rpy out = rotation_to_rpy(r);
    EXPECT_NEAR(out.roll, in.roll, 1e-9);
    EXPECT_NEAR(out.pitch, in.pitch, 1e-9);
    EXPECT_NEAR(out.yaw, in.yaw, 1e-9);
  }
}

TEST(Rpy, Convention) {
  const Mat3 r = rpy_to_rotation({0.0, 0.0, kPi / 2});
  EXPECT_NEAR((r * Vec3::UnitX() - Vec3::UnitY()).norm(), 0.0, 1e-12);
  const Mat3 roll = rpy_to_rotation({kPi / 2, 0.0, 0.0});
  EXPECT_NEAR((roll * Vec3::UnitY() - Vec3::UnitZ()).norm(), 0.0, 1e-12);
}

}  // namespace
}  // namespace doorkin
