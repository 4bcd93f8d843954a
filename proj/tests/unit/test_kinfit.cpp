#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "doorkin/doorsim.hpp"
#include "doorkin/error.hpp"
#include "doorkin/kinfit.hpp"
#include "support.hpp"

namespace doorkin {
namespace {

double deg(double rad) { return rad * 180.0 / std::numbers::pi; }

ErrorCode code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error thrown";
  return ErrorCode::kInvalidArgument;
}

Trajectory from_points(const std::vector<Vec3>& pts) {
  Trajectory t;
  for (const auto& p : pts) t.observations.push_back(Pose::from_translation(p));
  return t;
}

DoorSpec arc_door(double radius, double sweep, double sigma, double rate) {
  DoorSpec d = make_revolute_door(Vec3(1.2, 0.1, 0.9), Vec3(-1, 0, 0), radius, 1, sweep, sigma, rate);
  return d;
}

TEST(Residual, Examples) {
  const PrismaticModel line{Vec3::Zero(), Vec3::UnitZ()};
  EXPECT_DOUBLE_EQ(residual(line, Vec3(1, 0, 5)), 1.0);
  const RevoluteModel circle{Vec3::Zero(), Vec3::UnitZ(), 1.0};
  EXPECT_DOUBLE_EQ(residual(circle, Vec3(2, 0, 0)), 1.0);
  EXPECT_DOUBLE_EQ(residual(circle, Vec3(1, 0, 0.5)), 0.5);
  EXPECT_EQ(residual(circle, Vec3(0, 1, 0)), 0.0);
  EXPECT_EQ(residual(line, Vec3(0, 0, -3)), 0.0);
}

TEST(Residual, NonNegative) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(-3, 3);
  const RevoluteModel circle{Vec3(0.1, 0.2, 0.3), testing::random_unit(rng), 0.8};
  const PrismaticModel line{Vec3(1, 2, 3), testing::random_unit(rng)};
  for (int i = 0; i < 1000; ++i) {
    const Vec3 p(u(rng), u(rng), u(rng));
    EXPECT_GE(residual(circle, p), 0.0);
    EXPECT_GE(residual(line, p), 0.0);
  }
}

TEST(MinimalFits, Prismatic) {
  const PrismaticModel m = fit_minimal_prismatic(Vec3::Zero(), Vec3(0, 0, 2));
  EXPECT_EQ(m.origin, Vec3::Zero());
  EXPECT_EQ(m.direction, Vec3::UnitZ());
  EXPECT_NEAR((fit_minimal_prismatic(Vec3::Zero(), Vec3(3, 4, 0)).direction - Vec3(0.6, 0.8, 0)).norm(), 0.0, 1e-15);
  EXPECT_EQ(code_of([] { fit_minimal_prismatic(Vec3(1, 1, 1), Vec3(1, 1, 1)); }), ErrorCode::kCoincidentPoints);
}

TEST(MinimalFits, Revolute) {
  const RevoluteModel m = fit_minimal_revolute(Vec3(1, 0, 0), Vec3(0, 1, 0), Vec3(-1, 0, 0));
  EXPECT_LE(m.center.norm(), 1e-12);
  EXPECT_NEAR(m.radius, 1.0, 1e-12);
  EXPECT_NEAR(m.normal.z(), 1.0, 1e-12);  // counter-clockwise traversal
  const RevoluteModel cw = fit_minimal_revolute(Vec3(-1, 0, 0), Vec3(0, 1, 0), Vec3(1, 0, 0));
  EXPECT_NEAR(cw.normal.z(), -1.0, 1e-12);

  const Vec3 c(1, 2, 3);
  auto on = [&](double t) -> Vec3 { return c + 2.0 * Vec3(std::cos(t), std::sin(t), 0.0); };
  const RevoluteModel g = fit_minimal_revolute(on(0.3), on(1.9), on(4.0));
  EXPECT_LE((g.center - c).norm(), 1e-9);
  EXPECT_NEAR(g.radius, 2.0, 1e-9);
  EXPECT_EQ(code_of([] { fit_minimal_revolute(Vec3::Zero(), Vec3(1, 1, 1), Vec3(2, 2, 2)); }),
            ErrorCode::kCollinearPoints);
}

TEST(Refine, NoiselessIsExact) {
  std::vector<Vec3> line, arc;
  for (int i = 0; i < 20; ++i) {
    line.push_back(Vec3(1, 2, 3) + 0.05 * i * Vec3(0.6, 0.0, 0.8));
    const double t = 0.05 * i;
    arc.push_back(Vec3(0.5, 0.5, 1.0) + 0.8 * Vec3(std::cos(t), std::sin(t), 0.0));
  }
  const KinematicModel l = refine_on_inliers(fit_minimal_prismatic(line[0], line[5]), line);
  const KinematicModel a = refine_on_inliers(fit_minimal_revolute(arc[0], arc[7], arc[19]), arc);
  for (const auto& p : line) EXPECT_LE(residual(l, p), 1e-9);
  for (const auto& p : arc) EXPECT_LE(residual(a, p), 1e-9);
}

TEST(Refine, NoisyLineAndArc) {
  std::mt19937_64 rng(31);
  std::normal_distribution<double> n(0.0, 0.005);
  const Vec3 e = Vec3(1, 1, 0.2).normalized();
  std::vector<Vec3> line, arc;
  for (int i = 0; i < 50; ++i) {
    line.push_back(0.02 * i * e + Vec3(n(rng), n(rng), n(rng)));
    const double t = std::numbers::pi / 2 * i / 49.0;
    arc.push_back(0.8 * Vec3(std::cos(t), std::sin(t), 0.0) + Vec3(n(rng), n(rng), n(rng)));
  }
  const auto l = std::get<PrismaticModel>(refine_on_inliers(fit_minimal_prismatic(line[0], line[49]), line));
  EXPECT_LT(deg(std::min(angle_between(l.direction, e), angle_between(l.direction, -e))), 1.0);
  const auto a = std::get<RevoluteModel>(refine_on_inliers(fit_minimal_revolute(arc[0], arc[25], arc[49]), arc));
  EXPECT_NEAR(a.radius, 0.8, 0.02);
}

TEST(Refine, NeverWorseThanInput) {
  std::mt19937_64 rng(32);
  std::normal_distribution<double> n(0.0, 0.01);
  std::vector<Vec3> arc;
  for (int i = 0; i < 30; ++i) {
    const double t = 0.04 * i;
    arc.push_back(Vec3(std::cos(t), std::sin(t), 0.0) + Vec3(n(rng), n(rng), n(rng)));
  }
  const KinematicModel start = fit_minimal_revolute(arc[0], arc[15], arc[29]);
  const KinematicModel refined = refine_on_inliers(start, arc);
  double before = 0.0, after = 0.0;
  for (const auto& p : arc) {
    before += residual(start, p);
    after += residual(refined, p);
  }
  EXPECT_LE(after, before);
  // Orientation of the input is kept.
  EXPECT_GT(std::get<RevoluteModel>(refined).normal.dot(std::get<RevoluteModel>(start).normal), 0.0);
}

TEST(Mlesac, NoiselessLineClosedForm) {
  std::vector<Vec3> pts;
  for (int i = 0; i < 50; ++i) pts.push_back(Vec3(1, 0, 0) + 0.02 * i * Vec3(0, 0.6, 0.8));
  MlesacConfig cfg;
  const FitResult f = mlesac_fit(from_points(pts), ModelKind::kPrismatic, cfg);
  for (const auto& p : pts) EXPECT_LE(residual(f.model, p), 1e-9);

  // Mixture at zero error: iterate gamma by hand from 0.5.
  const double phi0 = 1.0 / (cfg.sigma * std::sqrt(2.0 * std::numbers::pi));
  const double nu = f.outlier_range;
  double gamma = 0.5;
  for (int s = 0; s < cfg.em_steps; ++s) {
    gamma = std::min(1.0 - 1e-3, gamma * phi0 / (gamma * phi0 + (1.0 - gamma) / nu));
  }
  EXPECT_NEAR(f.gamma, gamma, 1e-12);
  EXPECT_NEAR(f.log_likelihood, 50.0 * std::log(gamma * phi0 + (1.0 - gamma) / nu), 1e-6);
  EXPECT_EQ(f.inlier_count(), 50u);
}

TEST(Mlesac, RevoluteWithOutliersAgainstLabels) {
  DoorSpec door = arc_door(0.8, std::numbers::pi / 2, 0.005, 0.2);
  const Vec3 mid = door.pose_at(door.travel_limit / 2).translation;
  door.outlier_volume = Aabb{mid - Vec3::Constant(0.5), mid + Vec3::Constant(0.5)};
  MlesacConfig cfg;
  cfg.outlier_range = 1.0;
  int ok = 0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const LabeledTrajectory lt = generate_labeled_trajectory(door, 60, seed);
    cfg.seed = seed;
    const FitResult f = mlesac_fit(lt.trajectory, ModelKind::kRevolute, cfg);
    const auto& m = std::get<RevoluteModel>(f.model);
    const auto& t = std::get<RevoluteModel>(door.true_model);
    std::size_t inliers = 0, flagged = 0;
    for (std::size_t j = 0; j < lt.is_outlier.size(); ++j) {
      if (lt.is_outlier[j]) continue;
      ++inliers;
      flagged += f.inlier_flags[j] ? 1 : 0;
    }
    const bool good = std::abs(m.radius - t.radius) <= 0.02 && deg(angle_between(m.normal, t.normal)) <= 2.0 &&
                      flagged >= 0.9 * inliers;
    ok += good ? 1 : 0;
  }
  EXPECT_GE(ok, 19);
}

TEST(Mlesac, EmTraceNonDecreasing) {
  const DoorSpec door = arc_door(0.9, 1.2, 0.005, 0.2);
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    MlesacConfig cfg;
    cfg.seed = seed;
    const Trajectory t = generate_trajectory(door, 40, seed);
    for (ModelKind k : {ModelKind::kPrismatic, ModelKind::kRevolute}) {
      const FitResult f = mlesac_fit(t, k, cfg);
      ASSERT_EQ(f.em_trace.size(), static_cast<std::size_t>(cfg.em_steps));
      for (std::size_t i = 1; i < f.em_trace.size(); ++i) EXPECT_GE(f.em_trace[i], f.em_trace[i - 1] - 1e-9);
      EXPECT_GE(f.gamma, 0.0);
      EXPECT_LE(f.gamma, 1.0);
    }
  }
}

TEST(Mlesac, RigidTransformInvariance) {
  const DoorSpec door = arc_door(0.85, 1.3, 0.005, 0.1);
  std::mt19937_64 rng(77);
  MlesacConfig cfg;
  cfg.outlier_range = 0.8;  // fixed, so the transform cannot change it
  for (int trial = 0; trial < 10; ++trial) {
    const Trajectory t = generate_trajectory(door, 30, 100 + trial);
    const Pose T = testing::random_pose(rng);
    Trajectory moved = t;
    for (auto& o : moved.observations) o = compose(T, o);
    for (ModelKind k : {ModelKind::kPrismatic, ModelKind::kRevolute}) {
      const FitResult f = mlesac_fit(t, k, cfg);
      const KinematicModel mapped = transform_model(T, f.model);
      for (std::size_t j = 0; j < t.size(); ++j) {
        EXPECT_NEAR(residual(mapped, moved.observations[j]), residual(f.model, t.observations[j]), 1e-9);
      }
    }
  }
}

TEST(Mlesac, SameSeedSameResultAcrossThreads) {
  const DoorSpec door = arc_door(0.8, 1.4, 0.005, 0.15);
  const Trajectory t = generate_trajectory(door, 80, 5);
  MlesacConfig one;
  one.seed = 9;
  one.hypotheses = 100;
  MlesacConfig many = one;
  many.threads = 8;
  for (ModelKind k : {ModelKind::kPrismatic, ModelKind::kRevolute}) {
    const FitResult a = mlesac_fit(t, k, one);
    const FitResult b = mlesac_fit(t, k, many);
    EXPECT_EQ(format_model(a.model), format_model(b.model));
    EXPECT_EQ(a.log_likelihood, b.log_likelihood);
    EXPECT_EQ(a.inlier_flags, b.inlier_flags);
  }
}

TEST(Mlesac, OrientedAlongObservationOrder) {
  const DoorSpec door = arc_door(0.8, 1.2, 0.002, 0.0);
  const Trajectory t = generate_trajectory(door, 30, 1);
  const auto first = t.observations.front().translation, last = t.observations.back().translation;
  const FitResult p = mlesac_fit(t, ModelKind::kPrismatic, MlesacConfig{});
  EXPECT_GT(std::get<PrismaticModel>(p.model).direction.dot(last - first), 0.0);
  const FitResult r = mlesac_fit(t, ModelKind::kRevolute, MlesacConfig{});
  EXPECT_GT(tangent_at(r.model, first).dot(t.observations[1].translation - first), 0.0);
}

TEST(Mlesac, LineFitsLinesBetterThanCircles) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<Vec3> pts;
  for (int i = 0; i < 30; ++i) pts.push_back(Vec3(0.2, 0.1, 0.0) + u(rng) * Vec3(1, -0.3, 0.2));
  const FitResult p = mlesac_fit(from_points(pts), ModelKind::kPrismatic, MlesacConfig{});
  double rp = 0.0;
  for (const auto& q : pts) rp += residual(p.model, q);
  EXPECT_LE(rp, 1e-9 * pts.size());
  try {
    const FitResult r = mlesac_fit(from_points(pts), ModelKind::kRevolute, MlesacConfig{});
    double rr = 0.0;
    for (const auto& q : pts) rr += residual(r.model, q);
    EXPECT_LE(rp, rr);
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kDegenerateInput);
  }
}

TEST(Mlesac, Errors) {
  const Trajectory one = from_points({Vec3::Zero()});
  EXPECT_EQ(code_of([&] { mlesac_fit(one, ModelKind::kPrismatic, MlesacConfig{}); }),
            ErrorCode::kTooFewObservations);
  const Trajectory two = from_points({Vec3::Zero(), Vec3::UnitX()});
  EXPECT_EQ(code_of([&] { mlesac_fit(two, ModelKind::kRevolute, MlesacConfig{}); }),
            ErrorCode::kTooFewObservations);
}

TEST(Mixture, DefaultOutlierRange) {
  EXPECT_NEAR(default_outlier_range(std::vector<Vec3>{Vec3::Zero(), Vec3(3, 4, 0)}), 5.0, 1e-15);
  EXPECT_EQ(default_outlier_range(std::vector<Vec3>{Vec3::Zero(), Vec3(0.01, 0, 0)}), 0.1);
}

TEST(TrajectoryText, RoundTripAndErrors) {
  const Trajectory t = generate_trajectory(arc_door(0.8, 1.0, 0.005, 0.2), 12, 4);
  Trajectory c = t;
  c.door_class = DoorClass::kRefrigeratorDoor;
  const std::string text = format_trajectory(c);
  EXPECT_EQ(text.rfind("TRAJ refrigerator_door 12\n", 0), 0u);
  const Trajectory back = parse_trajectory(text);
  EXPECT_EQ(back.door_class, DoorClass::kRefrigeratorDoor);
  ASSERT_EQ(back.size(), 12u);
  for (std::size_t i = 0; i < 12; ++i) {
    testing::ExpectPoseNear(back.observations[i], c.observations[i], 1e-14);
    EXPECT_TRUE(testing::ValidRotation(back.observations[i].rotation));
  }
  try {
    parse_trajectory("TRAJ door 2\n0 0 0 0 0 0 1\n", "x.traj");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kParse);
    EXPECT_NE(std::string(e.what()).find("x.traj"), std::string::npos);
  }
}

TEST(MoveAlong, StaysOnModel) {
  const RevoluteModel circle{Vec3(1, 1, 0), Vec3(0, 0, 1), 0.7};
  const Pose start = Pose::from_translation(Vec3(1.7, 1, 0));
  for (double a : {0.1, 0.7, -0.4, 3.0}) {
    const Pose p = move_along(circle, start, a);
    EXPECT_LE(residual(circle, p), 1e-12);
    EXPECT_TRUE(testing::ValidRotation(p.rotation));
    EXPECT_NEAR((p.translation - start.translation).norm(), 2 * 0.7 * std::sin(std::abs(a) / 2), 1e-12);
  }
}

}  // namespace
}  // namespace doorkin
