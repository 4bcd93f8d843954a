#include "doorkin/tsr.hpp"

#include <cmath>
#include <numbers>

#include "doorkin/error.hpp"

namespace doorkin {

Rpy rotation_to_rpy(const Mat3& r) {
  Rpy out;
  out.pitch = std::atan2(-r(2, 0), std::hypot(r(0, 0), r(1, 0)));
  if (std::abs(std::abs(out.pitch) - std::numbers::pi / 2) < 1e-6) {
    throw Error(ErrorCode::kRpySingularity, "pitch at +-pi/2, roll and yaw are not separable");
  }
  out.roll = std::atan2(r(2, 1), r(2, 2));
  out.yaw = std::atan2(r(1, 0), r(0, 0));
  return out;
}

Mat3 rpy_to_rotation(const Rpy& rpy) {
  return (Eigen::AngleAxisd(rpy.yaw, Vec3::UnitZ()) * Eigen::AngleAxisd(rpy.pitch, Vec3::UnitY()) *
          Eigen::AngleAxisd(rpy.roll, Vec3::UnitX()))
      .toRotationMatrix();
}

namespace {

Mat3 frame_from_axes(const Vec3& x, const Vec3& y) {
  Mat3 r;
  r.col(0) = x;
  r.col(1) = y;
  r.col(2) = x.cross(y);
  return r;
}

// Offset so that t_o_w * t_w_e == target.
Pose relative(const Pose& t_o_w, const Pose& target) { return compose(inverse(t_o_w), target); }

}  // namespace

TsrSpec tsr_from_prismatic(const PrismaticModel& model, double d, const Pose& grasp) {
  if (!(d > 0.0) || !std::isfinite(d)) throw Error(ErrorCode::kNonpositiveTravel, "prismatic travel must be > 0");
  const Vec3 z = -model.direction.normalized();
  Vec3 x = grasp.rotation.col(0) - grasp.rotation.col(0).dot(z) * z;
  if (x.norm() < 1e-6) x = grasp.rotation.col(1) - grasp.rotation.col(1).dot(z) * z;
  x.normalize();
  const Vec3 y = z.cross(x);

  TsrSpec spec;
  const Vec3 e = model.direction.normalized();
  const Vec3 origin = model.origin + (grasp.translation - model.origin).dot(e) * e;
  spec.t_o_w = Pose{frame_from_axes(x, y), origin};
  spec.t_w_e = relative(spec.t_o_w, Pose{grasp.rotation, origin});
  spec.bounds[2] = Interval{-d, 0.0};
  return spec;
}

TsrSpec tsr_from_revolute(const RevoluteModel& model, double phi, const Pose& grasp) {
  if (!(phi > 0.0) || !std::isfinite(phi)) throw Error(ErrorCode::kNonpositiveSweep, "revolute sweep must be > 0");
  const Vec3 n = model.normal.normalized();
  const Vec3 x = -n;
  const Vec3 v = grasp.translation - model.center;
  Vec3 y = v - v.dot(n) * n;
  if (y.norm() < 1e-9) throw Error(ErrorCode::kDegenerateInput, "grasp lies on the rotation axis");
  y.normalize();

  TsrSpec spec;
  spec.t_o_w = Pose{frame_from_axes(x, y), model.center};
  const Vec3 on_circle = model.center + model.radius * y;
  spec.t_w_e = relative(spec.t_o_w, Pose{grasp.rotation, on_circle});
  spec.bounds[3] = Interval{-phi, 0.0};
  return spec;
}

TsrSpec tsr_from_model(const KinematicModel& model, double amount, const Pose& grasp) {
  if (const auto* p = std::get_if<PrismaticModel>(&model)) return tsr_from_prismatic(*p, amount, grasp);
  return tsr_from_revolute(std::get<RevoluteModel>(model), amount, grasp);
}

TsrDisplacement tsr_displacement(const TsrSpec& spec, const Pose& pose) {
  const Pose d = compose(compose(inverse(spec.t_o_w), pose), inverse(spec.t_w_e));
  const Rpy rpy = rotation_to_rpy(d.rotation);
  return {d.translation.x(), d.translation.y(), d.translation.z(), rpy.roll, rpy.pitch, rpy.yaw};
}

bool tsr_contains(const TsrSpec& spec, const Pose& pose, double tol) {
  const TsrDisplacement d = tsr_displacement(spec, pose);
  for (std::size_t i = 0; i < 6; ++i) {
    if (!spec.bounds[i].contains(d[i], tol)) return false;
  }
  return true;
}

Pose tsr_pose_at(const TsrSpec& spec, const TsrDisplacement& disp) {
  const Pose d{rpy_to_rotation({disp[3], disp[4], disp[5]}), Vec3(disp[0], disp[1], disp[2])};
  return compose(compose(spec.t_o_w, d), spec.t_w_e);
}

Pose tsr_anchor(const TsrSpec& spec) { return compose(spec.t_o_w, spec.t_w_e); }

Pose tsr_sample(const TsrSpec& spec, std::mt19937_64& rng) {
  TsrDisplacement disp{};
  for (std::size_t i = 0; i < 6; ++i) {
    const Interval& b = spec.bounds[i];
    disp[i] = b.width() > 0.0 ? std::uniform_real_distribution<double>(b.lo, b.hi)(rng) : b.lo;
  }
  return tsr_pose_at(spec, disp);
}

int tsr_free_axes(const TsrSpec& spec) {
  int n = 0;
  for (const auto& b : spec.bounds) n += (b.lo != 0.0 || b.hi != 0.0) ? 1 : 0;
  return n;
}

}  // namespace doorkin
