#pragma once

#include <array>
#include <cstdint>
#include <random>

#include "doorkin/geometry.hpp"
#include "doorkin/kinfit.hpp"

namespace doorkin {

/// Roll, pitch, yaw for R = Rz(yaw) * Ry(pitch) * Rx(roll).
struct Rpy {
  double roll = 0.0;
  double pitch = 0.0;
  double yaw = 0.0;
};

/// Throws Error(kRpySingularity) when pitch is within 1e-6 of +-pi/2.
Rpy rotation_to_rpy(const Mat3& r);
Mat3 rpy_to_rotation(const Rpy& rpy);

/// Displacement inside the TSR frame: x, y, z (meters), roll, pitch, yaw (radians).
using TsrDisplacement = std::array<double, 6>;

/// Task space region: end-effector poses t_o_w * D * t_w_e where D is a
/// displacement whose six components lie inside `bounds`.
struct TsrSpec {
  Pose t_o_w;
  Pose t_w_e;
  std::array<Interval, 6> bounds{};
};

/// Prismatic frame: z = -direction, x = grasp x-axis made orthogonal to z
/// (grasp y-axis when the x-axis is parallel), origin at the grasp position
/// projected onto the line. Pulling by d along the direction is z in [-d, 0].
/// Throws Error(kNonpositiveTravel) unless d > 0.
TsrSpec tsr_from_prismatic(const PrismaticModel& model, double d, const Pose& grasp);

/// Revolute frame: x = -normal, y = in-plane direction from the center toward
/// the grasp, origin at the center; t_w_e holds the (0, r, 0) radius offset.
/// Opening by phi about the normal is roll in [-phi, 0].
/// Throws Error(kNonpositiveSweep) unless phi > 0, Error(kDegenerateInput)
/// when the grasp projects onto the center.
TsrSpec tsr_from_revolute(const RevoluteModel& model, double phi, const Pose& grasp);

TsrSpec tsr_from_model(const KinematicModel& model, double amount, const Pose& grasp);

/// Displacement of `pose` in the TSR frame.
TsrDisplacement tsr_displacement(const TsrSpec& spec, const Pose& pose);

bool tsr_contains(const TsrSpec& spec, const Pose& pose, double tol = 1e-9);

Pose tsr_pose_at(const TsrSpec& spec, const TsrDisplacement& disp);

/// Zero displacement: the grasp moved onto the model.
Pose tsr_anchor(const TsrSpec& spec);

/// Uniform draw from the bounds box.
Pose tsr_sample(const TsrSpec& spec, std::mt19937_64& rng);

/// Number of bound rows other than [0, 0].
int tsr_free_axes(const TsrSpec& spec);

}  // namespace doorkin
