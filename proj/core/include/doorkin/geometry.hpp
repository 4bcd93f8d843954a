#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

#include <string>
#include <string_view>

namespace doorkin {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

/// Rigid transform in SE(3). Applying a pose to a point maps it from the
/// child frame into the parent frame: p_parent = rotation * p_child + translation.
struct Pose {
  Mat3 rotation = Mat3::Identity();
  Vec3 translation = Vec3::Zero();

  static Pose identity() { return {}; }
  static Pose from_translation(const Vec3& t) { return {Mat3::Identity(), t}; }

  Vec3 operator*(const Vec3& p) const { return rotation * p + translation; }
  Eigen::Matrix4d matrix() const;
};

/// Closed interval; meters for translation rows, radians for rotation rows.
struct Interval {
  double lo = 0.0;
  double hi = 0.0;

  bool contains(double x, double tol = 0.0) const { return x >= lo - tol && x <= hi + tol; }
  double width() const { return hi - lo; }
};

/// t1 then t2 expressed in t1's frame, i.e. the homogeneous product t1 * t2.
Pose compose(const Pose& t1, const Pose& t2);
Pose inverse(const Pose& p);

struct PoseDistance {
  double translation = 0.0;  // meters
  double rotation = 0.0;     // radians, geodesic angle in [0, pi]
};

PoseDistance pose_distance(const Pose& p1, const Pose& p2);

/// Handle frame from the door normal `a` and the handle centroid `origin`.
///
/// The rotation is [a | u | a x u] with u = (a_y, -a_x, 0) / sqrt(a_x^2 + a_y^2):
/// the first axis is the door normal and the second axis is horizontal. `a`
/// must be unit length within 1e-6; it is renormalized only when its norm is
/// off by more than 1e-12, otherwise it is copied verbatim into column 0.
///
/// Throws Error(kInvalidArgument) for a non-unit normal and
/// Error(kDegenerateNormal) when a_x^2 + a_y^2 < 1e-9.
Pose handle_transform(const Vec3& a, const Vec3& origin);

/// Rotation of `angle` radians about the unit `axis`.
Mat3 axis_angle(const Vec3& axis, double angle);

/// Infinity norm of R^T R - I.
double orthonormality_error(const Mat3& r);
bool is_valid_rotation(const Mat3& r, double tol = 1e-9);

/// Angle between two directions in radians, in [0, pi].
double angle_between(const Vec3& u, const Vec3& v);

/// One-line text form "tx ty tz qx qy qz qw" (unit quaternion, scalar last,
/// canonical sign qw >= 0), 17 significant digits per number.
std::string format_pose(const Pose& p);

/// Inverse of format_pose. The quaternion is normalized before conversion.
/// Throws Error(kParse) on malformed input.
Pose parse_pose(std::string_view line);

/// Shortest decimal-ish rendering with 17 significant digits ("%.17g").
std::string format_real(double x);

}  // namespace doorkin
