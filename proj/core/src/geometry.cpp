#include "doorkin/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "doorkin/error.hpp"
#include "doorkin/text.hpp"

namespace doorkin {

Eigen::Matrix4d Pose::matrix() const {
  Eigen::Matrix4d m = Eigen::Matrix4d::Identity();
  m.topLeftCorner<3, 3>() = rotation;
  m.topRightCorner<3, 1>() = translation;
  return m;
}

Pose compose(const Pose& t1, const Pose& t2) {
  return {t1.rotation * t2.rotation, t1.rotation * t2.translation + t1.translation};
}

Pose inverse(const Pose& p) {
  const Mat3 rt = p.rotation.transpose();
  return {rt, -(rt * p.translation)};
}

PoseDistance pose_distance(const Pose& p1, const Pose& p2) {
  const Mat3 rel = p1.rotation.transpose() * p2.rotation;
  // acos of (trace - 1) / 2 loses precision near 0; the atan2 form does not.
  const Vec3 axis_sin(rel(2, 1) - rel(1, 2), rel(0, 2) - rel(2, 0), rel(1, 0) - rel(0, 1));
  const double s = 0.5 * axis_sin.norm();
  const double c = 0.5 * (rel.trace() - 1.0);
  return {(p1.translation - p2.translation).norm(), std::atan2(s, c)};
}

Pose handle_transform(const Vec3& a_in, const Vec3& origin) {
  const double norm = a_in.norm();
  if (!std::isfinite(norm) || std::abs(norm - 1.0) > 1e-6) {
    throw Error(ErrorCode::kInvalidArgument, "door normal must be unit length");
  }
  const Vec3 a = std::abs(norm - 1.0) > 1e-12 ? Vec3(a_in / norm) : a_in;
  const double horiz = a.x() * a.x() + a.y() * a.y();
  if (horiz < 1e-9) {
    throw Error(ErrorCode::kDegenerateNormal, "door normal is aligned with the vertical axis");
  }
  const double inv = 1.0 / std::sqrt(horiz);
  const Vec3 u(a.y() * inv, -a.x() * inv, 0.0);
  Pose p;
  p.rotation.col(0) = a;
  p.rotation.col(1) = u;
  p.rotation.col(2) = a.cross(u);
  p.translation = origin;
  return p;
}

Mat3 axis_angle(const Vec3& axis, double angle) {
  return Eigen::AngleAxisd(angle, axis.normalized()).toRotationMatrix();
}

double orthonormality_error(const Mat3& r) {
  return (r.transpose() * r - Mat3::Identity()).cwiseAbs().maxCoeff();
}

bool is_valid_rotation(const Mat3& r, double tol) {
  return r.allFinite() && orthonormality_error(r) < tol && std::abs(r.determinant() - 1.0) < tol;
}

double angle_between(const Vec3& u, const Vec3& v) {
  return std::atan2(u.cross(v).norm(), u.dot(v));
}

std::string format_real(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x == 0.0 ? 0.0 : x);  // no "-0"
  return buf;
}

std::string format_pose(const Pose& p) {
  Eigen::Quaterniond q(p.rotation);
  q.normalize();
  if (q.w() < 0.0) q.coeffs() = -q.coeffs();
  std::string out;
  for (double v : {p.translation.x(), p.translation.y(), p.translation.z(), q.x(), q.y(), q.z(), q.w()}) {
    if (!out.empty()) out += ' ';
    out += format_real(v);
  }
  return out;
}

Pose parse_pose(std::string_view line) {
  const auto tok = text::split_ws(line);
  if (tok.size() != 7) {
    throw Error(ErrorCode::kParse, "pose line needs 7 numbers, got " + std::to_string(tok.size()));
  }
  double v[7];
  for (int i = 0; i < 7; ++i) v[i] = text::parse_double(tok[i]);
  for (double x : v) {
    if (!std::isfinite(x)) throw Error(ErrorCode::kParse, "pose line contains a non-finite number");
  }
  Eigen::Quaterniond q(v[6], v[3], v[4], v[5]);
  const double qn = q.norm();
  if (qn < 1e-12) throw Error(ErrorCode::kParse, "pose quaternion has zero norm");
  q.coeffs() /= qn;
  return {q.toRotationMatrix(), Vec3(v[0], v[1], v[2])};
}

}  // namespace doorkin
