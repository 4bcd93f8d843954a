#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "doorkin/geometry.hpp"

namespace doorkin {

enum class DoorClass { kDoor, kCabinetDoor, kRefrigeratorDoor };

std::string_view to_string(DoorClass c);
DoorClass parse_door_class(std::string_view s);

/// Ordered observations d_1..d_N of the handle (world <- handle).
struct Trajectory {
  std::vector<Pose> observations;
  DoorClass door_class = DoorClass::kDoor;

  std::size_t size() const { return observations.size(); }
  std::vector<Vec3> positions() const;
};

/// Concatenation, `first` then `second`; the class of `first` is kept.
Trajectory concatenate(const Trajectory& first, const Trajectory& second);

enum class ModelKind { kPrismatic, kRevolute };

std::string_view to_string(ModelKind k);
ModelKind parse_model_kind(std::string_view s);

/// Translation along the unit `direction` through `origin`.
struct PrismaticModel {
  static constexpr int kParameterCount = 6;
  static constexpr std::size_t kMinimalSample = 2;
  Vec3 origin = Vec3::Zero();
  Vec3 direction = Vec3::UnitZ();
};

/// Circle of `radius` about `center` in the plane with unit `normal`.
struct RevoluteModel {
  static constexpr int kParameterCount = 7;
  static constexpr std::size_t kMinimalSample = 3;
  Vec3 center = Vec3::Zero();
  Vec3 normal = Vec3::UnitZ();
  double radius = 1.0;
};

using KinematicModel = std::variant<PrismaticModel, RevoluteModel>;

ModelKind kind_of(const KinematicModel& m);
int parameter_count(ModelKind k);
std::size_t minimal_sample_size(ModelKind k);

/// Distance of a point from the model manifold: perpendicular distance to the
/// line, or sqrt(h^2 + (rho - r)^2) for the circle with h the out-of-plane
/// offset and rho the in-plane distance from the center.
double residual(const KinematicModel& m, const Vec3& p);
double residual(const KinematicModel& m, const Pose& d);

PrismaticModel fit_minimal_prismatic(const Vec3& p1, const Vec3& p2);
/// Circumcircle; the normal follows the traversal p1 -> p2 -> p3.
RevoluteModel fit_minimal_revolute(const Vec3& p1, const Vec3& p2, const Vec3& p3);

/// Least-squares polish on a consensus set: total-least-squares line, or
/// total-least-squares plane followed by an algebraic circle fit and one
/// Gauss-Newton step on the geometric error. Never returns a model with a
/// larger residual sum over `inliers` than `model`; the input orientation
/// (sign of direction / normal) is preserved. Throws Error(kDegenerateInliers).
KinematicModel refine_on_inliers(const KinematicModel& model, std::span<const Vec3> inliers);

/// Applies `t` to the model's geometry.
KinematicModel transform_model(const Pose& t, const KinematicModel& m);

/// Moves a pose along the model: meters for prismatic, radians about
/// (center, normal) for revolute. Rotation is carried along for revolute.
Pose move_along(const KinematicModel& m, const Pose& p, double amount);

/// Unit tangent of the motion at point p (positive parameter direction).
Vec3 tangent_at(const KinematicModel& m, const Vec3& p);

// --- MLESAC ---------------------------------------------------------------

struct MlesacConfig {
  int hypotheses = 200;
  double sigma = 0.005;  // inlier residual std, meters
  /// Support of the uniform outlier density over residuals, meters.
  /// <= 0 selects default_outlier_range() of the data.
  double outlier_range = 0.0;
  int em_steps = 10;
  std::uint64_t seed = 0;
  bool reestimate_sigma = false;
  /// Circles larger than this are not considered door hinges.
  double max_radius = 2.0;
  int refine_rounds = 3;
  unsigned threads = 1;
};

/// Axis-aligned bounding-box diagonal of the points, floored at 0.1 m.
double default_outlier_range(std::span<const Vec3> points);

struct MixtureEstimate {
  double gamma = 0.5;
  double log_likelihood = 0.0;
  std::vector<double> trace;  // log-likelihood after each gamma update
  std::vector<double> responsibilities;
};

/// Log-likelihood of the Gaussian-inlier / uniform-outlier mixture.
double mixture_log_likelihood(std::span<const double> residuals, double gamma, double sigma, double outlier_range);

/// EM on the mixing coefficient from gamma = 0.5, clamped to [1e-3, 1 - 1e-3].
MixtureEstimate estimate_mixture(std::span<const double> residuals, double sigma, double outlier_range,
                                 int em_steps);

struct FitResult {
  KinematicModel model;
  double log_likelihood = 0.0;
  double gamma = 0.0;
  std::vector<bool> inlier_flags;
  double sigma = 0.0;
  double outlier_range = 0.0;
  std::vector<double> em_trace;
  std::size_t hypotheses_scored = 0;

  std::size_t inlier_count() const;
};

/// Hypothesize-and-verify fit scored by the mixture log-likelihood.
///
/// Minimal samples are enumerated exhaustively when there are no more than
/// `hypotheses` of them, otherwise drawn without replacement from a generator
/// seeded with config.seed. Degenerate samples are skipped. The winner is the
/// lexicographic argmax of (log-likelihood, -hypothesis index), then refined on
/// the points with responsibility > 0.5 while that raises the likelihood.
/// The returned model is oriented along the observation order.
///
/// Throws Error(kTooFewObservations), Error(kDegenerateInput) when no valid
/// hypothesis exists, Error(kAllOutliers) when the final gamma < 0.05.
FitResult mlesac_fit(const Trajectory& traj, ModelKind kind, const MlesacConfig& config);

// --- text forms -------------------------------------------------------------

/// "prismatic origin x y z direction x y z" / "revolute center ... normal ... radius r"
std::string format_model(const KinematicModel& m);

/// .traj: "TRAJ <door_class> <N>" then N pose lines.
std::string format_trajectory(const Trajectory& t);
Trajectory parse_trajectory(std::string_view text, const std::string& source = "<string>");
Trajectory load_trajectory(const std::string& path);
void save_trajectory(const std::string& path, const Trajectory& t);

}  // namespace doorkin
