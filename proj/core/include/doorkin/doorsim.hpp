#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "doorkin/cloud.hpp"
#include "doorkin/error.hpp"
#include "doorkin/geometry.hpp"
#include "doorkin/kinfit.hpp"
#include "doorkin/modelsel.hpp"
#include "doorkin/priors.hpp"

namespace doorkin {

struct Aabb {
  Vec3 lo = Vec3::Zero();
  Vec3 hi = Vec3::Zero();

  bool contains(const Vec3& p) const;
  /// Bounding box of the points grown by `margin` on every side.
  static Aabb around(std::span<const Vec3> points, double margin);
};

/// Ground-truth door for trajectory generation and opening.
///
/// The motion parameter runs from 0 (handle_start) to travel_limit: meters
/// along the direction for prismatic doors, radians about the normal for
/// revolute ones. handle_start must lie on true_model.
struct DoorSpec {
  DoorClass door_class = DoorClass::kDoor;
  KinematicModel true_model = PrismaticModel{};
  Pose handle_start;
  double travel_limit = 1.0;
  double noise_sigma = 0.0;
  double outlier_rate = 0.0;
  Aabb outlier_volume;

  /// Throws Error(kInvalidArgument) on a broken invariant.
  void validate() const;
  /// Handle pose at motion parameter t, without noise.
  Pose pose_at(double t) const;
  /// Door-plane normal at the start; the opening pull goes along it.
  Vec3 pull_direction() const { return handle_start.rotation.col(0); }
};

/// Drawer-like door sliding along the pull direction `a` from handle position `p`.
/// The outlier volume is the path's bounding box padded by 0.1 m.
DoorSpec make_prismatic_door(const Vec3& p, const Vec3& a, double travel_limit, double noise_sigma,
                             double outlier_rate);

/// Hinged door with the handle at `p` on a door facing `a`. The hinge is
/// `radius` away along the handle frame's horizontal axis, on side +1 or -1;
/// the normal is chosen so that opening pulls the handle along `a` first.
DoorSpec make_revolute_door(const Vec3& p, const Vec3& a, double radius, int hinge_side, double travel_limit,
                            double noise_sigma, double outlier_rate);

/// n poses at parameters travel_limit * i / (n - 1). Each observation is an
/// outlier drawn from the outlier volume with probability outlier_rate, else
/// the true pose with N(0, sigma^2) noise added per coordinate.
Trajectory generate_trajectory(const DoorSpec& spec, std::size_t n, std::uint64_t seed);

struct LabeledTrajectory {
  Trajectory trajectory;
  std::vector<bool> is_outlier;
};
LabeledTrajectory generate_labeled_trajectory(const DoorSpec& spec, std::size_t n, std::uint64_t seed);

/// Noise model shared by trajectory generation and the opening loop.
Pose observe(const DoorSpec& spec, const Pose& truth, std::mt19937_64& rng, bool* was_outlier = nullptr);

// --- scenes ----------------------------------------------------------------

/// Pinhole camera at the origin looking along +x, y left, z up. Pixel (u, v)
/// sees the ray (1, (cx - u) / f, (cy - v) / f).
struct Camera {
  int width = 320;
  int height = 240;
  double focal = 200.0;

  double cx() const { return (width - 1) / 2.0; }
  double cy() const { return (height - 1) / 2.0; }
  Vec3 ray(int u, int v) const;
  /// Pixel coordinates (u, v) of a point in front of the camera.
  Eigen::Vector2d project(const Vec3& p) const;
};

/// Door leaf with a rectangular handle plate in front of it. Sizes in meters.
/// The handle is placed in the door's handle frame (x normal toward the
/// camera, y horizontal, z up) relative to the door center.
struct SceneDoor {
  ObjectClass label = ObjectClass::kDoor;
  Vec3 center = Vec3(2.0, 0.0, 0.0);
  Vec3 normal = Vec3(-1.0, 0.0, 0.0);
  double width = 0.9;
  double height = 2.0;
  Vec3 handle_offset = Vec3(0.06, 0.3, 0.0);
  double handle_width = 0.12;
  double handle_height = 0.04;
};

struct SceneOptions {
  Camera camera;
  double depth_sigma = 0.002;
  /// Handle boxes grow by this fraction of their size on each side, so that
  /// they contain door background.
  double handle_margin = 0.6;
  int padding = 1;  // pixels added to every box
};

struct SceneTruth {
  Vec3 door_normal;            // unit, toward the camera
  Vec3 handle_center;          // geometric center of the plate
  Vec3 handle_centroid;        // mean of the noiseless handle samples
  std::size_t handle_points = 0;
};

struct Scene {
  PointCloud cloud;
  std::vector<BoundingBox> boxes;  // per door: door box, then handle box
  std::vector<SceneTruth> truth;   // per door
};

/// Ray-cast render with Gaussian depth noise; pixels that miss every surface
/// are invalid. Throws Error(kInvalidArgument) for bad camera dimensions.
Scene render_scene(std::span<const SceneDoor> doors, const SceneOptions& options, std::uint64_t seed);

/// One door facing the camera along the handle-start frame of `door`: the
/// handle plate is centered on handle_start and the door center sits at
/// -handle_offset in that frame.
Scene generate_scene(const DoorSpec& door, const Vec3& handle_offset, const Camera& camera, std::uint64_t seed,
                     double depth_sigma = 0.002);

/// Random single-door scene for the grasp acceptance runs: distance 1.6-2.4 m,
/// yaw within 25 degrees, handle left or right of center.
Scene random_scene(std::uint64_t seed, double depth_sigma);

// --- compliant execution ----------------------------------------------------

/// Projects the commanded displacement on the true tangent at `current`,
/// clamps the path length to max_step and moves along the model; the result
/// lies on the model whenever `current` does.
Pose compliant_step(const KinematicModel& true_model, const Pose& current, const Vec3& commanded_delta,
                    double max_step);

/// Door state during an opening. Tracks the motion parameter in [0, travel_limit].
class SimulatedDoor {
 public:
  explicit SimulatedDoor(DoorSpec spec);

  const DoorSpec& spec() const { return spec_; }
  const Pose& pose() const { return pose_; }
  double parameter() const { return parameter_; }

  /// Compliant step; stops at the travel limit and throws Error(kLimitReached)
  /// when already there and pushed further.
  const Pose& step(const Vec3& commanded_delta, double max_step);

 private:
  DoorSpec spec_;
  double parameter_ = 0.0;
  Pose pose_;
};

// --- opening loop -----------------------------------------------------------

struct OpeningConfig {
  double step = 0.03;  // meters of path per iteration
  int iterations = 40;
  bool use_priors = false;
  const PriorStore* store = nullptr;
  MlesacConfig fit;
  std::uint64_t seed = 0;
  /// +1 pulls along the door normal for the initial guess, -1 pushes.
  int initial_sign = 1;
};

struct OpeningRecord {
  int iter = 0;
  std::size_t n_obs = 0;
  double posterior_prismatic = 0.5;
  double posterior_revolute = 0.5;
  ModelKind winner = ModelKind::kPrismatic;
  Vec3 command = Vec3::Zero();
  Pose achieved;
  double residual = 0.0;  // commanded target against the true model
  bool merged = false;
  std::optional<KinematicModel> estimate;
};

struct OpeningLog {
  std::vector<OpeningRecord> records;
  Trajectory observations;
  std::optional<ErrorCode> stopped_by;
  std::string stop_message;

  double posterior_of(std::size_t i, ModelKind k) const;
};

/// Iterative opening: estimate, build a TSR for one step, command it, let the
/// door move, observe, re-estimate. Fewer than 3 observations keep the
/// prismatic initial guess with posteriors 0.5 / 0.5. Errors end the loop and
/// are recorded in the log.
OpeningLog run_opening(const DoorSpec& door, const OpeningConfig& config);

/// "iter,n_obs,posterior_prismatic,posterior_revolute,winner,residual"
void write_opening_csv(std::ostream& out, const OpeningLog& log);

// --- door spec files ----------------------------------------------------------
//
// "key = value" lines, '#' comments:
//   door_class, model (prismatic|revolute), handle_start (7 numbers),
//   origin / direction (prismatic) or center / normal / radius (revolute),
//   travel_limit, noise_sigma, outlier_rate, outlier_min, outlier_max.
// handle_start is required; the outlier box defaults to the padded path bounds.

DoorSpec parse_door_spec(std::string_view text, const std::string& source = "<string>");
std::string format_door_spec(const DoorSpec& spec);
DoorSpec load_door_spec(const std::string& path);

// --- experiments --------------------------------------------------------------

struct ExperimentSettings {
  double noise_sigma = 0.005;
  double outlier_rate = 0.1;
  int iterations = 40;
  double step = 0.03;
  MlesacConfig fit;
};

/// Randomized doors used by the convergence experiments.
DoorSpec random_prismatic_door(std::uint64_t seed, const ExperimentSettings& s);
DoorSpec random_revolute_door(std::uint64_t seed, const ExperimentSettings& s);

enum class PriorRegime { kNone, kPrismatic, kRevolute, kBalanced };
std::string_view to_string(PriorRegime r);

/// Store of full openings: the predominant kind gets three entries and the
/// other one (two each when balanced). Entries of the door's own kind come
/// from that door; the others are look-alikes with the same handle start and
/// initial pull direction.
PriorStore make_prior_store(const DoorSpec& door, PriorRegime regime, std::uint64_t seed,
                            const ExperimentSettings& s);

/// Posterior of `truth` per record, padded with the last value up to `iterations`.
std::vector<double> true_posterior_curve(const OpeningLog& log, ModelKind truth, int iterations);

/// First observation count whose true-model posterior reaches `level`, or
/// iterations + 1 when never.
int observations_to_reach(const std::vector<double>& curve, double level);

struct CurveStats {
  std::vector<double> mean;
  std::vector<double> stddev;  // population
};
CurveStats aggregate_curves(std::span<const std::vector<double>> curves);

/// "n_obs,mean,std" rows.
void write_curve_csv(std::ostream& out, const CurveStats& stats);

DoorSpec random_door(ModelKind kind, std::uint64_t seed, const ExperimentSettings& s);

/// One seeded opening of a random door of `door_kind` with a prior store of
/// the given regime. The door, the store and the fits all derive from `seed`.
struct TrialResult {
  std::uint64_t seed = 0;
  std::vector<double> curve;  // true-model posterior, one value per iteration
  ModelKind final_winner = ModelKind::kPrismatic;
  std::size_t merges = 0;     // iterations that used a merged prior
  std::optional<ErrorCode> stopped_by;
};

TrialResult run_trial(ModelKind door_kind, PriorRegime regime, std::uint64_t seed, const ExperimentSettings& s);

/// Trials for seeds first_seed .. first_seed + count - 1, in seed order
/// whatever the thread count.
std::vector<TrialResult> run_trials(ModelKind door_kind, PriorRegime regime, std::uint64_t first_seed,
                                    std::size_t count, const ExperimentSettings& s, unsigned threads);

/// Parameter error of an estimate against the true model. The axis is the line
/// direction or the circle normal, compared without sign.
struct ModelError {
  bool same_kind = false;
  double axis = 0.0;    // rad
  double center = 0.0;  // m, revolute only
  double radius = 0.0;  // m, revolute only
};
ModelError model_error(const KinematicModel& estimate, const KinematicModel& truth);

}  // namespace doorkin
