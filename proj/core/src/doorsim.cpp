#include "doorkin/doorsim.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <numbers>
#include <ostream>
#include <set>
#include <sstream>

#include "doorkin/error.hpp"
#include "doorkin/parallel.hpp"
#include "doorkin/text.hpp"
#include "doorkin/tsr.hpp"

namespace doorkin {

bool Aabb::contains(const Vec3& p) const {
  return (p.array() >= lo.array()).all() && (p.array() <= hi.array()).all();
}

Aabb Aabb::around(std::span<const Vec3> points, double margin) {
  if (points.empty()) throw Error(ErrorCode::kEmptyInput, "bounding box of no points");
  Aabb box{points[0], points[0]};
  for (const Vec3& p : points) {
    box.lo = box.lo.cwiseMin(p);
    box.hi = box.hi.cwiseMax(p);
  }
  box.lo.array() -= margin;
  box.hi.array() += margin;
  return box;
}

void DoorSpec::validate() const {
  if (!(travel_limit > 0.0) || !std::isfinite(travel_limit)) {
    throw Error(ErrorCode::kInvalidArgument, "travel_limit must be > 0");
  }
  if (!(noise_sigma >= 0.0)) throw Error(ErrorCode::kInvalidArgument, "noise_sigma must be >= 0");
  if (!(outlier_rate >= 0.0 && outlier_rate <= 1.0)) {
    throw Error(ErrorCode::kInvalidArgument, "outlier_rate must lie in [0, 1]");
  }
  if (!(outlier_volume.lo.array() <= outlier_volume.hi.array()).all()) {
    throw Error(ErrorCode::kInvalidArgument, "outlier volume has lo > hi");
  }
  if (!is_valid_rotation(handle_start.rotation)) throw Error(ErrorCode::kInvalidArgument, "invalid handle_start");
  if (const auto* r = std::get_if<RevoluteModel>(&true_model); r && !(r->radius > 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "revolute radius must be > 0");
  }
  if (residual(true_model, handle_start) > 1e-6) {
    throw Error(ErrorCode::kInvalidArgument, "handle_start is not on the door model");
  }
}

Pose DoorSpec::pose_at(double t) const { return move_along(true_model, handle_start, t); }

namespace {

Aabb path_volume(const DoorSpec& spec) {
  std::vector<Vec3> path;
  for (int i = 0; i <= 32; ++i) path.push_back(spec.pose_at(spec.travel_limit * i / 32.0).translation);
  return Aabb::around(path, 0.1);
}

}  // namespace

DoorSpec make_prismatic_door(const Vec3& p, const Vec3& a, double travel_limit, double noise_sigma,
                             double outlier_rate) {
  DoorSpec spec;
  const Vec3 dir = a.normalized();
  spec.true_model = PrismaticModel{p, dir};
  spec.handle_start = handle_transform(dir, p);
  spec.travel_limit = travel_limit;
  spec.noise_sigma = noise_sigma;
  spec.outlier_rate = outlier_rate;
  spec.outlier_volume = path_volume(spec);
  spec.validate();
  return spec;
}

DoorSpec make_revolute_door(const Vec3& p, const Vec3& a, double radius, int hinge_side, double travel_limit,
                            double noise_sigma, double outlier_rate) {
  if (hinge_side != 1 && hinge_side != -1) throw Error(ErrorCode::kInvalidArgument, "hinge_side must be +1 or -1");
  DoorSpec spec;
  spec.handle_start = handle_transform(a.normalized(), p);
  const Vec3 u = spec.handle_start.rotation.col(1);
  const Vec3 w = spec.handle_start.rotation.col(2);
  spec.true_model = RevoluteModel{p - hinge_side * radius * u, -hinge_side * w, radius};
  spec.travel_limit = travel_limit;
  spec.noise_sigma = noise_sigma;
  spec.outlier_rate = outlier_rate;
  spec.outlier_volume = path_volume(spec);
  spec.validate();
  return spec;
}

Pose observe(const DoorSpec& spec, const Pose& truth, std::mt19937_64& rng, bool* was_outlier) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const bool outlier = spec.outlier_rate > 0.0 && unit(rng) < spec.outlier_rate;
  if (was_outlier) *was_outlier = outlier;
  Pose out = truth;
  if (outlier) {
    for (int k = 0; k < 3; ++k) {
      out.translation[k] = spec.outlier_volume.lo[k] + unit(rng) * (spec.outlier_volume.hi[k] - spec.outlier_volume.lo[k]);
    }
  } else if (spec.noise_sigma > 0.0) {
    std::normal_distribution<double> noise(0.0, spec.noise_sigma);
    for (int k = 0; k < 3; ++k) out.translation[k] += noise(rng);
  }
  return out;
}

LabeledTrajectory generate_labeled_trajectory(const DoorSpec& spec, std::size_t n, std::uint64_t seed) {
  if (n < 1) throw Error(ErrorCode::kInvalidArgument, "trajectory needs n >= 1");
  spec.validate();
  std::mt19937_64 rng(seed);
  LabeledTrajectory out;
  out.trajectory.door_class = spec.door_class;
  for (std::size_t i = 0; i < n; ++i) {
    const double t = n == 1 ? 0.0 : spec.travel_limit * static_cast<double>(i) / static_cast<double>(n - 1);
    bool outlier = false;
    out.trajectory.observations.push_back(observe(spec, spec.pose_at(t), rng, &outlier));
    out.is_outlier.push_back(outlier);
  }
  return out;
}

Trajectory generate_trajectory(const DoorSpec& spec, std::size_t n, std::uint64_t seed) {
  return generate_labeled_trajectory(spec, n, seed).trajectory;
}

// --- scenes ----------------------------------------------------------------

Vec3 Camera::ray(int u, int v) const { return Vec3(1.0, (cx() - u) / focal, (cy() - v) / focal); }

Eigen::Vector2d Camera::project(const Vec3& p) const {
  return {cx() - focal * p.y() / p.x(), cy() - focal * p.z() / p.x()};
}

namespace {

struct Rect {
  Vec3 center;
  Vec3 normal;
  Vec3 u;
  Vec3 w;
  double half_u = 0.0;
  double half_w = 0.0;
  std::size_t door = 0;
  bool handle = false;

  std::optional<double> hit(const Vec3& ray) const {
    const double denom = normal.dot(ray);
    if (std::abs(denom) < 1e-12) return std::nullopt;
    const double t = normal.dot(center) / denom;
    if (t <= 0.0) return std::nullopt;
    const Vec3 local = t * ray - center;
    if (std::abs(local.dot(u)) > half_u || std::abs(local.dot(w)) > half_w) return std::nullopt;
    return t;
  }

  std::vector<Vec3> corners() const {
    return {center + half_u * u + half_w * w, center + half_u * u - half_w * w, center - half_u * u + half_w * w,
            center - half_u * u - half_w * w};
  }
};

BoundingBox box_of(const Rect& r, const Camera& cam, ObjectClass label, double margin, int padding) {
  double u0 = std::numeric_limits<double>::infinity();
  double v0 = u0;
  double u1 = -u0;
  double v1 = -u0;
  for (const Vec3& c : r.corners()) {
    if (c.x() <= 0.0) throw Error(ErrorCode::kInvalidArgument, "scene object behind the camera");
    const Eigen::Vector2d px = cam.project(c);
    u0 = std::min(u0, px.x());
    u1 = std::max(u1, px.x());
    v0 = std::min(v0, px.y());
    v1 = std::max(v1, px.y());
  }
  const double mu = margin * (u1 - u0);
  const double mv = margin * (v1 - v0);
  BoundingBox b;
  b.label = label;
  b.x_min = std::clamp(static_cast<int>(std::floor(u0 - mu)) - padding, 0, cam.width - 1);
  b.x_max = std::clamp(static_cast<int>(std::ceil(u1 + mu)) + padding, 0, cam.width - 1);
  b.y_min = std::clamp(static_cast<int>(std::floor(v0 - mv)) - padding, 0, cam.height - 1);
  b.y_max = std::clamp(static_cast<int>(std::ceil(v1 + mv)) + padding, 0, cam.height - 1);
  b.confidence = 1.0;
  return b;
}

}  // namespace

Scene render_scene(std::span<const SceneDoor> doors, const SceneOptions& options, std::uint64_t seed) {
  const Camera& cam = options.camera;
  if (cam.width < 1 || cam.height < 1 || !(cam.focal > 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "camera needs positive dimensions and focal length");
  }
  std::vector<Rect> rects;
  Scene scene;
  for (std::size_t i = 0; i < doors.size(); ++i) {
    const SceneDoor& d = doors[i];
    const Pose frame = handle_transform(d.normal.normalized(), d.center);
    const Vec3 a = frame.rotation.col(0);
    const Vec3 u = frame.rotation.col(1);
    const Vec3 w = frame.rotation.col(2);
    rects.push_back({d.center, a, u, w, d.width / 2.0, d.height / 2.0, i, false});
    rects.push_back({frame * d.handle_offset, a, u, w, d.handle_width / 2.0, d.handle_height / 2.0, i, true});
    scene.truth.push_back({a, frame * d.handle_offset, Vec3::Zero(), 0});
  }

  scene.cloud = PointCloud::make(cam.width, cam.height);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, 1.0);
  for (int v = 0; v < cam.height; ++v) {
    for (int u = 0; u < cam.width; ++u) {
      const Vec3 ray = cam.ray(u, v);
      double best = std::numeric_limits<double>::infinity();
      const Rect* hit_rect = nullptr;
      for (const Rect& r : rects) {
        const auto t = r.hit(ray);
        if (t && *t < best) {
          best = *t;
          hit_rect = &r;
        }
      }
      if (hit_rect == nullptr) continue;
      if (hit_rect->handle) {
        SceneTruth& truth = scene.truth[hit_rect->door];
        truth.handle_centroid += best * ray;
        ++truth.handle_points;
      }
      const double depth = best + options.depth_sigma * noise(rng);
      scene.cloud.points[scene.cloud.index(u, v)] = depth * ray;
    }
  }
  for (auto& truth : scene.truth) {
    if (truth.handle_points > 0) truth.handle_centroid /= static_cast<double>(truth.handle_points);
  }

  for (std::size_t i = 0; i < doors.size(); ++i) {
    scene.boxes.push_back(box_of(rects[2 * i], cam, doors[i].label, 0.0, options.padding));
    scene.boxes.push_back(box_of(rects[2 * i + 1], cam, ObjectClass::kHandle, options.handle_margin, options.padding));
  }
  return scene;
}

Scene generate_scene(const DoorSpec& door, const Vec3& handle_offset, const Camera& camera, std::uint64_t seed,
                     double depth_sigma) {
  SceneDoor d;
  d.normal = door.pull_direction();
  d.center = door.handle_start.translation - door.handle_start.rotation * handle_offset;
  d.handle_offset = handle_offset;
  SceneOptions options;
  options.camera = camera;
  options.depth_sigma = depth_sigma;
  return render_scene(std::span<const SceneDoor>(&d, 1), options, seed);
}

Scene random_scene(std::uint64_t seed, double depth_sigma) {
  std::mt19937_64 rng(text::mix_seed(seed, 0x5ce9e));
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  SceneDoor d;
  const double distance = 1.6 + 0.8 * unit(rng);
  const double yaw = (unit(rng) * 2.0 - 1.0) * 25.0 * std::numbers::pi / 180.0;
  d.normal = Vec3(-std::cos(yaw), std::sin(yaw), 0.0);
  d.center = Vec3(distance, (unit(rng) - 0.5) * 0.4, (unit(rng) - 0.5) * 0.2);
  const double side = unit(rng) < 0.5 ? -1.0 : 1.0;
  d.handle_offset = Vec3(0.05 + 0.03 * unit(rng), side * (0.25 + 0.1 * unit(rng)), (unit(rng) - 0.5) * 0.2);
  d.label = ObjectClass::kDoor;
  SceneOptions options;
  options.depth_sigma = depth_sigma;
  return render_scene(std::span<const SceneDoor>(&d, 1), options, text::mix_seed(seed, 0x4e015e));
}

// --- compliant execution ----------------------------------------------------

namespace {

// Path length per unit of motion parameter at p.
double path_rate(const KinematicModel& m, const Vec3& p) {
  if (std::holds_alternative<PrismaticModel>(m)) return 1.0;
  const auto& r = std::get<RevoluteModel>(m);
  const Vec3 v = p - r.center;
  return (v - v.dot(r.normal) * r.normal).norm();
}

double parameter_advance(const KinematicModel& m, const Pose& current, const Vec3& delta, double max_step) {
  const double rate = path_rate(m, current.translation);
  double path = tangent_at(m, current.translation).dot(delta);
  path = std::clamp(path, -max_step, max_step);
  return path / rate;
}

}  // namespace

Pose compliant_step(const KinematicModel& true_model, const Pose& current, const Vec3& commanded_delta,
                    double max_step) {
  if (!(max_step >= 0.0)) throw Error(ErrorCode::kInvalidArgument, "max_step must be >= 0");
  return move_along(true_model, current, parameter_advance(true_model, current, commanded_delta, max_step));
}

SimulatedDoor::SimulatedDoor(DoorSpec spec) : spec_(std::move(spec)) {
  spec_.validate();
  pose_ = spec_.handle_start;
}

const Pose& SimulatedDoor::step(const Vec3& commanded_delta, double max_step) {
  if (!(max_step >= 0.0)) throw Error(ErrorCode::kInvalidArgument, "max_step must be >= 0");
  const double advance = parameter_advance(spec_.true_model, pose_, commanded_delta, max_step);
  if (advance > 0.0 && parameter_ >= spec_.travel_limit) {
    throw Error(ErrorCode::kLimitReached, "door is at its travel limit");
  }
  const double next = std::clamp(parameter_ + advance, 0.0, spec_.travel_limit);
  // Recompute from the start pose so that rounding does not accumulate.
  parameter_ = next;
  pose_ = spec_.pose_at(parameter_);
  return pose_;
}

// --- opening loop -----------------------------------------------------------

double OpeningLog::posterior_of(std::size_t i, ModelKind k) const {
  const OpeningRecord& r = records.at(i);
  return k == ModelKind::kPrismatic ? r.posterior_prismatic : r.posterior_revolute;
}

namespace {

double step_amount(const KinematicModel& m, double step) {
  if (const auto* r = std::get_if<RevoluteModel>(&m)) return step / r->radius;
  return step;
}

KinematicModel reversed(const KinematicModel& m) {
  if (const auto* p = std::get_if<PrismaticModel>(&m)) return PrismaticModel{p->origin, -p->direction};
  RevoluteModel r = std::get<RevoluteModel>(m);
  r.normal = -r.normal;
  return r;
}

TsrDisplacement far_end(const TsrSpec& spec) {
  TsrDisplacement d{};
  for (std::size_t i = 0; i < 6; ++i) d[i] = spec.bounds[i].lo;
  return d;
}

}  // namespace

OpeningLog run_opening(const DoorSpec& door, const OpeningConfig& config) {
  if (config.iterations < 1) throw Error(ErrorCode::kInvalidArgument, "opening needs iterations >= 1");
  if (!(config.step > 0.0)) throw Error(ErrorCode::kInvalidArgument, "opening step must be > 0");
  if (config.use_priors && config.store == nullptr) {
    throw Error(ErrorCode::kInvalidArgument, "use_priors needs a prior store");
  }
  SimulatedDoor sim(door);
  std::mt19937_64 rng(text::mix_seed(config.seed, 0x0be7));
  OpeningLog log;
  log.observations.door_class = door.door_class;
  PriorFitCache cache;

  std::optional<KinematicModel> estimate;
  Pose grasp = door.handle_start;
  for (int iter = 1; iter <= config.iterations; ++iter) {
    OpeningRecord rec;
    rec.iter = iter;
    try {
      const KinematicModel model =
          estimate ? *estimate
                   : KinematicModel{PrismaticModel{grasp.translation, config.initial_sign * door.pull_direction()}};
      TsrSpec tsr = tsr_from_model(model, step_amount(model, config.step), grasp);
      Pose target = tsr_pose_at(tsr, far_end(tsr));
      rec.command = target.translation - tsr_anchor(tsr).translation;
      // Keep opening: move away from the closed pose, or along the pull while
      // still close to it. A reversed estimate would push the door shut.
      const Vec3 away = grasp.translation - door.handle_start.translation;
      const Vec3 reference = away.norm() > 2.0 * config.step ? away : Vec3(config.initial_sign * door.pull_direction());
      if (rec.command.dot(reference) < 0.0) {
        tsr = tsr_from_model(reversed(model), step_amount(model, config.step), grasp);
        target = tsr_pose_at(tsr, far_end(tsr));
        rec.command = target.translation - tsr_anchor(tsr).translation;
      }
      rec.residual = residual(door.true_model, target);
      rec.achieved = sim.step(rec.command, config.step);
      grasp = observe(door, rec.achieved, rng);
      log.observations.observations.push_back(grasp);
      rec.n_obs = log.observations.size();

      if (rec.n_obs >= RevoluteModel::kMinimalSample) {
        MlesacConfig fit = config.fit;
        fit.seed = text::mix_seed(config.fit.seed, static_cast<std::uint64_t>(iter));
        ModelPosterior post;
        if (config.use_priors) {
          PriorSelection sel = select_with_priors(log.observations, *config.store, fit,
                                                  Provenance::kRobotExperience, &cache);
          rec.merged = sel.joint.has_value();
          post = sel.best();
        } else {
          post = select_model(log.observations, fit);
        }
        rec.posterior_prismatic = post.posterior(ModelKind::kPrismatic);
        rec.posterior_revolute = post.posterior(ModelKind::kRevolute);
        rec.winner = post.winner;
        estimate = post.winning().fit.model;
        rec.estimate = estimate;
      }
      log.records.push_back(rec);
    } catch (const Error& e) {
      log.stopped_by = e.code();
      log.stop_message = e.what();
      break;
    }
  }
  return log;
}

void write_opening_csv(std::ostream& out, const OpeningLog& log) {
  out << "iter,n_obs,posterior_prismatic,posterior_revolute,winner,residual\n";
  for (const auto& r : log.records) {
    out << r.iter << ',' << r.n_obs << ',' << format_real(r.posterior_prismatic) << ','
        << format_real(r.posterior_revolute) << ',' << to_string(r.winner) << ',' << format_real(r.residual) << '\n';
  }
}

// --- door spec files ----------------------------------------------------------

namespace {

Vec3 parse_vec3(const std::vector<std::string_view>& tok) {
  if (tok.size() != 3) throw Error(ErrorCode::kParse, "expected 3 numbers");
  return {text::parse_double(tok[0]), text::parse_double(tok[1]), text::parse_double(tok[2])};
}

std::string vec3_text(const Vec3& v) {
  return format_real(v.x()) + ' ' + format_real(v.y()) + ' ' + format_real(v.z());
}

}  // namespace

DoorSpec parse_door_spec(std::string_view body, const std::string& source) {
  std::map<std::string, std::string> kv;
  std::size_t lineno = 0;
  std::size_t pos = 0;
  while (pos <= body.size()) {
    const std::size_t eol = std::min(body.find('\n', pos), body.size());
    std::string_view line = body.substr(pos, eol - pos);
    pos = eol + 1;
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = text::trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw Error(ErrorCode::kParse, source + ":" + std::to_string(lineno) + ": expected 'key = value'");
    }
    std::string key(text::trim(line.substr(0, eq)));
    static const std::set<std::string> kKeys = {"door_class", "model",        "handle_start", "origin",
                                                "direction",  "center",       "normal",       "radius",
                                                "travel_limit", "noise_sigma", "outlier_rate", "outlier_min",
                                                "outlier_max"};
    if (!kKeys.contains(key)) {
      throw Error(ErrorCode::kParse, source + ":" + std::to_string(lineno) + ": unknown key '" + key + "'");
    }
    if (kv.contains(key)) {
      throw Error(ErrorCode::kParse, source + ":" + std::to_string(lineno) + ": duplicate key '" + key + "'");
    }
    kv[key] = std::string(text::trim(line.substr(eq + 1)));
  }

  auto need = [&](const std::string& key) -> const std::string& {
    const auto it = kv.find(key);
    if (it == kv.end()) throw Error(ErrorCode::kParse, source + ": missing key '" + key + "'");
    return it->second;
  };
  auto number = [&](const std::string& key, double fallback) {
    const auto it = kv.find(key);
    return it == kv.end() ? fallback : text::parse_double(it->second);
  };

  try {
    DoorSpec spec;
    if (kv.contains("door_class")) spec.door_class = parse_door_class(kv["door_class"]);
    const ModelKind kind = parse_model_kind(need("model"));
    if (kind == ModelKind::kPrismatic) {
      PrismaticModel m{parse_vec3(text::split_ws(need("origin"))), parse_vec3(text::split_ws(need("direction")))};
      if (m.direction.norm() < 1e-12) throw Error(ErrorCode::kParse, "zero direction");
      m.direction.normalize();
      spec.true_model = m;
    } else {
      RevoluteModel m{parse_vec3(text::split_ws(need("center"))), parse_vec3(text::split_ws(need("normal"))),
                      text::parse_double(need("radius"))};
      if (m.normal.norm() < 1e-12) throw Error(ErrorCode::kParse, "zero normal");
      m.normal.normalize();
      spec.true_model = m;
    }
    spec.handle_start = parse_pose(need("handle_start"));
    spec.travel_limit = text::parse_double(need("travel_limit"));
    spec.noise_sigma = number("noise_sigma", 0.0);
    spec.outlier_rate = number("outlier_rate", 0.0);
    if (kv.contains("outlier_min") != kv.contains("outlier_max")) {
      throw Error(ErrorCode::kParse, "outlier_min and outlier_max go together");
    }
    if (kv.contains("outlier_min")) {
      spec.outlier_volume = {parse_vec3(text::split_ws(kv["outlier_min"])), parse_vec3(text::split_ws(kv["outlier_max"]))};
    } else {
      spec.outlier_volume = path_volume(spec);
    }
    spec.validate();
    return spec;
  } catch (const Error& e) {
    if (e.code() == ErrorCode::kParse && std::string_view(e.what()).starts_with(source)) throw;
    throw Error(ErrorCode::kParse, source + ": " + e.what());
  }
}

std::string format_door_spec(const DoorSpec& spec) {
  std::string out;
  out += "door_class = " + std::string(to_string(spec.door_class)) + '\n';
  if (const auto* p = std::get_if<PrismaticModel>(&spec.true_model)) {
    out += "model = prismatic\n";
    out += "origin = " + vec3_text(p->origin) + '\n';
    out += "direction = " + vec3_text(p->direction) + '\n';
  } else {
    const auto& r = std::get<RevoluteModel>(spec.true_model);
    out += "model = revolute\n";
    out += "center = " + vec3_text(r.center) + '\n';
    out += "normal = " + vec3_text(r.normal) + '\n';
    out += "radius = " + format_real(r.radius) + '\n';
  }
  out += "handle_start = " + format_pose(spec.handle_start) + '\n';
  out += "travel_limit = " + format_real(spec.travel_limit) + '\n';
  out += "noise_sigma = " + format_real(spec.noise_sigma) + '\n';
  out += "outlier_rate = " + format_real(spec.outlier_rate) + '\n';
  out += "outlier_min = " + vec3_text(spec.outlier_volume.lo) + '\n';
  out += "outlier_max = " + vec3_text(spec.outlier_volume.hi) + '\n';
  return out;
}

DoorSpec load_door_spec(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_door_spec(ss.str(), path);
}

// --- experiments --------------------------------------------------------------

namespace {

struct DoorPlacement {
  Vec3 p;
  Vec3 a;
};

DoorPlacement random_placement(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double yaw = (unit(rng) * 2.0 - 1.0) * 0.3;
  return {Vec3(1.0 + 0.5 * unit(rng), (unit(rng) - 0.5) * 0.6, 0.8 + 0.3 * unit(rng)),
          Vec3(-std::cos(yaw), std::sin(yaw), 0.0)};
}

}  // namespace

DoorSpec random_prismatic_door(std::uint64_t seed, const ExperimentSettings& s) {
  std::mt19937_64 rng(text::mix_seed(seed, 0x9a15));
  const DoorPlacement at = random_placement(rng);
  return make_prismatic_door(at.p, at.a, 1.5, s.noise_sigma, s.outlier_rate);
}

DoorSpec random_revolute_door(std::uint64_t seed, const ExperimentSettings& s) {
  std::mt19937_64 rng(text::mix_seed(seed, 0x4e70));
  const DoorPlacement at = random_placement(rng);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double radius = 0.78 + 0.12 * unit(rng);
  const int side = unit(rng) < 0.5 ? -1 : 1;
  return make_revolute_door(at.p, at.a, radius, side, std::numbers::pi / 2.0, s.noise_sigma, s.outlier_rate);
}

std::string_view to_string(PriorRegime r) {
  switch (r) {
    case PriorRegime::kNone: return "none";
    case PriorRegime::kPrismatic: return "prismatic";
    case PriorRegime::kRevolute: return "revolute";
    case PriorRegime::kBalanced: return "balanced";
  }
  return "?";
}

PriorStore make_prior_store(const DoorSpec& door, PriorRegime regime, std::uint64_t seed,
                            const ExperimentSettings& s) {
  PriorStore store;
  if (regime == PriorRegime::kNone) return store;
  const ModelKind own = kind_of(door.true_model);
  std::size_t n_prismatic = regime == PriorRegime::kPrismatic ? 3 : regime == PriorRegime::kRevolute ? 1 : 2;
  std::size_t n_revolute = 4 - n_prismatic;

  const Vec3 p = door.handle_start.translation;
  const Vec3 a = door.pull_direction();
  std::mt19937_64 rng(text::mix_seed(seed, 0x9710));
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const auto n_obs = static_cast<std::size_t>(s.iterations);
  auto look_alike = [&](ModelKind kind) {
    if (kind == ModelKind::kPrismatic) return make_prismatic_door(p, a, s.step * s.iterations, s.noise_sigma, s.outlier_rate);
    const double radius = 0.78 + 0.12 * unit(rng);
    return make_revolute_door(p, a, radius, unit(rng) < 0.5 ? -1 : 1, std::numbers::pi / 2.0, s.noise_sigma,
                              s.outlier_rate);
  };
  std::uint64_t k = 0;
  for (ModelKind kind : {ModelKind::kPrismatic, ModelKind::kRevolute}) {
    const std::size_t count = kind == ModelKind::kPrismatic ? n_prismatic : n_revolute;
    for (std::size_t i = 0; i < count; ++i) {
      DoorSpec source = kind == own ? door : look_alike(kind);
      // Stored openings cover the same path length the opening loop does.
      if (const auto* r = std::get_if<RevoluteModel>(&source.true_model)) {
        source.travel_limit = std::min(source.travel_limit, s.step * s.iterations / r->radius);
      } else {
        source.travel_limit = std::min(source.travel_limit, s.step * s.iterations);
      }
      store.add(generate_trajectory(source, n_obs, text::mix_seed(seed, 0x5700 + k++)), Provenance::kRobotExperience);
    }
  }
  return store;
}

std::vector<double> true_posterior_curve(const OpeningLog& log, ModelKind truth, int iterations) {
  std::vector<double> curve;
  for (std::size_t i = 0; i < log.records.size() && curve.size() < static_cast<std::size_t>(iterations); ++i) {
    curve.push_back(log.posterior_of(i, truth));
  }
  const double last = curve.empty() ? 0.5 : curve.back();
  curve.resize(static_cast<std::size_t>(iterations), last);
  return curve;
}

int observations_to_reach(const std::vector<double>& curve, double level) {
  for (std::size_t i = 0; i < curve.size(); ++i) {
    if (curve[i] >= level) return static_cast<int>(i) + 1;
  }
  return static_cast<int>(curve.size()) + 1;
}

CurveStats aggregate_curves(std::span<const std::vector<double>> curves) {
  if (curves.empty()) throw Error(ErrorCode::kEmptyInput, "no curves to aggregate");
  const std::size_t len = curves[0].size();
  CurveStats stats;
  stats.mean.assign(len, 0.0);
  stats.stddev.assign(len, 0.0);
  for (const auto& c : curves) {
    if (c.size() != len) throw Error(ErrorCode::kInvalidArgument, "curves differ in length");
    for (std::size_t i = 0; i < len; ++i) stats.mean[i] += c[i];
  }
  const double n = static_cast<double>(curves.size());
  for (double& m : stats.mean) m /= n;
  for (const auto& c : curves) {
    for (std::size_t i = 0; i < len; ++i) stats.stddev[i] += (c[i] - stats.mean[i]) * (c[i] - stats.mean[i]);
  }
  for (double& v : stats.stddev) v = std::sqrt(v / n);
  return stats;
}

void write_curve_csv(std::ostream& out, const CurveStats& stats) {
  out << "n_obs,mean,std\n";
  for (std::size_t i = 0; i < stats.mean.size(); ++i) {
    out << i + 1 << ',' << format_real(stats.mean[i]) << ',' << format_real(stats.stddev[i]) << '\n';
  }
}

DoorSpec random_door(ModelKind kind, std::uint64_t seed, const ExperimentSettings& s) {
  return kind == ModelKind::kPrismatic ? random_prismatic_door(seed, s) : random_revolute_door(seed, s);
}

TrialResult run_trial(ModelKind door_kind, PriorRegime regime, std::uint64_t seed, const ExperimentSettings& s) {
  const DoorSpec door = random_door(door_kind, seed, s);
  const PriorStore store = make_prior_store(door, regime, seed, s);
  OpeningConfig oc;
  oc.step = s.step;
  oc.iterations = s.iterations;
  oc.use_priors = regime != PriorRegime::kNone;
  oc.store = &store;
  oc.fit = s.fit;
  oc.fit.seed = seed;
  oc.seed = seed;
  const OpeningLog log = run_opening(door, oc);

  TrialResult r;
  r.seed = seed;
  r.curve = true_posterior_curve(log, door_kind, s.iterations);
  if (!log.records.empty()) r.final_winner = log.records.back().winner;
  for (const auto& rec : log.records) r.merges += rec.merged ? 1 : 0;
  r.stopped_by = log.stopped_by;
  return r;
}

std::vector<TrialResult> run_trials(ModelKind door_kind, PriorRegime regime, std::uint64_t first_seed,
                                    std::size_t count, const ExperimentSettings& s, unsigned threads) {
  std::vector<TrialResult> out(count);
  parallel_for(count, threads, [&](std::size_t i) { out[i] = run_trial(door_kind, regime, first_seed + i, s); });
  return out;
}

ModelError model_error(const KinematicModel& estimate, const KinematicModel& truth) {
  ModelError e;
  e.same_kind = kind_of(estimate) == kind_of(truth);
  if (!e.same_kind) return e;
  auto unsigned_angle = [](const Vec3& u, const Vec3& v) {
    const double a = angle_between(u, v);
    return std::min(a, std::numbers::pi - a);
  };
  if (const auto* t = std::get_if<PrismaticModel>(&truth)) {
    e.axis = unsigned_angle(std::get<PrismaticModel>(estimate).direction, t->direction);
    return e;
  }
  const auto& t = std::get<RevoluteModel>(truth);
  const auto& m = std::get<RevoluteModel>(estimate);
  e.axis = unsigned_angle(m.normal, t.normal);
  e.center = (m.center - t.center).norm();
  e.radius = std::abs(m.radius - t.radius);
  return e;
}

}  // namespace doorkin
