#include "doorkin/kinfit.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/QR>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numbers>
#include <optional>
#include <random>
#include <sstream>

#include "doorkin/error.hpp"
#include "doorkin/parallel.hpp"
#include "doorkin/text.hpp"

namespace doorkin {

std::string_view to_string(DoorClass c) {
  switch (c) {
    case DoorClass::kDoor: return "door";
    case DoorClass::kCabinetDoor: return "cabinet_door";
    case DoorClass::kRefrigeratorDoor: return "refrigerator_door";
  }
  return "door";
}

DoorClass parse_door_class(std::string_view s) {
  if (s == "door") return DoorClass::kDoor;
  if (s == "cabinet_door") return DoorClass::kCabinetDoor;
  if (s == "refrigerator_door") return DoorClass::kRefrigeratorDoor;
  throw Error(ErrorCode::kParse, "unknown door class '" + std::string(s) + "'");
}

std::string_view to_string(ModelKind k) { return k == ModelKind::kPrismatic ? "prismatic" : "revolute"; }

ModelKind parse_model_kind(std::string_view s) {
  if (s == "prismatic") return ModelKind::kPrismatic;
  if (s == "revolute") return ModelKind::kRevolute;
  throw Error(ErrorCode::kParse, "unknown model kind '" + std::string(s) + "'");
}

std::vector<Vec3> Trajectory::positions() const {
  std::vector<Vec3> out;
  out.reserve(observations.size());
  for (const Pose& p : observations) out.push_back(p.translation);
  return out;
}

Trajectory concatenate(const Trajectory& first, const Trajectory& second) {
  Trajectory t = first;
  t.observations.insert(t.observations.end(), second.observations.begin(), second.observations.end());
  return t;
}

ModelKind kind_of(const KinematicModel& m) {
  return std::holds_alternative<PrismaticModel>(m) ? ModelKind::kPrismatic : ModelKind::kRevolute;
}

int parameter_count(ModelKind k) {
  return k == ModelKind::kPrismatic ? PrismaticModel::kParameterCount : RevoluteModel::kParameterCount;
}

std::size_t minimal_sample_size(ModelKind k) {
  return k == ModelKind::kPrismatic ? PrismaticModel::kMinimalSample : RevoluteModel::kMinimalSample;
}

namespace {

double line_residual(const PrismaticModel& m, const Vec3& p) { return (p - m.origin).cross(m.direction).norm(); }

double circle_residual(const RevoluteModel& m, const Vec3& p) {
  const Vec3 q = p - m.center;
  const double h = m.normal.dot(q);
  const double rho = (q - h * m.normal).norm();
  return std::hypot(h, rho - m.radius);
}

}  // namespace

double residual(const KinematicModel& m, const Vec3& p) {
  if (const auto* pm = std::get_if<PrismaticModel>(&m)) return line_residual(*pm, p);
  return circle_residual(std::get<RevoluteModel>(m), p);
}

double residual(const KinematicModel& m, const Pose& d) { return residual(m, d.translation); }

PrismaticModel fit_minimal_prismatic(const Vec3& p1, const Vec3& p2) {
  const Vec3 diff = p2 - p1;
  const double len = diff.norm();
  if (!(len > 1e-12 * std::max(1.0, p1.norm()))) {
    throw Error(ErrorCode::kCoincidentPoints, "prismatic sample points coincide");
  }
  return {p1, diff / len};
}

RevoluteModel fit_minimal_revolute(const Vec3& p1, const Vec3& p2, const Vec3& p3) {
  const Vec3 a = p1 - p3;
  const Vec3 b = p2 - p3;
  const Vec3 axb = a.cross(b);
  const double axb2 = axb.squaredNorm();
  if (!(axb2 > 1e-24 * a.squaredNorm() * b.squaredNorm()) || axb2 == 0.0) {
    throw Error(ErrorCode::kCollinearPoints, "revolute sample points are collinear");
  }
  RevoluteModel m;
  m.center = p3 + (a.squaredNorm() * b - b.squaredNorm() * a).cross(axb) / (2.0 * axb2);
  m.radius = (p1 - m.center).norm();
  m.normal = (p2 - p1).cross(p3 - p2).normalized();
  return m;
}

namespace {

double residual_sum(const KinematicModel& m, std::span<const Vec3> pts) {
  double s = 0.0;
  for (const Vec3& p : pts) s += residual(m, p);
  return s;
}

struct Frame {
  Vec3 centroid;
  Mat3 axes;      // eigenvectors, ascending eigenvalues
  Vec3 spread;    // eigenvalues
};

Frame principal_frame(std::span<const Vec3> pts) {
  Vec3 c = Vec3::Zero();
  for (const Vec3& p : pts) c += p;
  c /= static_cast<double>(pts.size());
  Mat3 cov = Mat3::Zero();
  for (const Vec3& p : pts) {
    const Vec3 q = p - c;
    cov += q * q.transpose();
  }
  Eigen::SelfAdjointEigenSolver<Mat3> eig(cov);
  return {c, eig.eigenvectors(), eig.eigenvalues()};
}

PrismaticModel refine_line(const PrismaticModel& in, std::span<const Vec3> pts) {
  if (pts.size() < PrismaticModel::kMinimalSample) {
    throw Error(ErrorCode::kDegenerateInliers, "too few inliers for a line");
  }
  const Frame f = principal_frame(pts);
  if (!(f.spread(2) > 0.0)) throw Error(ErrorCode::kDegenerateInliers, "inliers coincide");
  PrismaticModel out{f.centroid, f.axes.col(2).normalized()};
  if (out.direction.dot(in.direction) < 0.0) out.direction = -out.direction;
  return out;
}

RevoluteModel refine_circle(const RevoluteModel& in, std::span<const Vec3> pts) {
  if (pts.size() < RevoluteModel::kMinimalSample) {
    throw Error(ErrorCode::kDegenerateInliers, "too few inliers for a circle");
  }
  const Frame f = principal_frame(pts);
  if (!(f.spread(1) > 1e-20 * std::max(1.0, f.spread(2)))) {
    throw Error(ErrorCode::kDegenerateInliers, "inliers are collinear");
  }
  Vec3 normal = f.axes.col(0).normalized();
  const Vec3 u = f.axes.col(2).normalized();
  const Vec3 v = normal.cross(u);

  const Eigen::Index n = static_cast<Eigen::Index>(pts.size());
  Eigen::MatrixXd a(n, 3);
  Eigen::VectorXd b(n);
  std::vector<Eigen::Vector2d> q(pts.size());
  for (Eigen::Index i = 0; i < n; ++i) {
    const Vec3 d = pts[static_cast<std::size_t>(i)] - f.centroid;
    q[static_cast<std::size_t>(i)] = {d.dot(u), d.dot(v)};
    const auto& qi = q[static_cast<std::size_t>(i)];
    a(i, 0) = qi.x();
    a(i, 1) = qi.y();
    a(i, 2) = 1.0;
    b(i) = -qi.squaredNorm();
  }
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(a);
  if (qr.rank() < 3) throw Error(ErrorCode::kDegenerateInliers, "algebraic circle fit is rank deficient");
  const Eigen::Vector3d sol = qr.solve(b);
  Eigen::Vector2d c2(-0.5 * sol(0), -0.5 * sol(1));
  const double r2 = c2.squaredNorm() - sol(2);
  if (!(r2 > 0.0) || !std::isfinite(r2)) throw Error(ErrorCode::kDegenerateInliers, "algebraic circle fit failed");
  double r = std::sqrt(r2);

  // One Gauss-Newton step on the geometric residual |q - c| - r.
  Eigen::Matrix3d jtj = Eigen::Matrix3d::Zero();
  Eigen::Vector3d jtr = Eigen::Vector3d::Zero();
  for (const auto& qi : q) {
    const Eigen::Vector2d d = qi - c2;
    const double dist = d.norm();
    if (dist == 0.0) continue;
    const Eigen::Vector3d j(-d.x() / dist, -d.y() / dist, -1.0);
    const double res = dist - r;
    jtj += j * j.transpose();
    jtr += j * res;
  }
  const Eigen::Vector3d step = jtj.ldlt().solve(-jtr);
  if (step.allFinite() && r + step(2) > 0.0) {
    c2 += step.head<2>();
    r += step(2);
  }

  RevoluteModel out;
  out.center = f.centroid + c2.x() * u + c2.y() * v;
  out.radius = r;
  if (normal.dot(in.normal) < 0.0) normal = -normal;
  out.normal = normal;
  return out;
}

}  // namespace

KinematicModel refine_on_inliers(const KinematicModel& model, std::span<const Vec3> inliers) {
  KinematicModel refined;
  if (const auto* pm = std::get_if<PrismaticModel>(&model)) {
    refined = refine_line(*pm, inliers);
  } else {
    refined = refine_circle(std::get<RevoluteModel>(model), inliers);
  }
  if (residual_sum(refined, inliers) > residual_sum(model, inliers)) return model;
  return refined;
}

KinematicModel transform_model(const Pose& t, const KinematicModel& m) {
  if (const auto* pm = std::get_if<PrismaticModel>(&m)) {
    return PrismaticModel{t * pm->origin, t.rotation * pm->direction};
  }
  const auto& rm = std::get<RevoluteModel>(m);
  return RevoluteModel{t * rm.center, t.rotation * rm.normal, rm.radius};
}

Pose move_along(const KinematicModel& m, const Pose& p, double amount) {
  if (const auto* pm = std::get_if<PrismaticModel>(&m)) {
    return {p.rotation, p.translation + amount * pm->direction};
  }
  const auto& rm = std::get<RevoluteModel>(m);
  const Mat3 rot = axis_angle(rm.normal, amount);
  return {rot * p.rotation, rm.center + rot * (p.translation - rm.center)};
}

Vec3 tangent_at(const KinematicModel& m, const Vec3& p) {
  if (const auto* pm = std::get_if<PrismaticModel>(&m)) return pm->direction;
  const auto& rm = std::get<RevoluteModel>(m);
  const Vec3 t = rm.normal.cross(p - rm.center);
  const double n = t.norm();
  if (n == 0.0) throw Error(ErrorCode::kInvalidArgument, "tangent undefined on the rotation axis");
  return t / n;
}

// --- mixture ------------------------------------------------------------------

double default_outlier_range(std::span<const Vec3> points) {
  if (points.empty()) return 0.1;
  Vec3 lo = points[0];
  Vec3 hi = points[0];
  for (const Vec3& p : points) {
    lo = lo.cwiseMin(p);
    hi = hi.cwiseMax(p);
  }
  return std::max((hi - lo).norm(), 0.1);
}

namespace {

constexpr double kGammaMin = 1e-3;
constexpr double kGammaMax = 1.0 - 1e-3;

void gaussian_densities(std::span<const double> residuals, double sigma, std::vector<double>& phi) {
  const double norm = 1.0 / (sigma * std::sqrt(2.0 * std::numbers::pi));
  phi.resize(residuals.size());
  for (std::size_t j = 0; j < residuals.size(); ++j) {
    const double z = residuals[j] / sigma;
    phi[j] = norm * std::exp(-0.5 * z * z);
  }
}

double log_likelihood_from_densities(std::span<const double> phi, double gamma, double outlier_density) {
  double sum = 0.0;
  const double out = (1.0 - gamma) * outlier_density;
  for (double f : phi) sum += std::log(gamma * f + out);
  return sum;
}

MixtureEstimate run_em(std::span<const double> phi, double outlier_density, int em_steps, bool keep_details) {
  MixtureEstimate est;
  double gamma = 0.5;
  for (int step = 0; step < em_steps; ++step) {
    double wsum = 0.0;
    const double out = (1.0 - gamma) * outlier_density;
    for (double f : phi) {
      const double in = gamma * f;
      wsum += in / (in + out);
    }
    gamma = std::clamp(wsum / static_cast<double>(phi.size()), kGammaMin, kGammaMax);
    if (keep_details) est.trace.push_back(log_likelihood_from_densities(phi, gamma, outlier_density));
  }
  est.gamma = gamma;
  est.log_likelihood = keep_details && !est.trace.empty() ? est.trace.back()
                                                          : log_likelihood_from_densities(phi, gamma, outlier_density);
  if (keep_details) {
    est.responsibilities.resize(phi.size());
    const double out = (1.0 - gamma) * outlier_density;
    for (std::size_t j = 0; j < phi.size(); ++j) {
      const double in = gamma * phi[j];
      est.responsibilities[j] = in / (in + out);
    }
  }
  return est;
}

}  // namespace

double mixture_log_likelihood(std::span<const double> residuals, double gamma, double sigma, double outlier_range) {
  std::vector<double> phi;
  gaussian_densities(residuals, sigma, phi);
  return log_likelihood_from_densities(phi, gamma, 1.0 / outlier_range);
}

MixtureEstimate estimate_mixture(std::span<const double> residuals, double sigma, double outlier_range,
                                 int em_steps) {
  if (!(sigma > 0.0) || !(outlier_range > 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "sigma and outlier range must be positive");
  }
  if (em_steps < 0) throw Error(ErrorCode::kInvalidArgument, "em_steps must be >= 0");
  std::vector<double> phi;
  gaussian_densities(residuals, sigma, phi);
  return run_em(phi, 1.0 / outlier_range, em_steps, true);
}

std::size_t FitResult::inlier_count() const {
  return static_cast<std::size_t>(std::count(inlier_flags.begin(), inlier_flags.end(), true));
}

namespace {

std::uint64_t combinations(std::size_t n, std::size_t k, std::uint64_t cap) {
  std::uint64_t c = 1;
  for (std::size_t i = 0; i < k; ++i) {
    c = c * (n - i) / (i + 1);
    if (c > cap) return cap + 1;
  }
  return c;
}

std::optional<KinematicModel> try_minimal(ModelKind kind, std::span<const Vec3> pts, const std::size_t* idx,
                                          double max_radius) {
  try {
    if (kind == ModelKind::kPrismatic) return fit_minimal_prismatic(pts[idx[0]], pts[idx[1]]);
    RevoluteModel m = fit_minimal_revolute(pts[idx[0]], pts[idx[1]], pts[idx[2]]);
    if (!(m.radius <= max_radius)) return std::nullopt;
    return m;
  } catch (const Error&) {
    return std::nullopt;
  }
}

std::vector<KinematicModel> generate_hypotheses(ModelKind kind, std::span<const Vec3> pts,
                                                const MlesacConfig& config) {
  const std::size_t n = pts.size();
  const std::size_t m = minimal_sample_size(kind);
  const auto budget = static_cast<std::size_t>(config.hypotheses);
  std::vector<KinematicModel> out;
  if (combinations(n, m, budget) <= budget) {
    std::size_t idx[3] = {0, 1, 2};
    for (idx[0] = 0; idx[0] < n; ++idx[0]) {
      for (idx[1] = idx[0] + 1; idx[1] < n; ++idx[1]) {
        if (m == 2) {
          if (auto h = try_minimal(kind, pts, idx, config.max_radius)) out.push_back(*h);
          continue;
        }
        for (idx[2] = idx[1] + 1; idx[2] < n; ++idx[2]) {
          if (auto h = try_minimal(kind, pts, idx, config.max_radius)) out.push_back(*h);
        }
      }
    }
    return out;
  }
  std::mt19937_64 rng(config.seed);
  std::uniform_int_distribution<std::size_t> pick(0, n - 1);
  const std::size_t max_attempts = 50 * budget + 1000;
  std::size_t idx[3];
  for (std::size_t attempt = 0; attempt < max_attempts && out.size() < budget; ++attempt) {
    // Collinear data rejects every revolute sample; do not spin on it.
    if (attempt == 1000 && out.empty()) break;
    idx[0] = pick(rng);
    do idx[1] = pick(rng);
    while (idx[1] == idx[0]);
    if (m == 3) {
      do idx[2] = pick(rng);
      while (idx[2] == idx[0] || idx[2] == idx[1]);
    }
    if (auto h = try_minimal(kind, pts, idx, config.max_radius)) out.push_back(*h);
  }
  return out;
}

std::vector<double> residuals_of(const KinematicModel& model, std::span<const Vec3> pts) {
  std::vector<double> e(pts.size());
  for (std::size_t j = 0; j < pts.size(); ++j) e[j] = residual(model, pts[j]);
  return e;
}

KinematicModel orient_along_observations(const KinematicModel& model, std::span<const Vec3> pts,
                                         const std::vector<bool>& inlier) {
  std::vector<Vec3> ordered;
  for (std::size_t j = 0; j < pts.size(); ++j) {
    if (inlier[j]) ordered.push_back(pts[j]);
  }
  if (ordered.size() < 2) return model;
  if (const auto* pm = std::get_if<PrismaticModel>(&model)) {
    double s = 0.0;
    for (std::size_t j = 1; j < ordered.size(); ++j) s += (ordered[j] - ordered[j - 1]).dot(pm->direction);
    PrismaticModel out = *pm;
    if (s < 0.0) out.direction = -out.direction;
    return out;
  }
  RevoluteModel out = std::get<RevoluteModel>(model);
  double s = 0.0;
  for (std::size_t j = 1; j < ordered.size(); ++j) {
    s += (ordered[j - 1] - out.center).cross(ordered[j] - out.center).dot(out.normal);
  }
  if (s < 0.0) out.normal = -out.normal;
  return out;
}

}  // namespace

FitResult mlesac_fit(const Trajectory& traj, ModelKind kind, const MlesacConfig& config) {
  if (config.hypotheses < 1) throw Error(ErrorCode::kInvalidArgument, "hypothesis budget must be >= 1");
  if (!(config.sigma > 0.0)) throw Error(ErrorCode::kInvalidArgument, "sigma must be positive");
  if (config.em_steps < 0) throw Error(ErrorCode::kInvalidArgument, "em_steps must be >= 0");
  const std::vector<Vec3> pts = traj.positions();
  const std::size_t m = minimal_sample_size(kind);
  if (pts.size() < m) {
    throw Error(ErrorCode::kTooFewObservations, std::string(to_string(kind)) + " fit needs at least " +
                                                    std::to_string(m) + " observations");
  }
  const double range = config.outlier_range > 0.0 ? config.outlier_range : default_outlier_range(pts);
  const double outlier_density = 1.0 / range;

  const std::vector<KinematicModel> hyps = generate_hypotheses(kind, pts, config);
  if (hyps.empty()) {
    throw Error(ErrorCode::kDegenerateInput, std::string("no non-degenerate ") + std::string(to_string(kind)) +
                                                 " sample in the observations");
  }

  std::vector<double> score(hyps.size());
  parallel_for(hyps.size(), config.threads, [&](std::size_t i) {
    std::vector<double> phi;
    gaussian_densities(residuals_of(hyps[i], pts), config.sigma, phi);
    score[i] = run_em(phi, outlier_density, config.em_steps, false).log_likelihood;
  });
  std::size_t best = 0;
  for (std::size_t i = 1; i < hyps.size(); ++i) {
    if (score[i] > score[best]) best = i;
  }

  double sigma = config.sigma;
  auto evaluate = [&](const KinematicModel& model) {
    return estimate_mixture(residuals_of(model, pts), sigma, range, config.em_steps);
  };
  auto inliers_of = [&](const MixtureEstimate& est) {
    std::vector<Vec3> in;
    for (std::size_t j = 0; j < pts.size(); ++j) {
      if (est.responsibilities[j] > 0.5) in.push_back(pts[j]);
    }
    return in;
  };

  KinematicModel model = hyps[best];
  MixtureEstimate est = evaluate(model);
  for (int round = 0; round < config.refine_rounds; ++round) {
    const std::vector<Vec3> in = inliers_of(est);
    if (in.size() < m) break;
    KinematicModel refined;
    try {
      refined = refine_on_inliers(model, in);
    } catch (const Error&) {
      break;
    }
    if (const auto* rm = std::get_if<RevoluteModel>(&refined); rm && !(rm->radius <= config.max_radius)) break;
    MixtureEstimate refined_est = evaluate(refined);
    if (!(refined_est.log_likelihood > est.log_likelihood)) break;
    model = refined;
    est = std::move(refined_est);
  }

  if (config.reestimate_sigma) {
    std::vector<double> e;
    const std::vector<double> all = residuals_of(model, pts);
    for (std::size_t j = 0; j < pts.size(); ++j) {
      if (est.responsibilities[j] > 0.5) e.push_back(all[j]);
    }
    if (!e.empty()) {
      std::nth_element(e.begin(), e.begin() + static_cast<std::ptrdiff_t>(e.size() / 2), e.end());
      sigma = std::max(1.4826 * e[e.size() / 2], 1e-6);
      est = evaluate(model);
    }
  }

  FitResult result;
  result.inlier_flags.resize(pts.size());
  for (std::size_t j = 0; j < pts.size(); ++j) result.inlier_flags[j] = est.responsibilities[j] > 0.5;
  result.model = orient_along_observations(model, pts, result.inlier_flags);
  result.log_likelihood = est.log_likelihood;
  result.gamma = est.gamma;
  result.sigma = sigma;
  result.outlier_range = range;
  result.em_trace = std::move(est.trace);
  result.hypotheses_scored = hyps.size();
  if (result.gamma < 0.05) {
    throw Error(ErrorCode::kAllOutliers, std::string(to_string(kind)) + " fit explains no observations");
  }
  return result;
}

// --- text forms -------------------------------------------------------------

std::string format_model(const KinematicModel& m) {
  auto vec = [](const Vec3& v) { return format_real(v.x()) + ' ' + format_real(v.y()) + ' ' + format_real(v.z()); };
  if (const auto* pm = std::get_if<PrismaticModel>(&m)) {
    return "prismatic origin " + vec(pm->origin) + " direction " + vec(pm->direction);
  }
  const auto& rm = std::get<RevoluteModel>(m);
  return "revolute center " + vec(rm.center) + " normal " + vec(rm.normal) + " radius " + format_real(rm.radius);
}

std::string format_trajectory(const Trajectory& t) {
  std::string out = "TRAJ " + std::string(to_string(t.door_class)) + ' ' + std::to_string(t.size()) + '\n';
  for (const Pose& p : t.observations) {
    out += format_pose(p);
    out += '\n';
  }
  return out;
}

Trajectory parse_trajectory(std::string_view body, const std::string& source) {
  std::istringstream in{std::string(body)};
  std::string line;
  std::size_t lineno = 0;
  auto fail = [&](const std::string& what) -> Error {
    return Error(ErrorCode::kParse, source + ":" + std::to_string(lineno) + ": " + what);
  };
  if (!std::getline(in, line)) {
    lineno = 1;
    throw fail("missing TRAJ header");
  }
  ++lineno;
  const auto head = text::split_ws(line);
  if (head.size() != 3 || head[0] != "TRAJ") throw fail("expected header 'TRAJ <door_class> <N>'");
  Trajectory t;
  std::uint64_t n = 0;
  try {
    t.door_class = parse_door_class(head[1]);
    n = text::parse_uint(head[2]);
  } catch (const Error& e) {
    throw fail(e.what());
  }
  if (n < 1) throw fail("trajectory must hold at least one observation");
  t.observations.reserve(static_cast<std::size_t>(std::min<std::uint64_t>(n, 1u << 20)));
  for (std::uint64_t i = 0; i < n; ++i) {
    if (!std::getline(in, line)) {
      ++lineno;
      throw fail("unexpected end of file");
    }
    ++lineno;
    try {
      t.observations.push_back(parse_pose(line));
    } catch (const Error& e) {
      throw fail(e.what());
    }
  }
  while (std::getline(in, line)) {
    ++lineno;
    if (!text::trim(line).empty()) throw fail("trailing data after the last pose");
  }
  return t;
}

Trajectory load_trajectory(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_trajectory(ss.str(), path);
}

void save_trajectory(const std::string& path, const Trajectory& t) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path);
  out << format_trajectory(t);
}

}  // namespace doorkin
