#include "cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <ostream>
#include <sstream>

#include "doorkin/config.hpp"
#include "doorkin/doorsim.hpp"
#include "doorkin/error.hpp"
#include "doorkin/grasp.hpp"
#include "doorkin/modelsel.hpp"
#include "doorkin/priors.hpp"
#include "doorkin/text.hpp"

namespace doorkin::cli {

namespace {

namespace fs = std::filesystem;

struct Options {
  std::string config_path;
  std::vector<std::string> sets;
  std::optional<std::uint64_t> seed;
  std::optional<unsigned> threads;
  std::string store;

  // positional arguments and per-command flags
  std::string input;
  std::string input2;
  std::string csv;
  std::string out_dir;
  std::string prefix;
  std::string add_provenance = "human_demonstration";
  std::string run_provenance = "robot_experience";
  std::string experiment;
  std::string door_kind;
  int seeds = 0;
  int count = 40;
  bool use_priors = false;
  bool push = false;
};

RunConfig resolve_config(const Options& o) {
  RunConfig c = o.config_path.empty() ? RunConfig{} : RunConfig::load(o.config_path);
  for (const auto& kv : o.sets) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw Error(ErrorCode::kParse, "--set expects key=value, got '" + kv + "'");
    c.set(text::trim(std::string_view(kv).substr(0, eq)), text::trim(std::string_view(kv).substr(eq + 1)));
  }
  if (o.seed) c.seed = *o.seed;
  if (o.threads) c.set("threads", std::to_string(*o.threads));
  return c;
}

fs::path store_path(const Options& o, const RunConfig& c) {
  if (!o.store.empty()) return o.store;
  if (!c.store.empty()) return c.store;
  if (const char* env = std::getenv("DOORKIN_STORE"); env != nullptr && *env != '\0') return env;
  return "doorkin_store";
}

std::ofstream open_out(const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error(ErrorCode::kIo, "cannot write " + path.string());
  return f;
}

void print_fits(std::ostream& out, const ModelPosterior& mp) {
  out << format_selection_report(mp);
  for (const auto& c : mp.candidates) {
    out << "fit " << format_model(c.fit.model) << " gamma " << format_real(c.fit.gamma) << " inliers "
        << c.fit.inlier_count() << '\n';
  }
}

void print_model_error(std::ostream& out, const KinematicModel& estimate, const KinematicModel& truth) {
  const ModelError e = model_error(estimate, truth);
  if (!e.same_kind) {
    out << "error kind_mismatch truth " << to_string(kind_of(truth)) << '\n';
    return;
  }
  out << "error axis_deg " << format_real(e.axis * 180.0 / std::numbers::pi);
  if (kind_of(truth) == ModelKind::kRevolute) {
    out << " center " << format_real(e.center) << " radius " << format_real(e.radius);
  }
  out << '\n';
}

double median(std::vector<int> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

// --- commands -------------------------------------------------------------

int cmd_grasp(const Options& o, const RunConfig& c, std::ostream& out, std::ostream& err) {
  const PointCloud cloud = load_opc(o.input);
  const std::vector<BoundingBox> boxes = load_boxes(o.input2);
  const GraspReport report = estimate_grasp_poses(cloud, boxes, c.grasp());
  for (const auto& g : report.grasps) out << format_grasp_line(g) << '\n';
  for (const auto& f : report.failures) err << format_failure_line(f) << '\n';
  return report.grasps.empty() ? kNoResult : kOk;
}

int cmd_fit(const Options& o, const RunConfig& c, std::ostream& out) {
  const Trajectory traj = load_trajectory(o.input);
  print_fits(out, select_model(traj, c.mlesac()));
  return kOk;
}

int cmd_open(const Options& o, const RunConfig& c, std::ostream& out) {
  const DoorSpec door = load_door_spec(o.input);
  OpeningConfig oc;
  oc.step = c.step;
  oc.iterations = c.iterations;
  oc.use_priors = o.use_priors || c.use_priors;
  oc.fit = c.mlesac();
  oc.seed = c.seed;
  oc.initial_sign = o.push ? -1 : 1;
  PriorStore store;
  if (oc.use_priors) store = PriorStore::load(store_path(o, c));
  oc.store = &store;

  const OpeningLog log = run_opening(door, oc);
  const fs::path csv = o.csv.empty() ? fs::path(c.out_dir) / "opening.csv" : fs::path(o.csv);
  {
    std::ofstream f = open_out(csv);
    write_opening_csv(f, log);
  }
  out << "iterations " << log.records.size() << '\n';
  if (!log.records.empty()) {
    const OpeningRecord& last = log.records.back();
    out << "winner " << to_string(last.winner) << " posterior "
        << format_real(log.posterior_of(log.records.size() - 1, last.winner)) << '\n';
    if (last.estimate) {
      out << "model " << format_model(*last.estimate) << '\n';
      print_model_error(out, *last.estimate, door.true_model);
    }
  }
  if (log.stopped_by) {
    out << "stopped " << to_string(*log.stopped_by) << ": " << log.stop_message << '\n';
    return kStopped;
  }
  return kOk;
}

int cmd_priors_list(const Options& o, const RunConfig& c, std::ostream& out) {
  out << PriorStore::load(store_path(o, c)).manifest();
  return kOk;
}

int cmd_priors_add(const Options& o, const RunConfig& c, std::ostream& out) {
  const fs::path dir = store_path(o, c);
  PriorStore store = PriorStore::load(dir);
  const Trajectory traj = load_trajectory(o.input);
  const PriorEntry& e = store.add(traj, parse_provenance(o.add_provenance));
  out << "added " << to_string(traj.door_class) << ' ' << to_string(e.provenance) << ' ' << e.timestamp << ' '
      << e.filename() << '\n';
  store.save(dir);
  return kOk;
}

int cmd_priors_run(const Options& o, const RunConfig& c, std::ostream& out) {
  const fs::path dir = store_path(o, c);
  const PriorStore store = PriorStore::load(dir);
  const Trajectory traj = load_trajectory(o.input);
  const PriorSelection sel = select_with_priors(traj, store, c.mlesac(), parse_provenance(o.run_provenance));
  out << "fresh score " << format_real(sel.fresh_score) << '\n';
  print_fits(out, sel.fresh);
  if (sel.joint) {
    out << "merged entry " << *sel.merged_index << " score " << format_real(*sel.joint_score) << '\n';
    print_fits(out, *sel.joint);
  } else {
    out << "appended\n";
  }
  out << "best " << format_model(sel.best().winning().fit.model) << '\n';
  out << "store_size " << sel.updated.size() << '\n';
  sel.updated.save(dir);
  return kOk;
}

std::string door_name(ModelKind k) { return std::string(to_string(k)) + "_door"; }

int cmd_experiment(const Options& o, const RunConfig& c, std::ostream& out) {
  ExperimentSettings s = c.experiment();
  // Parallelism goes to the seeds; every fit runs on one thread.
  s.fit.threads = 1;
  const fs::path dir = o.out_dir.empty() ? fs::path(c.out_dir) : fs::path(o.out_dir);
  const auto count = static_cast<std::size_t>(o.seeds);
  const std::vector<PriorRegime> regimes =
      o.experiment == "fig13a"
          ? std::vector<PriorRegime>{PriorRegime::kNone}
          : std::vector<PriorRegime>{PriorRegime::kNone, PriorRegime::kPrismatic, PriorRegime::kRevolute,
                                     PriorRegime::kBalanced};
  std::ostringstream summary;
  summary << "door,regime,final_mean,median_obs_to_0.9,converged,runs\n";
  for (ModelKind kind : {ModelKind::kPrismatic, ModelKind::kRevolute}) {
    for (PriorRegime regime : regimes) {
      const std::vector<TrialResult> trials = run_trials(kind, regime, c.seed, count, s, c.threads);
      std::vector<std::vector<double>> curves;
      std::vector<int> reach;
      int converged = 0;
      for (const auto& t : trials) {
        curves.push_back(t.curve);
        reach.push_back(observations_to_reach(t.curve, 0.9));
        converged += t.final_winner == kind ? 1 : 0;
      }
      const CurveStats stats = aggregate_curves(curves);
      std::string name = o.experiment + "_" + door_name(kind);
      if (o.experiment == "fig13b") name += "_" + std::string(to_string(regime));
      {
        std::ofstream f = open_out(dir / (name + ".csv"));
        write_curve_csv(f, stats);
      }
      summary << door_name(kind) << ',' << to_string(regime) << ',' << format_real(stats.mean.back()) << ','
              << format_real(median(reach)) << ',' << converged << ',' << trials.size() << '\n';
      out << "wrote " << (dir / (name + ".csv")).string() << '\n';
    }
  }
  {
    std::ofstream f = open_out(dir / (o.experiment + "_summary.csv"));
    f << summary.str();
  }
  out << summary.str();
  return kOk;
}

int cmd_generate_door(const Options& o, const RunConfig& c, std::ostream& out) {
  const DoorSpec door = random_door(parse_model_kind(o.door_kind), c.seed, c.experiment());
  const std::string text = format_door_spec(door);
  if (o.csv.empty()) {
    out << text;
  } else {
    std::ofstream f = open_out(o.csv);
    f << text;
  }
  return kOk;
}

int cmd_generate_traj(const Options& o, const RunConfig& c, std::ostream& out) {
  if (o.count < 1) throw Error(ErrorCode::kInvalidArgument, "--n must be >= 1");
  const DoorSpec door = load_door_spec(o.input);
  const Trajectory traj = generate_trajectory(door, static_cast<std::size_t>(o.count), c.seed);
  if (o.csv.empty()) {
    out << format_trajectory(traj);
  } else {
    save_trajectory(o.csv, traj);
  }
  return kOk;
}

int cmd_generate_scene(const Options& o, const RunConfig& c, std::ostream& out) {
  const Scene scene = random_scene(c.seed, 0.002);
  const std::string prefix = o.prefix.empty() ? (fs::path(c.out_dir) / "scene").string() : o.prefix;
  if (fs::path(prefix).has_parent_path()) fs::create_directories(fs::path(prefix).parent_path());
  save_opc(prefix + ".opc", scene.cloud);
  save_boxes(prefix + ".boxes", scene.boxes);
  for (const auto& t : scene.truth) {
    out << "truth normal " << format_real(t.door_normal.x()) << ' ' << format_real(t.door_normal.y()) << ' '
        << format_real(t.door_normal.z()) << " handle " << format_real(t.handle_centroid.x()) << ' '
        << format_real(t.handle_centroid.y()) << ' ' << format_real(t.handle_centroid.z()) << '\n';
  }
  return kOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Door handle grasping and door kinematics toolkit", "doorkin"};
  app.require_subcommand(1);
  app.fallthrough();
  Options o;
  app.add_option("--config", o.config_path, "Config file of key = value lines")->check(CLI::ExistingFile);
  app.add_option("--set", o.sets, "Override one config key, key=value");
  app.add_option("--seed", o.seed, "Random seed");
  app.add_option("--threads", o.threads, "Worker threads");
  app.add_option("--store", o.store, "Prior store directory (default: DOORKIN_STORE, then ./doorkin_store)");

  auto* grasp = app.add_subcommand("grasp", "Grasp poses from a cloud and detection boxes");
  grasp->add_option("cloud", o.input, "Organized cloud (.opc)")->required();
  grasp->add_option("boxes", o.input2, "Detections (.boxes)")->required();

  auto* fit = app.add_subcommand("fit", "Select and fit a kinematic model to a trajectory");
  fit->add_option("trajectory", o.input, ".traj file")->required();

  auto* open = app.add_subcommand("open", "Simulated opening of a door spec");
  open->add_option("door", o.input, "Door spec file")->required();
  open->add_option("--csv", o.csv, "Opening log CSV (default: out_dir/opening.csv)");
  open->add_flag("--use-priors", o.use_priors, "Select models with the prior store");
  open->add_flag("--push", o.push, "Initial guess pushes instead of pulling");

  auto* priors = app.add_subcommand("priors", "Prior store");
  priors->require_subcommand(1);
  auto* p_list = priors->add_subcommand("list", "Print the manifest");
  auto* p_add = priors->add_subcommand("add", "Store a demonstrated trajectory");
  p_add->add_option("trajectory", o.input, ".traj file")->required();
  p_add->add_option("--provenance", o.add_provenance, "robot_experience or human_demonstration");
  auto* p_run = priors->add_subcommand("run", "Select with priors and update the store");
  p_run->add_option("trajectory", o.input, ".traj file")->required();
  p_run->add_option("--provenance", o.run_provenance, "robot_experience or human_demonstration");

  auto* exp = app.add_subcommand("experiment", "Seeded posterior-convergence batches");
  exp->add_option("name", o.experiment, "fig13a or fig13b")->required()->check(CLI::IsMember({"fig13a", "fig13b"}));
  exp->add_option("--seeds", o.seeds, "Number of seeded runs per batch")->required()->check(CLI::PositiveNumber);
  exp->add_option("--out", o.out_dir, "Output directory (default: out_dir)");

  auto* gen = app.add_subcommand("generate", "Synthetic inputs");
  gen->require_subcommand(1);
  auto* g_door = gen->add_subcommand("door", "Random door spec");
  g_door->add_option("kind", o.door_kind, "prismatic or revolute")
      ->required()
      ->check(CLI::IsMember({"prismatic", "revolute"}));
  g_door->add_option("--out", o.csv, "Output file (default: standard output)");
  auto* g_traj = gen->add_subcommand("traj", "Noisy trajectory of a door spec");
  g_traj->add_option("door", o.input, "Door spec file")->required();
  g_traj->add_option("--n", o.count, "Observations");
  g_traj->add_option("--out", o.csv, "Output file (default: standard output)");
  auto* g_scene = gen->add_subcommand("scene", "Random single-door scene");
  g_scene->add_option("--prefix", o.prefix, "Writes <prefix>.opc and <prefix>.boxes");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kUsage;
  }
  if (*exp && !o.seed) {
    err << "doorkin: experiment needs --seed\n";
    return kUsage;
  }

  try {
    const RunConfig c = resolve_config(o);
    if (*grasp) return cmd_grasp(o, c, out, err);
    if (*fit) return cmd_fit(o, c, out);
    if (*open) return cmd_open(o, c, out);
    if (*p_list) return cmd_priors_list(o, c, out);
    if (*p_add) return cmd_priors_add(o, c, out);
    if (*p_run) return cmd_priors_run(o, c, out);
    if (*exp) return cmd_experiment(o, c, out);
    if (*g_door) return cmd_generate_door(o, c, out);
    if (*g_traj) return cmd_generate_traj(o, c, out);
    if (*g_scene) return cmd_generate_scene(o, c, out);
  } catch (const Error& e) {
    err << "doorkin: " << to_string(e.code()) << ": " << e.what() << '\n';
    return e.code() == ErrorCode::kTooFewObservations ? kNoResult : kFailure;
  } catch (const std::exception& e) {
    err << "doorkin: " << e.what() << '\n';
    return kFailure;
  }
  return kUsage;
}

}  // namespace doorkin::cli
