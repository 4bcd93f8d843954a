#include "doorkin/priors.hpp"

#include <algorithm>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>
#include <system_error>

#include "doorkin/error.hpp"
#include "doorkin/text.hpp"

namespace doorkin {

namespace fs = std::filesystem;

std::string_view to_string(Provenance p) {
  return p == Provenance::kHumanDemonstration ? "human_demonstration" : "robot_experience";
}

Provenance parse_provenance(std::string_view s) {
  if (s == "robot_experience") return Provenance::kRobotExperience;
  if (s == "human_demonstration") return Provenance::kHumanDemonstration;
  throw Error(ErrorCode::kParse, "unknown provenance '" + std::string(s) + "'");
}

PriorEntry PriorEntry::make(const Trajectory& t, Provenance provenance, std::uint64_t timestamp) {
  PriorEntry e;
  e.serialized = format_trajectory(t);
  e.trajectory = parse_trajectory(e.serialized);
  e.provenance = provenance;
  e.timestamp = timestamp;
  return e;
}

std::string PriorEntry::filename() const { return text::hex64(text::fnv1a64(serialized)) + ".traj"; }

const std::vector<PriorEntry>& PriorStore::entries(DoorClass c) const {
  static const std::vector<PriorEntry> kEmpty;
  const auto it = entries_.find(c);
  return it == entries_.end() ? kEmpty : it->second;
}

std::size_t PriorStore::size() const {
  std::size_t n = 0;
  for (const auto& [c, v] : entries_) n += v.size();
  return n;
}

const PriorEntry& PriorStore::add(const Trajectory& t, Provenance provenance) {
  auto& list = entries_[t.door_class];
  list.push_back(PriorEntry::make(t, provenance, next_timestamp_++));
  return list.back();
}

void PriorStore::replace(DoorClass c, std::size_t index, const Trajectory& t, Provenance provenance) {
  auto it = entries_.find(c);
  if (it == entries_.end() || index >= it->second.size()) {
    throw Error(ErrorCode::kInvalidArgument, "prior entry index out of range");
  }
  it->second[index] = PriorEntry::make(t, provenance, next_timestamp_++);
}

std::string PriorStore::manifest() const {
  std::string out;
  for (const auto& [cls, list] : entries_) {
    for (const auto& e : list) {
      out += std::string(to_string(cls)) + ' ' + std::string(to_string(e.provenance)) + ' ' +
             std::to_string(e.timestamp) + ' ' + e.filename() + '\n';
    }
  }
  return out;
}

namespace {

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + p.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const fs::path& p, const std::string& body) {
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + p.string());
  out << body;
  out.close();
  if (!out) throw Error(ErrorCode::kIo, "write failed for " + p.string());
}

}  // namespace

void PriorStore::save(const fs::path& dir) const {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error(ErrorCode::kIo, "cannot create store directory " + dir.string());
  std::set<std::string> referenced;
  for (const auto& [cls, list] : entries_) {
    for (const auto& e : list) {
      const std::string name = e.filename();
      if (!referenced.insert(name).second) continue;
      const fs::path p = dir / name;
      if (fs::exists(p) && read_file(p) == e.serialized) continue;
      write_file(p, e.serialized);
    }
  }
  const fs::path tmp = dir / "store.manifest.tmp";
  write_file(tmp, manifest());
  fs::rename(tmp, dir / "store.manifest", ec);
  if (ec) throw Error(ErrorCode::kIo, "cannot replace manifest in " + dir.string());
  for (const auto& item : fs::directory_iterator(dir)) {
    const fs::path p = item.path();
    if (p.extension() == ".traj" && !referenced.contains(p.filename().string())) fs::remove(p, ec);
  }
}

PriorStore PriorStore::load(const fs::path& dir) {
  PriorStore store;
  const fs::path manifest_path = dir / "store.manifest";
  if (!fs::exists(manifest_path)) return store;
  const std::string body = read_file(manifest_path);
  std::istringstream in(body);
  std::string line;
  std::size_t lineno = 0;
  auto corrupt = [&](const std::string& what) {
    return Error(ErrorCode::kCorruptStore, manifest_path.string() + ":" + std::to_string(lineno) + ": " + what);
  };
  while (std::getline(in, line)) {
    ++lineno;
    const auto tok = text::split_ws(line);
    if (tok.empty()) continue;
    if (tok.size() != 4) throw corrupt("expected 'class provenance timestamp filename'");
    DoorClass cls;
    PriorEntry e;
    try {
      cls = parse_door_class(tok[0]);
      e.provenance = parse_provenance(tok[1]);
      e.timestamp = text::parse_uint(tok[2]);
    } catch (const Error& err) {
      throw corrupt(err.what());
    }
    const std::string name(tok[3]);
    if (name.find('/') != std::string::npos || name.size() != 21 || !name.ends_with(".traj")) {
      throw corrupt("bad entry filename '" + name + "'");
    }
    try {
      e.serialized = read_file(dir / name);
      e.trajectory = parse_trajectory(e.serialized, (dir / name).string());
    } catch (const Error& err) {
      throw corrupt(err.what());
    }
    if (e.filename() != name) throw corrupt("content hash mismatch for " + name);
    if (e.trajectory.door_class != cls) throw corrupt("class mismatch for " + name);
    store.next_timestamp_ = std::max(store.next_timestamp_, e.timestamp + 1);
    store.entries_[cls].push_back(std::move(e));
  }
  return store;
}

double evidence_score(const Trajectory& traj, const MlesacConfig& config) {
  return -0.5 * select_model(traj, config).best_bic();
}

const ModelPosterior& PriorFitCache::get(const PriorEntry& entry, const MlesacConfig& config) {
  const auto key = std::make_pair(entry.serialized, config.outlier_range);
  auto it = cache_.find(key);
  if (it == cache_.end()) it = cache_.emplace(key, select_model(entry.trajectory, config)).first;
  return it->second;
}

PriorSelection select_with_priors(const Trajectory& new_traj, const PriorStore& store, const MlesacConfig& config,
                                  Provenance provenance, PriorFitCache* cache) {
  const auto& stored = store.entries(new_traj.door_class);

  MlesacConfig shared = config;
  if (shared.outlier_range <= 0.0) {
    std::vector<Vec3> all = new_traj.positions();
    for (const auto& e : stored) {
      for (const Pose& p : e.trajectory.observations) all.push_back(p.translation);
    }
    shared.outlier_range = default_outlier_range(all);
  }

  PriorSelection sel;
  sel.fresh = select_model(new_traj, shared);
  sel.fresh_score = -0.5 * sel.fresh.best_bic();

  double best_joint = -std::numeric_limits<double>::infinity();
  for (std::size_t s = 0; s < stored.size(); ++s) {
    try {
      ModelPosterior alone = cache ? cache->get(stored[s], shared) : select_model(stored[s].trajectory, shared);
      const double stored_score = -0.5 * alone.best_bic();
      ModelPosterior joint = select_model(concatenate(stored[s].trajectory, new_traj), shared);
      const double joint_score = -0.5 * joint.best_bic();
      if (merge_preferred(joint_score, sel.fresh_score, stored_score) && joint_score > best_joint) {
        best_joint = joint_score;
        sel.merged_index = s;
        sel.stored = std::move(alone);
        sel.joint = std::move(joint);
        sel.joint_score = joint_score;
      }
    } catch (const Error&) {
      continue;
    }
  }

  sel.updated = store;
  if (sel.merged_index) {
    const auto& entry = stored[*sel.merged_index];
    sel.updated.replace(new_traj.door_class, *sel.merged_index, concatenate(entry.trajectory, new_traj),
                        entry.provenance);
  } else {
    sel.updated.add(new_traj, provenance);
  }
  return sel;
}

}  // namespace doorkin
