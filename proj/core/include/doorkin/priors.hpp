#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "doorkin/kinfit.hpp"
#include "doorkin/modelsel.hpp"

namespace doorkin {

enum class Provenance { kRobotExperience, kHumanDemonstration };

std::string_view to_string(Provenance p);
Provenance parse_provenance(std::string_view s);

/// A stored trajectory. `trajectory` always equals parse_trajectory(serialized),
/// so an entry survives save/load bit for bit.
struct PriorEntry {
  Trajectory trajectory;
  std::string serialized;
  Provenance provenance = Provenance::kRobotExperience;
  std::uint64_t timestamp = 0;

  static PriorEntry make(const Trajectory& t, Provenance provenance, std::uint64_t timestamp);

  /// Content address: FNV-1a 64 of the serialized bytes, hex, ".traj".
  std::string filename() const;
  bool operator==(const PriorEntry& o) const {
    return serialized == o.serialized && provenance == o.provenance && timestamp == o.timestamp;
  }
};

/// Previously observed trajectories per door class.
///
/// On disk: a directory holding "store.manifest" with one
/// "class provenance timestamp filename" line per entry, plus the .traj files.
/// Timestamps are logical (a per-store counter) so that runs are reproducible.
class PriorStore {
 public:
  const std::vector<PriorEntry>& entries(DoorClass c) const;
  std::size_t size() const;
  std::size_t size(DoorClass c) const { return entries(c).size(); }

  const PriorEntry& add(const Trajectory& t, Provenance provenance);
  void replace(DoorClass c, std::size_t index, const Trajectory& t, Provenance provenance);
  std::uint64_t next_timestamp() const { return next_timestamp_; }

  std::string manifest() const;
  /// Writes entry files, then the manifest atomically; removes .traj files the
  /// manifest no longer references.
  void save(const std::filesystem::path& dir) const;
  /// A missing directory or manifest yields an empty store. Malformed manifest
  /// lines, missing files or hash mismatches throw Error(kCorruptStore).
  static PriorStore load(const std::filesystem::path& dir);

  bool operator==(const PriorStore& o) const {
    return entries_ == o.entries_ && next_timestamp_ == o.next_timestamp_;
  }

 private:
  std::map<DoorClass, std::vector<PriorEntry>> entries_;
  std::uint64_t next_timestamp_ = 1;
};

/// Log-evidence proxy -BIC/2 of the best candidate on `traj`.
double evidence_score(const Trajectory& traj, const MlesacConfig& config);

/// Merge test with log-evidence proxies: joint > fresh + stored, i.e.
/// BIC(joint) < BIC(fresh) + BIC(stored).
inline bool merge_preferred(double joint_score, double fresh_score, double stored_score) {
  return joint_score > fresh_score + stored_score;
}

/// Memo of model selections on stored trajectories, keyed by entry content and
/// outlier range. Not thread safe.
class PriorFitCache {
 public:
  const ModelPosterior& get(const PriorEntry& entry, const MlesacConfig& config);
  std::size_t size() const { return cache_.size(); }

 private:
  std::map<std::pair<std::string, double>, ModelPosterior> cache_;
};

struct PriorSelection {
  ModelPosterior fresh;                      // new trajectory alone
  std::optional<std::size_t> merged_index;   // entry of the new trajectory's class
  std::optional<ModelPosterior> stored;      // that entry alone
  std::optional<ModelPosterior> joint;       // new + that entry
  double fresh_score = 0.0;
  std::optional<double> joint_score;
  PriorStore updated;

  const ModelPosterior& best() const { return joint ? *joint : fresh; }
};

/// Model selection using prior experience.
///
/// Fits the new trajectory alone, then every stored trajectory of the same
/// class both alone and joined with the new data. The joint model is kept when
/// it beats the separate ones (merge_preferred) and every earlier joint score;
/// ties keep the earliest entry. All fits share one outlier range computed over
/// the new data and the class's stored data unless the config fixes it.
///
/// The returned store has the new trajectory appended, or, on a merge, the
/// matched entry replaced by stored-then-new observations. Entries whose fits
/// fail are skipped; a failing fit of the new trajectory propagates.
PriorSelection select_with_priors(const Trajectory& new_traj, const PriorStore& store, const MlesacConfig& config,
                                  Provenance provenance = Provenance::kRobotExperience,
                                  PriorFitCache* cache = nullptr);

}  // namespace doorkin
