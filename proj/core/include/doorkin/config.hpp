#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "doorkin/doorsim.hpp"
#include "doorkin/grasp.hpp"
#include "doorkin/kinfit.hpp"

namespace doorkin {

/// Settings shared by the command-line tools.
///
/// Text form: one "key = value" per line, '#' starts a comment. Unknown keys,
/// duplicates and out-of-range values throw Error(kParse). format() lists every
/// key in a fixed order, and parse(format(c)) == c.
struct RunConfig {
  std::uint64_t seed = 0;
  unsigned threads = 1;

  // model fitting
  double sigma = 0.005;
  double outlier_range = 0.0;  // 0 selects the data-dependent default
  int hypotheses = 200;
  int em_steps = 10;
  bool reestimate_sigma = false;
  double max_radius = 2.0;
  int refine_rounds = 3;

  // grasp pipeline
  int k_neighbors = 20;
  double alpha = 1.0;
  double leaf = 0.05;
  double plane_threshold = 0.01;
  int ransac_iters = 500;
  double standoff = 0.05;

  // simulation and opening
  double noise_sigma = 0.005;
  double outlier_rate = 0.1;
  double step = 0.03;
  int iterations = 40;
  bool use_priors = false;
  double torque_threshold = 2.0;

  std::string store;  // empty: DOORKIN_STORE, then "doorkin_store"
  std::string out_dir = ".";

  /// Sets one key from its text value, validating the range.
  void set(std::string_view key, std::string_view value);
  std::string get(std::string_view key) const;
  static const std::vector<std::string>& keys();

  std::string format() const;
  static RunConfig parse(std::string_view text, const std::string& source = "<string>");
  static RunConfig load(const std::string& path);

  MlesacConfig mlesac() const;
  GraspConfig grasp() const;
  ExperimentSettings experiment() const;

  bool operator==(const RunConfig&) const = default;
};

}  // namespace doorkin
