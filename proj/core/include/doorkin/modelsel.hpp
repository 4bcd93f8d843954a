#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "doorkin/kinfit.hpp"

namespace doorkin {

/// -2 log L + k ln n.
double bic(double log_likelihood, int k, std::size_t n);

/// exp(-dBIC/2) normalized, with dBIC measured from the smallest BIC.
std::vector<double> posteriors(std::span<const double> bics);

struct CandidateScore {
  ModelKind kind = ModelKind::kPrismatic;
  double bic = 0.0;
  double posterior = 0.0;
  FitResult fit;
};

struct ModelPosterior {
  std::vector<CandidateScore> candidates;  // prismatic first when present
  ModelKind winner = ModelKind::kPrismatic;

  /// Zero for a candidate whose fit failed.
  double posterior(ModelKind kind) const;
  const CandidateScore* find(ModelKind kind) const;
  const CandidateScore& winning() const;
  /// BIC of the winner, the smallest among the candidates.
  double best_bic() const { return winning().bic; }
};

/// Fits both candidates and compares them by BIC under a uniform model prior.
/// Ties go to prismatic. A candidate whose fit throws is dropped; when both
/// fail, the prismatic error propagates. Throws Error(kTooFewObservations) for
/// fewer than 3 observations.
ModelPosterior select_model(const Trajectory& traj, const MlesacConfig& config);

/// One line per candidate "kind bic posterior", then "winner <kind>".
std::string format_selection_report(const ModelPosterior& mp);

}  // namespace doorkin
