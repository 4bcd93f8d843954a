#include "doorkin/modelsel.hpp"

#include <algorithm>
#include <cmath>
#include <exception>

#include "doorkin/error.hpp"

namespace doorkin {

double bic(double log_likelihood, int k, std::size_t n) {
  if (n < 1 || k < 1) throw Error(ErrorCode::kInvalidArgument, "bic needs n >= 1 and k >= 1");
  return -2.0 * log_likelihood + static_cast<double>(k) * std::log(static_cast<double>(n));
}

std::vector<double> posteriors(std::span<const double> bics) {
  if (bics.empty()) throw Error(ErrorCode::kInvalidArgument, "posteriors of an empty candidate list");
  const double lo = *std::min_element(bics.begin(), bics.end());
  std::vector<double> w(bics.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < bics.size(); ++i) {
    w[i] = std::exp(-0.5 * (bics[i] - lo));
    sum += w[i];
  }
  for (double& x : w) x /= sum;
  return w;
}

double ModelPosterior::posterior(ModelKind kind) const {
  const CandidateScore* c = find(kind);
  return c ? c->posterior : 0.0;
}

const CandidateScore* ModelPosterior::find(ModelKind kind) const {
  for (const auto& c : candidates) {
    if (c.kind == kind) return &c;
  }
  return nullptr;
}

const CandidateScore& ModelPosterior::winning() const {
  const CandidateScore* c = find(winner);
  if (c == nullptr) throw Error(ErrorCode::kInvalidArgument, "model posterior without a winner");
  return *c;
}

ModelPosterior select_model(const Trajectory& traj, const MlesacConfig& config) {
  if (traj.size() < RevoluteModel::kMinimalSample) {
    throw Error(ErrorCode::kTooFewObservations, "model selection needs at least 3 observations");
  }
  ModelPosterior mp;
  std::exception_ptr first_error;
  for (ModelKind kind : {ModelKind::kPrismatic, ModelKind::kRevolute}) {
    try {
      CandidateScore c;
      c.kind = kind;
      c.fit = mlesac_fit(traj, kind, config);
      c.bic = bic(c.fit.log_likelihood, parameter_count(kind), traj.size());
      mp.candidates.push_back(std::move(c));
    } catch (const Error&) {
      if (!first_error) first_error = std::current_exception();
    }
  }
  if (mp.candidates.empty()) std::rethrow_exception(first_error);

  std::vector<double> b;
  for (const auto& c : mp.candidates) b.push_back(c.bic);
  const std::vector<double> post = posteriors(b);
  std::size_t win = 0;
  for (std::size_t i = 0; i < mp.candidates.size(); ++i) {
    mp.candidates[i].posterior = post[i];
    if (mp.candidates[i].bic < mp.candidates[win].bic) win = i;
  }
  mp.winner = mp.candidates[win].kind;
  return mp;
}

std::string format_selection_report(const ModelPosterior& mp) {
  std::string out;
  for (const auto& c : mp.candidates) {
    out += std::string(to_string(c.kind)) + ' ' + format_real(c.bic) + ' ' + format_real(c.posterior) + '\n';
  }
  out += "winner " + std::string(to_string(mp.winner)) + '\n';
  return out;
}

}  // namespace doorkin
