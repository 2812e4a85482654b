#include "bfw/evidence.hpp"

#include <cmath>
#include <stdexcept>

namespace bfw {

void ModelPrior::validate() const {
  if (p_h0 < 0.0 || p_h1 < 0.0 || std::fabs(p_h0 + p_h1 - 1.0) > 1e-12)
    throw std::invalid_argument("model prior: probabilities must be nonnegative and sum to 1");
}

ModelPosterior posterior_model_probs(double bf10, const ModelPrior& prior) {
  prior.validate();
  if (!(bf10 > 0.0)) throw std::domain_error("posterior_model_probs: bf10 must be > 0");
  if (prior.degenerate()) return {prior.p_h0, prior.p_h1, true};
  const double ratio = bf10 * prior.p_h1 / prior.p_h0;
  const double p_h1 = ratio / (1.0 + ratio);
  return {1.0 - p_h1, p_h1, false};
}

std::string jeffreys_label(double bf) {
  if (!(bf > 0.0)) throw std::domain_error("jeffreys_label: bf must be > 0");
  if (bf >= 100.0) return "Extreme change in evidence towards M1";
  if (bf >= 30.0) return "Very strong change in evidence towards M1";
  if (bf >= 10.0) return "Strong change in evidence towards M1";
  if (bf >= 3.0) return "Moderate change in evidence towards M1";
  if (bf > 1.0) return "Anecdotal change in evidence towards M1";
  if (bf == 1.0) return "No change in evidence";
  if (bf > 1.0 / 3.0) return "Anecdotal change in evidence towards M2";
  if (bf > 1.0 / 10.0) return "Moderate change in evidence towards M2";
  if (bf > 1.0 / 30.0) return "Strong change in evidence towards M2";
  if (bf > 1.0 / 100.0) return "Very strong change in evidence towards M2";
  return "Extreme change in evidence towards M2";
}

double prob_positive(std::span<const double> draws) {
  if (draws.empty()) throw std::invalid_argument("prob_positive: empty draws");
  std::size_t n = 0;
  for (double x : draws)
    if (x > 0.0) ++n;
  return static_cast<double>(n) / static_cast<double>(draws.size());
}

}  // namespace bfw
