#include "bfw/simulate.hpp"

#include <cmath>
#include <stdexcept>
#include <vector>

#include "bfw/rng.hpp"

namespace bfw {

namespace {

void check_vc(const VarianceComponents& vc) {
  if (vc.sd_intercept < 0.0 || vc.sd_slope < 0.0)
    throw std::domain_error("sim_lmm: random-effect SDs must be nonnegative");
  if (!(vc.rho > -1.0 && vc.rho < 1.0))
    throw std::domain_error("sim_lmm: correlations must lie strictly inside (-1, 1)");
}

// Draw (intercept, slope) group effects with covariance Cholesky
// L = [[sd0, 0], [sd1*rho, sd1*sqrt(1-rho^2)]].
void draw_effects(std::mt19937_64& rng, const VarianceComponents& vc, int n,
                  std::vector<double>& e0, std::vector<double>& e1) {
  e0.resize(n);
  e1.resize(n);
  const double c = std::sqrt(1.0 - vc.rho * vc.rho);
  for (int g = 0; g < n; ++g) {
    const double z0 = draw_normal(rng);
    const double z1 = draw_normal(rng);
    e0[g] = vc.sd_intercept * z0;
    e1[g] = vc.sd_slope * (vc.rho * z0 + c * z1);
  }
}

}  // namespace

Dataset sim_lmm(const DesignTable& design, const SimTruth& truth, std::uint64_t seed) {
  if (design.rows.empty()) throw std::invalid_argument("sim_lmm: empty design");
  check_vc(truth.vc_subject);
  if (truth.vc_item) check_vc(*truth.vc_item);
  if (truth.sigma < 0.0) throw std::domain_error("sim_lmm: sigma must be nonnegative");

  auto rng = derive_stream(seed, "sim_lmm");
  std::vector<double> u0, u1, w0, w1;
  draw_effects(rng, truth.vc_subject, design.n_subjects, u0, u1);
  if (design.has_items()) {
    VarianceComponents vci = truth.vc_item.value_or(VarianceComponents{});
    draw_effects(rng, vci, design.n_items, w0, w1);
  }

  const std::size_t n = design.rows.size();
  std::vector<double> noise(n);  // everything except the fixed effects, on log scale
  for (std::size_t i = 0; i < n; ++i) {
    const auto& row = design.rows[i];
    double v = u0[row.subj] + u1[row.subj] * row.x;
    if (row.item) v += w0[*row.item] + w1[*row.item] * row.x;
    v += draw_normal(rng, 0.0, truth.sigma);
    noise[i] = v;
  }

  if (truth.empirical) {
    // Project the noise onto the orthogonal complement of span{1, x}.
    double sx = 0.0, sxx = 0.0, sn = 0.0, sxn = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double x = design.rows[i].x;
      sx += x;
      sxx += x * x;
      sn += noise[i];
      sxn += x * noise[i];
    }
    const double nn = static_cast<double>(n);
    const double det = nn * sxx - sx * sx;
    if (det <= 0.0) throw std::invalid_argument("sim_lmm: empirical mode needs both condition levels");
    const double a = (sxx * sn - sx * sxn) / det;   // intercept of noise on {1, x}
    const double b = (nn * sxn - sx * sn) / det;    // slope of noise on {1, x}
    for (std::size_t i = 0; i < n; ++i) noise[i] -= a + b * design.rows[i].x;
  }

  std::vector<Observation> rows(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto& d = design.rows[i];
    rows[i].subj = d.subj;
    rows[i].item = d.item;
    rows[i].x = d.x;
    rows[i].rt = std::exp(truth.beta0 + truth.beta1 * d.x + noise[i]);
  }
  return Dataset(std::move(rows));
}

}  // namespace bfw
