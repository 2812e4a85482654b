#include "bfw/predictive.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "bfw/math_util.hpp"
#include "bfw/rng.hpp"
#include "bfw/sbc.hpp"

namespace bfw {

namespace {

constexpr int n_bins = 30;
constexpr double hist_cap_ms = 3000.0;

}  // namespace

PredictiveSummary summarize_predictive(const std::vector<Dataset>& datasets) {
  if (datasets.empty()) throw std::invalid_argument("predictive: need >= 1 dataset");
  PredictiveSummary s;
  const std::size_t nd = datasets.size();
  s.mean_rt.reserve(nd);
  s.cond_diff.reserve(nd);
  s.sd_rt.reserve(nd);

  const double bin_width = hist_cap_ms / n_bins;
  s.bin_edges.resize(n_bins + 1);
  for (int b = 0; b <= n_bins; ++b) s.bin_edges[b] = b * bin_width;
  std::vector<std::vector<double>> hist_per_dataset(nd, std::vector<double>(n_bins, 0.0));

  for (std::size_t d = 0; d < nd; ++d) {
    const auto& rows = datasets[d].rows();
    double sum = 0.0, sum_pos = 0.0, sum_neg = 0.0;
    std::size_t n_pos = 0, n_neg = 0;
    for (const auto& r : rows) {
      sum += r.rt;
      if (r.x > 0) {
        sum_pos += r.rt;
        ++n_pos;
      } else {
        sum_neg += r.rt;
        ++n_neg;
      }
      const double capped = std::min(r.rt, hist_cap_ms - 1e-9);
      const int bin = std::min(n_bins - 1, static_cast<int>(capped / bin_width));
      hist_per_dataset[d][bin] += 1.0;
    }
    const double n = static_cast<double>(rows.size());
    s.mean_rt.push_back(sum / n);
    double diff = 0.0;
    if (n_pos > 0 && n_neg > 0)
      diff = sum_pos / static_cast<double>(n_pos) - sum_neg / static_cast<double>(n_neg);
    s.cond_diff.push_back(diff);
    double ss = 0.0;
    const double m = sum / n;
    for (const auto& r : rows) ss += (r.rt - m) * (r.rt - m);
    s.sd_rt.push_back(rows.size() > 1 ? std::sqrt(ss / (n - 1.0)) : 0.0);
    for (auto& h : hist_per_dataset[d]) h /= n;
  }

  s.hist_bands.resize(n_bins);
  for (int b = 0; b < n_bins; ++b) {
    std::vector<double> col(nd);
    for (std::size_t d = 0; d < nd; ++d) col[d] = hist_per_dataset[d][b];
    for (int q = 0; q < 9; ++q) s.hist_bands[b][q] = quantile(col, 0.1 * (q + 1));
  }
  return s;
}

PredictiveSummary prior_predictive_check(const DesignTable& design, const PriorSpec& prior,
                                         const LmmModelSpec& sim_spec, int n_datasets,
                                         std::uint64_t seed) {
  if (n_datasets < 1) throw std::invalid_argument("predictive: n_datasets must be >= 1");
  std::vector<Dataset> datasets;
  datasets.reserve(n_datasets);
  for (int d = 0; d < n_datasets; ++d) {
    auto rng = derive_stream(seed, "prior_pred", d);
    const SimTruth truth = draw_sim_truth(rng, prior, sim_spec);
    datasets.push_back(sim_lmm(design, truth, rng()));
  }
  return summarize_predictive(datasets);
}

PredictiveSummary posterior_predictive_check(const LmmModel& model, const ChainSet& chains,
                                             int n_datasets, std::uint64_t seed) {
  if (n_datasets < 1) throw std::invalid_argument("predictive: n_datasets must be >= 1");
  const std::size_t total = chains.total_draws();
  if (total == 0) throw std::invalid_argument("predictive: empty chains");

  std::vector<Dataset> datasets;
  datasets.reserve(n_datasets);
  std::vector<double> theta(chains.dim);
  for (int d = 0; d < n_datasets; ++d) {
    // Evenly spaced draws through the pooled chains.
    const std::size_t flat = (static_cast<std::size_t>(d) * total) / n_datasets;
    const int chain = static_cast<int>(flat / chains.n_iter);
    const int it = static_cast<int>(flat % chains.n_iter);
    for (int k = 0; k < chains.dim; ++k) theta[k] = chains.value(chain, it, k);
    const ParameterVector p = model.constrain(theta);

    auto rng = derive_stream(seed, "post_pred", d);
    const double cu = std::sqrt(1.0 - p.rho_u * p.rho_u);
    const double cw = std::sqrt(1.0 - p.rho_w * p.rho_w);
    std::vector<Observation> rows = model.data().rows();
    for (auto& r : rows) {
      double mu = p.beta0 + p.beta1 * r.x + p.sigma_u0 * p.z_u0[r.subj];
      if (!p.z_u1.empty())
        mu += p.sigma_u1 * (p.rho_u * p.z_u0[r.subj] + cu * p.z_u1[r.subj]) * r.x;
      if (r.item && !p.z_w0.empty()) {
        mu += p.sigma_w0 * p.z_w0[*r.item];
        if (!p.z_w1.empty())
          mu += p.sigma_w1 * (p.rho_w * p.z_w0[*r.item] + cw * p.z_w1[*r.item]) * r.x;
      }
      r.rt = std::exp(mu + draw_normal(rng, 0.0, p.sigma));
    }
    datasets.emplace_back(std::move(rows));
  }
  return summarize_predictive(datasets);
}

}  // namespace bfw
