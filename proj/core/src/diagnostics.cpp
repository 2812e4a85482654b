#include "bfw/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "bfw/math_util.hpp"

namespace bfw {

namespace {

constexpr double nan_v = std::numeric_limits<double>::quiet_NaN();

std::vector<std::vector<double>> split_chains(const std::vector<std::vector<double>>& chains) {
  std::vector<std::vector<double>> out;
  out.reserve(chains.size() * 2);
  for (const auto& c : chains) {
    const std::size_t half = c.size() / 2;
    out.emplace_back(c.begin(), c.begin() + half);
    out.emplace_back(c.begin() + half, c.begin() + 2 * half);
  }
  return out;
}

bool is_constant(const std::vector<std::vector<double>>& chains) {
  const double first = chains.front().front();
  for (const auto& c : chains)
    for (double v : c)
      if (v != first) return false;
  return true;
}

// Average rank over the pooled sample (ties get midranks), then the normal
// quantile of the fractional rank with the usual 3/8 offset.
std::vector<std::vector<double>> rank_normalize(const std::vector<std::vector<double>>& chains) {
  struct Entry {
    double value;
    std::size_t chain, idx;
  };
  std::vector<Entry> entries;
  std::size_t total = 0;
  for (const auto& c : chains) total += c.size();
  entries.reserve(total);
  for (std::size_t m = 0; m < chains.size(); ++m)
    for (std::size_t i = 0; i < chains[m].size(); ++i) entries.push_back({chains[m][i], m, i});
  std::sort(entries.begin(), entries.end(),
            [](const Entry& a, const Entry& b) { return a.value < b.value; });

  std::vector<std::vector<double>> out(chains.size());
  for (std::size_t m = 0; m < chains.size(); ++m) out[m].resize(chains[m].size());
  const double n = static_cast<double>(total);
  std::size_t i = 0;
  while (i < total) {
    std::size_t j = i;
    while (j < total && entries[j].value == entries[i].value) ++j;
    const double mid_rank = 0.5 * (static_cast<double>(i + 1) + static_cast<double>(j));
    const double z = normal_quantile((mid_rank - 0.375) / (n + 0.25));
    for (std::size_t k = i; k < j; ++k) out[entries[k].chain][entries[k].idx] = z;
    i = j;
  }
  return out;
}

double split_rhat(const std::vector<std::vector<double>>& split) {
  const std::size_t m = split.size();
  const double n = static_cast<double>(split.front().size());
  std::vector<double> means(m), vars(m);
  for (std::size_t c = 0; c < m; ++c) {
    means[c] = mean(split[c]);
    vars[c] = sample_variance(split[c]);
  }
  const double w = mean(vars);
  const double b_over_n = m > 1 ? sample_variance(means) : 0.0;
  if (w <= 0.0) return nan_v;
  const double var_plus = w * (n - 1.0) / n + b_over_n;
  return std::sqrt(var_plus / w);
}

// Geyer initial-monotone-sequence estimator over split chains.
double ess_split(const std::vector<std::vector<double>>& split) {
  const std::size_t m = split.size();
  const std::size_t n = split.front().size();
  if (n < 2) return nan_v;

  std::vector<double> means(m), vars(m);
  for (std::size_t c = 0; c < m; ++c) {
    means[c] = mean(split[c]);
    vars[c] = sample_variance(split[c]);
  }
  const double w = mean(vars);
  if (w <= 0.0) return nan_v;
  const double b_over_n = m > 1 ? sample_variance(means) : 0.0;
  const double nd = static_cast<double>(n);
  const double var_plus = w * (nd - 1.0) / nd + b_over_n;

  auto acov_at = [&](std::size_t chain, std::size_t lag) {
    const auto& c = split[chain];
    const double mu = means[chain];
    double s = 0.0;
    for (std::size_t i = 0; i + lag < n; ++i) s += (c[i] - mu) * (c[i + lag] - mu);
    return s / nd;
  };

  auto rho_at = [&](std::size_t lag) {
    double acov_mean = 0.0;
    for (std::size_t c = 0; c < m; ++c) acov_mean += acov_at(c, lag);
    acov_mean /= static_cast<double>(m);
    return 1.0 - (w - acov_mean) / var_plus;
  };

  double tau = 1.0;  // rho_0 = 1
  double prev_pair = std::numeric_limits<double>::infinity();
  for (std::size_t lag = 1; lag + 1 < n; lag += 2) {
    const double pair = rho_at(lag) + rho_at(lag + 1);
    if (!(pair > 0.0)) break;
    const double capped = std::min(pair, prev_pair);  // enforce monotone decrease
    tau += 2.0 * capped;
    prev_pair = capped;
  }
  const double total = static_cast<double>(m) * nd;
  double ess = total / tau;
  ess = std::min(ess, total * std::log10(std::max(10.0, total)));
  return ess;
}

std::vector<std::vector<double>> fold(const std::vector<std::vector<double>>& chains) {
  std::vector<double> pooled;
  for (const auto& c : chains) pooled.insert(pooled.end(), c.begin(), c.end());
  const double med = median(pooled);
  auto out = chains;
  for (auto& c : out)
    for (auto& v : c) v = std::fabs(v - med);
  return out;
}

std::vector<std::vector<double>> tail_indicator(const std::vector<std::vector<double>>& chains,
                                                double p) {
  std::vector<double> pooled;
  for (const auto& c : chains) pooled.insert(pooled.end(), c.begin(), c.end());
  const double q = quantile(pooled, p);
  auto out = chains;
  for (auto& c : out)
    for (auto& v : c) v = v <= q ? 1.0 : 0.0;
  return out;
}

}  // namespace

double Diagnostics::max_rhat() const {
  double r = 0.0;
  for (double v : rhat)
    if (std::isfinite(v)) r = std::max(r, v);
  return r;
}

double Diagnostics::min_bulk_ess() const {
  double e = std::numeric_limits<double>::infinity();
  for (double v : bulk_ess)
    if (std::isfinite(v)) e = std::min(e, v);
  return e;
}

double ess_of_sequences(const std::vector<std::vector<double>>& chains) {
  auto split = split_chains(chains);
  if (split.front().size() < 2 || is_constant(split)) return nan_v;
  return ess_split(split);
}

Diagnostics compute_diagnostics(const ChainSet& chains) {
  if (chains.n_chains < 2) throw std::invalid_argument("diagnostics: need >= 2 chains");
  if (chains.n_iter < 4) throw std::invalid_argument("diagnostics: need >= 4 draws per chain");

  Diagnostics diag;
  diag.divergences = chains.total_divergences();
  diag.rhat.resize(chains.dim);
  diag.bulk_ess.resize(chains.dim);
  diag.tail_ess.resize(chains.dim);

  for (int d = 0; d < chains.dim; ++d) {
    std::vector<std::vector<double>> cols(chains.n_chains);
    for (int c = 0; c < chains.n_chains; ++c) cols[c] = chains.chain_column(c, d);
    auto split = split_chains(cols);
    if (is_constant(split)) {
      diag.rhat[d] = nan_v;
      diag.bulk_ess[d] = nan_v;
      diag.tail_ess[d] = nan_v;
      diag.any_undefined = true;
      continue;
    }
    const auto z = rank_normalize(split);
    const auto z_folded = rank_normalize(fold(split));
    const double r_bulk = split_rhat(z);
    const double r_tail = split_rhat(z_folded);
    diag.rhat[d] = std::max(r_bulk, r_tail);
    diag.bulk_ess[d] = ess_split(z);

    const auto lo = tail_indicator(split, 0.05);
    const auto hi = tail_indicator(split, 0.95);
    const double ess_lo = is_constant(lo) ? nan_v : ess_split(lo);
    const double ess_hi = is_constant(hi) ? nan_v : ess_split(hi);
    if (std::isnan(ess_lo) && std::isnan(ess_hi))
      diag.tail_ess[d] = nan_v;
    else if (std::isnan(ess_lo))
      diag.tail_ess[d] = ess_hi;
    else if (std::isnan(ess_hi))
      diag.tail_ess[d] = ess_lo;
    else
      diag.tail_ess[d] = std::min(ess_lo, ess_hi);
    if (std::isnan(diag.rhat[d])) diag.any_undefined = true;
  }
  return diag;
}

}  // namespace bfw
