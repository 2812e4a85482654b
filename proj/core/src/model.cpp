#include "bfw/model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "bfw/math_util.hpp"
#include "bfw/rng.hpp"

namespace bfw {

ParameterLayout ParameterLayout::build(const LmmModelSpec& spec, int n_subjects, int n_items) {
  if (spec.subject_random == RandomStructure::None)
    throw std::invalid_argument("model: subject random structure must include at least an intercept");
  if (spec.item_random != RandomStructure::None && n_items <= 0)
    throw std::invalid_argument("model: item random effects require item identifiers in the data");

  ParameterLayout l;
  l.n_subjects = n_subjects;
  l.n_items = spec.item_random == RandomStructure::None ? 0 : n_items;
  l.subject_random = spec.subject_random;
  l.item_random = spec.item_random;

  int k = 0;
  l.beta0 = k++;
  if (spec.include_slope) l.beta1 = k++;
  l.log_sd_u0 = k++;
  if (spec.subject_random == RandomStructure::InterceptSlope) {
    l.log_sd_u1 = k++;
    l.atanh_rho_u = k++;
  }
  if (spec.item_random != RandomStructure::None) {
    l.log_sd_w0 = k++;
    if (spec.item_random == RandomStructure::InterceptSlope) {
      l.log_sd_w1 = k++;
      l.atanh_rho_w = k++;
    }
  }
  l.log_sigma = k++;
  l.z_u = k;
  k += n_subjects * (spec.subject_random == RandomStructure::InterceptSlope ? 2 : 1);
  if (spec.item_random != RandomStructure::None) {
    l.z_w = k;
    k += n_items * (spec.item_random == RandomStructure::InterceptSlope ? 2 : 1);
  }
  l.dim = k;
  return l;
}

std::vector<std::string> ParameterLayout::names() const {
  std::vector<std::string> out(dim);
  out[beta0] = "beta0";
  if (beta1 >= 0) out[beta1] = "beta1";
  out[log_sd_u0] = "sigma_u0";
  if (log_sd_u1 >= 0) out[log_sd_u1] = "sigma_u1";
  if (atanh_rho_u >= 0) out[atanh_rho_u] = "rho_u";
  if (log_sd_w0 >= 0) out[log_sd_w0] = "sigma_w0";
  if (log_sd_w1 >= 0) out[log_sd_w1] = "sigma_w1";
  if (atanh_rho_w >= 0) out[atanh_rho_w] = "rho_w";
  out[log_sigma] = "sigma";
  const int su = subject_random == RandomStructure::InterceptSlope ? 2 : 1;
  for (int s = 0; s < n_subjects; ++s) out[z_u + s] = "z_u0[" + std::to_string(s) + "]";
  if (su == 2)
    for (int s = 0; s < n_subjects; ++s) out[z_u + n_subjects + s] = "z_u1[" + std::to_string(s) + "]";
  if (z_w >= 0) {
    const int iw = item_random == RandomStructure::InterceptSlope ? 2 : 1;
    for (int i = 0; i < n_items; ++i) out[z_w + i] = "z_w0[" + std::to_string(i) + "]";
    if (iw == 2)
      for (int i = 0; i < n_items; ++i) out[z_w + n_items + i] = "z_w1[" + std::to_string(i) + "]";
  }
  return out;
}

LmmModel::LmmModel(const Dataset& data, const LmmModelSpec& spec, const PriorSpec& prior)
    : data_(data), spec_(spec), prior_(prior) {
  if (data_.empty()) throw std::invalid_argument("model: dataset is empty");
  prior_.validate();
  if (spec_.include_slope != prior_.slope.has_value())
    throw std::invalid_argument("model: slope prior must be present exactly when the slope is included");
  layout_ = ParameterLayout::build(spec_, data_.n_subjects(), data_.n_items());
  log_rt_.reserve(data_.size());
  for (const auto& r : data_.rows()) {
    log_rt_.push_back(std::log(r.rt));
    log_rt_sum_ += log_rt_.back();
  }
}

namespace {

struct Block2 {
  double sd0 = 0.0, sd1 = 0.0, rho = 0.0, c = 1.0;  // c = sqrt(1 - rho^2)
  bool slope = false;
};

Block2 read_block(std::span<const double> t, int i_sd0, int i_sd1, int i_rho) {
  Block2 b;
  b.sd0 = std::exp(t[i_sd0]);
  if (i_sd1 >= 0) {
    b.slope = true;
    b.sd1 = std::exp(t[i_sd1]);
    b.rho = std::tanh(t[i_rho]);
    b.c = std::sqrt(1.0 - b.rho * b.rho);
  }
  return b;
}

// Half-normal prior on v = exp(t), including the truncation constant log 2
// and the exp-transform Jacobian t.
double half_normal_logp(double v, double t, double scale, double* g_t) {
  if (g_t) *g_t += 1.0 - v * v / (scale * scale);
  return log_2 + log_normal_pdf(v, 0.0, scale) + t;
}

// LKJ(eta) on a 2x2 correlation via rho = tanh(t). The full normalizing
// constant (beta-function form) is included so each model's marginal
// likelihood is individually correct, not just their ratio.
double lkj2_logp(double rho, double eta, double* g_t) {
  if (g_t) *g_t += -2.0 * rho * eta;
  const double log_norm = -log_beta(eta, eta) - (2.0 * eta - 1.0) * log_2;
  return log_norm + eta * std::log1p(-rho * rho);  // (eta-1)*log(1-rho^2) + Jacobian log(1-rho^2)
}

}  // namespace

double LmmModel::log_joint(std::span<const double> theta, std::span<double> grad) const {
  const auto& L = layout_;
  if (static_cast<int>(theta.size()) != L.dim)
    throw std::invalid_argument("log_joint: parameter vector has dimension " +
                                std::to_string(theta.size()) + ", expected " + std::to_string(L.dim));
  for (double v : theta)
    if (!std::isfinite(v)) throw std::domain_error("log_joint: non-finite parameter value");
  const bool want_grad = !grad.empty();
  if (want_grad && static_cast<int>(grad.size()) != L.dim)
    throw std::invalid_argument("log_joint: gradient span has wrong dimension");
  if (want_grad) std::fill(grad.begin(), grad.end(), 0.0);

  const double beta0 = theta[L.beta0];
  const double beta1 = L.beta1 >= 0 ? theta[L.beta1] : 0.0;
  const Block2 bu = read_block(theta, L.log_sd_u0, L.log_sd_u1, L.atanh_rho_u);
  const bool items = L.z_w >= 0;
  const Block2 bw = items ? read_block(theta, L.log_sd_w0, L.log_sd_w1, L.atanh_rho_w) : Block2{};
  const double sigma = std::exp(theta[L.log_sigma]);
  const double inv_var = 1.0 / (sigma * sigma);

  const int S = L.n_subjects;
  const int I = L.n_items;
  const double* zu0 = &theta[L.z_u];
  const double* zu1 = bu.slope ? &theta[L.z_u + S] : nullptr;
  const double* zw0 = items ? &theta[L.z_w] : nullptr;
  const double* zw1 = (items && bw.slope) ? &theta[L.z_w + I] : nullptr;

  // Group effects from the non-centered parameterization.
  std::vector<double> u0(S), u1(bu.slope ? S : 0), w0(items ? I : 0), w1(zw1 ? I : 0);
  for (int s = 0; s < S; ++s) {
    u0[s] = bu.sd0 * zu0[s];
    if (bu.slope) u1[s] = bu.sd1 * (bu.rho * zu0[s] + bu.c * zu1[s]);
  }
  for (int i = 0; i < I; ++i) {
    if (items) w0[i] = bw.sd0 * zw0[i];
    if (zw1) w1[i] = bw.sd1 * (bw.rho * zw0[i] + bw.c * zw1[i]);
  }

  // Likelihood: y = log(rt) ~ N(mu, sigma), plus the lognormal change of
  // variable -log(rt) per observation.
  const std::size_t n = data_.size();
  double sum_sq = 0.0;
  std::vector<double> gu0, gu1, gw0, gw1;
  if (want_grad) {
    gu0.assign(S, 0.0);
    if (bu.slope) gu1.assign(S, 0.0);
    if (items) gw0.assign(I, 0.0);
    if (zw1) gw1.assign(I, 0.0);
  }
  double g_beta0 = 0.0, g_beta1 = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    const auto& r = data_.rows()[k];
    double mu = beta0 + beta1 * r.x + u0[r.subj];
    if (bu.slope) mu += u1[r.subj] * r.x;
    if (items) {
      mu += w0[*r.item];
      if (zw1) mu += w1[*r.item] * r.x;
    }
    const double e = log_rt_[k] - mu;
    sum_sq += e * e;
    if (want_grad) {
      const double gm = e * inv_var;
      g_beta0 += gm;
      g_beta1 += gm * r.x;
      gu0[r.subj] += gm;
      if (bu.slope) gu1[r.subj] += gm * r.x;
      if (items) {
        gw0[*r.item] += gm;
        if (zw1) gw1[*r.item] += gm * r.x;
      }
    }
  }
  const double nd = static_cast<double>(n);
  double lp = -0.5 * nd * log_2pi - nd * std::log(sigma) - 0.5 * sum_sq * inv_var - log_rt_sum_;

  double g_log_sigma = want_grad ? (-nd + sum_sq * inv_var) : 0.0;

  // Priors on the fixed effects.
  lp += log_normal_pdf(beta0, prior_.intercept.mean, prior_.intercept.sd);
  if (want_grad)
    g_beta0 += -(beta0 - prior_.intercept.mean) / (prior_.intercept.sd * prior_.intercept.sd);
  if (L.beta1 >= 0) {
    lp += log_normal_pdf(beta1, prior_.slope->mean, prior_.slope->sd);
    if (want_grad) g_beta1 += -(beta1 - prior_.slope->mean) / (prior_.slope->sd * prior_.slope->sd);
  }

  // Variance-component priors (half-normal, with log-transform Jacobian)
  // and LKJ correlation priors (with atanh Jacobian).
  const double sd_scale = prior_.sd_components.scale;
  auto block_priors = [&](const Block2& b, int i_sd0, int i_sd1, int i_rho) {
    double* g0 = want_grad ? &grad[i_sd0] : nullptr;
    lp += half_normal_logp(b.sd0, theta[i_sd0], sd_scale, g0);
    if (b.slope) {
      double* g1 = want_grad ? &grad[i_sd1] : nullptr;
      lp += half_normal_logp(b.sd1, theta[i_sd1], sd_scale, g1);
      double* gr = want_grad ? &grad[i_rho] : nullptr;
      lp += lkj2_logp(b.rho, prior_.lkj_eta, gr);
    }
  };
  block_priors(bu, L.log_sd_u0, L.log_sd_u1, L.atanh_rho_u);
  if (items) block_priors(bw, L.log_sd_w0, L.log_sd_w1, L.atanh_rho_w);

  double* g_sig = want_grad ? &g_log_sigma : nullptr;
  lp += half_normal_logp(sigma, theta[L.log_sigma], prior_.sigma.scale, g_sig);

  // Standard-normal priors on the non-centered effects.
  auto z_prior = [&](int off, int count) {
    for (int k2 = 0; k2 < count; ++k2) {
      const double z = theta[off + k2];
      lp += -0.5 * log_2pi - 0.5 * z * z;
      if (want_grad) grad[off + k2] += -z;
    }
  };
  z_prior(L.z_u, S * (bu.slope ? 2 : 1));
  if (items) z_prior(L.z_w, I * (bw.slope ? 2 : 1));

  if (want_grad) {
    grad[L.beta0] += g_beta0;
    if (L.beta1 >= 0) grad[L.beta1] += g_beta1;
    grad[L.log_sigma] += g_log_sigma;

    // Chain likelihood gradients through the non-centered blocks.
    auto block_chain = [&](const Block2& b, const double* z0, const double* z1,
                           const std::vector<double>& g0, const std::vector<double>& g1, int count,
                           int z_off, int i_sd0, int i_sd1, int i_rho) {
      double acc_sd0 = 0.0, acc_sd1 = 0.0, acc_rho = 0.0;
      for (int g = 0; g < count; ++g) {
        grad[z_off + g] += g0[g] * b.sd0;
        acc_sd0 += g0[g] * z0[g];
        if (b.slope) {
          grad[z_off + g] += g1[g] * b.sd1 * b.rho;
          grad[z_off + count + g] += g1[g] * b.sd1 * b.c;
          acc_sd1 += g1[g] * (b.rho * z0[g] + b.c * z1[g]);
          acc_rho += g1[g] * b.sd1 * (z0[g] - (b.rho / b.c) * z1[g]);
        }
      }
      grad[i_sd0] += acc_sd0 * b.sd0;
      if (b.slope) {
        grad[i_sd1] += acc_sd1 * b.sd1;
        grad[i_rho] += acc_rho * (1.0 - b.rho * b.rho);
      }
    };
    block_chain(bu, zu0, zu1, gu0, gu1, S, L.z_u, L.log_sd_u0, L.log_sd_u1, L.atanh_rho_u);
    if (items) block_chain(bw, zw0, zw1, gw0, gw1, I, L.z_w, L.log_sd_w0, L.log_sd_w1, L.atanh_rho_w);
  }

  if (std::isnan(lp)) lp = -std::numeric_limits<double>::infinity();
  return lp;
}

double LmmModel::log_likelihood(const ParameterVector& p) const {
  const double c = std::sqrt(1.0 - p.rho_u * p.rho_u);
  const double cw = std::sqrt(1.0 - p.rho_w * p.rho_w);
  double lp = 0.0;
  for (std::size_t k = 0; k < data_.size(); ++k) {
    const auto& r = data_.rows()[k];
    double mu = p.beta0 + p.beta1 * r.x + p.sigma_u0 * p.z_u0[r.subj];
    if (!p.z_u1.empty()) mu += p.sigma_u1 * (p.rho_u * p.z_u0[r.subj] + c * p.z_u1[r.subj]) * r.x;
    if (r.item && !p.z_w0.empty()) {
      mu += p.sigma_w0 * p.z_w0[*r.item];
      if (!p.z_w1.empty()) mu += p.sigma_w1 * (p.rho_w * p.z_w0[*r.item] + cw * p.z_w1[*r.item]) * r.x;
    }
    lp += log_normal_pdf(log_rt_[k], mu, p.sigma) - log_rt_[k];
  }
  return lp;
}

ParameterVector LmmModel::constrain(std::span<const double> t) const {
  const auto& L = layout_;
  if (static_cast<int>(t.size()) != L.dim)
    throw std::invalid_argument("constrain: wrong dimension");
  ParameterVector p;
  p.beta0 = t[L.beta0];
  p.beta1 = L.beta1 >= 0 ? t[L.beta1] : 0.0;
  p.sigma_u0 = std::exp(t[L.log_sd_u0]);
  if (L.log_sd_u1 >= 0) {
    p.sigma_u1 = std::exp(t[L.log_sd_u1]);
    p.rho_u = std::tanh(t[L.atanh_rho_u]);
  }
  if (L.log_sd_w0 >= 0) {
    p.sigma_w0 = std::exp(t[L.log_sd_w0]);
    if (L.log_sd_w1 >= 0) {
      p.sigma_w1 = std::exp(t[L.log_sd_w1]);
      p.rho_w = std::tanh(t[L.atanh_rho_w]);
    }
  }
  p.sigma = std::exp(t[L.log_sigma]);
  const int S = L.n_subjects;
  p.z_u0.assign(t.begin() + L.z_u, t.begin() + L.z_u + S);
  if (L.subject_random == RandomStructure::InterceptSlope)
    p.z_u1.assign(t.begin() + L.z_u + S, t.begin() + L.z_u + 2 * S);
  if (L.z_w >= 0) {
    const int I = L.n_items;
    p.z_w0.assign(t.begin() + L.z_w, t.begin() + L.z_w + I);
    if (L.item_random == RandomStructure::InterceptSlope)
      p.z_w1.assign(t.begin() + L.z_w + I, t.begin() + L.z_w + 2 * I);
  }
  return p;
}

std::vector<double> LmmModel::unconstrain(const ParameterVector& p) const {
  const auto& L = layout_;
  std::vector<double> t(L.dim, 0.0);
  t[L.beta0] = p.beta0;
  if (L.beta1 >= 0) t[L.beta1] = p.beta1;
  t[L.log_sd_u0] = std::log(p.sigma_u0);
  if (L.log_sd_u1 >= 0) {
    t[L.log_sd_u1] = std::log(p.sigma_u1);
    t[L.atanh_rho_u] = std::atanh(p.rho_u);
  }
  if (L.log_sd_w0 >= 0) {
    t[L.log_sd_w0] = std::log(p.sigma_w0);
    if (L.log_sd_w1 >= 0) {
      t[L.log_sd_w1] = std::log(p.sigma_w1);
      t[L.atanh_rho_w] = std::atanh(p.rho_w);
    }
  }
  t[L.log_sigma] = std::log(p.sigma);
  const int S = L.n_subjects;
  for (int s = 0; s < S; ++s) t[L.z_u + s] = p.z_u0[s];
  if (L.subject_random == RandomStructure::InterceptSlope)
    for (int s = 0; s < S; ++s) t[L.z_u + S + s] = p.z_u1[s];
  if (L.z_w >= 0) {
    const int I = L.n_items;
    for (int i = 0; i < I; ++i) t[L.z_w + i] = p.z_w0[i];
    if (L.item_random == RandomStructure::InterceptSlope)
      for (int i = 0; i < I; ++i) t[L.z_w + I + i] = p.z_w1[i];
  }
  return t;
}

ParameterVector LmmModel::draw_from_prior(std::mt19937_64& rng) const {
  const auto& L = layout_;
  ParameterVector p;
  p.beta0 = draw_positive_normal(rng, prior_.intercept.mean, prior_.intercept.sd);
  p.beta1 = L.beta1 >= 0 ? draw_normal(rng, prior_.slope->mean, prior_.slope->sd) : 0.0;
  p.sigma_u0 = draw_half_normal(rng, prior_.sd_components.scale);
  if (L.log_sd_u1 >= 0) {
    p.sigma_u1 = draw_half_normal(rng, prior_.sd_components.scale);
    p.rho_u = draw_lkj_corr2(rng, prior_.lkj_eta);
  }
  if (L.log_sd_w0 >= 0) {
    p.sigma_w0 = draw_half_normal(rng, prior_.sd_components.scale);
    if (L.log_sd_w1 >= 0) {
      p.sigma_w1 = draw_half_normal(rng, prior_.sd_components.scale);
      p.rho_w = draw_lkj_corr2(rng, prior_.lkj_eta);
    }
  }
  p.sigma = draw_half_normal(rng, prior_.sigma.scale);
  const int S = L.n_subjects;
  p.z_u0.resize(S);
  for (auto& z : p.z_u0) z = draw_normal(rng);
  if (L.subject_random == RandomStructure::InterceptSlope) {
    p.z_u1.resize(S);
    for (auto& z : p.z_u1) z = draw_normal(rng);
  }
  if (L.z_w >= 0) {
    p.z_w0.resize(L.n_items);
    for (auto& z : p.z_w0) z = draw_normal(rng);
    if (L.item_random == RandomStructure::InterceptSlope) {
      p.z_w1.resize(L.n_items);
      for (auto& z : p.z_w1) z = draw_normal(rng);
    }
  }
  return p;
}

std::vector<double> LmmModel::initial_point(std::mt19937_64& rng) const {
  auto t = unconstrain(draw_from_prior(rng));
  for (auto& v : t) v += draw_uniform(rng, -0.1, 0.1);
  return t;
}

}  // namespace bfw
