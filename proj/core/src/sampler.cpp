#include "bfw/sampler.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "bfw/jobs.hpp"
#include "bfw/math_util.hpp"
#include "bfw/rng.hpp"

namespace bfw {

namespace {

constexpr double divergence_threshold = 1000.0;
constexpr double neg_inf = -std::numeric_limits<double>::infinity();

struct PhasePoint {
  std::vector<double> q;
  std::vector<double> p;
  std::vector<double> grad;
  double lp = neg_inf;
};

struct Proposal {
  std::vector<double> q;
  std::vector<double> grad;
  double lp = neg_inf;
};

struct Subtree {
  std::vector<double> rho;          // summed momenta over the subtree
  std::vector<double> p_sharp_beg;  // inv_mass * p at the inward boundary
  std::vector<double> p_sharp_end;  // inv_mass * p at the outward boundary
  std::vector<double> p_beg, p_end;
  Proposal proposal;
  double log_w = neg_inf;  // log sum over leaves of exp(H0 - H)
  double sum_accept = 0.0;
  int n_leapfrog = 0;
  bool divergent = false;
  bool turning = false;
};

class NutsChain {
 public:
  NutsChain(const LogDensityTarget& target, const SamplerConfig& cfg, std::mt19937_64 rng)
      : target_(target), cfg_(cfg), rng_(std::move(rng)), dim_(target.dim),
        inv_mass_(dim_, 1.0) {}

  void run(const InitProvider& init, std::vector<double>& draws, std::vector<double>& lps,
           ChainStats& stats);

 private:
  double eval(std::span<const double> q, std::span<double> grad) {
    for (double v : q)
      if (!std::isfinite(v)) return neg_inf;
    const double lp = target_.log_density(q, grad);
    return std::isnan(lp) ? neg_inf : lp;
  }

  double kinetic(std::span<const double> p) const {
    double k = 0.0;
    for (int d = 0; d < dim_; ++d) k += p[d] * p[d] * inv_mass_[d];
    return 0.5 * k;
  }

  double hamiltonian(const PhasePoint& z) const { return -z.lp + kinetic(z.p); }

  void leapfrog(PhasePoint& z, double eps) {
    for (int d = 0; d < dim_; ++d) z.p[d] += 0.5 * eps * z.grad[d];
    for (int d = 0; d < dim_; ++d) z.q[d] += eps * inv_mass_[d] * z.p[d];
    z.lp = eval(z.q, z.grad);
    if (z.lp == neg_inf) std::fill(z.grad.begin(), z.grad.end(), 0.0);
    for (int d = 0; d < dim_; ++d) z.p[d] += 0.5 * eps * z.grad[d];
  }

  void sample_momentum(PhasePoint& z) {
    for (int d = 0; d < dim_; ++d) z.p[d] = draw_normal(rng_) / std::sqrt(inv_mass_[d]);
  }

  std::vector<double> p_sharp(const PhasePoint& z) const {
    std::vector<double> out(dim_);
    for (int d = 0; d < dim_; ++d) out[d] = inv_mass_[d] * z.p[d];
    return out;
  }

  static bool criterion_ok(std::span<const double> p_sharp_a, std::span<const double> p_sharp_b,
                           std::span<const double> rho) {
    double da = 0.0, db = 0.0;
    for (std::size_t d = 0; d < rho.size(); ++d) {
      da += p_sharp_a[d] * rho[d];
      db += p_sharp_b[d] * rho[d];
    }
    return da > 0.0 && db > 0.0;
  }

  Subtree build_tree(int depth, PhasePoint& z, double h0, double eps);
  double transition(PhasePoint& z, double eps);  // returns accept statistic
  double find_initial_step(const PhasePoint& z0);
  void initialize(const InitProvider& init, PhasePoint& z);

  const LogDensityTarget& target_;
  const SamplerConfig& cfg_;
  std::mt19937_64 rng_;
  int dim_;
  std::vector<double> inv_mass_;
  int divergences_ = 0;
  int max_depth_hits_ = 0;
};

Subtree NutsChain::build_tree(int depth, PhasePoint& z, double h0, double eps) {
  if (depth == 0) {
    leapfrog(z, eps);
    const double h = hamiltonian(z);
    const double dh = std::isfinite(h) ? h - h0 : std::numeric_limits<double>::infinity();
    Subtree leaf;
    leaf.n_leapfrog = 1;
    leaf.divergent = !(dh < divergence_threshold);
    leaf.log_w = -dh;
    leaf.sum_accept = dh > 0.0 ? std::exp(-dh) : 1.0;
    leaf.rho = z.p;
    leaf.p_sharp_beg = p_sharp(z);
    leaf.p_sharp_end = leaf.p_sharp_beg;
    leaf.p_beg = z.p;
    leaf.p_end = z.p;
    leaf.proposal = {z.q, z.grad, z.lp};
    return leaf;
  }

  Subtree first = build_tree(depth - 1, z, h0, eps);
  if (first.divergent || first.turning) return first;
  Subtree second = build_tree(depth - 1, z, h0, eps);

  Subtree merged;
  merged.n_leapfrog = first.n_leapfrog + second.n_leapfrog;
  merged.sum_accept = first.sum_accept + second.sum_accept;
  merged.divergent = second.divergent;
  merged.log_w = log_sum_exp(first.log_w, second.log_w);
  if (merged.divergent) return merged;

  // Multinomial selection between the two halves.
  const double log_rat = second.log_w - merged.log_w;
  merged.proposal = (std::log(draw_uniform(rng_)) < log_rat) ? std::move(second.proposal)
                                                             : std::move(first.proposal);
  merged.rho.resize(dim_);
  for (int d = 0; d < dim_; ++d) merged.rho[d] = first.rho[d] + second.rho[d];
  merged.p_sharp_beg = std::move(first.p_sharp_beg);
  merged.p_sharp_end = std::move(second.p_sharp_end);
  merged.p_beg = std::move(first.p_beg);
  merged.p_end = std::move(second.p_end);

  bool ok = criterion_ok(merged.p_sharp_beg, merged.p_sharp_end, merged.rho);
  // Cross checks over the half boundaries guard against missed u-turns.
  std::vector<double> rho_x(dim_);
  for (int d = 0; d < dim_; ++d) rho_x[d] = first.rho[d] + second.p_beg[d];
  ok = ok && criterion_ok(merged.p_sharp_beg, second.p_sharp_beg, rho_x);
  for (int d = 0; d < dim_; ++d) rho_x[d] = second.rho[d] + first.p_end[d];
  ok = ok && criterion_ok(first.p_sharp_end, merged.p_sharp_end, rho_x);
  merged.turning = !ok;
  return merged;
}

double NutsChain::transition(PhasePoint& z, double eps) {
  sample_momentum(z);
  const double h0 = hamiltonian(z);

  PhasePoint z_fwd = z;
  PhasePoint z_bwd = z;

  Proposal proposal{z.q, z.grad, z.lp};
  double log_w = 0.0;
  std::vector<double> rho = z.p;
  std::vector<double> p_sharp_fwd = p_sharp(z);
  std::vector<double> p_sharp_bwd = p_sharp_fwd;
  std::vector<double> p_fwd = z.p, p_bwd = z.p;

  double sum_accept = 0.0;
  int n_leapfrog = 0;
  bool diverged = false;

  for (int depth = 0; depth < cfg_.max_tree_depth; ++depth) {
    const bool forward = draw_uniform(rng_) < 0.5;
    PhasePoint& edge = forward ? z_fwd : z_bwd;
    Subtree tree = build_tree(depth, edge, h0, forward ? eps : -eps);
    sum_accept += tree.sum_accept;
    n_leapfrog += tree.n_leapfrog;
    if (tree.divergent) {
      diverged = true;
      break;
    }
    if (tree.turning) break;

    // Biased progressive sampling toward the new subtree.
    if (std::log(draw_uniform(rng_)) < tree.log_w - log_w) proposal = std::move(tree.proposal);
    log_w = log_sum_exp(log_w, tree.log_w);

    if (forward) {
      p_sharp_fwd = std::move(tree.p_sharp_end);
      p_fwd = std::move(tree.p_end);
    } else {
      // Trajectories built backward run in negated time; boundary roles flip.
      p_sharp_bwd = std::move(tree.p_sharp_end);
      p_bwd = std::move(tree.p_end);
    }
    for (int d = 0; d < dim_; ++d) rho[d] += tree.rho[d];
    if (!criterion_ok(p_sharp_bwd, p_sharp_fwd, rho)) break;
    if (depth + 1 == cfg_.max_tree_depth) ++max_depth_hits_;
  }

  if (diverged) ++divergences_;
  z.q = std::move(proposal.q);
  z.grad = std::move(proposal.grad);
  z.lp = proposal.lp;
  return n_leapfrog > 0 ? sum_accept / n_leapfrog : 0.0;
}

double NutsChain::find_initial_step(const PhasePoint& z0) {
  double eps = 1.0;
  PhasePoint z = z0;
  sample_momentum(z);
  const double h0 = hamiltonian(z);
  PhasePoint trial = z;
  leapfrog(trial, eps);
  double dh = h0 - hamiltonian(trial);
  if (!std::isfinite(dh)) dh = neg_inf;
  const double direction = dh > std::log(0.5) ? 1.0 : -1.0;
  for (int i = 0; i < 100; ++i) {
    eps = direction > 0 ? 2.0 * eps : 0.5 * eps;
    trial = z;
    leapfrog(trial, eps);
    dh = h0 - hamiltonian(trial);
    if (!std::isfinite(dh)) dh = neg_inf;
    if ((direction > 0 && dh <= std::log(0.5)) || (direction < 0 && dh >= std::log(0.5))) break;
  }
  return std::clamp(eps, 1e-10, 1e3);
}

void NutsChain::initialize(const InitProvider& init, PhasePoint& z) {
  z.q.assign(dim_, 0.0);
  z.p.assign(dim_, 0.0);
  z.grad.assign(dim_, 0.0);
  for (int attempt = 0; attempt < 100; ++attempt) {
    if (init) {
      z.q = init(rng_);
      if (static_cast<int>(z.q.size()) != dim_)
        throw std::invalid_argument("sampler: init point has wrong dimension");
    } else {
      for (auto& v : z.q) v = draw_uniform(rng_, -2.0, 2.0);
    }
    z.lp = eval(z.q, z.grad);
    if (std::isfinite(z.lp)) return;
  }
  throw std::runtime_error("sampler: no finite log density after 100 initialization attempts");
}

void NutsChain::run(const InitProvider& init, std::vector<double>& draws, std::vector<double>& lps,
                    ChainStats& stats) {
  PhasePoint z;
  initialize(init, z);

  // Warmup schedule: step-size-only buffer, expanding mass-matrix windows,
  // final step-size buffer.
  const int warmup = cfg_.warmup;
  const int init_buffer = std::max(1, static_cast<int>(std::lround(0.15 * warmup)));
  const int term_buffer = std::max(1, static_cast<int>(std::lround(0.10 * warmup)));
  const int middle = std::max(0, warmup - init_buffer - term_buffer);

  double eps = find_initial_step(z);
  // Dual averaging state (Hoffman & Gelman defaults).
  const double gamma = 0.05, t0 = 10.0, kappa = 0.75;
  double mu = std::log(10.0 * eps);
  double h_bar = 0.0, log_eps_bar = 0.0;
  int adapt_count = 0;
  auto adapt_step = [&](double accept) {
    ++adapt_count;
    const double m = static_cast<double>(adapt_count);
    h_bar = (1.0 - 1.0 / (m + t0)) * h_bar + (cfg_.target_accept - accept) / (m + t0);
    const double log_eps = mu - std::sqrt(m) / gamma * h_bar;
    const double eta = std::pow(m, -kappa);
    log_eps_bar = eta * log_eps + (1.0 - eta) * log_eps_bar;
    eps = std::exp(log_eps);
  };
  auto restart_adaptation = [&]() {
    eps = find_initial_step(z);
    mu = std::log(10.0 * eps);
    h_bar = 0.0;
    log_eps_bar = std::log(eps);
    adapt_count = 0;
  };

  // Welford accumulator for the diagonal mass matrix.
  std::vector<double> wf_mean(dim_, 0.0), wf_m2(dim_, 0.0);
  long wf_n = 0;
  auto wf_add = [&](const std::vector<double>& q) {
    ++wf_n;
    for (int d = 0; d < dim_; ++d) {
      const double delta = q[d] - wf_mean[d];
      wf_mean[d] += delta / static_cast<double>(wf_n);
      wf_m2[d] += delta * (q[d] - wf_mean[d]);
    }
  };
  auto wf_finalize = [&]() {
    if (wf_n > 1) {
      const double n = static_cast<double>(wf_n);
      for (int d = 0; d < dim_; ++d) {
        const double var = wf_m2[d] / (n - 1.0);
        inv_mass_[d] = std::max(1e-10, var * n / (n + 5.0) + 1e-3 * (5.0 / (n + 5.0)));
      }
    }
    std::fill(wf_mean.begin(), wf_mean.end(), 0.0);
    std::fill(wf_m2.begin(), wf_m2.end(), 0.0);
    wf_n = 0;
  };

  // Expanding window boundaries inside the middle segment.
  std::vector<int> window_ends;
  {
    int start = init_buffer;
    int size = std::min(middle, 25);
    while (middle > 0 && start < init_buffer + middle) {
      int end = start + size;
      if (end + 2 * size > init_buffer + middle) end = init_buffer + middle;  // absorb remainder
      window_ends.push_back(end);
      start = end;
      size *= 2;
    }
  }

  std::size_t window_idx = 0;
  for (int it = 0; it < warmup; ++it) {
    const double accept = transition(z, eps);
    adapt_step(accept);
    const bool in_middle = it >= init_buffer && it < init_buffer + middle;
    if (in_middle) wf_add(z.q);
    if (window_idx < window_ends.size() && it + 1 == window_ends[window_idx]) {
      wf_finalize();
      restart_adaptation();
      ++window_idx;
    }
  }
  if (warmup > 0) eps = std::exp(log_eps_bar);

  divergences_ = 0;  // report post-warmup divergences only
  max_depth_hits_ = 0;
  draws.resize(static_cast<std::size_t>(cfg_.iter) * dim_);
  lps.resize(cfg_.iter);
  double accept_sum = 0.0;
  for (int it = 0; it < cfg_.iter; ++it) {
    accept_sum += transition(z, eps);
    std::copy(z.q.begin(), z.q.end(), draws.begin() + static_cast<std::size_t>(it) * dim_);
    lps[it] = z.lp;
  }

  stats.divergences = divergences_;
  stats.mean_accept = cfg_.iter > 0 ? accept_sum / cfg_.iter : 0.0;
  stats.step_size = eps;
  stats.max_depth_hits = max_depth_hits_;
  stats.inv_mass = inv_mass_;
}

}  // namespace

void SamplerConfig::validate() const {
  if (n_chains < 1) throw std::invalid_argument("sampler: n_chains must be >= 1");
  if (warmup < 100) throw std::invalid_argument("sampler: warmup must be >= 100");
  if (iter < 1) throw std::invalid_argument("sampler: iter must be >= 1");
  if (!(target_accept > 0.0 && target_accept < 1.0))
    throw std::invalid_argument("sampler: target_accept must be inside (0, 1)");
  if (max_tree_depth < 1) throw std::invalid_argument("sampler: max_tree_depth must be >= 1");
}

int ChainSet::total_divergences() const {
  int n = 0;
  for (const auto& s : stats) n += s.divergences;
  return n;
}

std::vector<double> ChainSet::pooled(int d) const {
  std::vector<double> out;
  out.reserve(total_draws());
  for (int c = 0; c < n_chains; ++c)
    for (int it = 0; it < n_iter; ++it) out.push_back(value(c, it, d));
  return out;
}

std::vector<double> ChainSet::chain_column(int chain, int d) const {
  std::vector<double> out(n_iter);
  for (int it = 0; it < n_iter; ++it) out[it] = value(chain, it, d);
  return out;
}

ChainSet sample_posterior(const LogDensityTarget& target, const SamplerConfig& config,
                          const InitProvider& init) {
  config.validate();
  if (target.dim < 1) throw std::invalid_argument("sampler: dim must be >= 1");

  ChainSet out;
  out.n_chains = config.n_chains;
  out.n_iter = config.iter;
  out.dim = target.dim;
  out.draws.resize(config.n_chains);
  out.log_joint.resize(config.n_chains);
  out.stats.resize(config.n_chains);

  parallel_for(static_cast<std::size_t>(config.n_chains), config.jobs, [&](std::size_t c) {
    NutsChain chain(target, config, derive_stream(config.seed, "chain", c));
    chain.run(init, out.draws[c], out.log_joint[c], out.stats[c]);
  });
  return out;
}

}  // namespace bfw
