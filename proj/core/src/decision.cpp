#include "bfw/decision.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>

namespace bfw {

Action decide(double bf10, double threshold) {
  if (!(bf10 > 0.0) || !std::isfinite(bf10)) return Action::NoDecision;
  if (!(threshold > 0.0)) throw std::domain_error("decide: threshold must be > 0");
  return bf10 >= threshold ? Action::Discovery : Action::NoDiscovery;
}

Action decide(const BayesFactorEstimate& bf, double threshold) {
  if (bf.failed) return Action::NoDecision;
  return decide(bf.bf10(), threshold);
}

TruthActionCounts tabulate(std::span<const Hypothesis> truths, std::span<const Action> actions) {
  if (truths.size() != actions.size())
    throw std::invalid_argument("tabulate: truths and actions differ in length");
  TruthActionCounts c;
  for (std::size_t i = 0; i < truths.size(); ++i) {
    if (actions[i] == Action::NoDecision) continue;
    const bool disc = actions[i] == Action::Discovery;
    if (truths[i] == Hypothesis::H0)
      (disc ? c.h0_disc : c.h0_nodisc)++;
    else
      (disc ? c.h1_disc : c.h1_nodisc)++;
  }
  return c;
}

double average_utility(const TruthActionCounts& c, const UtilitySpec& u) {
  const long n = c.total();
  if (n == 0) throw std::invalid_argument("average_utility: no decided runs");
  const double sum = static_cast<double>(c.h0_disc) * u.u_false_discovery +
                     static_cast<double>(c.h0_nodisc) * u.u_true_rejection +
                     static_cast<double>(c.h1_disc) * u.u_true_discovery +
                     static_cast<double>(c.h1_nodisc) * u.u_false_rejection;
  return sum / static_cast<double>(n);
}

std::vector<double> default_threshold_grid() {
  std::vector<double> grid(40);
  for (int i = 0; i < 40; ++i) grid[i] = std::pow(10.0, 2.0 * i / 39.0);  // 1 .. 100
  return grid;
}

ThresholdOptimum optimize_threshold(std::span<const BayesFactorEstimate> bfs,
                                    std::span<const Hypothesis> truths, const UtilitySpec& u,
                                    std::span<const double> grid) {
  if (bfs.size() != truths.size())
    throw std::invalid_argument("optimize_threshold: bfs and truths differ in length");
  if (grid.empty()) throw std::invalid_argument("optimize_threshold: empty grid");
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (!(grid[i] > 0.0)) throw std::domain_error("optimize_threshold: thresholds must be > 0");
    if (i > 0 && grid[i] <= grid[i - 1])
      throw std::invalid_argument("optimize_threshold: grid must be sorted increasing");
  }

  ThresholdOptimum opt;
  opt.curve.reserve(grid.size());
  std::vector<Action> actions(bfs.size());
  bool first = true;
  for (double thr : grid) {
    for (std::size_t i = 0; i < bfs.size(); ++i) actions[i] = decide(bfs[i], thr);
    const auto counts = tabulate(truths, actions);
    const double avg = average_utility(counts, u);
    opt.curve.push_back({thr, avg});
    if (first || avg > opt.best_utility) {  // strict comparison: ties keep the smaller threshold
      opt.best_utility = avg;
      opt.best_threshold = thr;
      first = false;
    }
  }
  return opt;
}

TwoWayRates discovery_rates(const TruthActionCounts& c) {
  if (c.total() == 0) throw std::invalid_argument("discovery_rates: no decided runs");
  TwoWayRates r;
  const double n0 = static_cast<double>(c.h0_disc + c.h0_nodisc);
  const double n1 = static_cast<double>(c.h1_disc + c.h1_nodisc);
  if (n0 > 0) {
    r.h0_disc = c.h0_disc / n0;
    r.h0_nodisc = c.h0_nodisc / n0;
  }
  if (n1 > 0) {
    r.h1_disc = c.h1_disc / n1;
    r.h1_nodisc = c.h1_nodisc / n1;
  }
  return r;
}

ThreeWayRates discovery_rates_three_way(std::span<const BayesFactorEstimate> bfs,
                                        std::span<const Hypothesis> truths, double lo, double hi) {
  if (bfs.size() != truths.size())
    throw std::invalid_argument("discovery_rates: bfs and truths differ in length");
  if (!(lo < hi)) throw std::invalid_argument("discovery_rates: need lo < hi");
  long n0 = 0, n1 = 0;
  long c0[3] = {0, 0, 0}, c1[3] = {0, 0, 0};
  for (std::size_t i = 0; i < bfs.size(); ++i) {
    if (bfs[i].failed) continue;
    const double bf = bfs[i].bf10();
    const int cell = bf <= lo ? 0 : (bf >= hi ? 2 : 1);
    if (truths[i] == Hypothesis::H0) {
      ++c0[cell];
      ++n0;
    } else {
      ++c1[cell];
      ++n1;
    }
  }
  if (n0 + n1 == 0) throw std::invalid_argument("discovery_rates: no decided runs");
  ThreeWayRates r;
  if (n0 > 0) {
    r.h0_evidence_h0 = 100.0 * c0[0] / n0;
    r.h0_no_evidence = 100.0 * c0[1] / n0;
    r.h0_evidence_h1 = 100.0 * c0[2] / n0;
  }
  if (n1 > 0) {
    r.h1_evidence_h0 = 100.0 * c1[0] / n1;
    r.h1_no_evidence = 100.0 * c1[1] / n1;
    r.h1_evidence_h1 = 100.0 * c1[2] / n1;
  }
  return r;
}

void write_threshold_curve_csv(const ThresholdOptimum& opt, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("decision: cannot write '" + path + "'");
  out << "threshold,avg_utility\n";
  char buf[80];
  for (const auto& p : opt.curve) {
    std::snprintf(buf, sizeof(buf), "%.17g,%.17g\n", p.threshold, p.avg_utility);
    out << buf;
  }
}

}  // namespace bfw
