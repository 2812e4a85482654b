#pragma once

#include <span>
#include <string>
#include <vector>

#include "bfw/estimates.hpp"
#include "bfw/sbc.hpp"

namespace bfw {

enum class Action { Discovery, NoDiscovery, NoDecision };

struct UtilitySpec {
  double u_true_discovery = 10.0;
  double u_false_discovery = -50.0;
  double u_true_rejection = 5.0;
  double u_false_rejection = -5.0;
};

// Counts of (true hypothesis, action) cells over the decided runs.
struct TruthActionCounts {
  long h0_disc = 0;
  long h0_nodisc = 0;
  long h1_disc = 0;
  long h1_nodisc = 0;

  long total() const { return h0_disc + h0_nodisc + h1_disc + h1_nodisc; }
};

// Discovery iff bf10 >= threshold.
Action decide(double bf10, double threshold);
Action decide(const BayesFactorEstimate& bf, double threshold);

// NoDecision entries are excluded from the counts.
TruthActionCounts tabulate(std::span<const Hypothesis> truths, std::span<const Action> actions);

// (1/N) sum of per-run utilities over the decided runs.
double average_utility(const TruthActionCounts& counts, const UtilitySpec& u);

// 40 log-spaced thresholds in [1, 100].
std::vector<double> default_threshold_grid();

struct ThresholdCurvePoint {
  double threshold = 0.0;
  double avg_utility = 0.0;
};

struct ThresholdOptimum {
  double best_threshold = 0.0;
  double best_utility = 0.0;
  std::vector<ThresholdCurvePoint> curve;
};

// Evaluates the average utility at every grid threshold and returns the
// argmax; ties break toward the smaller threshold.
ThresholdOptimum optimize_threshold(std::span<const BayesFactorEstimate> bfs,
                                    std::span<const Hypothesis> truths, const UtilitySpec& u,
                                    std::span<const double> grid);

// Per-truth action frequencies (each row sums to 1).
struct TwoWayRates {
  double h0_nodisc = 0.0, h0_disc = 0.0;
  double h1_nodisc = 0.0, h1_disc = 0.0;
};

TwoWayRates discovery_rates(const TruthActionCounts& counts);

// Percent rows over Evidence_H0 (bf <= lo), No_Evidence, Evidence_H1 (bf >= hi).
struct ThreeWayRates {
  double h0_evidence_h0 = 0.0, h0_no_evidence = 0.0, h0_evidence_h1 = 0.0;
  double h1_evidence_h0 = 0.0, h1_no_evidence = 0.0, h1_evidence_h1 = 0.0;
};

ThreeWayRates discovery_rates_three_way(std::span<const BayesFactorEstimate> bfs,
                                        std::span<const Hypothesis> truths, double lo, double hi);

void write_threshold_curve_csv(const ThresholdOptimum& opt, const std::string& path);

}  // namespace bfw
