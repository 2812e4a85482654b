#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "bfw/bridge.hpp"
#include "bfw/design.hpp"
#include "bfw/estimates.hpp"
#include "bfw/evidence.hpp"
#include "bfw/model.hpp"
#include "bfw/savage_dickey.hpp"
#include "bfw/simulate.hpp"

namespace bfw {

enum class Hypothesis { H0, H1 };

inline const char* hypothesis_name(Hypothesis h) { return h == Hypothesis::H0 ? "H0" : "H1"; }

enum class SbcEstimator { bridge, savage_dickey };

// Simulation-based calibration of the Bayes factor pipeline. The fit spec may
// differ from the simulation spec; that is the mis-specification experiment.
struct SbcConfig {
  int n_runs = 500;
  ModelPrior model_prior;
  DesignSpec design;
  PriorSpec param_prior;    // H1 prior; beta1 is forced to zero under H0
  LmmModelSpec sim_spec;    // random-effect structure used to simulate
  LmmModelSpec fit_spec;    // H1 fit structure; H0 is its null version
  SbcEstimator estimator = SbcEstimator::bridge;
  SamplerConfig sampler_config;
  BridgeConfig bridge_config;
  std::uint64_t seed = 0;
  int jobs = 1;
};

struct SbcRun {
  int index = 0;
  Hypothesis truth = Hypothesis::H0;
  std::optional<SimTruth> truth_params;
  BayesFactorEstimate bf;
  double p_h1_post = 0.0;  // NaN when the run failed
  bool failed = false;
  std::string flag;
};

struct SbcEnsemble {
  std::vector<SbcRun> runs;
  ModelPrior model_prior;
  int n_failures = 0;
  bool invalid = false;  // more than 20% of runs failed

  std::size_t n_success() const { return runs.size() - n_failures; }
};

// Hypothesis-conditional estimation step: simulate + fit + BF for one run.
struct SbcRunOutcome {
  BayesFactorEstimate bf;
  std::optional<SimTruth> truth_params;
};
using SbcPipeline = std::function<SbcRunOutcome(int run_index, Hypothesis truth)>;

// Draw population-level parameters from the priors for the given structure
// (intercept truncated at zero, half-normal SDs, LKJ correlation).
SimTruth draw_sim_truth(std::mt19937_64& rng, const PriorSpec& prior, const LmmModelSpec& sim_spec);

// Generic SBC driver: per run, the truth is drawn from the model prior and
// handed to the pipeline; failures are recorded without aborting the ensemble.
SbcEnsemble run_sbc_with(int n_runs, const ModelPrior& model_prior, std::uint64_t seed,
                         const SbcPipeline& pipeline, int jobs = 1);

// The full simulate -> fit H1/H0 -> estimate pipeline from the config.
SbcEnsemble run_sbc(const SbcConfig& config);
SbcPipeline make_lmm_pipeline(const SbcConfig& config);

struct PriorRecovery {
  double mean_p_h1 = 0.0;
  double ci_low = 0.0;
  double ci_high = 1.0;
  bool pass = false;
  std::size_t n_used = 0;
};

// Data-averaged posterior model probability versus the prior, with a Wilson
// 95% interval on the mean treated as a proportion.
PriorRecovery sbc_prior_recovery(const SbcEnsemble& ensemble);

struct TruthTable {
  bool h0_present = false, h1_present = false;
  // Average posterior probabilities in percent; each present row sums to 100.
  double h0_true_ph0 = 0.0, h0_true_ph1 = 0.0;
  double h1_true_ph0 = 0.0, h1_true_ph1 = 0.0;
};

TruthTable sbc_truth_table(const SbcEnsemble& ensemble);

struct SweepPoint {
  double prior_p_h0 = 0.0;       // bin average of the per-run priors
  double mean_post_p_h0 = 0.0;
  double ci_low = 0.0, ci_high = 1.0;
  int n_runs = 0;
};

// Each run draws its truth from its own prior p(H1); results are binned for
// plotting (bin_size runs per point, in grid order).
std::vector<SweepPoint> prior_probability_sweep(const std::vector<double>& p_h1_per_run,
                                                std::uint64_t seed, const SbcPipeline& pipeline,
                                                int jobs = 1, int bin_size = 50);

// One SbcRun per line.
void write_ensemble_jsonl(const SbcEnsemble& ensemble, const std::string& path);
SbcEnsemble read_ensemble_jsonl(const std::string& path);

}  // namespace bfw
