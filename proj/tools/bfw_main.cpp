// bfw: Bayes factor workflow engine command line.
//
// Subcommands cover the workflow end to end: simulate data from the
// hierarchical lognormal model, fit a single hypothesis, estimate Bayes
// factors with repeat stability checks, run simulation-based calibration,
// sweep prior sensitivity, synthesize evidence across studies, optimize
// discovery thresholds, and replay any recorded run.

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <set>
#include <string>

#include "bfw/chain_json.hpp"
#include "bfw/dataset.hpp"
#include "bfw/decision.hpp"
#include "bfw/design.hpp"
#include "bfw/diagnostics.hpp"
#include "bfw/evidence.hpp"
#include "bfw/fit.hpp"
#include "bfw/jobs.hpp"
#include "bfw/math_util.hpp"
#include "bfw/meta.hpp"
#include "bfw/model.hpp"
#include "bfw/rng.hpp"
#include "bfw/run_record.hpp"
#include "bfw/sbc.hpp"
#include "bfw/simulate.hpp"
#include "bfw/version.hpp"
#include "bfw/workflow_config.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace bfw;

namespace {

std::string fmt(double v, const char* spec = "%.4g") {
  char buf[64];
  std::snprintf(buf, sizeof(buf), spec, v);
  return buf;
}

std::uint64_t fnv1a64(const std::string& bytes) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

std::string hash_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot hash '" + path.string() + "'");
  std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  char buf[20];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(fnv1a64(bytes)));
  return buf;
}

void record_file(json& outputs, const fs::path& dir, const std::string& name) {
  outputs["files"][name] = hash_file(dir / name);
}

// ---------------------------------------------------------------------------
// config -> engine structs

const std::set<std::string> sampler_keys = {"sampler.chains", "sampler.warmup", "sampler.iter",
                                            "sampler.target_accept", "sampler.max_tree_depth"};
const std::set<std::string> bridge_keys = {"bridge.max_iter", "bridge.tolerance"};
const std::set<std::string> prior_keys = {"priors.intercept_mean", "priors.intercept_sd",
                                          "priors.slope_mean",     "priors.slope_sd",
                                          "priors.sd_scale",       "priors.sigma_scale",
                                          "priors.lkj_eta"};
const std::set<std::string> model_keys = {"model.subject_random", "model.item_random"};
const std::set<std::string> design_keys = {"design.levels", "design.replications",
                                           "design.n_subjects", "design.n_items"};
const std::set<std::string> truth_keys = {"truth.beta0", "truth.beta1", "truth.sd_u0",
                                          "truth.sd_u1", "truth.rho_u", "truth.sd_w0",
                                          "truth.sd_w1", "truth.rho_w", "truth.sigma",
                                          "truth.empirical"};
const std::set<std::string> run_keys = {"run.seed", "run.jobs"};

// One workflow config file may drive several subcommands; each command reads
// its own sections and anything outside the engine catalog is rejected.
const std::set<std::string>& all_known_keys() {
  static const std::set<std::string> all = [] {
    std::set<std::string> out;
    for (const auto* set : {&sampler_keys, &bridge_keys, &prior_keys, &model_keys, &design_keys,
                            &truth_keys, &run_keys})
      out.insert(set->begin(), set->end());
    out.insert({"data.path", "data.out", "fit.model", "fit.draws_out", "bf.repeats",
                "hypothesis.p_h1",
                "sbc.n_runs", "sbc.estimator", "sbc.fit_subject_random", "sbc.fit_item_random",
                "sensitivity.grid", "meta.path", "meta.grid", "meta.tau_scale",
                "decision.ensemble_path", "decision.u_td", "decision.u_fd", "decision.u_tr",
                "decision.u_fr", "decision.grid_min", "decision.grid_max", "decision.grid_points",
                "decision.rates_lo", "decision.rates_hi"});
    return out;
  }();
  return all;
}

SamplerConfig sampler_from_config(WorkflowConfig& cfg, std::uint64_t seed) {
  SamplerConfig sc;
  sc.n_chains = static_cast<int>(cfg.default_long("sampler.chains", 4));
  sc.warmup = static_cast<int>(cfg.default_long("sampler.warmup", 2000));
  sc.iter = static_cast<int>(cfg.default_long("sampler.iter", 8000));
  sc.target_accept = cfg.default_double("sampler.target_accept", 0.99);
  sc.max_tree_depth = static_cast<int>(cfg.default_long("sampler.max_tree_depth", 15));
  sc.seed = seed;
  sc.validate();
  return sc;
}

BridgeConfig bridge_from_config(WorkflowConfig& cfg, std::uint64_t seed) {
  BridgeConfig bc;
  bc.max_iter = static_cast<int>(cfg.default_long("bridge.max_iter", 1000));
  bc.tolerance = cfg.default_double("bridge.tolerance", 1e-10);
  bc.seed = seed;
  return bc;
}

PriorSpec priors_from_config(WorkflowConfig& cfg, bool include_slope) {
  PriorSpec p;
  p.intercept = {cfg.default_double("priors.intercept_mean", 6.0),
                 cfg.default_double("priors.intercept_sd", 0.5)};
  if (include_slope)
    p.slope = NormalPrior{cfg.default_double("priors.slope_mean", 0.0),
                          cfg.default_double("priors.slope_sd", 1.0)};
  else
    p.slope.reset();
  p.sd_components = {cfg.default_double("priors.sd_scale", 1.5)};
  p.sigma = {cfg.default_double("priors.sigma_scale", 0.5)};
  p.lkj_eta = cfg.default_double("priors.lkj_eta", 2.0);
  p.validate();
  return p;
}

RandomStructure parse_structure(const std::string& v, const std::string& key) {
  if (v == "none") return RandomStructure::None;
  if (v == "intercept") return RandomStructure::InterceptOnly;
  if (v == "intercept_slope") return RandomStructure::InterceptSlope;
  throw std::invalid_argument("config: key '" + key + "' must be none|intercept|intercept_slope");
}

LmmModelSpec model_from_config(WorkflowConfig& cfg) {
  LmmModelSpec spec;
  spec.subject_random =
      parse_structure(cfg.default_string("model.subject_random", "intercept_slope"),
                      "model.subject_random");
  spec.item_random =
      parse_structure(cfg.default_string("model.item_random", "none"), "model.item_random");
  return spec;
}

DesignSpec design_from_config(WorkflowConfig& cfg) {
  DesignSpec d;
  cfg.default_string("design.levels", "-1,1");
  d.factor_levels = cfg.get_double_list("design.levels");
  d.replications = static_cast<int>(cfg.default_long("design.replications", 2));
  d.n_subjects = static_cast<int>(cfg.default_long("design.n_subjects", 15));
  d.n_items = static_cast<int>(cfg.default_long("design.n_items", 0));
  return d;
}

SimTruth truth_from_config(WorkflowConfig& cfg) {
  SimTruth t;
  t.beta0 = cfg.default_double("truth.beta0", 6.0);
  t.beta1 = cfg.default_double("truth.beta1", 0.0);
  t.vc_subject = {cfg.default_double("truth.sd_u0", 0.5), cfg.default_double("truth.sd_u1", 0.5),
                  cfg.default_double("truth.rho_u", 0.3)};
  const double sd_w0 = cfg.default_double("truth.sd_w0", 0.0);
  const double sd_w1 = cfg.default_double("truth.sd_w1", 0.0);
  if (sd_w0 > 0.0 || sd_w1 > 0.0)
    t.vc_item = VarianceComponents{sd_w0, sd_w1, cfg.default_double("truth.rho_w", 0.0)};
  t.sigma = cfg.default_double("truth.sigma", 0.5);
  t.empirical = cfg.default_bool("truth.empirical", false);
  return t;
}

json config_to_json(const WorkflowConfig& cfg) {
  json j = json::object();
  for (const auto& [k, v] : cfg.values()) j[k] = v;
  return j;
}

Dataset load_dataset_or_exit(const std::string& path) {
  if (!fs::exists(path)) {
    std::cerr << "error: input file '" << path << "' does not exist\n";
    std::exit(2);
  }
  return Dataset::read_csv(path);
}

// ---------------------------------------------------------------------------
// command runners (shared by the CLI entry points and `replay`)

RunRecord run_simulate(WorkflowConfig cfg, const fs::path& out_dir) {
  cfg.validate_keys(all_known_keys());
  const std::uint64_t seed = static_cast<std::uint64_t>(cfg.default_long("run.seed", 0));
  const auto design = design_from_config(cfg);
  const auto truth = truth_from_config(cfg);
  const std::string out_name = cfg.default_string("data.out", "data.csv");

  const auto data = sim_lmm(generate_design(design), truth, seed);
  fs::create_directories(out_dir);
  data.write_csv((out_dir / out_name).string());

  RunRecord rec;
  rec.command = "simulate";
  rec.config = config_to_json(cfg);
  rec.outputs["rows"] = data.size();
  rec.outputs["n_subjects"] = data.n_subjects();
  rec.outputs["n_items"] = data.n_items();
  record_file(rec.outputs, out_dir, out_name);
  std::cout << "wrote " << data.size() << " rows to " << (out_dir / out_name).string() << "\n";
  return rec;
}

RunRecord run_fit(WorkflowConfig cfg, const fs::path& out_dir) {
  cfg.validate_keys(all_known_keys());
  const std::uint64_t seed = static_cast<std::uint64_t>(cfg.default_long("run.seed", 0));
  const std::string model_kind = cfg.default_string("fit.model", "h1");
  if (model_kind != "h0" && model_kind != "h1")
    throw std::invalid_argument("config: key 'fit.model' must be h0|h1");
  const auto data = load_dataset_or_exit(cfg.get_string("data.path"));

  LmmModelSpec spec = model_from_config(cfg);
  spec.include_slope = model_kind == "h1";
  const auto prior = priors_from_config(cfg, spec.include_slope);
  auto sc = sampler_from_config(cfg, derive_stream(seed, "fit")());
  sc.jobs = static_cast<int>(cfg.default_long("run.jobs", 1));
  const auto fit = fit_lmm(data, spec, prior, sc);

  RunRecord rec;
  rec.command = "fit";
  rec.config = config_to_json(cfg);
  json params = json::array();
  const auto names = fit.model->layout().names();
  std::printf("%-10s %10s %10s %10s %10s %8s %10s %10s\n", "param", "mean", "sd", "q2.5", "q97.5",
              "rhat", "bulk_ess", "tail_ess");
  for (int d = 0; d < fit.model->dim(); ++d) {
    if (names[d].front() == 'z') continue;  // population-level summary only
    auto draws = fit.constrained_draws(names[d]);
    const double m = mean(draws);
    const double s = sample_sd(draws);
    const double lo = quantile(draws, 0.025);
    const double hi = quantile(draws, 0.975);
    std::printf("%-10s %10s %10s %10s %10s %8s %10s %10s\n", names[d].c_str(), fmt(m).c_str(),
                fmt(s).c_str(), fmt(lo).c_str(), fmt(hi).c_str(),
                fmt(fit.diagnostics.rhat[d]).c_str(), fmt(fit.diagnostics.bulk_ess[d]).c_str(),
                fmt(fit.diagnostics.tail_ess[d]).c_str());
    params.push_back(json{{"name", names[d]},
                          {"mean", m},
                          {"sd", s},
                          {"q025", lo},
                          {"q975", hi},
                          {"rhat", fit.diagnostics.rhat[d]},
                          {"bulk_ess", fit.diagnostics.bulk_ess[d]},
                          {"tail_ess", fit.diagnostics.tail_ess[d]}});
  }
  std::printf("divergences: %d\n", fit.diagnostics.divergences);
  rec.outputs["parameters"] = params;
  rec.outputs["divergences"] = fit.diagnostics.divergences;
  rec.outputs["max_rhat"] = fit.diagnostics.max_rhat();
  if (cfg.has("fit.draws_out")) {
    const std::string name = cfg.get_string("fit.draws_out");
    fs::create_directories(out_dir);
    std::ofstream out(out_dir / name);
    out << chainset_to_json(fit.chains).dump() << '\n';
    out.close();
    record_file(rec.outputs, out_dir, name);
  }
  return rec;
}

RunRecord run_bf(WorkflowConfig cfg, const fs::path& out_dir) {
  cfg.validate_keys(all_known_keys());
  const std::uint64_t seed = static_cast<std::uint64_t>(cfg.default_long("run.seed", 0));
  const int repeats = static_cast<int>(cfg.default_long("bf.repeats", 4));
  const double p_h1 = cfg.default_double("hypothesis.p_h1", 0.5);
  const int jobs = static_cast<int>(cfg.default_long("run.jobs", 1));
  const auto data = load_dataset_or_exit(cfg.get_string("data.path"));

  LmmModelSpec spec = model_from_config(cfg);
  spec.include_slope = true;
  const auto prior = priors_from_config(cfg, true);
  const auto sc = sampler_from_config(cfg, seed);
  const auto bc = bridge_from_config(cfg, seed);

  const auto res = stability_check(data, spec, prior, repeats, sc, bc, jobs);

  std::cout << "BF10 repeats:";
  json bf_list = json::array();
  for (const auto& bf : res.bfs) {
    if (bf.failed) {
      std::cout << " failed";
      bf_list.push_back(nullptr);
    } else {
      std::cout << " " << fmt(bf.bf10());
      bf_list.push_back(bf.bf10());
    }
  }
  std::cout << "\n";
  const bool warn = res.worst_rhat > 1.01 || res.total_divergences > 0;
  const ModelPrior model_prior{1.0 - p_h1, p_h1};
  json outputs;
  outputs["bf10_repeats"] = bf_list;
  outputs["n_failures"] = res.n_failures;
  if (res.n_failures < repeats) {
    const auto post = posterior_model_probs(res.mean_bf10, model_prior);
    std::cout << "mean BF10: " << fmt(res.mean_bf10) << "  sd(log10 BF): " << fmt(res.sd_log10_bf10)
              << "  max spread(log10): " << fmt(res.max_spread_log10) << "\n";
    std::cout << "interpretation: " << jeffreys_label(res.mean_bf10) << "\n";
    std::cout << "posterior model probabilities: p(H0|y) = " << fmt(post.p_h0)
              << ", p(H1|y) = " << fmt(post.p_h1) << "\n";
    outputs["mean_bf10"] = res.mean_bf10;
    outputs["sd_log10_bf10"] = res.sd_log10_bf10;
    outputs["max_spread_log10"] = res.max_spread_log10;
    outputs["jeffreys"] = jeffreys_label(res.mean_bf10);
    outputs["p_h0_post"] = post.p_h0;
    outputs["p_h1_post"] = post.p_h1;
  }
  outputs["max_rhat"] = res.worst_rhat;
  outputs["divergences"] = res.total_divergences;
  outputs["status"] = warn ? "WARN" : "OK";
  std::cout << "status: " << (warn ? "WARN (diagnostics: check rhat/divergences)" : "OK") << "\n";

  RunRecord rec;
  rec.command = "bf";
  rec.config = config_to_json(cfg);
  rec.outputs = outputs;
  (void)out_dir;
  return rec;
}

RunRecord run_sbc_command(WorkflowConfig cfg, const fs::path& out_dir) {
  cfg.validate_keys(all_known_keys());
  const std::uint64_t seed = static_cast<std::uint64_t>(cfg.default_long("run.seed", 0));

  SbcConfig sbc;
  sbc.n_runs = static_cast<int>(cfg.default_long("sbc.n_runs", 500));
  const double p_h1 = cfg.default_double("hypothesis.p_h1", 0.5);
  sbc.model_prior = {1.0 - p_h1, p_h1};
  sbc.design = design_from_config(cfg);
  sbc.param_prior = priors_from_config(cfg, true);
  sbc.sim_spec = model_from_config(cfg);
  sbc.fit_spec.subject_random = parse_structure(
      cfg.default_string("sbc.fit_subject_random", cfg.get_string("model.subject_random")),
      "sbc.fit_subject_random");
  sbc.fit_spec.item_random = parse_structure(
      cfg.default_string("sbc.fit_item_random", cfg.get_string("model.item_random")),
      "sbc.fit_item_random");
  const std::string estimator = cfg.default_string("sbc.estimator", "bridge");
  if (estimator == "bridge")
    sbc.estimator = SbcEstimator::bridge;
  else if (estimator == "savage_dickey")
    sbc.estimator = SbcEstimator::savage_dickey;
  else
    throw std::invalid_argument("config: key 'sbc.estimator' must be bridge|savage_dickey");
  sbc.sampler_config = sampler_from_config(cfg, seed);
  sbc.bridge_config = bridge_from_config(cfg, seed);
  sbc.seed = seed;
  sbc.jobs = static_cast<int>(cfg.default_long("run.jobs", 1));

  const auto ensemble = run_sbc(sbc);
  fs::create_directories(out_dir);
  write_ensemble_jsonl(ensemble, (out_dir / "ensemble.jsonl").string());

  json outputs;
  outputs["n_runs"] = ensemble.runs.size();
  outputs["n_failures"] = ensemble.n_failures;
  outputs["invalid"] = ensemble.invalid;

  std::string verdict = "inconclusive";
  if (ensemble.n_success() >= 50) {
    const auto rec_summary = sbc_prior_recovery(ensemble);
    const auto table = sbc_truth_table(ensemble);
    verdict = rec_summary.pass ? "pass" : "fail";
    std::string direction;
    if (!rec_summary.pass)
      direction = rec_summary.ci_low > ensemble.model_prior.p_h1 ? "inflated p_h1" : "deflated p_h1";
    std::cout << "prior recovery: mean p(H1|y) = " << fmt(100.0 * rec_summary.mean_p_h1)
              << "% CI [" << fmt(100.0 * rec_summary.ci_low) << ", "
              << fmt(100.0 * rec_summary.ci_high) << "] -> " << verdict
              << (direction.empty() ? "" : " (" + direction + ")") << "\n";
    std::cout << "truth table (avg posterior %, rows H0-true/H1-true):\n";
    std::printf("  H0-true: pH0 %s pH1 %s\n", fmt(table.h0_true_ph0).c_str(),
                fmt(table.h0_true_ph1).c_str());
    std::printf("  H1-true: pH0 %s pH1 %s\n", fmt(table.h1_true_ph0).c_str(),
                fmt(table.h1_true_ph1).c_str());

    std::ofstream csv(out_dir / "summary.csv");
    csv << "metric,value\n";
    char buf[128];
    std::snprintf(buf, sizeof(buf), "mean_p_h1,%.17g\n", rec_summary.mean_p_h1);
    csv << buf;
    std::snprintf(buf, sizeof(buf), "ci_low,%.17g\n", rec_summary.ci_low);
    csv << buf;
    std::snprintf(buf, sizeof(buf), "ci_high,%.17g\n", rec_summary.ci_high);
    csv << buf;
    csv << "pass," << (rec_summary.pass ? 1 : 0) << "\n";
    std::snprintf(buf, sizeof(buf), "h0_true_ph0,%.17g\n", table.h0_true_ph0);
    csv << buf;
    std::snprintf(buf, sizeof(buf), "h1_true_ph1,%.17g\n", table.h1_true_ph1);
    csv << buf;
    csv.close();
    record_file(outputs, out_dir, "summary.csv");

    outputs["recovery"] = json{{"mean_p_h1", rec_summary.mean_p_h1},
                               {"ci_low", rec_summary.ci_low},
                               {"ci_high", rec_summary.ci_high},
                               {"pass", rec_summary.pass}};
    if (!direction.empty()) outputs["recovery"]["direction"] = direction;
    outputs["truth_table"] = json{{"h0_true_ph0", table.h0_true_ph0},
                                  {"h0_true_ph1", table.h0_true_ph1},
                                  {"h1_true_ph0", table.h1_true_ph0},
                                  {"h1_true_ph1", table.h1_true_ph1}};
  } else {
    std::cout << "fewer than 50 successful runs; recovery verdict skipped\n";
  }
  outputs["verdict"] = verdict;
  record_file(outputs, out_dir, "ensemble.jsonl");
  std::cout << "ensemble written to " << (out_dir / "ensemble.jsonl").string() << " ("
            << ensemble.n_failures << " failures)\n";

  RunRecord rec;
  rec.command = "sbc";
  rec.config = config_to_json(cfg);
  rec.outputs = outputs;
  return rec;
}

json curve_to_json(const SensitivityCurve& curve) {
  json points = json::array();
  for (const auto& p : curve.points) {
    json jp{{"prior_sd", p.prior_sd}};
    if (p.bf.failed) {
      jp["failed"] = true;
    } else {
      jp["bf10"] = p.bf.bf10();
      jp["log10_bf10"] = p.bf.log_bf10 / std::log(10.0);
      jp["stable"] = !p.bf.stability_flag;
    }
    points.push_back(jp);
  }
  return points;
}

std::vector<double> grid_from_config(WorkflowConfig& cfg, const std::string& key) {
  if (cfg.has(key)) return cfg.get_double_list(key);
  const auto grid = default_sensitivity_grid();
  std::string s;
  for (double g : grid) s += (s.empty() ? "" : ",") + fmt(g, "%.17g");
  cfg.set(key, s);
  return grid;
}

RunRecord run_sensitivity(WorkflowConfig cfg, const fs::path& out_dir) {
  cfg.validate_keys(all_known_keys());
  const std::uint64_t seed = static_cast<std::uint64_t>(cfg.default_long("run.seed", 0));
  const auto data = load_dataset_or_exit(cfg.get_string("data.path"));
  const auto grid = grid_from_config(cfg, "sensitivity.grid");
  LmmModelSpec spec = model_from_config(cfg);
  spec.include_slope = true;
  const auto prior = priors_from_config(cfg, true);
  const auto sc = sampler_from_config(cfg, seed);
  const auto bc = bridge_from_config(cfg, seed);
  const int jobs = static_cast<int>(cfg.default_long("run.jobs", 1));

  const auto curve = sensitivity_curve(data, grid, prior, spec, sc, bc, jobs);
  fs::create_directories(out_dir);
  write_curve_csv(curve, (out_dir / "curve.csv").string());
  for (const auto& p : curve.points)
    std::cout << "prior sd " << fmt(p.prior_sd) << ": BF10 = "
              << (p.bf.failed ? "failed" : fmt(p.bf.bf10())) << "\n";

  RunRecord rec;
  rec.command = "sensitivity";
  rec.config = config_to_json(cfg);
  rec.outputs["points"] = curve_to_json(curve);
  record_file(rec.outputs, out_dir, "curve.csv");
  return rec;
}

RunRecord run_meta(WorkflowConfig cfg, const fs::path& out_dir) {
  cfg.validate_keys(all_known_keys());
  const std::uint64_t seed = static_cast<std::uint64_t>(cfg.default_long("run.seed", 0));
  const std::string path = cfg.get_string("meta.path");
  if (!fs::exists(path)) {
    std::cerr << "error: input file '" << path << "' does not exist\n";
    std::exit(2);
  }
  const auto meta = MetaInput::read_csv(path);
  const auto grid = grid_from_config(cfg, "meta.grid");
  const HalfNormalPrior tau_scale{cfg.default_double("meta.tau_scale", 0.5)};
  const auto sc = sampler_from_config(cfg, seed);
  const auto bc = bridge_from_config(cfg, seed);
  const int jobs = static_cast<int>(cfg.default_long("run.jobs", 1));

  const auto curve = meta_analysis_bf(meta, grid, tau_scale, sc, bc, jobs);
  fs::create_directories(out_dir);
  write_curve_csv(curve, (out_dir / "curve.csv").string());
  for (const auto& p : curve.points)
    std::cout << "prior sd " << fmt(p.prior_sd) << ": BF10 = "
              << (p.bf.failed ? "failed" : fmt(p.bf.bf10())) << "\n";

  RunRecord rec;
  rec.command = "meta";
  rec.config = config_to_json(cfg);
  rec.outputs["points"] = curve_to_json(curve);
  record_file(rec.outputs, out_dir, "curve.csv");
  return rec;
}

RunRecord run_decide(WorkflowConfig cfg, const fs::path& out_dir) {
  cfg.validate_keys(all_known_keys());
  const std::string path = cfg.get_string("decision.ensemble_path");
  if (!fs::exists(path)) {
    std::cerr << "error: input file '" << path << "' does not exist\n";
    std::exit(2);
  }
  const auto ensemble = read_ensemble_jsonl(path);
  UtilitySpec u;
  u.u_true_discovery = cfg.default_double("decision.u_td", 10.0);
  u.u_false_discovery = cfg.default_double("decision.u_fd", -50.0);
  u.u_true_rejection = cfg.default_double("decision.u_tr", 5.0);
  u.u_false_rejection = cfg.default_double("decision.u_fr", -5.0);

  std::vector<double> grid;
  const double gmin = cfg.default_double("decision.grid_min", 1.0);
  const double gmax = cfg.default_double("decision.grid_max", 100.0);
  const int gpts = static_cast<int>(cfg.default_long("decision.grid_points", 40));
  if (!(gmin > 0.0) || !(gmax > gmin) || gpts < 2)
    throw std::invalid_argument("config: decision grid must satisfy 0 < min < max, points >= 2");
  for (int i = 0; i < gpts; ++i)
    grid.push_back(gmin * std::pow(gmax / gmin, static_cast<double>(i) / (gpts - 1)));

  std::vector<BayesFactorEstimate> bfs;
  std::vector<Hypothesis> truths;
  for (const auto& run : ensemble.runs) {
    bfs.push_back(run.bf);
    truths.push_back(run.truth);
  }
  const auto opt = optimize_threshold(bfs, truths, u, grid);

  std::vector<Action> actions(bfs.size());
  for (std::size_t i = 0; i < bfs.size(); ++i) actions[i] = decide(bfs[i], opt.best_threshold);
  const auto counts = tabulate(truths, actions);
  const auto rates = discovery_rates(counts);
  const double lo = cfg.default_double("decision.rates_lo", 0.1);
  const double hi = cfg.default_double("decision.rates_hi", 10.0);
  const auto rates3 = discovery_rates_three_way(bfs, truths, lo, hi);

  std::cout << "best threshold: " << fmt(opt.best_threshold) << " (average utility "
            << fmt(opt.best_utility) << ")\n";
  std::printf("rates at best threshold: H0 (NoDisc %s, Disc %s)  H1 (NoDisc %s, Disc %s)\n",
              fmt(rates.h0_nodisc).c_str(), fmt(rates.h0_disc).c_str(),
              fmt(rates.h1_nodisc).c_str(), fmt(rates.h1_disc).c_str());
  std::printf("three-way %% at (%s, %s): H0 (%s, %s, %s)  H1 (%s, %s, %s)\n", fmt(lo).c_str(),
              fmt(hi).c_str(), fmt(rates3.h0_evidence_h0).c_str(),
              fmt(rates3.h0_no_evidence).c_str(), fmt(rates3.h0_evidence_h1).c_str(),
              fmt(rates3.h1_evidence_h0).c_str(), fmt(rates3.h1_no_evidence).c_str(),
              fmt(rates3.h1_evidence_h1).c_str());

  fs::create_directories(out_dir);
  write_threshold_curve_csv(opt, (out_dir / "utility_curve.csv").string());
  {
    std::ofstream csv(out_dir / "rates.csv");
    csv << "truth,no_discovery,discovery\n";
    char buf[128];
    std::snprintf(buf, sizeof(buf), "H0,%.17g,%.17g\n", rates.h0_nodisc, rates.h0_disc);
    csv << buf;
    std::snprintf(buf, sizeof(buf), "H1,%.17g,%.17g\n", rates.h1_nodisc, rates.h1_disc);
    csv << buf;
  }

  RunRecord rec;
  rec.command = "decide";
  rec.config = config_to_json(cfg);
  rec.outputs["best_threshold"] = opt.best_threshold;
  rec.outputs["best_utility"] = opt.best_utility;
  rec.outputs["counts"] = json{{"h0_disc", counts.h0_disc},
                               {"h0_nodisc", counts.h0_nodisc},
                               {"h1_disc", counts.h1_disc},
                               {"h1_nodisc", counts.h1_nodisc}};
  rec.outputs["rates"] = json{{"h0_nodisc", rates.h0_nodisc},
                              {"h0_disc", rates.h0_disc},
                              {"h1_nodisc", rates.h1_nodisc},
                              {"h1_disc", rates.h1_disc}};
  rec.outputs["rates_three_way"] =
      json{{"h0", {rates3.h0_evidence_h0, rates3.h0_no_evidence, rates3.h0_evidence_h1}},
           {"h1", {rates3.h1_evidence_h0, rates3.h1_no_evidence, rates3.h1_evidence_h1}}};
  record_file(rec.outputs, out_dir, "utility_curve.csv");
  record_file(rec.outputs, out_dir, "rates.csv");
  return rec;
}

RunRecord execute_command(const std::string& command, WorkflowConfig cfg, const fs::path& out_dir) {
  if (command == "simulate") return run_simulate(std::move(cfg), out_dir);
  if (command == "fit") return run_fit(std::move(cfg), out_dir);
  if (command == "bf") return run_bf(std::move(cfg), out_dir);
  if (command == "sbc") return run_sbc_command(std::move(cfg), out_dir);
  if (command == "sensitivity") return run_sensitivity(std::move(cfg), out_dir);
  if (command == "meta") return run_meta(std::move(cfg), out_dir);
  if (command == "decide") return run_decide(std::move(cfg), out_dir);
  throw std::invalid_argument("unknown command '" + command + "'");
}

int run_and_record(const std::string& command, WorkflowConfig cfg, const fs::path& out_dir) {
  const std::string started = iso8601_now();
  RunRecord rec = execute_command(command, std::move(cfg), out_dir);
  rec.started_at = started;
  rec.finished_at = iso8601_now();
  fs::create_directories(out_dir);
  rec.save((out_dir / "record.json").string());
  return 0;
}

int run_replay(const std::string& record_path) {
  if (!fs::exists(record_path)) {
    std::cerr << "error: input file '" << record_path << "' does not exist\n";
    return 2;
  }
  const auto original = RunRecord::load(record_path);
  WorkflowConfig cfg;
  for (const auto& [key, value] : original.config.items())
    cfg.set(key, value.get<std::string>());
  const fs::path tmp =
      fs::temp_directory_path() / ("bfw_replay_" + std::to_string(fnv1a64(record_path)));
  fs::remove_all(tmp);
  fs::create_directories(tmp);
  const auto replayed = execute_command(original.command, std::move(cfg), tmp);
  const bool match = replayed.outputs_digest() == original.outputs_digest();
  std::cout << "replay of '" << original.command << "': "
            << (match ? "outputs identical" : "OUTPUTS DIFFER") << "\n";
  if (!match) {
    std::cout << "recorded: " << original.outputs_digest() << "\n";
    std::cout << "replayed: " << replayed.outputs_digest() << "\n";
  }
  fs::remove_all(tmp);
  return match ? 0 : 1;
}

int run_report(const std::string& record_path) {
  if (!fs::exists(record_path)) {
    std::cerr << "error: input file '" << record_path << "' does not exist\n";
    return 2;
  }
  const auto rec = RunRecord::load(record_path);
  std::cout << "command: " << rec.command << "\n";
  std::cout << "engine: " << engine_version << " (record schema " << run_record_schema_version
            << ")\n";
  std::cout << "started: " << rec.started_at << "  finished: " << rec.finished_at << "\n";
  std::cout << "config:\n";
  for (const auto& [k, v] : rec.config.items())
    std::cout << "  " << k << " = " << v.get<std::string>() << "\n";
  std::cout << "outputs:\n" << rec.outputs.dump(2) << "\n";
  return 0;
}

struct CommonOptions {
  std::string config_path;
  std::string out_dir = ".";
  long seed = -1;
  int jobs = 0;
};

WorkflowConfig assemble_config(const CommonOptions& opts) {
  WorkflowConfig cfg;
  if (!opts.config_path.empty()) cfg = WorkflowConfig::parse_file(opts.config_path);
  if (opts.seed >= 0) cfg.set("run.seed", std::to_string(opts.seed));
  if (opts.jobs > 0) cfg.set("run.jobs", std::to_string(opts.jobs));
  if (!cfg.has("run.jobs")) cfg.set("run.jobs", std::to_string(default_jobs()));
  return cfg;
}

void add_common(CLI::App* cmd, CommonOptions& opts) {
  cmd->add_option("--config", opts.config_path, "workflow configuration file");
  cmd->add_option("--out-dir", opts.out_dir, "directory for output files and the run record");
  cmd->add_option("--seed", opts.seed, "global seed (overrides run.seed)");
  cmd->add_option("--jobs", opts.jobs, "worker threads (overrides run.jobs / BFW_JOBS)");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Bayes factor workflow engine"};
  app.require_subcommand(1);

  CommonOptions opts;
  std::string data_path, meta_path, ensemble_path, record_path, model_kind = "h1";
  std::string grid_spec;
  long repeats = -1;

  auto* c_sim = app.add_subcommand("simulate", "simulate a dataset from the lognormal mixed model");
  add_common(c_sim, opts);

  auto* c_fit = app.add_subcommand("fit", "fit one hypothesis and print posterior summaries");
  add_common(c_fit, opts);
  c_fit->add_option("data", data_path, "dataset CSV")->required();
  c_fit->add_option("--model", model_kind, "h1 (with slope) or h0");
  bool save_draws = false;
  c_fit->add_flag("--draws", save_draws, "also write the full draws to draws.json");

  auto* c_bf = app.add_subcommand("bf", "Bayes factor with repeat stability check");
  add_common(c_bf, opts);
  c_bf->add_option("data", data_path, "dataset CSV")->required();
  c_bf->add_option("--repeats", repeats, "number of full refit+bridge repeats");

  auto* c_sbc = app.add_subcommand("sbc", "simulation-based calibration of the BF pipeline");
  add_common(c_sbc, opts);

  auto* c_sens = app.add_subcommand("sensitivity", "prior sensitivity sweep of BF10");
  add_common(c_sens, opts);
  c_sens->add_option("data", data_path, "dataset CSV")->required();
  c_sens->add_option("--grid", grid_spec, "comma-separated prior SDs");

  auto* c_meta = app.add_subcommand("meta", "random-effects meta-analysis Bayes factors");
  add_common(c_meta, opts);
  c_meta->add_option("meta", meta_path, "meta CSV (expt,b,SE)")->required();
  c_meta->add_option("--grid", grid_spec, "comma-separated prior SDs");

  auto* c_dec = app.add_subcommand("decide", "optimize the discovery threshold over an ensemble");
  add_common(c_dec, opts);
  c_dec->add_option("ensemble", ensemble_path, "ensemble JSON-lines file")->required();

  auto* c_rep = app.add_subcommand("replay", "re-run a record and compare outputs");
  c_rep->add_option("record", record_path, "record.json path")->required();

  auto* c_report = app.add_subcommand("report", "print a run record");
  c_report->add_option("record", record_path, "record.json path")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (c_rep->parsed()) return run_replay(record_path);
    if (c_report->parsed()) return run_report(record_path);

    auto cfg = assemble_config(opts);
    std::string command;
    if (c_sim->parsed()) {
      command = "simulate";
    } else if (c_fit->parsed()) {
      command = "fit";
      cfg.set("data.path", data_path);
      cfg.set("fit.model", model_kind);
      if (save_draws) cfg.set("fit.draws_out", "draws.json");
    } else if (c_bf->parsed()) {
      command = "bf";
      cfg.set("data.path", data_path);
      if (repeats > 0) cfg.set("bf.repeats", std::to_string(repeats));
    } else if (c_sbc->parsed()) {
      command = "sbc";
    } else if (c_sens->parsed()) {
      command = "sensitivity";
      cfg.set("data.path", data_path);
      if (!grid_spec.empty()) cfg.set("sensitivity.grid", grid_spec);
    } else if (c_meta->parsed()) {
      command = "meta";
      cfg.set("meta.path", meta_path);
      if (!grid_spec.empty()) cfg.set("meta.grid", grid_spec);
    } else if (c_dec->parsed()) {
      command = "decide";
      cfg.set("decision.ensemble_path", ensemble_path);
    }
    return run_and_record(command, std::move(cfg), opts.out_dir);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
