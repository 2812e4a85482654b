#pragma once

#include <cmath>
#include <string>

namespace bfw {

enum class MlMethod { bridge, analytic, savage_dickey_implied };

struct LogMlEstimate {
  double log_ml = 0.0;
  int n_iterations = 0;
  bool converged = false;
  double relative_mse_proxy = 0.0;
  MlMethod method = MlMethod::bridge;
  bool stability_warning = false;  // e.g. estimated from fewer than 1000 draws
  bool failed = false;

  static LogMlEstimate analytic(double value) {
    LogMlEstimate e;
    e.log_ml = value;
    e.converged = true;
    e.method = MlMethod::analytic;
    return e;
  }
};

// A Bayes factor is always positive; a non-positive or non-finite estimate is
// stored as a failure, never as a value.
struct BayesFactorEstimate {
  double log_bf10 = 0.0;
  bool failed = false;
  bool stability_flag = false;
  std::string failure_reason;

  double bf10() const { return failed ? std::nan("") : std::exp(log_bf10); }

  static BayesFactorEstimate from_log(double log_bf, bool unstable = false) {
    BayesFactorEstimate e;
    if (!std::isfinite(log_bf)) {
      e.failed = true;
      e.failure_reason = "non-finite log Bayes factor";
      return e;
    }
    e.log_bf10 = log_bf;
    e.stability_flag = unstable;
    return e;
  }

  static BayesFactorEstimate failure(std::string reason) {
    BayesFactorEstimate e;
    e.failed = true;
    e.failure_reason = std::move(reason);
    return e;
  }
};

// log BF10 from two marginal-likelihood estimates (log BF(M1,M0) = -log BF(M0,M1)).
inline BayesFactorEstimate bayes_factor(const LogMlEstimate& ml1, const LogMlEstimate& ml0) {
  if (ml1.failed || ml0.failed) return BayesFactorEstimate::failure("marginal likelihood estimation failed");
  if (!std::isfinite(ml1.log_ml) || !std::isfinite(ml0.log_ml))
    return BayesFactorEstimate::failure("non-finite marginal likelihood");
  return BayesFactorEstimate::from_log(ml1.log_ml - ml0.log_ml,
                                       ml1.stability_warning || ml0.stability_warning ||
                                           !ml1.converged || !ml0.converged);
}

}  // namespace bfw
