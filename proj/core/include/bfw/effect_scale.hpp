#pragma once

#include <cmath>

namespace bfw {

// Converts an effect size in milliseconds (difference between the +1 and -1
// conditions) to the slope beta1 on the log-ms scale, given intercept beta0.
// Solves eff_ms = exp(beta0 + beta1) - exp(beta0 - beta1) = 2 exp(beta0) sinh(beta1),
// so beta1 = asinh(eff_ms / (2 exp(beta0))). Odd and strictly increasing in eff_ms.
inline double effect_ms_to_log(double eff_ms, double beta0) {
  return std::asinh(eff_ms / (2.0 * std::exp(beta0)));
}

inline double effect_log_to_ms(double beta1, double beta0) {
  return std::exp(beta0 + beta1) - std::exp(beta0 - beta1);
}

}  // namespace bfw
