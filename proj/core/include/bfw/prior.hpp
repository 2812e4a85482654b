#pragma once

#include <optional>
#include <stdexcept>

namespace bfw {

struct NormalPrior {
  double mean = 0.0;
  double sd = 1.0;
};

struct HalfNormalPrior {
  double scale = 1.0;
};

// Priors per parameter class on the log-ms scale. The slope prior is absent
// exactly when the model it belongs to is a null model.
struct PriorSpec {
  NormalPrior intercept{6.0, 0.5};
  std::optional<NormalPrior> slope = NormalPrior{0.0, 1.0};
  HalfNormalPrior sd_components{1.5};
  HalfNormalPrior sigma{0.5};
  double lkj_eta = 2.0;

  void validate() const {
    if (intercept.sd <= 0.0) throw std::domain_error("prior: intercept sd must be > 0");
    if (slope && slope->sd <= 0.0) throw std::domain_error("prior: slope sd must be > 0");
    if (sd_components.scale <= 0.0) throw std::domain_error("prior: sd_components scale must be > 0");
    if (sigma.scale <= 0.0) throw std::domain_error("prior: sigma scale must be > 0");
    if (lkj_eta <= 0.0) throw std::domain_error("prior: lkj eta must be > 0");
  }

  PriorSpec without_slope() const {
    PriorSpec p = *this;
    p.slope.reset();
    return p;
  }

  PriorSpec with_slope(NormalPrior s) const {
    PriorSpec p = *this;
    p.slope = s;
    return p;
  }
};

}  // namespace bfw
