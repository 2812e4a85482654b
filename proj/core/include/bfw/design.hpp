#pragma once

#include <vector>

#include "bfw/dataset.hpp"

namespace bfw {

// Balanced within-subject factorial design: every subject (crossed with every
// item, when present) sees each condition level `replications` times.
struct DesignSpec {
  std::vector<double> factor_levels = {-1.0, 1.0};
  int replications = 2;
  int n_subjects = 15;
  int n_items = 0;  // 0 = no item factor
};

// Deterministic row order: subject-major, then item, then condition, then replication.
DesignTable generate_design(const DesignSpec& spec);

}  // namespace bfw
