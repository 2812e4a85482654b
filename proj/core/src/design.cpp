#include "bfw/design.hpp"

#include <stdexcept>

namespace bfw {

DesignTable generate_design(const DesignSpec& spec) {
  if (spec.n_subjects < 1) throw std::invalid_argument("design: n_subjects must be >= 1");
  if (spec.replications < 1) throw std::invalid_argument("design: replications must be >= 1");
  if (spec.factor_levels.empty()) throw std::invalid_argument("design: factor_levels must be nonempty");
  if (spec.n_items < 0) throw std::invalid_argument("design: n_items must be >= 0");
  for (double l : spec.factor_levels)
    if (l != -1.0 && l != 1.0) throw std::domain_error("design: condition codes must be -1 or +1");

  DesignTable table;
  table.n_subjects = spec.n_subjects;
  table.n_items = spec.n_items;
  const int items_or_one = spec.n_items > 0 ? spec.n_items : 1;
  table.rows.reserve(static_cast<std::size_t>(spec.n_subjects) * items_or_one *
                     spec.factor_levels.size() * spec.replications);
  for (int s = 0; s < spec.n_subjects; ++s) {
    for (int it = 0; it < items_or_one; ++it) {
      for (double level : spec.factor_levels) {
        for (int rep = 0; rep < spec.replications; ++rep) {
          DesignRow row;
          row.subj = s;
          if (spec.n_items > 0) row.item = it;
          row.x = level;
          table.rows.push_back(row);
        }
      }
    }
  }
  return table;
}

}  // namespace bfw
