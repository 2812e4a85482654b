#pragma once

#include <nlohmann/json.hpp>

#include "bfw/sampler.hpp"

namespace bfw {

// Full-fidelity ChainSet serialization for run records and offline analysis.
// Doubles survive the round trip exactly (17 significant digits).
nlohmann::json chainset_to_json(const ChainSet& chains);
ChainSet chainset_from_json(const nlohmann::json& j);

}  // namespace bfw
