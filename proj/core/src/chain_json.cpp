#include "bfw/chain_json.hpp"

namespace bfw {

using nlohmann::json;

json chainset_to_json(const ChainSet& chains) {
  json stats = json::array();
  for (const auto& s : chains.stats)
    stats.push_back(json{{"divergences", s.divergences},
                         {"mean_accept", s.mean_accept},
                         {"step_size", s.step_size},
                         {"max_depth_hits", s.max_depth_hits},
                         {"inv_mass", s.inv_mass}});
  return json{{"n_chains", chains.n_chains},
              {"n_iter", chains.n_iter},
              {"dim", chains.dim},
              {"draws", chains.draws},
              {"log_joint", chains.log_joint},
              {"stats", stats}};
}

ChainSet chainset_from_json(const json& j) {
  ChainSet chains;
  chains.n_chains = j.at("n_chains");
  chains.n_iter = j.at("n_iter");
  chains.dim = j.at("dim");
  chains.draws = j.at("draws").get<std::vector<std::vector<double>>>();
  chains.log_joint = j.at("log_joint").get<std::vector<std::vector<double>>>();
  for (const auto& s : j.at("stats")) {
    ChainStats cs;
    cs.divergences = s.at("divergences");
    cs.mean_accept = s.at("mean_accept");
    cs.step_size = s.at("step_size");
    cs.max_depth_hits = s.at("max_depth_hits");
    cs.inv_mass = s.at("inv_mass").get<std::vector<double>>();
    chains.stats.push_back(std::move(cs));
  }
  return chains;
}

}  // namespace bfw
