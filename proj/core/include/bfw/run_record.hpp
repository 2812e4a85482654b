#pragma once

#include <string>

#include <nlohmann/json.hpp>

namespace bfw {

// Persistent record of one CLI run: full configuration echo (including seeds
// and materialized defaults) plus the outputs, so `replay` can re-execute the
// configuration and compare outputs byte for byte.
struct RunRecord {
  std::string command;
  nlohmann::json config = nlohmann::json::object();
  nlohmann::json outputs = nlohmann::json::object();
  std::string started_at;
  std::string finished_at;

  nlohmann::json to_json() const;
  static RunRecord from_json(const nlohmann::json& j);

  void save(const std::string& path) const;
  static RunRecord load(const std::string& path);

  // Canonical serialization of the outputs object used for replay comparison.
  std::string outputs_digest() const { return outputs.dump(); }
};

std::string iso8601_now();

}  // namespace bfw
