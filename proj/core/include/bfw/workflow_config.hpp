#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <vector>

namespace bfw {

// Plain-text `section.key = value` configuration. '#' starts a comment.
// Unknown keys are rejected at validation; every default a command fills in
// is materialized so the run record echoes the complete configuration.
class WorkflowConfig {
 public:
  WorkflowConfig() = default;

  static WorkflowConfig parse_file(const std::string& path);
  static WorkflowConfig parse_string(const std::string& text);

  bool has(const std::string& key) const { return values_.count(key) > 0; }
  std::string get_string(const std::string& key) const;
  double get_double(const std::string& key) const;
  long get_long(const std::string& key) const;
  bool get_bool(const std::string& key) const;
  std::vector<double> get_double_list(const std::string& key) const;  // comma separated

  // Fills the key with a default when absent; either way the value ends up
  // in the materialized map.
  std::string default_string(const std::string& key, const std::string& fallback);
  double default_double(const std::string& key, double fallback);
  long default_long(const std::string& key, long fallback);
  bool default_bool(const std::string& key, bool fallback);

  void set(const std::string& key, const std::string& value);

  // Throws naming the first key not in `allowed`.
  void validate_keys(const std::set<std::string>& allowed) const;

  const std::map<std::string, std::string>& values() const { return values_; }

 private:
  std::map<std::string, std::string> values_;
};

}  // namespace bfw
