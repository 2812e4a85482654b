#include "bfw/workflow_config.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace bfw {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

}  // namespace

WorkflowConfig WorkflowConfig::parse_string(const std::string& text) {
  WorkflowConfig cfg;
  std::stringstream ss(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(ss, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument("config: line " + std::to_string(line_no) +
                                  " is not of the form `section.key = value`");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty()) throw std::invalid_argument("config: empty key on line " + std::to_string(line_no));
    if (cfg.values_.count(key))
      throw std::invalid_argument("config: duplicate key '" + key + "'");
    cfg.values_[key] = value;
  }
  return cfg;
}

WorkflowConfig WorkflowConfig::parse_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("config: cannot open '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_string(buf.str());
}

std::string WorkflowConfig::get_string(const std::string& key) const {
  const auto it = values_.find(key);
  if (it == values_.end()) throw std::invalid_argument("config: missing key '" + key + "'");
  return it->second;
}

double WorkflowConfig::get_double(const std::string& key) const {
  const std::string v = get_string(key);
  try {
    std::size_t pos = 0;
    const double d = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return d;
  } catch (const std::exception&) {
    throw std::invalid_argument("config: key '" + key + "' has non-numeric value '" + v + "'");
  }
}

long WorkflowConfig::get_long(const std::string& key) const {
  const std::string v = get_string(key);
  try {
    std::size_t pos = 0;
    const long l = std::stol(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return l;
  } catch (const std::exception&) {
    throw std::invalid_argument("config: key '" + key + "' has non-integer value '" + v + "'");
  }
}

bool WorkflowConfig::get_bool(const std::string& key) const {
  const std::string v = get_string(key);
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw std::invalid_argument("config: key '" + key + "' has non-boolean value '" + v + "'");
}

std::vector<double> WorkflowConfig::get_double_list(const std::string& key) const {
  const std::string v = get_string(key);
  std::vector<double> out;
  std::stringstream ss(v);
  std::string part;
  while (std::getline(ss, part, ',')) {
    part = trim(part);
    if (part.empty()) continue;
    out.push_back(std::stod(part));
  }
  if (out.empty()) throw std::invalid_argument("config: key '" + key + "' has an empty list");
  return out;
}

std::string WorkflowConfig::default_string(const std::string& key, const std::string& fallback) {
  if (!has(key)) values_[key] = fallback;
  return values_[key];
}

double WorkflowConfig::default_double(const std::string& key, double fallback) {
  if (!has(key)) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", fallback);
    values_[key] = buf;
  }
  return get_double(key);
}

long WorkflowConfig::default_long(const std::string& key, long fallback) {
  if (!has(key)) values_[key] = std::to_string(fallback);
  return get_long(key);
}

bool WorkflowConfig::default_bool(const std::string& key, bool fallback) {
  if (!has(key)) values_[key] = fallback ? "true" : "false";
  return get_bool(key);
}

void WorkflowConfig::set(const std::string& key, const std::string& value) { values_[key] = value; }

void WorkflowConfig::validate_keys(const std::set<std::string>& allowed) const {
  for (const auto& [key, value] : values_)
    if (!allowed.count(key))
      throw std::invalid_argument("config: unknown key '" + key + "'");
}

}  // namespace bfw
