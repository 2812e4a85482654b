#include "bfw/run_record.hpp"

#include <ctime>
#include <fstream>
#include <stdexcept>

#include "bfw/version.hpp"

namespace bfw {

using nlohmann::json;

std::string iso8601_now() {
  std::time_t t = std::time(nullptr);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&t));
  return buf;
}

json RunRecord::to_json() const {
  return json{{"schema_version", run_record_schema_version},
              {"engine_version", engine_version},
              {"command", command},
              {"config", config},
              {"outputs", outputs},
              {"started_at", started_at},
              {"finished_at", finished_at}};
}

RunRecord RunRecord::from_json(const json& j) {
  if (j.at("schema_version").get<int>() != run_record_schema_version)
    throw std::invalid_argument("run record: unsupported schema version");
  RunRecord r;
  r.command = j.at("command");
  r.config = j.at("config");
  r.outputs = j.at("outputs");
  r.started_at = j.value("started_at", "");
  r.finished_at = j.value("finished_at", "");
  return r;
}

void RunRecord::save(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("run record: cannot write '" + path + "'");
  out << to_json().dump(2) << '\n';
}

RunRecord RunRecord::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("run record: cannot open '" + path + "'");
  json j;
  in >> j;
  return from_json(j);
}

}  // namespace bfw
