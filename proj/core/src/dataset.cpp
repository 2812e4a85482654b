#include "bfw/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

namespace bfw {

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  std::stringstream ss(line);
  while (std::getline(ss, cur, ',')) {
    // trim surrounding whitespace
    const auto b = cur.find_first_not_of(" \t\r");
    const auto e = cur.find_last_not_of(" \t\r");
    fields.push_back(b == std::string::npos ? std::string() : cur.substr(b, e - b + 1));
  }
  if (!line.empty() && line.back() == ',') fields.emplace_back();
  return fields;
}

double parse_double(const std::string& s, const std::string& what) {
  try {
    std::size_t pos = 0;
    const double v = std::stod(s, &pos);
    if (pos != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw std::invalid_argument("dataset: cannot parse " + what + " value '" + s + "'");
  }
}

long parse_long(const std::string& s, const std::string& what) {
  try {
    std::size_t pos = 0;
    const long v = std::stol(s, &pos);
    if (pos != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw std::invalid_argument("dataset: cannot parse " + what + " value '" + s + "'");
  }
}

}  // namespace

Dataset::Dataset(std::vector<Observation> rows) : rows_(std::move(rows)) { validate_and_index(); }

void Dataset::validate_and_index() {
  if (rows_.empty()) {
    n_subjects_ = 0;
    n_items_ = 0;
    return;
  }
  const bool with_items = rows_.front().item.has_value();
  std::map<int, int> subj_index;
  std::map<int, int> item_index;
  for (const auto& r : rows_) {
    if (!(r.rt > 0.0) || !std::isfinite(r.rt))
      throw std::domain_error("dataset: every rt must be a positive finite number");
    if (r.x != -1.0 && r.x != 1.0)
      throw std::domain_error("dataset: condition codes must be -1 or +1");
    if (r.item.has_value() != with_items)
      throw std::invalid_argument("dataset: item column must be present for all rows or none");
    subj_index.emplace(r.subj, 0);
    if (with_items) item_index.emplace(*r.item, 0);
  }
  int next = 0;
  for (auto& [id, idx] : subj_index) idx = next++;
  next = 0;
  for (auto& [id, idx] : item_index) idx = next++;
  for (auto& r : rows_) {
    r.subj = subj_index.at(r.subj);
    if (with_items) r.item = item_index.at(*r.item);
  }
  n_subjects_ = static_cast<int>(subj_index.size());
  n_items_ = static_cast<int>(item_index.size());
}

Dataset Dataset::read_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("dataset: cannot open '" + path + "'");
  std::string line;
  if (!std::getline(in, line)) throw std::invalid_argument("dataset: empty file '" + path + "'");
  auto header = split_csv_line(line);
  int col_subj = -1, col_item = -1, col_x = -1, col_rt = -1;
  for (int i = 0; i < static_cast<int>(header.size()); ++i) {
    if (header[i] == "subj") col_subj = i;
    else if (header[i] == "item") col_item = i;
    else if (header[i] == "x") col_x = i;
    else if (header[i] == "rt") col_rt = i;
    else throw std::invalid_argument("dataset: unknown column '" + header[i] + "' in '" + path + "'");
  }
  if (col_subj < 0 || col_x < 0 || col_rt < 0)
    throw std::invalid_argument("dataset: header must contain subj,x,rt (item optional)");

  std::vector<Observation> rows;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    auto fields = split_csv_line(line);
    if (fields.size() != header.size())
      throw std::invalid_argument("dataset: line " + std::to_string(line_no) + " has " +
                                  std::to_string(fields.size()) + " fields, expected " +
                                  std::to_string(header.size()));
    Observation obs;
    obs.subj = static_cast<int>(parse_long(fields[col_subj], "subj"));
    if (col_item >= 0) obs.item = static_cast<int>(parse_long(fields[col_item], "item"));
    obs.x = parse_double(fields[col_x], "x");
    obs.rt = parse_double(fields[col_rt], "rt");
    rows.push_back(obs);
  }
  return Dataset(std::move(rows));
}

void Dataset::write_csv(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("dataset: cannot write '" + path + "'");
  const bool with_items = has_items();
  out << (with_items ? "subj,item,x,rt\n" : "subj,x,rt\n");
  char buf[64];
  for (const auto& r : rows_) {
    out << r.subj << ',';
    if (with_items) out << *r.item << ',';
    out << static_cast<int>(r.x) << ',';
    std::snprintf(buf, sizeof(buf), "%.17g", r.rt);
    out << buf << '\n';
  }
}

}  // namespace bfw
