#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace bfw {

struct Observation {
  int subj = 0;                 // contiguous 0..S-1 after ingestion
  std::optional<int> item;      // contiguous 0..I-1 when present
  double x = 1.0;               // condition code, -1 or +1 (sum coding)
  double rt = 0.0;              // response time in milliseconds, > 0
};

// Rows of (subject, optional item, condition code, response time).
class Dataset {
 public:
  Dataset() = default;
  explicit Dataset(std::vector<Observation> rows);

  const std::vector<Observation>& rows() const { return rows_; }
  std::size_t size() const { return rows_.size(); }
  bool empty() const { return rows_.empty(); }
  int n_subjects() const { return n_subjects_; }
  int n_items() const { return n_items_; }
  bool has_items() const { return n_items_ > 0; }

  // Header `subj,item,x,rt` (item column optional), '.' decimal point, UTF-8.
  static Dataset read_csv(const std::string& path);
  void write_csv(const std::string& path) const;

 private:
  void validate_and_index();

  std::vector<Observation> rows_;
  int n_subjects_ = 0;
  int n_items_ = 0;
};

// A design skeleton: rows without response times yet.
struct DesignRow {
  int subj = 0;
  std::optional<int> item;
  double x = 1.0;
};

struct DesignTable {
  std::vector<DesignRow> rows;
  int n_subjects = 0;
  int n_items = 0;  // 0 = no item factor
  bool has_items() const { return n_items > 0; }
};

}  // namespace bfw
