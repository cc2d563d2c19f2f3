#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "ropper/types.hpp"

namespace ropper {

struct CovariateTable;  // defined in simulate.hpp

// 17 significant digits: round-trip exact for doubles.
std::string format_double(double v);

// FNV-1a over the raw file bytes; provenance stamp for inputs.
std::uint64_t fnv1a_file_hash(const std::string& path);

// Unit-record table reader. The header declares column roles: `id`, `y`,
// `sigma` and optional `n` are fixed names; every other column is a
// covariate, in header order. Schema violations report row/column
// coordinates. `add_intercept` prepends a ones column.
Dataset read_dataset_csv(const std::string& path, bool add_intercept);

// Plain numeric table (header + rows), for user-supplied covariates.
CovariateTable read_covariate_table(const std::string& path);

// CSV emitter with provenance comment lines (`# key=value`) ahead of the
// header. Comma separated, LF endings, 17-significant-digit numbers.
class CsvWriter {
 public:
  explicit CsvWriter(std::string path) : path_(std::move(path)) {}

  void add_provenance(const std::string& key, const std::string& value);
  void set_header(std::vector<std::string> names);
  void add_row(std::vector<std::string> cells);
  static std::string cell(double v) { return format_double(v); }

  void write() const;

 private:
  std::string path_;
  std::vector<std::pair<std::string, std::string>> provenance_;
  std::vector<std::string> header_;
  std::vector<std::vector<std::string>> rows_;
};

std::string read_file(const std::string& path);

}  // namespace ropper
