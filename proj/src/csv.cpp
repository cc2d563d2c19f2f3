#include "ropper/csv.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "ropper/simulate.hpp"

namespace ropper {

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open file: " + path);
  std::ostringstream oss;
  oss << in.rdbuf();
  return oss.str();
}

std::uint64_t fnv1a_file_hash(const std::string& path) {
  const std::string bytes = read_file(path);
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

namespace {

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      cells.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur.push_back(c);
    }
  }
  cells.push_back(cur);
  return cells;
}

double parse_cell(const std::string& cell, int row, const std::string& column) {
  double v = 0.0;
  const char* begin = cell.data();
  const char* end = begin + cell.size();
  auto [ptr, ec] = std::from_chars(begin, end, v);
  if (ec != std::errc() || ptr != end)
    throw std::invalid_argument("row " + std::to_string(row) + ", column '" + column +
                                "': cannot parse numeric value '" + cell + "'");
  if (!std::isfinite(v))
    throw std::invalid_argument("row " + std::to_string(row) + ", column '" + column +
                                "': non-finite value rejected");
  return v;
}

struct RawTable {
  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> rows;
};

RawTable read_raw(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open file: " + path);
  RawTable t;
  std::string line;
  bool have_header = false;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    auto cells = split_line(line);
    if (!have_header) {
      t.columns = std::move(cells);
      have_header = true;
      continue;
    }
    if (cells.size() != t.columns.size())
      throw std::invalid_argument("row " + std::to_string(t.rows.size() + 1) + ": has " +
                                  std::to_string(cells.size()) + " cells, header declares " +
                                  std::to_string(t.columns.size()));
    t.rows.push_back(std::move(cells));
  }
  if (!have_header) throw std::invalid_argument("file has no header row: " + path);
  return t;
}

}  // namespace

Dataset read_dataset_csv(const std::string& path, bool add_intercept) {
  const RawTable t = read_raw(path);

  int col_id = -1, col_y = -1, col_sigma = -1, col_n = -1;
  std::vector<int> cov_cols;
  for (int j = 0; j < static_cast<int>(t.columns.size()); ++j) {
    const std::string& name = t.columns[j];
    if (name == "id") col_id = j;
    else if (name == "y") col_y = j;
    else if (name == "sigma") col_sigma = j;
    else if (name == "n") col_n = j;
    else cov_cols.push_back(j);
  }
  if (col_y < 0) throw std::invalid_argument("missing required column 'y'");
  if (col_sigma < 0) throw std::invalid_argument("missing required column 'sigma'");
  if (cov_cols.empty() && !add_intercept)
    throw std::invalid_argument("no covariate columns found and --intercept not requested");

  Dataset data;
  data.units.resize(t.rows.size());
  const int p = static_cast<int>(cov_cols.size()) + (add_intercept ? 1 : 0);
  for (int i = 0; i < static_cast<int>(t.rows.size()); ++i) {
    const auto& cells = t.rows[i];
    UnitRecord& u = data.units[i];
    const int row = i + 1;
    u.id = col_id >= 0 ? cells[col_id] : std::to_string(i);
    u.y = parse_cell(cells[col_y], row, "y");
    u.sigma = parse_cell(cells[col_sigma], row, "sigma");
    if (u.sigma < 0.0)
      throw std::invalid_argument("row " + std::to_string(row) + ", column 'sigma': negative");
    if (col_n >= 0) {
      const double n = parse_cell(cells[col_n], row, "n");
      if (n < 1.0 || n != std::floor(n))
        throw std::invalid_argument("row " + std::to_string(row) +
                                    ", column 'n': must be a positive integer");
      u.n = static_cast<int>(n);
    }
    u.x.resize(p);
    int jx = 0;
    if (add_intercept) u.x(jx++) = 1.0;
    for (int j : cov_cols) u.x(jx++) = parse_cell(cells[j], row, t.columns[j]);
  }
  data.validate();
  return data;
}

CovariateTable read_covariate_table(const std::string& path) {
  const RawTable t = read_raw(path);
  CovariateTable out;
  out.names = t.columns;
  out.values.resize(static_cast<int>(t.rows.size()), static_cast<int>(t.columns.size()));
  for (int i = 0; i < out.values.rows(); ++i)
    for (int j = 0; j < out.values.cols(); ++j)
      out.values(i, j) = parse_cell(t.rows[i][j], i + 1, t.columns[j]);
  return out;
}

void CsvWriter::add_provenance(const std::string& key, const std::string& value) {
  provenance_.emplace_back(key, value);
}

void CsvWriter::set_header(std::vector<std::string> names) { header_ = std::move(names); }

void CsvWriter::add_row(std::vector<std::string> cells) {
  if (cells.size() != header_.size())
    throw std::invalid_argument("CsvWriter: row width does not match header");
  rows_.push_back(std::move(cells));
}

void CsvWriter::write() const {
  std::ofstream out(path_, std::ios::binary);  // binary keeps LF endings everywhere
  if (!out) throw std::runtime_error("cannot write file: " + path_);
  for (const auto& [k, v] : provenance_) out << "# " << k << "=" << v << "\n";
  for (size_t j = 0; j < header_.size(); ++j) out << (j ? "," : "") << header_[j];
  out << "\n";
  for (const auto& row : rows_) {
    for (size_t j = 0; j < row.size(); ++j) out << (j ? "," : "") << row[j];
    out << "\n";
  }
}

}  // namespace ropper
