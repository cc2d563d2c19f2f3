#include "ropper/config.hpp"

#include <charconv>
#include <sstream>
#include <stdexcept>

#include "ropper/csv.hpp"

namespace ropper {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

}  // namespace

ConfigReader ConfigReader::from_text(const std::string& text) {
  ConfigReader r;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument("config line " + std::to_string(lineno) +
                                  ": expected key=value, got '" + t + "'");
    const std::string key = trim(t.substr(0, eq));
    const std::string value = trim(t.substr(eq + 1));
    if (key.empty())
      throw std::invalid_argument("config line " + std::to_string(lineno) + ": empty key");
    if (r.entries_.count(key))
      throw std::invalid_argument("config: duplicate key '" + key + "'");
    r.entries_[key] = value;
  }
  return r;
}

ConfigReader ConfigReader::from_file(const std::string& path) {
  return from_text(read_file(path));
}

void ConfigReader::set(const std::string& key, const std::string& value) {
  entries_[key] = value;
}

bool ConfigReader::has(const std::string& key) const { return entries_.count(key) > 0; }

std::string ConfigReader::get_string(const std::string& key, const std::string& fallback) {
  consumed_.insert(key);
  const auto it = entries_.find(key);
  return it == entries_.end() ? fallback : it->second;
}

double ConfigReader::get_double(const std::string& key, double fallback) {
  consumed_.insert(key);
  const auto it = entries_.find(key);
  if (it == entries_.end()) return fallback;
  try {
    size_t pos = 0;
    const double v = std::stod(it->second, &pos);
    if (pos != it->second.size()) throw std::invalid_argument("");
    return v;
  } catch (...) {
    throw std::invalid_argument("config key '" + key + "': not a number: '" + it->second + "'");
  }
}

int ConfigReader::get_int(const std::string& key, int fallback) {
  consumed_.insert(key);
  const auto it = entries_.find(key);
  if (it == entries_.end()) return fallback;
  int v = 0;
  const auto& s = it->second;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size())
    throw std::invalid_argument("config key '" + key + "': not an integer: '" + s + "'");
  return v;
}

std::uint64_t ConfigReader::get_u64(const std::string& key, std::uint64_t fallback) {
  consumed_.insert(key);
  const auto it = entries_.find(key);
  if (it == entries_.end()) return fallback;
  std::uint64_t v = 0;
  const auto& s = it->second;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size())
    throw std::invalid_argument("config key '" + key + "': not an unsigned integer: '" + s + "'");
  return v;
}

bool ConfigReader::get_bool(const std::string& key, bool fallback) {
  consumed_.insert(key);
  const auto it = entries_.find(key);
  if (it == entries_.end()) return fallback;
  if (it->second == "true" || it->second == "1") return true;
  if (it->second == "false" || it->second == "0") return false;
  throw std::invalid_argument("config key '" + key + "': expected true/false: '" + it->second + "'");
}

void ConfigReader::reject_unknown() const {
  std::string unknown;
  for (const auto& [k, v] : entries_)
    if (!consumed_.count(k)) unknown += (unknown.empty() ? "" : ", ") + k;
  if (!unknown.empty())
    throw std::invalid_argument("config: unknown keys: " + unknown);
}

}  // namespace ropper
