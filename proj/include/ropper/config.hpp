#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <vector>

namespace ropper {

// Flat `key=value` configuration with dotted namespaces (mm.max_iter=500).
// Lines starting with '#' are comments. Every key must be consumed by the
// reader; unknown keys are an error.
class ConfigReader {
 public:
  ConfigReader() = default;
  static ConfigReader from_text(const std::string& text);
  static ConfigReader from_file(const std::string& path);

  void set(const std::string& key, const std::string& value);
  bool has(const std::string& key) const;

  std::string get_string(const std::string& key, const std::string& fallback);
  double get_double(const std::string& key, double fallback);
  int get_int(const std::string& key, int fallback);
  std::uint64_t get_u64(const std::string& key, std::uint64_t fallback);
  bool get_bool(const std::string& key, bool fallback);

  // Throws listing any keys never consumed by a getter.
  void reject_unknown() const;

  const std::map<std::string, std::string>& entries() const { return entries_; }

 private:
  std::map<std::string, std::string> entries_;
  std::set<std::string> consumed_;
};

}  // namespace ropper
