#pragma once

// Flat `key = value` configuration with a fixed key registry.

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace nvp::cli {

struct KeyInfo {
  std::string key;
  std::string doc;
};

/// Every accepted key.
const std::vector<KeyInfo>& key_registry();

class Config {
 public:
  Config() = default;
  /// Throws ParseError naming the line for malformed lines, unknown or
  /// repeated keys.
  static Config parse(const std::string& text);
  static Config load(const std::string& path);

  bool has(const std::string& key) const { return values_.count(key) != 0; }
  std::optional<std::string> text(const std::string& key) const;
  std::string text_or(const std::string& key, const std::string& fallback) const;
  /// Numeric value; ParseError with the key's line when it is not a number.
  std::optional<double> number(const std::string& key) const;
  double number_or(const std::string& key, double fallback) const;
  /// Line the key was set on (0 if unset).
  int line(const std::string& key) const;
  void set(const std::string& key, const std::string& value);

 private:
  struct Entry {
    std::string value;
    int line = 0;
  };
  std::map<std::string, Entry> values_;
};

}  // namespace nvp::cli
