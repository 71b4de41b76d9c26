#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace ros {

// Line-oriented configuration: `[section]` headers, `key = value` entries,
// `#` comments, UTF-8, LF.  The parsed object keeps every source line, so
// serialize() reproduces the input byte for byte and diffs stay minimal.

struct ConfigError {
  int line = 0;          // 1-based source line, 0 when not line-specific
  std::string field;     // "section.key" when known
  std::string message;
};

class Config {
 public:
  static Config parse(const std::string& text, std::vector<ConfigError>& errors);
  static Config load(const std::string& path, std::vector<ConfigError>& errors);

  std::string serialize() const;

  bool has(const std::string& section, const std::string& key) const;
  std::string get(const std::string& section, const std::string& key,
                  const std::string& fallback = "") const;
  double get_double(const std::string& section, const std::string& key,
                    double fallback) const;
  std::int64_t get_int(const std::string& section, const std::string& key,
                       std::int64_t fallback) const;
  std::uint64_t get_u64(const std::string& section, const std::string& key,
                        std::uint64_t fallback) const;
  bool get_bool(const std::string& section, const std::string& key,
                bool fallback) const;
  std::vector<double> get_list(const std::string& section, const std::string& key,
                               std::vector<double> fallback = {}) const;

  void set(const std::string& section, const std::string& key,
           const std::string& value);

  // Line number of a key (for error reports), 0 if absent.
  int line_of(const std::string& section, const std::string& key) const;

 private:
  struct Line {
    std::string raw;
    enum class Kind { Blank, Comment, Section, KeyValue, Invalid } kind = Kind::Blank;
    std::string section, key, value;
  };
  std::vector<Line> lines_;
  std::map<std::string, std::size_t> index_;  // "section.key" -> line index
};

// Serialize a double with enough digits to round-trip, '.' decimal point.
std::string format_number(double x);

}  // namespace ros
