#pragma once

#include <string>
#include <vector>

namespace ros {

// Minimal CSV emitter: header row, comma separator, '.' decimal point, LF
// line endings, atomic save (temp file + rename).
class Csv {
 public:
  explicit Csv(std::vector<std::string> header);

  void row(const std::vector<std::string>& cells);
  std::string text() const;
  void save(const std::string& path) const;

  static std::string num(double x);
  static std::string integer(long long x);

 private:
  std::vector<std::string> header_;
  std::vector<std::vector<std::string>> rows_;
};

// Atomic text write used by every artifact emitter.
void write_file_atomic(const std::string& path, const std::string& content);

}  // namespace ros
