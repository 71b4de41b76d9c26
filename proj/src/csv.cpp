#include "ros/csv.hpp"

#include <cstdio>
#include <fstream>
#include <stdexcept>

#include "ros/config.hpp"

namespace ros {

void write_file_atomic(const std::string& path, const std::string& content) {
  std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + tmp);
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
  }
  if (std::rename(tmp.c_str(), path.c_str()) != 0)
    throw std::runtime_error("cannot rename " + tmp + " to " + path);
}

Csv::Csv(std::vector<std::string> header) : header_(std::move(header)) {}

void Csv::row(const std::vector<std::string>& cells) {
  if (cells.size() != header_.size())
    throw std::invalid_argument("csv row width does not match header");
  rows_.push_back(cells);
}

std::string Csv::text() const {
  std::string out;
  auto emit = [&out](const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (i) out += ',';
      out += cells[i];
    }
    out += '\n';
  };
  emit(header_);
  for (const auto& r : rows_) emit(r);
  return out;
}

void Csv::save(const std::string& path) const { write_file_atomic(path, text()); }

std::string Csv::num(double x) { return format_number(x); }

std::string Csv::integer(long long x) { return std::to_string(x); }

}  // namespace ros
