#include "ros/config.hpp"

#include <cctype>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace ros {

namespace {

std::string trim(const std::string& s) {
  std::size_t a = 0, b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return s.substr(a, b - a);
}

}  // namespace

std::string format_number(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  // Trim to the shortest representation that round-trips.
  for (int prec = 1; prec < 17; ++prec) {
    char shorter[64];
    std::snprintf(shorter, sizeof shorter, "%.*g", prec, x);
    double back = 0.0;
    std::sscanf(shorter, "%lf", &back);
    if (back == x) return shorter;
  }
  return buf;
}

Config Config::parse(const std::string& text, std::vector<ConfigError>& errors) {
  Config cfg;
  std::string section;
  int lineno = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t nl = text.find('\n', pos);
    std::string raw = text.substr(pos, nl == std::string::npos ? nl : nl - pos);
    if (nl == std::string::npos && raw.empty() && pos == text.size()) break;
    ++lineno;
    Line line;
    line.raw = raw;
    std::string t = trim(raw);
    if (t.empty()) {
      line.kind = Line::Kind::Blank;
    } else if (t[0] == '#' || t[0] == ';') {
      line.kind = Line::Kind::Comment;
    } else if (t.front() == '[') {
      if (t.back() != ']' || t.size() < 3) {
        line.kind = Line::Kind::Invalid;
        errors.push_back({lineno, "", "malformed section header: " + t});
      } else {
        section = trim(t.substr(1, t.size() - 2));
        line.kind = Line::Kind::Section;
        line.section = section;
      }
    } else {
      std::size_t eq = t.find('=');
      if (eq == std::string::npos) {
        line.kind = Line::Kind::Invalid;
        errors.push_back({lineno, section, "expected key = value: " + t});
      } else {
        line.kind = Line::Kind::KeyValue;
        line.section = section;
        line.key = trim(t.substr(0, eq));
        line.value = trim(t.substr(eq + 1));
        if (line.key.empty()) {
          line.kind = Line::Kind::Invalid;
          errors.push_back({lineno, section, "empty key"});
        } else {
          std::string id = section + "." + line.key;
          if (cfg.index_.count(id))
            errors.push_back({lineno, id, "duplicate key"});
          cfg.index_[id] = cfg.lines_.size();
        }
      }
    }
    cfg.lines_.push_back(std::move(line));
    if (nl == std::string::npos) break;
    pos = nl + 1;
  }
  return cfg;
}

Config Config::load(const std::string& path, std::vector<ConfigError>& errors) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    errors.push_back({0, "", "cannot open config file: " + path});
    return Config{};
  }
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse(ss.str(), errors);
}

std::string Config::serialize() const {
  std::string out;
  for (const auto& l : lines_) {
    out += l.raw;
    out += '\n';
  }
  return out;
}

bool Config::has(const std::string& section, const std::string& key) const {
  return index_.count(section + "." + key) != 0;
}

std::string Config::get(const std::string& section, const std::string& key,
                        const std::string& fallback) const {
  auto it = index_.find(section + "." + key);
  return it == index_.end() ? fallback : lines_[it->second].value;
}

double Config::get_double(const std::string& section, const std::string& key,
                          double fallback) const {
  std::string v = get(section, key);
  if (v.empty()) return fallback;
  return std::strtod(v.c_str(), nullptr);
}

std::int64_t Config::get_int(const std::string& section, const std::string& key,
                             std::int64_t fallback) const {
  std::string v = get(section, key);
  if (v.empty()) return fallback;
  return std::strtoll(v.c_str(), nullptr, 10);
}

std::uint64_t Config::get_u64(const std::string& section, const std::string& key,
                              std::uint64_t fallback) const {
  std::string v = get(section, key);
  if (v.empty()) return fallback;
  return std::strtoull(v.c_str(), nullptr, 10);
}

bool Config::get_bool(const std::string& section, const std::string& key,
                      bool fallback) const {
  std::string v = get(section, key);
  if (v.empty()) return fallback;
  return v == "1" || v == "true" || v == "yes" || v == "on";
}

std::vector<double> Config::get_list(const std::string& section,
                                     const std::string& key,
                                     std::vector<double> fallback) const {
  std::string v = get(section, key);
  if (v.empty()) return fallback;
  std::vector<double> out;
  std::size_t pos = 0;
  while (pos < v.size()) {
    std::size_t comma = v.find(',', pos);
    std::string tok = trim(v.substr(pos, comma == std::string::npos
                                             ? std::string::npos
                                             : comma - pos));
    if (!tok.empty()) out.push_back(std::strtod(tok.c_str(), nullptr));
    if (comma == std::string::npos) break;
    pos = comma + 1;
  }
  return out;
}

void Config::set(const std::string& section, const std::string& key,
                 const std::string& value) {
  std::string id = section + "." + key;
  auto it = index_.find(id);
  if (it != index_.end()) {
    Line& l = lines_[it->second];
    l.value = value;
    l.raw = key + " = " + value;
    return;
  }
  // Append inside the section if it exists, otherwise create it at the end.
  std::size_t insert_at = lines_.size();
  bool found_section = false;
  for (std::size_t i = 0; i < lines_.size(); ++i) {
    if (lines_[i].kind == Line::Kind::Section && lines_[i].section == section) {
      found_section = true;
      insert_at = i + 1;
      // Skip to the end of the section body.
      while (insert_at < lines_.size() &&
             lines_[insert_at].kind != Line::Kind::Section)
        ++insert_at;
      // Back over trailing blanks so the new key joins the block.
      while (insert_at > i + 1 && lines_[insert_at - 1].kind == Line::Kind::Blank)
        --insert_at;
      break;
    }
  }
  std::vector<Line> add;
  if (!found_section) {
    Line hdr;
    hdr.kind = Line::Kind::Section;
    hdr.section = section;
    hdr.raw = "[" + section + "]";
    add.push_back(std::move(hdr));
  }
  Line kv;
  kv.kind = Line::Kind::KeyValue;
  kv.section = section;
  kv.key = key;
  kv.value = value;
  kv.raw = key + " = " + value;
  add.push_back(std::move(kv));
  lines_.insert(lines_.begin() + static_cast<std::ptrdiff_t>(insert_at),
                add.begin(), add.end());
  index_.clear();
  for (std::size_t i = 0; i < lines_.size(); ++i)
    if (lines_[i].kind == Line::Kind::KeyValue)
      index_[lines_[i].section + "." + lines_[i].key] = i;
}

int Config::line_of(const std::string& section, const std::string& key) const {
  auto it = index_.find(section + "." + key);
  return it == index_.end() ? 0 : static_cast<int>(it->second) + 1;
}

}  // namespace ros
