#include "daps/config.hpp"

#include <cctype>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include <fmt/format.h>

namespace daps {

namespace {

std::string trim(const std::string& s) {
  std::size_t b = 0;
  std::size_t e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

double parse_double(const std::string& key, const std::string& text) {
  const std::string t = trim(text);
  if (t == "inf") return std::numeric_limits<double>::infinity();
  if (t == "-inf") return -std::numeric_limits<double>::infinity();
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(t, &used);
  } catch (const std::exception&) {
    throw ConfigError(key, "expected a number, got '" + t + "'");
  }
  if (used != t.size()) throw ConfigError(key, "expected a number, got '" + t + "'");
  return v;
}

}  // namespace

KeyValueConfig KeyValueConfig::parse(const std::string& text) {
  KeyValueConfig cfg;
  std::istringstream in(text);
  std::string line;
  std::string section;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw ConfigError("line " + std::to_string(lineno), "unterminated section header");
      section = trim(line.substr(1, line.size() - 2));
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError("line " + std::to_string(lineno), "expected key = value");
    const std::string key = trim(line.substr(0, eq));
    if (key.empty()) throw ConfigError("line " + std::to_string(lineno), "empty key");
    if (section.empty()) throw ConfigError(key, "key outside of any [section]");
    cfg.entries_[section + "." + key] = trim(line.substr(eq + 1));
  }
  return cfg;
}

KeyValueConfig KeyValueConfig::load(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot open config file " + path);
  std::stringstream ss;
  ss << f.rdbuf();
  return parse(ss.str());
}

bool KeyValueConfig::has(const std::string& path) const { return entries_.count(path) != 0; }

void KeyValueConfig::set(const std::string& path, const std::string& value) {
  if (path.find('.') == std::string::npos) throw ConfigError(path, "expected section.key");
  entries_[path] = trim(value);
  read_.erase(path);
}

void KeyValueConfig::erase(const std::string& path) { entries_.erase(path); }

const std::string& KeyValueConfig::raw(const std::string& path) const {
  const auto it = entries_.find(path);
  if (it == entries_.end()) throw ConfigError(path, "missing required key");
  read_.insert(path);
  return it->second;
}

std::string KeyValueConfig::get_string(const std::string& path) const { return raw(path); }

double KeyValueConfig::get_double(const std::string& path) const {
  return parse_double(path, raw(path));
}

std::int64_t KeyValueConfig::get_int(const std::string& path) const {
  const std::string& t = raw(path);
  std::size_t used = 0;
  std::int64_t v = 0;
  try {
    v = std::stoll(t, &used);
  } catch (const std::exception&) {
    throw ConfigError(path, "expected an integer, got '" + t + "'");
  }
  if (used != t.size()) throw ConfigError(path, "expected an integer, got '" + t + "'");
  return v;
}

std::uint64_t KeyValueConfig::get_u64(const std::string& path) const {
  const std::string& t = raw(path);
  std::size_t used = 0;
  std::uint64_t v = 0;
  try {
    if (!t.empty() && t.front() == '-') throw std::invalid_argument("negative");
    v = std::stoull(t, &used);
  } catch (const std::exception&) {
    throw ConfigError(path, "expected an unsigned integer, got '" + t + "'");
  }
  if (used != t.size()) throw ConfigError(path, "expected an unsigned integer, got '" + t + "'");
  return v;
}

bool KeyValueConfig::get_bool(const std::string& path) const {
  const std::string& t = raw(path);
  if (t == "true" || t == "1" || t == "yes") return true;
  if (t == "false" || t == "0" || t == "no") return false;
  throw ConfigError(path, "expected true/false, got '" + t + "'");
}

Vec KeyValueConfig::get_vec(const std::string& path) const {
  std::string t = raw(path);
  if (t.size() < 2 || t.front() != '[' || t.back() != ']')
    throw ConfigError(path, "expected a bracketed list like [1, 2]");
  t = trim(t.substr(1, t.size() - 2));
  std::vector<double> vals;
  if (!t.empty()) {
    std::istringstream in(t);
    std::string item;
    while (std::getline(in, item, ',')) vals.push_back(parse_double(path, item));
  }
  return Eigen::Map<Vec>(vals.data(), static_cast<Index>(vals.size()));
}

std::string KeyValueConfig::get_string(const std::string& path, const std::string& fallback) const {
  return has(path) ? get_string(path) : fallback;
}
double KeyValueConfig::get_double(const std::string& path, double fallback) const {
  return has(path) ? get_double(path) : fallback;
}
std::int64_t KeyValueConfig::get_int(const std::string& path, std::int64_t fallback) const {
  return has(path) ? get_int(path) : fallback;
}
std::uint64_t KeyValueConfig::get_u64(const std::string& path, std::uint64_t fallback) const {
  return has(path) ? get_u64(path) : fallback;
}
bool KeyValueConfig::get_bool(const std::string& path, bool fallback) const {
  return has(path) ? get_bool(path) : fallback;
}

std::vector<std::string> KeyValueConfig::unread() const {
  std::vector<std::string> out;
  for (const auto& [k, v] : entries_)
    if (!read_.count(k)) out.push_back(k);
  return out;
}

std::string KeyValueConfig::to_string() const {
  std::string out;
  std::string section;
  for (const auto& [path, value] : entries_) {
    const auto dot = path.find('.');
    const std::string sec = path.substr(0, dot);
    if (sec != section) {
      if (!out.empty()) out += "\n";
      out += "[" + sec + "]\n";
      section = sec;
    }
    out += path.substr(dot + 1) + " = " + value + "\n";
  }
  return out;
}

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return fmt::format("{:.17g}", v);
}

std::string format_vec(const Vec& v) {
  std::string out = "[";
  for (Index i = 0; i < v.size(); ++i) {
    if (i) out += ", ";
    out += format_double(v[i]);
  }
  return out + "]";
}

}  // namespace daps
