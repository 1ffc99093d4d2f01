#include "pamlab/config.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "pamlab/error.hpp"

namespace pamlab {

namespace {

std::string trim(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

std::optional<double> parse_number(std::string_view s) {
  if (s.empty()) return std::nullopt;
  double v = 0.0;
  const char* first = s.data();
  const char* last = s.data() + s.size();
  if (*first == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc() || ptr != last) return std::nullopt;
  return v;
}

std::vector<std::string> split_list(std::string_view s) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (start <= s.size()) {
    const auto comma = s.find(',', start);
    const auto end = comma == std::string_view::npos ? s.size() : comma;
    out.push_back(trim(s.substr(start, end - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

}  // namespace

std::string format_double(double value) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  if (ec != std::errc()) return std::to_string(value);
  return std::string(buf, ptr);
}

std::string normalize_value(std::string_view value) {
  const std::string v = trim(value);
  if (v.find(',') != std::string::npos) {
    std::string out;
    for (const auto& item : split_list(v)) {
      if (!out.empty()) out += ",";
      out += normalize_value(item);
    }
    return out;
  }
  if (auto number = parse_number(v)) return format_double(*number);
  return v;
}

ConfigMap ConfigMap::parse(std::string_view text) {
  ConfigMap cfg;
  std::string section;
  std::istringstream in{std::string(text)};
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    const std::string body = trim(line);
    if (body.empty()) continue;
    if (body.front() == '[') {
      require(body.back() == ']', ErrorKind::ConfigInvalid,
              "line " + std::to_string(lineno) + ": unterminated section header");
      section = trim(std::string_view(body).substr(1, body.size() - 2));
      continue;
    }
    const auto eq = body.find('=');
    require(eq != std::string::npos, ErrorKind::ConfigInvalid,
            "line " + std::to_string(lineno) + ": expected key = value");
    std::string key = trim(std::string_view(body).substr(0, eq));
    require(!key.empty(), ErrorKind::ConfigInvalid, "line " + std::to_string(lineno) + ": empty key");
    if (!section.empty()) key = section + "." + key;
    cfg.set(key, trim(std::string_view(body).substr(eq + 1)));
  }
  return cfg;
}

ConfigMap ConfigMap::load(const std::string& path) {
  std::ifstream f(path);
  require(f.good(), ErrorKind::ConfigInvalid, "cannot read config file " + path);
  std::stringstream ss;
  ss << f.rdbuf();
  return parse(ss.str());
}

bool ConfigMap::has(const std::string& key) const { return entries_.count(key) > 0; }

void ConfigMap::set(const std::string& key, const std::string& value) { entries_[key] = trim(value); }

void ConfigMap::erase(const std::string& key) { entries_.erase(key); }

std::string ConfigMap::get_string(const std::string& key) const {
  const auto it = entries_.find(key);
  require(it != entries_.end(), ErrorKind::ConfigInvalid, "missing key '" + key + "'");
  return it->second;
}

std::string ConfigMap::get_string(const std::string& key, const std::string& fallback) const {
  const auto it = entries_.find(key);
  return it == entries_.end() ? fallback : it->second;
}

double ConfigMap::get_double(const std::string& key) const {
  const auto v = parse_number(get_string(key));
  require(v.has_value(), ErrorKind::ConfigInvalid, "key '" + key + "' is not a number");
  return *v;
}

double ConfigMap::get_double(const std::string& key, double fallback) const {
  return has(key) ? get_double(key) : fallback;
}

std::int64_t ConfigMap::get_int(const std::string& key) const {
  const double v = get_double(key);
  require(v == static_cast<double>(static_cast<std::int64_t>(v)), ErrorKind::ConfigInvalid,
          "key '" + key + "' is not an integer");
  return static_cast<std::int64_t>(v);
}

std::int64_t ConfigMap::get_int(const std::string& key, std::int64_t fallback) const {
  return has(key) ? get_int(key) : fallback;
}

std::uint64_t ConfigMap::get_uint(const std::string& key) const {
  const std::string s = get_string(key);
  std::uint64_t v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  require(ec == std::errc() && ptr == s.data() + s.size(), ErrorKind::ConfigInvalid,
          "key '" + key + "' is not an unsigned integer");
  return v;
}

bool ConfigMap::get_bool(const std::string& key, bool fallback) const {
  if (!has(key)) return fallback;
  std::string v = get_string(key);
  std::transform(v.begin(), v.end(), v.begin(), [](unsigned char c) { return std::tolower(c); });
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  fail(ErrorKind::ConfigInvalid, "key '" + key + "' is not a boolean");
}

std::vector<double> ConfigMap::get_doubles(const std::string& key) const {
  std::vector<double> out;
  for (const auto& item : split_list(get_string(key))) {
    const auto v = parse_number(item);
    require(v.has_value(), ErrorKind::ConfigInvalid, "key '" + key + "' has a non-numeric entry");
    out.push_back(*v);
  }
  return out;
}

std::vector<double> ConfigMap::get_doubles(const std::string& key, std::vector<double> fallback) const {
  return has(key) ? get_doubles(key) : fallback;
}

ConfigMap ConfigMap::subtree(const std::string& prefix) const {
  ConfigMap out;
  const std::string p = prefix + ".";
  for (const auto& [k, v] : entries_) {
    if (k.compare(0, p.size(), p) == 0) out.entries_[k.substr(p.size())] = v;
  }
  return out;
}

void ConfigMap::merge(const ConfigMap& other, const std::string& prefix) {
  for (const auto& [k, v] : other.entries_) entries_[prefix.empty() ? k : prefix + "." + k] = v;
}

std::string ConfigMap::canonical_text() const {
  std::string out;
  for (const auto& [k, v] : entries_) {
    out += k;
    out += '=';
    out += normalize_value(v);
    out += '\n';
  }
  return out;
}

std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t seed) {
  std::uint64_t h = seed;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

std::string hex64(std::uint64_t value) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(value));
  return buf;
}

std::string ConfigMap::hash() const { return hex64(fnv1a64(canonical_text())); }

}  // namespace pamlab
