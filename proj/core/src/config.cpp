#include "jace/config.hpp"

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "jace/errors.hpp"

namespace jace {

namespace {

std::string trim(const std::string& s) {
  std::size_t b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  std::size_t e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

}  // namespace

Config Config::parse_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config file: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_string(ss.str(), path);
}

Config Config::parse_string(const std::string& text, const std::string& origin) {
  Config cfg;
  std::istringstream in(text);
  std::string line;
  std::string section;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    if (t.front() == '[') {
      if (t.back() != ']') {
        throw UserError(origin + ":" + std::to_string(lineno) + ": unterminated section header");
      }
      section = trim(t.substr(1, t.size() - 2));
      if (std::find(cfg.section_order_.begin(), cfg.section_order_.end(), section) ==
          cfg.section_order_.end()) {
        cfg.section_order_.push_back(section);
      }
      continue;
    }
    std::size_t eq = t.find('=');
    if (eq == std::string::npos) {
      throw UserError(origin + ":" + std::to_string(lineno) + ": expected key = value");
    }
    std::string key = trim(t.substr(0, eq));
    std::string value = trim(t.substr(eq + 1));
    if (key.empty()) {
      throw UserError(origin + ":" + std::to_string(lineno) + ": empty key");
    }
    cfg.entries_.push_back({section, key, value});
  }
  return cfg;
}

bool Config::has(const std::string& section, const std::string& key) const {
  for (const Entry& e : entries_) {
    if (e.section == section && e.key == key) return true;
  }
  return false;
}

std::string Config::get(const std::string& section, const std::string& key,
                        const std::string& fallback) const {
  std::string result = fallback;
  for (const Entry& e : entries_) {
    if (e.section == section && e.key == key) result = e.value;
  }
  return result;
}

std::vector<std::string> Config::get_all(const std::string& section,
                                         const std::string& key) const {
  std::vector<std::string> out;
  for (const Entry& e : entries_) {
    if (e.section == section && e.key == key) out.push_back(e.value);
  }
  return out;
}

double Config::get_double(const std::string& section, const std::string& key,
                          double fallback) const {
  if (!has(section, key)) return fallback;
  const std::string s = get(section, key, "");
  char* end = nullptr;
  double v = std::strtod(s.c_str(), &end);
  if (end == s.c_str() || *end != '\0') {
    throw UserError("config key " + section + "." + key + ": not a number: '" + s + "'");
  }
  return v;
}

std::int64_t Config::get_int(const std::string& section, const std::string& key,
                             std::int64_t fallback) const {
  if (!has(section, key)) return fallback;
  const std::string s = get(section, key, "");
  char* end = nullptr;
  long long v = std::strtoll(s.c_str(), &end, 10);
  if (end == s.c_str() || *end != '\0') {
    throw UserError("config key " + section + "." + key + ": not an integer: '" + s + "'");
  }
  return v;
}

bool Config::get_bool(const std::string& section, const std::string& key, bool fallback) const {
  if (!has(section, key)) return fallback;
  const std::string s = get(section, key, "");
  if (s == "true" || s == "1" || s == "yes" || s == "on") return true;
  if (s == "false" || s == "0" || s == "no" || s == "off") return false;
  throw UserError("config key " + section + "." + key + ": not a boolean: '" + s + "'");
}

void Config::set(const std::string& section, const std::string& key, const std::string& value) {
  entries_.push_back({section, key, value});
  if (!section.empty() &&
      std::find(section_order_.begin(), section_order_.end(), section) == section_order_.end()) {
    section_order_.push_back(section);
  }
}

void Config::require_known(const std::vector<std::string>& allowed) const {
  for (const Entry& e : entries_) {
    const std::string qualified = e.section + "." + e.key;
    bool section_wildcard =
        std::find(allowed.begin(), allowed.end(), e.section + ".*") != allowed.end();
    if (!section_wildcard &&
        std::find(allowed.begin(), allowed.end(), qualified) == allowed.end()) {
      throw UserError("unknown config key: " +
                      (e.section.empty() ? e.key : "[" + e.section + "] " + e.key));
    }
  }
}

std::vector<std::string> Config::keys_in(const std::string& section) const {
  std::vector<std::string> out;
  for (const Entry& e : entries_) {
    if (e.section == section) out.push_back(e.key);
  }
  return out;
}

std::vector<std::string> split_csv(const std::string& s) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == ',') {
      if (!cur.empty()) out.push_back(cur);
      cur.clear();
    } else if (c != ' ' && c != '\t') {
      cur += c;
    }
  }
  if (!cur.empty()) out.push_back(cur);
  return out;
}

}  // namespace jace
