#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace jace {

// Sectioned key=value configuration text:
//
//   # comment
//   top_level_key = value
//   [section]
//   key = value
//   key = another      # repeated keys accumulate, order preserved
//
// Consumers declare which keys they understand; anything else is rejected so
// a typo never silently falls back to a default.
class Config {
 public:
  Config() = default;

  static Config parse_file(const std::string& path);
  static Config parse_string(const std::string& text, const std::string& origin = "<string>");

  bool has(const std::string& section, const std::string& key) const;
  // Last value wins for scalar lookups; repeated keys are for get_all.
  std::string get(const std::string& section, const std::string& key,
                  const std::string& fallback) const;
  std::vector<std::string> get_all(const std::string& section, const std::string& key) const;

  double get_double(const std::string& section, const std::string& key, double fallback) const;
  std::int64_t get_int(const std::string& section, const std::string& key,
                       std::int64_t fallback) const;
  bool get_bool(const std::string& section, const std::string& key, bool fallback) const;

  void set(const std::string& section, const std::string& key, const std::string& value);

  // Throws UserError naming the first key outside the allowed set. Each
  // allowed entry is "section.key"; "" is the section for top-level keys.
  void require_known(const std::vector<std::string>& allowed) const;

  const std::vector<std::string>& sections() const { return section_order_; }
  std::vector<std::string> keys_in(const std::string& section) const;

 private:
  struct Entry {
    std::string section;
    std::string key;
    std::string value;
  };
  std::vector<Entry> entries_;
  std::vector<std::string> section_order_;
};

// CSV helper shared by config values and CLI flags ("a,b,c" -> {a, b, c}).
std::vector<std::string> split_csv(const std::string& s);

}  // namespace jace
