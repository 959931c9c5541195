#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "thinshell/errors.hpp"

namespace thinshell {

/// Plain-text `section.key = value` configuration; '#' starts a comment.
class Config {
 public:
  Config() = default;
  static Config parse_file(const std::string& path);
  static Config parse_string(const std::string& text);

  bool has(const std::string& key) const { return kv_.count(key) > 0; }
  std::string get(const std::string& key) const;
  std::string get_or(const std::string& key, const std::string& def) const;
  double get_double(const std::string& key) const;
  double get_double_or(const std::string& key, double def) const;
  long get_int(const std::string& key) const;
  long get_int_or(const std::string& key, long def) const;
  bool get_bool_or(const std::string& key, bool def) const;
  std::vector<double> get_double_list_or(const std::string& key,
                                         const std::vector<double>& def) const;

  void set(const std::string& key, const std::string& value) { kv_[key] = value; }
  const std::map<std::string, std::string>& items() const { return kv_; }

 private:
  std::map<std::string, std::string> kv_;
};

}  // namespace thinshell
