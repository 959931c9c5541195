#include "thinshell/config.hpp"

#include <fstream>
#include <sstream>

namespace thinshell {

namespace {

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

}  // namespace

Config Config::parse_string(const std::string& text) {
  Config cfg;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("config line " + std::to_string(lineno) + " has no '=': " + line);
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty()) throw ConfigError("config line " + std::to_string(lineno) + ": empty key");
    cfg.kv_[key] = value;
  }
  return cfg;
}

Config Config::parse_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_string(buf.str());
}

std::string Config::get(const std::string& key) const {
  auto it = kv_.find(key);
  if (it == kv_.end()) throw ConfigError("missing config key: " + key);
  return it->second;
}

std::string Config::get_or(const std::string& key, const std::string& def) const {
  auto it = kv_.find(key);
  return it == kv_.end() ? def : it->second;
}

double Config::get_double(const std::string& key) const {
  const std::string v = get(key);
  try {
    size_t pos = 0;
    const double x = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return x;
  } catch (const std::exception&) {
    throw ConfigError("config key " + key + " is not a number: " + v);
  }
}

double Config::get_double_or(const std::string& key, double def) const {
  return has(key) ? get_double(key) : def;
}

long Config::get_int(const std::string& key) const {
  const std::string v = get(key);
  try {
    size_t pos = 0;
    const long x = std::stol(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return x;
  } catch (const std::exception&) {
    throw ConfigError("config key " + key + " is not an integer: " + v);
  }
}

long Config::get_int_or(const std::string& key, long def) const {
  return has(key) ? get_int(key) : def;
}

bool Config::get_bool_or(const std::string& key, bool def) const {
  if (!has(key)) return def;
  const std::string v = get(key);
  if (v == "true" || v == "1" || v == "on" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "off" || v == "no") return false;
  throw ConfigError("config key " + key + " is not a boolean: " + v);
}

std::vector<double> Config::get_double_list_or(const std::string& key,
                                               const std::vector<double>& def) const {
  if (!has(key)) return def;
  std::vector<double> out;
  std::istringstream in(get(key));
  std::string tok;
  while (std::getline(in, tok, ',')) {
    try {
      out.push_back(std::stod(tok));
    } catch (const std::exception&) {
      throw ConfigError("config key " + key + " has a non-numeric entry: " + tok);
    }
  }
  if (out.empty()) throw ConfigError("config key " + key + " is an empty list");
  return out;
}

}  // namespace thinshell
