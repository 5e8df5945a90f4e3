#ifndef PLAST_TOOLS_CONFIG_HPP
#define PLAST_TOOLS_CONFIG_HPP

#include <cstdint>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace plast::tools {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Flat key=value config with dotted sections (net.hidden, scr.u, ...).
// Lookups record which keys were consumed so unknown keys can be reported
// by name afterwards.
class ConfigMap {
 public:
  ConfigMap() = default;

  static ConfigMap from_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("config: cannot open " + path);
    ConfigMap cfg;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      const std::string t = trim(line);
      if (t.empty() || t[0] == '#') continue;
      const auto eq = t.find('=');
      if (eq == std::string::npos)
        throw ConfigError("config: " + path + ":" + std::to_string(lineno) +
                          ": expected key=value, got '" + t + "'");
      cfg.kv_[trim(t.substr(0, eq))] = trim(t.substr(eq + 1));
    }
    return cfg;
  }

  void apply_override(const std::string& keyval) {
    const auto eq = keyval.find('=');
    if (eq == std::string::npos)
      throw ConfigError("override must be key=value, got '" + keyval + "'");
    kv_[trim(keyval.substr(0, eq))] = trim(keyval.substr(eq + 1));
  }

  std::string get_str(const std::string& key, const std::string& def) const {
    used_.insert(key);
    const auto it = kv_.find(key);
    return it == kv_.end() ? def : it->second;
  }

  double get_double(const std::string& key, double def) const {
    const std::string s = get_str(key, "");
    if (s.empty()) return def;
    std::size_t pos = 0;
    double v = 0.0;
    try {
      v = std::stod(s, &pos);
    } catch (const std::exception&) {
      pos = 0;
    }
    if (pos != s.size())
      throw ConfigError("config key '" + key + "': not a number: '" + s + "'");
    return v;
  }

  std::uint64_t get_u64(const std::string& key, std::uint64_t def) const {
    const std::string s = get_str(key, "");
    if (s.empty()) return def;
    std::size_t pos = 0;
    std::uint64_t v = 0;
    try {
      v = std::stoull(s, &pos);
    } catch (const std::exception&) {
      pos = 0;
    }
    if (pos != s.size())
      throw ConfigError("config key '" + key + "': not an integer: '" + s + "'");
    return v;
  }

  std::size_t get_size(const std::string& key, std::size_t def) const {
    return static_cast<std::size_t>(get_u64(key, def));
  }

  std::vector<std::size_t> get_size_list(const std::string& key,
                                         std::vector<std::size_t> def) const {
    const std::string s = get_str(key, "");
    if (s.empty()) return def;
    std::vector<std::size_t> out;
    std::istringstream is(s);
    std::string tok;
    while (std::getline(is, tok, ',')) {
      try {
        out.push_back(std::stoull(trim(tok)));
      } catch (const std::exception&) {
        throw ConfigError("config key '" + key + "': bad list entry '" + tok +
                          "'");
      }
    }
    return out;
  }

  std::vector<double> get_double_list(const std::string& key,
                                      std::vector<double> def) const {
    const std::string s = get_str(key, "");
    if (s.empty()) return def;
    std::vector<double> out;
    std::istringstream is(s);
    std::string tok;
    while (std::getline(is, tok, ',')) {
      try {
        out.push_back(std::stod(trim(tok)));
      } catch (const std::exception&) {
        throw ConfigError("config key '" + key + "': bad list entry '" + tok +
                          "'");
      }
    }
    return out;
  }

  // Throws naming the first key nothing consumed; catches typos.
  void reject_unused() const {
    for (const auto& [k, v] : kv_)
      if (!used_.contains(k))
        throw ConfigError("config: unknown key '" + k + "'");
  }

  // FNV-1a over the sorted resolved pairs; stable across reruns.
  std::string hash() const {
    std::uint64_t h = 1469598103934665603ULL;
    const auto mix = [&h](const std::string& s) {
      for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ULL;
      }
      h ^= 0xff;
      h *= 1099511628211ULL;
    };
    for (const auto& [k, v] : kv_) {
      mix(k);
      mix(v);
    }
    char buf[20];
    std::snprintf(buf, sizeof(buf), "%016llx",
                  static_cast<unsigned long long>(h));
    return buf;
  }

 private:
  static std::string trim(const std::string& s) {
    std::size_t b = s.find_first_not_of(" \t\r");
    std::size_t e = s.find_last_not_of(" \t\r");
    return b == std::string::npos ? "" : s.substr(b, e - b + 1);
  }

  std::map<std::string, std::string> kv_;
  mutable std::set<std::string> used_;
};

}  // namespace plast::tools

#endif  // PLAST_TOOLS_CONFIG_HPP
