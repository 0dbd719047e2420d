#pragma once

// Flat run configuration: `key = value` lines under `[section]` headers.
// Keys are addressed as "section.key". Later sources override earlier ones:
// built-in defaults, then the file, then NKG_* environment variables, then
// command-line flags.

#include <cctype>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "nkg/errors.hpp"
#include "nkg/potential.hpp"

namespace nkg {

class Config {
 public:
  using Map = std::map<std::string, std::string>;

  static Config defaults() {
    Config c;
    c.values_ = {
        {"potential.name", "power(4)"},
        {"potential.saturate", ""},
        {"geometry.N", "1"},
        {"geometry.r_max", "40"},
        {"geometry.nodes", "4001"},
        {"geometry.boundary", "auto"},
        {"solver.tol", "1e-9"},
        {"solver.max_iter", "200000"},
        {"solver.residual_tol", "1e-4"},
        {"solver.multiplier_tol", "1e-3"},
        {"solver.charge_tol", "1e-9"},
        {"run.omega", ""},
        {"run.charge", ""},
        {"sweep.omega_min", "0.5"},
        {"sweep.omega_max", "0.95"},
        {"sweep.omega_step", "0.01"},
        {"evolve.T", "20"},
        {"evolve.dt_factor", "0.5"},
        {"evolve.velocity", "0"},
        {"evolve.perturb", ""},
        {"evolve.sample_dt", "0.5"},
        {"evolve.snapshot_stride", "0"},
        {"stability.eps", "0.01"},
        {"stability.T", "50"},
        {"stability.K", "10"},
        {"stability.kind", "bump"},
        {"stability.d_step", "0.01"},
        {"stability.d_tol", "1e-4"},
        {"output.out", "out"},
        {"output.threads", "1"},
    };
    return c;
  }

  /// Parses `key = value` text. Unknown keys are rejected.
  void merge_text(const std::string& text, const std::string& origin) {
    std::istringstream in(text);
    std::string line, section;
    int lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      const auto hash = line.find_first_of("#;");
      if (hash != std::string::npos) line.erase(hash);
      line = detail::trim(line);
      if (line.empty()) continue;
      const std::string where = origin + ":" + std::to_string(lineno);
      if (line.front() == '[') {
        if (line.back() != ']') throw ArgumentError(where + ": malformed section header");
        section = detail::trim(line.substr(1, line.size() - 2));
        continue;
      }
      const auto eq = line.find('=');
      if (eq == std::string::npos) throw ArgumentError(where + ": expected key = value");
      const std::string key = detail::trim(line.substr(0, eq));
      const std::string full = section.empty() ? key : section + "." + key;
      set(full, detail::trim(line.substr(eq + 1)), where);
    }
  }

  void merge_file(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw ArgumentError("cannot read config file '" + path + "'");
    std::stringstream ss;
    ss << f.rdbuf();
    merge_text(ss.str(), path);
  }

  /// NKG_SECTION_KEY overrides section.key (case-insensitive).
  void merge_environment(char** envp) {
    if (!envp) return;
    for (char** e = envp; *e; ++e) {
      const std::string kv(*e);
      if (kv.rfind("NKG_", 0) != 0) continue;
      const auto eq = kv.find('=');
      if (eq == std::string::npos) continue;
      const std::string name = kv.substr(4, eq - 4);
      const std::string key = env_to_key(name);
      if (key.empty()) throw ArgumentError("environment variable NKG_" + name + " matches no config key");
      values_[key] = kv.substr(eq + 1);
    }
  }

  void set(const std::string& key, const std::string& value, const std::string& origin = "override") {
    if (!values_.count(key)) throw ArgumentError(origin + ": unknown config key '" + key + "'");
    values_[key] = value;
  }

  bool has(const std::string& key) const {
    const auto it = values_.find(key);
    return it != values_.end() && !it->second.empty();
  }

  const std::string& str(const std::string& key) const {
    const auto it = values_.find(key);
    if (it == values_.end()) throw ArgumentError("unknown config key '" + key + "'");
    return it->second;
  }

  double num(const std::string& key) const {
    if (!has(key)) throw ArgumentError("config key '" + key + "' is not set");
    return detail::parse_number(str(key), key);
  }

  long integer(const std::string& key) const {
    const double v = num(key);
    if (v != std::floor(v)) throw ArgumentError("config key '" + key + "' must be an integer");
    return static_cast<long>(v);
  }

  const Map& values() const { return values_; }

  /// Config text that reproduces this configuration.
  std::string dump() const {
    std::string out, section;
    for (const auto& [k, v] : values_) {
      const auto dot = k.find('.');
      const std::string s = k.substr(0, dot);
      if (s != section) {
        out += "[" + s + "]\n";
        section = s;
      }
      out += k.substr(dot + 1) + " = " + v + "\n";
    }
    return out;
  }

 private:
  std::string env_to_key(const std::string& name) const {
    auto norm = [](std::string s) {
      for (auto& c : s) c = c == '.' || c == '-' ? '_' : static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
      return s;
    };
    for (const auto& [k, v] : values_)
      if (norm(k) == norm(name)) return k;
    return {};
  }

  Map values_;
};

}  // namespace nkg
