#pragma once

// CSV tables with a commented header carrying the resolved configuration,
// and JSON sidecars.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "nkg/config.hpp"
#include "nkg/errors.hpp"

namespace nkg::io {

using json = nlohmann::ordered_json;

/// Shortest round-trip text for a double (17 significant digits).
inline std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline std::filesystem::path prepare_dir(const std::string& dir) {
  std::filesystem::path p(dir);
  std::error_code ec;
  std::filesystem::create_directories(p, ec);
  if (ec) throw ArgumentError("cannot create output directory '" + dir + "': " + ec.message());
  return p;
}

class CsvWriter {
 public:
  CsvWriter(const std::filesystem::path& path, const Config& cfg, const std::vector<std::string>& columns)
      : out_(path), ncol_(columns.size()) {
    if (!out_) throw ArgumentError("cannot write '" + path.string() + "'");
    std::istringstream conf(cfg.dump());
    for (std::string line; std::getline(conf, line);) out_ << "# " << line << '\n';
    for (std::size_t i = 0; i < columns.size(); ++i) out_ << (i ? "," : "") << columns[i];
    out_ << '\n';
  }

  void row(const std::vector<double>& values) {
    if (values.size() != ncol_) throw ArgumentError("csv row has the wrong number of columns");
    for (std::size_t i = 0; i < values.size(); ++i) out_ << (i ? "," : "") << fmt(values[i]);
    out_ << '\n';
  }

  void flush() { out_.flush(); }

 private:
  std::ofstream out_;
  std::size_t ncol_;
};

inline json config_json(const Config& cfg) {
  json j = json::object();
  for (const auto& [k, v] : cfg.values()) j[k] = v;
  return j;
}

/// Finite doubles as numbers, non-finite ones as strings.
inline json num(double v) {
  if (std::isfinite(v)) return v;
  return std::isnan(v) ? "nan" : (v > 0 ? "inf" : "-inf");
}

inline void write_json(const std::filesystem::path& path, const json& j) {
  std::ofstream f(path);
  if (!f) throw ArgumentError("cannot write '" + path.string() + "'");
  f << j.dump(2) << '\n';
}

}  // namespace nkg::io
