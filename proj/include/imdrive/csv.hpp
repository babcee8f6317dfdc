#pragma once

// CSV time-series output and re-reading. Values are written with 9
// significant digits and UNIX newlines; the column set covers every logged
// drive quantity (commanded and measured phase currents, synchronous
// currents, resistance estimate, stator and rotor fluxes, speed, torque).

#include <array>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "imdrive/errors.hpp"
#include "imdrive/simulation.hpp"

namespace imdrive {

inline constexpr const char* kCsvHeader =
    "t,ia_ref,ib_ref,ic_ref,ia,ib,ic,ids,iqs,Rr_hat,Fqs,Fds,"
    "lambda_dr_hat,lambda_qr_hat,omega_r_rpm,Te";

namespace detail {

inline std::array<double, 16> sample_values(const Sample& s) {
  return {s.t,   s.ia_ref, s.ib_ref, s.ic_ref,        s.ia,
          s.ib,  s.ic,     s.ids,    s.iqs,           s.rr_hat,
          s.fqs, s.fds,    s.lambda_dr_hat, s.lambda_qr_hat,
          s.omega_r_rpm,   s.te};
}

}  // namespace detail

inline std::string csv_line(const Sample& s) {
  const auto v = detail::sample_values(s);
  std::string line;
  char buf[32];
  for (std::size_t i = 0; i < v.size(); ++i) {
    std::snprintf(buf, sizeof(buf), "%s%.9g", i ? "," : "", v[i]);
    line += buf;
  }
  return line;
}

inline void write_csv(const std::string& path,
                      const std::vector<Sample>& series) {
  std::ofstream out(path, std::ios::binary);  // binary: keep \n on all hosts
  if (!out) throw ConfigError("cannot open output file '" + path + "'");
  out << kCsvHeader << "\n";
  for (const auto& s : series) out << csv_line(s) << "\n";
  if (!out) throw ConfigError("write failed for '" + path + "'");
}

inline std::vector<Sample> read_csv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open CSV '" + path + "'");
  std::string line;
  if (!std::getline(in, line))
    throw ConfigError("empty CSV '" + path + "'");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != kCsvHeader)
    throw ConfigError("unexpected CSV header in '" + path + "'");
  std::vector<Sample> series;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::array<double, 16> v{};
    std::stringstream ss(line);
    std::string cell;
    std::size_t i = 0;
    while (std::getline(ss, cell, ',')) {
      if (i >= v.size())
        throw ConfigError("too many columns in '" + path + "'");
      v[i++] = std::stod(cell);
    }
    if (i != v.size())
      throw ConfigError("short row in '" + path + "'");
    series.push_back({v[0], v[1], v[2], v[3], v[4], v[5], v[6], v[7], v[8],
                      v[9], v[10], v[11], v[12], v[13], v[14], v[15]});
  }
  return series;
}

}  // namespace imdrive
