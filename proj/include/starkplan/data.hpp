#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "starkplan/errors.hpp"

namespace starkplan {

struct SpectrumPoint {
  double frequency_ghz;
  double intensity;
  double sigma;  // 0 means "not provided"; the fit engine substitutes Poisson weights
};

/// Ordered (frequency, intensity, sigma) samples from a PLE or reflection scan.
struct Spectrum {
  std::vector<SpectrumPoint> points;
  std::string device_id;
  double bias_v = 0.0;
  double integration_s = 0.0;

  void validate() const {
    for (std::size_t i = 1; i < points.size(); ++i) {
      if (!(points[i].frequency_ghz > points[i - 1].frequency_ghz))
        throw domain_error("spectrum frequencies must be strictly increasing");
    }
    for (const auto& p : points) {
      if (p.sigma < 0.0) throw domain_error("spectrum sigma must be >= 0");
    }
  }
};

/// Uniformly binned photon-count transient.
struct DecayTransient {
  std::vector<double> time_ns;
  std::vector<double> counts;
  double bin_width_ns = 0.0;

  void validate() const {
    if (time_ns.size() != counts.size()) throw domain_error("transient: size mismatch");
    for (std::size_t i = 1; i < time_ns.size(); ++i) {
      if (!(time_ns[i] > time_ns[i - 1]))
        throw domain_error("transient times must be strictly increasing");
      if (bin_width_ns > 0.0 &&
          std::abs((time_ns[i] - time_ns[i - 1]) - bin_width_ns) > 1e-6 * bin_width_ns)
        throw domain_error("transient bins must be uniform");
    }
  }
};

// ---------------------------------------------------------------------------
// CSV interchange. Header row required, UTF-8, LF line endings, no quoting.

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  for (char c : line) {
    if (c == ',') {
      out.push_back(field);
      field.clear();
    } else if (c != '\r') {
      field.push_back(c);
    }
  }
  out.push_back(field);
  return out;
}

inline double parse_number(const std::string& s, const std::string& file, int line, int col) {
  try {
    std::size_t pos = 0;
    const double v = std::stod(s, &pos);
    while (pos < s.size() && std::isspace(static_cast<unsigned char>(s[pos]))) ++pos;
    if (pos != s.size()) throw std::invalid_argument("trailing junk");
    return v;
  } catch (const std::exception&) {
    throw io_error(file + ":" + std::to_string(line) + ":" + std::to_string(col) +
                   ": not a number: '" + s + "'");
  }
}

}  // namespace detail

/// Read a spectrum CSV: header `frequency_ghz,intensity[,sigma]`.
inline Spectrum read_spectrum_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw io_error(path + ": cannot open");
  std::string line;
  if (!std::getline(in, line)) throw io_error(path + ":1: empty file, header required");
  auto header = detail::split_csv_line(line);
  bool has_sigma = false;
  if (header.size() == 3 && header[0] == "frequency_ghz" && header[1] == "intensity" &&
      header[2] == "sigma") {
    has_sigma = true;
  } else if (!(header.size() == 2 && header[0] == "frequency_ghz" && header[1] == "intensity")) {
    throw io_error(path + ":1:1: expected header 'frequency_ghz,intensity[,sigma]'");
  }
  Spectrum s;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    auto fields = detail::split_csv_line(line);
    if (fields.size() != header.size())
      throw io_error(path + ":" + std::to_string(lineno) + ":1: expected " +
                     std::to_string(header.size()) + " fields, got " +
                     std::to_string(fields.size()));
    SpectrumPoint p{};
    p.frequency_ghz = detail::parse_number(fields[0], path, lineno, 1);
    p.intensity = detail::parse_number(fields[1], path, lineno, 2);
    p.sigma = (has_sigma && !fields[2].empty()) ? detail::parse_number(fields[2], path, lineno, 3)
                                                : 0.0;
    s.points.push_back(p);
  }
  s.validate();
  return s;
}

/// Read a transient CSV: header `time_ns,counts`.
inline DecayTransient read_transient_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw io_error(path + ": cannot open");
  std::string line;
  if (!std::getline(in, line)) throw io_error(path + ":1: empty file, header required");
  auto header = detail::split_csv_line(line);
  if (!(header.size() == 2 && header[0] == "time_ns" && header[1] == "counts"))
    throw io_error(path + ":1:1: expected header 'time_ns,counts'");
  DecayTransient t;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    auto fields = detail::split_csv_line(line);
    if (fields.size() != 2)
      throw io_error(path + ":" + std::to_string(lineno) + ":1: expected 2 fields, got " +
                     std::to_string(fields.size()));
    t.time_ns.push_back(detail::parse_number(fields[0], path, lineno, 1));
    t.counts.push_back(detail::parse_number(fields[1], path, lineno, 2));
  }
  if (t.time_ns.size() >= 2) t.bin_width_ns = t.time_ns[1] - t.time_ns[0];
  t.validate();
  return t;
}

/// Atomic text write: temp file in the same directory, then rename.
inline void write_file_atomic(const std::string& path, const std::string& contents) {
  namespace fs = std::filesystem;
  const fs::path target(path);
  const fs::path tmp = target.parent_path() / (target.filename().string() + ".tmp");
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw io_error(tmp.string() + ": cannot open for writing");
    out << contents;
    if (!out.flush()) throw io_error(tmp.string() + ": write failed");
  }
  fs::rename(tmp, target);
}

inline std::string format_spectrum_csv(const Spectrum& s) {
  std::ostringstream out;
  out.precision(12);
  out << "frequency_ghz,intensity,sigma\n";
  for (const auto& p : s.points)
    out << p.frequency_ghz << "," << p.intensity << "," << p.sigma << "\n";
  return out.str();
}

inline std::string format_transient_csv(const DecayTransient& t) {
  std::ostringstream out;
  out.precision(12);
  out << "time_ns,counts\n";
  for (std::size_t i = 0; i < t.time_ns.size(); ++i)
    out << t.time_ns[i] << "," << t.counts[i] << "\n";
  return out.str();
}

}  // namespace starkplan
