#pragma once

#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <string>
#include <system_error>
#include <vector>

#include "geolqr/errors.hpp"

namespace geolqr::cli {

/// Column header of every attitude trajectory file.
inline std::vector<std::string> attitude_columns() {
  return {"t",     "r11",   "r12",   "r13",  "r21",  "r22", "r23",   "r31",        "r32",  "r33",
          "wx",    "wy",    "wz",    "tau_x", "tau_y", "tau_z", "dist", "lyap", "value", "hamiltonian"};
}

/// Header for flat-space paths of dimension n: t, q1..qn, v1..vn, u1..un and
/// the same four diagnostics as the attitude files.
inline std::vector<std::string> flat_columns(long n) {
  std::vector<std::string> cols{"t"};
  for (const char* prefix : {"q", "v", "u"}) {
    for (long i = 1; i <= n; ++i) cols.push_back(prefix + std::to_string(i));
  }
  for (const char* c : {"dist", "lyap", "value", "hamiltonian"}) cols.emplace_back(c);
  return cols;
}

/// Shortest form that round-trips at 17 significant digits.
inline std::string format_number(double x) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), x, std::chars_format::general, 17);
  if (res.ec != std::errc{}) throw Error(ErrorKind::InvalidArgument, "number formatting failed");
  return std::string(buf, res.ptr);
}

/**
 * Streams rows to disk, flushing every `flush_every` rows. NaN cells are
 * written empty to mark a diagnostic that is undefined for the command.
 */
class CsvWriter {
 public:
  CsvWriter(const std::filesystem::path& path, std::vector<std::string> header, std::size_t flush_every = 1000)
      : out_(path, std::ios::binary | std::ios::trunc), width_(header.size()), flush_every_(flush_every) {
    if (!out_) throw Error(ErrorKind::InvalidArgument, "cannot open " + path.string() + " for writing", "output.csv");
    for (std::size_t i = 0; i < header.size(); ++i) {
      if (i) out_ << ',';
      out_ << header[i];
    }
    out_ << '\n';
  }

  void row(const std::vector<double>& values) {
    if (values.size() != width_) {
      throw Error(ErrorKind::InvalidArgument, "row has " + std::to_string(values.size()) + " cells, header has " +
                                                  std::to_string(width_));
    }
    line_.clear();
    for (std::size_t i = 0; i < values.size(); ++i) {
      if (i) line_ += ',';
      if (!std::isnan(values[i])) line_ += format_number(values[i]);
    }
    line_ += '\n';
    out_ << line_;
    if (++rows_ % flush_every_ == 0) out_.flush();
  }

  std::size_t rows() const { return rows_; }

  void close() {
    out_.flush();
    if (!out_) throw Error(ErrorKind::InvalidArgument, "writing the trajectory file failed", "output.csv");
    out_.close();
  }

 private:
  std::ofstream out_;
  std::size_t width_;
  std::size_t flush_every_;
  std::size_t rows_ = 0;
  std::string line_;
};

}  // namespace geolqr::cli
