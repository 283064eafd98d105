#pragma once

#include "mdcr/types.hpp"

#include <bit>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace mdcr {

/// On-disk dense matrix formats.
///
/// Text: first line "<rows> <cols>" (ASCII decimal), then one line per row
/// holding cols space-separated decimal floats. UTF-8, LF line endings.
/// Values are written with 17 significant digits, so a text round trip
/// reproduces every double exactly.
///
/// Binary: magic "MDCRMAT1" (8 bytes), rows and cols as unsigned 64-bit
/// little-endian, then rows*cols IEEE-754 float64 little-endian, row-major.
enum class MatrixFormat { Text, Binary };

inline constexpr char kMatrixMagic[9] = "MDCRMAT1";

static_assert(std::endian::native == std::endian::little,
              "mdcr file formats assume a little-endian host");
static_assert(sizeof(double) == 8);

namespace detail {

// 8 GiB of payload; anything above is a corrupt header, not data.
inline constexpr std::uint64_t kMaxElements = 1'000'000'000;

[[noreturn]] inline void io_fail(const std::string& path,
                                 const std::string& what) {
  throw IoError(path + ": " + what);
}

inline std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

inline std::string strip_cr(std::string line) {
  if (!line.empty() && line.back() == '\r') line.pop_back();
  return line;
}

}  // namespace detail

/// Writes one matrix in binary layout to an already-open stream. Used both
/// for standalone .bin files and for matrices embedded in model files.
inline void write_matrix_binary(std::ostream& out, const Matrix& m) {
  out.write(kMatrixMagic, 8);
  const std::uint64_t rows = static_cast<std::uint64_t>(m.rows());
  const std::uint64_t cols = static_cast<std::uint64_t>(m.cols());
  out.write(reinterpret_cast<const char*>(&rows), 8);
  out.write(reinterpret_cast<const char*>(&cols), 8);
  std::vector<double> row(m.cols());
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) row[static_cast<std::size_t>(j)] = m(i, j);
    out.write(reinterpret_cast<const char*>(row.data()),
              static_cast<std::streamsize>(row.size() * sizeof(double)));
  }
}

/// Reads one binary-layout matrix from a stream. `context` names the source
/// in error messages. Does not require the stream to end afterwards.
inline Matrix read_matrix_binary(std::istream& in, const std::string& context) {
  char magic[8];
  in.read(magic, 8);
  if (!in || std::memcmp(magic, kMatrixMagic, 8) != 0)
    detail::io_fail(context, "bad magic (expected MDCRMAT1)");
  std::uint64_t rows = 0, cols = 0;
  in.read(reinterpret_cast<char*>(&rows), 8);
  in.read(reinterpret_cast<char*>(&cols), 8);
  if (!in) detail::io_fail(context, "truncated header");
  if (rows < 1 || cols < 1)
    detail::io_fail(context, "header declares empty matrix (" +
                                 std::to_string(rows) + "x" +
                                 std::to_string(cols) + ")");
  if (rows > detail::kMaxElements / cols)
    detail::io_fail(context, "header declares implausible dimensions");
  Matrix m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  std::vector<double> row(cols);
  for (std::uint64_t i = 0; i < rows; ++i) {
    in.read(reinterpret_cast<char*>(row.data()),
            static_cast<std::streamsize>(cols * sizeof(double)));
    if (!in)
      detail::io_fail(context,
                      "truncated payload at row " + std::to_string(i + 1));
    for (std::uint64_t j = 0; j < cols; ++j) {
      if (!std::isfinite(row[j]))
        detail::io_fail(context, "non-finite value at row " +
                                     std::to_string(i + 1) + ", column " +
                                     std::to_string(j + 1));
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = row[j];
    }
  }
  return m;
}

inline void save_matrix(const Matrix& m, const std::string& path,
                        MatrixFormat format) {
  detail::require(m.rows() >= 1 && m.cols() >= 1,
                  "cannot save empty matrix to " + path);
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j)
      detail::require(std::isfinite(m(i, j)),
                      path + ": refusing to save non-finite value at row " +
                          std::to_string(i + 1) + ", column " +
                          std::to_string(j + 1));
  std::ofstream out(path, std::ios::binary);
  if (!out) detail::io_fail(path, "cannot open for writing");
  if (format == MatrixFormat::Binary) {
    write_matrix_binary(out, m);
  } else {
    out << m.rows() << ' ' << m.cols() << '\n';
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
      for (Eigen::Index j = 0; j < m.cols(); ++j) {
        if (j) out << ' ';
        out << detail::format_double(m(i, j));
      }
      out << '\n';
    }
  }
  out.flush();
  if (!out) detail::io_fail(path, "write failed");
}

namespace detail {

inline Matrix load_matrix_text(std::istream& in, const std::string& path) {
  std::string line;
  if (!std::getline(in, line)) io_fail(path, "empty file");
  line = strip_cr(line);
  long long rows = 0, cols = 0;
  {
    char extra;
    std::istringstream header(line);
    if (!(header >> rows >> cols) || (header >> extra))
      io_fail(path, "malformed header line '" + line + "'");
  }
  if (rows < 1 || cols < 1) io_fail(path, "header declares empty matrix");
  if (static_cast<std::uint64_t>(rows) >
      kMaxElements / static_cast<std::uint64_t>(cols))
    io_fail(path, "header declares implausible dimensions");
  Matrix m(rows, cols);
  for (long long i = 0; i < rows; ++i) {
    if (!std::getline(in, line))
      io_fail(path, "truncated: expected " + std::to_string(rows) +
                        " data rows, got " + std::to_string(i));
    line = strip_cr(line);
    const char* p = line.c_str();
    for (long long j = 0; j < cols; ++j) {
      char* end = nullptr;
      const double v = std::strtod(p, &end);
      if (end == p)
        io_fail(path, "row " + std::to_string(i + 1) + ": expected " +
                          std::to_string(cols) + " values, got " +
                          std::to_string(j));
      if (!std::isfinite(v))
        io_fail(path, "non-finite value at row " + std::to_string(i + 1) +
                          ", column " + std::to_string(j + 1));
      m(i, j) = v;
      p = end;
    }
    while (*p == ' ' || *p == '\t') ++p;
    if (*p != '\0')
      io_fail(path, "row " + std::to_string(i + 1) + ": trailing data '" +
                        std::string(p) + "'");
  }
  while (std::getline(in, line)) {
    line = strip_cr(line);
    if (line.find_first_not_of(" \t") != std::string::npos)
      io_fail(path, "trailing data after declared " + std::to_string(rows) +
                        " rows");
  }
  return m;
}

}  // namespace detail

/// Loads a matrix, sniffing the format from the first bytes unless one is
/// forced. Validates declared dimensions against actual contents and rejects
/// non-finite values, reporting the offending position.
inline Matrix load_matrix(const std::string& path,
                          std::optional<MatrixFormat> format = std::nullopt) {
  std::ifstream in(path, std::ios::binary);
  if (!in) detail::io_fail(path, "cannot open");
  if (!format) {
    char magic[8] = {0};
    in.read(magic, 8);
    const bool binary = in.gcount() == 8 && std::memcmp(magic, kMatrixMagic, 8) == 0;
    format = binary ? MatrixFormat::Binary : MatrixFormat::Text;
    in.clear();
    in.seekg(0);
  }
  if (*format == MatrixFormat::Binary) {
    Matrix m = read_matrix_binary(in, path);
    if (in.peek() != std::char_traits<char>::eof())
      detail::io_fail(path, "trailing data after matrix payload");
    return m;
  }
  return detail::load_matrix_text(in, path);
}

/// Label file: one ASCII integer per line. Values may be arbitrary ids; see
/// remap_labels for canonicalization to 0-based contiguous class ids.
inline std::vector<long long> load_labels(const std::string& path) {
  std::ifstream in(path);
  if (!in) detail::io_fail(path, "cannot open");
  std::vector<long long> labels;
  std::string line;
  long long line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    line = detail::strip_cr(line);
    if (line.find_first_not_of(" \t") == std::string::npos) {
      // blank lines allowed only at the end of the file
      std::string rest;
      while (std::getline(in, rest)) {
        rest = detail::strip_cr(rest);
        if (rest.find_first_not_of(" \t") != std::string::npos)
          detail::io_fail(path, "blank line " + std::to_string(line_no) +
                                    " inside label list");
      }
      break;
    }
    try {
      std::size_t pos = 0;
      const long long v = std::stoll(line, &pos);
      if (line.find_first_not_of(" \t", pos) != std::string::npos)
        throw std::invalid_argument("trailing");
      labels.push_back(v);
    } catch (const std::exception&) {
      detail::io_fail(path, "line " + std::to_string(line_no) +
                                ": not an integer label: '" + line + "'");
    }
  }
  if (labels.empty()) detail::io_fail(path, "no labels found");
  return labels;
}

inline void save_labels(const std::vector<long long>& labels,
                        const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) detail::io_fail(path, "cannot open for writing");
  for (long long v : labels) out << v << '\n';
  out.flush();
  if (!out) detail::io_fail(path, "write failed");
}

}  // namespace mdcr
