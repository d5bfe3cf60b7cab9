#pragma once

#include <charconv>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "phaselin/errors.hpp"
#include "phaselin/field.hpp"

namespace phaselin {

/// Shortest decimal text that round-trips to the same double.
inline std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

inline double parse_double(std::string_view text, const std::string& context) {
  while (!text.empty() && (text.front() == ' ' || text.front() == '\t')) text.remove_prefix(1);
  while (!text.empty() && (text.back() == ' ' || text.back() == '\t' || text.back() == '\r'))
    text.remove_suffix(1);
  if (!text.empty() && text.front() == '+') text.remove_prefix(1);
  double v = 0.0;
  const auto res = std::from_chars(text.data(), text.data() + text.size(), v);
  if (res.ec != std::errc() || res.ptr != text.data() + text.size()) {
    throw Error(ErrorCode::kIo, context + ": cannot parse number '" + std::string(text) + "'");
  }
  return v;
}

inline std::vector<std::string_view> split_csv(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = line.find(',', start);
    out.push_back(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

// Matrix files:
//   line 1: <field>,<rows>,<cols>
//   line 2: column names c0,c1,... (real) or c0_re,c0_im,c1_re,... (complex)
//   then one line per row.

template <FieldScalar S>
void write_matrix(std::ostream& out, const Mat<S>& m) {
  constexpr bool kComplex = is_complex_v<S>;
  out << to_string(field_of<S>) << ',' << m.rows() << ',' << m.cols() << '\n';
  for (Eigen::Index j = 0; j < m.cols(); ++j) {
    if (j) out << ',';
    if constexpr (kComplex) {
      out << 'c' << j << "_re,c" << j << "_im";
    } else {
      out << 'c' << j;
    }
  }
  out << '\n';
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      if (j) out << ',';
      if constexpr (kComplex) {
        out << format_double(m(i, j).real()) << ',' << format_double(m(i, j).imag());
      } else {
        out << format_double(m(i, j));
      }
    }
    out << '\n';
  }
}

/// A matrix read from disk whose field is only known at runtime.
struct AnyMatrix {
  ScalarField field = ScalarField::kReal;
  RealMat real;
  Mat<Complex> complex;

  Eigen::Index rows() const { return field == ScalarField::kReal ? real.rows() : complex.rows(); }
  Eigen::Index cols() const { return field == ScalarField::kReal ? real.cols() : complex.cols(); }

  template <FieldScalar S>
  const Mat<S>& as() const {
    require_same_field(field_of<S>, field, "matrix file");
    if constexpr (is_complex_v<S>) {
      return complex;
    } else {
      return real;
    }
  }
};

inline AnyMatrix read_matrix(std::istream& in, const std::string& source = "matrix") {
  std::string line;
  auto fail = [&](std::size_t lineno, const std::string& msg) -> Error {
    return Error(ErrorCode::kIo, source + ":" + std::to_string(lineno) + ": " + msg);
  };
  if (!std::getline(in, line)) throw fail(1, "missing header line");
  const auto header = split_csv(line);
  if (header.size() != 3) throw fail(1, "header must be <field>,<rows>,<cols>");
  AnyMatrix out;
  try {
    out.field = parse_field(trim(header[0]));
  } catch (const Error& e) {
    throw fail(1, e.what());
  }
  const double rows_d = parse_double(header[1], source + ":1 rows");
  const double cols_d = parse_double(header[2], source + ":1 cols");
  if (rows_d < 1 || cols_d < 1 || rows_d != static_cast<long>(rows_d) ||
      cols_d != static_cast<long>(cols_d)) {
    throw fail(1, "rows and cols must be positive integers");
  }
  const auto rows = static_cast<Eigen::Index>(rows_d);
  const auto cols = static_cast<Eigen::Index>(cols_d);
  const bool cplx = out.field == ScalarField::kComplex;
  const Eigen::Index width = cplx ? 2 * cols : cols;
  if (!std::getline(in, line)) throw fail(2, "missing column-name line");
  if (static_cast<Eigen::Index>(split_csv(line).size()) != width) {
    throw fail(2, "expected " + std::to_string(width) + " column names");
  }
  if (cplx) {
    out.complex.resize(rows, cols);
  } else {
    out.real.resize(rows, cols);
  }
  for (Eigen::Index i = 0; i < rows; ++i) {
    const std::size_t lineno = static_cast<std::size_t>(i) + 3;
    if (!std::getline(in, line)) throw fail(lineno, "missing data row");
    const auto cells = split_csv(line);
    if (static_cast<Eigen::Index>(cells.size()) != width) {
      throw fail(lineno, "expected " + std::to_string(width) + " values, got " +
                             std::to_string(cells.size()));
    }
    const std::string ctx = source + ":" + std::to_string(lineno);
    for (Eigen::Index j = 0; j < cols; ++j) {
      if (cplx) {
        out.complex(i, j) = Complex(parse_double(cells[2 * j], ctx), parse_double(cells[2 * j + 1], ctx));
      } else {
        out.real(i, j) = parse_double(cells[j], ctx);
      }
    }
  }
  return out;
}

inline AnyMatrix read_matrix_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot open '" + path + "'");
  return read_matrix(in, path);
}

template <FieldScalar S>
void write_matrix_file(const std::string& path, const Mat<S>& m) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::kIo, "cannot write '" + path + "'");
  write_matrix<S>(out, m);
}

/// Flat key = value configuration; '#' starts a comment. Lists are
/// comma-separated. Every value remembers its line for diagnostics.
class KeyValueConfig {
 public:
  struct Entry {
    std::string value;
    std::size_t line = 0;
  };

  static KeyValueConfig parse(std::istream& in, const std::string& source = "config") {
    KeyValueConfig cfg;
    cfg.source_ = source;
    std::string raw;
    std::size_t lineno = 0;
    while (std::getline(in, raw)) {
      ++lineno;
      std::string_view line = raw;
      if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
      line = trim(line);
      if (line.empty()) continue;
      const auto eq = line.find('=');
      if (eq == std::string_view::npos) {
        throw cfg.error(lineno, "expected key = value");
      }
      const std::string key(trim(line.substr(0, eq)));
      if (key.empty()) throw cfg.error(lineno, "empty key");
      if (cfg.entries_.count(key)) throw cfg.error(lineno, "duplicate key '" + key + "'");
      cfg.entries_[key] = {std::string(trim(line.substr(eq + 1))), lineno};
    }
    return cfg;
  }

  static KeyValueConfig parse_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::kConfig, "cannot open config '" + path + "'");
    return parse(in, path);
  }

  bool has(const std::string& key) const { return entries_.count(key) != 0; }

  const std::map<std::string, Entry>& entries() const noexcept { return entries_; }

  std::string get_string(const std::string& key, const std::string& fallback) const {
    const auto it = entries_.find(key);
    return it == entries_.end() ? fallback : it->second.value;
  }

  double get_double(const std::string& key, double fallback) const {
    const auto it = entries_.find(key);
    if (it == entries_.end()) return fallback;
    try {
      return parse_double(it->second.value, key);
    } catch (const Error&) {
      throw error(it->second.line, "key '" + key + "': expected a number, got '" + it->second.value + "'");
    }
  }

  long get_int(const std::string& key, long fallback) const {
    const auto it = entries_.find(key);
    if (it == entries_.end()) return fallback;
    return to_int(it->second, key);
  }

  bool get_bool(const std::string& key, bool fallback) const {
    const auto it = entries_.find(key);
    if (it == entries_.end()) return fallback;
    const std::string& v = it->second.value;
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    throw error(it->second.line, "key '" + key + "': expected true/false, got '" + v + "'");
  }

  std::vector<std::string> get_list(const std::string& key,
                                    const std::vector<std::string>& fallback) const {
    const auto it = entries_.find(key);
    if (it == entries_.end()) return fallback;
    std::vector<std::string> out;
    for (auto part : split_csv(it->second.value)) {
      part = trim(part);
      if (part.empty()) throw error(it->second.line, "key '" + key + "': empty list element");
      out.emplace_back(part);
    }
    return out;
  }

  std::vector<double> get_double_list(const std::string& key,
                                      const std::vector<double>& fallback) const {
    const auto it = entries_.find(key);
    if (it == entries_.end()) return fallback;
    std::vector<double> out;
    for (const auto& part : get_list(key, {})) {
      try {
        out.push_back(parse_double(part, key));
      } catch (const Error&) {
        throw error(it->second.line, "key '" + key + "': expected a number, got '" + part + "'");
      }
    }
    return out;
  }

  Error error(std::size_t line, const std::string& msg) const {
    return Error(ErrorCode::kConfig, source_ + ":" + std::to_string(line) + ": " + msg);
  }

  Error error_for(const std::string& key, const std::string& msg) const {
    const auto it = entries_.find(key);
    return error(it == entries_.end() ? 0 : it->second.line, "key '" + key + "': " + msg);
  }

 private:
  long to_int(const Entry& e, const std::string& key) const {
    long v = 0;
    const std::string& s = e.value;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
      throw error(e.line, "key '" + key + "': expected an integer, got '" + s + "'");
    }
    return v;
  }

  std::string source_;
  std::map<std::string, Entry> entries_;
};

}  // namespace phaselin
