#pragma once

// Small text helpers shared by the file formats: locale-independent number
// formatting and a minimal CSV table reader/writer.

#include <charconv>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "agbmap/error.hpp"

namespace agb::text {

/// Shortest decimal that parses back to the identical double.
inline std::string format_exact(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

/// printf-style %.Ng, used where a fixed significant-digit count is part of a
/// file format.
inline std::string format_sig(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*g", digits, v);
  return buf;
}

/// 64-bit FNV-1a, used for content fingerprints in run manifests.
inline std::uint64_t fnv1a(std::string_view data, std::uint64_t h = 0xcbf29ce484222325ULL) {
  for (unsigned char c : data) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

inline std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

inline double parse_double(std::string_view s) {
  s = trim(s);
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  double v = 0.0;
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc{} || res.ptr != s.data() + s.size()) {
    // from_chars rejects "nan"/"inf" spellings some tools emit
    if (s == "nan" || s == "NaN" || s == "NA") return std::numeric_limits<double>::quiet_NaN();
    fail(Errc::ParseError, "not a number: '" + std::string(s) + "'");
  }
  return v;
}

inline long long parse_int(std::string_view s) {
  s = trim(s);
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  long long v = 0;
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc{} || res.ptr != s.data() + s.size())
    fail(Errc::ParseError, "not an integer: '" + std::string(s) + "'");
  return v;
}

inline std::vector<std::string> split(std::string_view line, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(sep, start);
    out.emplace_back(trim(line.substr(start, pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

/// Header-addressed CSV table. No quoting: every field this project writes is
/// a number or an identifier without commas.
class CsvTable {
 public:
  CsvTable() = default;
  explicit CsvTable(std::vector<std::string> header) : header_(std::move(header)) { index(); }

  static CsvTable parse(std::istream& in, const std::string& source = "<stream>") {
    CsvTable t;
    std::string line;
    bool have_header = false;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      if (trim(line).empty() || line.front() == '#') continue;
      auto fields = split(line, ',');
      if (!have_header) {
        t.header_ = std::move(fields);
        t.index();
        have_header = true;
        continue;
      }
      if (fields.size() != t.header_.size())
        fail(Errc::ParseError, source + ":" + std::to_string(lineno) + ": expected " +
                                   std::to_string(t.header_.size()) + " fields, got " +
                                   std::to_string(fields.size()));
      t.rows_.push_back(std::move(fields));
    }
    if (!have_header) fail(Errc::ParseError, source + ": missing CSV header");
    return t;
  }

  static CsvTable read(const std::string& path) {
    std::ifstream in(path);
    if (!in) fail(Errc::IoError, "cannot open " + path);
    return parse(in, path);
  }

  void write(std::ostream& out) const {
    write_row(out, header_);
    for (const auto& r : rows_) write_row(out, r);
  }

  void write(const std::string& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) fail(Errc::IoError, "cannot write " + path);
    write(out);
  }

  bool has(const std::string& col) const { return cols_.count(col) != 0; }

  std::size_t col(const std::string& name) const {
    auto it = cols_.find(name);
    if (it == cols_.end()) fail(Errc::ParseError, "missing CSV column '" + name + "'");
    return it->second;
  }

  const std::string& at(std::size_t row, const std::string& name) const { return rows_[row][col(name)]; }
  double number(std::size_t row, const std::string& name) const { return parse_double(at(row, name)); }

  void add_row(std::vector<std::string> r) {
    if (r.size() != header_.size()) fail(Errc::InvalidArgument, "CSV row width mismatch");
    rows_.push_back(std::move(r));
  }

  std::size_t size() const { return rows_.size(); }
  const std::vector<std::string>& header() const { return header_; }
  const std::vector<std::vector<std::string>>& rows() const { return rows_; }

 private:
  static void write_row(std::ostream& out, const std::vector<std::string>& r) {
    for (std::size_t i = 0; i < r.size(); ++i) {
      if (i) out << ',';
      out << r[i];
    }
    out << '\n';
  }

  void index() {
    cols_.clear();
    for (std::size_t i = 0; i < header_.size(); ++i) cols_[header_[i]] = i;
  }

  std::vector<std::string> header_;
  std::map<std::string, std::size_t> cols_;
  std::vector<std::vector<std::string>> rows_;
};

}  // namespace agb::text
