#pragma once

// Token-level helpers for the model text format.

#include <istream>
#include <limits>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "cvdbench/common.hpp"

namespace cvd::learners::serial {

inline void write_number(std::ostream& out, double v) { out << format_exact(v); }

inline void write_list(std::ostream& out, std::string_view tag, std::span<const double> values) {
  out << tag << ' ' << values.size();
  for (double v : values) out << ' ' << format_exact(v);
  out << '\n';
}

inline std::string read_token(std::istream& in) {
  std::string token;
  if (!(in >> token)) throw IoError("model file truncated");
  return token;
}

inline void expect(std::istream& in, std::string_view tag) {
  const auto token = read_token(in);
  if (token != tag) {
    throw SchemaError("model file: expected '" + std::string(tag) + "', found '" + token + "'");
  }
}

inline double read_number(std::istream& in) {
  const auto token = read_token(in);
  if (token == "nan") return std::numeric_limits<double>::quiet_NaN();
  auto v = parse_double(token);
  if (!v) throw SchemaError("model file: bad number '" + token + "'");
  return *v;
}

inline std::size_t read_size(std::istream& in) {
  const auto token = read_token(in);
  auto v = parse_int(token);
  if (!v || *v < 0) throw SchemaError("model file: bad count '" + token + "'");
  return static_cast<std::size_t>(*v);
}

inline std::vector<double> read_list(std::istream& in, std::string_view tag) {
  expect(in, tag);
  const auto n = read_size(in);
  std::vector<double> out(n);
  for (auto& v : out) v = read_number(in);
  return out;
}

}  // namespace cvd::learners::serial
