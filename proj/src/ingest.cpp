#include "cvdbench/ingest.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

namespace cvd::ingest {
namespace {

enum Column : std::size_t {
  kId,
  kAge,
  kGender,
  kHeight,
  kWeight,
  kApHi,
  kApLo,
  kCholesterol,
  kGluc,
  kSmoke,
  kAlco,
  kActive,
  kCardio,
  kColumnCount
};

std::string strip_quotes(std::string_view cell) {
  cell = trim(cell);
  if (cell.size() >= 2 && cell.front() == '"' && cell.back() == '"') {
    cell = cell.substr(1, cell.size() - 2);
  }
  return std::string(trim(cell));
}

std::string lowercase(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

// Throws a reason string on malformed cells; empty cells yield nullopt.
struct CellError {
  std::string reason;
};

std::optional<std::int64_t> integer_cell(const std::string& cell, std::string_view column) {
  if (cell.empty()) return std::nullopt;
  auto v = parse_int(cell);
  if (!v) throw CellError{std::string(column) + ": expected integer, got '" + cell + "'"};
  return v;
}

std::optional<double> number_cell(const std::string& cell, std::string_view column) {
  if (cell.empty()) return std::nullopt;
  auto v = parse_double(cell);
  if (!v || !std::isfinite(*v)) {
    throw CellError{std::string(column) + ": expected number, got '" + cell + "'"};
  }
  return v;
}

std::optional<int> code_cell(const std::string& cell, std::string_view column) {
  auto v = integer_cell(cell, column);
  if (!v) return std::nullopt;
  if (*v < -1000000 || *v > 1000000) {
    throw CellError{std::string(column) + ": code out of integer range '" + cell + "'"};
  }
  return static_cast<int>(*v);
}

template <typename T>
void write_optional(std::ostream& out, const std::optional<T>& v) {
  if (!v) return;
  if constexpr (std::is_floating_point_v<T>) {
    out << format_exact(*v);
  } else {
    out << *v;
  }
}

}  // namespace

const std::vector<std::string>& source_columns() {
  static const std::vector<std::string> names = {
      "id",    "age",         "gender", "height", "weight", "ap_hi", "ap_lo",
      "cholesterol", "gluc", "smoke",  "alco",   "active", "cardio"};
  return names;
}

RawDataset parse_csv(std::istream& source, std::optional<char> delimiter, std::string source_path) {
  if (!source) throw IoError("cannot read " + source_path);

  RawDataset dataset;
  dataset.source_path = std::move(source_path);

  std::string header;
  if (!std::getline(source, header)) {
    if (source.bad()) throw IoError("cannot read " + dataset.source_path);
    throw SchemaError(dataset.source_path + ": empty input, header row expected");
  }
  if (header.size() >= 3 && header.compare(0, 3, "\xEF\xBB\xBF") == 0) header.erase(0, 3);

  const char delim = delimiter.value_or(header.find(';') != std::string::npos ? ';' : ',');
  dataset.delimiter = delim;

  const auto header_cells = split(header, delim);
  const auto& names = source_columns();
  std::array<std::optional<std::size_t>, kColumnCount> position;
  for (std::size_t i = 0; i < header_cells.size(); ++i) {
    const auto name = lowercase(strip_quotes(header_cells[i]));
    const auto it = std::find(names.begin(), names.end(), name);
    if (it != names.end()) position[static_cast<std::size_t>(it - names.begin())] = i;
  }
  std::vector<std::string> missing;
  for (std::size_t c = kAge; c < kColumnCount; ++c) {
    if (!position[c]) missing.push_back(names[c]);
  }
  if (!missing.empty()) {
    std::string joined;
    for (const auto& m : missing) joined += (joined.empty() ? "" : ", ") + m;
    throw SchemaError(dataset.source_path + ": missing mandatory columns: " + joined);
  }

  std::string line;
  std::size_t line_number = 1;
  while (std::getline(source, line)) {
    ++line_number;
    const std::size_t data_index = line_number - 2;
    if (trim(line).empty()) {
      dataset.rejected.push_back({line_number, "empty line"});
      continue;
    }
    const auto raw_cells = split(line, delim);
    if (raw_cells.size() != header_cells.size()) {
      dataset.rejected.push_back({line_number, "expected " + std::to_string(header_cells.size()) +
                                                   " fields, got " +
                                                   std::to_string(raw_cells.size())});
      continue;
    }
    auto cell = [&](Column c) { return strip_quotes(raw_cells[*position[c]]); };
    try {
      RawRecord r;
      r.line = line_number;
      if (position[kId]) {
        auto id = integer_cell(cell(kId), "id");
        if (!id) throw CellError{"id: empty"};
        r.id = *id;
      } else {
        r.id = static_cast<std::int64_t>(data_index);
      }
      r.age_days = integer_cell(cell(kAge), "age");
      r.gender = code_cell(cell(kGender), "gender");
      r.height_cm = number_cell(cell(kHeight), "height");
      r.weight_kg = number_cell(cell(kWeight), "weight");
      r.ap_hi = number_cell(cell(kApHi), "ap_hi");
      r.ap_lo = number_cell(cell(kApLo), "ap_lo");
      r.cholesterol = code_cell(cell(kCholesterol), "cholesterol");
      r.gluc = code_cell(cell(kGluc), "gluc");
      r.smoke = code_cell(cell(kSmoke), "smoke");
      r.alco = code_cell(cell(kAlco), "alco");
      r.active = code_cell(cell(kActive), "active");
      auto cardio = code_cell(cell(kCardio), "cardio");
      if (!cardio) throw CellError{"cardio: target is missing"};
      if (*cardio != 0 && *cardio != 1) {
        throw CellError{"cardio: target must be 0 or 1, got " + std::to_string(*cardio)};
      }
      r.cardio = *cardio;
      dataset.records.push_back(std::move(r));
    } catch (const CellError& e) {
      dataset.rejected.push_back({line_number, e.reason});
    }
  }
  if (source.bad()) throw IoError("read error in " + dataset.source_path);
  return dataset;
}

RawDataset read_csv_file(const std::filesystem::path& path, std::optional<char> delimiter) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  return parse_csv(in, delimiter, path.string());
}

std::vector<SchemaViolation> validate_schema(const RawDataset& dataset) {
  std::vector<SchemaViolation> out;
  auto code = [&](const RawRecord& r, const std::optional<int>& v, const char* column,
                  std::initializer_list<int> allowed) {
    if (v && std::find(allowed.begin(), allowed.end(), *v) == allowed.end()) {
      out.push_back({r.line, column, "code " + std::to_string(*v) + " outside declared set"});
    }
  };
  auto positive = [&](const RawRecord& r, std::optional<double> v, const char* column) {
    if (v && !(*v > 0.0)) {
      out.push_back({r.line, column, "non-positive measurement " + format_exact(*v)});
    }
  };
  for (const auto& r : dataset.records) {
    if (r.age_days) positive(r, static_cast<double>(*r.age_days), "age");
    code(r, r.gender, "gender", {1, 2});
    positive(r, r.height_cm, "height");
    positive(r, r.weight_kg, "weight");
    positive(r, r.ap_hi, "ap_hi");
    positive(r, r.ap_lo, "ap_lo");
    code(r, r.cholesterol, "cholesterol", {1, 2, 3});
    code(r, r.gluc, "gluc", {1, 2, 3});
    code(r, r.smoke, "smoke", {0, 1});
    code(r, r.alco, "alco", {0, 1});
    code(r, r.active, "active", {0, 1});
  }
  return out;
}

void write_csv(const RawDataset& dataset, std::ostream& out, char delimiter) {
  const auto& names = source_columns();
  for (std::size_t i = 0; i < names.size(); ++i) out << (i ? std::string(1, delimiter) : "") << names[i];
  out << '\n';
  for (const auto& r : dataset.records) {
    out << r.id << delimiter;
    write_optional(out, r.age_days);
    out << delimiter;
    write_optional(out, r.gender);
    out << delimiter;
    write_optional(out, r.height_cm);
    out << delimiter;
    write_optional(out, r.weight_kg);
    out << delimiter;
    write_optional(out, r.ap_hi);
    out << delimiter;
    write_optional(out, r.ap_lo);
    out << delimiter;
    write_optional(out, r.cholesterol);
    out << delimiter;
    write_optional(out, r.gluc);
    out << delimiter;
    write_optional(out, r.smoke);
    out << delimiter;
    write_optional(out, r.alco);
    out << delimiter;
    write_optional(out, r.active);
    out << delimiter << r.cardio << '\n';
  }
}

void write_rejected_csv(const RawDataset& dataset, std::ostream& out) {
  out << "line,reason\n";
  for (const auto& r : dataset.rejected) {
    std::string reason = r.reason;
    std::replace(reason.begin(), reason.end(), '"', '\'');
    out << r.line << ",\"" << reason << "\"\n";
  }
}

}  // namespace cvd::ingest
