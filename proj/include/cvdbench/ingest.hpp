#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "cvdbench/common.hpp"

namespace cvd::ingest {

/// One row of the source CSV. Feature cells left empty in the file are held
/// as nullopt and filled later by imputation; `cardio` is always present.
struct RawRecord {
  std::size_t line = 0;  // 1-based line number in the source (header is line 1)
  std::int64_t id = 0;
  std::optional<std::int64_t> age_days;
  std::optional<int> gender;  // 1 female, 2 male
  std::optional<double> height_cm;
  std::optional<double> weight_kg;
  std::optional<double> ap_hi;
  std::optional<double> ap_lo;
  std::optional<int> cholesterol;  // 1 normal, 2 above normal, 3 well above normal
  std::optional<int> gluc;
  std::optional<int> smoke;
  std::optional<int> alco;
  std::optional<int> active;
  int cardio = 0;

  bool operator==(const RawRecord&) const = default;
};

struct RejectedRow {
  std::size_t line = 0;
  std::string reason;

  bool operator==(const RejectedRow&) const = default;
};

/// Parsed file. Every non-header line ends up either in `records` or in
/// `rejected`, in file order.
struct RawDataset {
  std::vector<RawRecord> records;
  std::string source_path;
  std::vector<RejectedRow> rejected;
  char delimiter = ';';

  std::size_t data_lines() const { return records.size() + rejected.size(); }
};

struct SchemaViolation {
  std::size_t line = 0;
  std::string column;
  std::string reason;
};

/// Column names in the order of the source file layout. `id` is optional.
const std::vector<std::string>& source_columns();

/// Parses a CSV stream. The delimiter is detected from the header (';' when
/// present, ',' otherwise) unless given. Rows that fail type coercion are
/// quarantined in `rejected` with a reason.
///
/// Throws SchemaError naming every mandatory column missing from the header,
/// IoError when the stream cannot be read.
RawDataset parse_csv(std::istream& source, std::optional<char> delimiter = std::nullopt,
                     std::string source_path = "<stream>");

RawDataset read_csv_file(const std::filesystem::path& path,
                         std::optional<char> delimiter = std::nullopt);

/// Out-of-domain categorical codes and non-positive physical measurements.
/// Missing cells are not violations.
std::vector<SchemaViolation> validate_schema(const RawDataset& dataset);

/// Writes accepted records back in source layout (with `id`).
void write_csv(const RawDataset& dataset, std::ostream& out, char delimiter = ';');

/// "line,reason" rows for quarantined lines.
void write_rejected_csv(const RawDataset& dataset, std::ostream& out);

}  // namespace cvd::ingest
