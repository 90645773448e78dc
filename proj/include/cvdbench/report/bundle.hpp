#pragma once

#include <cstdint>
#include <filesystem>
#include <mutex>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "cvdbench/metrics.hpp"

namespace cvd::report {

/// Writes bundle files and records each one for the manifest. All writes go
/// through this object; it is safe to share between threads.
class BundleWriter {
 public:
  /// Creates the directory if needed (IoError on failure).
  explicit BundleWriter(std::filesystem::path dir);

  struct Entry {
    std::string name;  // relative path with '/' separators
    std::size_t bytes = 0;
    std::string sha256;
  };

  void write(const std::string& name, const std::string& content);
  std::vector<Entry> entries() const;
  const std::filesystem::path& dir() const { return dir_; }

  struct Manifest {
    std::string tool_version;
    std::string config_hash;
    std::string config_path;
    std::uint64_t seed = 0;
    bool complete = true;
    std::string failed_stage;
    std::string error;
    std::vector<std::pair<std::string, double>> timings;  // stage → seconds
  };

  /// Writes manifest.json listing every file written so far.
  void write_manifest(const Manifest& manifest);

 private:
  std::filesystem::path dir_;
  mutable std::mutex mutex_;
  std::vector<Entry> entries_;
};

struct ModelRow {
  std::string model;
  metrics::EvalReport eval;
};

/// model,accuracy,precision,recall,f1,auc in percent with one decimal.
std::string performance_csv(const std::vector<ModelRow>& rows);
std::string performance_markdown(const std::vector<ModelRow>& rows);
/// model,ece,brier with four decimals.
std::string calibration_csv(const std::vector<ModelRow>& rows);
std::string calibration_markdown(const std::vector<ModelRow>& rows);
std::string confusion_csv(const std::vector<ModelRow>& rows);
/// Figure data for the accuracy comparison: model,accuracy (fraction, four decimals).
std::string accuracy_bars_csv(const std::vector<ModelRow>& rows);
std::string reliability_csv(std::span<const metrics::ReliabilityPoint> points);
std::string roc_csv(std::span<const metrics::RocPoint> points);

/// index,prob,label,predicted; prob printed exactly so tables can be
/// recomputed bit for bit.
std::string predictions_csv(std::span<const std::size_t> index, std::span<const double> probs,
                            std::span<const int> labels, double threshold);

struct PredictionFile {
  std::vector<std::size_t> index;
  std::vector<double> probs;
  std::vector<int> labels;
};
PredictionFile parse_predictions_csv(const std::string& text);

/// Simple CSV reader for the emitted tables (no quoting).
std::vector<std::vector<std::string>> parse_csv_table(const std::string& text);

/// Tool version stamped into manifests and model files.
std::string_view tool_version();

}  // namespace cvd::report
