#include "cvdbench/report/bundle.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "cvdbench/common.hpp"
#include "cvdbench/report/config.hpp"
#include "json.hpp"

namespace cvd::report {

namespace fs = std::filesystem;

std::string_view tool_version() { return "1.0.0"; }

BundleWriter::BundleWriter(fs::path dir) : dir_(std::move(dir)) {
  std::error_code ec;
  fs::create_directories(dir_, ec);
  if (ec || !fs::is_directory(dir_)) throw IoError("cannot create output directory '" + dir_.string() + "'");
}

void BundleWriter::write(const std::string& name, const std::string& content) {
  const fs::path target = dir_ / fs::path(name);
  std::error_code ec;
  fs::create_directories(target.parent_path(), ec);
  {
    std::ofstream out(target, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write '" + target.string() + "'");
    out << content;
    if (!out.flush()) throw IoError("failed writing '" + target.string() + "'");
  }
  Entry e{name, content.size(), sha256_hex(content)};
  std::lock_guard lock(mutex_);
  for (auto& existing : entries_) {
    if (existing.name == name) {
      existing = e;
      return;
    }
  }
  entries_.push_back(std::move(e));
}

std::vector<BundleWriter::Entry> BundleWriter::entries() const {
  std::lock_guard lock(mutex_);
  return entries_;
}

void BundleWriter::write_manifest(const Manifest& m) {
  nlohmann::ordered_json j;
  j["tool"] = "cvdbench";
  j["version"] = m.tool_version.empty() ? std::string(tool_version()) : m.tool_version;
  j["status"] = m.complete ? "complete" : "partial";
  if (!m.complete) {
    j["failed_stage"] = m.failed_stage;
    j["error"] = m.error;
  }
  j["config_hash"] = m.config_hash;
  j["config_path"] = m.config_path;
  j["seed"] = m.seed;
  auto timings = nlohmann::ordered_json::object();
  for (const auto& [stage, seconds] : m.timings) timings[stage] = seconds;
  j["timings_seconds"] = timings;
  auto files = nlohmann::ordered_json::array();
  for (const auto& e : entries()) files.push_back({{"name", e.name}, {"bytes", e.bytes}, {"sha256", e.sha256}});
  j["files"] = files;
  const std::string text = j.dump(2) + "\n";
  std::ofstream out(dir_ / "manifest.json", std::ios::binary | std::ios::trunc);
  if (!out || !(out << text)) throw IoError("cannot write manifest in '" + dir_.string() + "'");
}

namespace {

std::string pct(double v) { return format_fixed(100.0 * v, 1); }
std::string score(double v) { return format_fixed(v, 4); }

}  // namespace

std::string performance_csv(const std::vector<ModelRow>& rows) {
  std::ostringstream out;
  out << "model,accuracy,precision,recall,f1,auc\n";
  for (const auto& r : rows) {
    const auto& t = r.eval.threshold;
    out << r.model << ',' << pct(t.accuracy) << ',' << pct(t.precision) << ',' << pct(t.recall) << ','
        << pct(t.f1) << ',' << pct(r.eval.auc) << '\n';
  }
  return out.str();
}

std::string performance_markdown(const std::vector<ModelRow>& rows) {
  std::ostringstream out;
  out << "| Model | Accuracy (%) | Precision (%) | Recall (%) | F1-Score (%) | AUC (%) |\n";
  out << "|---|---:|---:|---:|---:|---:|\n";
  for (const auto& r : rows) {
    const auto& t = r.eval.threshold;
    out << "| " << r.model << " | " << pct(t.accuracy) << " | " << pct(t.precision) << " | " << pct(t.recall)
        << " | " << pct(t.f1) << " | " << pct(r.eval.auc) << " |\n";
  }
  return out.str();
}

std::string calibration_csv(const std::vector<ModelRow>& rows) {
  std::ostringstream out;
  out << "model,ece,brier\n";
  for (const auto& r : rows) out << r.model << ',' << score(r.eval.ece) << ',' << score(r.eval.brier) << '\n';
  return out.str();
}

std::string calibration_markdown(const std::vector<ModelRow>& rows) {
  std::ostringstream out;
  out << "| Model | ECE | Brier_Score |\n|---|---:|---:|\n";
  for (const auto& r : rows) out << "| " << r.model << " | " << score(r.eval.ece) << " | " << score(r.eval.brier) << " |\n";
  return out.str();
}

std::string confusion_csv(const std::vector<ModelRow>& rows) {
  std::ostringstream out;
  out << "model,tp,fp,tn,fn\n";
  for (const auto& r : rows) {
    const auto& c = r.eval.confusion;
    out << r.model << ',' << c.tp << ',' << c.fp << ',' << c.tn << ',' << c.fn << '\n';
  }
  return out.str();
}

std::string accuracy_bars_csv(const std::vector<ModelRow>& rows) {
  std::ostringstream out;
  out << "model,accuracy\n";
  for (const auto& r : rows) out << r.model << ',' << score(r.eval.threshold.accuracy) << '\n';
  return out.str();
}

std::string reliability_csv(std::span<const metrics::ReliabilityPoint> points) {
  std::ostringstream out;
  out << "bin_low,bin_high,mean_confidence,frequency,count\n";
  for (const auto& p : points) {
    out << format_exact(p.bin_low) << ',' << format_exact(p.bin_high) << ',' << format_exact(p.mean_confidence)
        << ',' << format_exact(p.frequency) << ',' << p.count << '\n';
  }
  return out.str();
}

std::string roc_csv(std::span<const metrics::RocPoint> points) {
  std::ostringstream out;
  out << "threshold,fpr,tpr\n";
  for (const auto& p : points) {
    out << (std::isinf(p.threshold) ? std::string("inf") : format_exact(p.threshold)) << ','
        << format_exact(p.fpr) << ',' << format_exact(p.tpr) << '\n';
  }
  return out.str();
}

std::string predictions_csv(std::span<const std::size_t> index, std::span<const double> probs,
                            std::span<const int> labels, double threshold) {
  if (index.size() != probs.size() || labels.size() != probs.size()) {
    throw SchemaError("predictions_csv: column lengths differ");
  }
  std::ostringstream out;
  out << "index,prob,label,predicted\n";
  for (std::size_t i = 0; i < probs.size(); ++i) {
    out << index[i] << ',' << format_exact(probs[i]) << ',' << labels[i] << ',' << (probs[i] >= threshold ? 1 : 0)
        << '\n';
  }
  return out.str();
}

std::vector<std::vector<std::string>> parse_csv_table(const std::string& text) {
  std::vector<std::vector<std::string>> out;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    out.push_back(split(line, ','));
  }
  return out;
}

PredictionFile parse_predictions_csv(const std::string& text) {
  const auto table = parse_csv_table(text);
  if (table.empty() || table[0].size() < 3 || table[0][0] != "index" || table[0][1] != "prob" ||
      table[0][2] != "label") {
    throw SchemaError("predictions file: unexpected header");
  }
  PredictionFile f;
  for (std::size_t r = 1; r < table.size(); ++r) {
    const auto& row = table[r];
    const auto idx = row.size() >= 3 ? parse_int(row[0]) : std::nullopt;
    const auto prob = row.size() >= 3 ? parse_double(row[1]) : std::nullopt;
    const auto label = row.size() >= 3 ? parse_int(row[2]) : std::nullopt;
    if (!idx || !prob || !label) throw SchemaError("predictions file: bad row " + std::to_string(r + 1));
    f.index.push_back(static_cast<std::size_t>(*idx));
    f.probs.push_back(*prob);
    f.labels.push_back(static_cast<int>(*label));
  }
  return f;
}

}  // namespace cvd::report
