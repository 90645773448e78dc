#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "cvdbench/common.hpp"
#include "cvdbench/preprocess.hpp"

namespace cvd::learners {

enum class LearnerKind { Logistic, Knn, Cart, RandomForest, GbtLevelwise, GbtOblivious };

std::string_view to_string(LearnerKind kind);
/// Accepts the identifiers produced by to_string. Throws ConfigError otherwise.
LearnerKind parse_learner_kind(std::string_view name);
const std::vector<LearnerKind>& all_learner_kinds();
/// Human-readable model name used in report tables.
std::string_view display_name(LearnerKind kind);

struct HyperparameterInfo {
  std::string name;
  double default_value;
  double min;
  double max;
  bool integer;
  bool min_exclusive = false;
};

/// Declared hyperparameters of a learner kind, with defaults and bounds.
const std::vector<HyperparameterInfo>& hyperparameter_schema(LearnerKind kind);

struct LearnerSpec {
  LearnerKind kind = LearnerKind::Logistic;
  std::map<std::string, double> hyperparameters;  // overrides; missing names use defaults
  std::uint64_t seed = 0;

  /// Value of a declared hyperparameter (override or default).
  double get(std::string_view name) const;
  /// Throws ConfigError listing every unknown name and out-of-bounds value.
  void validate() const;
  /// All declared hyperparameters with overrides applied, in schema order.
  std::vector<std::pair<std::string, double>> resolved() const;
};

struct TrainingInfo {
  std::size_t rounds = 0;  // iterations, trees or boosting rounds
  bool converged = true;
};

/// A fitted model. Implementations are immutable after construction.
class Classifier {
 public:
  virtual ~Classifier() = default;
  virtual LearnerKind kind() const = 0;
  virtual std::size_t input_columns() const = 0;
  /// Probability of class 1 for each row, in [0, 1].
  virtual std::vector<double> predict_proba(const Matrix& rows) const = 0;
  virtual void save(std::ostream& out) const = 0;
};

class ModelHandle {
 public:
  ModelHandle(LearnerSpec spec, std::vector<std::string> columns,
              std::shared_ptr<const Classifier> model, TrainingInfo info);

  LearnerKind kind() const { return spec_.kind; }
  const LearnerSpec& spec() const { return spec_; }
  const std::vector<std::string>& columns() const { return columns_; }
  const Classifier& model() const { return *model_; }
  const TrainingInfo& info() const { return info_; }

  template <typename T>
  const T* as() const {
    return dynamic_cast<const T*>(model_.get());
  }

 private:
  LearnerSpec spec_;
  std::vector<std::string> columns_;
  std::shared_ptr<const Classifier> model_;
  TrainingInfo info_;
};

/// Trains a learner. Hyperparameters are validated before any compute
/// (ConfigError). Requires both classes except for knn.
ModelHandle fit(const LearnerSpec& spec, const preprocess::FeatureFrame& train);

/// Checks the column layout against the model (SchemaError naming the first
/// mismatch) and predicts.
std::vector<double> predict_proba(const ModelHandle& model, const preprocess::FeatureFrame& rows);
std::vector<double> predict_proba(const ModelHandle& model, const Matrix& rows);

/// label = 1 iff prob >= threshold.
std::vector<int> decision_threshold(std::span<const double> probs, double threshold = 0.5);

/// Versioned text format; numbers use shortest exact decimal form so a
/// round trip reproduces predictions bit for bit.
void save_model(const ModelHandle& model, std::ostream& out);
ModelHandle load_model(std::istream& in);

}  // namespace cvd::learners
