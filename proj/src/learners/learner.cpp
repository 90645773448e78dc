#include "cvdbench/learners.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>

#include "cvdbench/boosting.hpp"
#include "cvdbench/knn.hpp"
#include "cvdbench/logistic.hpp"
#include "cvdbench/tree.hpp"
#include "serial.hpp"

namespace cvd::learners {
namespace {

constexpr std::string_view kMagic = "cvdbench-model";
constexpr int kFormatVersion = 1;

struct KindName {
  LearnerKind kind;
  std::string_view id;
  std::string_view display;
};

constexpr KindName kKinds[] = {
    {LearnerKind::Logistic, "logistic", "Logistic Regression"},
    {LearnerKind::Knn, "knn", "KNN"},
    {LearnerKind::Cart, "cart", "Decision Tree"},
    {LearnerKind::RandomForest, "random_forest", "Random Forest"},
    {LearnerKind::GbtLevelwise, "gbt_levelwise", "GBT level-wise"},
    {LearnerKind::GbtOblivious, "gbt_oblivious", "GBT oblivious"},
};

const KindName& lookup(LearnerKind kind) {
  for (const auto& k : kKinds) {
    if (k.kind == kind) return k;
  }
  throw ConfigError("unknown learner kind");
}

std::size_t as_size(double v) { return static_cast<std::size_t>(std::llround(v)); }

}  // namespace

std::string_view to_string(LearnerKind kind) { return lookup(kind).id; }
std::string_view display_name(LearnerKind kind) { return lookup(kind).display; }

LearnerKind parse_learner_kind(std::string_view name) {
  for (const auto& k : kKinds) {
    if (k.id == name) return k.kind;
  }
  throw ConfigError("unknown learner '" + std::string(name) + "'");
}

const std::vector<LearnerKind>& all_learner_kinds() {
  static const std::vector<LearnerKind> kinds = [] {
    std::vector<LearnerKind> out;
    for (const auto& k : kKinds) out.push_back(k.kind);
    return out;
  }();
  return kinds;
}

const std::vector<HyperparameterInfo>& hyperparameter_schema(LearnerKind kind) {
  static const std::vector<HyperparameterInfo> logistic{
      {"lambda", 0.0, 0.0, 1e3, false},
      {"step", 0.1, 0.0, 100.0, false, true},
      {"max_iterations", 10000, 1, 1e7, true},
  };
  static const std::vector<HyperparameterInfo> knn{
      {"k", 15, 1, 1e6, true},
  };
  static const std::vector<HyperparameterInfo> cart{
      {"max_depth", 8, 1, 64, true},
      {"min_samples_leaf", 5, 1, 1e6, true},
  };
  static const std::vector<HyperparameterInfo> forest{
      {"n_trees", 200, 1, 5000, true},
      {"max_depth", 12, 1, 64, true},
      {"min_samples_leaf", 1, 1, 1e6, true},
      {"max_features", 0, 0, 1e4, true},
      {"bootstrap", 1, 0, 1, true},
  };
  static const std::vector<HyperparameterInfo> levelwise{
      {"rounds", 300, 1, 10000, true},
      {"learning_rate", 0.1, 0.0, 1.0, false, true},
      {"max_depth", 6, 1, 20, true},
      {"lambda", 1.0, 0.0, 1e3, false},
      {"gamma", 0.0, 0.0, 1e3, false},
      {"min_child_weight", 1.0, 0.0, 1e4, false},
  };
  static const std::vector<HyperparameterInfo> oblivious{
      {"rounds", 500, 1, 10000, true},
      {"learning_rate", 0.05, 0.0, 1.0, false, true},
      {"depth", 6, 1, 16, true},
      {"lambda", 3.0, 0.0, 1e3, false},
      {"ordered_ts", 1, 0, 1, true},
      {"prior_strength", 1.0, 0.0, 1e3, false, true},
  };
  switch (kind) {
    case LearnerKind::Logistic: return logistic;
    case LearnerKind::Knn: return knn;
    case LearnerKind::Cart: return cart;
    case LearnerKind::RandomForest: return forest;
    case LearnerKind::GbtLevelwise: return levelwise;
    case LearnerKind::GbtOblivious: return oblivious;
  }
  throw ConfigError("unknown learner kind");
}

double LearnerSpec::get(std::string_view name) const {
  for (const auto& info : hyperparameter_schema(kind)) {
    if (info.name != name) continue;
    const auto it = hyperparameters.find(info.name);
    return it == hyperparameters.end() ? info.default_value : it->second;
  }
  throw ConfigError(std::string(to_string(kind)) + ": no hyperparameter '" + std::string(name) + "'");
}

void LearnerSpec::validate() const {
  const auto& schema = hyperparameter_schema(kind);
  std::vector<std::string> problems;
  for (const auto& [name, value] : hyperparameters) {
    const auto it = std::find_if(schema.begin(), schema.end(),
                                 [&](const HyperparameterInfo& i) { return i.name == name; });
    if (it == schema.end()) {
      problems.push_back("unknown hyperparameter '" + name + "'");
      continue;
    }
    const bool below = it->min_exclusive ? !(value > it->min) : !(value >= it->min);
    if (!std::isfinite(value) || below || value > it->max) {
      problems.push_back(name + "=" + format_exact(value) + " outside " + (it->min_exclusive ? "(" : "[") +
                         format_exact(it->min) + ", " + format_exact(it->max) + "]");
    } else if (it->integer && value != std::floor(value)) {
      problems.push_back(name + "=" + format_exact(value) + " must be an integer");
    }
  }
  if (problems.empty()) return;
  std::string message(to_string(kind));
  message += ": ";
  for (std::size_t i = 0; i < problems.size(); ++i) {
    if (i) message += "; ";
    message += problems[i];
  }
  throw ConfigError(message);
}

std::vector<std::pair<std::string, double>> LearnerSpec::resolved() const {
  std::vector<std::pair<std::string, double>> out;
  for (const auto& info : hyperparameter_schema(kind)) out.emplace_back(info.name, get(info.name));
  return out;
}

ModelHandle::ModelHandle(LearnerSpec spec, std::vector<std::string> columns,
                         std::shared_ptr<const Classifier> model, TrainingInfo info)
    : spec_(std::move(spec)), columns_(std::move(columns)), model_(std::move(model)), info_(info) {
  if (!model_) throw SchemaError("model handle without a model");
  if (model_->kind() != spec_.kind) throw SchemaError("model kind does not match its spec");
  if (model_->input_columns() != columns_.size()) {
    throw SchemaError("model column count does not match its column names");
  }
}

ModelHandle fit(const LearnerSpec& spec, const preprocess::FeatureFrame& train) {
  spec.validate();
  if (train.rows() == 0) throw DomainError(std::string(to_string(spec.kind)) + ": empty training set");
  if (train.target.size() != train.rows()) throw SchemaError("training target length differs from row count");
  const auto positives = std::count(train.target.begin(), train.target.end(), 1);
  const bool both = positives > 0 && static_cast<std::size_t>(positives) < train.rows();
  if (!both && spec.kind != LearnerKind::Knn) {
    throw DomainError(std::string(to_string(spec.kind)) + ": training data must contain both classes");
  }

  const Matrix& x = train.matrix;
  const std::vector<int>& y = train.target;
  std::shared_ptr<const Classifier> model;
  TrainingInfo info;
  switch (spec.kind) {
    case LearnerKind::Logistic: {
      LogisticOptions options;
      options.lambda = spec.get("lambda");
      options.step = spec.get("step");
      options.max_iterations = as_size(spec.get("max_iterations"));
      auto result = fit_logistic_regression(x, y, options);
      info = {result.iterations, result.converged};
      std::vector<double> w(result.params.begin() + 1, result.params.end());
      model = std::make_shared<LogisticModel>(result.params[0], std::move(w));
      break;
    }
    case LearnerKind::Knn: {
      const auto k = as_size(spec.get("k"));
      info = {0, true};
      model = std::make_shared<KnnModel>(x, y, k);
      break;
    }
    case LearnerKind::Cart: {
      CartParams params;
      params.max_depth = as_size(spec.get("max_depth"));
      params.min_samples_leaf = spec.get("min_samples_leaf");
      const SortedColumns data(x);
      const std::vector<double> weights(x.rows(), 1.0);
      info = {1, true};
      model = std::make_shared<CartModel>(grow_cart(data, y, weights, params, spec.seed), x.cols());
      break;
    }
    case LearnerKind::RandomForest: {
      ForestParams params;
      params.n_trees = as_size(spec.get("n_trees"));
      params.tree.max_depth = as_size(spec.get("max_depth"));
      params.tree.min_samples_leaf = spec.get("min_samples_leaf");
      params.tree.max_features = as_size(spec.get("max_features"));
      params.bootstrap = spec.get("bootstrap") != 0.0;
      info = {params.n_trees, true};
      model = std::make_shared<RandomForestModel>(fit_random_forest(x, y, params, spec.seed));
      break;
    }
    case LearnerKind::GbtLevelwise: {
      LevelwiseParams params;
      params.rounds = as_size(spec.get("rounds"));
      params.learning_rate = spec.get("learning_rate");
      params.max_depth = as_size(spec.get("max_depth"));
      params.lambda = spec.get("lambda");
      params.gamma = spec.get("gamma");
      params.min_child_weight = spec.get("min_child_weight");
      info = {params.rounds, true};
      model = std::make_shared<GbtLevelwiseModel>(fit_gbt_levelwise(x, y, params));
      break;
    }
    case LearnerKind::GbtOblivious: {
      ObliviousParams params;
      params.rounds = as_size(spec.get("rounds"));
      params.learning_rate = spec.get("learning_rate");
      params.depth = as_size(spec.get("depth"));
      params.lambda = spec.get("lambda");
      params.ordered_ts = spec.get("ordered_ts") != 0.0;
      params.prior_strength = spec.get("prior_strength");
      info = {params.rounds, true};
      model = std::make_shared<GbtObliviousModel>(
          fit_gbt_oblivious(x, y, train.categorical_map, params, spec.seed));
      break;
    }
  }
  return ModelHandle(spec, train.column_names, std::move(model), info);
}

std::vector<double> predict_proba(const ModelHandle& model, const Matrix& rows) {
  if (rows.cols() != model.columns().size()) {
    throw SchemaError("predict: model expects " + std::to_string(model.columns().size()) +
                      " columns, got " + std::to_string(rows.cols()));
  }
  return model.model().predict_proba(rows);
}

std::vector<double> predict_proba(const ModelHandle& model, const preprocess::FeatureFrame& rows) {
  const auto& expected = model.columns();
  const auto& actual = rows.column_names;
  const std::size_t common = std::min(expected.size(), actual.size());
  for (std::size_t i = 0; i < common; ++i) {
    if (expected[i] != actual[i]) {
      throw SchemaError("predict: column " + std::to_string(i) + " is '" + actual[i] + "', model expects '" +
                        expected[i] + "'");
    }
  }
  if (expected.size() != actual.size()) {
    throw SchemaError("predict: model expects " + std::to_string(expected.size()) + " columns, got " +
                      std::to_string(actual.size()));
  }
  return predict_proba(model, rows.matrix);
}

std::vector<int> decision_threshold(std::span<const double> probs, double threshold) {
  std::vector<int> out(probs.size());
  for (std::size_t i = 0; i < probs.size(); ++i) out[i] = probs[i] >= threshold ? 1 : 0;
  return out;
}

void save_model(const ModelHandle& model, std::ostream& out) {
  out << kMagic << ' ' << kFormatVersion << '\n';
  out << "kind " << to_string(model.kind()) << '\n';
  out << "seed " << model.spec().seed << '\n';
  out << "columns " << model.columns().size();
  for (const auto& c : model.columns()) out << ' ' << c;
  out << '\n' << "hyperparameters " << model.spec().hyperparameters.size();
  for (const auto& [name, value] : model.spec().hyperparameters) out << ' ' << name << ' ' << format_exact(value);
  out << '\n' << "info " << model.info().rounds << ' ' << (model.info().converged ? 1 : 0) << '\n';
  model.model().save(out);
  out << "end\n";
  if (!out) throw IoError("failed to write model");
}

ModelHandle load_model(std::istream& in) {
  serial::expect(in, kMagic);
  const auto version = serial::read_size(in);
  if (version != kFormatVersion) {
    throw SchemaError("model file: unsupported format version " + std::to_string(version));
  }
  serial::expect(in, "kind");
  LearnerSpec spec;
  spec.kind = parse_learner_kind(serial::read_token(in));
  serial::expect(in, "seed");
  {
    const auto token = serial::read_token(in);
    try {
      spec.seed = std::stoull(token);
    } catch (const std::exception&) {
      throw SchemaError("model file: bad seed '" + token + "'");
    }
  }
  serial::expect(in, "columns");
  std::vector<std::string> columns(serial::read_size(in));
  for (auto& c : columns) c = serial::read_token(in);
  serial::expect(in, "hyperparameters");
  const auto count = serial::read_size(in);
  for (std::size_t i = 0; i < count; ++i) {
    auto name = serial::read_token(in);
    spec.hyperparameters[name] = serial::read_number(in);
  }
  spec.validate();
  serial::expect(in, "info");
  TrainingInfo info;
  info.rounds = serial::read_size(in);
  info.converged = serial::read_size(in) != 0;

  std::shared_ptr<const Classifier> model;
  switch (spec.kind) {
    case LearnerKind::Logistic: model = LogisticModel::load(in); break;
    case LearnerKind::Knn: model = KnnModel::load(in); break;
    case LearnerKind::Cart: model = CartModel::load(in); break;
    case LearnerKind::RandomForest: model = RandomForestModel::load(in); break;
    case LearnerKind::GbtLevelwise: model = GbtLevelwiseModel::load(in); break;
    case LearnerKind::GbtOblivious: model = GbtObliviousModel::load(in); break;
  }
  serial::expect(in, "end");
  return ModelHandle(std::move(spec), std::move(columns), std::move(model), info);
}

}  // namespace cvd::learners
