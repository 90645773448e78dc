#include "cvdbench/report/config.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "cvdbench/explain.hpp"
#include "cvdbench/tree.hpp"
#include "json.hpp"

namespace cvd::report {
namespace {

using nlohmann::json;
namespace fs = std::filesystem;

constexpr std::pair<Strategy, std::string_view> kStrategies[] = {
    {Strategy::Grid, "grid"}, {Strategy::Random, "random"}, {Strategy::Bayes, "bayes"}, {Strategy::Pso, "pso"}};

// Collects problems while walking the document so they can be reported together.
class Reader {
 public:
  std::vector<std::string> errors;

  void error(const std::string& path, const std::string& what) { errors.push_back(path + ": " + what); }

  const json* object(const json& parent, const char* key, const std::string& path) {
    if (!parent.contains(key)) return nullptr;
    const json& v = parent.at(key);
    if (!v.is_object()) {
      error(path + "." + key, "expected an object");
      return nullptr;
    }
    return &v;
  }

  void known_keys(const json& obj, const std::string& path, std::initializer_list<const char*> keys) {
    for (const auto& [k, v] : obj.items()) {
      if (std::none_of(keys.begin(), keys.end(), [&](const char* key) { return k == key; })) {
        error(path + "." + k, "unknown key");
      }
    }
  }

  double number(const json& obj, const char* key, const std::string& path, double fallback) {
    if (!obj.contains(key)) return fallback;
    const json& v = obj.at(key);
    if (!v.is_number()) {
      error(path + "." + key, "expected a number");
      return fallback;
    }
    return v.get<double>();
  }

  std::size_t count(const json& obj, const char* key, const std::string& path, std::size_t fallback,
                    std::size_t min = 0) {
    if (!obj.contains(key)) return fallback;
    const json& v = obj.at(key);
    if (!v.is_number_integer() || v.get<std::int64_t>() < static_cast<std::int64_t>(min)) {
      error(path + "." + key, "expected an integer >= " + std::to_string(min));
      return fallback;
    }
    return v.get<std::size_t>();
  }

  std::optional<std::uint64_t> seed(const json& obj, const char* key, const std::string& path) {
    if (!obj.contains(key)) return std::nullopt;
    const json& v = obj.at(key);
    if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<std::int64_t>() >= 0)) {
      error(path + "." + key, "expected a non-negative integer seed");
      return std::nullopt;
    }
    return v.get<std::uint64_t>();
  }

  bool boolean(const json& obj, const char* key, const std::string& path, bool fallback) {
    if (!obj.contains(key)) return fallback;
    const json& v = obj.at(key);
    if (!v.is_boolean()) {
      error(path + "." + key, "expected true or false");
      return fallback;
    }
    return v.get<bool>();
  }

  std::string text(const json& obj, const char* key, const std::string& path, std::string fallback) {
    if (!obj.contains(key)) return fallback;
    const json& v = obj.at(key);
    if (!v.is_string()) {
      error(path + "." + key, "expected a string");
      return fallback;
    }
    return v.get<std::string>();
  }

  preprocess::Range range(const json& obj, const char* key, const std::string& path, preprocess::Range fallback) {
    if (!obj.contains(key)) return fallback;
    const json& v = obj.at(key);
    if (!v.is_array() || v.size() != 2 || !v[0].is_number() || !v[1].is_number()) {
      error(path + "." + key, "expected [min, max]");
      return fallback;
    }
    return {v[0].get<double>(), v[1].get<double>()};
  }

  metrics::Metric metric(const json& obj, const char* key, const std::string& path, metrics::Metric fallback) {
    const auto name = text(obj, key, path, std::string(metrics::to_string(fallback)));
    try {
      return metrics::parse_metric(name);
    } catch (const ConfigError& e) {
      error(path + "." + key, e.what());
      return fallback;
    }
  }
};

tuning::Axis parse_axis(Reader& r, const std::string& name, const json& v, const std::string& path) {
  if (!v.is_object()) {
    r.error(path, "expected an axis object");
    return {};
  }
  r.known_keys(v, path, {"type", "min", "max", "log", "grid", "choices"});
  const auto type = r.text(v, "type", path, "continuous");
  std::vector<double> values;
  const char* list_key = type == "categorical" ? "choices" : "grid";
  if (v.contains(list_key)) {
    const json& list = v.at(list_key);
    if (!list.is_array() || !std::all_of(list.begin(), list.end(), [](const json& x) { return x.is_number(); })) {
      r.error(path + "." + list_key, "expected an array of numbers");
    } else {
      for (const auto& x : list) values.push_back(x.get<double>());
    }
  }
  if (type == "categorical") return tuning::Axis::categorical(name, values);
  const double min = r.number(v, "min", path, 0.0);
  const double max = r.number(v, "max", path, 0.0);
  if (!v.contains("min") || !v.contains("max")) r.error(path, "axis needs min and max");
  const bool log_scale = r.boolean(v, "log", path, false);
  if (type == "continuous") return tuning::Axis::continuous(name, min, max, log_scale, values);
  if (type == "integer") return tuning::Axis::integer(name, min, max, log_scale, values);
  r.error(path + ".type", "expected continuous, integer or categorical");
  return {};
}

SearchConfig parse_search(Reader& r, const json& v, const std::string& path, learners::LearnerKind kind) {
  SearchConfig s;
  r.known_keys(v, path, {"strategies", "space", "grid_cap", "random_budget", "bayes_budget", "pso"});
  if (v.contains("strategies")) {
    const json& list = v.at("strategies");
    if (!list.is_array() || list.empty()) {
      r.error(path + ".strategies", "expected a non-empty array");
    } else {
      for (const auto& item : list) {
        try {
          s.strategies.push_back(parse_strategy(item.is_string() ? item.get<std::string>() : item.dump()));
        } catch (const ConfigError& e) {
          r.error(path + ".strategies", e.what());
        }
      }
    }
  } else {
    s.strategies = {Strategy::Grid, Strategy::Random};
  }
  s.grid_cap = r.count(v, "grid_cap", path, s.grid_cap, 1);
  s.random_budget = r.count(v, "random_budget", path, s.random_budget, 1);
  s.bayes_budget = r.count(v, "bayes_budget", path, s.bayes_budget, 6);
  if (const json* pso = r.object(v, "pso", path)) {
    r.known_keys(*pso, path + ".pso", {"swarm", "iterations"});
    s.pso_swarm = r.count(*pso, "swarm", path + ".pso", s.pso_swarm, 1);
    s.pso_iterations = r.count(*pso, "iterations", path + ".pso", s.pso_iterations, 1);
  }
  if (const json* space = r.object(v, "space", path)) {
    const auto& schema = learners::hyperparameter_schema(kind);
    for (const auto& [name, axis] : space->items()) {
      const std::string axis_path = path + ".space." + name;
      if (std::none_of(schema.begin(), schema.end(), [&](const auto& h) { return h.name == name; })) {
        r.error(axis_path, std::string("not a hyperparameter of ") + std::string(learners::to_string(kind)));
        continue;
      }
      s.space.axes.push_back(parse_axis(r, name, axis, axis_path));
    }
  } else {
    s.space = default_search_space(kind);
  }
  try {
    s.space.validate();
  } catch (const ConfigError& e) {
    r.error(path + ".space", e.what());
  }
  const bool numeric_needed = std::any_of(s.strategies.begin(), s.strategies.end(),
                                          [](Strategy st) { return st == Strategy::Bayes || st == Strategy::Pso; });
  if (numeric_needed && s.space.has_categorical()) {
    r.error(path, "bayes and pso need continuous or integer axes only");
  }
  if (std::find(s.strategies.begin(), s.strategies.end(), Strategy::Grid) != s.strategies.end()) {
    try {
      const auto n = s.space.grid_size();
      if (n > s.grid_cap) {
        r.error(path, "grid has " + std::to_string(n) + " points, over grid_cap " + std::to_string(s.grid_cap));
      }
    } catch (const ConfigError& e) {
      r.error(path + ".space", e.what());
    }
  }
  return s;
}

json axis_json(const tuning::Axis& a) {
  json j;
  switch (a.kind) {
    case tuning::AxisKind::Continuous: j["type"] = "continuous"; break;
    case tuning::AxisKind::Integer: j["type"] = "integer"; break;
    case tuning::AxisKind::Categorical: j["type"] = "categorical"; break;
  }
  if (a.kind == tuning::AxisKind::Categorical) {
    j["choices"] = a.grid;
  } else {
    j["min"] = a.min;
    j["max"] = a.max;
    j["log"] = a.log_scale;
    j["grid"] = a.grid;
  }
  return j;
}

}  // namespace

std::string_view to_string(Strategy s) {
  for (const auto& [st, name] : kStrategies) {
    if (st == s) return name;
  }
  return "unknown";
}

Strategy parse_strategy(std::string_view name) {
  for (const auto& [st, id] : kStrategies) {
    if (id == name) return st;
  }
  throw ConfigError("unknown search strategy '" + std::string(name) + "'");
}

tuning::SearchSpace default_search_space(learners::LearnerKind kind) {
  using learners::LearnerKind;
  using tuning::Axis;
  switch (kind) {
    case LearnerKind::Logistic:
      return {{Axis::continuous("lambda", 1e-6, 1.0, true, {1e-6, 1e-4, 1e-2, 1.0})}};
    case LearnerKind::Knn:
      return {{Axis::integer("k", 5, 151, false, {5, 15, 31, 51, 101, 151})}};
    case LearnerKind::Cart:
      return {{Axis::integer("max_depth", 2, 16, false, {4, 6, 8, 10, 12}),
               Axis::integer("min_samples_leaf", 1, 200, true, {1, 5, 20, 50, 100})}};
    case LearnerKind::RandomForest:
      return {{Axis::integer("n_trees", 50, 500, true, {100, 200}),
               Axis::integer("max_depth", 4, 20, false, {8, 12, 16}),
               Axis::integer("min_samples_leaf", 1, 50, true, {1, 5})}};
    case LearnerKind::GbtLevelwise:
      return {{Axis::integer("rounds", 50, 1000, true, {100, 300}),
               Axis::continuous("learning_rate", 0.01, 0.3, true, {0.05, 0.1}),
               Axis::integer("max_depth", 3, 10, false, {4, 6})}};
    case LearnerKind::GbtOblivious:
      return {{Axis::integer("rounds", 50, 1000, true, {200, 500}),
               Axis::continuous("learning_rate", 0.01, 0.3, true, {0.05, 0.1}),
               Axis::integer("depth", 3, 10, false, {4, 6})}};
  }
  throw ConfigError("unknown learner kind");
}

std::uint64_t RunConfig::effective_split_seed() const { return split_seed ? *split_seed : stream_seed("split"); }

std::uint64_t RunConfig::stream_seed(std::string_view stream) const {
  return learners::mix_seed(seed, explain::stable_hash(stream));
}

std::string RunConfig::canonical_json() const {
  json j;
  j["input"] = {{"path", input_path}, {"delimiter", delimiter ? json(std::string(1, *delimiter)) : json(nullptr)}};
  j["seed"] = seed;
  auto range = [](const preprocess::Range& r) { return json::array({r.min, r.max}); };
  j["cleaning"] = {{"ap_hi", range(cleaning.ap_hi)},
                   {"ap_lo", range(cleaning.ap_lo)},
                   {"height_cm", range(cleaning.height_cm)},
                   {"weight_kg", range(cleaning.weight_kg)},
                   {"require_ap_hi_gt_ap_lo", cleaning.require_ap_hi_gt_ap_lo},
                   {"drop_invalid_codes", cleaning.drop_invalid_codes}};
  j["features"] = {{"include_bmi", include_bmi}};
  j["split"] = {{"ratio", split_ratio}, {"seed", effective_split_seed()}};
  j["cv"] = {{"folds", cv_folds}, {"max_rows", cv_max_rows}, {"metric", std::string(metrics::to_string(cv_metric))}};
  j["metrics"] = {{"threshold", threshold}, {"ece_bins", ece_bins}};
  json roster = json::array();
  for (const auto& l : learners) {
    json item;
    item["kind"] = std::string(learners::to_string(l.spec.kind));
    item["seed"] = l.spec.seed;
    json hp = json::object();
    for (const auto& [name, value] : l.spec.resolved()) hp[name] = value;
    item["hyperparameters"] = hp;
    if (l.search) {
      json s;
      json strategies = json::array();
      for (auto st : l.search->strategies) strategies.push_back(std::string(to_string(st)));
      s["strategies"] = strategies;
      s["grid_cap"] = l.search->grid_cap;
      s["random_budget"] = l.search->random_budget;
      s["bayes_budget"] = l.search->bayes_budget;
      s["pso"] = {{"swarm", l.search->pso_swarm}, {"iterations", l.search->pso_iterations}};
      json axes = json::array();
      for (const auto& a : l.search->space.axes) axes.push_back({{"name", a.name}, {"axis", axis_json(a)}});
      s["space"] = axes;
      item["search"] = s;
    }
    roster.push_back(item);
  }
  j["learners"] = roster;
  j["run_defaults"] = run_defaults;
  j["explain"] = {{"enabled", explain},
                  {"model", explain_model},
                  {"repeats", importance_repeats},
                  {"metric", std::string(metrics::to_string(importance_metric))},
                  {"background", background_size},
                  {"instances", shapley_instances},
                  {"samples", shapley_samples}};
  j["output"] = {{"density_sample", density_sample}, {"write_cleaned", write_cleaned}};
  return j.dump();
}

std::string RunConfig::hash() const { return sha256_hex(canonical_json()); }

RunConfig parse_config(const std::string& text, const std::string& origin, bool check_paths) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(origin + ": not valid JSON: " + e.what());
  }
  if (!doc.is_object()) throw ConfigError(origin + ": top level must be an object");

  Reader r;
  RunConfig c;
  c.config_path = origin;
  const std::string root = "config";
  r.known_keys(doc, root,
               {"seed", "input", "cleaning", "features", "split", "cv", "metrics", "learners", "run_defaults",
                "explain", "output"});

  if (auto s = r.seed(doc, "seed", root)) {
    c.seed = *s;
  } else if (!doc.contains("seed")) {
    r.error(root + ".seed", "required (seeds must be explicit)");
  }

  if (const json* input = r.object(doc, "input", root)) {
    const std::string p = root + ".input";
    r.known_keys(*input, p, {"path", "delimiter"});
    c.input_path = r.text(*input, "path", p, "");
    if (input->contains("delimiter") && !input->at("delimiter").is_null()) {
      const auto d = r.text(*input, "delimiter", p, ";");
      if (d.size() != 1) {
        r.error(p + ".delimiter", "expected a single character");
      } else {
        c.delimiter = d[0];
      }
    }
  }
  if (c.input_path.empty()) {
    r.error(root + ".input.path", "required");
  } else {
    fs::path in(c.input_path);
    if (in.is_relative() && origin != "<config>") in = fs::path(origin).parent_path() / in;
    c.resolved_input = in.lexically_normal().string();
    if (check_paths && !fs::is_regular_file(c.resolved_input)) {
      r.error(root + ".input.path", "file not found: " + c.resolved_input);
    }
  }

  if (const json* cl = r.object(doc, "cleaning", root)) {
    const std::string p = root + ".cleaning";
    r.known_keys(*cl, p, {"ap_hi", "ap_lo", "height_cm", "weight_kg", "require_ap_hi_gt_ap_lo", "drop_invalid_codes"});
    c.cleaning.ap_hi = r.range(*cl, "ap_hi", p, c.cleaning.ap_hi);
    c.cleaning.ap_lo = r.range(*cl, "ap_lo", p, c.cleaning.ap_lo);
    c.cleaning.height_cm = r.range(*cl, "height_cm", p, c.cleaning.height_cm);
    c.cleaning.weight_kg = r.range(*cl, "weight_kg", p, c.cleaning.weight_kg);
    c.cleaning.require_ap_hi_gt_ap_lo = r.boolean(*cl, "require_ap_hi_gt_ap_lo", p, true);
    c.cleaning.drop_invalid_codes = r.boolean(*cl, "drop_invalid_codes", p, true);
    try {
      c.cleaning.validate();
    } catch (const Error& e) {
      r.error(p, e.what());
    }
  }

  if (const json* f = r.object(doc, "features", root)) {
    r.known_keys(*f, root + ".features", {"include_bmi"});
    c.include_bmi = r.boolean(*f, "include_bmi", root + ".features", true);
  }

  if (const json* s = r.object(doc, "split", root)) {
    const std::string p = root + ".split";
    r.known_keys(*s, p, {"ratio", "seed"});
    c.split_ratio = r.number(*s, "ratio", p, 0.8);
    if (!(c.split_ratio > 0.0 && c.split_ratio < 1.0)) r.error(p + ".ratio", "must lie in (0, 1)");
    c.split_seed = r.seed(*s, "seed", p);
  }

  if (const json* cv = r.object(doc, "cv", root)) {
    const std::string p = root + ".cv";
    r.known_keys(*cv, p, {"folds", "metric", "max_rows"});
    c.cv_folds = r.count(*cv, "folds", p, 5, 2);
    c.cv_max_rows = r.count(*cv, "max_rows", p, 0);
    c.cv_metric = r.metric(*cv, "metric", p, c.cv_metric);
  }

  if (const json* m = r.object(doc, "metrics", root)) {
    const std::string p = root + ".metrics";
    r.known_keys(*m, p, {"threshold", "ece_bins"});
    c.threshold = r.number(*m, "threshold", p, 0.5);
    if (!(c.threshold >= 0.0 && c.threshold <= 1.0)) r.error(p + ".threshold", "must lie in [0, 1]");
    c.ece_bins = r.count(*m, "ece_bins", p, 10, 1);
  }

  if (doc.contains("learners")) {
    const json& list = doc.at("learners");
    if (!list.is_array() || list.empty()) {
      r.error(root + ".learners", "expected a non-empty array");
    } else {
      std::set<std::string> seen;
      for (std::size_t i = 0; i < list.size(); ++i) {
        const std::string p = root + ".learners[" + std::to_string(i) + "]";
        const json& item = list[i];
        if (!item.is_object()) {
          r.error(p, "expected an object");
          continue;
        }
        r.known_keys(item, p, {"kind", "hyperparameters", "seed", "search"});
        LearnerConfig lc;
        try {
          lc.spec.kind = learners::parse_learner_kind(r.text(item, "kind", p, ""));
        } catch (const ConfigError& e) {
          r.error(p + ".kind", e.what());
          continue;
        }
        if (!seen.insert(std::string(learners::to_string(lc.spec.kind))).second) {
          r.error(p + ".kind", "learner listed twice");
        }
        if (const json* hp = r.object(item, "hyperparameters", p)) {
          for (const auto& [name, value] : hp->items()) {
            if (!value.is_number()) {
              r.error(p + ".hyperparameters." + name, "expected a number");
              continue;
            }
            lc.spec.hyperparameters[name] = value.get<double>();
          }
        }
        try {
          lc.spec.validate();
        } catch (const ConfigError& e) {
          r.error(p + ".hyperparameters", e.what());
        }
        lc.seed = r.seed(item, "seed", p);
        if (const json* s = r.object(item, "search", p)) lc.search = parse_search(r, *s, p + ".search", lc.spec.kind);
        c.learners.push_back(std::move(lc));
      }
    }
  } else {
    for (auto kind : learners::all_learner_kinds()) c.learners.push_back({{kind, {}, 0}, std::nullopt, std::nullopt});
  }

  if (doc.contains("run_defaults")) c.run_defaults = r.boolean(doc, "run_defaults", root, true);

  if (const json* e = r.object(doc, "explain", root)) {
    const std::string p = root + ".explain";
    r.known_keys(*e, p, {"enabled", "model", "repeats", "metric", "background", "instances", "samples"});
    c.explain = r.boolean(*e, "enabled", p, true);
    c.explain_model = r.text(*e, "model", p, "auto");
    if (c.explain_model != "auto") {
      try {
        learners::parse_learner_kind(c.explain_model);
      } catch (const ConfigError& err) {
        r.error(p + ".model", err.what());
      }
    }
    c.importance_repeats = r.count(*e, "repeats", p, 10, 1);
    c.importance_metric = r.metric(*e, "metric", p, c.importance_metric);
    c.background_size = r.count(*e, "background", p, 256, 32);
    c.shapley_instances = r.count(*e, "instances", p, 5);
    c.shapley_samples = r.count(*e, "samples", p, 2048, 1);
  }

  if (const json* o = r.object(doc, "output", root)) {
    const std::string p = root + ".output";
    r.known_keys(*o, p, {"dir", "density_sample", "write_cleaned"});
    c.output_dir = r.text(*o, "dir", p, "out");
    c.density_sample = r.count(*o, "density_sample", p, 5000, 1);
    c.write_cleaned = r.boolean(*o, "write_cleaned", p, false);
  }

  if (!r.errors.empty()) {
    std::string message = origin + ": " + std::to_string(r.errors.size()) + " problem(s)";
    for (const auto& e : r.errors) message += "\n  " + e;
    throw ConfigError(message);
  }
  for (auto& l : c.learners) {
    l.spec.seed = l.seed ? *l.seed : c.stream_seed(std::string("learner:") + std::string(learners::to_string(l.spec.kind)));
  }
  return c;
}

RunConfig load_config(const std::string& path, bool check_paths) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read config '" + path + "'");
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_config(buffer.str(), path, check_paths);
}

void override_seed(RunConfig& config, std::uint64_t seed) {
  config.seed = seed;
  config.split_seed.reset();
  for (auto& l : config.learners) {
    l.seed.reset();
    l.spec.seed = config.stream_seed(std::string("learner:") + std::string(learners::to_string(l.spec.kind)));
  }
}

void restrict_learners(RunConfig& config, const std::string& ids) {
  std::vector<LearnerConfig> kept;
  for (const auto& raw : split(ids, ',')) {
    const auto id = std::string(trim(raw));
    if (id.empty()) continue;
    const auto kind = learners::parse_learner_kind(id);
    const auto it = std::find_if(config.learners.begin(), config.learners.end(),
                                 [&](const LearnerConfig& l) { return l.spec.kind == kind; });
    if (it == config.learners.end()) throw ConfigError("learner '" + id + "' is not configured");
    if (std::none_of(kept.begin(), kept.end(), [&](const LearnerConfig& l) { return l.spec.kind == kind; })) {
      kept.push_back(*it);
    }
  }
  if (kept.empty()) throw ConfigError("--models selected no learners");
  config.learners = std::move(kept);
}

std::string sha256_hex(const std::string& data) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int length = 0;
  if (EVP_Digest(data.data(), data.size(), digest, &length, EVP_sha256(), nullptr) != 1) {
    throw Error("sha256 digest failed");
  }
  static const char* hex = "0123456789abcdef";
  std::string out;
  out.reserve(length * 2);
  for (unsigned int i = 0; i < length; ++i) {
    out.push_back(hex[digest[i] >> 4]);
    out.push_back(hex[digest[i] & 0xF]);
  }
  return out;
}

}  // namespace cvd::report
