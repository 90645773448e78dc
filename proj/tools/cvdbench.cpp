// cvdbench: command line front end for the cardiovascular risk pipeline.

#include <cstdint>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "cvdbench/common.hpp"
#include "cvdbench/report/config.hpp"
#include "cvdbench/report/pipeline.hpp"

namespace {

struct Options {
  std::string config;
  std::string out;
  std::optional<std::uint64_t> seed;
  std::string models;
};

void print_summary(const cvd::report::RunResult& r) {
  std::cout << "records: " << r.raw_records << " parsed, " << r.rejected << " rejected, " << r.cleaned
            << " after cleaning\n";
  if (r.train_rows + r.test_rows > 0) {
    std::cout << "split: " << r.train_rows << " train / " << r.test_rows << " test\n";
  }
  for (const auto& l : r.learners) {
    std::cout << l.name;
    if (l.tuned) std::cout << "  tuned by " << l.best_strategy << " (cv " << cvd::format_fixed(l.best_cv_score, 4) << ")";
    if (l.eval) {
      std::cout << "  acc " << cvd::format_fixed(l.eval->threshold.accuracy, 4) << "  auc "
                << cvd::format_fixed(l.eval->auc, 4) << "  ece " << cvd::format_fixed(l.eval->ece, 4);
    }
    std::cout << '\n';
  }
  if (!r.explained_model.empty()) std::cout << "explained: " << r.explained_model << '\n';
  for (const auto& [stage, seconds] : r.timings) std::cout << "  " << stage << ": " << cvd::format_fixed(seconds, 2) << " s\n";
  std::cout << "bundle: " << r.output_dir << " (config " << r.config_hash.substr(0, 12) << ")\n";
}

int execute(const std::string& command, const Options& opt) {
  using namespace cvd::report;
  auto config = load_config(opt.config, true);
  if (opt.seed) override_seed(config, *opt.seed);
  if (!opt.models.empty()) restrict_learners(config, opt.models);
  if (!opt.out.empty()) config.output_dir = opt.out;

  if (command == "validate") {
    std::cout << "config ok: " << config.learners.size() << " learners, hash " << config.hash() << '\n';
    return 0;
  }
  const auto result = run(config, StageSet::for_command(command));
  print_summary(result);
  if (!result.ok) {
    std::cerr << "stage '" << result.failed_stage << "' failed: " << result.error << '\n';
    return 1;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Cardiovascular disease risk modelling pipeline"};
  app.require_subcommand(1);
  Options opt;
  const std::pair<const char*, const char*> commands[] = {
      {"validate", "check a run configuration"},
      {"ingest", "load, validate and clean the data"},
      {"stats", "run the statistical test battery"},
      {"train", "fit every learner with its configured hyperparameters"},
      {"tune", "search hyperparameters and fit the winners"},
      {"evaluate", "tune, then score on the held-out split"},
      {"explain", "evaluate, then compute importances and attributions"},
      {"run", "all stages"},
  };
  for (const auto& [name, help] : commands) {
    auto* sub = app.add_subcommand(name, help);
    sub->add_option("--config", opt.config, "run configuration (JSON)")->required()->check(CLI::ExistingFile);
    sub->add_option("--out", opt.out, "output directory (overrides the config)");
    sub->add_option("--seed", opt.seed, "run seed (overrides the config and its sub-seeds)");
    sub->add_option("--models", opt.models, "comma separated learner ids to keep");
  }
  CLI11_PARSE(app, argc, argv);

  const std::string command = app.get_subcommands().front()->get_name();
  try {
    return execute(command, opt);
  } catch (const cvd::ConfigError& e) {
    std::cerr << "invalid configuration:\n" << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
