#include "replan/harness.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <exception>

namespace {

struct CliOptions {
  std::string config_path;
  std::string out_dir;
  std::int64_t seed = -1;
};

replan::ExperimentConfig load(const CliOptions& opt, const std::string& experiment) {
  replan::ExperimentConfig cfg = replan::load_config_file(opt.config_path);
  cfg.experiment = experiment;
  if (!opt.out_dir.empty()) cfg.output_dir = opt.out_dir;
  if (opt.seed >= 0) cfg.agent.seed = static_cast<std::uint64_t>(opt.seed);
  return cfg;
}

void add_common(CLI::App* cmd, CliOptions& opt) {
  cmd->add_option("--config", opt.config_path, "JSON experiment config")
      ->required()
      ->check(CLI::ExistingFile);
  cmd->add_option("--out", opt.out_dir, "output directory (overrides config)");
  cmd->add_option("--seed", opt.seed, "seed override");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"model-based RL with uncertainty-gated replanning"};
  app.require_subcommand(1);

  CliOptions opt;
  CLI::App* pretrain = app.add_subcommand("pretrain", "train ensembles, keep the best");
  CLI::App* error_analysis =
      app.add_subcommand("error-analysis", "prediction error vs steps since replan");
  CLI::App* sweep = app.add_subcommand("sweep", "reward/recalc sweep over skip settings");
  CLI::App* online = app.add_subcommand("online", "train while skipping with cb");
  for (CLI::App* cmd : {pretrain, error_analysis, sweep, online}) add_common(cmd, opt);

  CLI11_PARSE(app, argc, argv);

  try {
    if (pretrain->parsed()) {
      const std::string path = replan::run_pretrain(load(opt, "pretrain"));
      std::printf("checkpoint written to %s\n", path.c_str());
    } else if (error_analysis->parsed()) {
      const auto rows = replan::run_error_analysis(load(opt, "error-analysis"));
      std::printf("error_analysis.csv: %zu rows\n", rows.size());
    } else if (sweep->parsed()) {
      const auto rows = replan::run_sweep(load(opt, "sweep"));
      std::printf("sweep.csv: %zu rows\n", rows.size());
    } else if (online->parsed()) {
      const auto rows = replan::run_online(load(opt, "online"));
      std::printf("online.csv: %zu rows\n", rows.size());
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
