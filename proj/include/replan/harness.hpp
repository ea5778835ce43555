#pragma once

#include "replan/agent.hpp"

#include <string>
#include <utility>
#include <vector>

namespace replan {

// Paper-style hyperparameter grids; the example configs in the repository
// use reduced subsets so runs finish at desk scale.
struct SweepLists {
  std::vector<int> nskip_n;
  std::vector<double> fsa_c;
  std::vector<double> cb_c;

  static SweepLists defaults();
};

struct ExperimentConfig {
  std::string experiment = "sweep";  // pretrain | error-analysis | sweep | online
  AgentConfig agent;
  SweepLists sweep = SweepLists::defaults();
  int runs_per_setting = 10;
  std::string output_dir = "out";
  std::string checkpoint;  // pretrained model+buffer for error-analysis/sweep
  int pretrain_restarts = 5;
  int workers = 1;  // (setting, run) cell fan-out
};

ExperimentConfig load_config_file(const std::string& path);
ExperimentConfig parse_config_json(const std::string& text);

// One aggregated line of a sweep: reward, recalculation and skip-depth
// statistics over runs_per_setting seeded evaluations.
struct ResultRow {
  std::string method;
  double Rw = 0, RwSTD = 0, Rc = 0, RcSTD = 0, Sx = 0, SxSTD = 0;
  double RwMin = 0, RwMax = 0, Err = 0, ErrSTD = 0;
  double RwNorm = 0;  // min-max normalized over all rows of the run
};

struct ErrorAnalysisRow {
  int n = 0;
  int step_index = 0;
  double mean_err = 0, std_err = 0, min_err = 0, max_err = 0;
};

struct OnlineRow {
  std::string method;
  int iteration = 0;
  double wall_seconds = 0;
  double reward_mean = 0, reward_min = 0, reward_max = 0;
  double recalc_pct = 0;
  double err_mean = 0, err_std = 0;
};

// ---------------------------------------------------------------------------
// Checkpoint persistence: "AUIM" magic, version, ensemble layout and
// normalization, float32 weight arrays per member, then the replay buffer as
// float32 transition rows. Weights are float32-representable in memory, so a
// round trip reproduces forward passes bit-exactly.
// ---------------------------------------------------------------------------

void save_checkpoint(const EnsembleModel& model, const ReplayBuffer& buffer,
                     const std::string& path);
std::pair<EnsembleModel, ReplayBuffer> load_checkpoint(const std::string& path);

// ---------------------------------------------------------------------------
// Experiment drivers. Each writes CSV files under cfg.output_dir and returns
// the rows it wrote.
// ---------------------------------------------------------------------------

// Repeated from-scratch training, keeping the model with the best final
// episode; writes checkpoint.bin, e0_errors.csv, pretrain_summary.csv.
std::string run_pretrain(const ExperimentConfig& cfg);

// Error of stored predictions binned by steps-since-replan for each nskip n;
// writes error_analysis.csv.
std::vector<ErrorAnalysisRow> run_error_analysis(const ExperimentConfig& cfg);

// Seeded evaluations for baseline, nskip, fsa and cb settings; writes
// sweep.csv.
std::vector<ResultRow> run_sweep(const ExperimentConfig& cfg);

// From-scratch training series for baseline and each cb setting; writes
// online.csv.
std::vector<OnlineRow> run_online(const ExperimentConfig& cfg);

// ---------------------------------------------------------------------------
// CSV helpers (doubles are printed with enough digits to re-parse exactly).
// ---------------------------------------------------------------------------

std::string format_double(double v);
std::vector<std::vector<std::string>> parse_csv(const std::string& path);
void write_error_model_csv(const ErrorModel& model, const std::string& path);

}  // namespace replan
