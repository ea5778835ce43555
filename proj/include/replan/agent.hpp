#pragma once

#include "replan/core.hpp"
#include "replan/dynamics.hpp"
#include "replan/envs.hpp"
#include "replan/planner.hpp"
#include "replan/skip.hpp"

#include <optional>
#include <string>
#include <vector>

namespace replan {

// Per-episode trace. skip_depths holds, for every executed step, the number
// of steps executed since the last planner call (0 on replan steps).
struct EpisodeRecord {
  double total_reward = 0.0;
  int recalc_count = 0;  // Rc
  std::vector<int> skip_depths;
  std::vector<double> step_errors;  // euclidean error vs the stored prediction
  std::vector<double> step_rewards;
  std::uint64_t seed = 0;
  double wall_seconds = 0.0;  // duration of this iteration (training + acting)

  int steps() const { return static_cast<int>(step_rewards.size()); }
  double recalc_pct() const {
    return steps() == 0 ? 0.0 : 100.0 * recalc_count / static_cast<double>(steps());
  }
  // Mean depth of used trajectories, counted at replan events: each planner
  // call records how many extra steps the trajectory it replaces delivered;
  // an episode's trailing trajectory is never finalized and counts as 0.
  double sx() const;
  double mean_error() const;
  double std_error() const;
};

struct AgentConfig {
  std::string env = "cartpole";
  CemConfig planner;
  SkipPolicyConfig skip;
  ModelConfig model;
  TrainConfig train;
  int n_iterations = 1;
  bool train_model = false;
  std::uint64_t seed = 0;
  int task_horizon_override = 0;  // > 0 shortens episodes (tests, quick runs)

  void validate() const;
  EnvSpec env_spec() const;  // applies the horizon override
};

// One episode of uniform random actions; transitions go into the buffer.
void seed_buffer_with_random_episode(EnvInstance& env, ReplayBuffer& buffer, Rng& rng);

// Step-0 errors from replaying buffer transitions through the model
// (ensemble-mean one-step prediction vs the recorded next state).
ErrorModel build_step0_error_model(const EnsembleModel& model, const ReplayBuffer& buffer,
                                   double significance = 0.05);

// Classic MBRL loop: train (optionally), then replan at every step and
// execute only the first action. Seeds the buffer with one random-controller
// episode when training from an empty buffer.
std::vector<EpisodeRecord> run_mbrl(const AgentConfig& cfg, EnsembleModel& model,
                                    ReplayBuffer& buffer, Rng& rng);

// Same loop but a skip policy decides, after every executed action, whether
// the current trajectory can keep being acted upon. Replanning happens when
// the policy says recompute or the trajectory is exhausted. FSA requires an
// error model.
std::vector<EpisodeRecord> run_skipping(const AgentConfig& cfg, EnsembleModel& model,
                                        ReplayBuffer& buffer, const ErrorModel* err_model,
                                        Rng& rng);

struct OnlineIterationStats {
  int iteration = 0;
  double reward = 0.0;
  double recalc_pct = 0.0;
  double err_mean = 0.0;
  double err_std = 0.0;
  double wall_seconds = 0.0;  // cumulative within the run
};

// Trains the dynamics model from scratch while skipping with the CB policy;
// requires cfg.train_model and skip.kind == cb.
std::vector<OnlineIterationStats> run_online_skipping(const AgentConfig& cfg, Rng& rng);

}  // namespace replan
