#pragma once

#include "replan/core.hpp"
#include "replan/dynamics.hpp"
#include "replan/envs.hpp"

#include <functional>
#include <vector>

namespace replan {

struct CemConfig {
  int population = 200;  // K candidate sequences per iteration
  int elite_count = 20;
  int iterations = 5;
  double init_std_fraction = 0.25;  // of the per-dimension action range
  double min_std = 1e-3;
  double alpha = 0.1;    // weight kept on the previous distribution
  double discount = 1.0;
  int threads = 1;       // candidate scoring fan-out

  void validate() const;
};

// Per-step Gaussian over action sequences; both arrays are H x d_a.
struct ActionDistribution {
  Mat mean;
  Mat stddev;
};

using RewardFn = std::function<double(const StateVec&, const ActionVec&)>;

// What the planner needs to know about a task; decouples planning from the
// simulator so tests can inject reward stubs.
struct PlanningProblem {
  Vec action_lo, action_hi;
  int horizon = 0;
  RewardFn reward;
};

PlanningProblem planning_problem(const EnvSpec& spec);

struct ScoredRollout {
  double score = 0.0;
  std::vector<StateVec> states;  // particle mean after each action
  std::vector<Vec> sigmas;       // pooled particle std after each action
  std::vector<double> rewards;   // particle-mean reward of each action
};

// Rolls P particles from s_init through the model (TS-infinity) and scores
// the sequence as the discounted sum of particle-mean rewards.
ScoredRollout score_action_sequence(const StateVec& s_init, const std::vector<ActionVec>& actions,
                                    const EnsembleModel& model, const PlanningProblem& prob,
                                    double discount, Rng& rng);

// Refits the sampling distribution to the top elite_count samples (ties
// broken by lower index), smoothing with weight alpha on the old
// distribution and flooring the std at min_std.
ActionDistribution cem_update(const ActionDistribution& dist, const std::vector<Mat>& samples,
                              const std::vector<double>& scores, const CemConfig& cfg);

// Full CEM loop; returns the trajectory built from the final distribution
// mean, re-scored once to populate predictions. Candidate k at iteration i
// draws from a stream derived from (rng, i, k), so scoring may fan out
// across threads without changing results.
ImaginedTrajectory compute_optimal_trajectory(const StateVec& s_init, const EnsembleModel& model,
                                              const PlanningProblem& prob, const CemConfig& cfg,
                                              Rng& rng, const Mat* warm_start_mean = nullptr);

}  // namespace replan
