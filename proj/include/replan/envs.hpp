#pragma once

#include "replan/core.hpp"

#include <string>
#include <utility>

namespace replan {

// Static description of a control task: dimensions, horizons, action bounds
// and the integration step. Physical constants live with each environment's
// dynamics in envs.cpp and are not tunable per experiment.
struct EnvSpec {
  std::string name;
  int d_s = 0;
  int d_a = 0;
  int task_horizon = 0;  // TaskH, steps per episode
  int plan_horizon = 0;  // H, imagined-trajectory length
  Vec action_lo, action_hi;
  double dt = 0.0;
  double reset_noise = 0.05;  // half-width of the uniform start perturbation
};

// Known environments: "cartpole" (swing-up, d_s 4), "pendulum" (d_s 3,
// cos/sin/thetadot observation), "reacher2" (2-link planar arm, d_s 6).
EnvSpec make_env_spec(const std::string& name);

StateVec nominal_start(const EnvSpec& spec);

// Known closed-form reward of executing `a` at `s`. Pure function.
double reward_fn(const EnvSpec& spec, const StateVec& s, const ActionVec& a);

// Upper bound of the reward over the whole state/action space.
double reward_upper_bound(const EnvSpec& spec);

// One episode's worth of simulator state. Deterministic: step() is a pure
// function of (state, action) given the spec.
class EnvInstance {
 public:
  explicit EnvInstance(EnvSpec spec);

  const EnvSpec& spec() const { return spec_; }
  const StateVec& state() const { return state_; }
  int step_count() const { return step_count_; }
  int clamp_warnings() const { return clamp_warnings_; }

  // Nominal start plus per-coordinate uniform perturbation; zeroes step_count.
  StateVec reset(std::uint64_t seed);

  // Places the instance at an arbitrary state without touching step_count.
  void set_state(const StateVec& s);

  // Advances one dt with fixed-step RK4; returns (next state, reward).
  // Out-of-bounds actions are clamped and counted; stepping a finished
  // episode throws EpisodeFinishedError.
  std::pair<StateVec, double> step(const ActionVec& a);

 private:
  EnvSpec spec_;
  StateVec state_;
  int step_count_ = 0;
  int clamp_warnings_ = 0;
};

}  // namespace replan
