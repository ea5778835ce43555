#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <deque>
#include <optional>
#include <random>
#include <stdexcept>
#include <vector>

namespace replan {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

// Environment state and action are plain real vectors; dimensions are owned
// by the environment spec and validated at operation boundaries.
using StateVec = Vec;
using ActionVec = Vec;

// ---------------------------------------------------------------------------
// Error types
// ---------------------------------------------------------------------------

struct ExhaustedTrajectoryError : std::runtime_error {
  ExhaustedTrajectoryError() : std::runtime_error("trajectory exhausted, recompute required") {}
};

struct EmptyBufferError : std::runtime_error {
  EmptyBufferError() : std::runtime_error("replay buffer is empty") {}
};

struct InsufficientDataError : std::runtime_error {
  explicit InsufficientDataError(const std::string& what) : std::runtime_error(what) {}
};

struct InvalidConfigError : std::runtime_error {
  explicit InvalidConfigError(const std::string& what) : std::runtime_error(what) {}
};

struct EpisodeFinishedError : std::runtime_error {
  EpisodeFinishedError() : std::runtime_error("episode has reached its task horizon") {}
};

struct CorruptCheckpointError : std::runtime_error {
  explicit CorruptCheckpointError(const std::string& what) : std::runtime_error(what) {}
};

struct MissingArtifactError : std::runtime_error {
  explicit MissingArtifactError(const std::string& what) : std::runtime_error(what) {}
};

// ---------------------------------------------------------------------------
// Randomness
//
// Every random decision flows through an explicitly seeded Rng handle; there
// is no global generator. Sub-streams are derived by hashing (seed, a, b) so
// that fan-out (CEM candidates, sweep cells) is order-independent.
// ---------------------------------------------------------------------------

using Rng = std::mt19937_64;

// splitmix64 finalizer; good avalanche for stream derivation.
std::uint64_t mix64(std::uint64_t x);

Rng make_rng(std::uint64_t seed);
Rng derive_rng(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0);

// Uniform double in (0, 1); never returns an endpoint.
double uniform01(Rng& rng);
double uniform_in(Rng& rng, double lo, double hi);
// Standard normal via Box-Muller on two uniforms; no cached state.
double normal01(Rng& rng);
// Unbiased integer in [0, n) by rejection.
std::size_t uniform_index(Rng& rng, std::size_t n);

// ---------------------------------------------------------------------------
// Error metric
// ---------------------------------------------------------------------------

// l2 distance between an observed and a predicted state.
double euclidean_error(const StateVec& actual, const StateVec& predicted);

// Elementwise clamp of v into [lo, hi].
Vec clamp_to(const Vec& v, const Vec& lo, const Vec& hi);

// ---------------------------------------------------------------------------
// Imagined trajectory
// ---------------------------------------------------------------------------

struct TrajectoryStep {
  ActionVec action;
  StateVec pred_state;   // predicted state after executing `action`
  Vec pred_sigma;        // per-dimension std of the prediction
  double pred_reward;    // predicted reward of executing `action`
};

// Planner output over horizon H. Elements are consumed strictly in order via
// advance(); an executed element can never be read again.
class ImaginedTrajectory {
 public:
  ImaginedTrajectory() = default;
  ImaginedTrajectory(StateVec origin, std::vector<ActionVec> actions,
                     std::vector<StateVec> pred_states, std::vector<Vec> pred_sigmas,
                     std::vector<double> pred_rewards);

  int horizon() const { return static_cast<int>(actions_.size()); }
  int cursor() const { return cursor_; }
  bool exhausted() const { return cursor_ >= horizon(); }
  const StateVec& origin_state() const { return origin_; }

  // Returns the element at the cursor and moves past it.
  TrajectoryStep advance();

 private:
  StateVec origin_;
  std::vector<ActionVec> actions_;
  std::vector<StateVec> pred_states_;
  std::vector<Vec> pred_sigmas_;
  std::vector<double> pred_rewards_;
  int cursor_ = 0;
};

// ---------------------------------------------------------------------------
// Replay buffer
// ---------------------------------------------------------------------------

struct Transition {
  StateVec s;
  ActionVec a;
  StateVec s_next;
  double reward = 0.0;
};

bool transitions_equal(const Transition& lhs, const Transition& rhs);

// Append-only transition store. Unbounded by default; with a capacity the
// oldest entries are evicted first.
class ReplayBuffer {
 public:
  ReplayBuffer() = default;
  explicit ReplayBuffer(std::size_t capacity) : capacity_(capacity) {}

  void push(Transition tr);
  std::size_t size() const { return transitions_.size(); }
  bool empty() const { return transitions_.empty(); }
  const Transition& operator[](std::size_t i) const { return transitions_[i]; }
  std::optional<std::size_t> capacity() const { return capacity_; }

  // `count` transitions drawn uniformly with replacement (bagging resample).
  std::vector<Transition> bootstrap_sample(Rng& rng, std::size_t count) const;

 private:
  std::deque<Transition> transitions_;
  std::optional<std::size_t> capacity_;
};

}  // namespace replan
