#pragma once

#include "replan/core.hpp"

#include <utility>
#include <vector>

namespace replan {

struct ModelConfig {
  int hidden = 64;     // units in each of the two hidden layers
  int members = 5;     // ensemble size B
  int particles = 20;  // particle count P, multiple of members
  double logvar_min = -10.0;
  double logvar_max = 0.5;
};

// Smooth two-sided bound on the emitted log-variance:
//   x -> lo + softplus(hi - softplus(hi - x) - lo)
double soft_clamp_logvar(double raw, double lo, double hi);

// Feed-forward regressor with a diagonal-Gaussian head over state deltas.
// Layers [d_in, hidden, hidden, 2*d_s], swish activations. Operates in
// normalized input/target space; de-normalization lives in EnsembleModel.
// All parameters are kept exactly representable in float32 so checkpoints
// round-trip bit-exactly.
struct GaussianNet {
  Mat w1, w2, w3;  // (hidden x d_in), (hidden x hidden), (2*d_s x hidden)
  Vec b1, b2, b3;
  double logvar_min = -10.0;
  double logvar_max = 0.5;

  static GaussianNet random(int d_in, int hidden, int d_s, double logvar_min,
                            double logvar_max, Rng& rng);

  int input_dim() const { return static_cast<int>(w1.cols()); }
  int hidden_dim() const { return static_cast<int>(b1.size()); }
  int state_dim() const { return static_cast<int>(b3.size()) / 2; }

  // Rows of Xn are samples; fills mu and the clamped logvar (both n x d_s).
  void forward(const Mat& Xn, Mat& mu, Mat& logvar) const;
};

struct NetGradients {
  Mat w1, w2, w3;
  Vec b1, b2, b3;
  static NetGradients zeros_like(const GaussianNet& net);
};

// Batch-mean Gaussian NLL (constant term omitted) in normalized space, plus
// parameter gradients via backpropagation when `grads` is non-null.
double nll_forward_backward(const GaussianNet& net, const Mat& Xn, const Mat& Tn,
                            NetGradients* grads);

// Sum over dimensions of 0.5*(log var + (target - mu)^2 / var).
double nll_loss(const Vec& mu, const Vec& var, const Vec& target);

// Affine standardization of model inputs (s, a) and targets (delta s).
struct Normalization {
  Vec in_mu, in_sigma;
  Vec t_mu, t_sigma;
  static Normalization identity(int d_in, int d_s);
};

// B independently initialized GaussianNets plus shared normalization.
class EnsembleModel {
 public:
  static EnsembleModel random(int d_s, int d_a, const ModelConfig& cfg, Rng& rng);

  int state_dim() const { return d_s_; }
  int action_dim() const { return d_a_; }
  int member_count() const { return static_cast<int>(members_.size()); }
  const ModelConfig& config() const { return cfg_; }

  const Normalization& norm() const { return norm_; }
  Normalization& norm() { return norm_; }
  const std::vector<GaussianNet>& members() const { return members_; }
  std::vector<GaussianNet>& members() { return members_; }

  // Rows of X are raw (s, a) pairs; outputs are de-normalized: mu_delta is
  // the predicted state delta, var its variance (both n x d_s, var > 0).
  void predict(int member, const Mat& X, Mat& mu_delta, Mat& var) const;

  // Single-sample convenience; throws on non-finite input.
  std::pair<Vec, Vec> forward_one(int member, const StateVec& s, const ActionVec& a) const;

 private:
  EnsembleModel(int d_s, int d_a, ModelConfig cfg);
  int d_s_ = 0, d_a_ = 0;
  ModelConfig cfg_;
  Normalization norm_;
  std::vector<GaussianNet> members_;
};

// TS-infinity particle state: each particle is bound to one ensemble member
// for the whole rollout. Particles of member b occupy the contiguous row
// block [b*(P/B), (b+1)*(P/B)).
struct ParticleSet {
  Mat states;                   // P x d_s
  std::vector<int> assignment;  // particle -> member, immutable per rollout

  static ParticleSet init(const StateVec& s, int particles, int members);
};

// One stochastic model step for every particle through its own member.
// Noise is drawn particle-major, dimension-minor from `rng`.
void particle_propagate(ParticleSet& ps, const ActionVec& a, const EnsembleModel& model,
                        Rng& rng);

// Aleatoric: mean over members of the within-member particle variance.
// Epistemic: variance over members of the member-mean particles.
// Population variance convention throughout.
std::pair<Vec, Vec> variance_decompose(const ParticleSet& ps);

// Pooled mean and per-dimension std over all particles; the std carries both
// uncertainty kinds.
std::pair<StateVec, Vec> aggregate_confidence(const ParticleSet& ps);

struct TrainConfig {
  int epochs = 20;  // passes per agent-level train call
  int batch_size = 32;
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_eps = 1e-8;
};

// Holds per-member Adam state across epochs. One train_epoch call runs a
// single pass per member over that member's own bootstrap resample.
class EnsembleTrainer {
 public:
  explicit EnsembleTrainer(TrainConfig cfg) : cfg_(std::move(cfg)) {}

  const TrainConfig& config() const { return cfg_; }

  // Refreshes normalization from the buffer, then trains each member for one
  // pass. Returns the per-member mean NLL over the pass. Deterministic given
  // the rng state. Throws InsufficientDataError if the buffer is smaller
  // than one batch.
  std::vector<double> train_epoch(EnsembleModel& model, const ReplayBuffer& buffer, Rng& rng);

 private:
  struct AdamState {
    NetGradients m, v;
    long step = 0;
  };
  TrainConfig cfg_;
  std::vector<AdamState> opt_;
};

// Recomputed buffer statistics (population moments); zero-variance
// dimensions fall back to unit scale.
Normalization compute_normalization(const ReplayBuffer& buffer, int d_s, int d_a);

}  // namespace replan
