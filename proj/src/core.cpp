#include "replan/core.hpp"

#include <cmath>
#include <limits>

namespace replan {

std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

Rng make_rng(std::uint64_t seed) { return Rng(mix64(seed)); }

Rng derive_rng(std::uint64_t seed, std::uint64_t a, std::uint64_t b) {
  return Rng(mix64(mix64(mix64(seed) ^ a) ^ b));
}

double uniform01(Rng& rng) {
  // 53-bit mantissa, shifted into the open interval (0, 1).
  return (static_cast<double>(rng() >> 11) + 0.5) * 0x1.0p-53;
}

double uniform_in(Rng& rng, double lo, double hi) {
  return lo + (hi - lo) * uniform01(rng);
}

double normal01(Rng& rng) {
  const double u1 = uniform01(rng);
  const double u2 = uniform01(rng);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
}

std::size_t uniform_index(Rng& rng, std::size_t n) {
  if (n == 0) throw std::invalid_argument("uniform_index: n must be positive");
  const std::uint64_t limit =
      std::numeric_limits<std::uint64_t>::max() -
      std::numeric_limits<std::uint64_t>::max() % static_cast<std::uint64_t>(n);
  std::uint64_t x;
  do {
    x = rng();
  } while (x >= limit);
  return static_cast<std::size_t>(x % static_cast<std::uint64_t>(n));
}

double euclidean_error(const StateVec& actual, const StateVec& predicted) {
  if (actual.size() != predicted.size())
    throw std::invalid_argument("euclidean_error: dimension mismatch");
  if (!actual.allFinite() || !predicted.allFinite())
    throw std::invalid_argument("euclidean_error: non-finite entries");
  return (actual - predicted).norm();
}

Vec clamp_to(const Vec& v, const Vec& lo, const Vec& hi) {
  return v.cwiseMax(lo).cwiseMin(hi);
}

ImaginedTrajectory::ImaginedTrajectory(StateVec origin, std::vector<ActionVec> actions,
                                       std::vector<StateVec> pred_states,
                                       std::vector<Vec> pred_sigmas,
                                       std::vector<double> pred_rewards)
    : origin_(std::move(origin)),
      actions_(std::move(actions)),
      pred_states_(std::move(pred_states)),
      pred_sigmas_(std::move(pred_sigmas)),
      pred_rewards_(std::move(pred_rewards)) {
  const std::size_t h = actions_.size();
  if (pred_states_.size() != h || pred_sigmas_.size() != h || pred_rewards_.size() != h)
    throw std::invalid_argument("ImaginedTrajectory: sequence lengths differ");
  for (const Vec& sig : pred_sigmas_)
    if ((sig.array() < 0.0).any())
      throw std::invalid_argument("ImaginedTrajectory: negative sigma entry");
}

TrajectoryStep ImaginedTrajectory::advance() {
  if (exhausted()) throw ExhaustedTrajectoryError();
  TrajectoryStep step{actions_[cursor_], pred_states_[cursor_], pred_sigmas_[cursor_],
                      pred_rewards_[cursor_]};
  ++cursor_;
  return step;
}

bool transitions_equal(const Transition& lhs, const Transition& rhs) {
  return lhs.s == rhs.s && lhs.a == rhs.a && lhs.s_next == rhs.s_next &&
         lhs.reward == rhs.reward;
}

void ReplayBuffer::push(Transition tr) {
  transitions_.push_back(std::move(tr));
  if (capacity_ && transitions_.size() > *capacity_) transitions_.pop_front();
}

std::vector<Transition> ReplayBuffer::bootstrap_sample(Rng& rng, std::size_t count) const {
  if (transitions_.empty()) throw EmptyBufferError();
  std::vector<Transition> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i)
    out.push_back(transitions_[uniform_index(rng, transitions_.size())]);
  return out;
}

}  // namespace replan
