#include "replan/planner.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <numeric>
#include <thread>

namespace replan {
namespace {

// Score-only rollout core; `detail` may be null during CEM iterations where
// only the scalar score is needed.
double rollout(const StateVec& s_init, const Mat& actions, const EnsembleModel& model,
               const PlanningProblem& prob, double discount, Rng& rng,
               ScoredRollout* detail) {
  const int H = static_cast<int>(actions.rows());
  ParticleSet ps =
      ParticleSet::init(s_init, model.config().particles, model.member_count());
  const int P = static_cast<int>(ps.states.rows());

  double score = 0.0;
  double gamma = 1.0;
  ActionVec a;
  for (int h = 0; h < H; ++h) {
    a = actions.row(h).transpose();
    double r_sum = 0.0;
    for (int p = 0; p < P; ++p) r_sum += prob.reward(ps.states.row(p).transpose(), a);
    const double r_mean = r_sum / static_cast<double>(P);
    score += gamma * r_mean;
    gamma *= discount;

    particle_propagate(ps, a, model, rng);

    if (detail != nullptr) {
      auto [mean, sigma] = aggregate_confidence(ps);
      detail->states.push_back(std::move(mean));
      detail->sigmas.push_back(std::move(sigma));
      detail->rewards.push_back(r_mean);
    }
  }
  if (detail != nullptr) detail->score = score;
  return score;
}

Mat sample_sequence(const ActionDistribution& dist, const Vec& lo, const Vec& hi, Rng& rng) {
  Mat a(dist.mean.rows(), dist.mean.cols());
  for (Eigen::Index h = 0; h < a.rows(); ++h)
    for (Eigen::Index d = 0; d < a.cols(); ++d)
      a(h, d) = std::clamp(dist.mean(h, d) + dist.stddev(h, d) * normal01(rng), lo[d], hi[d]);
  return a;
}

}  // namespace

void CemConfig::validate() const {
  if (population < 1 || elite_count < 1 || elite_count > population)
    throw InvalidConfigError("cem: need 1 <= elite_count <= population");
  if (iterations < 1) throw InvalidConfigError("cem: iterations >= 1");
  if (min_std <= 0.0) throw InvalidConfigError("cem: min_std > 0");
  if (alpha < 0.0 || alpha > 1.0) throw InvalidConfigError("cem: alpha in [0,1]");
  if (threads < 1) throw InvalidConfigError("cem: threads >= 1");
}

PlanningProblem planning_problem(const EnvSpec& spec) {
  PlanningProblem prob;
  prob.action_lo = spec.action_lo;
  prob.action_hi = spec.action_hi;
  prob.horizon = spec.plan_horizon;
  prob.reward = [spec](const StateVec& s, const ActionVec& a) {
    return reward_fn(spec, s, a);
  };
  return prob;
}

ScoredRollout score_action_sequence(const StateVec& s_init, const std::vector<ActionVec>& actions,
                                    const EnsembleModel& model, const PlanningProblem& prob,
                                    double discount, Rng& rng) {
  Mat a(actions.size(), actions.empty() ? 0 : actions[0].size());
  for (std::size_t h = 0; h < actions.size(); ++h) a.row(h) = actions[h].transpose();
  ScoredRollout out;
  rollout(s_init, a, model, prob, discount, rng, &out);
  return out;
}

ActionDistribution cem_update(const ActionDistribution& dist, const std::vector<Mat>& samples,
                              const std::vector<double>& scores, const CemConfig& cfg) {
  if (samples.size() != scores.size() || samples.empty())
    throw std::invalid_argument("cem_update: samples/scores size mismatch");

  std::vector<std::size_t> order(samples.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&scores](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });

  const std::size_t e = static_cast<std::size_t>(cfg.elite_count);
  Mat elite_mean = Mat::Zero(dist.mean.rows(), dist.mean.cols());
  for (std::size_t i = 0; i < e; ++i) elite_mean += samples[order[i]];
  elite_mean /= static_cast<double>(e);

  Mat elite_var = Mat::Zero(dist.mean.rows(), dist.mean.cols());
  for (std::size_t i = 0; i < e; ++i)
    elite_var += (samples[order[i]] - elite_mean).array().square().matrix();
  elite_var /= static_cast<double>(e);

#ifndef NDEBUG
  // Elite quality is monotone by construction.
  double elite_sum = 0.0, total_sum = 0.0;
  for (std::size_t i = 0; i < e; ++i) elite_sum += scores[order[i]];
  for (double s : scores) total_sum += s;
  assert(elite_sum / static_cast<double>(e) >=
         total_sum / static_cast<double>(scores.size()) - 1e-12);
#endif

  ActionDistribution next;
  next.mean = cfg.alpha * dist.mean + (1.0 - cfg.alpha) * elite_mean;
  next.stddev = (cfg.alpha * dist.stddev + (1.0 - cfg.alpha) * elite_var.cwiseSqrt())
                    .cwiseMax(cfg.min_std);
  return next;
}

ImaginedTrajectory compute_optimal_trajectory(const StateVec& s_init, const EnsembleModel& model,
                                              const PlanningProblem& prob, const CemConfig& cfg,
                                              Rng& rng, const Mat* warm_start_mean) {
  cfg.validate();
  if (!s_init.allFinite())
    throw std::invalid_argument("compute_optimal_trajectory: non-finite state");

  const int H = prob.horizon;
  const int d_a = static_cast<int>(prob.action_lo.size());
  const Vec range = prob.action_hi - prob.action_lo;

  ActionDistribution dist;
  if (warm_start_mean != nullptr) {
    dist.mean = *warm_start_mean;
    for (int h = 0; h < H; ++h)
      dist.mean.row(h) =
          clamp_to(dist.mean.row(h).transpose(), prob.action_lo, prob.action_hi).transpose();
  } else {
    dist.mean = (0.5 * (prob.action_lo + prob.action_hi)).transpose().replicate(H, 1);
  }
  dist.stddev =
      (cfg.init_std_fraction * range).cwiseMax(cfg.min_std).transpose().replicate(H, 1);

  // One base draw per planning call; every candidate stream derives from it.
  const std::uint64_t base = rng();

  std::vector<Mat> samples(cfg.population);
  std::vector<double> scores(cfg.population);
  for (int iter = 0; iter < cfg.iterations; ++iter) {
    auto eval_range = [&](int k_begin, int k_end) {
      for (int k = k_begin; k < k_end; ++k) {
        Rng stream = derive_rng(base, static_cast<std::uint64_t>(iter),
                                static_cast<std::uint64_t>(k));
        samples[k] = sample_sequence(dist, prob.action_lo, prob.action_hi, stream);
        scores[k] = rollout(s_init, samples[k], model, prob, cfg.discount, stream, nullptr);
      }
    };
    if (cfg.threads <= 1) {
      eval_range(0, cfg.population);
    } else {
      const int workers = std::min(cfg.threads, cfg.population);
      std::vector<std::thread> pool;
      pool.reserve(workers);
      const int chunk = (cfg.population + workers - 1) / workers;
      for (int w = 0; w < workers; ++w) {
        const int lo = w * chunk, hi = std::min(cfg.population, lo + chunk);
        if (lo < hi) pool.emplace_back(eval_range, lo, hi);
      }
      for (auto& t : pool) t.join();
    }
    dist = cem_update(dist, samples, scores, cfg);
  }

  Mat best(H, d_a);
  for (int h = 0; h < H; ++h)
    best.row(h) =
        clamp_to(dist.mean.row(h).transpose(), prob.action_lo, prob.action_hi).transpose();

  ScoredRollout detail;
  Rng final_stream = derive_rng(base, static_cast<std::uint64_t>(cfg.iterations), 0);
  rollout(s_init, best, model, prob, cfg.discount, final_stream, &detail);

  std::vector<ActionVec> action_seq(H);
  for (int h = 0; h < H; ++h) action_seq[h] = best.row(h).transpose();
  return ImaginedTrajectory(s_init, std::move(action_seq), std::move(detail.states),
                            std::move(detail.sigmas), std::move(detail.rewards));
}

}  // namespace replan
