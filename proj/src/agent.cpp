#include "replan/agent.hpp"

#include <chrono>
#include <cmath>

namespace replan {
namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

bool evaluate_skip(const SkipPolicyConfig& policy, const ErrorModel* err_model,
                   int steps_since_recalc, double eps, const StateVec& s_actual,
                   const StateVec& s_pred, const Vec& sigma) {
  switch (policy.kind) {
    case SkipPolicyConfig::Kind::NSkip:
      return nskip_should_skip(steps_since_recalc, policy.n);
    case SkipPolicyConfig::Kind::Fsa:
      return fsa_should_skip(*err_model, eps, policy.c);
    case SkipPolicyConfig::Kind::Cb:
      return cb_should_skip(s_actual, s_pred, sigma, policy.c);
  }
  return false;
}

// Shared episode body for both loops. With `policy` null the trajectory is
// recomputed at every step (Algorithm-1 behaviour); otherwise the policy is
// consulted after every executed action and a replan is forced on
// exhaustion.
EpisodeRecord run_episode(EnvInstance& env, EnsembleModel& model, ReplayBuffer& buffer,
                          const PlanningProblem& prob, const CemConfig& planner_cfg,
                          const SkipPolicyConfig* policy, const ErrorModel* err_model,
                          std::uint64_t episode_seed, Rng& rng) {
  EpisodeRecord rec;
  rec.seed = episode_seed;
  env.reset(episode_seed);

  bool skip = false;
  std::optional<ImaginedTrajectory> traj;
  int since_recalc = 0;

  const int task_h = env.spec().task_horizon;
  for (int t = 0; t < task_h; ++t) {
    if (!skip || !traj || traj->exhausted()) {
      traj = compute_optimal_trajectory(env.state(), model, prob, planner_cfg, rng);
      ++rec.recalc_count;
      since_recalc = 0;
    } else {
      ++since_recalc;
    }

    const StateVec s = env.state();
    TrajectoryStep step = traj->advance();
    auto [s_next, reward] = env.step(step.action);
    buffer.push({s, step.action, s_next, reward});

    const double eps = euclidean_error(s_next, step.pred_state);
    rec.skip_depths.push_back(since_recalc);
    rec.step_errors.push_back(eps);
    rec.step_rewards.push_back(reward);
    rec.total_reward += reward;

    skip = policy != nullptr &&
           evaluate_skip(*policy, err_model, since_recalc, eps, s_next, step.pred_state,
                         step.pred_sigma);
  }
  return rec;
}

std::vector<EpisodeRecord> run_loop(const AgentConfig& cfg, EnsembleModel& model,
                                    ReplayBuffer& buffer, const SkipPolicyConfig* policy,
                                    const ErrorModel* err_model, Rng& rng) {
  cfg.validate();
  if (policy != nullptr && policy->kind == SkipPolicyConfig::Kind::Fsa &&
      err_model == nullptr)
    throw InvalidConfigError("FSA skip policy requires an error model");

  const EnvSpec spec = cfg.env_spec();
  EnvInstance env(spec);
  const PlanningProblem prob = planning_problem(spec);
  EnsembleTrainer trainer(cfg.train);

  if (cfg.train_model && buffer.empty()) {
    env.reset(derive_rng(cfg.seed, 0x696e6974ULL)());
    seed_buffer_with_random_episode(env, buffer, rng);
  }

  std::vector<EpisodeRecord> records;
  records.reserve(cfg.n_iterations);
  for (int iter = 0; iter < cfg.n_iterations; ++iter) {
    const auto t0 = Clock::now();
    if (cfg.train_model)
      for (int e = 0; e < cfg.train.epochs; ++e) trainer.train_epoch(model, buffer, rng);
    const std::uint64_t episode_seed = derive_rng(cfg.seed, 0x6570ULL, iter)();
    EpisodeRecord rec = run_episode(env, model, buffer, prob, cfg.planner, policy,
                                    err_model, episode_seed, rng);
    rec.wall_seconds = seconds_since(t0);
    records.push_back(std::move(rec));
  }
  return records;
}

}  // namespace

double EpisodeRecord::sx() const {
  if (recalc_count == 0) return 0.0;
  double finalized = 0.0;
  for (std::size_t t = 1; t < skip_depths.size(); ++t)
    if (skip_depths[t] == 0) finalized += skip_depths[t - 1];
  return finalized / static_cast<double>(recalc_count);
}

double EpisodeRecord::mean_error() const {
  if (step_errors.empty()) return 0.0;
  double s = 0.0;
  for (double e : step_errors) s += e;
  return s / static_cast<double>(step_errors.size());
}

double EpisodeRecord::std_error() const {
  if (step_errors.size() < 2) return 0.0;
  const double m = mean_error();
  double ss = 0.0;
  for (double e : step_errors) ss += (e - m) * (e - m);
  return std::sqrt(ss / static_cast<double>(step_errors.size() - 1));
}

void AgentConfig::validate() const {
  if (n_iterations < 1) throw InvalidConfigError("agent: n_iterations >= 1");
  planner.validate();
  const EnvSpec spec = env_spec();
  if (spec.plan_horizon > spec.task_horizon)
    throw InvalidConfigError("agent: task horizon shorter than the plan horizon");
  skip.validate(spec.plan_horizon);
}

EnvSpec AgentConfig::env_spec() const {
  EnvSpec spec = make_env_spec(env);
  if (task_horizon_override > 0) spec.task_horizon = task_horizon_override;
  return spec;
}

void seed_buffer_with_random_episode(EnvInstance& env, ReplayBuffer& buffer, Rng& rng) {
  const EnvSpec& spec = env.spec();
  for (int t = 0; t < spec.task_horizon; ++t) {
    ActionVec a(spec.d_a);
    for (int d = 0; d < spec.d_a; ++d)
      a[d] = uniform_in(rng, spec.action_lo[d], spec.action_hi[d]);
    const StateVec s = env.state();
    auto [s_next, reward] = env.step(a);
    buffer.push({s, a, s_next, reward});
  }
}

ErrorModel build_step0_error_model(const EnsembleModel& model, const ReplayBuffer& buffer,
                                   double significance) {
  if (buffer.size() < 20)
    throw InsufficientDataError("error model needs at least 20 transitions");
  std::vector<double> errors;
  errors.reserve(buffer.size());
  for (std::size_t i = 0; i < buffer.size(); ++i) {
    const Transition& tr = buffer[i];
    Vec mu_mean = Vec::Zero(model.state_dim());
    for (int b = 0; b < model.member_count(); ++b)
      mu_mean += model.forward_one(b, tr.s, tr.a).first;
    mu_mean /= static_cast<double>(model.member_count());
    errors.push_back(euclidean_error(tr.s_next, tr.s + mu_mean));
  }
  return build_error_model(std::move(errors), significance);
}

std::vector<EpisodeRecord> run_mbrl(const AgentConfig& cfg, EnsembleModel& model,
                                    ReplayBuffer& buffer, Rng& rng) {
  return run_loop(cfg, model, buffer, nullptr, nullptr, rng);
}

std::vector<EpisodeRecord> run_skipping(const AgentConfig& cfg, EnsembleModel& model,
                                        ReplayBuffer& buffer, const ErrorModel* err_model,
                                        Rng& rng) {
  return run_loop(cfg, model, buffer, &cfg.skip, err_model, rng);
}

std::vector<OnlineIterationStats> run_online_skipping(const AgentConfig& cfg, Rng& rng) {
  if (!cfg.train_model)
    throw InvalidConfigError("online skipping requires train_model = true");
  if (cfg.skip.kind != SkipPolicyConfig::Kind::Cb)
    throw InvalidConfigError("online skipping requires the cb skip policy");
  cfg.validate();

  const EnvSpec spec = cfg.env_spec();
  Rng init_rng = derive_rng(cfg.seed, 0x6d6f64656cULL);
  EnsembleModel model = EnsembleModel::random(spec.d_s, spec.d_a, cfg.model, init_rng);
  ReplayBuffer buffer;

  const std::vector<EpisodeRecord> records = run_skipping(cfg, model, buffer, nullptr, rng);

  std::vector<OnlineIterationStats> series;
  series.reserve(records.size());
  double cumulative = 0.0;
  for (std::size_t i = 0; i < records.size(); ++i) {
    const EpisodeRecord& rec = records[i];
    cumulative += rec.wall_seconds;
    series.push_back({static_cast<int>(i) + 1, rec.total_reward, rec.recalc_pct(),
                      rec.mean_error(), rec.std_error(), cumulative});
  }
  return series;
}

}  // namespace replan
