#include "replan/envs.hpp"

#include <cmath>
#include <functional>

namespace replan {
namespace {

// --- cartpole swing-up ------------------------------------------------------
// State (x, xdot, theta, thetadot); theta = 0 is the pole hanging down.
// Point-mass pole at distance cp_len from the pivot, frictionless cart. The
// light pole and the wide reward well keep the swing-up reachable within a
// 25-step planning horizon.
constexpr double cp_cart_mass = 0.5;
constexpr double cp_pole_mass = 0.1;
constexpr double cp_len = 0.5;
constexpr double cp_gravity = 9.81;
constexpr double cp_force_max = 15.0;
constexpr double cp_reward_scale = 1.0;  // length scale of the tip-distance well

Vec cartpole_deriv(const Vec& s, double force) {
  const double theta = s[2], thdot = s[3];
  const double sin_t = std::sin(theta), cos_t = std::cos(theta);
  const double denom = cp_cart_mass + cp_pole_mass * sin_t * sin_t;
  const double xdd = (force + cp_pole_mass * cp_len * thdot * thdot * sin_t +
                      cp_pole_mass * cp_gravity * sin_t * cos_t) /
                     denom;
  const double thdd = (-cp_gravity * sin_t - xdd * cos_t) / cp_len;
  Vec d(4);
  d << s[1], xdd, thdot, thdd;
  return d;
}

double cartpole_reward(const StateVec& s, const ActionVec& a) {
  const double tip_x = s[0] + cp_len * std::sin(s[2]);
  const double tip_y = -cp_len * std::cos(s[2]);
  const double dx = tip_x - 0.0, dy = tip_y - cp_len;  // goal: tip upright at x=0
  return std::exp(-(dx * dx + dy * dy) / (cp_reward_scale * cp_reward_scale)) -
         0.01 * a.squaredNorm();
}

// --- pendulum ---------------------------------------------------------------
// Observation (cos theta, sin theta, thetadot); theta = 0 is upright.
// Uniform rod of mass pd_mass, length pd_len, pivoted at one end.
constexpr double pd_mass = 1.0;
constexpr double pd_len = 1.0;
constexpr double pd_gravity = 9.81;
constexpr double pd_torque_max = 2.0;
constexpr double pd_speed_max = 8.0;

Vec pendulum_deriv(const Vec& q, double torque) {
  // q = (theta, thetadot)
  const double thdd = (3.0 * pd_gravity / (2.0 * pd_len)) * std::sin(q[0]) +
                      3.0 * torque / (pd_mass * pd_len * pd_len);
  Vec d(2);
  d << q[1], thdd;
  return d;
}

double pendulum_reward(const StateVec& s, const ActionVec& a) {
  const double theta = std::atan2(s[1], s[0]);  // wrapped to [-pi, pi]
  return -(theta * theta + 0.1 * s[2] * s[2] + 0.001 * a[0] * a[0]);
}

// --- 2-link planar reacher ---------------------------------------------------
// State (q1, q2, q1dot, q2dot, goal_x, goal_y); horizontal plane, no gravity.
// Point masses at the end of each link, light joint damping.
constexpr double re_m1 = 1.0;
constexpr double re_m2 = 1.0;
constexpr double re_l1 = 0.5;
constexpr double re_l2 = 0.5;
constexpr double re_damping = 0.1;
constexpr double re_torque_max = 1.0;

void reacher_fingertip(const Vec& s, double& x, double& y) {
  x = re_l1 * std::cos(s[0]) + re_l2 * std::cos(s[0] + s[1]);
  y = re_l1 * std::sin(s[0]) + re_l2 * std::sin(s[0] + s[1]);
}

Vec reacher_deriv(const Vec& s, const Vec& tau) {
  const double q2 = s[1], qd1 = s[2], qd2 = s[3];
  const double c2 = std::cos(q2), s2 = std::sin(q2);
  const double m11 = (re_m1 + re_m2) * re_l1 * re_l1 + re_m2 * re_l2 * re_l2 +
                     2.0 * re_m2 * re_l1 * re_l2 * c2;
  const double m12 = re_m2 * re_l2 * re_l2 + re_m2 * re_l1 * re_l2 * c2;
  const double m22 = re_m2 * re_l2 * re_l2;
  const double h = re_m2 * re_l1 * re_l2 * s2;
  const double rhs1 = tau[0] - (-h * qd2 * qd2 - 2.0 * h * qd1 * qd2) - re_damping * qd1;
  const double rhs2 = tau[1] - (h * qd1 * qd1) - re_damping * qd2;
  const double det = m11 * m22 - m12 * m12;
  const double qdd1 = (m22 * rhs1 - m12 * rhs2) / det;
  const double qdd2 = (-m12 * rhs1 + m11 * rhs2) / det;
  Vec d(6);
  d << qd1, qd2, qdd1, qdd2, 0.0, 0.0;  // goal coordinates are constant
  return d;
}

double reacher_reward(const StateVec& s, const ActionVec& a) {
  double tx, ty;
  reacher_fingertip(s, tx, ty);
  const double dx = tx - s[4], dy = ty - s[5];
  return -std::sqrt(dx * dx + dy * dy) - 0.01 * a.squaredNorm();
}

// Classic fixed-step RK4.
Vec rk4(const std::function<Vec(const Vec&)>& f, const Vec& x, double dt) {
  const Vec k1 = f(x);
  const Vec k2 = f(x + 0.5 * dt * k1);
  const Vec k3 = f(x + 0.5 * dt * k2);
  const Vec k4 = f(x + dt * k3);
  return x + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

Vec constant_vec(int n, double v) { return Vec::Constant(n, v); }

}  // namespace

EnvSpec make_env_spec(const std::string& name) {
  EnvSpec spec;
  spec.name = name;
  if (name == "cartpole") {
    spec.d_s = 4;
    spec.d_a = 1;
    spec.task_horizon = 200;
    spec.plan_horizon = 25;
    spec.action_lo = constant_vec(1, -cp_force_max);
    spec.action_hi = constant_vec(1, cp_force_max);
    spec.dt = 0.05;
  } else if (name == "pendulum") {
    spec.d_s = 3;
    spec.d_a = 1;
    spec.task_horizon = 200;
    spec.plan_horizon = 25;
    spec.action_lo = constant_vec(1, -pd_torque_max);
    spec.action_hi = constant_vec(1, pd_torque_max);
    spec.dt = 0.05;
  } else if (name == "reacher2") {
    spec.d_s = 6;
    spec.d_a = 2;
    spec.task_horizon = 150;
    spec.plan_horizon = 25;
    spec.action_lo = constant_vec(2, -re_torque_max);
    spec.action_hi = constant_vec(2, re_torque_max);
    spec.dt = 0.02;
  } else {
    throw InvalidConfigError("unknown environment: " + name);
  }
  return spec;
}

StateVec nominal_start(const EnvSpec& spec) {
  if (spec.name == "cartpole") {
    return Vec::Zero(4);  // cart centered, pole hanging down
  }
  if (spec.name == "pendulum") {
    Vec s(3);
    s << std::cos(M_PI), std::sin(M_PI), 0.0;  // hanging down
    return s;
  }
  // reacher2: arm stretched along +x, goal up-left of the fingertip
  Vec s(6);
  s << 0.0, 0.0, 0.0, 0.0, 0.5, 0.5;
  return s;
}

double reward_fn(const EnvSpec& spec, const StateVec& s, const ActionVec& a) {
  if (s.size() != spec.d_s || a.size() != spec.d_a)
    throw std::invalid_argument("reward_fn: dimension mismatch");
  if (spec.name == "cartpole") return cartpole_reward(s, a);
  if (spec.name == "pendulum") return pendulum_reward(s, a);
  return reacher_reward(s, a);
}

double reward_upper_bound(const EnvSpec& spec) {
  if (spec.name == "cartpole") return 1.0;
  return 0.0;
}

EnvInstance::EnvInstance(EnvSpec spec) : spec_(std::move(spec)) {
  state_ = nominal_start(spec_);
}

StateVec EnvInstance::reset(std::uint64_t seed) {
  Rng rng = derive_rng(seed, 0x7265736574ULL);  // "reset" stream
  const double w = spec_.reset_noise;
  if (spec_.name == "pendulum") {
    // Perturb the underlying (theta, thetadot); the observed coordinates move
    // by at most the same amount since |d cos| <= |d theta|.
    const double theta = M_PI + (w > 0.0 ? uniform_in(rng, -w, w) : 0.0);
    const double thdot = w > 0.0 ? uniform_in(rng, -w, w) : 0.0;
    state_.resize(3);
    state_ << std::cos(theta), std::sin(theta), thdot;
  } else {
    state_ = nominal_start(spec_);
    if (w > 0.0)
      for (int i = 0; i < state_.size(); ++i) state_[i] += uniform_in(rng, -w, w);
  }
  step_count_ = 0;
  return state_;
}

void EnvInstance::set_state(const StateVec& s) {
  if (s.size() != spec_.d_s) throw std::invalid_argument("set_state: dimension mismatch");
  state_ = s;
}

std::pair<StateVec, double> EnvInstance::step(const ActionVec& a_in) {
  if (step_count_ >= spec_.task_horizon) throw EpisodeFinishedError();
  if (a_in.size() != spec_.d_a) throw std::invalid_argument("env step: action dimension");

  ActionVec a = a_in;
  if ((a.array() < spec_.action_lo.array()).any() ||
      (a.array() > spec_.action_hi.array()).any()) {
    a = clamp_to(a, spec_.action_lo, spec_.action_hi);
    ++clamp_warnings_;
  }

  const double reward = reward_fn(spec_, state_, a);

  if (spec_.name == "cartpole") {
    state_ = rk4([&](const Vec& x) { return cartpole_deriv(x, a[0]); }, state_, spec_.dt);
  } else if (spec_.name == "pendulum") {
    Vec q(2);
    q << std::atan2(state_[1], state_[0]), state_[2];
    q = rk4([&](const Vec& x) { return pendulum_deriv(x, a[0]); }, q, spec_.dt);
    q[1] = std::clamp(q[1], -pd_speed_max, pd_speed_max);
    state_ << std::cos(q[0]), std::sin(q[0]), q[1];
  } else {
    state_ = rk4([&](const Vec& x) { return reacher_deriv(x, a); }, state_, spec_.dt);
  }

  ++step_count_;
  return {state_, reward};
}

}  // namespace replan
