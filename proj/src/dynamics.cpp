#include "replan/dynamics.hpp"

#include <algorithm>
#include <cmath>

namespace replan {
namespace {

double softplus(double x) {
  if (x > 0.0) return x + std::log1p(std::exp(-x));
  return std::log1p(std::exp(x));
}

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double swish(double x) { return x * sigmoid(x); }

double swish_grad(double x) {
  const double s = sigmoid(x);
  return s * (1.0 + x * (1.0 - s));
}

// Keep every parameter exactly representable in the float32 checkpoint
// format so save/load reproduces forward passes bit-exactly.
void snap_f32(Mat& m) {
  for (Eigen::Index i = 0; i < m.size(); ++i)
    m.data()[i] = static_cast<double>(static_cast<float>(m.data()[i]));
}

void snap_f32(Vec& v) {
  for (Eigen::Index i = 0; i < v.size(); ++i)
    v[i] = static_cast<double>(static_cast<float>(v[i]));
}

void adam_step(double* w, double* m, double* v, const double* g, Eigen::Index n,
               const TrainConfig& cfg, long t) {
  const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(t));
  const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(t));
  for (Eigen::Index i = 0; i < n; ++i) {
    m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * g[i];
    v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * g[i] * g[i];
    const double step = cfg.learning_rate * (m[i] / bc1) / (std::sqrt(v[i] / bc2) + cfg.adam_eps);
    w[i] = static_cast<double>(static_cast<float>(w[i] - step));
  }
}

void adam_update(Mat& w, Mat& m, Mat& v, const Mat& g, const TrainConfig& cfg, long t) {
  adam_step(w.data(), m.data(), v.data(), g.data(), w.size(), cfg, t);
}

void adam_update(Vec& w, Vec& m, Vec& v, const Vec& g, const TrainConfig& cfg, long t) {
  adam_step(w.data(), m.data(), v.data(), g.data(), w.size(), cfg, t);
}

}  // namespace

double soft_clamp_logvar(double raw, double lo, double hi) {
  const double upper = hi - softplus(hi - raw);
  return lo + softplus(upper - lo);
}

GaussianNet GaussianNet::random(int d_in, int hidden, int d_s, double logvar_min,
                                double logvar_max, Rng& rng) {
  GaussianNet net;
  net.logvar_min = logvar_min;
  net.logvar_max = logvar_max;
  auto init = [&rng](Eigen::Index rows, Eigen::Index cols) {
    Mat m(rows, cols);
    const double scale = 1.0 / std::sqrt(static_cast<double>(cols));
    for (Eigen::Index r = 0; r < rows; ++r)
      for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = scale * normal01(rng);
    snap_f32(m);
    return m;
  };
  net.w1 = init(hidden, d_in);
  net.w2 = init(hidden, hidden);
  net.w3 = init(2 * d_s, hidden);
  net.b1 = Vec::Zero(hidden);
  net.b2 = Vec::Zero(hidden);
  net.b3 = Vec::Zero(2 * d_s);
  return net;
}

void GaussianNet::forward(const Mat& Xn, Mat& mu, Mat& logvar) const {
  const int d = state_dim();
  Mat z1 = (Xn * w1.transpose()).rowwise() + b1.transpose();
  z1 = z1.unaryExpr([](double x) { return swish(x); });
  Mat z2 = (z1 * w2.transpose()).rowwise() + b2.transpose();
  z2 = z2.unaryExpr([](double x) { return swish(x); });
  const Mat out = (z2 * w3.transpose()).rowwise() + b3.transpose();
  mu = out.leftCols(d);
  logvar = out.rightCols(d).unaryExpr(
      [this](double x) { return soft_clamp_logvar(x, logvar_min, logvar_max); });
}

NetGradients NetGradients::zeros_like(const GaussianNet& net) {
  NetGradients g;
  g.w1 = Mat::Zero(net.w1.rows(), net.w1.cols());
  g.w2 = Mat::Zero(net.w2.rows(), net.w2.cols());
  g.w3 = Mat::Zero(net.w3.rows(), net.w3.cols());
  g.b1 = Vec::Zero(net.b1.size());
  g.b2 = Vec::Zero(net.b2.size());
  g.b3 = Vec::Zero(net.b3.size());
  return g;
}

double nll_forward_backward(const GaussianNet& net, const Mat& Xn, const Mat& Tn,
                            NetGradients* grads) {
  const int d = net.state_dim();
  const double n = static_cast<double>(Xn.rows());

  const Mat z1 = (Xn * net.w1.transpose()).rowwise() + net.b1.transpose();
  const Mat h1 = z1.unaryExpr([](double x) { return swish(x); });
  const Mat z2 = (h1 * net.w2.transpose()).rowwise() + net.b2.transpose();
  const Mat h2 = z2.unaryExpr([](double x) { return swish(x); });
  const Mat out = (h2 * net.w3.transpose()).rowwise() + net.b3.transpose();

  const Mat mu = out.leftCols(d);
  const Mat raw = out.rightCols(d);
  Mat logvar(raw.rows(), raw.cols());
  Mat dlv_draw(raw.rows(), raw.cols());  // d logvar / d raw
  for (Eigen::Index i = 0; i < raw.size(); ++i) {
    const double x = raw.data()[i];
    const double upper = net.logvar_max - softplus(net.logvar_max - x);
    logvar.data()[i] = net.logvar_min + softplus(upper - net.logvar_min);
    dlv_draw.data()[i] = sigmoid(upper - net.logvar_min) * sigmoid(net.logvar_max - x);
  }

  const Mat inv_var = (-logvar).array().exp();
  const Mat resid = Tn - mu;
  const double loss =
      0.5 * (logvar.array() + resid.array().square() * inv_var.array()).sum() / n;

  if (grads != nullptr) {
    Mat dout(out.rows(), out.cols());
    dout.leftCols(d) = (-resid.array() * inv_var.array()) / n;
    dout.rightCols(d) =
        (0.5 * (1.0 - resid.array().square() * inv_var.array()) * dlv_draw.array()) / n;

    grads->w3 = dout.transpose() * h2;
    grads->b3 = dout.colwise().sum();
    Mat dh2 = dout * net.w3;
    Mat dz2 = dh2.array() * z2.unaryExpr([](double x) { return swish_grad(x); }).array();
    grads->w2 = dz2.transpose() * h1;
    grads->b2 = dz2.colwise().sum();
    Mat dh1 = dz2 * net.w2;
    Mat dz1 = dh1.array() * z1.unaryExpr([](double x) { return swish_grad(x); }).array();
    grads->w1 = dz1.transpose() * Xn;
    grads->b1 = dz1.colwise().sum();
  }
  return loss;
}

double nll_loss(const Vec& mu, const Vec& var, const Vec& target) {
  if (mu.size() != var.size() || mu.size() != target.size())
    throw std::invalid_argument("nll_loss: dimension mismatch");
  if ((var.array() <= 0.0).any()) throw std::invalid_argument("nll_loss: variance <= 0");
  const auto resid = (target - mu).array();
  return 0.5 * (var.array().log() + resid.square() / var.array()).sum();
}

Normalization Normalization::identity(int d_in, int d_s) {
  Normalization norm;
  norm.in_mu = Vec::Zero(d_in);
  norm.in_sigma = Vec::Ones(d_in);
  norm.t_mu = Vec::Zero(d_s);
  norm.t_sigma = Vec::Ones(d_s);
  return norm;
}

EnsembleModel::EnsembleModel(int d_s, int d_a, ModelConfig cfg)
    : d_s_(d_s), d_a_(d_a), cfg_(std::move(cfg)) {
  norm_ = Normalization::identity(d_s_ + d_a_, d_s_);
}

EnsembleModel EnsembleModel::random(int d_s, int d_a, const ModelConfig& cfg, Rng& rng) {
  if (cfg.members < 2)
    throw InvalidConfigError("ensemble needs at least 2 members");
  if (cfg.particles % cfg.members != 0)
    throw InvalidConfigError("particle count must be a multiple of the member count");
  EnsembleModel model(d_s, d_a, cfg);
  model.members_.reserve(cfg.members);
  for (int b = 0; b < cfg.members; ++b)
    model.members_.push_back(GaussianNet::random(d_s + d_a, cfg.hidden, d_s,
                                                 cfg.logvar_min, cfg.logvar_max, rng));
  return model;
}

void EnsembleModel::predict(int member, const Mat& X, Mat& mu_delta, Mat& var) const {
  Mat Xn = (X.rowwise() - norm_.in_mu.transpose()).array().rowwise() /
           norm_.in_sigma.transpose().array();
  Mat mu, logvar;
  members_[member].forward(Xn, mu, logvar);
  mu_delta = (mu.array().rowwise() * norm_.t_sigma.transpose().array()).rowwise() +
             norm_.t_mu.transpose().array();
  var = logvar.array().exp().rowwise() * norm_.t_sigma.transpose().array().square();
}

std::pair<Vec, Vec> EnsembleModel::forward_one(int member, const StateVec& s,
                                               const ActionVec& a) const {
  if (!s.allFinite() || !a.allFinite())
    throw std::invalid_argument("model forward: non-finite input");
  Mat X(1, d_s_ + d_a_);
  X.leftCols(d_s_) = s.transpose();
  X.rightCols(d_a_) = a.transpose();
  Mat mu, var;
  predict(member, X, mu, var);
  return {mu.row(0).transpose(), var.row(0).transpose()};
}

ParticleSet ParticleSet::init(const StateVec& s, int particles, int members) {
  if (members < 2) throw std::invalid_argument("particle set needs >= 2 members");
  if (particles % members != 0)
    throw std::invalid_argument("particle count must be a multiple of the member count");
  ParticleSet ps;
  ps.states = s.transpose().replicate(particles, 1);
  ps.assignment.resize(particles);
  const int per = particles / members;
  for (int p = 0; p < particles; ++p) ps.assignment[p] = p / per;
  return ps;
}

void particle_propagate(ParticleSet& ps, const ActionVec& a, const EnsembleModel& model,
                        Rng& rng) {
  const int P = static_cast<int>(ps.states.rows());
  const int B = model.member_count();
  const int per = P / B;
  const int d_s = model.state_dim();

  Mat mu(P, d_s), var(P, d_s);
  Mat X(per, d_s + model.action_dim());
  Mat mu_b, var_b;
  for (int b = 0; b < B; ++b) {
    X.leftCols(d_s) = ps.states.middleRows(b * per, per);
    X.rightCols(model.action_dim()) = a.transpose().replicate(per, 1);
    model.predict(b, X, mu_b, var_b);
    mu.middleRows(b * per, per) = mu_b;
    var.middleRows(b * per, per) = var_b;
  }

  for (int p = 0; p < P; ++p)
    for (int d = 0; d < d_s; ++d)
      ps.states(p, d) += mu(p, d) + std::sqrt(var(p, d)) * normal01(rng);
}

std::pair<Vec, Vec> variance_decompose(const ParticleSet& ps) {
  const int P = static_cast<int>(ps.states.rows());
  const int d = static_cast<int>(ps.states.cols());
  const int B = *std::max_element(ps.assignment.begin(), ps.assignment.end()) + 1;
  if (B < 2) throw std::invalid_argument("variance_decompose: >= 2 bootstraps required");

  std::vector<int> counts(B, 0);
  for (int p = 0; p < P; ++p) ++counts[ps.assignment[p]];
  for (int c : counts)
    if (c < 2) throw std::invalid_argument("variance_decompose: >= 2 particles per bootstrap");

  Mat means = Mat::Zero(B, d);
  for (int p = 0; p < P; ++p) means.row(ps.assignment[p]) += ps.states.row(p);
  for (int b = 0; b < B; ++b) means.row(b) /= counts[b];

  Mat within = Mat::Zero(B, d);
  for (int p = 0; p < P; ++p) {
    const int b = ps.assignment[p];
    within.row(b) += (ps.states.row(p) - means.row(b)).array().square().matrix();
  }
  for (int b = 0; b < B; ++b) within.row(b) /= counts[b];

  const Vec aleatoric = within.colwise().mean();
  const Vec grand = means.colwise().mean();
  Vec epistemic = Vec::Zero(d);
  for (int b = 0; b < B; ++b)
    epistemic += (means.row(b).transpose() - grand).array().square().matrix();
  epistemic /= static_cast<double>(B);
  return {aleatoric, epistemic};
}

std::pair<StateVec, Vec> aggregate_confidence(const ParticleSet& ps) {
  const int P = static_cast<int>(ps.states.rows());
  if (P < 2) throw std::invalid_argument("aggregate_confidence: >= 2 particles required");
  const Vec mean = ps.states.colwise().mean();
  Vec var = Vec::Zero(ps.states.cols());
  for (int p = 0; p < P; ++p)
    var += (ps.states.row(p).transpose() - mean).array().square().matrix();
  var /= static_cast<double>(P);
  return {mean, var.array().sqrt()};
}

Normalization compute_normalization(const ReplayBuffer& buffer, int d_s, int d_a) {
  const std::size_t n = buffer.size();
  if (n == 0) throw EmptyBufferError();
  Normalization norm = Normalization::identity(d_s + d_a, d_s);
  norm.in_mu.setZero();
  norm.t_mu.setZero();
  Vec in_sq = Vec::Zero(d_s + d_a), t_sq = Vec::Zero(d_s);
  for (std::size_t i = 0; i < n; ++i) {
    const Transition& tr = buffer[i];
    Vec in(d_s + d_a);
    in.head(d_s) = tr.s;
    in.tail(d_a) = tr.a;
    const Vec t = tr.s_next - tr.s;
    norm.in_mu += in;
    norm.t_mu += t;
    in_sq += in.array().square().matrix();
    t_sq += t.array().square().matrix();
  }
  const double dn = static_cast<double>(n);
  norm.in_mu /= dn;
  norm.t_mu /= dn;
  auto finish = [dn](const Vec& mean, const Vec& sq) {
    Vec sigma = (sq / dn - mean.array().square().matrix()).cwiseMax(0.0).cwiseSqrt();
    for (Eigen::Index i = 0; i < sigma.size(); ++i)
      if (sigma[i] < 1e-8) sigma[i] = 1.0;  // constant feature
    return sigma;
  };
  norm.in_sigma = finish(norm.in_mu, in_sq);
  norm.t_sigma = finish(norm.t_mu, t_sq);
  snap_f32(norm.in_mu);
  snap_f32(norm.in_sigma);
  snap_f32(norm.t_mu);
  snap_f32(norm.t_sigma);
  return norm;
}

std::vector<double> EnsembleTrainer::train_epoch(EnsembleModel& model,
                                                 const ReplayBuffer& buffer, Rng& rng) {
  const std::size_t n = buffer.size();
  if (n < static_cast<std::size_t>(cfg_.batch_size))
    throw InsufficientDataError("train_epoch: buffer smaller than one batch");

  const int d_s = model.state_dim(), d_a = model.action_dim();
  model.norm() = compute_normalization(buffer, d_s, d_a);

  if (opt_.empty()) {
    opt_.resize(model.member_count());
    for (int b = 0; b < model.member_count(); ++b) {
      opt_[b].m = NetGradients::zeros_like(model.members()[b]);
      opt_[b].v = NetGradients::zeros_like(model.members()[b]);
    }
  }

  const Normalization& norm = model.norm();
  std::vector<double> losses(model.member_count(), 0.0);
  for (int b = 0; b < model.member_count(); ++b) {
    const std::vector<Transition> sample = buffer.bootstrap_sample(rng, n);
    GaussianNet& net = model.members()[b];
    AdamState& adam = opt_[b];
    double loss_sum = 0.0;
    for (std::size_t start = 0; start < n; start += cfg_.batch_size) {
      const std::size_t count = std::min<std::size_t>(cfg_.batch_size, n - start);
      Mat Xn(count, d_s + d_a), Tn(count, d_s);
      for (std::size_t i = 0; i < count; ++i) {
        const Transition& tr = sample[start + i];
        for (int k = 0; k < d_s; ++k)
          Xn(i, k) = (tr.s[k] - norm.in_mu[k]) / norm.in_sigma[k];
        for (int k = 0; k < d_a; ++k)
          Xn(i, d_s + k) = (tr.a[k] - norm.in_mu[d_s + k]) / norm.in_sigma[d_s + k];
        for (int k = 0; k < d_s; ++k)
          Tn(i, k) = (tr.s_next[k] - tr.s[k] - norm.t_mu[k]) / norm.t_sigma[k];
      }
      NetGradients g = NetGradients::zeros_like(net);
      const double loss = nll_forward_backward(net, Xn, Tn, &g);
      loss_sum += loss * static_cast<double>(count);
      ++adam.step;
      adam_update(net.w1, adam.m.w1, adam.v.w1, g.w1, cfg_, adam.step);
      adam_update(net.b1, adam.m.b1, adam.v.b1, g.b1, cfg_, adam.step);
      adam_update(net.w2, adam.m.w2, adam.v.w2, g.w2, cfg_, adam.step);
      adam_update(net.b2, adam.m.b2, adam.v.b2, g.b2, cfg_, adam.step);
      adam_update(net.w3, adam.m.w3, adam.v.w3, g.w3, cfg_, adam.step);
      adam_update(net.b3, adam.m.b3, adam.v.b3, g.b3, cfg_, adam.step);
    }
    losses[b] = loss_sum / static_cast<double>(n);
  }
  return losses;
}

}  // namespace replan
