#include "replan/skip.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>

namespace replan {
namespace {

// Central moments about the mean, population convention.
void central_moments(const std::vector<double>& x, double& mean, double& m2, double& m3,
                     double& m4) {
  const double n = static_cast<double>(x.size());
  mean = std::accumulate(x.begin(), x.end(), 0.0) / n;
  m2 = m3 = m4 = 0.0;
  for (double v : x) {
    const double d = v - mean;
    m2 += d * d;
    m3 += d * d * d;
    m4 += d * d * d * d;
  }
  m2 /= n;
  m3 /= n;
  m4 /= n;
}

// D'Agostino (1970) skewness Z-transform.
double skew_z(double g1, double n) {
  const double y = g1 * std::sqrt((n + 1.0) * (n + 3.0) / (6.0 * (n - 2.0)));
  const double beta2 = 3.0 * (n * n + 27.0 * n - 70.0) * (n + 1.0) * (n + 3.0) /
                       ((n - 2.0) * (n + 5.0) * (n + 7.0) * (n + 9.0));
  const double w2 = -1.0 + std::sqrt(2.0 * (beta2 - 1.0));
  const double delta = 1.0 / std::sqrt(std::log(std::sqrt(w2)));
  const double alpha = std::sqrt(2.0 / (w2 - 1.0));
  return delta * std::asinh(y / alpha);
}

// Anscombe & Glynn (1983) kurtosis Z-transform.
double kurtosis_z(double b2, double n) {
  const double eb2 = 3.0 * (n - 1.0) / (n + 1.0);
  const double vb2 =
      24.0 * n * (n - 2.0) * (n - 3.0) / ((n + 1.0) * (n + 1.0) * (n + 3.0) * (n + 5.0));
  const double x = (b2 - eb2) / std::sqrt(vb2);
  const double sqrt_beta1 = 6.0 * (n * n - 5.0 * n + 2.0) / ((n + 7.0) * (n + 9.0)) *
                            std::sqrt(6.0 * (n + 3.0) * (n + 5.0) / (n * (n - 2.0) * (n - 3.0)));
  const double a =
      6.0 + 8.0 / sqrt_beta1 *
                (2.0 / sqrt_beta1 + std::sqrt(1.0 + 4.0 / (sqrt_beta1 * sqrt_beta1)));
  const double term = (1.0 - 2.0 / a) / (1.0 + x * std::sqrt(2.0 / (a - 4.0)));
  return ((1.0 - 2.0 / (9.0 * a)) - std::cbrt(term)) / std::sqrt(2.0 / (9.0 * a));
}

std::string format_param(double c) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%g", c);
  return buf;
}

}  // namespace

std::pair<double, double> dagostino_pearson(const std::vector<double>& samples) {
  if (samples.size() < 20)
    throw std::invalid_argument("dagostino_pearson: at least 20 samples required");
  const double n = static_cast<double>(samples.size());
  double mean, m2, m3, m4;
  central_moments(samples, mean, m2, m3, m4);
  if (m2 <= 0.0) throw std::invalid_argument("dagostino_pearson: zero-variance sample");
  const double g1 = m3 / std::pow(m2, 1.5);
  const double b2 = m4 / (m2 * m2);
  const double z1 = skew_z(g1, n);
  const double z2 = kurtosis_z(b2, n);
  const double k2 = z1 * z1 + z2 * z2;
  return {k2, std::exp(-0.5 * k2)};  // chi-squared(2) survival
}

ErrorModel build_error_model(std::vector<double> errors, double significance) {
  if (errors.size() < 20)
    throw std::invalid_argument("build_error_model: at least 20 errors required");
  for (double e : errors)
    if (!(e >= 0.0)) throw std::invalid_argument("build_error_model: negative error");

  ErrorModel model;
  std::sort(errors.begin(), errors.end());
  model.errors = std::move(errors);
  model.significance = significance;

  const double n = static_cast<double>(model.errors.size());
  model.mu0 = std::accumulate(model.errors.begin(), model.errors.end(), 0.0) / n;
  double ss = 0.0;
  for (double e : model.errors) ss += (e - model.mu0) * (e - model.mu0);
  model.theta0 = std::sqrt(ss / (n - 1.0));

  if (model.theta0 <= 0.0) {
    model.is_normal = false;  // degenerate sample, statistic undefined
    model.p_value = 0.0;
  } else {
    auto [k2, p] = dagostino_pearson(model.errors);
    (void)k2;
    model.p_value = p;
    model.is_normal = p >= significance;
  }
  return model;
}

double percentile_threshold(const ErrorModel& model, double c) {
  if (!(c > 0.0 && c < 1.0))
    throw InvalidConfigError("percentile_threshold: c must be in (0,1)");
  const std::size_t m = model.errors.size();
  const std::size_t rank = static_cast<std::size_t>(
      std::ceil(c * static_cast<double>(m)));
  const std::size_t idx = std::min(m - 1, std::max<std::size_t>(rank, 1) - 1);
  return model.errors[idx];
}

bool nskip_should_skip(int steps_since_recalc, int n) {
  if (steps_since_recalc < 0)
    throw std::invalid_argument("nskip_should_skip: negative counter");
  return steps_since_recalc < n;
}

bool fsa_should_skip(const ErrorModel& model, double eps, double c) {
  if (model.is_normal) return eps <= model.mu0 + c * model.theta0;
  return eps <= percentile_threshold(model, c);
}

bool cb_should_skip(const StateVec& s_actual, const StateVec& s_pred, const Vec& sigma,
                    double c) {
  if (s_actual.size() != s_pred.size() || s_actual.size() != sigma.size())
    throw std::invalid_argument("cb_should_skip: dimension mismatch");
  for (Eigen::Index d = 0; d < s_actual.size(); ++d) {
    const double half = c * sigma[d];
    if (!(s_pred[d] - half <= s_actual[d] && s_actual[d] <= s_pred[d] + half)) return false;
  }
  return true;
}

void SkipPolicyConfig::validate(int plan_horizon) const {
  switch (kind) {
    case Kind::NSkip:
      if (n < 0) throw InvalidConfigError("nskip: n must be >= 0");
      if (n >= plan_horizon) throw InvalidConfigError("nskip: n must be < plan horizon");
      break;
    case Kind::Fsa:
      if (!(c > 0.0 && c < 1.0)) throw InvalidConfigError("fsa: c must be in (0,1)");
      break;
    case Kind::Cb:
      if (c < 0.0) throw InvalidConfigError("cb: c must be >= 0");
      break;
  }
}

std::string SkipPolicyConfig::label() const {
  switch (kind) {
    case Kind::NSkip:
      return n == 0 ? "Baseline" : "NSKIP" + std::to_string(n);
    case Kind::Fsa:
      return "FSA" + format_param(c);
    case Kind::Cb:
      return "CB" + format_param(c);
  }
  return "?";
}

SkipPolicyConfig::Kind skip_kind_from_string(const std::string& s) {
  if (s == "nskip") return SkipPolicyConfig::Kind::NSkip;
  if (s == "fsa") return SkipPolicyConfig::Kind::Fsa;
  if (s == "cb") return SkipPolicyConfig::Kind::Cb;
  throw InvalidConfigError("unknown skip policy kind: " + s);
}

}  // namespace replan
