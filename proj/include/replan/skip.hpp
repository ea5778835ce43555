#pragma once

#include "replan/core.hpp"

#include <string>
#include <utility>
#include <vector>

namespace replan {

// Empirical distribution of step-0 prediction errors, collected right after
// replanning. `is_normal` selects the FSA branch: sigma rule when the sample
// passes the normality test, nearest-rank percentile otherwise.
struct ErrorModel {
  std::vector<double> errors;  // sorted ascending, size M >= 20
  double mu0 = 0.0;            // sample mean
  double theta0 = 0.0;         // sample std (n-1 denominator)
  bool is_normal = false;
  double significance = 0.05;
  double p_value = 0.0;
};

// D'Agostino & Pearson omnibus normality statistic: K^2 = Z1(skew)^2 +
// Z2(kurtosis)^2, p-value from the chi-squared(2) survival function.
// Requires at least 20 samples.
std::pair<double, double> dagostino_pearson(const std::vector<double>& samples);

// Builds the model from raw non-negative errors. A zero-variance sample is
// flagged non-normal without running the test (the statistic is undefined).
ErrorModel build_error_model(std::vector<double> errors, double significance = 0.05);

// Nearest-rank percentile: sorted[ceil(c*M) - 1] for c in (0, 1).
double percentile_threshold(const ErrorModel& model, double c);

// True while the trajectory may continue to be used, i.e. fewer than n
// actions have been executed since the last planner call; recomputation then
// happens every n+1 steps. n = 0 never skips.
bool nskip_should_skip(int steps_since_recalc, int n);

// Skip iff eps <= mu0 + c*theta0 (normal branch, one-sided) or
// eps <= percentile_threshold(model, c) (non-normal branch).
bool fsa_should_skip(const ErrorModel& model, double eps, double c);

// Skip iff the observed state lies within c sigma of the prediction in every
// dimension: pred - c*sigma <= actual <= pred + c*sigma.
bool cb_should_skip(const StateVec& s_actual, const StateVec& s_pred, const Vec& sigma,
                    double c);

struct SkipPolicyConfig {
  enum class Kind { NSkip, Fsa, Cb };
  Kind kind = Kind::NSkip;
  int n = 0;       // nskip parameter
  double c = 0.0;  // fsa percentile in (0,1) or cb sigma multiplier >= 0

  // plan_horizon is needed to reject nskip configurations with n >= H.
  void validate(int plan_horizon) const;
  std::string label() const;  // e.g. "NSKIP2", "FSA0.95", "CB0.5", "Baseline"
};

SkipPolicyConfig::Kind skip_kind_from_string(const std::string& s);

}  // namespace replan
