#include <doctest.h>

#include "replan/skip.hpp"

#include <algorithm>
#include <cmath>

using namespace replan;

namespace {

std::vector<double> iota_errors(int m) {
  std::vector<double> e(m);
  for (int i = 0; i < m; ++i) e[i] = i + 1.0;
  return e;
}

std::vector<double> normal_sample(Rng& rng, int n, double mu = 0.0, double sigma = 1.0) {
  std::vector<double> x(n);
  for (double& v : x) v = mu + sigma * normal01(rng);
  return x;
}

}  // namespace

TEST_CASE("nskip policy counts actions executed since the last planner call") {
  // n = 0 is the always-replan baseline
  for (int steps = 0; steps < 5; ++steps) CHECK_FALSE(nskip_should_skip(steps, 0));

  // n = 2: skip twice, then recompute (every 3rd step replans)
  CHECK(nskip_should_skip(0, 2));
  CHECK(nskip_should_skip(1, 2));
  CHECK_FALSE(nskip_should_skip(2, 2));

  CHECK_THROWS_AS(nskip_should_skip(-1, 2), std::invalid_argument);
}

TEST_CASE("nskip recomputation count over an episode is ceil(TaskH/(n+1))") {
  for (int task_h : {200, 150}) {
    for (int n : {0, 1, 2, 3, 4, 5, 7, 9}) {
      int recalcs = 0, since = 0;
      bool skip = false;
      for (int t = 0; t < task_h; ++t) {
        if (!skip) {
          ++recalcs;
          since = 0;
        } else {
          ++since;
        }
        skip = nskip_should_skip(since, n);
      }
      const int expected = (task_h + n) / (n + 1);  // ceil
      CHECK(recalcs == expected);
    }
  }
}

TEST_CASE("dagostino_pearson reproduces reference values") {
  // reference statistics computed with scipy.stats.normaltest
  const std::vector<double> x{
      4.590585, 5.957887, 3.961123, 3.888539, 8.931561, 7.786812, 5.185816, 5.563492,
      6.538045, 7.492869, 7.014379, 2.407558, 5.549983, 5.457826, 7.705834, 6.772859,
      0.996725, 4.256315, 8.338051, 4.122861, 3.920517, 5.95397,  11.497888, 2.957545,
      3.845825, 5.248243, 5.605227, 6.047544, 5.001881, 7.68762};
  auto [k2, p] = dagostino_pearson(x);
  CHECK(k2 == doctest::Approx(2.45037180804852).epsilon(1e-6));
  CHECK(p == doctest::Approx(0.293703094660749).epsilon(1e-6));

  const std::vector<double> y{
      1.661729, 0.100891, 0.247116, 0.299376, 0.631311, 0.615026, 1.236185, 0.196079,
      0.758112, 0.183613, 1.464532, 2.633461, 0.940311, 0.162735, 0.672613, 0.473763,
      1.887839, 2.420212, 0.484263, 0.379061, 0.840242, 0.208031, 0.134494, 1.163457,
      1.607473, 0.852229, 3.620473, 1.005271, 2.193029, 0.684018, 0.433273, 1.252569,
      0.701036, 0.255715, 0.281004, 1.574074, 0.683538, 2.466207, 2.907206, 0.761923,
      0.291011, 1.276049, 0.457978, 0.690448, 0.256927, 0.436284, 1.052259, 0.375323,
      1.464193, 1.522513};
  auto [k2y, py] = dagostino_pearson(y);
  CHECK(k2y == doctest::Approx(15.4681894165477).epsilon(1e-6));
  CHECK(py == doctest::Approx(0.000437648400616248).epsilon(1e-4));
}

TEST_CASE("dagostino_pearson input validation") {
  std::vector<double> few(19, 1.0);
  CHECK_THROWS_AS(dagostino_pearson(few), std::invalid_argument);
  std::vector<double> flat(30, 2.0);
  CHECK_THROWS_AS(dagostino_pearson(flat), std::invalid_argument);
}

TEST_CASE("dagostino_pearson keeps normal samples and flags uniform ones") {
  // quick calibration; the acceptance suite runs the full 100-repetition check
  Rng rng = make_rng(40);
  int normal_accepted = 0, uniform_rejected = 0;
  const int reps = 20, n = 1000;
  for (int rep = 0; rep < reps; ++rep) {
    auto [k2n, pn] = dagostino_pearson(normal_sample(rng, n));
    (void)k2n;
    if (pn >= 0.05) ++normal_accepted;
    std::vector<double> u(n);
    for (double& v : u) v = uniform01(rng);
    auto [k2u, pu] = dagostino_pearson(u);
    (void)k2u;
    if (pu < 0.05) ++uniform_rejected;
  }
  CHECK(normal_accepted >= 18);
  CHECK(uniform_rejected == reps);
}

TEST_CASE("build_error_model computes the sample statistics") {
  ErrorModel model = build_error_model(iota_errors(100));
  CHECK(model.mu0 == doctest::Approx(50.5));
  CHECK(model.errors.front() == 1.0);
  CHECK(model.errors.back() == 100.0);
  CHECK(std::is_sorted(model.errors.begin(), model.errors.end()));
}

TEST_CASE("build_error_model handles degenerate and invalid samples") {
  ErrorModel flat = build_error_model(std::vector<double>(25, 3.0));
  CHECK(flat.theta0 == 0.0);
  CHECK_FALSE(flat.is_normal);  // zero-variance convention

  CHECK_THROWS_AS(build_error_model(std::vector<double>(10, 1.0)), std::invalid_argument);
  std::vector<double> negative(25, 1.0);
  negative[3] = -0.5;
  CHECK_THROWS_AS(build_error_model(negative), std::invalid_argument);
}

TEST_CASE("build_error_model accepts synthetic normal errors") {
  Rng rng = make_rng(41);
  ErrorModel model = build_error_model(normal_sample(rng, 2000, 10.0, 1.0));
  CHECK(model.is_normal);
}

TEST_CASE("percentile threshold uses the nearest rank") {
  ErrorModel model = build_error_model(iota_errors(100));
  CHECK(percentile_threshold(model, 0.95) == 95.0);
  CHECK(percentile_threshold(model, 0.999) == 100.0);
  CHECK(percentile_threshold(model, 0.5) == 50.0);
  CHECK(percentile_threshold(model, 0.004) == 1.0);

  CHECK_THROWS_AS(percentile_threshold(model, 0.0), InvalidConfigError);
  CHECK_THROWS_AS(percentile_threshold(model, 1.0), InvalidConfigError);
}

TEST_CASE("percentile threshold matches a sort-based oracle on random samples") {
  Rng rng = make_rng(42);
  for (int rep = 0; rep < 20; ++rep) {
    const int m = 20 + static_cast<int>(uniform_index(rng, 200));
    std::vector<double> errors(m);
    for (double& e : errors) e = uniform_in(rng, 0.0, 10.0);
    ErrorModel model = build_error_model(errors);
    for (double c : {0.05, 0.25, 0.5, 0.77, 0.95, 0.999}) {
      std::vector<double> sorted = model.errors;
      std::sort(sorted.begin(), sorted.end());
      const auto rank = static_cast<std::size_t>(std::ceil(c * m));
      const double expected = sorted[std::min<std::size_t>(rank, m) - 1];
      CHECK(percentile_threshold(model, c) == expected);
    }
  }
}

TEST_CASE("fsa skip rule on both branches") {
  // zero error always skips
  ErrorModel non_normal = build_error_model(iota_errors(100));
  CHECK_FALSE(non_normal.is_normal);
  CHECK(fsa_should_skip(non_normal, 0.0, 0.5));

  // non-normal branch: eps over the nearest-rank percentile recomputes
  CHECK(fsa_should_skip(non_normal, 95.0, 0.95));
  CHECK_FALSE(fsa_should_skip(non_normal, 96.0, 0.95));

  // normal branch: one-sided sigma rule
  ErrorModel normal;
  normal.errors = iota_errors(30);
  normal.mu0 = 1.0;
  normal.theta0 = 0.5;
  normal.is_normal = true;
  CHECK(fsa_should_skip(normal, 1.9, 2.0));        // 1.9 <= 1 + 2*0.5
  CHECK_FALSE(fsa_should_skip(normal, 2.01, 2.0));
}

TEST_CASE("fsa skip is monotone in eps and in c") {
  Rng rng = make_rng(43);
  std::vector<double> errors(200);
  for (double& e : errors) e = uniform_in(rng, 0.0, 5.0);
  ErrorModel model = build_error_model(errors);

  for (int rep = 0; rep < 200; ++rep) {
    const double c = uniform_in(rng, 0.01, 0.99);
    const double eps = uniform_in(rng, 0.0, 6.0);
    const double eps_smaller = eps * uniform01(rng);
    if (fsa_should_skip(model, eps, c)) CHECK(fsa_should_skip(model, eps_smaller, c));

    const double c_larger = c + (0.99 - c) * uniform01(rng);
    if (fsa_should_skip(model, eps, c)) CHECK(fsa_should_skip(model, eps, c_larger));
  }
}

TEST_CASE("fsa skip frequency is calibrated to c on the empirical distribution") {
  // quick version; the acceptance suite runs 10000 draws for several c
  Rng rng = make_rng(44);
  std::vector<double> errors(1000);
  for (double& e : errors) e = uniform_in(rng, 0.0, 1.0);
  ErrorModel model = build_error_model(errors);
  REQUIRE_FALSE(model.is_normal);

  const double c = 0.5;
  const int draws = 5000;
  int skips = 0;
  for (int i = 0; i < draws; ++i) {
    const double eps = model.errors[uniform_index(rng, model.errors.size())];
    if (fsa_should_skip(model, eps, c)) ++skips;
  }
  const double freq = static_cast<double>(skips) / draws;
  const double se = std::sqrt(c * (1 - c) / draws);
  CHECK(std::abs(freq - c) <= 3 * se);
}

TEST_CASE("cb skip checks the two-sided bound in every dimension") {
  Vec pred(2), sigma(2);
  pred << 1.0, 1.0;
  sigma << 0.5, 0.5;

  Vec inside(2), outside(2);
  inside << 1.4, 0.7;
  outside << 1.6, 0.7;
  CHECK(cb_should_skip(inside, pred, sigma, 1.0));
  CHECK_FALSE(cb_should_skip(outside, pred, sigma, 1.0));

  // exact prediction skips for any c >= 0, any sigma
  CHECK(cb_should_skip(pred, pred, sigma, 0.0));
  CHECK(cb_should_skip(pred, pred, Vec::Zero(2), 5.0));

  // zero-width interval with any mismatch recomputes
  Vec off(2);
  off << 1.0, 1.0001;
  CHECK_FALSE(cb_should_skip(off, pred, sigma, 0.0));

  Vec bad(3);
  CHECK_THROWS_AS(cb_should_skip(bad, pred, sigma, 1.0), std::invalid_argument);
}

TEST_CASE("cb skip is invariant under joint permutations of the dimensions") {
  Rng rng = make_rng(45);
  for (int rep = 0; rep < 100; ++rep) {
    const int d = 4;
    Vec actual(d), pred(d), sigma(d);
    for (int i = 0; i < d; ++i) {
      pred[i] = uniform_in(rng, -2, 2);
      actual[i] = pred[i] + uniform_in(rng, -1, 1);
      sigma[i] = uniform_in(rng, 0, 1);
    }
    const double c = uniform_in(rng, 0, 2);
    const bool base = cb_should_skip(actual, pred, sigma, c);

    std::vector<int> perm{2, 0, 3, 1};
    Vec pa(d), pp(d), ps(d);
    for (int i = 0; i < d; ++i) {
      pa[i] = actual[perm[i]];
      pp[i] = pred[perm[i]];
      ps[i] = sigma[perm[i]];
    }
    CHECK(cb_should_skip(pa, pp, ps, c) == base);
  }
}

TEST_CASE("skip policy config validation and labels") {
  SkipPolicyConfig nskip{SkipPolicyConfig::Kind::NSkip, 3, 0.0};
  nskip.validate(25);
  CHECK_THROWS_AS((SkipPolicyConfig{SkipPolicyConfig::Kind::NSkip, 25, 0.0}.validate(25)),
                  InvalidConfigError);
  CHECK_THROWS_AS((SkipPolicyConfig{SkipPolicyConfig::Kind::Fsa, 0, 1.5}.validate(25)),
                  InvalidConfigError);
  CHECK_THROWS_AS((SkipPolicyConfig{SkipPolicyConfig::Kind::Cb, 0, -0.1}.validate(25)),
                  InvalidConfigError);

  CHECK(SkipPolicyConfig{SkipPolicyConfig::Kind::NSkip, 0, 0.0}.label() == "Baseline");
  CHECK(SkipPolicyConfig{SkipPolicyConfig::Kind::NSkip, 2, 0.0}.label() == "NSKIP2");
  CHECK(SkipPolicyConfig{SkipPolicyConfig::Kind::Fsa, 0, 0.95}.label() == "FSA0.95");
  CHECK(SkipPolicyConfig{SkipPolicyConfig::Kind::Cb, 0, 0.5}.label() == "CB0.5");
  CHECK(skip_kind_from_string("cb") == SkipPolicyConfig::Kind::Cb);
  CHECK_THROWS_AS(skip_kind_from_string("bogus"), InvalidConfigError);
}
