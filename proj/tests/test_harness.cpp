#include <doctest.h>

#include "replan/harness.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

using namespace replan;
namespace fs = std::filesystem;

namespace {

const std::string out_root = "harness_test_out";

ExperimentConfig tiny_experiment(const std::string& tag) {
  ExperimentConfig cfg;
  cfg.agent.env = "cartpole";
  cfg.agent.model.hidden = 8;
  cfg.agent.model.members = 2;
  cfg.agent.model.particles = 4;
  cfg.agent.planner.population = 8;
  cfg.agent.planner.elite_count = 2;
  cfg.agent.planner.iterations = 1;
  cfg.agent.train.epochs = 1;
  cfg.agent.train.batch_size = 8;
  cfg.agent.task_horizon_override = 30;
  cfg.agent.n_iterations = 1;
  cfg.agent.seed = 7;
  cfg.runs_per_setting = 2;
  cfg.pretrain_restarts = 2;
  cfg.workers = 2;
  cfg.output_dir = out_root + "/" + tag;
  cfg.sweep.nskip_n = {0, 2};
  cfg.sweep.fsa_c = {0.5};
  cfg.sweep.cb_c = {0.5};
  return cfg;
}

std::string slurp(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  std::stringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

std::pair<EnsembleModel, ReplayBuffer> small_trained_pair() {
  AgentConfig cfg = tiny_experiment("ignore").agent;
  cfg.train_model = true;
  const EnvSpec spec = cfg.env_spec();
  Rng init = make_rng(1);
  EnsembleModel model = EnsembleModel::random(spec.d_s, spec.d_a, cfg.model, init);
  ReplayBuffer buffer;
  Rng rng = make_rng(2);
  run_mbrl(cfg, model, buffer, rng);
  return {std::move(model), std::move(buffer)};
}

}  // namespace

TEST_CASE("checkpoint round trip reproduces forward passes bit-exactly") {
  auto [model, buffer] = small_trained_pair();
  const std::string path = out_root + "/roundtrip/checkpoint.bin";
  save_checkpoint(model, buffer, path);
  auto [loaded, loaded_buf] = load_checkpoint(path);

  REQUIRE(loaded.member_count() == model.member_count());
  Rng rng = make_rng(3);
  for (int i = 0; i < 20; ++i) {
    Vec s(4), a(1);
    for (int d = 0; d < 4; ++d) s[d] = uniform_in(rng, -2, 2);
    a[0] = uniform_in(rng, -15, 15);
    for (int b = 0; b < model.member_count(); ++b) {
      auto [mu1, var1] = model.forward_one(b, s, a);
      auto [mu2, var2] = loaded.forward_one(b, s, a);
      CHECK(mu1 == mu2);
      CHECK(var1 == var2);
    }
  }

  // buffer floats survive as their float32 values
  REQUIRE(loaded_buf.size() == buffer.size());
  for (std::size_t i = 0; i < buffer.size(); ++i) {
    for (int d = 0; d < 4; ++d)
      CHECK(loaded_buf[i].s[d] == static_cast<double>(static_cast<float>(buffer[i].s[d])));
    CHECK(loaded_buf[i].reward ==
          static_cast<double>(static_cast<float>(buffer[i].reward)));
  }

  // a second save of the loaded pair is byte-identical
  const std::string path2 = out_root + "/roundtrip/checkpoint2.bin";
  save_checkpoint(loaded, loaded_buf, path2);
  CHECK(slurp(path) == slurp(path2));
}

TEST_CASE("checkpoint rejects corruption") {
  auto [model, buffer] = small_trained_pair();
  const std::string path = out_root + "/corrupt/checkpoint.bin";
  save_checkpoint(model, buffer, path);

  // truncated
  const std::string data = slurp(path);
  const std::string trunc_path = out_root + "/corrupt/truncated.bin";
  std::ofstream(trunc_path, std::ios::binary)
      << data.substr(0, data.size() / 2);
  CHECK_THROWS_AS(load_checkpoint(trunc_path), CorruptCheckpointError);

  // wrong magic
  std::string bad = data;
  bad[0] = 'X';
  const std::string magic_path = out_root + "/corrupt/magic.bin";
  std::ofstream(magic_path, std::ios::binary) << bad;
  CHECK_THROWS_AS(load_checkpoint(magic_path), CorruptCheckpointError);

  // missing file
  CHECK_THROWS_AS(load_checkpoint(out_root + "/corrupt/nope.bin"), MissingArtifactError);
}

TEST_CASE("config json parsing with overrides and defaults") {
  const std::string text = R"({
    "experiment": "sweep",
    "env": "pendulum",
    "seed": 42,
    "runs_per_setting": 3,
    "output_dir": "results",
    "checkpoint": "ck.bin",
    "workers": 2,
    "n_iterations": 4,
    "train_model": true,
    "planner": {"population": 33, "elite_count": 5, "iterations": 2, "alpha": 0.2},
    "skip": {"kind": "cb", "c": 0.75},
    "model": {"members": 3, "hidden": 16, "particles": 9},
    "train": {"epochs": 7, "batch_size": 16, "learning_rate": 0.002},
    "sweep": {"n": [0, 1], "fsa_c": [0.5], "cb_c": [0.25, 0.5]}
  })";
  const ExperimentConfig cfg = parse_config_json(text);
  CHECK(cfg.experiment == "sweep");
  CHECK(cfg.agent.env == "pendulum");
  CHECK(cfg.agent.seed == 42);
  CHECK(cfg.runs_per_setting == 3);
  CHECK(cfg.agent.planner.population == 33);
  CHECK(cfg.agent.planner.alpha == 0.2);
  CHECK(cfg.agent.planner.iterations == 2);
  CHECK(cfg.agent.skip.kind == SkipPolicyConfig::Kind::Cb);
  CHECK(cfg.agent.skip.c == 0.75);
  CHECK(cfg.agent.model.members == 3);
  CHECK(cfg.agent.train.epochs == 7);
  CHECK(cfg.sweep.nskip_n == std::vector<int>{0, 1});
  CHECK(cfg.sweep.cb_c == std::vector<double>{0.25, 0.5});

  // defaults fill everything that is not specified
  const ExperimentConfig defaults = parse_config_json("{}");
  CHECK(defaults.agent.planner.population == 200);
  CHECK(defaults.agent.model.members == 5);
  CHECK(defaults.sweep.nskip_n.size() == 20);
  CHECK(defaults.sweep.cb_c.size() == 41);

  CHECK_THROWS_AS(parse_config_json(R"({"skip": {"kind": "bogus"}})"), InvalidConfigError);
  CHECK_THROWS_AS(load_config_file("no_such_config.json"), MissingArtifactError);
}

TEST_CASE("pretrain driver writes checkpoint, error sample and summary") {
  ExperimentConfig cfg = tiny_experiment("pretrain");
  const std::string ckpt = run_pretrain(cfg);
  CHECK(fs::exists(ckpt));
  CHECK(fs::exists(cfg.output_dir + "/e0_errors.csv"));
  CHECK(fs::exists(cfg.output_dir + "/pretrain_summary.csv"));

  auto [model, buffer] = load_checkpoint(ckpt);
  CHECK(model.state_dim() == 4);
  CHECK(buffer.size() == 2u * 30u);  // seeding episode + one training episode

  const auto summary = parse_csv(cfg.output_dir + "/pretrain_summary.csv");
  REQUIRE(summary.size() == 3u);  // header + one row per restart
  CHECK(summary[0] == std::vector<std::string>{"restart", "final_reward", "selected"});

  const auto errors = parse_csv(cfg.output_dir + "/e0_errors.csv");
  CHECK(errors[0] == std::vector<std::string>{"e0_errors"});
  CHECK(errors.size() == buffer.size() + 1);
}

TEST_CASE("sweep driver emits one row per setting and re-parses exactly") {
  ExperimentConfig cfg = tiny_experiment("sweep");
  cfg.checkpoint = run_pretrain(cfg);
  const auto rows = run_sweep(cfg);

  // settings: Baseline(n=0), NSKIP2, FSA0.5, CB0.5
  REQUIRE(rows.size() == 4u);
  CHECK(rows[0].method == "Baseline");
  CHECK(rows[0].Rc == doctest::Approx(30.0));
  CHECK(rows[0].RcSTD == 0.0);
  CHECK(rows[0].Sx == 0.0);
  CHECK(rows[1].method == "NSKIP2");
  CHECK(rows[1].Rc == doctest::Approx(10.0));
  CHECK(rows[1].RcSTD == 0.0);
  CHECK(rows[1].SxSTD == 0.0);

  for (const auto& r : rows) {
    CHECK(r.RwMin <= r.Rw + 1e-12);
    CHECK(r.Rw <= r.RwMax + 1e-12);
    CHECK(r.RwNorm >= 0.0);
    CHECK(r.RwNorm <= 1.0);
  }

  // normalization maps the extremes to 0 and 1
  double lo = 1e300, hi = -1e300;
  for (const auto& r : rows) {
    lo = std::min(lo, r.Rw);
    hi = std::max(hi, r.Rw);
  }
  for (const auto& r : rows) {
    if (r.Rw == lo) CHECK(r.RwNorm == 0.0);
    if (r.Rw == hi) CHECK(r.RwNorm == 1.0);
  }

  // the CSV re-parses to the in-memory rows
  const auto parsed = parse_csv(cfg.output_dir + "/sweep.csv");
  REQUIRE(parsed.size() == rows.size() + 1);
  CHECK(parsed[0] ==
        std::vector<std::string>{"method", "Rw", "RwSTD", "Rc", "RcSTD", "Sx", "SxSTD",
                                 "RwMin", "RwMax", "Err", "ErrSTD", "RwNorm"});
  for (std::size_t i = 0; i < rows.size(); ++i) {
    CHECK(parsed[i + 1][0] == rows[i].method);
    CHECK(std::stod(parsed[i + 1][1]) == doctest::Approx(rows[i].Rw).epsilon(1e-9));
    CHECK(std::stod(parsed[i + 1][3]) == doctest::Approx(rows[i].Rc).epsilon(1e-9));
    CHECK(std::stod(parsed[i + 1][9]) == doctest::Approx(rows[i].Err).epsilon(1e-9));
  }
}

TEST_CASE("sweep with a fixed seed is deterministic end to end") {
  ExperimentConfig cfg = tiny_experiment("sweep_det1");
  cfg.runs_per_setting = 1;
  cfg.sweep.fsa_c.clear();
  cfg.checkpoint = run_pretrain(cfg);
  run_sweep(cfg);

  ExperimentConfig cfg2 = cfg;
  cfg2.output_dir = out_root + "/sweep_det2";
  run_sweep(cfg2);
  CHECK(slurp(cfg.output_dir + "/sweep.csv") == slurp(cfg2.output_dir + "/sweep.csv"));
}

TEST_CASE("sweep and error analysis require a checkpoint") {
  ExperimentConfig cfg = tiny_experiment("missing");
  cfg.checkpoint = "does_not_exist.bin";
  CHECK_THROWS_AS(run_sweep(cfg), MissingArtifactError);
  CHECK_THROWS_AS(run_error_analysis(cfg), MissingArtifactError);
}

TEST_CASE("error analysis bins errors by steps since replanning") {
  ExperimentConfig cfg = tiny_experiment("erran");
  cfg.sweep.nskip_n = {0, 3};
  cfg.checkpoint = run_pretrain(cfg);
  const auto rows = run_error_analysis(cfg);

  // n = 0 concentrates every sample at depth 0; n = 3 covers depths 0..3
  bool saw_n0 = false;
  int n3_depths = 0;
  for (const auto& r : rows) {
    CHECK(r.mean_err >= 0.0);
    CHECK(r.min_err <= r.mean_err + 1e-12);
    CHECK(r.mean_err <= r.max_err + 1e-12);
    if (r.n == 0) {
      saw_n0 = true;
      CHECK(r.step_index == 0);
    }
    if (r.n == 3) ++n3_depths;
  }
  CHECK(saw_n0);
  CHECK(n3_depths == 4);

  const auto parsed = parse_csv(cfg.output_dir + "/error_analysis.csv");
  CHECK(parsed[0] == std::vector<std::string>{"n", "step_index", "mean_err", "std_err",
                                              "min_err", "max_err"});
  CHECK(parsed.size() == rows.size() + 1);
}

TEST_CASE("online driver reports full recalculation for the baseline") {
  ExperimentConfig cfg = tiny_experiment("online");
  cfg.agent.n_iterations = 2;
  cfg.runs_per_setting = 2;
  cfg.sweep.cb_c = {1e18};  // always-skip setting alongside the baseline
  const auto rows = run_online(cfg);

  REQUIRE(rows.size() == 4u);  // 2 settings x 2 iterations
  double prev_wall = -1.0;
  for (const auto& r : rows) {
    if (r.method == "Baseline") {
      CHECK(r.recalc_pct == doctest::Approx(100.0));
      CHECK(r.wall_seconds > prev_wall);
      prev_wall = r.wall_seconds;
    } else {
      // the generous bound skips everything except exhaustion replans
      CHECK(r.recalc_pct == doctest::Approx(100.0 * 2.0 / 30.0));
    }
    CHECK(r.reward_min <= r.reward_mean + 1e-12);
    CHECK(r.reward_mean <= r.reward_max + 1e-12);
  }
  CHECK(fs::exists(cfg.output_dir + "/online.csv"));
}

TEST_CASE("format_double survives a parse round trip") {
  Rng rng = make_rng(50);
  for (int i = 0; i < 200; ++i) {
    const double v = (uniform01(rng) - 0.5) * std::pow(10.0, uniform_in(rng, -8, 8));
    CHECK(std::stod(format_double(v)) == v);
  }
}
