#include "replan/harness.hpp"

#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <thread>

namespace replan {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

constexpr char kMagic[4] = {'A', 'U', 'I', 'M'};
constexpr std::uint32_t kVersion = 1;

// --- binary io ---------------------------------------------------------------

void put_u32(std::ostream& os, std::uint32_t v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(v));  // little-endian host
}

void put_f32(std::ostream& os, double v) {
  const float f = static_cast<float>(v);
  os.write(reinterpret_cast<const char*>(&f), sizeof(f));
}

std::uint32_t get_u32(std::istream& is) {
  std::uint32_t v = 0;
  if (!is.read(reinterpret_cast<char*>(&v), sizeof(v)))
    throw CorruptCheckpointError("checkpoint truncated");
  return v;
}

double get_f32(std::istream& is) {
  float f = 0;
  if (!is.read(reinterpret_cast<char*>(&f), sizeof(f)))
    throw CorruptCheckpointError("checkpoint truncated");
  return static_cast<double>(f);
}

void put_vec(std::ostream& os, const Vec& v) {
  for (Eigen::Index i = 0; i < v.size(); ++i) put_f32(os, v[i]);
}

Vec get_vec(std::istream& is, int n) {
  Vec v(n);
  for (int i = 0; i < n; ++i) v[i] = get_f32(is);
  return v;
}

void put_mat(std::ostream& os, const Mat& m) {
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c) put_f32(os, m(r, c));
}

Mat get_mat(std::istream& is, int rows, int cols) {
  Mat m(rows, cols);
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) m(r, c) = get_f32(is);
  return m;
}

// --- small utilities ----------------------------------------------------------

void parallel_for(int n, int workers, const std::function<void(int)>& fn) {
  if (workers <= 1 || n <= 1) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  auto worker = [&] {
    for (int i = next.fetch_add(1); i < n; i = next.fetch_add(1)) fn(i);
  };
  std::vector<std::thread> pool;
  const int count = std::min(workers, n);
  pool.reserve(count);
  for (int w = 0; w < count; ++w) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
}

double mean_of(const std::vector<double>& v) {
  double s = 0;
  for (double x : v) s += x;
  return v.empty() ? 0.0 : s / static_cast<double>(v.size());
}

double sample_std(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  const double m = mean_of(v);
  double ss = 0;
  for (double x : v) ss += (x - m) * (x - m);
  return std::sqrt(ss / static_cast<double>(v.size() - 1));
}

std::ofstream open_out(const std::string& path) {
  fs::path p(path);
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot open for writing: " + path);
  return os;
}

// Per-setting evaluation statistics over one seeded run.
struct RunStats {
  double reward = 0, rc = 0, sx = 0, err = 0;
};

RunStats eval_run(const ExperimentConfig& cfg, const EnsembleModel& model,
                  const SkipPolicyConfig& policy, const ErrorModel* err_model,
                  std::uint64_t run_seed) {
  AgentConfig run_cfg = cfg.agent;
  run_cfg.skip = policy;
  run_cfg.train_model = false;
  run_cfg.n_iterations = 1;
  run_cfg.seed = run_seed;

  EnsembleModel local = model;  // cells own their copy; weights are read-only
  ReplayBuffer scratch;
  Rng rng = make_rng(run_seed);
  const std::vector<EpisodeRecord> records =
      run_skipping(run_cfg, local, scratch, err_model, rng);
  const EpisodeRecord& rec = records.back();
  return {rec.total_reward, static_cast<double>(rec.recalc_count), rec.sx(),
          rec.mean_error()};
}

std::vector<SkipPolicyConfig> sweep_settings(const SweepLists& lists) {
  std::vector<SkipPolicyConfig> settings;
  bool have_baseline = false;
  for (int n : lists.nskip_n) {
    if (n == 0) have_baseline = true;
    settings.push_back({SkipPolicyConfig::Kind::NSkip, n, 0.0});
  }
  if (!have_baseline)
    settings.insert(settings.begin(), {SkipPolicyConfig::Kind::NSkip, 0, 0.0});
  for (double c : lists.fsa_c) settings.push_back({SkipPolicyConfig::Kind::Fsa, 0, c});
  for (double c : lists.cb_c) settings.push_back({SkipPolicyConfig::Kind::Cb, 0, c});
  return settings;
}

}  // namespace

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

SweepLists SweepLists::defaults() {
  SweepLists lists;
  for (int n = 0; n <= 19; ++n) lists.nskip_n.push_back(n);
  lists.fsa_c = {0.1, 0.15, 0.25, 0.35, 0.5, 0.75, 0.85, 0.9, 0.95, 0.99, 0.999};
  for (int i = 0; i <= 40; ++i) lists.cb_c.push_back(0.05 * i);
  return lists;
}

ExperimentConfig parse_config_json(const std::string& text) {
  const json j = json::parse(text);
  ExperimentConfig cfg;
  cfg.experiment = j.value("experiment", cfg.experiment);
  cfg.runs_per_setting = j.value("runs_per_setting", cfg.runs_per_setting);
  cfg.output_dir = j.value("output_dir", cfg.output_dir);
  cfg.checkpoint = j.value("checkpoint", cfg.checkpoint);
  cfg.pretrain_restarts = j.value("pretrain_restarts", cfg.pretrain_restarts);
  cfg.workers = j.value("workers", cfg.workers);

  AgentConfig& a = cfg.agent;
  a.env = j.value("env", a.env);
  a.n_iterations = j.value("n_iterations", a.n_iterations);
  a.train_model = j.value("train_model", a.train_model);
  a.seed = j.value("seed", a.seed);
  a.task_horizon_override = j.value("task_horizon_override", a.task_horizon_override);

  if (j.contains("planner")) {
    const json& p = j["planner"];
    a.planner.population = p.value("population", a.planner.population);
    a.planner.elite_count = p.value("elite_count", a.planner.elite_count);
    a.planner.iterations = p.value("iterations", a.planner.iterations);
    a.planner.init_std_fraction = p.value("init_std_fraction", a.planner.init_std_fraction);
    a.planner.min_std = p.value("min_std", a.planner.min_std);
    a.planner.alpha = p.value("alpha", a.planner.alpha);
    a.planner.discount = p.value("discount", a.planner.discount);
    a.planner.threads = p.value("threads", a.planner.threads);
  }
  if (j.contains("skip")) {
    const json& s = j["skip"];
    a.skip.kind = skip_kind_from_string(s.value("kind", std::string("nskip")));
    a.skip.n = s.value("n", a.skip.n);
    a.skip.c = s.value("c", a.skip.c);
  }
  if (j.contains("model")) {
    const json& m = j["model"];
    a.model.members = m.value("members", a.model.members);
    a.model.hidden = m.value("hidden", a.model.hidden);
    a.model.particles = m.value("particles", a.model.particles);
    a.model.logvar_min = m.value("logvar_min", a.model.logvar_min);
    a.model.logvar_max = m.value("logvar_max", a.model.logvar_max);
  }
  if (j.contains("train")) {
    const json& t = j["train"];
    a.train.epochs = t.value("epochs", a.train.epochs);
    a.train.batch_size = t.value("batch_size", a.train.batch_size);
    a.train.learning_rate = t.value("learning_rate", a.train.learning_rate);
  }
  if (j.contains("sweep")) {
    const json& s = j["sweep"];
    if (s.contains("n")) cfg.sweep.nskip_n = s["n"].get<std::vector<int>>();
    if (s.contains("fsa_c")) cfg.sweep.fsa_c = s["fsa_c"].get<std::vector<double>>();
    if (s.contains("cb_c")) cfg.sweep.cb_c = s["cb_c"].get<std::vector<double>>();
  }
  return cfg;
}

ExperimentConfig load_config_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw MissingArtifactError("config file not found: " + path);
  std::stringstream ss;
  ss << is.rdbuf();
  return parse_config_json(ss.str());
}

// --- checkpoint ---------------------------------------------------------------

void save_checkpoint(const EnsembleModel& model, const ReplayBuffer& buffer,
                     const std::string& path) {
  std::ofstream os = open_out(path);
  os.write(kMagic, 4);
  put_u32(os, kVersion);
  put_u32(os, static_cast<std::uint32_t>(model.member_count()));

  const GaussianNet& net0 = model.members().front();
  const std::uint32_t layers[4] = {
      static_cast<std::uint32_t>(net0.input_dim()),
      static_cast<std::uint32_t>(net0.hidden_dim()),
      static_cast<std::uint32_t>(net0.hidden_dim()),
      static_cast<std::uint32_t>(2 * net0.state_dim())};
  put_u32(os, 4);
  for (std::uint32_t l : layers) put_u32(os, l);

  const Normalization& norm = model.norm();
  put_vec(os, norm.in_mu);
  put_vec(os, norm.in_sigma);
  put_vec(os, norm.t_mu);
  put_vec(os, norm.t_sigma);

  for (const GaussianNet& net : model.members()) {
    put_mat(os, net.w1);
    put_vec(os, net.b1);
    put_mat(os, net.w2);
    put_vec(os, net.b2);
    put_mat(os, net.w3);
    put_vec(os, net.b3);
  }

  put_u32(os, static_cast<std::uint32_t>(buffer.size()));
  put_u32(os, static_cast<std::uint32_t>(model.state_dim()));
  put_u32(os, static_cast<std::uint32_t>(model.action_dim()));
  for (std::size_t i = 0; i < buffer.size(); ++i) {
    const Transition& tr = buffer[i];
    put_vec(os, tr.s);
    put_vec(os, tr.a);
    put_vec(os, tr.s_next);
    put_f32(os, tr.reward);
  }
  if (!os) throw std::runtime_error("checkpoint write failed: " + path);
}

std::pair<EnsembleModel, ReplayBuffer> load_checkpoint(const std::string& path) {
  if (!fs::exists(path)) throw MissingArtifactError("checkpoint not found: " + path);
  std::ifstream is(path, std::ios::binary);
  if (!is) throw MissingArtifactError("checkpoint not readable: " + path);

  char magic[4];
  if (!is.read(magic, 4) || std::memcmp(magic, kMagic, 4) != 0)
    throw CorruptCheckpointError("bad checkpoint magic");
  if (get_u32(is) != kVersion) throw CorruptCheckpointError("unsupported checkpoint version");

  const std::uint32_t members = get_u32(is);
  if (members < 2 || members > 1024) throw CorruptCheckpointError("implausible member count");
  if (get_u32(is) != 4) throw CorruptCheckpointError("unexpected layer count");
  const std::uint32_t d_in = get_u32(is);
  const std::uint32_t hidden = get_u32(is);
  const std::uint32_t hidden2 = get_u32(is);
  const std::uint32_t d_out = get_u32(is);
  if (hidden != hidden2 || d_out % 2 != 0 || d_in == 0 || hidden == 0)
    throw CorruptCheckpointError("inconsistent layer sizes");
  const int d_s = static_cast<int>(d_out) / 2;
  const int d_a = static_cast<int>(d_in) - d_s;
  if (d_a <= 0) throw CorruptCheckpointError("inconsistent dimensions");

  ModelConfig mc;
  mc.members = static_cast<int>(members);
  mc.hidden = static_cast<int>(hidden);
  mc.particles = ((ModelConfig{}.particles + mc.members - 1) / mc.members) * mc.members;

  Rng dummy = make_rng(0);
  EnsembleModel model = EnsembleModel::random(d_s, d_a, mc, dummy);

  Normalization& norm = model.norm();
  norm.in_mu = get_vec(is, static_cast<int>(d_in));
  norm.in_sigma = get_vec(is, static_cast<int>(d_in));
  norm.t_mu = get_vec(is, d_s);
  norm.t_sigma = get_vec(is, d_s);

  for (GaussianNet& net : model.members()) {
    net.w1 = get_mat(is, static_cast<int>(hidden), static_cast<int>(d_in));
    net.b1 = get_vec(is, static_cast<int>(hidden));
    net.w2 = get_mat(is, static_cast<int>(hidden), static_cast<int>(hidden));
    net.b2 = get_vec(is, static_cast<int>(hidden));
    net.w3 = get_mat(is, 2 * d_s, static_cast<int>(hidden));
    net.b3 = get_vec(is, 2 * d_s);
  }

  const std::uint32_t count = get_u32(is);
  if (get_u32(is) != static_cast<std::uint32_t>(d_s) ||
      get_u32(is) != static_cast<std::uint32_t>(d_a))
    throw CorruptCheckpointError("transition block dimensions disagree with model");
  ReplayBuffer buffer;
  for (std::uint32_t i = 0; i < count; ++i) {
    Transition tr;
    tr.s = get_vec(is, d_s);
    tr.a = get_vec(is, d_a);
    tr.s_next = get_vec(is, d_s);
    tr.reward = get_f32(is);
    buffer.push(std::move(tr));
  }
  return {std::move(model), std::move(buffer)};
}

// --- drivers -------------------------------------------------------------------

std::string run_pretrain(const ExperimentConfig& cfg) {
  const EnvSpec spec = cfg.agent.env_spec();
  const int restarts = cfg.pretrain_restarts;

  std::vector<EnsembleModel> models;
  std::vector<ReplayBuffer> buffers(restarts);
  std::vector<double> final_reward(restarts, 0.0);
  models.reserve(restarts);
  for (int r = 0; r < restarts; ++r) {
    Rng init = derive_rng(cfg.agent.seed, 0x6d6f64656cULL, r);
    models.push_back(EnsembleModel::random(spec.d_s, spec.d_a, cfg.agent.model, init));
  }

  parallel_for(restarts, cfg.workers, [&](int r) {
    AgentConfig run_cfg = cfg.agent;
    run_cfg.train_model = true;
    run_cfg.seed = derive_rng(cfg.agent.seed, 0x726573ULL, r)();
    Rng rng = make_rng(run_cfg.seed);
    const auto records = run_mbrl(run_cfg, models[r], buffers[r], rng);
    final_reward[r] = records.back().total_reward;
  });

  int best = 0;
  for (int r = 1; r < restarts; ++r)
    if (final_reward[r] > final_reward[best]) best = r;

  fs::create_directories(cfg.output_dir);
  const std::string ckpt_path = cfg.output_dir + "/checkpoint.bin";
  save_checkpoint(models[best], buffers[best], ckpt_path);

  const ErrorModel em = build_step0_error_model(models[best], buffers[best]);
  write_error_model_csv(em, cfg.output_dir + "/e0_errors.csv");

  std::ofstream os = open_out(cfg.output_dir + "/pretrain_summary.csv");
  os << "restart,final_reward,selected\n";
  for (int r = 0; r < restarts; ++r)
    os << r << "," << format_double(final_reward[r]) << "," << (r == best ? 1 : 0) << "\n";
  return ckpt_path;
}

std::vector<ErrorAnalysisRow> run_error_analysis(const ExperimentConfig& cfg) {
  if (cfg.checkpoint.empty() || !fs::exists(cfg.checkpoint))
    throw MissingArtifactError("error analysis requires a pretrained checkpoint");
  auto [model, buffer] = load_checkpoint(cfg.checkpoint);

  const std::vector<int>& ns = cfg.sweep.nskip_n;
  const int runs = cfg.runs_per_setting;
  const int cells = static_cast<int>(ns.size()) * runs;

  // errors[cell] -> per-depth samples of that run
  std::vector<std::map<int, std::vector<double>>> cell_errors(cells);
  parallel_for(cells, cfg.workers, [&](int cell) {
    const int ni = cell / runs;
    const int run = cell % runs;
    AgentConfig run_cfg = cfg.agent;
    run_cfg.skip = {SkipPolicyConfig::Kind::NSkip, ns[ni], 0.0};
    run_cfg.train_model = false;
    run_cfg.n_iterations = 1;
    // run seed independent of n, so step-0 errors align across settings
    run_cfg.seed = derive_rng(cfg.agent.seed, 0x6561ULL, run)();
    EnsembleModel local = model;
    ReplayBuffer scratch;
    Rng rng = make_rng(run_cfg.seed);
    const auto records = run_skipping(run_cfg, local, scratch, nullptr, rng);
    const EpisodeRecord& rec = records.back();
    for (std::size_t t = 0; t < rec.step_errors.size(); ++t)
      cell_errors[cell][rec.skip_depths[t]].push_back(rec.step_errors[t]);
  });

  std::vector<ErrorAnalysisRow> rows;
  for (std::size_t ni = 0; ni < ns.size(); ++ni) {
    std::map<int, std::vector<double>> pooled;
    for (int run = 0; run < runs; ++run)
      for (const auto& [depth, errs] : cell_errors[ni * runs + run])
        pooled[depth].insert(pooled[depth].end(), errs.begin(), errs.end());
    for (const auto& [depth, errs] : pooled) {
      ErrorAnalysisRow row;
      row.n = ns[ni];
      row.step_index = depth;
      row.mean_err = mean_of(errs);
      row.std_err = sample_std(errs);
      row.min_err = *std::min_element(errs.begin(), errs.end());
      row.max_err = *std::max_element(errs.begin(), errs.end());
      rows.push_back(row);
    }
  }

  std::ofstream os = open_out(cfg.output_dir + "/error_analysis.csv");
  os << "n,step_index,mean_err,std_err,min_err,max_err\n";
  for (const auto& r : rows)
    os << r.n << "," << r.step_index << "," << format_double(r.mean_err) << ","
       << format_double(r.std_err) << "," << format_double(r.min_err) << ","
       << format_double(r.max_err) << "\n";
  return rows;
}

std::vector<ResultRow> run_sweep(const ExperimentConfig& cfg) {
  if (cfg.checkpoint.empty() || !fs::exists(cfg.checkpoint))
    throw MissingArtifactError("sweep requires a pretrained checkpoint");
  auto [model, buffer] = load_checkpoint(cfg.checkpoint);

  ErrorModel err_model;
  bool have_err_model = false;
  if (!cfg.sweep.fsa_c.empty()) {
    err_model = build_step0_error_model(model, buffer);
    have_err_model = true;
  }

  const std::vector<SkipPolicyConfig> settings = sweep_settings(cfg.sweep);
  const int runs = cfg.runs_per_setting;
  const int cells = static_cast<int>(settings.size()) * runs;

  std::vector<RunStats> stats(cells);
  parallel_for(cells, cfg.workers, [&](int cell) {
    const int si = cell / runs;
    const int run = cell % runs;
    const std::uint64_t run_seed = derive_rng(cfg.agent.seed, 0x7377ULL, run)();
    stats[cell] = eval_run(cfg, model, settings[si], have_err_model ? &err_model : nullptr,
                           run_seed);
  });

  std::vector<ResultRow> rows;
  rows.reserve(settings.size());
  for (std::size_t si = 0; si < settings.size(); ++si) {
    std::vector<double> rw, rc, sx, err;
    for (int run = 0; run < runs; ++run) {
      const RunStats& s = stats[si * runs + run];
      rw.push_back(s.reward);
      rc.push_back(s.rc);
      sx.push_back(s.sx);
      err.push_back(s.err);
    }
    ResultRow row;
    row.method = settings[si].label();
    row.Rw = mean_of(rw);
    row.RwSTD = sample_std(rw);
    row.Rc = mean_of(rc);
    row.RcSTD = sample_std(rc);
    row.Sx = mean_of(sx);
    row.SxSTD = sample_std(sx);
    row.RwMin = *std::min_element(rw.begin(), rw.end());
    row.RwMax = *std::max_element(rw.begin(), rw.end());
    row.Err = mean_of(err);
    row.ErrSTD = sample_std(err);
    rows.push_back(row);
  }

  double lo = rows.front().Rw, hi = rows.front().Rw;
  for (const auto& r : rows) {
    lo = std::min(lo, r.Rw);
    hi = std::max(hi, r.Rw);
  }
  for (auto& r : rows) r.RwNorm = hi > lo ? (r.Rw - lo) / (hi - lo) : 0.0;

  std::ofstream os = open_out(cfg.output_dir + "/sweep.csv");
  os << "# RwNorm: min-max normalization of Rw over all rows of this file\n";
  os << "method,Rw,RwSTD,Rc,RcSTD,Sx,SxSTD,RwMin,RwMax,Err,ErrSTD,RwNorm\n";
  for (const auto& r : rows)
    os << r.method << "," << format_double(r.Rw) << "," << format_double(r.RwSTD) << ","
       << format_double(r.Rc) << "," << format_double(r.RcSTD) << ","
       << format_double(r.Sx) << "," << format_double(r.SxSTD) << ","
       << format_double(r.RwMin) << "," << format_double(r.RwMax) << ","
       << format_double(r.Err) << "," << format_double(r.ErrSTD) << ","
       << format_double(r.RwNorm) << "\n";
  return rows;
}

std::vector<OnlineRow> run_online(const ExperimentConfig& cfg) {
  struct Setting {
    std::string label;
    bool baseline;
    double c;
  };
  std::vector<Setting> settings{{"Baseline", true, 0.0}};
  for (double c : cfg.sweep.cb_c) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "CB%g", c);
    settings.push_back({buf, false, c});
  }

  const int runs = cfg.runs_per_setting;
  const int iters = cfg.agent.n_iterations;
  const int cells = static_cast<int>(settings.size()) * runs;

  std::vector<std::vector<OnlineIterationStats>> series(cells);
  parallel_for(cells, cfg.workers, [&](int cell) {
    const int si = cell / runs;
    const int run = cell % runs;
    AgentConfig run_cfg = cfg.agent;
    run_cfg.train_model = true;
    run_cfg.seed = derive_rng(cfg.agent.seed, 0x6f6eULL, si * 1000 + run)();
    Rng rng = make_rng(run_cfg.seed);
    if (settings[si].baseline) {
      const EnvSpec spec = run_cfg.env_spec();
      Rng init = derive_rng(run_cfg.seed, 0x6d6f64656cULL);
      EnsembleModel model = EnsembleModel::random(spec.d_s, spec.d_a, run_cfg.model, init);
      ReplayBuffer buffer;
      const auto records = run_mbrl(run_cfg, model, buffer, rng);
      double cumulative = 0.0;
      for (std::size_t i = 0; i < records.size(); ++i) {
        cumulative += records[i].wall_seconds;
        series[cell].push_back({static_cast<int>(i) + 1, records[i].total_reward,
                                records[i].recalc_pct(), records[i].mean_error(),
                                records[i].std_error(), cumulative});
      }
    } else {
      run_cfg.skip = {SkipPolicyConfig::Kind::Cb, 0, settings[si].c};
      series[cell] = run_online_skipping(run_cfg, rng);
    }
  });

  std::vector<OnlineRow> rows;
  for (std::size_t si = 0; si < settings.size(); ++si) {
    for (int it = 0; it < iters; ++it) {
      std::vector<double> rewards, recalc, err_means, walls;
      for (int run = 0; run < runs; ++run) {
        const auto& s = series[si * runs + run];
        if (it < static_cast<int>(s.size())) {
          rewards.push_back(s[it].reward);
          recalc.push_back(s[it].recalc_pct);
          err_means.push_back(s[it].err_mean);
          walls.push_back(s[it].wall_seconds);
        }
      }
      OnlineRow row;
      row.method = settings[si].label;
      row.iteration = it + 1;
      row.wall_seconds = mean_of(walls);
      row.reward_mean = mean_of(rewards);
      row.reward_min = *std::min_element(rewards.begin(), rewards.end());
      row.reward_max = *std::max_element(rewards.begin(), rewards.end());
      row.recalc_pct = mean_of(recalc);
      row.err_mean = mean_of(err_means);
      row.err_std = sample_std(err_means);
      rows.push_back(row);
    }
  }

  std::ofstream os = open_out(cfg.output_dir + "/online.csv");
  os << "method,iteration,wall_seconds,reward_mean,reward_min,reward_max,recalc_pct,"
        "err_mean,err_std\n";
  for (const auto& r : rows)
    os << r.method << "," << r.iteration << "," << format_double(r.wall_seconds) << ","
       << format_double(r.reward_mean) << "," << format_double(r.reward_min) << ","
       << format_double(r.reward_max) << "," << format_double(r.recalc_pct) << ","
       << format_double(r.err_mean) << "," << format_double(r.err_std) << "\n";
  return rows;
}

std::vector<std::vector<std::string>> parse_csv(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw MissingArtifactError("csv not found: " + path);
  std::vector<std::vector<std::string>> rows;
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::vector<std::string> fields;
    std::stringstream ss(line);
    std::string field;
    while (std::getline(ss, field, ',')) fields.push_back(field);
    rows.push_back(std::move(fields));
  }
  return rows;
}

void write_error_model_csv(const ErrorModel& model, const std::string& path) {
  std::ofstream os = open_out(path);
  os << "# significance=" << format_double(model.significance) << "\n";
  os << "e0_errors\n";
  for (double e : model.errors) os << format_double(e) << "\n";
}

}  // namespace replan
