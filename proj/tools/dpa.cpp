// Experiment runner: training, testing, benchmarking and the grid oracle.
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "dpa/experiment.hpp"

namespace {

using namespace dpa;

struct CommonArgs {
  std::string config_path;
  std::string out_dir;
  std::string seeds_csv;
  std::string mode;
  std::string doppler;
  int n_cells = -1;
  double R = -1.0, r = -1.0, fd = -1.0;
  long train_slots = -1, test_slots = -1;
  int links_fixed = -1;
  bool links_random = false;
  int jobs = 0;
  bool slot_log = false;
};

void add_common(CLI::App* cmd, CommonArgs& a) {
  cmd->add_option("--config", a.config_path, "JSON config file (flags override fields)");
  cmd->add_option("--out", a.out_dir, "output directory");
  cmd->add_option("--seeds", a.seeds_csv, "comma-separated seed list");
  cmd->add_option("--n-cells", a.n_cells, "number of cells");
  cmd->add_option("--R", a.R, "half transmitter-to-transmitter distance, m");
  cmd->add_option("--r", a.r, "receiver-free inner radius, m");
  cmd->add_option("--fd", a.fd, "maximum Doppler frequency, Hz");
  cmd->add_option("--doppler", a.doppler, "fixed | uncorrelated | random");
  cmd->add_option("--mode", a.mode, "sum-rate | pf");
  cmd->add_option("--train-slots", a.train_slots, "training horizon");
  cmd->add_option("--test-slots", a.test_slots, "testing horizon");
  cmd->add_option("--links-per-cell", a.links_fixed, "fixed links per cell");
  cmd->add_flag("--links-random", a.links_random, "random 1..4 links per cell");
  cmd->add_option("--jobs", a.jobs, "parallel (seed, allocator) runs");
  cmd->add_flag("--slot-log", a.slot_log, "write per-slot CSV logs");
}

RunConfig resolve(const CommonArgs& a) {
  RunConfig cfg;
  if (!a.config_path.empty()) {
    std::ifstream in(a.config_path);
    if (!in) throw std::runtime_error("cannot read config: " + a.config_path);
    std::stringstream ss;
    ss << in.rdbuf();
    cfg = RunConfig::from_json(ss.str());
  }
  if (!a.out_dir.empty()) cfg.out_dir = a.out_dir;
  if (!a.seeds_csv.empty()) {
    cfg.seeds.clear();
    std::stringstream ss(a.seeds_csv);
    std::string tok;
    while (std::getline(ss, tok, ',')) cfg.seeds.push_back(std::stoull(tok));
  }
  if (a.n_cells > 0) cfg.sim.n_cells = a.n_cells;
  if (a.R > 0) cfg.sim.R = a.R;
  if (a.r > 0) cfg.sim.r = a.r;
  if (a.fd > 0) cfg.sim.doppler.fd_hz = a.fd;
  if (!a.doppler.empty()) {
    if (a.doppler == "fixed") cfg.sim.doppler.mode = DopplerSpec::Mode::fixed;
    else if (a.doppler == "uncorrelated") cfg.sim.doppler.mode = DopplerSpec::Mode::uncorrelated;
    else if (a.doppler == "random") cfg.sim.doppler.mode = DopplerSpec::Mode::random_per_slot;
    else throw std::runtime_error("unknown doppler mode: " + a.doppler);
  }
  if (!a.mode.empty()) {
    if (a.mode == "sum-rate") cfg.sim.mode = ObjectiveMode::sum_rate;
    else if (a.mode == "pf") cfg.sim.mode = ObjectiveMode::proportional_fair;
    else throw std::runtime_error("unknown mode: " + a.mode);
  }
  if (a.train_slots >= 0) cfg.train_slots = a.train_slots;
  if (a.test_slots > 0) cfg.test_slots = a.test_slots;
  if (a.links_fixed > 0) cfg.sim.links_per_cell.fixed = a.links_fixed;
  if (a.links_random) cfg.sim.links_per_cell.random = true;
  if (a.jobs > 0) cfg.jobs = a.jobs;
  if (a.slot_log) cfg.write_slot_log = true;
  return cfg;
}

void print_summary(const RunConfig& cfg, const std::vector<EpisodeResult>& results) {
  for (auto kind : cfg.allocators) {
    double mean = 0.0;
    int count = 0;
    for (const auto& r : results)
      if (r.kind == kind) {
        mean += r.avg_rate_test;
        ++count;
      }
    if (count) mean /= count;
    std::printf("%-14s avg rate %.4f bit/s/Hz per link (%d seed%s)\n",
                allocator_name(kind).c_str(), mean, count, count == 1 ? "" : "s");
    if (cfg.sim.mode == ObjectiveMode::proportional_fair) {
      double pf = 0.0;
      for (const auto& r : results)
        if (r.kind == kind) pf += r.pf_final;
      std::printf("%-14s sum log-average rate %.3f\n", "", count ? pf / count : 0.0);
    }
  }
  std::printf("outputs in %s\n", cfg.out_dir.c_str());
}

int cmd_oracle(int n, int levels, std::uint64_t seed, double R, double r) {
  SimConfig sc;
  sc.n_cells = n;
  sc.R = R;
  sc.r = r;
  sc.seed = seed;
  Simulator sim(sc);
  const Eigen::MatrixXd& g = sim.state().g_now;
  const Eigen::VectorXd w = Eigen::VectorXd::Ones(sim.n_links());
  Rng rng = make_stream(seed, Stream::solver_init);

  const auto oracle = grid_oracle(g, w, sc.pmax(), sc.sigma2(), levels);
  const auto fp = fp_solve(g, w, sc.pmax(), sc.sigma2(), rng);
  const auto wm = wmmse_solve(g, w, sc.pmax(), sc.sigma2());
  const double fo = oracle.objective_trace.back();
  const double ff = weighted_sum_rate(g, w, fp.p, sc.sigma2());
  const double fw = weighted_sum_rate(g, w, wm.p, sc.sigma2());
  std::printf("grid oracle (%d levels): %.6f bit/s/Hz\n", levels, fo);
  std::printf("fp:    %.6f  (%.2f%% of oracle, %d iterations)\n", ff, 100.0 * ff / fo,
              fp.iterations);
  std::printf("wmmse: %.6f  (%.2f%% of oracle, %d iterations)\n", fw, 100.0 * fw / fo,
              wm.iterations);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"time-slotted power allocation: multi-agent deep Q-learning vs centralized baselines"};
  app.require_subcommand(1);

  CommonArgs train_args, test_args, bench_args;
  std::string test_checkpoint, bench_allocs = "wmmse,fp,central,random,full-power";

  auto* train = app.add_subcommand("train", "train a matched DQN, then test it");
  add_common(train, train_args);

  auto* test = app.add_subcommand("test", "evaluate a stored checkpoint on fresh layouts");
  add_common(test, test_args);
  test->add_option("--checkpoint", test_checkpoint, "checkpoint JSON")->required();

  auto* bench = app.add_subcommand("bench", "run baseline allocators only");
  add_common(bench, bench_args);
  bench->add_option("--allocators", bench_allocs, "comma-separated allocator list");

  int oracle_n = 3, oracle_levels = 10;
  std::uint64_t oracle_seed = 1;
  double oracle_R = 500.0, oracle_r = 10.0;
  auto* oracle = app.add_subcommand("oracle", "exhaustive grid search on a small instance");
  oracle->add_option("--n", oracle_n, "links (levels^n must stay <= 1e7)");
  oracle->add_option("--levels", oracle_levels, "grid levels");
  oracle->add_option("--seed", oracle_seed, "instance seed");
  oracle->add_option("--R", oracle_R, "half transmitter-to-transmitter distance, m");
  oracle->add_option("--r", oracle_r, "inner radius, m");

  CLI11_PARSE(app, argc, argv);

  try {
    if (app.got_subcommand(train)) {
      RunConfig cfg = resolve(train_args);
      cfg.allocators = {AllocatorKind::dqn_matched};
      print_summary(cfg, run_experiment(cfg));
    } else if (app.got_subcommand(test)) {
      RunConfig cfg = resolve(test_args);
      cfg.allocators = {AllocatorKind::dqn_unmatched};
      cfg.checkpoint_path = test_checkpoint;
      cfg.train_slots = 0;  // no training phase; evaluate over the test window
      print_summary(cfg, run_experiment(cfg));
    } else if (app.got_subcommand(bench)) {
      RunConfig cfg = resolve(bench_args);
      cfg.allocators.clear();
      std::stringstream ss(bench_allocs);
      std::string tok;
      while (std::getline(ss, tok, ',')) cfg.allocators.push_back(allocator_from_name(tok));
      print_summary(cfg, run_experiment(cfg));
    } else if (app.got_subcommand(oracle)) {
      return cmd_oracle(oracle_n, oracle_levels, oracle_seed, oracle_R, oracle_r);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
