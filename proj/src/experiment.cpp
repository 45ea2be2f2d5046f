#include "dpa/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <thread>

#include "json.hpp"

namespace dpa {

namespace {

namespace fs = std::filesystem;

nlohmann::json sim_to_json(const SimConfig& c) {
  nlohmann::json j;
  j["n_cells"] = c.n_cells;
  j["links_per_cell"] = {{"fixed", c.links_per_cell.fixed},
                         {"random", c.links_per_cell.random},
                         {"random_max", c.links_per_cell.random_max}};
  j["R_m"] = c.R;
  j["r_m"] = c.r;
  j["pmax_dbm"] = c.pmax_dbm;
  j["sigma2_dbm"] = c.sigma2_dbm;
  j["bandwidth_hz"] = c.bandwidth_hz;
  j["slot_duration_s"] = c.slot_duration_s;
  switch (c.doppler.mode) {
    case DopplerSpec::Mode::fixed: j["doppler"] = "fixed"; break;
    case DopplerSpec::Mode::uncorrelated: j["doppler"] = "uncorrelated"; break;
    case DopplerSpec::Mode::random_per_slot: j["doppler"] = "random"; break;
  }
  j["fd_hz"] = c.doppler.fd_hz;
  j["fd_range_hz"] = {c.doppler.fd_lo, c.doppler.fd_hi};
  j["eta"] = c.eta;
  j["sinr_cap_db"] = c.sinr_cap_db;
  j["beta"] = c.beta;
  j["mode"] = c.mode == ObjectiveMode::sum_rate ? "sum-rate" : "pf";
  j["shadow_sigma_db"] = c.shadow_sigma_db;
  j["seed"] = c.seed;
  return j;
}

SimConfig sim_from_json(const nlohmann::json& j) {
  SimConfig c;
  c.n_cells = j.value("n_cells", c.n_cells);
  if (j.contains("links_per_cell")) {
    const auto& l = j.at("links_per_cell");
    c.links_per_cell.fixed = l.value("fixed", 1);
    c.links_per_cell.random = l.value("random", false);
    c.links_per_cell.random_max = l.value("random_max", 4);
  }
  c.R = j.value("R_m", c.R);
  c.r = j.value("r_m", c.r);
  c.pmax_dbm = j.value("pmax_dbm", c.pmax_dbm);
  c.sigma2_dbm = j.value("sigma2_dbm", c.sigma2_dbm);
  c.bandwidth_hz = j.value("bandwidth_hz", c.bandwidth_hz);
  c.slot_duration_s = j.value("slot_duration_s", c.slot_duration_s);
  const std::string dop = j.value("doppler", "fixed");
  if (dop == "fixed") c.doppler.mode = DopplerSpec::Mode::fixed;
  else if (dop == "uncorrelated") c.doppler.mode = DopplerSpec::Mode::uncorrelated;
  else if (dop == "random") c.doppler.mode = DopplerSpec::Mode::random_per_slot;
  else throw std::invalid_argument("unknown doppler mode: " + dop);
  c.doppler.fd_hz = j.value("fd_hz", c.doppler.fd_hz);
  if (j.contains("fd_range_hz")) {
    c.doppler.fd_lo = j.at("fd_range_hz").at(0).get<double>();
    c.doppler.fd_hi = j.at("fd_range_hz").at(1).get<double>();
  }
  c.eta = j.value("eta", c.eta);
  c.sinr_cap_db = j.value("sinr_cap_db", c.sinr_cap_db);
  c.beta = j.value("beta", c.beta);
  const std::string mode = j.value("mode", "sum-rate");
  if (mode == "sum-rate") c.mode = ObjectiveMode::sum_rate;
  else if (mode == "pf") c.mode = ObjectiveMode::proportional_fair;
  else throw std::invalid_argument("unknown objective mode: " + mode);
  c.shadow_sigma_db = j.value("shadow_sigma_db", c.shadow_sigma_db);
  c.seed = j.value("seed", c.seed);
  return c;
}

nlohmann::json hyper_to_json(const TrainHyper& h) {
  nlohmann::json j;
  j["gamma"] = h.gamma;
  j["batch_size"] = h.batch_size;
  j["memory_per_agent"] = h.memory_per_agent;
  j["lr0"] = h.lr0;
  j["lr_decay"] = h.lr_decay;
  j["eps0"] = h.eps0;
  j["eps_min"] = h.eps_min;
  j["eps_decay"] = h.eps_decay;
  j["target_sync_slots"] = h.target_sync_slots;
  j["broadcast_delay_slots"] = h.broadcast_delay_slots;
  return j;
}

TrainHyper hyper_from_json(const nlohmann::json& j) {
  TrainHyper h;
  h.gamma = j.value("gamma", h.gamma);
  h.batch_size = j.value("batch_size", h.batch_size);
  h.memory_per_agent = j.value("memory_per_agent", h.memory_per_agent);
  h.lr0 = j.value("lr0", h.lr0);
  h.lr_decay = j.value("lr_decay", h.lr_decay);
  h.eps0 = j.value("eps0", h.eps0);
  h.eps_min = j.value("eps_min", h.eps_min);
  h.eps_decay = j.value("eps_decay", h.eps_decay);
  h.target_sync_slots = j.value("target_sync_slots", h.target_sync_slots);
  h.broadcast_delay_slots = j.value("broadcast_delay_slots", h.broadcast_delay_slots);
  return h;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
}

}  // namespace

std::string allocator_name(AllocatorKind kind) {
  switch (kind) {
    case AllocatorKind::dqn_matched: return "dqn-matched";
    case AllocatorKind::dqn_unmatched: return "dqn-unmatched";
    case AllocatorKind::wmmse: return "wmmse";
    case AllocatorKind::fp: return "fp";
    case AllocatorKind::central: return "central";
    case AllocatorKind::random_power: return "random";
    case AllocatorKind::full_power: return "full-power";
  }
  throw std::logic_error("unreachable");
}

AllocatorKind allocator_from_name(const std::string& name) {
  for (AllocatorKind k :
       {AllocatorKind::dqn_matched, AllocatorKind::dqn_unmatched, AllocatorKind::wmmse,
        AllocatorKind::fp, AllocatorKind::central, AllocatorKind::random_power,
        AllocatorKind::full_power}) {
    if (allocator_name(k) == name) return k;
  }
  throw std::invalid_argument("unknown allocator: " + name);
}

std::string RunConfig::to_json() const {
  nlohmann::json j;
  j["sim"] = sim_to_json(sim);
  j["hyper"] = hyper_to_json(hyper);
  j["train_slots"] = train_slots;
  j["test_slots"] = test_slots;
  j["seeds"] = seeds;
  std::vector<std::string> names;
  for (auto k : allocators) names.push_back(allocator_name(k));
  j["allocators"] = names;
  j["checkpoint_path"] = checkpoint_path;
  j["out_dir"] = out_dir;
  j["write_slot_log"] = write_slot_log;
  j["jobs"] = jobs;
  return j.dump(2);
}

RunConfig RunConfig::from_json(const std::string& text) {
  const auto j = nlohmann::json::parse(text);
  RunConfig c;
  if (j.contains("sim")) c.sim = sim_from_json(j.at("sim"));
  if (j.contains("hyper")) c.hyper = hyper_from_json(j.at("hyper"));
  c.train_slots = j.value("train_slots", c.train_slots);
  c.test_slots = j.value("test_slots", c.test_slots);
  if (j.contains("seeds")) c.seeds = j.at("seeds").get<std::vector<std::uint64_t>>();
  if (j.contains("allocators")) {
    c.allocators.clear();
    for (const auto& n : j.at("allocators")) c.allocators.push_back(allocator_from_name(n));
  }
  c.checkpoint_path = j.value("checkpoint_path", c.checkpoint_path);
  c.out_dir = j.value("out_dir", c.out_dir);
  c.write_slot_log = j.value("write_slot_log", c.write_slot_log);
  c.jobs = j.value("jobs", c.jobs);
  return c;
}

EpisodeResult run_episode(const RunConfig& cfg, AllocatorKind kind, std::uint64_t seed,
                          const MlpParams* unmatched_params,
                          const std::string& slot_log_path) {
  SimConfig sim_cfg = cfg.sim;
  sim_cfg.seed = seed;
  Simulator sim(sim_cfg);
  const int n = sim.n_links();
  const long total = cfg.train_slots + cfg.test_slots;
  const long test_start = cfg.train_slots + 1;
  const bool pf = sim_cfg.mode == ObjectiveMode::proportional_fair;

  std::optional<DqnSystem> dqn;
  if (kind == AllocatorKind::dqn_matched)
    dqn.emplace(sim_cfg, cfg.hyper, cfg.train_slots);
  if (kind == AllocatorKind::dqn_unmatched) {
    if (!unmatched_params) throw std::invalid_argument("unmatched run needs a checkpoint");
    dqn.emplace(sim_cfg, cfg.hyper, *unmatched_params);
  }
  Rng rand_rng = make_stream(seed, Stream::random_alloc);
  Rng solver_rng = make_stream(seed, Stream::solver_init);
  Eigen::VectorXd warm;  // previous solution of fp/wmmse/central
  bool have_warm = false;

  std::ofstream slot_log;
  if (!slot_log_path.empty()) {
    slot_log.open(slot_log_path);
    slot_log << "slot,link,power,sinr_db,c,w,reward\n";
  }

  EpisodeResult res;
  res.kind = kind;
  res.seed = seed;
  res.mean_c_per_slot.reserve(total);
  Eigen::VectorXd link_sums = Eigen::VectorXd::Zero(n);

  for (long t = 1; t <= total; ++t) {
    Eigen::VectorXd p;
    if (pf && t == test_start) {
      // weight reinitialization: one forced full-power slot for everyone
      sim.schedule_pf_reinit();
      p = full_power(n, sim_cfg.pmax());
    } else {
      switch (kind) {
        case AllocatorKind::dqn_matched:
        case AllocatorKind::dqn_unmatched:
          p = dqn->act(sim);
          break;
        case AllocatorKind::full_power:
          p = full_power(n, sim_cfg.pmax());
          break;
        case AllocatorKind::random_power:
          p = random_alloc(n, sim_cfg.pmax(), rand_rng);
          break;
        case AllocatorKind::wmmse: {
          SolverOptions opts;
          if (have_warm) opts.p_init = &warm;
          warm = wmmse_solve(sim.state().g_now, sim.state().w_now, sim_cfg.pmax(),
                             sim_cfg.sigma2(), opts)
                     .p;
          have_warm = true;
          p = warm;
          break;
        }
        case AllocatorKind::fp: {
          SolverOptions opts;
          if (have_warm) opts.p_init = &warm;
          warm = fp_solve(sim.state().g_now, sim.state().w_now, sim_cfg.pmax(),
                          sim_cfg.sigma2(), solver_rng, opts)
                     .p;
          have_warm = true;
          p = warm;
          break;
        }
        case AllocatorKind::central: {
          SolverOptions opts;
          if (have_warm) opts.p_init = &warm;
          warm = fp_solve(sim.state().g_prev, sim.state().w_now, sim_cfg.pmax(),
                          sim_cfg.sigma2(), solver_rng, opts)
                     .p;
          have_warm = true;
          p = warm;
          break;
        }
      }
    }

    const StepRecord rec = sim.step(p);
    res.mean_c_per_slot.push_back(rec.c.mean());
    if (t >= test_start) {
      link_sums += rec.c;
      if (pf) res.pf_objective.push_back(log_avg_objective(sim.state().cbar, sim_cfg.bandwidth_hz));
    }
    if (slot_log.is_open()) {
      for (int i = 0; i < n; ++i)
        slot_log << rec.slot << ',' << i << ',' << rec.p(i) << ',' << rec.sinr_db(i) << ','
                 << rec.c(i) << ',' << rec.w(i) << ',' << rec.reward(i) << '\n';
    }
  }

  res.per_link_avg = link_sums / static_cast<double>(cfg.test_slots);
  res.avg_rate_test = res.per_link_avg.mean();
  if (pf && !res.pf_objective.empty()) res.pf_final = res.pf_objective.back();
  if (kind == AllocatorKind::dqn_matched) res.trained = dqn->train_params();
  return res;
}

std::vector<std::pair<double, double>> emit_cdf(std::vector<double> samples) {
  if (samples.empty()) throw std::invalid_argument("empty sample for CDF");
  std::sort(samples.begin(), samples.end());
  std::vector<std::pair<double, double>> out;
  out.reserve(samples.size());
  const double n = static_cast<double>(samples.size());
  for (std::size_t k = 0; k < samples.size(); ++k)
    out.push_back({samples[k], static_cast<double>(k + 1) / n});
  return out;
}

std::vector<double> moving_average(const std::vector<double>& values, int window) {
  std::vector<double> out(values.size());
  double acc = 0.0;
  for (std::size_t k = 0; k < values.size(); ++k) {
    acc += values[k];
    if (k >= static_cast<std::size_t>(window)) acc -= values[k - window];
    out[k] = acc / std::min<std::size_t>(k + 1, window);
  }
  return out;
}

std::vector<EpisodeResult> run_experiment(const RunConfig& cfg) {
  fs::create_directories(cfg.out_dir);
  write_text(fs::path(cfg.out_dir) / "config.json", cfg.to_json());

  // unmatched checkpoint loaded once up front
  MlpParams unmatched;
  bool have_unmatched = false;
  for (auto k : cfg.allocators) {
    if (k == AllocatorKind::dqn_unmatched) {
      auto [params, extra] = load_checkpoint(cfg.checkpoint_path);
      if (params.layer_sizes() != kDqnLayers)
        throw std::runtime_error("checkpoint layer shapes do not match the DQN architecture");
      unmatched = std::move(params);
      have_unmatched = true;
    }
  }

  struct Job {
    AllocatorKind kind;
    std::uint64_t seed;
  };
  std::vector<Job> jobs;
  for (auto k : cfg.allocators)
    for (auto s : cfg.seeds) jobs.push_back({k, s});
  std::vector<EpisodeResult> results(jobs.size());

  const int workers = std::max(1, cfg.jobs);
  std::size_t next = 0;
  while (next < jobs.size()) {
    const std::size_t batch = std::min<std::size_t>(workers, jobs.size() - next);
    std::vector<std::thread> pool;
    for (std::size_t b = 0; b < batch; ++b) {
      const std::size_t idx = next + b;
      pool.emplace_back([&, idx] {
        const Job& job = jobs[idx];
        std::string log_path;
        if (cfg.write_slot_log)
          log_path = (fs::path(cfg.out_dir) / ("slots_" + allocator_name(job.kind) + "_seed" +
                                               std::to_string(job.seed) + ".csv"))
                         .string();
        results[idx] = run_episode(cfg, job.kind, job.seed,
                                   have_unmatched ? &unmatched : nullptr, log_path);
      });
    }
    for (auto& th : pool) th.join();
    next += batch;
  }

  // per-allocator aggregation
  nlohmann::json summary;
  summary["config"] = nlohmann::json::parse(cfg.to_json());
  for (auto kind : cfg.allocators) {
    nlohmann::json entry;
    std::vector<double> rates, pf_finals, all_link_avgs;
    for (const auto& r : results) {
      if (r.kind != kind) continue;
      rates.push_back(r.avg_rate_test);
      if (!r.pf_objective.empty()) pf_finals.push_back(r.pf_final);
      for (int i = 0; i < r.per_link_avg.size(); ++i)
        all_link_avgs.push_back(r.per_link_avg(i));
    }
    auto mean_std = [](const std::vector<double>& v) {
      double m = 0.0;
      for (double x : v) m += x;
      m /= v.size();
      double var = 0.0;
      for (double x : v) var += (x - m) * (x - m);
      return std::pair<double, double>{m, v.size() > 1 ? std::sqrt(var / (v.size() - 1)) : 0.0};
    };
    const auto [m, sd] = mean_std(rates);
    entry["avg_rate_per_link"] = {{"per_seed", rates}, {"mean", m}, {"std", sd}};
    if (!pf_finals.empty()) {
      const auto [pm, psd] = mean_std(pf_finals);
      entry["sum_log_avg_rate"] = {{"per_seed", pf_finals}, {"mean", pm}, {"std", psd}};
    }
    summary["results"][allocator_name(kind)] = entry;

    // empirical CDF of per-link average rates, pooled across seeds
    std::string cdf_csv = "value,quantile\n";
    for (const auto& [v, q] : emit_cdf(all_link_avgs))
      cdf_csv += std::to_string(v) + "," + std::to_string(q) + "\n";
    write_text(fs::path(cfg.out_dir) / ("cdf_" + allocator_name(kind) + ".csv"), cdf_csv);
  }

  // learning curves + checkpoints for matched runs
  for (const auto& r : results) {
    if (r.kind != AllocatorKind::dqn_matched) continue;
    const auto ma = moving_average(r.mean_c_per_slot, 250);
    std::string csv = "slot,mean_c,moving_avg_250\n";
    for (std::size_t k = 0; k < ma.size(); ++k)
      csv += std::to_string(k + 1) + "," + std::to_string(r.mean_c_per_slot[k]) + "," +
             std::to_string(ma[k]) + "\n";
    write_text(fs::path(cfg.out_dir) / ("learning_curve_seed" + std::to_string(r.seed) + ".csv"),
               csv);
    nlohmann::json extra;
    extra["norm"] = nlohmann::json::parse(NormalizationMap::from_config(cfg.sim).to_json());
    extra["seed"] = r.seed;
    extra["train_slots"] = cfg.train_slots;
    save_checkpoint(
        (fs::path(cfg.out_dir) / ("checkpoint_seed" + std::to_string(r.seed) + ".json")).string(),
        r.trained, extra.dump());
  }

  write_text(fs::path(cfg.out_dir) / "summary.json", summary.dump(2));
  return results;
}

}  // namespace dpa
