#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "dpa/baselines.hpp"
#include "dpa/marl.hpp"
#include "dpa/simcore.hpp"

namespace dpa {

enum class AllocatorKind {
  dqn_matched,
  dqn_unmatched,
  wmmse,
  fp,
  central,
  random_power,
  full_power,
};

std::string allocator_name(AllocatorKind kind);
AllocatorKind allocator_from_name(const std::string& name);

struct RunConfig {
  SimConfig sim;
  TrainHyper hyper;
  long train_slots = 40000;
  long test_slots = 5000;
  std::vector<std::uint64_t> seeds = {1};
  std::vector<AllocatorKind> allocators = {AllocatorKind::full_power};
  std::string checkpoint_path;  // input for dqn_unmatched
  std::string out_dir = "runs";
  bool write_slot_log = false;
  int jobs = 1;

  std::string to_json() const;
  static RunConfig from_json(const std::string& text);
};

/// One (allocator, seed) episode over the full timeline: slot-0 bootstrap,
/// train_slots of interaction (training for the matched DQN), then the test
/// window. PF mode reinitializes weights at test start with one forced
/// full-power slot for every allocator.
struct EpisodeResult {
  AllocatorKind kind = AllocatorKind::full_power;
  std::uint64_t seed = 0;
  double avg_rate_test = 0.0;            // bit/s/Hz per link over the test window
  Eigen::VectorXd per_link_avg;          // per-link test-window averages
  std::vector<double> mean_c_per_slot;   // whole timeline, mean over links
  std::vector<double> pf_objective;      // per test slot (PF mode only)
  double pf_final = 0.0;
  MlpParams trained;                     // matched runs only
};

EpisodeResult run_episode(const RunConfig& cfg, AllocatorKind kind, std::uint64_t seed,
                          const MlpParams* unmatched_params = nullptr,
                          const std::string& slot_log_path = "");

/// Sorted (value, k/n) pairs; the empirical CDF treats each sample as a step
/// of height 1/n at its value. Throws on empty input.
std::vector<std::pair<double, double>> emit_cdf(std::vector<double> samples);

/// Trailing moving average over `window` entries (shorter prefix averaged
/// over what exists).
std::vector<double> moving_average(const std::vector<double>& values, int window);

/// Full experiment: every (allocator, seed) pair, optionally in parallel,
/// with summary JSON, learning-curve CSV, CDF CSV and checkpoints written
/// under cfg.out_dir. Returns the results in (allocator-major, seed-minor)
/// order.
std::vector<EpisodeResult> run_experiment(const RunConfig& cfg);

}  // namespace dpa
