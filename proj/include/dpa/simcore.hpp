#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <utility>
#include <vector>

#include "dpa/channel.hpp"
#include "dpa/geometry.hpp"

namespace dpa {

inline double dbm_to_watt(double dbm) { return std::pow(10.0, (dbm - 30.0) / 10.0); }

enum class ObjectiveMode { sum_rate, proportional_fair };

struct SimConfig {
  int n_cells = 19;
  LinksPerCell links_per_cell;
  double R = 500.0;  // m
  double r = 10.0;   // m
  double pmax_dbm = 38.0;
  double sigma2_dbm = -114.0;
  double bandwidth_hz = 10e6;
  double slot_duration_s = 0.02;
  DopplerSpec doppler;
  double eta = 5.0;           // neighbor-set SNR threshold
  double sinr_cap_db = 30.0;  // cap on reported spectral efficiency
  double beta = 0.01;         // proportional-fair averaging
  ObjectiveMode mode = ObjectiveMode::sum_rate;
  double shadow_sigma_db = 8.0;
  std::uint64_t seed = 1;

  // PSDs over the single band; SINR arithmetic cancels the bandwidth.
  double pmax() const { return dbm_to_watt(pmax_dbm) / bandwidth_hz; }
  double sigma2() const { return dbm_to_watt(sigma2_dbm) / bandwidth_hz; }
  double sinr_cap() const { return std::pow(10.0, sinr_cap_db / 10.0); }
  void validate() const;
};

/// gamma_i = g(i,i) p_i / (sum_{j != i} g(j,i) p_j + sigma2)
double sinr(const Eigen::MatrixXd& g, const Eigen::VectorXd& p, int i, double sigma2);

/// C = log2(1 + min(gamma, cap))
double spectral_efficiency(double gamma, double cap);

/// Cbar' = beta C + (1 - beta) Cbar; w' = 1 / Cbar'.
std::pair<double, double> pf_update(double cbar, double c, double beta);

/// I_i = {j != i : g_prev(j,i) p_prev_j > eta sigma2},
/// O_i = {k != i : g_prev(i,k) p_prev_i > eta sigma2}.
std::pair<std::vector<std::vector<int>>, std::vector<std::vector<int>>>
neighbor_sets(const Eigen::MatrixXd& g_prev, const Eigen::VectorXd& p_prev,
              double eta, double sigma2);

/// sum_i w_i C_i
double objective(const Eigen::VectorXd& w, const Eigen::VectorXd& c);

/// sum_i ln(Cbar_i * bandwidth). Throws on a non-positive entry.
double log_avg_objective(const Eigen::VectorXd& cbar, double bandwidth_hz);

/// Everything visible at the beginning of slot t. Histories are two deep;
/// during warm-up the missing registers hold slot-0 values.
struct SlotState {
  long t = 0;
  Eigen::VectorXd p_prev, p_prev2;    // p(t-1), p(t-2)
  Eigen::MatrixXd g_now, g_prev;      // g(t), g(t-1)
  Eigen::VectorXd c_prev, c_prev2;    // C(t-1), C(t-2)
  Eigen::VectorXd w_now, w_prev, w_prev2;
  Eigen::VectorXd cbar;               // after the slot t-1 update
  // measurements taken at slot start, new gains against not-yet-updated powers
  Eigen::VectorXd interf_noise_now;   // sum_{j!=i} g(t)(j,i) p(t-1)_j + sigma2
  Eigen::VectorXd interf_noise_prev;  // same quantity one slot earlier
  Eigen::VectorXd realized_itn_prev;  // sum_{j!=i} g(t-1)(j,i) p(t-1)_j + sigma2
  std::vector<std::vector<int>> interferers_now;   // I(t)
  std::vector<std::vector<int>> interferers_prev;  // I(t-1)
  std::vector<std::vector<int>> interfered_now;    // O(t)
  std::vector<long> t_last_active;
  // per link: (k, g(t')(i,k) p(t')_i) captured at the link's last active slot
  std::vector<std::vector<std::pair<int, double>>> interfered_cache;
  Eigen::VectorXd reward_prev;  // r(t): reward for the action taken at t-1
};

struct StepRecord {
  long slot = 0;
  Eigen::VectorXd p;
  Eigen::VectorXd sinr_db;
  Eigen::VectorXd c;
  Eigen::VectorXd w;
  Eigen::VectorXd reward;
};

/// The time-slotted engine. Construction performs the slot-0 full-power
/// bootstrap; step() applies the powers chosen for the current slot and
/// advances to the next. step() is the single mutation point.
class Simulator {
 public:
  explicit Simulator(const SimConfig& cfg);
  Simulator(const SimConfig& cfg, NetworkLayout layout);

  const SimConfig& config() const { return cfg_; }
  const NetworkLayout& layout() const { return layout_; }
  const LargeScaleGains& large_scale() const { return alpha_; }
  const SlotState& state() const { return st_; }
  int n_links() const { return layout_.n_links(); }

  /// Reinitialize PF weights on the next step (which the caller drives at
  /// full power): Cbar is re-seeded from that slot's realized C.
  void schedule_pf_reinit() { pf_reinit_pending_ = true; }

  StepRecord step(const Eigen::VectorXd& p_new);

 private:
  void bootstrap();
  Eigen::MatrixXd advance_fading();
  Eigen::VectorXd capped_rates(const Eigen::MatrixXd& g, const Eigen::VectorXd& p) const;

  SimConfig cfg_;
  NetworkLayout layout_;
  LargeScaleGains alpha_;
  FadingState fading_;
  Rng fading_rng_;
  Rng doppler_rng_;
  SlotState st_;
  bool pf_reinit_pending_ = false;
};

constexpr double kCbarFloor = 1e-6;  // bootstrap clamp for zero-rate links

}  // namespace dpa
