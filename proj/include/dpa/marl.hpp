#pragma once

#include <Eigen/Dense>
#include <optional>
#include <string>
#include <vector>

#include "dpa/dqn.hpp"
#include "dpa/simcore.hpp"

namespace dpa {

constexpr int kNeighborSlots = 5;  // c, per feature group
constexpr int kStateDim = 7 + 6 * kNeighborSlots + 4 * kNeighborSlots;  // 57

/// Fixed per-deployment input normalization. Derived from (R, r, Pmax,
/// sigma2) only, never from a realized layout, so a checkpoint trained on one
/// initialization preprocesses identically on another with the same R and r.
struct NormalizationMap {
  double pmax = 0.0;
  double sigma2 = 0.0;
  double gain_mid_db = 0.0;    // center of the direct-channel path-loss window
  double gain_scale_db = 1.0;  // half-width plus fading/shadowing margin
  double rate_scale = 1.0;     // log2(1 + SINR cap)

  static NormalizationMap from_config(const SimConfig& cfg);

  double power(double p) const { return p / pmax; }
  double gain(double g) const;
  double rx_power(double q) const;  // received powers and interference totals
  double rate(double c) const { return c / rate_scale; }
  double share(double s) const { return std::min(s, 3.0); }

  std::string to_json() const;
  static NormalizationMap from_json(const std::string& text);
};

/// A = {0, Pmax/(L-1), ..., Pmax}. Throws for fewer than two levels.
Eigen::VectorXd action_set(double pmax, int levels = 10);

/// Argmax with probability 1-eps, uniform otherwise; argmax ties break to the
/// lowest index.
int select_action(const Eigen::VectorXd& q_values, double eps, Rng& rng);

/// One ranked slot of the interfering-neighbor group. Virtual padding
/// entries carry (rx_power 0, inv_w -1, c -1).
struct InterfererEntry {
  double rx_power = 0.0;
  double inv_w = -1.0;
  double c = -1.0;
  int link = -1;  // -1 for virtual noise agents
};

/// One ranked slot of the interfered-neighbor group. Virtual padding entries
/// carry (gain 0, inv_w -1, c -1, share 0).
struct InterferedEntry {
  double gain = 0.0;
  double inv_w = -1.0;
  double c = -1.0;
  double share = 0.0;
  int link = -1;
};

/// Sort descending by received power (ties to the lower link index), keep the
/// strongest c, pad with virtual noise agents.
std::vector<InterfererEntry> rank_and_pad_interferers(std::vector<InterfererEntry> candidates,
                                                      int c = kNeighborSlots);

/// Same contract, sorted by this agent's interference share at the receiver.
std::vector<InterferedEntry> rank_and_pad_interfered(std::vector<InterferedEntry> candidates,
                                                     int c = kNeighborSlots);

/// The 57 raw (unnormalized) state entries for agent i at the beginning of
/// the current slot. Layout: local(7), current interferers(15), previous
/// interferers(15), interfered(20).
Eigen::VectorXd assemble_state(const SlotState& st, int i, double sigma2);

/// assemble_state followed by the normalization map.
Eigen::VectorXd build_state(const SlotState& st, int i, double sigma2,
                            const NormalizationMap& norm);

/// Pricing reward recomputed from raw slot quantities: w_i C_i minus the sum
/// over the interfered set of w_k (C_{k minus i} - C_k). The interfered set is
/// {k != i : g(i,k) p_i > eta sigma2}.
double compute_reward(const Eigen::MatrixXd& g, const Eigen::VectorXd& p,
                      const Eigen::VectorXd& w, double eta, double sigma2, double cap,
                      int i);

/// Centrally trained, distributively executed agent system. All agents share
/// one deployed parameter copy; the trainer broadcasts every T_u slots and
/// copies arrive T_d slots later.
class DqnSystem {
 public:
  /// Fresh (matched) system; parameters initialized from the seed's net_init
  /// stream, trained for train_slots and frozen afterwards.
  DqnSystem(const SimConfig& cfg, const TrainHyper& hyper, long train_slots);

  /// Frozen (unmatched) system executing a loaded checkpoint.
  DqnSystem(const SimConfig& cfg, const TrainHyper& hyper, MlpParams checkpoint);

  /// Select powers for the current slot (sim.state().t); performs delivery,
  /// experience collection, one optimizer step, and the T_u sync/broadcast
  /// when in the training window.
  Eigen::VectorXd act(const Simulator& sim);

  const MlpParams& train_params() const { return train_; }
  const NormalizationMap& norm() const { return norm_; }
  long deployed_version() const { return deployed_version_; }
  double last_loss() const { return last_loss_; }

 private:
  void learn_and_broadcast(const Simulator& sim, long t);

  SimConfig cfg_;
  TrainHyper hyper_;
  long train_slots_ = 0;
  bool frozen_ = false;
  NormalizationMap norm_;
  Eigen::VectorXd actions_;

  MlpParams train_, target_, deployed_;
  RmsPropState rms_;
  ReplayMemory replay_;
  Rng policy_rng_;
  Rng trainer_rng_;

  long deployed_version_ = 0;  // slot of the broadcast the agents run on
  struct PendingBroadcast {
    long deliver_slot;
    long version;
    MlpParams params;
  };
  std::vector<PendingBroadcast> in_flight_;

  std::vector<Eigen::VectorXd> prev_states_;
  std::vector<int> prev_actions_;
  std::vector<Experience> pending_exps_;
  bool have_prev_ = false;
  bool have_pending_ = false;
  bool adopted_final_ = false;
  double last_loss_ = 0.0;
};

}  // namespace dpa
