#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <deque>
#include <string>
#include <vector>

#include "dpa/rng.hpp"

namespace dpa {

/// Layer widths of the Q-network: 57 inputs, three tanh hidden layers,
/// linear output with one port per action.
inline const std::vector<int> kDqnLayers = {57, 200, 100, 40, 10};

struct MlpParams {
  std::vector<Eigen::MatrixXd> W;  // W[l] is (layers[l+1] x layers[l])
  std::vector<Eigen::VectorXd> b;

  static MlpParams zeros(const std::vector<int>& layers);
  /// Truncated-normal weights (std 0.01, cut at 2 std), zero biases.
  static MlpParams init(const std::vector<int>& layers, Rng& rng,
                        double weight_std = 0.01);

  std::vector<int> layer_sizes() const;
  long param_count() const;
  void add_scaled(const MlpParams& other, double scale);  // this += scale * other
};

/// Three tanh hidden layers, linear output. s must match the input width.
Eigen::VectorXd forward(const MlpParams& params, const Eigen::VectorXd& s);

/// Batched forward; states are columns.
Eigen::MatrixXd forward_batch(const MlpParams& params, const Eigen::MatrixXd& states);

struct Experience {
  Eigen::VectorXd s;
  int a = 0;
  double r = 0.0;
  Eigen::VectorXd s_next;
};

/// r + gamma * max_a' q(s', a'; target).
double td_target(double r, const Eigen::VectorXd& s_next, const MlpParams& target,
                 double gamma);

/// Batch-sum least-squares TD loss and its gradient w.r.t. the train
/// parameters (target parameters held constant).
std::pair<double, MlpParams> loss_and_grad(const MlpParams& train,
                                           const std::vector<Experience>& batch,
                                           const MlpParams& target, double gamma);

struct RmsPropState {
  std::vector<Eigen::MatrixXd> vW;
  std::vector<Eigen::VectorXd> vb;
  double decay = 0.9;
  double eps = 1e-10;

  static RmsPropState zeros_like(const MlpParams& params, double decay = 0.9,
                                 double eps = 1e-10);
};

/// v <- decay v + (1-decay) g^2; theta <- theta - lr g / (sqrt(v) + eps).
void rmsprop_step(MlpParams& params, const MlpParams& grad, double lr, RmsPropState& state);

struct TrainHyper {
  double gamma = 0.5;
  int batch_size = 256;        // M_b
  int memory_per_agent = 1000; // M_m; capacity is n * M_m
  double lr0 = 5e-3;
  double lr_decay = 1e-4;      // per-slot rate: lr(t) = lr0 (1 - lr_decay)^t
  double eps0 = 0.2;
  double eps_min = 1e-2;
  double eps_decay = 1e-4;
  long target_sync_slots = 100;  // T_u
  long broadcast_delay_slots = 50;  // T_d
};

/// (learning rate, exploration epsilon) at slot t.
std::pair<double, double> schedule(long t, const TrainHyper& h);

/// FIFO replay memory with uniform minibatch sampling (without replacement
/// once the memory holds at least batch_size experiences).
class ReplayMemory {
 public:
  explicit ReplayMemory(std::size_t capacity) : capacity_(capacity) {}
  void push(Experience e);
  std::size_t size() const { return items_.size(); }
  std::size_t capacity() const { return capacity_; }
  const Experience& at(std::size_t i) const { return items_[i]; }
  std::vector<Experience> sample(std::size_t count, Rng& rng) const;

 private:
  std::size_t capacity_;
  std::deque<Experience> items_;
};

void save_checkpoint(const std::string& path, const MlpParams& params,
                     const std::string& extra_json = "{}");
/// Returns the parameters and the extra blob. Throws on malformed files or
/// when the stored shapes are inconsistent with the stored layer list.
std::pair<MlpParams, std::string> load_checkpoint(const std::string& path);

}  // namespace dpa
