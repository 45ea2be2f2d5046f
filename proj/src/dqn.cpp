#include "dpa/dqn.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <stdexcept>

#include "json.hpp"

namespace dpa {

MlpParams MlpParams::zeros(const std::vector<int>& layers) {
  MlpParams p;
  for (std::size_t l = 0; l + 1 < layers.size(); ++l) {
    p.W.push_back(Eigen::MatrixXd::Zero(layers[l + 1], layers[l]));
    p.b.push_back(Eigen::VectorXd::Zero(layers[l + 1]));
  }
  return p;
}

MlpParams MlpParams::init(const std::vector<int>& layers, Rng& rng, double weight_std) {
  MlpParams p = zeros(layers);
  for (auto& W : p.W)
    for (int r = 0; r < W.rows(); ++r)
      for (int c = 0; c < W.cols(); ++c) W(r, c) = rng.truncated_normal(weight_std);
  return p;
}

std::vector<int> MlpParams::layer_sizes() const {
  std::vector<int> sizes;
  if (W.empty()) return sizes;
  sizes.push_back(static_cast<int>(W.front().cols()));
  for (const auto& w : W) sizes.push_back(static_cast<int>(w.rows()));
  return sizes;
}

long MlpParams::param_count() const {
  long count = 0;
  for (const auto& w : W) count += w.size();
  for (const auto& v : b) count += v.size();
  return count;
}

void MlpParams::add_scaled(const MlpParams& other, double scale) {
  for (std::size_t l = 0; l < W.size(); ++l) {
    W[l] += scale * other.W[l];
    b[l] += scale * other.b[l];
  }
}

Eigen::VectorXd forward(const MlpParams& params, const Eigen::VectorXd& s) {
  if (!s.allFinite()) throw std::invalid_argument("non-finite network input");
  Eigen::VectorXd a = s;
  for (std::size_t l = 0; l < params.W.size(); ++l) {
    a = (params.W[l] * a + params.b[l]).eval();
    if (l + 1 < params.W.size()) a = a.array().tanh().matrix();
  }
  return a;
}

Eigen::MatrixXd forward_batch(const MlpParams& params, const Eigen::MatrixXd& states) {
  Eigen::MatrixXd a = states;
  for (std::size_t l = 0; l < params.W.size(); ++l) {
    a = ((params.W[l] * a).colwise() + params.b[l]).eval();
    if (l + 1 < params.W.size()) a = a.array().tanh().matrix();
  }
  return a;
}

double td_target(double r, const Eigen::VectorXd& s_next, const MlpParams& target,
                 double gamma) {
  return r + gamma * forward(target, s_next).maxCoeff();
}

std::pair<double, MlpParams> loss_and_grad(const MlpParams& train,
                                           const std::vector<Experience>& batch,
                                           const MlpParams& target, double gamma) {
  if (batch.empty()) throw std::invalid_argument("empty minibatch");
  const int B = static_cast<int>(batch.size());
  const auto layers = train.layer_sizes();
  const int n_layers = static_cast<int>(train.W.size());

  Eigen::MatrixXd S(layers.front(), B), Snext(layers.front(), B);
  for (int k = 0; k < B; ++k) {
    S.col(k) = batch[k].s;
    Snext.col(k) = batch[k].s_next;
  }

  // forward with cached activations
  std::vector<Eigen::MatrixXd> acts;  // acts[0] = input, acts[l+1] = layer output
  acts.reserve(n_layers + 1);
  acts.push_back(S);
  for (int l = 0; l < n_layers; ++l) {
    Eigen::MatrixXd z = (train.W[l] * acts.back()).colwise() + train.b[l];
    if (l + 1 < n_layers) z = z.array().tanh().matrix();
    acts.push_back(std::move(z));
  }
  const Eigen::MatrixXd& q = acts.back();

  const Eigen::MatrixXd q_next = forward_batch(target, Snext);

  double loss = 0.0;
  Eigen::MatrixXd delta = Eigen::MatrixXd::Zero(layers.back(), B);
  for (int k = 0; k < B; ++k) {
    const double y = batch[k].r + gamma * q_next.col(k).maxCoeff();
    const double err = y - q(batch[k].a, k);
    loss += err * err;
    delta(batch[k].a, k) = -2.0 * err;  // d(loss)/d(q_a)
  }

  MlpParams grad = MlpParams::zeros(layers);
  for (int l = n_layers - 1; l >= 0; --l) {
    grad.W[l] = delta * acts[l].transpose();
    grad.b[l] = delta.rowwise().sum();
    if (l > 0) {
      // propagate through tanh of the previous layer
      delta = ((train.W[l].transpose() * delta).array() *
               (1.0 - acts[l].array().square()))
                  .matrix();
    }
  }
  return {loss, grad};
}

RmsPropState RmsPropState::zeros_like(const MlpParams& params, double decay, double eps) {
  RmsPropState s;
  s.decay = decay;
  s.eps = eps;
  for (const auto& w : params.W) s.vW.push_back(Eigen::MatrixXd::Zero(w.rows(), w.cols()));
  for (const auto& v : params.b) s.vb.push_back(Eigen::VectorXd::Zero(v.size()));
  return s;
}

void rmsprop_step(MlpParams& params, const MlpParams& grad, double lr, RmsPropState& state) {
  for (std::size_t l = 0; l < params.W.size(); ++l) {
    state.vW[l] = state.decay * state.vW[l] + (1.0 - state.decay) * grad.W[l].cwiseAbs2();
    state.vb[l] = state.decay * state.vb[l] + (1.0 - state.decay) * grad.b[l].cwiseAbs2();
    params.W[l] -= lr * (grad.W[l].array() / (state.vW[l].array().sqrt() + state.eps)).matrix();
    params.b[l] -= lr * (grad.b[l].array() / (state.vb[l].array().sqrt() + state.eps)).matrix();
  }
}

std::pair<double, double> schedule(long t, const TrainHyper& h) {
  const double lr = h.lr0 * std::pow(1.0 - h.lr_decay, static_cast<double>(t));
  const double eps =
      std::max(h.eps_min, h.eps0 * std::pow(1.0 - h.eps_decay, static_cast<double>(t)));
  return {lr, eps};
}

void ReplayMemory::push(Experience e) {
  items_.push_back(std::move(e));
  if (items_.size() > capacity_) items_.pop_front();
}

std::vector<Experience> ReplayMemory::sample(std::size_t count, Rng& rng) const {
  if (items_.empty()) throw std::runtime_error("sampling from empty replay memory");
  std::vector<Experience> out;
  out.reserve(count);
  if (items_.size() >= count) {
    // partial Fisher-Yates, without replacement
    std::vector<std::size_t> idx(items_.size());
    std::iota(idx.begin(), idx.end(), 0);
    for (std::size_t k = 0; k < count; ++k) {
      const std::size_t pick = k + rng.uniform_index(idx.size() - k);
      std::swap(idx[k], idx[pick]);
      out.push_back(items_[idx[k]]);
    }
  } else {
    for (std::size_t k = 0; k < count; ++k)
      out.push_back(items_[rng.uniform_index(items_.size())]);
  }
  return out;
}

void save_checkpoint(const std::string& path, const MlpParams& params,
                     const std::string& extra_json) {
  nlohmann::json j;
  j["format"] = "dpa-checkpoint";
  j["version"] = 1;
  j["layers"] = params.layer_sizes();
  j["activation"] = "tanh";
  std::vector<double> flat;
  flat.reserve(params.param_count());
  for (std::size_t l = 0; l < params.W.size(); ++l) {
    flat.insert(flat.end(), params.W[l].data(), params.W[l].data() + params.W[l].size());
    flat.insert(flat.end(), params.b[l].data(), params.b[l].data() + params.b[l].size());
  }
  j["weights"] = flat;
  j["extra"] = nlohmann::json::parse(extra_json);
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write checkpoint: " + path);
  out << j.dump();
}

std::pair<MlpParams, std::string> load_checkpoint(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read checkpoint: " + path);
  nlohmann::json j;
  in >> j;
  if (j.value("format", "") != "dpa-checkpoint")
    throw std::runtime_error("not a dpa checkpoint: " + path);
  const auto layers = j.at("layers").get<std::vector<int>>();
  const auto flat = j.at("weights").get<std::vector<double>>();
  MlpParams p = MlpParams::zeros(layers);
  if (static_cast<long>(flat.size()) != p.param_count())
    throw std::runtime_error("checkpoint weight count does not match layer shapes");
  std::size_t pos = 0;
  for (std::size_t l = 0; l < p.W.size(); ++l) {
    std::copy_n(flat.begin() + pos, p.W[l].size(), p.W[l].data());
    pos += p.W[l].size();
    std::copy_n(flat.begin() + pos, p.b[l].size(), p.b[l].data());
    pos += p.b[l].size();
  }
  return {std::move(p), j.value("extra", nlohmann::json::object()).dump()};
}

}  // namespace dpa
