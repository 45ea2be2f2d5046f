#include "dpa/marl.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "json.hpp"

namespace dpa {

NormalizationMap NormalizationMap::from_config(const SimConfig& cfg) {
  NormalizationMap m;
  m.pmax = cfg.pmax();
  m.sigma2 = cfg.sigma2();
  const double hi_db = -path_loss_db(cfg.r / 1000.0);                        // closest receiver
  const double lo_db = -path_loss_db(2.0 * cfg.R / std::sqrt(3.0) / 1000.0); // cell vertex
  m.gain_mid_db = 0.5 * (hi_db + lo_db);
  m.gain_scale_db = std::max(0.5 * (hi_db - lo_db), 1.0) + 40.0;
  m.rate_scale = std::log2(1.0 + cfg.sinr_cap());
  return m;
}

double NormalizationMap::gain(double g) const {
  const double db = 10.0 * std::log10(std::max(g, 1e-30));
  return std::clamp((db - gain_mid_db) / gain_scale_db, -3.0, 3.0);
}

double NormalizationMap::rx_power(double q) const {
  const double db_over_noise = 10.0 * std::log10(std::max(q, sigma2 * 1e-6) / sigma2);
  return std::clamp((db_over_noise - 30.0) / 30.0, -3.0, 3.0);
}

std::string NormalizationMap::to_json() const {
  nlohmann::json j;
  j["pmax"] = pmax;
  j["sigma2"] = sigma2;
  j["gain_mid_db"] = gain_mid_db;
  j["gain_scale_db"] = gain_scale_db;
  j["rate_scale"] = rate_scale;
  return j.dump();
}

NormalizationMap NormalizationMap::from_json(const std::string& text) {
  const auto j = nlohmann::json::parse(text);
  NormalizationMap m;
  m.pmax = j.at("pmax").get<double>();
  m.sigma2 = j.at("sigma2").get<double>();
  m.gain_mid_db = j.at("gain_mid_db").get<double>();
  m.gain_scale_db = j.at("gain_scale_db").get<double>();
  m.rate_scale = j.at("rate_scale").get<double>();
  return m;
}

Eigen::VectorXd action_set(double pmax, int levels) {
  if (levels <= 1) throw std::invalid_argument("action set needs at least two levels");
  Eigen::VectorXd a(levels);
  for (int k = 0; k < levels; ++k) a(k) = pmax * k / (levels - 1);
  return a;
}

int select_action(const Eigen::VectorXd& q_values, double eps, Rng& rng) {
  if (eps < 0.0 || eps > 1.0) throw std::invalid_argument("eps must be in [0, 1]");
  if (eps > 0.0 && rng.uniform() < eps)
    return static_cast<int>(rng.uniform_index(q_values.size()));
  int best = 0;
  for (int k = 1; k < q_values.size(); ++k)
    if (q_values(k) > q_values(best)) best = k;
  return best;
}

std::vector<InterfererEntry> rank_and_pad_interferers(std::vector<InterfererEntry> candidates,
                                                      int c) {
  std::stable_sort(candidates.begin(), candidates.end(),
                   [](const InterfererEntry& a, const InterfererEntry& b) {
                     if (a.rx_power != b.rx_power) return a.rx_power > b.rx_power;
                     return a.link < b.link;
                   });
  candidates.resize(static_cast<std::size_t>(c), InterfererEntry{});
  return candidates;
}

std::vector<InterferedEntry> rank_and_pad_interfered(std::vector<InterferedEntry> candidates,
                                                     int c) {
  std::stable_sort(candidates.begin(), candidates.end(),
                   [](const InterferedEntry& a, const InterferedEntry& b) {
                     if (a.share != b.share) return a.share > b.share;
                     return a.link < b.link;
                   });
  candidates.resize(static_cast<std::size_t>(c), InterferedEntry{});
  return candidates;
}

Eigen::VectorXd assemble_state(const SlotState& st, int i, double sigma2) {
  Eigen::VectorXd s(kStateDim);
  int pos = 0;

  // local group
  s(pos++) = st.p_prev(i);
  s(pos++) = 1.0 / st.w_now(i);
  s(pos++) = st.c_prev(i);
  s(pos++) = st.g_now(i, i);
  s(pos++) = st.g_prev(i, i);
  s(pos++) = st.interf_noise_now(i);
  s(pos++) = st.interf_noise_prev(i);

  // current interferers, ranked by the fresh received-power measurement
  std::vector<InterfererEntry> cur;
  for (int j : st.interferers_now[i])
    cur.push_back({st.g_now(j, i) * st.p_prev(j), 1.0 / st.w_prev(j), st.c_prev(j), j});
  for (const auto& e : rank_and_pad_interferers(std::move(cur))) {
    s(pos++) = e.rx_power;
    s(pos++) = e.inv_w;
    s(pos++) = e.c;
  }

  // previous interferers with the measurements that were available then
  std::vector<InterfererEntry> prev;
  for (int j : st.interferers_prev[i])
    prev.push_back({st.g_prev(j, i) * st.p_prev2(j), 1.0 / st.w_prev2(j), st.c_prev2(j), j});
  for (const auto& e : rank_and_pad_interferers(std::move(prev))) {
    s(pos++) = e.rx_power;
    s(pos++) = e.inv_w;
    s(pos++) = e.c;
  }

  // interfered neighbors, frozen at the agent's last active slot; their own
  // metrics are fresh, the interference footprint is the cached one
  std::vector<InterferedEntry> fed;
  for (const auto& [k, footprint] : st.interfered_cache[i]) {
    (void)sigma2;
    fed.push_back({st.g_prev(k, k), 1.0 / st.w_prev(k), st.c_prev(k),
                   footprint / st.realized_itn_prev(k), k});
  }
  for (const auto& e : rank_and_pad_interfered(std::move(fed))) {
    s(pos++) = e.gain;
    s(pos++) = e.inv_w;
    s(pos++) = e.c;
    s(pos++) = e.share;
  }
  return s;
}

Eigen::VectorXd build_state(const SlotState& st, int i, double sigma2,
                            const NormalizationMap& norm) {
  const Eigen::VectorXd raw = assemble_state(st, i, sigma2);
  Eigen::VectorXd s(kStateDim);
  int pos = 0;
  s(pos) = norm.power(raw(pos));
  ++pos;
  s(pos) = norm.rate(raw(pos));
  ++pos;
  s(pos) = norm.rate(raw(pos));
  ++pos;
  s(pos) = norm.gain(raw(pos));
  ++pos;
  s(pos) = norm.gain(raw(pos));
  ++pos;
  s(pos) = norm.rx_power(raw(pos));
  ++pos;
  s(pos) = norm.rx_power(raw(pos));
  ++pos;
  for (int k = 0; k < 2 * kNeighborSlots; ++k) {
    s(pos) = norm.rx_power(raw(pos));
    ++pos;
    s(pos) = norm.rate(raw(pos));
    ++pos;
    s(pos) = norm.rate(raw(pos));
    ++pos;
  }
  for (int k = 0; k < kNeighborSlots; ++k) {
    s(pos) = norm.gain(raw(pos));
    ++pos;
    s(pos) = norm.rate(raw(pos));
    ++pos;
    s(pos) = norm.rate(raw(pos));
    ++pos;
    s(pos) = norm.share(raw(pos));
    ++pos;
  }
  return s;
}

double compute_reward(const Eigen::MatrixXd& g, const Eigen::VectorXd& p,
                      const Eigen::VectorXd& w, double eta, double sigma2, double cap,
                      int i) {
  const int n = static_cast<int>(p.size());
  auto itn_at = [&](int k) {
    double acc = sigma2;
    for (int j = 0; j < n; ++j)
      if (j != k) acc += g(j, k) * p(j);
    return acc;
  };
  const double c_i = spectral_efficiency(g(i, i) * p(i) / itn_at(i), cap);
  double penalty = 0.0;
  for (int k = 0; k < n; ++k) {
    if (k == i || !(g(i, k) * p(i) > eta * sigma2)) continue;
    const double itn_k = itn_at(k);
    const double c_k = spectral_efficiency(g(k, k) * p(k) / itn_k, cap);
    const double c_without =
        spectral_efficiency(g(k, k) * p(k) / (itn_k - g(i, k) * p(i)), cap);
    penalty += w(k) * (c_without - c_k);
  }
  return w(i) * c_i - penalty;
}

DqnSystem::DqnSystem(const SimConfig& cfg, const TrainHyper& hyper, long train_slots)
    : cfg_(cfg),
      hyper_(hyper),
      train_slots_(train_slots),
      norm_(NormalizationMap::from_config(cfg)),
      replay_(0),
      policy_rng_(make_stream(cfg.seed, Stream::policy)),
      trainer_rng_(make_stream(cfg.seed, Stream::trainer)) {
  Rng init_rng = make_stream(cfg.seed, Stream::net_init);
  train_ = MlpParams::init(kDqnLayers, init_rng);
  target_ = train_;
  deployed_ = train_;
  rms_ = RmsPropState::zeros_like(train_);
  actions_ = action_set(cfg.pmax());
}

DqnSystem::DqnSystem(const SimConfig& cfg, const TrainHyper& hyper, MlpParams checkpoint)
    : cfg_(cfg),
      hyper_(hyper),
      train_slots_(0),
      frozen_(true),
      norm_(NormalizationMap::from_config(cfg)),
      replay_(0),
      policy_rng_(make_stream(cfg.seed, Stream::policy)),
      trainer_rng_(make_stream(cfg.seed, Stream::trainer)) {
  if (checkpoint.layer_sizes() != kDqnLayers)
    throw std::runtime_error("checkpoint layer shapes do not match the DQN architecture");
  train_ = std::move(checkpoint);
  target_ = train_;
  deployed_ = train_;
  rms_ = RmsPropState::zeros_like(train_);
  actions_ = action_set(cfg.pmax());
}

Eigen::VectorXd DqnSystem::act(const Simulator& sim) {
  const long t = sim.state().t;
  const int n = sim.n_links();
  const bool training = !frozen_ && t <= train_slots_;

  if (replay_.capacity() == 0)
    replay_ = ReplayMemory(static_cast<std::size_t>(n) * hyper_.memory_per_agent);

  if (training) {
    // parameter copies arriving over the backhaul become active this slot
    for (auto it = in_flight_.begin(); it != in_flight_.end();) {
      if (it->deliver_slot <= t) {
        deployed_ = std::move(it->params);
        deployed_version_ = it->version;
        it = in_flight_.erase(it);
      } else {
        ++it;
      }
    }
    if (deployed_version_ > 0 && deployed_version_ > t - hyper_.broadcast_delay_slots)
      throw std::logic_error("parameter staleness contract violated");
  } else if (!frozen_ && !adopted_final_) {
    deployed_ = train_;  // trainer leaves; agents keep the final parameters
    deployed_version_ = train_slots_;
    in_flight_.clear();
    adopted_final_ = true;
  }

  std::vector<Eigen::VectorXd> states(n);
  for (int i = 0; i < n; ++i) states[i] = build_state(sim.state(), i, cfg_.sigma2(), norm_);

  const double eps = training ? schedule(t, hyper_).second : 0.0;
  std::vector<int> acts(n);
  Eigen::VectorXd p(n);
  for (int i = 0; i < n; ++i) {
    acts[i] = select_action(forward(deployed_, states[i]), eps, policy_rng_);
    p(i) = actions_(acts[i]);
  }

  if (training) {
    // newest usable experience this slot is the one formed last slot
    if (have_pending_) {
      for (auto& e : pending_exps_) replay_.push(std::move(e));
      have_pending_ = false;
    }
    if (have_prev_) {
      pending_exps_.clear();
      for (int i = 0; i < n; ++i)
        pending_exps_.push_back(
            {prev_states_[i], prev_actions_[i], sim.state().reward_prev(i), states[i]});
      have_pending_ = true;
    }
    learn_and_broadcast(sim, t);
  }

  prev_states_ = std::move(states);
  prev_actions_ = std::move(acts);
  have_prev_ = true;
  return p;
}

void DqnSystem::learn_and_broadcast(const Simulator& sim, long t) {
  (void)sim;
  if (replay_.size() >= static_cast<std::size_t>(hyper_.batch_size)) {
    const auto batch = replay_.sample(static_cast<std::size_t>(hyper_.batch_size), trainer_rng_);
    auto [loss, grad] = loss_and_grad(train_, batch, target_, hyper_.gamma);
    last_loss_ = loss;
    rmsprop_step(train_, grad, schedule(t, hyper_).first, rms_);
  }
  if (t % hyper_.target_sync_slots == 0) {
    target_ = train_;
    in_flight_.push_back({t + hyper_.broadcast_delay_slots, t, train_});
  }
}

}  // namespace dpa
