#include "dpa/simcore.hpp"

#include <cmath>
#include <stdexcept>

namespace dpa {

void SimConfig::validate() const {
  if (n_cells < 1) throw std::invalid_argument("n_cells must be >= 1");
  if (R <= 0.0) throw std::invalid_argument("R must be positive");
  if (r < 10.0 || r > R - 1.0) throw std::invalid_argument("r must satisfy 10 <= r <= R - 1");
  if (eta <= 0.0) throw std::invalid_argument("eta must be positive");
  if (beta <= 0.0 || beta > 1.0) throw std::invalid_argument("beta must be in (0, 1]");
  if (pmax() <= 0.0) throw std::invalid_argument("Pmax must be positive");
}

double sinr(const Eigen::MatrixXd& g, const Eigen::VectorXd& p, int i, double sigma2) {
  double interf = 0.0;
  for (int j = 0; j < p.size(); ++j)
    if (j != i) interf += g(j, i) * p(j);
  return g(i, i) * p(i) / (interf + sigma2);
}

double spectral_efficiency(double gamma, double cap) {
  return std::log2(1.0 + std::min(gamma, cap));
}

std::pair<double, double> pf_update(double cbar, double c, double beta) {
  double next = beta * c + (1.0 - beta) * cbar;
  if (next <= 0.0) next = kCbarFloor;
  return {next, 1.0 / next};
}

std::pair<std::vector<std::vector<int>>, std::vector<std::vector<int>>>
neighbor_sets(const Eigen::MatrixXd& g_prev, const Eigen::VectorXd& p_prev,
              double eta, double sigma2) {
  const int n = static_cast<int>(p_prev.size());
  std::vector<std::vector<int>> in_sets(n), out_sets(n);
  const double thr = eta * sigma2;
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      if (j == i) continue;
      if (g_prev(j, i) * p_prev(j) > thr) {
        in_sets[i].push_back(j);
        out_sets[j].push_back(i);
      }
    }
  }
  return {in_sets, out_sets};
}

double objective(const Eigen::VectorXd& w, const Eigen::VectorXd& c) {
  if (w.size() != c.size()) throw std::invalid_argument("length mismatch");
  return w.dot(c);
}

double log_avg_objective(const Eigen::VectorXd& cbar, double bandwidth_hz) {
  double sum = 0.0;
  for (int i = 0; i < cbar.size(); ++i) {
    if (cbar(i) <= 0.0) throw std::domain_error("log-average rate needs positive Cbar");
    sum += std::log(cbar(i) * bandwidth_hz);
  }
  return sum;
}

Simulator::Simulator(const SimConfig& cfg)
    : Simulator(cfg, place_links(build_hex_layout(cfg.n_cells, cfg.R), cfg.R, cfg.r,
                                 cfg.links_per_cell, cfg.seed)) {}

Simulator::Simulator(const SimConfig& cfg, NetworkLayout layout)
    : cfg_(cfg),
      layout_(std::move(layout)),
      fading_rng_(make_stream(cfg.seed, Stream::fading_step)),
      doppler_rng_(make_stream(cfg.seed, Stream::doppler)) {
  cfg_.validate();
  Rng shadow_rng = make_stream(cfg_.seed, Stream::shadowing);
  alpha_ = compose_large_scale(layout_, shadow_rng, cfg_.shadow_sigma_db);
  Rng init_rng = make_stream(cfg_.seed, Stream::fading_init);
  const double rho = cfg_.doppler.mode == DopplerSpec::Mode::uncorrelated
                         ? 0.0
                         : correlation_rho(cfg_.doppler.fd_hz, cfg_.slot_duration_s);
  fading_ = init_fading(layout_.n_links(), init_rng, rho);
  bootstrap();
}

Eigen::VectorXd Simulator::capped_rates(const Eigen::MatrixXd& g,
                                        const Eigen::VectorXd& p) const {
  const int n = static_cast<int>(p.size());
  Eigen::VectorXd c(n);
  for (int i = 0; i < n; ++i) c(i) = spectral_efficiency(sinr(g, p, i, cfg_.sigma2()), cfg_.sinr_cap());
  return c;
}

Eigen::MatrixXd Simulator::advance_fading() {
  if (cfg_.doppler.mode == DopplerSpec::Mode::random_per_slot) {
    const int n = layout_.n_links();
    Eigen::MatrixXd rho(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        rho(i, j) = correlation_rho(doppler_rng_.uniform(cfg_.doppler.fd_lo, cfg_.doppler.fd_hi),
                                    cfg_.slot_duration_s);
    step_fading(fading_, fading_rng_, rho);
  } else {
    step_fading(fading_, fading_rng_);
  }
  return compose_gains(alpha_, fading_);
}

void Simulator::bootstrap() {
  const int n = layout_.n_links();
  const double s2 = cfg_.sigma2();

  // slot 0: every link transmits at Pmax
  const Eigen::MatrixXd g0 = compose_gains(alpha_, fading_);
  const Eigen::VectorXd p0 = Eigen::VectorXd::Constant(n, cfg_.pmax());
  const Eigen::VectorXd c0 = capped_rates(g0, p0);

  st_.t = 1;
  st_.p_prev = p0;
  st_.p_prev2 = p0;
  st_.c_prev = c0;
  st_.c_prev2 = c0;

  st_.cbar = c0.cwiseMax(kCbarFloor);
  if (cfg_.mode == ObjectiveMode::proportional_fair) {
    st_.w_now = st_.cbar.cwiseInverse();
  } else {
    st_.w_now = Eigen::VectorXd::Ones(n);
  }
  st_.w_prev = st_.w_now;
  st_.w_prev2 = st_.w_now;

  auto [in_sets, out_sets] = neighbor_sets(g0, p0, cfg_.eta, s2);
  st_.interferers_now = in_sets;
  st_.interferers_prev = in_sets;
  st_.interfered_now = out_sets;

  st_.t_last_active.assign(n, 0);
  st_.interfered_cache.assign(n, {});
  for (int i = 0; i < n; ++i)
    for (int k : out_sets[i]) st_.interfered_cache[i].push_back({k, g0(i, k) * p0(i)});

  Eigen::VectorXd itn0(n);
  for (int i = 0; i < n; ++i) {
    double acc = s2;
    for (int j = 0; j < n; ++j)
      if (j != i) acc += g0(j, i) * p0(j);
    itn0(i) = acc;
  }
  st_.realized_itn_prev = itn0;
  st_.interf_noise_prev = itn0;  // warm-up fill, no slot -1 measurement exists

  st_.g_prev = g0;
  st_.g_now = advance_fading();
  Eigen::VectorXd mix(n);
  for (int i = 0; i < n; ++i) {
    double acc = s2;
    for (int j = 0; j < n; ++j)
      if (j != i) acc += st_.g_now(j, i) * p0(j);
    mix(i) = acc;
  }
  st_.interf_noise_now = mix;

  // reward for the bootstrap slot (full power, weights of slot 0)
  st_.reward_prev = Eigen::VectorXd::Zero(n);
  for (int i = 0; i < n; ++i) {
    double penalty = 0.0;
    for (int k : out_sets[i]) {
      const double without = spectral_efficiency(
          g0(k, k) * p0(k) / (itn0(k) - g0(i, k) * p0(i)), cfg_.sinr_cap());
      penalty += st_.w_now(k) * (without - c0(k));
    }
    st_.reward_prev(i) = st_.w_now(i) * c0(i) - penalty;
  }
}

StepRecord Simulator::step(const Eigen::VectorXd& p_new) {
  const int n = layout_.n_links();
  if (p_new.size() != n) throw std::invalid_argument("power vector length mismatch");
  const double s2 = cfg_.sigma2();
  const Eigen::MatrixXd& g = st_.g_now;

  Eigen::VectorXd realized_itn(n), gamma(n), c(n);
  for (int i = 0; i < n; ++i) {
    double acc = s2;
    for (int j = 0; j < n; ++j)
      if (j != i) acc += g(j, i) * p_new(j);
    realized_itn(i) = acc;
    gamma(i) = g(i, i) * p_new(i) / acc;
    c(i) = spectral_efficiency(gamma(i), cfg_.sinr_cap());
  }

  // weights for slot t+1
  Eigen::VectorXd cbar_next, w_next;
  if (cfg_.mode == ObjectiveMode::proportional_fair) {
    if (pf_reinit_pending_) {
      cbar_next = c.cwiseMax(kCbarFloor);
      pf_reinit_pending_ = false;
    } else {
      cbar_next.resize(n);
      for (int i = 0; i < n; ++i) cbar_next(i) = pf_update(st_.cbar(i), c(i), cfg_.beta).first;
    }
    w_next = cbar_next.cwiseInverse();
  } else {
    cbar_next.resize(n);
    for (int i = 0; i < n; ++i) cbar_next(i) = pf_update(st_.cbar(i), c(i), cfg_.beta).first;
    w_next = Eigen::VectorXd::Ones(n);
  }

  auto [in_next, out_next] = neighbor_sets(g, p_new, cfg_.eta, s2);

  // rewards r(t+1) for the powers applied this slot (Eqs. of the pricing form)
  Eigen::VectorXd reward(n);
  for (int i = 0; i < n; ++i) {
    double penalty = 0.0;
    for (int k : out_next[i]) {
      const double without = spectral_efficiency(
          g(k, k) * p_new(k) / (realized_itn(k) - g(i, k) * p_new(i)), cfg_.sinr_cap());
      penalty += st_.w_now(k) * (without - c(k));
    }
    reward(i) = st_.w_now(i) * c(i) - penalty;
  }

  for (int i = 0; i < n; ++i) {
    if (p_new(i) > 0.0) {
      st_.t_last_active[i] = st_.t;
      st_.interfered_cache[i].clear();
      for (int k : out_next[i]) st_.interfered_cache[i].push_back({k, g(i, k) * p_new(i)});
    }
  }

  StepRecord rec;
  rec.slot = st_.t;
  rec.p = p_new;
  rec.sinr_db.resize(n);
  for (int i = 0; i < n; ++i)
    rec.sinr_db(i) = gamma(i) > 0.0 ? 10.0 * std::log10(gamma(i))
                                    : -std::numeric_limits<double>::infinity();
  rec.c = c;
  rec.w = st_.w_now;
  rec.reward = reward;

  // shift histories and advance the channel
  st_.p_prev2 = st_.p_prev;
  st_.p_prev = p_new;
  st_.c_prev2 = st_.c_prev;
  st_.c_prev = c;
  st_.w_prev2 = st_.w_prev;
  st_.w_prev = st_.w_now;
  st_.w_now = w_next;
  st_.cbar = cbar_next;
  st_.interferers_prev = st_.interferers_now;
  st_.interferers_now = in_next;
  st_.interfered_now = out_next;
  st_.realized_itn_prev = realized_itn;
  st_.reward_prev = reward;

  st_.g_prev = st_.g_now;
  st_.g_now = advance_fading();
  st_.interf_noise_prev = st_.interf_noise_now;
  Eigen::VectorXd mix(n);
  for (int i = 0; i < n; ++i) {
    double acc = s2;
    for (int j = 0; j < n; ++j)
      if (j != i) acc += st_.g_now(j, i) * p_new(j);
    mix(i) = acc;
  }
  st_.interf_noise_now = mix;
  ++st_.t;

  return rec;
}

}  // namespace dpa
