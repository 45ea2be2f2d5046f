#include "dpa/baselines.hpp"

#include <cmath>
#include <stdexcept>

namespace dpa {

namespace {

Eigen::VectorXd sinr_vec(const Eigen::MatrixXd& g, const Eigen::VectorXd& p, double sigma2) {
  const int n = static_cast<int>(p.size());
  Eigen::VectorXd out(n);
  for (int i = 0; i < n; ++i) {
    double interf = sigma2;
    for (int j = 0; j < n; ++j)
      if (j != i) interf += g(j, i) * p(j);
    out(i) = g(i, i) * p(i) / interf;
  }
  return out;
}

Eigen::VectorXd clamp_warm_start(const Eigen::VectorXd& p, double pmax) {
  return p.cwiseMax(1e-8 * pmax).cwiseMin(pmax);
}

bool relative_converged(double prev, double cur, double tol) {
  return std::fabs(cur - prev) <= tol * std::max(1.0, std::fabs(cur));
}

}  // namespace

double weighted_sum_rate(const Eigen::MatrixXd& g, const Eigen::VectorXd& w,
                         const Eigen::VectorXd& p, double sigma2) {
  const Eigen::VectorXd gamma = sinr_vec(g, p, sigma2);
  double sum = 0.0;
  for (int i = 0; i < w.size(); ++i) sum += w(i) * std::log2(1.0 + gamma(i));
  return sum;
}

SolveResult fp_solve(const Eigen::MatrixXd& g, const Eigen::VectorXd& w,
                     double pmax, double sigma2, Rng& rng, const SolverOptions& opts) {
  if (opts.tol <= 0.0) throw std::invalid_argument("tolerance must be positive");
  const int n = static_cast<int>(w.size());
  const Eigen::VectorXd gd = g.diagonal();

  Eigen::VectorXd p(n);
  if (opts.p_init) {
    p = clamp_warm_start(*opts.p_init, pmax);
  } else {
    for (int i = 0; i < n; ++i) p(i) = rng.uniform(0.0, pmax);
  }

  SolveResult res;
  double prev = weighted_sum_rate(g, w, p, sigma2);
  for (int it = 0; it < opts.max_iter; ++it) {
    const Eigen::VectorXd gamma = sinr_vec(g, p, sigma2);
    Eigen::VectorXd y(n);
    for (int i = 0; i < n; ++i) {
      double total = sigma2;  // over all j, own signal included
      for (int j = 0; j < n; ++j) total += g(j, i) * p(j);
      y(i) = std::sqrt(w(i) * (1.0 + gamma(i)) * gd(i) * p(i)) / total;
    }
    for (int i = 0; i < n; ++i) {
      double z = 0.0;
      for (int j = 0; j < n; ++j) z += y(j) * y(j) * g(i, j);
      p(i) = std::min(pmax, y(i) * y(i) * w(i) * (1.0 + gamma(i)) * gd(i) / (z * z));
    }
    const double obj = weighted_sum_rate(g, w, p, sigma2);
    res.objective_trace.push_back(obj);
    res.iterations = it + 1;
    if (relative_converged(prev, obj, opts.tol)) {
      res.converged = true;
      break;
    }
    prev = obj;
  }
  res.p = p;
  return res;
}

SolveResult wmmse_solve(const Eigen::MatrixXd& g, const Eigen::VectorXd& w,
                        double pmax, double sigma2, const SolverOptions& opts) {
  if (opts.tol <= 0.0) throw std::invalid_argument("tolerance must be positive");
  const int n = static_cast<int>(w.size());
  const Eigen::VectorXd gd = g.diagonal();
  const Eigen::VectorXd sg = gd.cwiseSqrt();
  const double vmax = std::sqrt(pmax);

  Eigen::VectorXd v(n);
  if (opts.p_init) {
    v = clamp_warm_start(*opts.p_init, pmax).cwiseSqrt();
  } else {
    v.setConstant(vmax);
  }

  SolveResult res;
  double prev = weighted_sum_rate(g, w, v.cwiseProduct(v), sigma2);
  for (int it = 0; it < opts.max_iter; ++it) {
    Eigen::VectorXd u(n), m(n);
    for (int i = 0; i < n; ++i) {
      double total = sigma2;  // total received power, own signal included
      for (int j = 0; j < n; ++j) total += g(j, i) * v(j) * v(j);
      u(i) = sg(i) * v(i) / total;
      m(i) = 1.0 / (1.0 - u(i) * sg(i) * v(i) + 1e-12);
    }
    for (int i = 0; i < n; ++i) {
      double z = 0.0;
      for (int j = 0; j < n; ++j) z += w(j) * m(j) * u(j) * u(j) * g(i, j);
      v(i) = std::clamp(w(i) * m(i) * u(i) * sg(i) / z, 0.0, vmax);
    }
    const double obj = weighted_sum_rate(g, w, v.cwiseProduct(v), sigma2);
    res.objective_trace.push_back(obj);
    res.iterations = it + 1;
    if (relative_converged(prev, obj, opts.tol)) {
      res.converged = true;
      break;
    }
    prev = obj;
  }
  res.p = v.cwiseProduct(v);
  return res;
}

SolveResult grid_oracle(const Eigen::MatrixXd& g, const Eigen::VectorXd& w,
                        double pmax, double sigma2, int levels) {
  const int n = static_cast<int>(w.size());
  if (levels < 2) throw std::invalid_argument("grid needs at least two levels");
  double combos = 1.0;
  for (int i = 0; i < n; ++i) combos *= levels;
  if (combos > 1e7) throw std::invalid_argument("instance too large for exhaustive search");

  Eigen::VectorXd grid(levels);
  for (int l = 0; l < levels; ++l) grid(l) = pmax * l / (levels - 1);

  std::vector<int> idx(n, 0);
  Eigen::VectorXd p = Eigen::VectorXd::Zero(n), best_p = Eigen::VectorXd::Zero(n);
  double best = -std::numeric_limits<double>::infinity();
  const long total = static_cast<long>(combos);
  for (long c = 0; c < total; ++c) {
    for (int i = 0; i < n; ++i) p(i) = grid(idx[i]);
    const double obj = weighted_sum_rate(g, w, p, sigma2);
    if (obj > best) {
      best = obj;
      best_p = p;
    }
    for (int i = 0; i < n; ++i) {
      if (++idx[i] < levels) break;
      idx[i] = 0;
    }
  }
  SolveResult res;
  res.p = best_p;
  res.objective_trace.push_back(best);
  res.iterations = static_cast<int>(std::min<long>(total, INT32_MAX));
  res.converged = true;
  return res;
}

Eigen::VectorXd random_alloc(int n, double pmax, Rng& rng) {
  Eigen::VectorXd p(n);
  for (int i = 0; i < n; ++i) p(i) = rng.uniform(0.0, pmax);
  return p;
}

Eigen::VectorXd full_power(int n, double pmax) {
  return Eigen::VectorXd::Constant(n, pmax);
}

}  // namespace dpa
