#pragma once

#include <Eigen/Dense>
#include <vector>

#include "dpa/rng.hpp"

namespace dpa {

struct SolveResult {
  Eigen::VectorXd p;
  std::vector<double> objective_trace;  // weighted sum-rate after each iteration
  int iterations = 0;
  bool converged = false;
};

struct SolverOptions {
  double tol = 1e-6;  // relative objective change
  int max_iter = 500;
  // warm start; entries are clamped to [1e-8 Pmax, Pmax] (zero is a fixed
  // point of both iterations)
  const Eigen::VectorXd* p_init = nullptr;
};

/// Weighted sum-rate sum_i w_i log2(1 + gamma_i(p)), uncapped; the internal
/// objective of every solver here.
double weighted_sum_rate(const Eigen::MatrixXd& g, const Eigen::VectorXd& w,
                         const Eigen::VectorXd& p, double sigma2);

/// Closed-form fractional-programming power control. Per iteration:
/// gamma <- SINR(p); y_i <- sqrt(w_i (1+gamma_i) g_ii p_i) / (sum_j g_ji p_j + sigma2);
/// p_i <- min{Pmax, y_i^2 w_i (1+gamma_i) g_ii / (sum_j y_j^2 g_ij)^2}.
/// Without a warm start, p is initialized uniformly at random from rng.
SolveResult fp_solve(const Eigen::MatrixXd& g, const Eigen::VectorXd& w,
                     double pmax, double sigma2, Rng& rng,
                     const SolverOptions& opts = {});

/// Scalar weighted-MMSE iteration on amplitudes v = sqrt(p), initialized at
/// full power unless warm-started.
SolveResult wmmse_solve(const Eigen::MatrixXd& g, const Eigen::VectorXd& w,
                        double pmax, double sigma2,
                        const SolverOptions& opts = {});

/// Exhaustive search over the levels^n grid {0, Pmax/(L-1), ..., Pmax}.
/// Throws std::invalid_argument when levels^n exceeds 1e7.
SolveResult grid_oracle(const Eigen::MatrixXd& g, const Eigen::VectorXd& w,
                        double pmax, double sigma2, int levels);

Eigen::VectorXd random_alloc(int n, double pmax, Rng& rng);
Eigen::VectorXd full_power(int n, double pmax);

}  // namespace dpa
