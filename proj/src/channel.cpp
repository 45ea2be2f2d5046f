#include "dpa/channel.hpp"

#include <cmath>
#include <stdexcept>

namespace dpa {

double bessel_j0(double x) {
  // sum_m (-1)^m (x/2)^(2m) / (m!)^2, accurate to ~1e-15 for |x| <= 8
  const double q = 0.25 * x * x;
  double term = 1.0;
  double sum = 1.0;
  for (int m = 1; m <= 64; ++m) {
    term *= -q / (static_cast<double>(m) * m);
    sum += term;
    if (std::fabs(term) < 1e-17 * std::fabs(sum) + 1e-300) break;
  }
  return sum;
}

double correlation_rho(double fd_hz, double T_s) {
  if (T_s <= 0.0) throw std::invalid_argument("slot duration must be positive");
  if (fd_hz < 0.0) throw std::invalid_argument("Doppler frequency must be >= 0");
  if (std::isinf(fd_hz)) return 0.0;
  return bessel_j0(2.0 * M_PI * fd_hz * T_s);
}

FadingState init_fading(int n, Rng& rng, double rho) {
  FadingState s;
  s.h.resize(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) s.h(i, j) = rng.cgauss();
  s.rho = rho;
  s.slot = 0;
  return s;
}

void step_fading(FadingState& state, Rng& rng) {
  const double rho = state.rho;
  const double innov = std::sqrt(1.0 - rho * rho);
  const int n = static_cast<int>(state.h.rows());
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      state.h(i, j) = rho * state.h(i, j) + innov * rng.cgauss();
  ++state.slot;
}

void step_fading(FadingState& state, Rng& rng, const Eigen::MatrixXd& rho) {
  if (rho.rows() != state.h.rows() || rho.cols() != state.h.cols())
    throw std::invalid_argument("rho matrix dimension mismatch");
  const int n = static_cast<int>(state.h.rows());
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      const double r = rho(i, j);
      state.h(i, j) = r * state.h(i, j) + std::sqrt(1.0 - r * r) * rng.cgauss();
    }
  }
  ++state.slot;
}

Eigen::MatrixXd compose_gains(const LargeScaleGains& alpha, const FadingState& h) {
  if (alpha.alpha.rows() != h.h.rows() || alpha.alpha.cols() != h.h.cols())
    throw std::invalid_argument("gain dimension mismatch");
  return h.h.cwiseAbs2().cwiseProduct(alpha.alpha);
}

}  // namespace dpa
