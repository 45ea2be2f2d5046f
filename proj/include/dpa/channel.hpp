#pragma once

#include <Eigen/Dense>
#include <limits>

#include "dpa/geometry.hpp"
#include "dpa/rng.hpp"

namespace dpa {

/// Doppler configuration. `uncorrelated` maps to rho = 0 (f_d -> infinity);
/// `random_per_slot` redraws f_d uniformly in [fd_lo, fd_hi] per directed
/// pair per slot.
struct DopplerSpec {
  enum class Mode { fixed, uncorrelated, random_per_slot };
  Mode mode = Mode::fixed;
  double fd_hz = 10.0;
  double fd_lo = 2.0;
  double fd_hi = 15.0;
};

/// First-order Gauss-Markov (Jakes) fading state for all n^2 directed pairs.
struct FadingState {
  Eigen::MatrixXcd h;
  double rho = 0.0;  // used in fixed/uncorrelated modes
  long slot = 0;
};

/// J0(2 pi f_d T) by the ascending power series (|x| <= 8 is plenty here;
/// the configured maximum is 2 pi * 15 * 0.02 ~ 1.9). An infinite f_d is the
/// uncorrelated sentinel and yields 0.
double correlation_rho(double fd_hz, double T_s);

/// Zeroth-order Bessel function of the first kind, power series.
double bessel_j0(double x);

/// h(0) entries i.i.d. CSCG, unit variance.
FadingState init_fading(int n, Rng& rng, double rho);

/// h(t) = rho h(t-1) + sqrt(1-rho^2) e(t), fresh CSCG innovations.
void step_fading(FadingState& state, Rng& rng);

/// Same update with a per-pair rho matrix (random-Doppler mode).
void step_fading(FadingState& state, Rng& rng, const Eigen::MatrixXd& rho);

/// g = |h|^2 .* alpha. Throws on dimension mismatch.
Eigen::MatrixXd compose_gains(const LargeScaleGains& alpha, const FadingState& h);

}  // namespace dpa
