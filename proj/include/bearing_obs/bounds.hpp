#pragma once

#include <cmath>
#include <string>

#include "bearing_obs/errors.hpp"

namespace bearing_obs {

/// Guaranteed contraction rate of d/dt e = -k pi_y e for a direction that is
/// persistently exciting with window `delta` and level `mu`:
/// gamma = mu k / (delta (1 + k^2 delta)^2).
inline double gamma_bound(double k, double delta, double mu) {
  if (!(k > 0.0)) throw std::invalid_argument("gamma_bound: k must be positive");
  if (!(mu > 0.0) || !(mu < delta)) {
    throw InvalidPE("gamma_bound: need 0 < mu < delta (mu = " + std::to_string(mu) +
                    ", delta = " + std::to_string(delta) + ")");
  }
  const double s = 1.0 + k * k * delta;
  return mu * k / (delta * s * s);
}

/// Late-time floor of det(M) for d/dt M = I - k pi_y M:
/// (n / (k (n - 1)))^n. Under PE the averaged M is (k P)^-1 with tr P = n - 1,
/// and AM-GM on det P gives exactly this value, reached for isotropic excitation.
inline double det_floor(int n, double k) {
  return std::pow(static_cast<double>(n) / (k * (n - 1)), n);
}

/// The same expression with exponent 1/n, kept for comparison reports.
inline double det_floor_root_exponent(int n, double k) {
  return std::pow(static_cast<double>(n) / (k * (n - 1)), 1.0 / n);
}

/// Upper bound on the spectral condition number of an n x n matrix from its
/// determinant and Frobenius norm: (2/|det|) (|M|_F / sqrt(n))^n.
inline double condition_bound(double det, double frobenius, int n) {
  return 2.0 / std::abs(det) * std::pow(frobenius / std::sqrt(static_cast<double>(n)), n);
}

}  // namespace bearing_obs
