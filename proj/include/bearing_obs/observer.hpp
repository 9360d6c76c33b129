#pragma once

// Cascade observer for position and constant velocity bias from a bearing
// y = x/|x| and a biased velocity v (true motion dx/dt = v + a).
//
//   basic filter   d/dt x1   = v - k pi_y x1
//   gain matrix    d/dt M    = I - k pi_y M,          M(0) = M(0)^T > 0
//   dual observer  d/dt zs   = vs - ks pi_ys zs
//
// with ys = M^-1 y / |M^-1 y| and vs = M^-1 (v - M^-1 x1). Estimates are
// recovered algebraically: xhat = M zs, ahat = zs - M^-1 x1.

#include <cmath>
#include <stdexcept>

#include "bearing_obs/linalg.hpp"

namespace bearing_obs {

struct Gains {
  double k = 0.5;       ///< basic filter gain [1/s]
  double k_star = 5.0;  ///< dual observer gain [1/s]

  void validate() const {
    if (!(k > 0.0) || !std::isfinite(k)) throw ValidationError("gains.k", "must be positive");
    if (!(k_star > 0.0) || !std::isfinite(k_star)) {
      throw ValidationError("gains.k_star", "must be positive");
    }
  }
};

struct Measurement {
  DirectionVector y;  ///< bearing
  Vector v;           ///< measured velocity [m/s], bias included
  double t = 0.0;
};

/// Everything the observer integrates. M carries units of seconds.
struct ObserverState {
  Vector x_hat_1;
  Matrix M;
  Vector z_hat_star;
  double t = 0.0;

  Eigen::Index dim() const noexcept { return x_hat_1.size(); }

  /// Default initial conditions: x1 = 0, M = I, zs = 0.
  static ObserverState initial(Eigen::Index n, double t0 = 0.0) {
    return {Vector::Zero(n), Matrix::Identity(n, n), Vector::Zero(n), t0};
  }
};

struct ObserverOutput {
  Vector x_hat;  ///< position estimate [m]
  Vector a_hat;  ///< bias estimate [m/s]
  DirectionVector y_star;
  Vector v_star;
};

/// Invertibility guard applied to M at every evaluation.
struct MGuard {
  double det_min = 1e-12;
  double cond_limit = kDefaultCondLimit;
};

inline Vector basic_filter_rhs(const Vector& x_hat_1, const DirectionVector& y, const Vector& v,
                               double k) {
  return v - k * project(y, x_hat_1);
}

inline Matrix m_matrix_rhs(const Matrix& M, const DirectionVector& y, double k) {
  const Vector& u = y.vec();
  Matrix out = -k * (M - u * (u.transpose() * M));
  out.diagonal().array() += 1.0;
  return out;
}

/// ys = M^-1 y / |M^-1 y|.
inline DirectionVector dual_output(const Matrix& M, const DirectionVector& y,
                                   double cond_limit = kDefaultCondLimit) {
  return direction(invert(M, cond_limit) * y.vec());
}

/// vs = M^-1 (v - M^-1 x1).
inline Vector dual_velocity(const Matrix& M, const Vector& v, const Vector& x_hat_1,
                            double cond_limit = kDefaultCondLimit) {
  const Matrix Mi = invert(M, cond_limit);
  return Mi * (v - Mi * x_hat_1);
}

inline Vector dual_observer_rhs(const Vector& z_hat_star, const DirectionVector& y_star,
                                const Vector& v_star, double k_star) {
  return v_star - k_star * project(y_star, z_hat_star);
}

namespace detail {

inline Matrix guarded_inverse(const Matrix& M, const MGuard& guard, double t) {
  const double det = M.determinant();
  if (!(det >= guard.det_min)) {
    throw IllConditioned("det(M) = " + std::to_string(det) + " below guard at t = " +
                         std::to_string(t));
  }
  return invert(M, guard.cond_limit);
}

// Flattened layout: [x1 (n) | M column-major (n*n) | zs (n)].
inline Vector pack(const ObserverState& s) {
  const Eigen::Index n = s.dim();
  Vector out(n + n * n + n);
  out.head(n) = s.x_hat_1;
  out.segment(n, n * n) = s.M.reshaped();
  out.tail(n) = s.z_hat_star;
  return out;
}

inline ObserverState unpack(const Vector& flat, Eigen::Index n, double t) {
  ObserverState s;
  s.x_hat_1 = flat.head(n);
  s.M = flat.segment(n, n * n).reshaped(n, n);
  s.z_hat_star = flat.tail(n);
  s.t = t;
  return s;
}

}  // namespace detail

/// Advances the full cascade by one RK4 step. The measurement is held over
/// the step; each stage recomputes ys and vs from its own M and x1.
inline ObserverState observer_step(const ObserverState& state, const Measurement& meas,
                                   const Gains& gains, double h, const MGuard& guard = {}) {
  if (!(h > 0.0)) throw std::invalid_argument("observer_step: step must be positive");
  const Eigen::Index n = state.dim();
  if (meas.y.size() != n || meas.v.size() != n) {
    throw std::invalid_argument("observer_step: measurement dimension mismatch");
  }
  detail::guarded_inverse(state.M, guard, state.t);

  auto field = [&](double t, const Vector& flat) -> Vector {
    const ObserverState s = detail::unpack(flat, n, t);
    const Matrix Mi = detail::guarded_inverse(s.M, guard, t);
    const DirectionVector ys = direction(Mi * meas.y.vec());
    const Vector vs = Mi * (meas.v - Mi * s.x_hat_1);
    ObserverState d;
    d.x_hat_1 = basic_filter_rhs(s.x_hat_1, meas.y, meas.v, gains.k);
    d.M = m_matrix_rhs(s.M, meas.y, gains.k);
    d.z_hat_star = dual_observer_rhs(s.z_hat_star, ys, vs, gains.k_star);
    return detail::pack(d);
  };

  const Vector next = rk4_step(field, state.t, detail::pack(state), h);
  return detail::unpack(next, n, state.t + h);
}

/// Basic filter alone (cascade disabled): only x1 moves, M and zs are carried.
inline ObserverState basic_filter_step(const ObserverState& state, const Measurement& meas,
                                       double k, double h) {
  if (!(h > 0.0)) throw std::invalid_argument("basic_filter_step: step must be positive");
  auto field = [&](double, const Vector& x1) -> Vector {
    return basic_filter_rhs(x1, meas.y, meas.v, k);
  };
  ObserverState next = state;
  next.x_hat_1 = rk4_step(field, state.t, state.x_hat_1, h);
  next.t = state.t + h;
  return next;
}

inline ObserverOutput reconstruct(const ObserverState& state, const Measurement& meas,
                                  double cond_limit = kDefaultCondLimit) {
  const Matrix Mi = invert(state.M, cond_limit);
  return ObserverOutput{
      .x_hat = state.M * state.z_hat_star,
      .a_hat = state.z_hat_star - Mi * state.x_hat_1,
      .y_star = direction(Mi * meas.y.vec()),
      .v_star = Mi * (meas.v - Mi * state.x_hat_1),
  };
}

/// z = x1 + M a. Needs the true bias, so it only serves error analysis.
inline Vector virtual_state(const ObserverState& state, const Vector& a_true) {
  return state.x_hat_1 + state.M * a_true;
}

}  // namespace bearing_obs
