#pragma once

// Small dense algebra and fixed-step integrators shared by the observer,
// the simulator and the analysis tools. Dimension is a runtime value; the
// storage is Eigen's dynamic vector/matrix since n stays small.

#include <Eigen/Dense>

#include <cmath>
#include <string>
#include <utility>

#include "bearing_obs/errors.hpp"

namespace bearing_obs {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

inline constexpr double kDirectionEps = 1e-9;
inline constexpr double kUnitNormTol = 1e-12;
inline constexpr double kDefaultCondLimit = 1e12;

inline bool all_finite(const Eigen::Ref<const Matrix>& m) { return m.allFinite(); }

/// Unit vector on the sphere S^{n-1}. Construction either normalizes a
/// nonzero vector (`from`) or adopts one that is already unit-norm.
class DirectionVector {
 public:
  /// Adopts `y` as-is; throws std::invalid_argument unless |y| = 1 to 1e-12.
  explicit DirectionVector(Vector y) : y_(std::move(y)) {
    if (!y_.allFinite() || std::abs(y_.norm() - 1.0) > kUnitNormTol) {
      throw std::invalid_argument("DirectionVector: vector is not unit-norm");
    }
  }

  /// x/|x|; throws DegenerateDirection when |x| <= eps.
  static DirectionVector from(const Vector& x, double eps = kDirectionEps) {
    if (!x.allFinite()) throw NonFiniteField("direction of a non-finite vector");
    const double r = x.norm();
    if (!(r > eps)) {
      throw DegenerateDirection("direction undefined: |x| = " + std::to_string(r));
    }
    DirectionVector d;
    d.y_ = x / r;
    return d;
  }

  const Vector& vec() const noexcept { return y_; }
  Eigen::Index size() const noexcept { return y_.size(); }
  double operator[](Eigen::Index i) const { return y_[i]; }

 private:
  DirectionVector() = default;
  Vector y_;
};

inline DirectionVector direction(const Vector& x, double eps = kDirectionEps) {
  return DirectionVector::from(x, eps);
}

/// pi_y = I - y y^T, orthogonal projector onto the plane normal to y.
inline Matrix projector(const DirectionVector& y) {
  const Vector& u = y.vec();
  Matrix p = -u * u.transpose();
  p.diagonal().array() += 1.0;
  return p;
}

/// pi_y x without forming the matrix.
inline Vector project(const DirectionVector& y, const Vector& x) {
  const Vector& u = y.vec();
  return x - u * u.dot(x);
}

/// Reciprocal 1-norm condition number estimate of `m` (LAPACK-style estimator).
inline double rcond_estimate(const Matrix& m) { return Eigen::PartialPivLU<Matrix>(m).rcond(); }

/// Dense inverse through partially pivoted LU. Throws IllConditioned when the
/// estimated 1-norm condition number exceeds `cond_limit`.
inline Matrix invert(const Matrix& m, double cond_limit = kDefaultCondLimit) {
  if (m.rows() != m.cols()) throw std::invalid_argument("invert: matrix is not square");
  if (!m.allFinite()) throw NonFiniteField("invert: non-finite matrix");
  Eigen::PartialPivLU<Matrix> lu(m);
  const double rc = lu.rcond();
  if (!(rc * cond_limit > 1.0)) {
    throw IllConditioned("invert: condition number estimate " +
                         std::to_string(rc > 0.0 ? 1.0 / rc : INFINITY) + " exceeds limit");
  }
  return lu.inverse();
}

/// Largest singular value.
inline double spectral_norm(const Matrix& m) {
  Eigen::JacobiSVD<Matrix> svd(m);
  return svd.singularValues()(0);
}

/// sigma_max / sigma_min in the spectral norm (infinity when singular).
inline double condition_number(const Matrix& m) {
  Eigen::JacobiSVD<Matrix> svd(m);
  const auto& s = svd.singularValues();
  const double lo = s(s.size() - 1);
  return lo > 0.0 ? s(0) / lo : INFINITY;
}

namespace detail {

inline void check_field(const Vector& k, const char* stage) {
  if (!k.allFinite()) {
    throw NonFiniteField(std::string("vector field returned non-finite values at ") + stage);
  }
}

}  // namespace detail

/// One classical Runge-Kutta step of dx/dt = f(t, x).
template <class Field>
Vector rk4_step(Field&& f, double t, const Vector& x, double h) {
  if (!(h > 0.0)) throw std::invalid_argument("rk4_step: step must be positive");
  const Vector k1 = f(t, x);
  detail::check_field(k1, "stage 1");
  const Vector k2 = f(t + 0.5 * h, Vector(x + 0.5 * h * k1));
  detail::check_field(k2, "stage 2");
  const Vector k3 = f(t + 0.5 * h, Vector(x + 0.5 * h * k2));
  detail::check_field(k3, "stage 3");
  const Vector k4 = f(t + h, Vector(x + h * k3));
  detail::check_field(k4, "stage 4");
  return x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

/// Forward Euler, kept as a low-order cross-check of rk4_step.
template <class Field>
Vector euler_step(Field&& f, double t, const Vector& x, double h) {
  if (!(h > 0.0)) throw std::invalid_argument("euler_step: step must be positive");
  const Vector k1 = f(t, x);
  detail::check_field(k1, "stage 1");
  return x + h * k1;
}

}  // namespace bearing_obs
