#pragma once

// Test-only reference computations. Nothing here calls into the library's
// observer, excitation or analysis code; each oracle re-derives its quantity
// from the defining formulas with plain Eigen.

#include <Eigen/Dense>

#include <cmath>
#include <functional>
#include <random>
#include <vector>

namespace oracle {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

inline Mat proj(const Vec& y) { return Mat::Identity(y.size(), y.size()) - y * y.transpose(); }

struct CascadeState {
  Vec x1;
  Mat M;
  Vec zs;
};

/// Right-hand side of the three coupled filters, written out from scratch.
inline CascadeState cascade_rhs(const CascadeState& s, const Vec& y, const Vec& v, double k,
                                double ks) {
  const Mat Mi = s.M.inverse();
  Vec ys = Mi * y;
  ys /= ys.norm();
  const Vec vs = Mi * (v - Mi * s.x1);
  return {v - k * proj(y) * s.x1, Mat::Identity(y.size(), y.size()) - k * proj(y) * s.M,
          vs - ks * proj(ys) * s.zs};
}

inline CascadeState axpy(const CascadeState& a, double c, const CascadeState& b) {
  return {a.x1 + c * b.x1, a.M + c * b.M, a.zs + c * b.zs};
}

/// n classical RK4 substeps of size h/n with (y, v) held.
inline CascadeState cascade_substeps(CascadeState s, const Vec& y, const Vec& v, double k,
                                     double ks, double h, int n) {
  const double d = h / n;
  for (int i = 0; i < n; ++i) {
    const auto k1 = cascade_rhs(s, y, v, k, ks);
    const auto k2 = cascade_rhs(axpy(s, d / 2, k1), y, v, k, ks);
    const auto k3 = cascade_rhs(axpy(s, d / 2, k2), y, v, k, ks);
    const auto k4 = cascade_rhs(axpy(s, d, k3), y, v, k, ks);
    s = {s.x1 + d / 6 * (k1.x1 + 2 * k2.x1 + 2 * k3.x1 + k4.x1),
         s.M + d / 6 * (k1.M + 2 * k2.M + 2 * k3.M + k4.M),
         s.zs + d / 6 * (k1.zs + 2 * k2.zs + 2 * k3.zs + k4.zs)};
  }
  return s;
}

/// Richardson extrapolation of the held-input step from h/4 and h/8 substeps
/// (fourth-order method, factor 2^4 - 1).
inline CascadeState richardson_step(const CascadeState& s, const Vec& y, const Vec& v, double k,
                                    double ks, double h) {
  const auto c4 = cascade_substeps(s, y, v, k, ks, h, 4);
  const auto c8 = cascade_substeps(s, y, v, k, ks, h, 8);
  return {c8.x1 + (c8.x1 - c4.x1) / 15, c8.M + (c8.M - c4.M) / 15, c8.zs + (c8.zs - c4.zs) / 15};
}

/// Bearing of the circle x(t) = (cos 0.5t, sin 0.5t, 3) used by the default scenario.
inline Vec circle_bearing(double t) {
  Vec x(3);
  x << std::cos(0.5 * t), std::sin(0.5 * t), 3.0;
  return x / x.norm();
}

/// lambda_min of the composite-Simpson integral of (I - y y^T) over [t0, t0 + delta].
inline double simpson_lambda_min(const std::function<Vec(double)>& y, double t0, double delta,
                                 int intervals) {
  if (intervals % 2) ++intervals;
  const double h = delta / intervals;
  Mat acc = Mat::Zero(3, 3);
  for (int i = 0; i <= intervals; ++i) {
    const double w = (i == 0 || i == intervals) ? 1.0 : (i % 2 ? 4.0 : 2.0);
    acc += w * proj(y(t0 + i * h));
  }
  acc *= h / 3.0;
  Eigen::SelfAdjointEigenSolver<Mat> eig(acc);
  return eig.eigenvalues()(0);
}

/// Uniform random unit vector.
inline Vec random_unit(std::mt19937_64& rng, int n) {
  std::normal_distribution<double> g;
  Vec v(n);
  for (int i = 0; i < n; ++i) v[i] = g(rng);
  return v / v.norm();
}

}  // namespace oracle
