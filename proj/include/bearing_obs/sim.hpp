#pragma once

// Ground truth, inputs, bearing noise and the closed-loop simulation that
// co-integrates the moving point with the observer on a shared time grid.

#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "bearing_obs/linalg.hpp"
#include "bearing_obs/observer.hpp"

namespace bearing_obs {

/// Seedable portable generator: std::mt19937_64 seeded through std::seed_seq
/// with the 32-bit halves of (seed, stream). Uniform doubles are taken from the
/// top 53 bits of each draw, so a given (seed, stream) yields the same stream
/// on every conforming standard library.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 1, std::uint64_t stream = 0) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(stream),
                      static_cast<std::uint32_t>(stream >> 32)};
    engine_.seed(seq);
  }

  /// Uniform on [0, 1).
  double uniform01() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

 private:
  std::mt19937_64 engine_;
};

enum class NoiseKind { none, uniform_position };

struct NoiseSpec {
  NoiseKind kind = NoiseKind::none;
  double half_width = 0.0;  ///< [m], per-axis
  std::uint64_t stream = 0;
};

enum class TrajectoryKind {
  circle,        ///< v+a = A(-sin wt, cos wt, 0, ...)
  constant,      ///< v+a = velocity (fixed vector)
  sphere_sweep,  ///< v+a = d/dt A(cos wt sin w2t, sin wt sin w2t, cos w2t, 0, ...)
};

/// Generator of the total (true) velocity v + a. The measured velocity is
/// this minus the configured bias.
struct Trajectory {
  TrajectoryKind kind = TrajectoryKind::circle;
  double amplitude = 0.5;
  double omega = 0.5;
  double omega2 = 0.0;
  Vector velocity;  ///< used by `constant` only

  Vector total_velocity(double t, Eigen::Index n) const {
    Vector out = Vector::Zero(n);
    switch (kind) {
      case TrajectoryKind::circle:
        out[0] = -amplitude * std::sin(omega * t);
        out[1] = amplitude * std::cos(omega * t);
        break;
      case TrajectoryKind::constant:
        out = velocity;
        break;
      case TrajectoryKind::sphere_sweep: {
        const double ca = std::cos(omega * t), sa = std::sin(omega * t);
        const double cb = std::cos(omega2 * t), sb = std::sin(omega2 * t);
        out[0] = amplitude * (-omega * sa * sb + omega2 * ca * cb);
        out[1] = amplitude * (omega * ca * sb + omega2 * sa * cb);
        out[2] = -amplitude * omega2 * sb;
        break;
      }
    }
    return out;
  }
};

struct Scenario {
  int n = 3;
  Trajectory trajectory;
  Vector a_true;
  Vector x0;
  Gains gains;
  Matrix M0;
  Vector x_hat_1_0;
  Vector z_hat_star_0;
  double h = 0.01;
  double duration = 100.0;
  NoiseSpec noise;
  std::uint64_t seed = 1;
  /// false runs the basic filter only (M and zs frozen at their initial values).
  bool cascade = true;

  std::size_t sample_count() const {
    return static_cast<std::size_t>(std::floor(duration / h + 1e-9)) + 1;
  }

  void validate() const;
};

inline void Scenario::validate() const {
  if (n < 2) throw ValidationError("n", "dimension must be at least 2");
  auto check_vec = [&](const Vector& v, const char* field) {
    if (v.size() != n) {
      throw ValidationError(field, "expected " + std::to_string(n) + " components, got " +
                                       std::to_string(v.size()));
    }
    if (!v.allFinite()) throw ValidationError(field, "non-finite entry");
  };
  check_vec(a_true, "a_true");
  check_vec(x0, "x0");
  check_vec(x_hat_1_0, "x_hat_1_0");
  check_vec(z_hat_star_0, "z_hat_star_0");
  gains.validate();
  if (!(h > 0.0) || !std::isfinite(h)) throw ValidationError("h", "must be positive");
  if (!std::isfinite(duration) || !(duration >= 10.0 * h)) {
    throw ValidationError("duration", "must be at least 10 steps");
  }
  if (!(x0.norm() > kDirectionEps)) {
    throw ValidationError("x0", "degenerate direction: |x0| must exceed 1e-9");
  }
  if (M0.rows() != n || M0.cols() != n) throw ValidationError("M0", "expected n x n entries");
  if (!M0.allFinite()) throw ValidationError("M0", "non-finite entry");
  if ((M0 - M0.transpose()).cwiseAbs().maxCoeff() > 1e-12 * (1.0 + M0.cwiseAbs().maxCoeff())) {
    throw ValidationError("M0", "must be symmetric");
  }
  Eigen::SelfAdjointEigenSolver<Matrix> eig(M0, Eigen::EigenvaluesOnly);
  if (!(eig.eigenvalues().minCoeff() > 0.0)) {
    throw ValidationError("M0", "must be positive definite");
  }
  if (!(noise.half_width >= 0.0) || !std::isfinite(noise.half_width)) {
    throw ValidationError("noise.half_width", "must be non-negative");
  }
  const Trajectory& tr = trajectory;
  if (!std::isfinite(tr.amplitude)) throw ValidationError("trajectory.amplitude", "non-finite");
  if (!std::isfinite(tr.omega)) throw ValidationError("trajectory.omega", "non-finite");
  if (!std::isfinite(tr.omega2)) throw ValidationError("trajectory.omega2", "non-finite");
  if (tr.kind == TrajectoryKind::constant) check_vec(tr.velocity, "trajectory.velocity");
  if (tr.kind == TrajectoryKind::sphere_sweep && n < 3) {
    throw ValidationError("trajectory.kind", "sphere_sweep needs n >= 3");
  }
}

/// One full turn of the circular input at 0.5 rad/s, the natural excitation window.
inline constexpr double kCirclePeriod = 4.0 * 3.14159265358979323846;

/// The circular experiment: a point circling at 3 m altitude above a camera
/// at the origin, measured velocity biased by a = (0.33, 0.66, 0.99).
/// x0 = (1, 0, 3) puts the circle centre on the camera axis.
inline Scenario circle_scenario() {
  Scenario s;
  s.n = 3;
  s.trajectory = Trajectory{TrajectoryKind::circle, 0.5, 0.5, 0.0, Vector::Zero(3)};
  s.a_true = Vector{{0.33, 0.66, 0.99}};
  s.x0 = Vector{{1.0, 0.0, 3.0}};
  s.gains = Gains{0.5, 5.0};
  s.M0 = Matrix::Identity(3, 3);
  s.x_hat_1_0 = Vector::Zero(3);
  s.z_hat_star_0 = Vector::Zero(3);
  s.h = 0.01;
  s.duration = 100.0;
  s.noise = NoiseSpec{};
  s.seed = 1;
  return s;
}

/// Same experiment with per-axis uniform position noise of half-width 0.5 m.
inline Scenario noisy_circle_scenario() {
  Scenario s = circle_scenario();
  s.noise = NoiseSpec{NoiseKind::uniform_position, 0.5, 0};
  return s;
}

/// RK4 step of dx/dt = v_meas + a_true with the velocity held over the step.
inline Vector true_kinematics_step(const Vector& x, const Vector& v_meas, const Vector& a_true,
                                   double h) {
  const Vector total = v_meas + a_true;
  return rk4_step([&](double, const Vector&) -> Vector { return total; }, 0.0, x, h);
}

/// Same, with the generator evaluated at the RK4 stage times.
inline Vector true_kinematics_step(const Vector& x, const Trajectory& traj, double t, double h) {
  const Eigen::Index n = x.size();
  return rk4_step([&](double s, const Vector&) -> Vector { return traj.total_velocity(s, n); }, t,
                  x, h);
}

/// Bearing of x + w, with w drawn per axis uniformly on [-half_width, half_width].
inline DirectionVector measure(const Vector& x, const NoiseSpec& noise, Rng& rng) {
  if (noise.kind == NoiseKind::none) return direction(x);
  Vector w(x.size());
  for (Eigen::Index i = 0; i < w.size(); ++i) w[i] = rng.uniform(-noise.half_width, noise.half_width);
  return direction(x + w);
}

struct TraceSample {
  double t = 0.0;
  Vector x_true;
  Vector v_meas;
  Vector y;
  ObserverState state;
  Vector x_hat;
  Vector a_hat;
  Vector y_star;
  Vector v_star;
  double err_xz = 0.0;  ///< |x - z| (cascade) or |x - x1| (basic filter only)
  double err_x = 0.0;   ///< |x - xhat|
  double err_a = 0.0;   ///< |ahat - a|
};

struct TraceFailure {
  double t = 0.0;
  std::string message;
};

struct SimulationTrace {
  Scenario scenario;
  std::vector<TraceSample> samples;
  std::optional<TraceFailure> failure;

  bool ok() const noexcept { return !failure.has_value(); }
};

namespace detail {

inline void fill_outputs(TraceSample& s, const Measurement& meas, const Scenario& sc) {
  if (sc.cascade) {
    const ObserverOutput out = reconstruct(s.state, meas);
    s.x_hat = out.x_hat;
    s.a_hat = out.a_hat;
    s.y_star = out.y_star.vec();
    s.v_star = out.v_star;
    s.err_xz = (s.x_true - virtual_state(s.state, sc.a_true)).norm();
  } else {
    s.x_hat = s.state.x_hat_1;
    s.a_hat = Vector::Zero(sc.n);
    s.y_star = meas.y.vec();
    s.v_star = meas.v;
    s.err_xz = (s.x_true - s.state.x_hat_1).norm();
  }
  s.err_x = (s.x_true - s.x_hat).norm();
  s.err_a = (s.a_hat - sc.a_true).norm();
}

}  // namespace detail

/// Runs the scenario. On a numerical fault the trace stops at the last good
/// sample and `failure` records where and why.
inline SimulationTrace simulate(const Scenario& sc) {
  sc.validate();
  SimulationTrace trace;
  trace.scenario = sc;
  const std::size_t count = sc.sample_count();
  trace.samples.reserve(count);

  Rng rng(sc.seed, sc.noise.stream);
  Vector x = sc.x0;
  ObserverState state{sc.x_hat_1_0, sc.M0, sc.z_hat_star_0, 0.0};

  for (std::size_t i = 0; i < count; ++i) {
    const double t = static_cast<double>(i) * sc.h;
    state.t = t;
    try {
      const Vector v_meas = sc.trajectory.total_velocity(t, sc.n) - sc.a_true;
      const Measurement meas{measure(x, sc.noise, rng), v_meas, t};
      TraceSample s;
      s.t = t;
      s.x_true = x;
      s.v_meas = v_meas;
      s.y = meas.y.vec();
      s.state = state;
      detail::fill_outputs(s, meas, sc);
      trace.samples.push_back(std::move(s));
      if (i + 1 == count) break;

      state = sc.cascade ? observer_step(state, meas, sc.gains, sc.h)
                         : basic_filter_step(state, meas, sc.gains.k, sc.h);
      x = true_kinematics_step(x, sc.trajectory, t, sc.h);
      if (!x.allFinite() || !detail::pack(state).allFinite()) {
        throw NonFiniteField("state became non-finite");
      }
    } catch (const Error& e) {
      trace.failure = TraceFailure{t, e.what()};
      break;
    }
  }
  return trace;
}

}  // namespace bearing_obs
