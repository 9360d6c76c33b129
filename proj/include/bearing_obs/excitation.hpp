#pragma once

// Persistence-of-excitation measures for sampled direction signals, and the
// observability witnesses (an indistinguishable pair under constant input and
// a distinguishing circular input).

#include <algorithm>
#include <cmath>
#include <deque>
#include <functional>
#include <limits>
#include <span>
#include <utility>
#include <vector>

#include "bearing_obs/bounds.hpp"
#include "bearing_obs/linalg.hpp"
#include "bearing_obs/observer.hpp"
#include "bearing_obs/sim.hpp"

namespace bearing_obs {

/// Uniformly sampled direction trajectory t -> y(t).
class DirectionSignal {
 public:
  DirectionSignal(double t0, double h, std::vector<Vector> ys) : t0_(t0), h_(h), y_(std::move(ys)) {
    if (!(h_ > 0.0)) throw std::invalid_argument("DirectionSignal: step must be positive");
    for (const Vector& y : y_) {
      if (!y.allFinite() || std::abs(y.norm() - 1.0) > kUnitNormTol) {
        throw std::invalid_argument("DirectionSignal: sample is not unit-norm");
      }
    }
  }

  /// Builds from explicit timestamps, which must be uniformly spaced to 1e-9.
  static DirectionSignal from_samples(std::span<const double> t, std::vector<Vector> ys) {
    if (t.size() != ys.size() || t.size() < 2) {
      throw std::invalid_argument("DirectionSignal: need matching timestamps and >= 2 samples");
    }
    const double h = t[1] - t[0];
    for (std::size_t i = 1; i < t.size(); ++i) {
      if (std::abs((t[i] - t[i - 1]) - h) > 1e-9) {
        throw std::invalid_argument("DirectionSignal: timestamps are not uniformly spaced");
      }
    }
    return DirectionSignal(t[0], h, std::move(ys));
  }

  double t0() const noexcept { return t0_; }
  double h() const noexcept { return h_; }
  std::size_t size() const noexcept { return y_.size(); }
  double span() const noexcept { return h_ * static_cast<double>(y_.size() - 1); }
  double time(std::size_t i) const noexcept { return t0_ + h_ * static_cast<double>(i); }
  const Vector& operator[](std::size_t i) const { return y_[i]; }
  Eigen::Index dim() const { return y_.empty() ? 0 : y_.front().size(); }

  /// Number of steps covering `delta`; throws WindowTooShort when the window
  /// is under two steps or longer than the signal.
  std::size_t window_steps(double delta) const {
    if (!(delta >= 2.0 * h_ * (1.0 - 1e-12))) {
      throw WindowTooShort("window shorter than two samples");
    }
    const auto w = static_cast<std::size_t>(std::llround(delta / h_));
    if (w + 1 > y_.size()) throw WindowTooShort("window longer than the signal span");
    return w;
  }

 private:
  double t0_;
  double h_;
  std::vector<Vector> y_;
};

/// Primal bearing of a trace.
inline DirectionSignal bearing_signal(const SimulationTrace& trace) {
  std::vector<double> t;
  std::vector<Vector> ys;
  t.reserve(trace.samples.size());
  ys.reserve(trace.samples.size());
  for (const TraceSample& s : trace.samples) {
    t.push_back(s.t);
    ys.push_back(s.y);
  }
  return DirectionSignal::from_samples(t, std::move(ys));
}

/// Dual output ys = M^-1 y / |M^-1 y| along a trace.
inline DirectionSignal dual_signal(const SimulationTrace& trace) {
  std::vector<double> t;
  std::vector<Vector> ys;
  for (const TraceSample& s : trace.samples) {
    t.push_back(s.t);
    ys.push_back(dual_output(s.state.M, DirectionVector(s.y)).vec());
  }
  return DirectionSignal::from_samples(t, std::move(ys));
}

/// Smallest eigenvalue of the trapezoid integral of pi_y over every window
/// [t, t + delta] that starts on the sample grid.
inline std::vector<double> pe_integral(const DirectionSignal& sig, double delta) {
  const std::size_t w = sig.window_steps(delta);
  const Eigen::Index n = sig.dim();
  const double h = sig.h();
  // prefix[i] = trapezoid integral of y y^T over [t_0, t_i]
  std::vector<Matrix> prefix(sig.size(), Matrix::Zero(n, n));
  for (std::size_t i = 1; i < sig.size(); ++i) {
    prefix[i] = prefix[i - 1] + 0.5 * h *
                                    (sig[i - 1] * sig[i - 1].transpose() +
                                     sig[i] * sig[i].transpose());
  }
  const double len = h * static_cast<double>(w);
  std::vector<double> out;
  out.reserve(sig.size() - w);
  Eigen::SelfAdjointEigenSolver<Matrix> eig;
  for (std::size_t s = 0; s + w < sig.size(); ++s) {
    Matrix integral = -(prefix[s + w] - prefix[s]);
    integral.diagonal().array() += len;
    eig.compute(integral, Eigen::EigenvaluesOnly);
    out.push_back(eig.eigenvalues()(0));
  }
  return out;
}

/// Windowed trapezoid integrals of |pi_y b|^2 for a fixed unit b.
inline std::vector<double> pe_scalar(const DirectionSignal& sig, const DirectionVector& b,
                                     double delta) {
  const std::size_t w = sig.window_steps(delta);
  const double h = sig.h();
  std::vector<double> prefix(sig.size(), 0.0);
  auto f = [&](std::size_t i) {
    const double c = sig[i].dot(b.vec());
    return 1.0 - c * c;
  };
  for (std::size_t i = 1; i < sig.size(); ++i) prefix[i] = prefix[i - 1] + 0.5 * h * (f(i - 1) + f(i));
  std::vector<double> out;
  out.reserve(sig.size() - w);
  for (std::size_t s = 0; s + w < sig.size(); ++s) out.push_back(prefix[s + w] - prefix[s]);
  return out;
}

/// |dy/dt| per sample: central differences inside, one-sided at the ends.
inline std::vector<double> ydot_norms(const DirectionSignal& sig) {
  const std::size_t m = sig.size();
  std::vector<double> out(m, 0.0);
  if (m < 2) return out;
  const double h = sig.h();
  out[0] = (sig[1] - sig[0]).norm() / h;
  out[m - 1] = (sig[m - 1] - sig[m - 2]).norm() / h;
  for (std::size_t i = 1; i + 1 < m; ++i) out[i] = (sig[i + 1] - sig[i - 1]).norm() / (2.0 * h);
  return out;
}

/// max |dy/dt| over each sample-grid window of w steps (w + 1 samples).
inline std::vector<double> window_max_ydot(const DirectionSignal& sig, std::size_t w) {
  const std::vector<double> d = ydot_norms(sig);
  std::vector<double> out;
  out.reserve(d.size() - w);
  std::deque<std::size_t> q;  // indices with decreasing values
  for (std::size_t i = 0; i < d.size(); ++i) {
    while (!q.empty() && d[q.back()] <= d[i]) q.pop_back();
    q.push_back(i);
    if (i >= w) {
      const std::size_t start = i - w;
      while (q.front() < start) q.pop_front();
      out.push_back(d[q.front()]);
    }
  }
  return out;
}

/// Per window: does |dy/dt| reach epsilon somewhere in [t, t + delta]?
inline std::vector<bool> pe_derivative(const DirectionSignal& sig, double delta, double epsilon) {
  const std::size_t w = sig.window_steps(delta);
  std::vector<bool> out;
  for (double m : window_max_ydot(sig, w)) out.push_back(m >= epsilon);
  return out;
}

struct PEReport {
  double delta = 0.0;
  double mu = 0.0;  ///< min window lambda_min minus the trapezoid margin h^2 delta
  std::vector<double> lambda_min_per_window;
  double derivative_epsilon = 0.0;
  std::vector<double> max_ydot_per_window;
  bool passes_integral = false;
  bool passes_derivative = false;
  double k = 0.0;
  double gamma = 0.0;  ///< gamma_bound(k, delta, mu) when passes_integral, else 0

  bool passes() const noexcept { return passes_integral && passes_derivative; }
};

inline PEReport pe_report(const DirectionSignal& sig, double delta, double epsilon, double k) {
  PEReport r;
  r.delta = delta;
  r.derivative_epsilon = epsilon;
  r.k = k;
  r.lambda_min_per_window = pe_integral(sig, delta);
  r.max_ydot_per_window = window_max_ydot(sig, sig.window_steps(delta));
  const double lam = *std::min_element(r.lambda_min_per_window.begin(),
                                       r.lambda_min_per_window.end());
  r.mu = lam - sig.h() * sig.h() * delta;
  r.passes_integral = r.mu > 0.0 && r.mu < delta;
  r.passes_derivative = std::all_of(r.max_ydot_per_window.begin(), r.max_ydot_per_window.end(),
                                    [&](double m) { return m >= epsilon; });
  r.gamma = r.passes_integral ? gamma_bound(k, delta, r.mu) : 0.0;
  return r;
}

/// Runs the integral and derivative criteria on the dual output of a trace.
inline PEReport dual_pe_check(const SimulationTrace& trace, double delta, double epsilon,
                              double k_star) {
  return pe_report(dual_signal(trace), delta, epsilon, k_star);
}

struct AuditWindow {
  double t_start = 0.0;
  double lambda_min = 0.0;
  double max_ydot = 0.0;
  bool integral_pass = false;
  bool derivative_pass = false;
};

struct EquivalenceAudit {
  double mu_threshold = 0.0;
  double epsilon_threshold = 0.0;
  std::vector<AuditWindow> windows;
  std::vector<std::size_t> violations;  ///< windows where the two verdicts differ

  bool consistent() const noexcept { return violations.empty(); }
};

/// Compares the integral and derivative excitation verdicts window by window.
/// Windows are laid end to end (stride = window length) unless `stride_steps`
/// says otherwise. Thresholds are calibrated from the sampling: a window whose
/// |dy/dt| stays below eps turns by at most eps delta, so lambda_min is of order
/// (eps delta)^2 delta; pairing mu = h^2 delta (the quadrature margin) with
/// eps = h / delta keeps the two tests on the same scale.
inline EquivalenceAudit pe_equivalence_audit(const DirectionSignal& sig, double delta,
                                             std::size_t stride_steps = 0) {
  const std::size_t w = sig.window_steps(delta);
  const std::size_t stride = stride_steps == 0 ? w : stride_steps;
  const std::vector<double> lam = pe_integral(sig, delta);
  const std::vector<double> ymax = window_max_ydot(sig, w);

  EquivalenceAudit audit;
  audit.mu_threshold = sig.h() * sig.h() * delta;
  audit.epsilon_threshold = sig.h() / delta;
  for (std::size_t s = 0; s < lam.size(); s += stride) {
    AuditWindow win{sig.time(s), lam[s], ymax[s], lam[s] > audit.mu_threshold,
                    ymax[s] > audit.epsilon_threshold};
    if (win.integral_pass != win.derivative_pass) audit.violations.push_back(audit.windows.size());
    audit.windows.push_back(win);
  }
  return audit;
}

/// Two initial positions k1 (v + a) and k2 (v + a): under the constant input v
/// both points slide along the same ray and give identical bearings forever.
inline std::pair<Vector, Vector> indistinguishable_pair(const Vector& v_const, const Vector& a,
                                                        double k1, double k2) {
  if (!(k1 > 0.0) || !(k2 > 0.0)) {
    throw std::invalid_argument("indistinguishable_pair: k1 and k2 must be positive");
  }
  const Vector total = v_const + a;
  direction(total);  // throws DegenerateDirection for v + a = 0
  return {k1 * total, k2 * total};
}

/// v(t) = (cos t, sin t, 0, ..., 0): separates every pair of distinct initial states.
inline std::function<Vector(double)> distinguishing_input(int n) {
  if (n < 2) throw std::invalid_argument("distinguishing_input: n must be at least 2");
  return [n](double t) {
    Vector v = Vector::Zero(n);
    v[0] = std::cos(t);
    v[1] = std::sin(t);
    return v;
  };
}

}  // namespace bearing_obs
