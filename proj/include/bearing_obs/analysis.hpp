#pragma once

// Numerical audit of the observer's convergence guarantees on sampled data:
// transition-matrix envelopes, the ultimate bound of the basic filter under
// bias, determinant/conditioning health of M, and exponential-rate fits.

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "bearing_obs/bounds.hpp"
#include "bearing_obs/excitation.hpp"
#include "bearing_obs/linalg.hpp"
#include "bearing_obs/observer.hpp"
#include "bearing_obs/sim.hpp"

namespace bearing_obs {

struct Violation {
  double t = 0.0;
  std::string bound;
  double margin = 0.0;  ///< observed minus allowed; positive means violated
};

/// Transition matrix of d/dt e = -k pi_{y(t)} e from t0 to t1, integrated by
/// RK4 with y held at its sample value across each step.
inline Matrix transition_matrix(const DirectionSignal& sig, double k, double t0, double t1) {
  const double h = sig.h();
  const double f0 = (t0 - sig.t0()) / h;
  const double f1 = (t1 - sig.t0()) / h;
  const auto i0 = static_cast<long long>(std::llround(f0));
  const auto i1 = static_cast<long long>(std::llround(f1));
  if (i0 < 0 || i1 < i0 || i1 >= static_cast<long long>(sig.size())) {
    throw WindowTooShort("transition_matrix: [t0, t1] outside the signal");
  }
  const Eigen::Index n = sig.dim();
  Vector phi = Matrix::Identity(n, n).reshaped();
  for (long long i = i0; i < i1; ++i) {
    const DirectionVector y(sig[static_cast<std::size_t>(i)]);
    auto field = [&](double, const Vector& flat) -> Vector {
      const Matrix P = flat.reshaped(n, n);
      const Vector& u = y.vec();
      return (-k * (P - u * (u.transpose() * P))).reshaped();
    };
    phi = rk4_step(field, sig.time(static_cast<std::size_t>(i)), phi, h);
  }
  return phi.reshaped(n, n);
}

struct TransitionPair {
  double t0 = 0.0;
  double t1 = 0.0;
  double norm = 0.0;
  double lower = 0.0;  ///< e^{-k (t1 - t0)}
  double upper = 0.0;  ///< e^{-gamma (t1 - t0)} (1 + tol)
};

struct TransitionAudit {
  std::vector<TransitionPair> pairs;
  std::vector<Violation> violations;
  /// min over pairs of -ln|Phi| / (t1 - t0): observed worst-case contraction rate.
  double gamma_empirical = 0.0;
};

/// Checks e^{-k T} <= |Phi(t0 + T, t0)| <= e^{-gamma T} (1 + tol) on `pairs`
/// intervals with T cycling through {delta, 2 delta, 4 delta} (lengths that do
/// not fit the signal are skipped) and start times drawn from a seeded stream.
inline TransitionAudit check_transition_bounds(const DirectionSignal& sig, double k, double gamma,
                                               double delta, int pairs = 50, double tol = 1e-3,
                                               std::uint64_t seed = 7) {
  std::vector<std::size_t> lengths;
  for (double mult : {1.0, 2.0, 4.0}) {
    const auto w = static_cast<std::size_t>(std::llround(mult * delta / sig.h()));
    if (w >= 1 && w + 1 <= sig.size()) lengths.push_back(w);
  }
  if (lengths.empty()) throw WindowTooShort("check_transition_bounds: delta exceeds the signal");

  Rng rng(seed);
  TransitionAudit audit;
  audit.gamma_empirical = std::numeric_limits<double>::infinity();
  for (int p = 0; p < pairs; ++p) {
    const std::size_t w = lengths[static_cast<std::size_t>(p) % lengths.size()];
    const std::size_t starts = sig.size() - w;
    const auto s = std::min(starts - 1, static_cast<std::size_t>(rng.uniform01() * starts));
    TransitionPair pr;
    pr.t0 = sig.time(s);
    pr.t1 = sig.time(s + w);
    const double T = pr.t1 - pr.t0;
    pr.norm = spectral_norm(transition_matrix(sig, k, pr.t0, pr.t1));
    pr.lower = std::exp(-k * T);
    pr.upper = std::exp(-gamma * T) * (1.0 + tol);
    // the lower envelope gets a rounding allowance only
    if (pr.norm < pr.lower * (1.0 - 1e-12)) {
      audit.violations.push_back({pr.t1, "transition_lower", pr.lower - pr.norm});
    }
    if (pr.norm > pr.upper) audit.violations.push_back({pr.t1, "transition_upper", pr.norm - pr.upper});
    audit.gamma_empirical = std::min(audit.gamma_empirical, -std::log(pr.norm) / T);
    audit.pairs.push_back(pr);
  }
  return audit;
}

/// Limsup checks look at the last 20% of a trace, and only when the trace is
/// at least 8 / rate long.
inline bool horizon_sufficient(const SimulationTrace& trace, double rate) {
  if (trace.samples.size() < 2 || !(rate > 0.0)) return false;
  return trace.samples.back().t - trace.samples.front().t >= 8.0 / rate;
}

inline std::size_t late_start_index(const SimulationTrace& trace) {
  const double t_end = trace.samples.back().t;
  const double t_late = trace.samples.front().t + 0.8 * (t_end - trace.samples.front().t);
  std::size_t i = 0;
  while (i < trace.samples.size() && trace.samples[i].t < t_late) ++i;
  return i;
}

struct UltimateBoundCheck {
  double bound_sup = 0.0;       ///< |e1(0)| + |a| / gamma
  double observed_sup = 0.0;
  double bound_late = 0.0;      ///< |a| / gamma
  double observed_late = 0.0;   ///< max |e1| over the last 20%
  bool horizon_sufficient = false;
  std::vector<Violation> violations;
};

/// Basic filter under constant bias: sup |e1| <= |e1(0)| + |a|/gamma and,
/// late in the run, |e1| <= |a|/gamma, each with relative `slack`.
/// e1 = x - x1 is read from the trace's truth and filter columns.
inline UltimateBoundCheck ultimate_bound_check(const SimulationTrace& trace, double gamma,
                                               double horizon_rate, double slack = 0.05) {
  UltimateBoundCheck c;
  if (trace.samples.empty() || !(gamma > 0.0)) return c;
  const double a = trace.scenario.a_true.norm();
  const auto err = [](const TraceSample& s) { return (s.x_true - s.state.x_hat_1).norm(); };
  c.bound_late = a / gamma;
  c.bound_sup = err(trace.samples.front()) + c.bound_late;
  const std::size_t late = late_start_index(trace);
  std::size_t worst = 0;
  for (std::size_t i = 0; i < trace.samples.size(); ++i) {
    const double e = err(trace.samples[i]);
    if (e > c.observed_sup) {
      c.observed_sup = e;
      worst = i;
    }
    if (i >= late) c.observed_late = std::max(c.observed_late, e);
  }
  if (c.observed_sup > c.bound_sup * (1.0 + slack)) {
    c.violations.push_back({trace.samples[worst].t, "ultimate_sup",
                            c.observed_sup - c.bound_sup * (1.0 + slack)});
  }
  c.horizon_sufficient = horizon_sufficient(trace, horizon_rate);
  if (c.horizon_sufficient && c.observed_late > c.bound_late * (1.0 + slack)) {
    c.violations.push_back({trace.samples.back().t, "ultimate_late",
                            c.observed_late - c.bound_late * (1.0 + slack)});
  }
  return c;
}

struct MHealth {
  double det_min = std::numeric_limits<double>::infinity();
  double det_late_min = std::numeric_limits<double>::infinity();
  double det_floor = 0.0;
  double cond_max = 0.0;
  double cond_bound_max = 0.0;
  double cond_ratio_max = 0.0;  ///< max over samples of kappa / bound
  double jacobi_residual = 0.0;  ///< sup |dDet_numeric - Det tr(M^-1 dM)| / sup |dDet|
  bool horizon_sufficient = false;
  std::vector<Violation> violations;
};

/// Health of the gain matrix along a trace: det(M) > 0 everywhere, the
/// determinant/Frobenius bound on kappa(M), Jacobi's formula for d/dt det(M),
/// and (given enough horizon) the late-time floor (n/(k(n-1)))^n.
///
/// The Jacobi check compares the forward difference of det(M) over each step
/// with the trapezoid average of det(M) tr(M^-1 dM/dt), both ends evaluated
/// with the bearing held over that step, which is second order in h.
inline MHealth m_health(const SimulationTrace& trace, double k, double horizon_rate,
                        double slack = 0.05, double jacobi_tol = 1e-3) {
  MHealth r;
  const auto& ss = trace.samples;
  const int n = trace.scenario.n;
  r.det_floor = det_floor(n, k);
  if (ss.empty()) return r;

  std::vector<double> det(ss.size());
  for (std::size_t i = 0; i < ss.size(); ++i) {
    const Matrix& M = ss[i].state.M;
    det[i] = M.determinant();
    r.det_min = std::min(r.det_min, det[i]);
    if (!(det[i] > 0.0)) {
      r.violations.push_back({ss[i].t, "det_positive", -det[i]});
      continue;
    }
    const double kappa = condition_number(M);
    const double bound = condition_bound(det[i], M.norm(), n);
    r.cond_max = std::max(r.cond_max, kappa);
    r.cond_bound_max = std::max(r.cond_bound_max, bound);
    r.cond_ratio_max = std::max(r.cond_ratio_max, kappa / bound);
    if (kappa > bound * (1.0 + 1e-9)) r.violations.push_back({ss[i].t, "cond_bound", kappa - bound});
  }

  if (ss.size() >= 2 && r.det_min > 0.0) {
    double res_max = 0.0, rate_max = 0.0, t_worst = ss.front().t;
    for (std::size_t i = 0; i + 1 < ss.size(); ++i) {
      const double h = ss[i + 1].t - ss[i].t;
      const DirectionVector y(ss[i].y);
      auto jacobi = [&](const Matrix& M, double d) {
        return d * (invert(M) * m_matrix_rhs(M, y, k)).trace();
      };
      const double analytic = 0.5 * (jacobi(ss[i].state.M, det[i]) +
                                     jacobi(ss[i + 1].state.M, det[i + 1]));
      const double numeric = (det[i + 1] - det[i]) / h;
      const double res = std::abs(numeric - analytic);
      if (res > res_max) {
        res_max = res;
        t_worst = ss[i].t;
      }
      rate_max = std::max(rate_max, std::abs(analytic));
    }
    r.jacobi_residual = rate_max > 0.0 ? res_max / rate_max : res_max;
    if (r.jacobi_residual > jacobi_tol) {
      r.violations.push_back({t_worst, "jacobi", r.jacobi_residual - jacobi_tol});
    }
  }

  for (std::size_t i = late_start_index(trace); i < ss.size(); ++i) {
    r.det_late_min = std::min(r.det_late_min, det[i]);
  }
  r.horizon_sufficient = horizon_sufficient(trace, horizon_rate);
  if (r.horizon_sufficient && r.det_late_min < r.det_floor * (1.0 - slack)) {
    r.violations.push_back({ss.back().t, "det_floor", r.det_floor * (1.0 - slack) - r.det_late_min});
  }
  return r;
}

struct LogLinearFit {
  double rate = 0.0;  ///< minus the slope of ln|e| against t [1/s]
  double r_squared = 0.0;
  std::size_t points = 0;
};

/// Least-squares line through (t, ln e) for t in [t_start, t_end].
inline LogLinearFit fit_log_linear(std::span<const double> t, std::span<const double> e,
                                   double t_start, double t_end) {
  if (t.size() != e.size()) throw std::invalid_argument("fit_log_linear: size mismatch");
  double st = 0, sl = 0, stt = 0, stl = 0, sll = 0;
  std::size_t m = 0;
  for (std::size_t i = 0; i < t.size(); ++i) {
    if (t[i] < t_start || t[i] > t_end) continue;
    if (!(e[i] > 1e-300)) {
      throw NonPositiveError("fit_log_linear: non-positive error norm at t = " + std::to_string(t[i]));
    }
    const double l = std::log(e[i]);
    st += t[i];
    sl += l;
    stt += t[i] * t[i];
    stl += t[i] * l;
    sll += l * l;
    ++m;
  }
  if (m < 2) throw std::invalid_argument("fit_log_linear: fewer than two points in the interval");
  const double mm = static_cast<double>(m);
  const double vt = stt - st * st / mm;
  const double vl = sll - sl * sl / mm;
  const double cov = stl - st * sl / mm;
  if (!(vt > 0.0)) throw std::invalid_argument("fit_log_linear: degenerate time interval");
  LogLinearFit fit;
  fit.rate = -cov / vt;
  fit.r_squared = vl > 0.0 ? cov * cov / (vt * vl) : 1.0;
  fit.points = m;
  return fit;
}

inline double fit_decay_rate(std::span<const double> t, std::span<const double> e, double t_start,
                             double t_end) {
  return fit_log_linear(t, e, t_start, t_end).rate;
}

struct BoundReport {
  double delta = 0.0;
  double gamma_theory = 0.0;
  double gamma_empirical = 0.0;
  double ultimate_bound_theory = 0.0;
  double ultimate_bound_observed = 0.0;
  double det_floor_theory = 0.0;
  double det_min_observed = 0.0;
  double det_late_min_observed = 0.0;
  double cond_bound_theory = 0.0;
  double cond_max_observed = 0.0;
  double jacobi_residual = 0.0;
  bool pe_certified = false;
  bool horizon_sufficient = false;
  std::vector<std::string> notes;
  std::vector<Violation> violations;

  bool compliant() const noexcept { return violations.empty(); }
};

/// Full bound suite for one trace. gamma comes from the bearing's certified
/// (delta, mu); the horizon for limsup-type checks uses the observed
/// transition-matrix contraction rate.
inline BoundReport analyze_trace(const SimulationTrace& trace, double delta,
                                 double epsilon = 0.05) {
  BoundReport rep;
  rep.delta = delta;
  const double k = trace.scenario.gains.k;
  const DirectionSignal sig = bearing_signal(trace);
  const PEReport pe = pe_report(sig, delta, epsilon, k);
  rep.pe_certified = pe.passes_integral;
  rep.gamma_theory = pe.gamma;
  if (!rep.pe_certified) rep.notes.push_back("bearing not persistently exciting at this delta");

  const TransitionAudit ta = check_transition_bounds(sig, k, rep.gamma_theory, delta);
  rep.gamma_empirical = ta.gamma_empirical;
  rep.violations.insert(rep.violations.end(), ta.violations.begin(), ta.violations.end());

  if (rep.pe_certified) {
    const UltimateBoundCheck ub = ultimate_bound_check(trace, rep.gamma_theory, rep.gamma_empirical);
    rep.ultimate_bound_theory = ub.bound_late;
    rep.ultimate_bound_observed = ub.observed_late;
    rep.violations.insert(rep.violations.end(), ub.violations.begin(), ub.violations.end());
  }

  rep.horizon_sufficient = horizon_sufficient(trace, rep.gamma_empirical);
  if (!rep.horizon_sufficient) {
    rep.notes.push_back("insufficient horizon: late-time (limsup) checks not asserted");
  }

  if (trace.scenario.cascade) {
    const MHealth mh = m_health(trace, k, rep.gamma_empirical);
    rep.det_floor_theory = mh.det_floor;
    rep.det_min_observed = mh.det_min;
    rep.det_late_min_observed = mh.det_late_min;
    rep.cond_bound_theory = mh.cond_bound_max;
    rep.cond_max_observed = mh.cond_max;
    rep.jacobi_residual = mh.jacobi_residual;
    rep.violations.insert(rep.violations.end(), mh.violations.begin(), mh.violations.end());
  } else {
    rep.notes.push_back("basic filter only: M checks skipped");
  }
  return rep;
}

}  // namespace bearing_obs
