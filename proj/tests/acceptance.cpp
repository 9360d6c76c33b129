// Acceptance suite: one PASS/FAIL line per criterion on the circular
// experiment. Exits 0 only when every criterion passes.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <sstream>
#include <string>
#include <vector>

#include "bearing_obs/analysis.hpp"
#include "bearing_obs/bounds.hpp"
#include "bearing_obs/excitation.hpp"
#include "bearing_obs/sim.hpp"
#include "bearing_obs/trace_io.hpp"

using namespace bearing_obs;

namespace {

constexpr double kDelta = 12.57;
constexpr double kEps = 0.05;
constexpr double kSlack = 0.05;

int failures = 0;

void report(int id, const char* name, bool ok, const std::string& detail) {
  std::printf("[%s] %2d %-22s %s\n", ok ? "PASS" : "FAIL", id, name, detail.c_str());
  std::fflush(stdout);
  if (!ok) ++failures;
}

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

struct Series {
  std::vector<double> t, xz, x, a;
};

Series series(const SimulationTrace& tr) {
  Series s;
  for (const TraceSample& p : tr.samples) {
    s.t.push_back(p.t);
    s.xz.push_back(p.err_xz);
    s.x.push_back(p.err_x);
    s.a.push_back(p.err_a);
  }
  return s;
}

double min_of(const std::vector<double>& v) { return *std::min_element(v.begin(), v.end()); }

double empirical_rate(const SimulationTrace& tr, double k, double delta) {
  return check_transition_bounds(bearing_signal(tr), k, 0.0, delta).gamma_empirical;
}

Scenario long_run(Scenario sc, double duration) {
  sc.duration = duration;
  return sc;
}

}  // namespace

int main() {
  const Scenario base = circle_scenario();

  const auto t_start = std::chrono::steady_clock::now();
  const SimulationTrace tr = simulate(base);
  const double runtime = std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
  const Series s = series(tr);

  // 1: each error falls below 1e-3 of its initial value within 100 s
  {
    const bool ok_xz = min_of(s.xz) < 1e-3 * s.xz.front();
    const bool ok_x = min_of(s.x) < 1e-3 * s.x.front();
    const bool ok_a = min_of(s.a) < 1e-3 * s.a.front();
    report(1, "convergence 100 s", tr.ok() && ok_xz && ok_x && ok_a && runtime < 5.0,
           "min/initial |x~z| " + num(min_of(s.xz) / s.xz.front()) + ", |x~| " +
               num(min_of(s.x) / s.x.front()) + ", |a^-a| " + num(min_of(s.a) / s.a.front()) +
               " (need < 1e-3); runtime " + num(runtime) + " s");
  }

  // 2: bias estimate within 1% at 100 s
  {
    const double rel = s.a.back() / base.a_true.norm();
    report(2, "bias estimate 1%", rel <= 0.01, "|a^(100) - a| / |a| = " + num(rel));
  }

  // 3: log-linear fits over [10, 80] s
  {
    bool ok = true;
    std::string d;
    const char* names[] = {"x~z", "x~", "a~"};
    const std::vector<double>* es[] = {&s.xz, &s.x, &s.a};
    for (int i = 0; i < 3; ++i) {
      const LogLinearFit f = fit_log_linear(s.t, *es[i], 10.0, 80.0);
      ok = ok && f.r_squared >= 0.95 && f.rate > 0.0;
      d += std::string(i ? "; " : "") + names[i] + " rate " + num(f.rate) + " R2 " + num(f.r_squared);
    }
    report(3, "exponential decay fit", ok, d);
  }

  // 4: excitation certificates and the unobservable counterexample
  const DirectionSignal sig = bearing_signal(tr);
  const PEReport pe = pe_report(sig, kDelta, kEps, base.gains.k);
  {
    const double lam_min = min_of(pe.lambda_min_per_window);
    const bool circle_ok = pe.passes_integral && pe.passes_derivative && lam_min > 0.0;

    Scenario radial = base;
    const Vector total{{0.1, 0.2, 0.3}};
    radial.trajectory = Trajectory{TrajectoryKind::constant, 0, 0, 0, total};
    radial.duration = 20.0;
    const Vector v_meas = total - base.a_true;
    const auto [x0a, x0b] = indistinguishable_pair(v_meas, base.a_true, 10.0, 20.0);
    radial.x0 = x0a;
    const SimulationTrace ra = simulate(radial);
    radial.x0 = x0b;
    const SimulationTrace rb = simulate(radial);
    double ydiff = 0.0;
    for (std::size_t i = 0; i < ra.samples.size(); ++i) {
      ydiff = std::max(ydiff, (ra.samples[i].y - rb.samples[i].y).lpNorm<Eigen::Infinity>());
    }
    const PEReport rpe = pe_report(bearing_signal(ra), kDelta, kEps, base.gains.k);
    const bool radial_ok = !rpe.passes_integral && !rpe.passes_derivative;
    const bool pair_ok = ra.ok() && rb.ok() && ra.samples.size() == rb.samples.size() && ydiff <= 1e-12;
    report(4, "PE certification", circle_ok && radial_ok && pair_ok,
           "circle mu " + num(pe.mu) + " min|dy| " + num(min_of(pe.max_ydot_per_window)) +
               "; radial mu " + num(rpe.mu) + " max|dy| " + num(*std::max_element(
                   rpe.max_ydot_per_window.begin(), rpe.max_ydot_per_window.end())) +
               "; pair |dy| " + num(ydiff));
  }

  // 5: transition-matrix envelope
  const double gamma = pe.passes_integral ? gamma_bound(base.gains.k, kDelta, pe.mu) : 0.0;
  {
    const TransitionAudit ta = check_transition_bounds(sig, base.gains.k, gamma, kDelta, 50, 1e-3);
    report(5, "transition envelope", pe.passes_integral && ta.violations.empty() && ta.pairs.size() == 50,
           std::to_string(ta.violations.size()) + " violations over " + std::to_string(ta.pairs.size()) +
               " pairs; gamma " + num(gamma) + ", empirical " + num(ta.gamma_empirical));
  }

  // 6: ultimate bound of the basic filter alone
  {
    Scenario basic = long_run(base, 400.0);
    basic.cascade = false;
    const SimulationTrace bt = simulate(basic);
    const double rate = empirical_rate(bt, base.gains.k, kDelta);
    const UltimateBoundCheck ub = ultimate_bound_check(bt, gamma, rate, kSlack);
    report(6, "ultimate bound", bt.ok() && gamma > 0.0 && ub.horizon_sufficient && ub.violations.empty(),
           "sup " + num(ub.observed_sup) + " <= " + num(ub.bound_sup) + ", late " +
               num(ub.observed_late) + " <= " + num(ub.bound_late) + ", horizon " +
               (ub.horizon_sufficient ? "ok" : "insufficient"));
  }

  // 7: gain-matrix health on the long circle run and a 3-D sweep
  {
    const SimulationTrace ct = simulate(long_run(base, 400.0));
    const MHealth mc = m_health(ct, base.gains.k, empirical_rate(ct, base.gains.k, kDelta), kSlack);

    Scenario sweep = base;
    sweep.trajectory = Trajectory{TrajectoryKind::sphere_sweep, 3.0, 1.0, 0.37, Vector::Zero(3)};
    sweep.x0 = Vector{{0.0, 0.0, 3.0}};
    sweep.duration = 1000.0;
    const SimulationTrace st = simulate(sweep);
    const MHealth ms = m_health(st, base.gains.k, empirical_rate(st, base.gains.k, kDelta), kSlack);

    const bool ok = ct.ok() && st.ok() && mc.horizon_sufficient && ms.horizon_sufficient &&
                    mc.violations.empty() && ms.violations.empty();
    report(7, "M health", ok,
           "det min " + num(std::min(mc.det_min, ms.det_min)) + ", kappa/bound " +
               num(std::max(mc.cond_ratio_max, ms.cond_ratio_max)) + ", Jacobi " +
               num(std::max(mc.jacobi_residual, ms.jacobi_residual)) + ", late det " +
               num(mc.det_late_min) + " / " + num(ms.det_late_min) + " >= " + num(mc.det_floor));
  }

  // 8: dual output excitation
  {
    const PEReport d = dual_pe_check(tr, kDelta, kEps, base.gains.k_star);
    report(8, "dual PE", d.passes_integral && d.mu > 0.0, "mu* " + num(d.mu));
  }

  // 9: noisy run stays bounded and improves on its t = 5 s error
  {
    const SimulationTrace nt = simulate(noisy_circle_scenario());
    const Series ns = series(nt);
    const auto i5 = static_cast<std::size_t>(std::llround(5.0 / nt.scenario.h));
    double sup = 0.0, late = 0.0;
    bool finite = true;
    for (double e : ns.x) {
      finite = finite && std::isfinite(e);
      sup = std::max(sup, e);
    }
    const std::size_t l0 = late_start_index(nt);
    for (std::size_t i = l0; i < ns.x.size(); ++i) late += ns.x[i];
    late /= static_cast<double>(ns.x.size() - l0);
    const bool ok = nt.ok() && finite && sup <= 10.0 * ns.x.front() && late < ns.x[i5];
    report(9, "noisy run", ok,
           "sup " + num(sup) + " (<= 10 |x~(0)| = " + num(10.0 * ns.x.front()) + "), late mean " +
               num(late) + " < " + num(ns.x[i5]) + " at 5 s");
  }

  // 10: integrator order, step-size sensitivity, reproducibility
  {
    // dx/dt = lambda x on [0, 2], lambda = -1.5, h = 0.2 halved four times
    const double lambda = -1.5;
    auto rk4_error = [&](int steps) {
      Vector x = Vector::Constant(1, 1.0);
      const double h = 2.0 / steps;
      for (int i = 0; i < steps; ++i) {
        x = rk4_step([&](double, const Vector& u) -> Vector { return lambda * u; }, i * h, x, h);
      }
      return std::abs(x[0] - std::exp(2.0 * lambda));
    };
    double order = 1e9;
    double prev = rk4_error(10);
    for (int steps : {20, 40, 80, 160}) {
      const double e = rk4_error(steps);
      order = std::min(order, std::log2(prev / e));
      prev = e;
    }

    Scenario half = base;
    half.h = base.h / 2.0;
    const SimulationTrace ht = simulate(half);
    const auto& f1 = tr.samples.back();
    const auto& f2 = ht.samples.back();
    const double dh = std::max({std::abs(f2.err_xz / f1.err_xz - 1.0), std::abs(f2.err_x / f1.err_x - 1.0),
                                std::abs(f2.err_a / f1.err_a - 1.0)});

    std::ostringstream a, b;
    write_trace_csv(a, simulate(noisy_circle_scenario()));
    write_trace_csv(b, simulate(noisy_circle_scenario()));
    const bool identical = a.str() == b.str();

    report(10, "numerics", order >= 3.9 && dh < 0.01 && identical,
           "RK4 order " + num(order) + ", halving h changes final errors by " + num(100.0 * dh) +
               "%, traces " + (identical ? "byte-identical" : "differ"));
  }

  std::printf("%d of 10 criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
