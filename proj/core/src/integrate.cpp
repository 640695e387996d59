#include "ald/integrate.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace ald {

namespace {

// Dormand-Prince 5(4) tableau.
constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
constexpr double a21 = 1.0 / 5;
constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                 a54 = -212.0 / 729;
constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                 a64 = 49.0 / 176, a65 = -5103.0 / 18656;
constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192,
                 b5 = -2187.0 / 6784, b6 = 11.0 / 84;
// error weights b - b*
constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920,
                 e5 = -17253.0 / 339200, e6 = 22.0 / 525, e7 = -1.0 / 40;
// dense-output weights
constexpr double d1 = -12715105075.0 / 11282082432.0, d3 = 87487479700.0 / 32700410799.0,
                 d4 = -10690763975.0 / 1880347072.0, d5 = 701980252875.0 / 199316789632.0,
                 d6 = -1453857185.0 / 822651844.0, d7 = 69997945.0 / 29380423.0;

bool finite(const Vec& v) { return v.allFinite(); }

}  // namespace

Vec DenseSpan::eval(double t) const {
  const double h = t1_ - t0_;
  const double th = (t - t0_) / h;
  const double th1 = 1.0 - th;
  return rcont_[0] +
         th * (rcont_[1] + th1 * (rcont_[2] + th * (rcont_[3] + th1 * rcont_[4])));
}

double DenseSpan::eval_component(int i, double t) const {
  const double h = t1_ - t0_;
  const double th = (t - t0_) / h;
  const double th1 = 1.0 - th;
  return rcont_[0][i] +
         th * (rcont_[1][i] +
               th1 * (rcont_[2][i] + th * (rcont_[3][i] + th1 * rcont_[4][i])));
}

OdeStats integrate_ode(const Rhs& rhs, double t0, double t1, Vec& z,
                       const OdeOptions& opts, const StepObserver& observer) {
  OdeStats stats;
  if (t1 == t0) return stats;
  const double dir = (t1 > t0) ? 1.0 : -1.0;
  const double span = std::abs(t1 - t0);
  double t = t0;
  Vec k1 = rhs(t, z);
  if (!finite(k1)) throw IntegrationError("non-finite right-hand side at start");

  double h = opts.h_init != 0.0 ? std::abs(opts.h_init) : 1e-3 * span;
  if (opts.h_max > 0.0) h = std::min(h, opts.h_max);
  h *= dir;

  const double h_floor = 1e-14 * std::max(span, 1.0);
  Vec k2, k3, k4, k5, k6, k7, z_new, err;

  while (dir * (t1 - t) > 0.0) {
    if (++stats.steps > opts.max_steps)
      throw IntegrationError("integration exceeded the step budget");
    if (!opts.fixed_step && std::abs(h) < h_floor)
      throw IntegrationError("step size underflow (stiffness) at t = " + std::to_string(t));
    if (dir * (t + h - t1) > 0.0) h = t1 - t;

    bool ok = true;
    try {
      k2 = rhs(t + c2 * h, z + h * (a21 * k1));
      k3 = rhs(t + c3 * h, z + h * (a31 * k1 + a32 * k2));
      k4 = rhs(t + c4 * h, z + h * (a41 * k1 + a42 * k2 + a43 * k3));
      k5 = rhs(t + c5 * h, z + h * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4));
      k6 = rhs(t + h, z + h * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5));
      z_new = z + h * (b1 * k1 + b3 * k3 + b4 * k4 + b5 * k5 + b6 * k6);
      k7 = rhs(t + h, z_new);
    } catch (const AdmissibilityError&) {
      // a trial stage left the admissible set; treat as a rejected step
      if (opts.fixed_step) throw;
      ok = false;
    }

    double err_norm = 0.0;
    if (ok) {
      err = h * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);
      ok = finite(z_new) && finite(err);
    }
    if (ok) {
      double acc = 0.0;
      for (int i = 0; i < z.size(); ++i) {
        const double sc = opts.atol + opts.rtol * std::max(std::abs(z[i]), std::abs(z_new[i]));
        const double r = err[i] / sc;
        acc += r * r;
      }
      err_norm = std::sqrt(acc / z.size());
    } else {
      err_norm = std::numeric_limits<double>::infinity();
    }

    if (opts.fixed_step || err_norm <= 1.0) {
      if (!finite(z_new)) throw IntegrationError("non-finite state during integration");
      if (observer) {
        std::vector<Vec> rc(5);
        rc[0] = z;
        rc[1] = z_new - z;
        rc[2] = h * k1 - rc[1];
        rc[3] = rc[1] - h * k7 - rc[2];
        rc[4] = h * (d1 * k1 + d3 * k3 + d4 * k4 + d5 * k5 + d6 * k6 + d7 * k7);
        if (!observer(DenseSpan(t, t + h, std::move(rc)), z_new)) {
          z = z_new;
          return stats;
        }
      }
      t += h;
      z = z_new;
      k1 = k7;  // FSAL
      if (!opts.fixed_step) {
        const double fac =
            std::clamp(0.9 * std::pow(std::max(err_norm, 1e-16), -0.2), 0.2, 5.0);
        h *= fac;
        if (opts.h_max > 0.0 && std::abs(h) > opts.h_max) h = dir * opts.h_max;
      }
    } else {
      ++stats.rejected;
      const double fac =
          std::clamp(0.9 * std::pow(err_norm, -0.2), 0.1, 1.0);
      h *= fac;
    }
  }
  return stats;
}

namespace {

struct SampleCollector {
  double t_start, t_end;
  int outputs;
  std::vector<TrajectoryPoint>* samples;
  int next = 0;
  int dim;

  double grid_time(int k) const {
    return t_start + (t_end - t_start) * (static_cast<double>(k) / outputs);
  }

  /// Pull all grid lab-times inside an accepted span; x^0 is state
  /// component 0 and is strictly monotone (y^0 > 0).
  void collect(const DenseSpan& span, double tau0, double tau1) {
    const double lab0 = span.eval_component(0, tau0);
    const double lab1 = span.eval_component(0, tau1);
    const double lo = std::min(lab0, lab1), hi = std::max(lab0, lab1);
    while (next <= outputs) {
      const double target = grid_time(next);
      if (target < lo - 1e-12 || target > hi + 1e-12) break;
      // bisection on the dense polynomial
      double a = tau0, b = tau1;
      double fa = lab0 - target;
      for (int it = 0; it < 80; ++it) {
        const double m = 0.5 * (a + b);
        const double fm = span.eval_component(0, m) - target;
        if ((fa <= 0.0) == (fm <= 0.0)) {
          a = m;
          fa = fm;
        } else {
          b = m;
        }
      }
      const double tau = 0.5 * (a + b);
      const Vec z = span.eval(tau);
      TrajectoryPoint pt;
      pt.tau = tau;
      pt.t = target;
      pt.x = z.head(dim);
      pt.y = z.tail(dim);
      samples->push_back(std::move(pt));
      ++next;
    }
  }
};

Trajectory integrate_param(const std::function<Vec(double, const Vec&)>& rhs_tau,
                           const MetricField& metric, const Vec& x0, const Vec& y0,
                           double T_lab, double tol, int outputs,
                           const OdeOptions* override_opts, bool guard_cone) {
  const int n = metric.dim();
  Trajectory traj;
  traj.dim = n;
  traj.tol = tol;
  if (outputs < 1) throw PreconditionError("outputs must be >= 1");

  OdeOptions opts;
  if (override_opts) opts = *override_opts;
  else opts.rtol = opts.atol = tol;

  Vec z(2 * n);
  z.head(n) = x0;
  z.tail(n) = y0;

  const double t_end = x0[0] + T_lab;
  SampleCollector collector{x0[0], t_end, outputs, &traj.samples, 0, n};
  {
    TrajectoryPoint pt;
    pt.tau = 0.0;
    pt.t = x0[0];
    pt.x = x0;
    pt.y = y0;
    traj.samples.push_back(std::move(pt));
    collector.next = 1;
  }

  double drift = 0.0;
  const double dir = (T_lab > 0) ? 1.0 : -1.0;
  auto observer = [&](const DenseSpan& span, const Vec& z_new) -> bool {
    const Vec y = z_new.tail(n);
    const Vec x = z_new.head(n);
    const double s = metric.inner(x, y, y);
    drift = std::max(drift, std::abs(s - 1.0));
    if (guard_cone && s < 0.1)
      throw ConeProximityError("trajectory approached the null cone: eta(y,y) = " +
                               std::to_string(s));
    collector.collect(span, span.t0(), span.t1());
    const double lab = z_new[0];
    return dir * (lab - t_end) < 0.0;  // stop once the lab horizon is passed
  };

  // The proper-time horizon is unknown a priori; the observer stops the
  // integration once x^0 crosses the target. An upper bound on |tau| keeps
  // the loop finite even for pathological inputs.
  const double tau_cap = 1e6 * (std::abs(T_lab) + 1.0);
  if (opts.h_init == 0.0) opts.h_init = 1e-3 * (std::abs(T_lab) + 1.0);
  const OdeStats stats = integrate_ode(rhs_tau, 0.0, dir * tau_cap, z, opts, observer);
  traj.steps = stats.steps;
  traj.rejected = stats.rejected;
  traj.step_drift = drift;

  if (collector.next <= outputs)
    throw IntegrationError("integration stopped before reaching the lab-time horizon");
  return traj;
}

}  // namespace

Trajectory integrate_lorentz(const MetricField& metric, const FaradayField& F,
                             const Vec& x0, const Vec& y0, double T_lab, double tol,
                             int outputs, const OdeOptions* override_opts) {
  const int n = metric.dim();
  const double s0 = metric.inner(x0, y0, y0);
  if (std::abs(s0 - 1.0) > 1e-10)
    throw PreconditionError("integrate_lorentz: eta(y0,y0) must be 1 within 1e-10");
  if (!(y0[0] > 0.0))
    throw PreconditionError("integrate_lorentz: y0^0 must be positive");
  auto rhs = [&metric, &F, n](double, const Vec& z) -> Vec {
    const Vec x = z.head(n), y = z.tail(n);
    Vec dz(2 * n);
    dz.head(n) = y;
    dz.tail(n) = -spray_at(metric, F(x), x, y);
    return dz;
  };
  return integrate_param(rhs, metric, x0, y0, T_lab, tol, outputs, override_opts,
                         /*guard_cone=*/true);
}

Trajectory integrate_autoparallel(const ConnectionField& conn, const MetricField& metric,
                                  const Vec& x0, const Vec& y0, double T_lab, double tol,
                                  int outputs, const OdeOptions* override_opts) {
  const int n = metric.dim();
  const double s0 = metric.inner(x0, y0, y0);
  if (std::abs(s0 - 1.0) > 1e-10)
    throw PreconditionError("integrate_autoparallel: eta(y0,y0) must be 1 within 1e-10");
  if (!(y0[0] > 0.0))
    throw PreconditionError("integrate_autoparallel: y0^0 must be positive");
  auto rhs = [&conn, n](double, const Vec& z) -> Vec {
    const Vec x = z.head(n), y = z.tail(n);
    Vec dz(2 * n);
    dz.head(n) = y;
    dz.tail(n) = -conn.at(x, y).contract(y, y);
    return dz;
  };
  return integrate_param(rhs, metric, x0, y0, T_lab, tol, outputs, override_opts,
                         /*guard_cone=*/!conn.affine());
}

namespace {

/// Cubic Hermite basis evaluation on [x0, x1].
double hermite(double x, double x0, double x1, double f0, double f1, double d0, double d1) {
  const double h = x1 - x0;
  const double s = (x - x0) / h;
  const double s2 = s * s, s3 = s2 * s;
  return (2 * s3 - 3 * s2 + 1) * f0 + (s3 - 2 * s2 + s) * h * d0 +
         (-2 * s3 + 3 * s2) * f1 + (s3 - s2) * h * d1;
}

}  // namespace

Trajectory reparameterize(const Trajectory& traj, TimeTarget target) {
  const auto& s = traj.samples;
  if (s.size() < 4) throw PreconditionError("reparameterize: need at least 4 samples");
  const int n = traj.dim;
  const int m = static_cast<int>(s.size());

  // slope estimates for y by 3-point parabolic differences in tau
  std::vector<Vec> ydot(m);
  for (int i = 0; i < m; ++i) {
    const int a = std::max(0, i - 1), b = std::min(m - 1, i + 1);
    if (a == i || b == i) {
      ydot[i] = (s[b].y - s[a].y) / (s[b].tau - s[a].tau);
    } else {
      const double h1 = s[i].tau - s[a].tau, h2 = s[b].tau - s[i].tau;
      ydot[i] = (h1 * h1 * (s[b].y - s[i].y) + h2 * h2 * (s[i].y - s[a].y)) /
                (h1 * h2 * (h1 + h2));
    }
  }

  Trajectory out;
  out.dim = n;
  out.tol = traj.tol;
  out.steps = traj.steps;
  out.rejected = traj.rejected;
  out.step_drift = traj.step_drift;
  out.samples.resize(m);

  auto interval_of_tau = [&](double tau) {
    int lo = 0, hi = m - 1;
    while (hi - lo > 1) {
      const int mid = (lo + hi) / 2;
      if (s[mid].tau <= tau) lo = mid;
      else hi = mid;
    }
    return lo;
  };

  auto eval_at_tau = [&](double tau, TrajectoryPoint& pt) {
    const int i = interval_of_tau(tau);
    const auto &p0 = s[i], &p1 = s[i + 1];
    pt.tau = tau;
    pt.t = hermite(tau, p0.tau, p1.tau, p0.t, p1.t, p0.y[0], p1.y[0]);
    pt.x = Vec(n);
    pt.y = Vec(n);
    for (int c = 0; c < n; ++c) {
      pt.x[c] = hermite(tau, p0.tau, p1.tau, p0.x[c], p1.x[c], p0.y[c], p1.y[c]);
      pt.y[c] = hermite(tau, p0.tau, p1.tau, p0.y[c], p1.y[c], ydot[i][c], ydot[i + 1][c]);
    }
  };

  if (target == TimeTarget::ProperTime) {
    const double tau0 = s.front().tau, tau1 = s.back().tau;
    for (int k = 0; k < m; ++k) {
      const double tau = tau0 + (tau1 - tau0) * (static_cast<double>(k) / (m - 1));
      eval_at_tau(tau, out.samples[k]);
    }
  } else {
    const double t0 = s.front().t, t1 = s.back().t;
    for (int k = 0; k < m; ++k) {
      const double t_target = t0 + (t1 - t0) * (static_cast<double>(k) / (m - 1));
      // invert the monotone t(tau) by bisection within the bracketing interval
      int lo = 0, hi = m - 1;
      while (hi - lo > 1) {
        const int mid = (lo + hi) / 2;
        if (s[mid].t <= t_target) lo = mid;
        else hi = mid;
      }
      double a = s[lo].tau, b = s[hi].tau;
      TrajectoryPoint tmp;
      for (int it = 0; it < 80; ++it) {
        const double mid = 0.5 * (a + b);
        eval_at_tau(mid, tmp);
        if (tmp.t <= t_target) a = mid;
        else b = mid;
      }
      eval_at_tau(0.5 * (a + b), out.samples[k]);
      out.samples[k].t = t_target;
    }
  }
  return out;
}

double constraint_drift(const Trajectory& traj, const MetricField& metric) {
  double drift = 0.0;
  for (const auto& p : traj.samples)
    drift = std::max(drift, std::abs(metric.inner(p.x, p.y, p.y) - 1.0));
  return drift;
}

}  // namespace ald
