#pragma once

#include "ald/connection.hpp"
#include "ald/metric.hpp"
#include "ald/types.hpp"

#include <functional>
#include <vector>

namespace ald {

struct OdeOptions {
  double rtol = 1e-10;
  double atol = 1e-10;
  double h_init = 0.0;     // 0: automatic
  double h_max = 0.0;      // 0: unbounded
  bool fixed_step = false; // take h_init steps verbatim (order tests)
  long max_steps = 20000000;
};

struct OdeStats {
  long steps = 0;
  long rejected = 0;
};

/// Accepted-step interval with the 4th-order continuous extension.
class DenseSpan {
 public:
  DenseSpan(double t0, double t1, std::vector<Vec> rcont)
      : t0_(t0), t1_(t1), rcont_(std::move(rcont)) {}

  double t0() const { return t0_; }
  double t1() const { return t1_; }

  Vec eval(double t) const;
  double eval_component(int i, double t) const;

 private:
  double t0_, t1_;
  std::vector<Vec> rcont_;  // 5 state-sized vectors
};

using Rhs = std::function<Vec(double t, const Vec& z)>;
/// Called after every accepted step; return false to stop the integration.
using StepObserver = std::function<bool(const DenseSpan&, const Vec& z_new)>;

/// Dormand-Prince 5(4) with PI-free standard step control and dense output.
/// t1 < t0 integrates backward. Throws IntegrationError on step-size
/// underflow or non-finite right-hand sides.
OdeStats integrate_ode(const Rhs& rhs, double t0, double t1, Vec& z,
                       const OdeOptions& opts, const StepObserver& observer = nullptr);

enum class TimeTarget { ProperTime, LabTime };

struct TrajectoryPoint {
  double tau = 0.0;  // integration parameter (proper time / affine parameter)
  double t = 0.0;    // lab time (x^0)
  Vec x;
  Vec y;
};

/// Ordered samples on a uniform lab-time grid plus integrator metadata.
struct Trajectory {
  std::vector<TrajectoryPoint> samples;
  long steps = 0;
  long rejected = 0;
  double tol = 0.0;
  double step_drift = 0.0;  // max |eta(y,y)-1| over accepted steps
  int dim = 0;
};

/// Lorentz force solution in proper time, resampled to `outputs`+1 uniform
/// lab times covering [x0^0, x0^0 + T_lab]. Requires eta(y0,y0) = 1 within
/// 1e-10 and y0^0 > 0. Aborts with ConeProximityError if eta(y,y) < 0.1.
Trajectory integrate_lorentz(const MetricField& metric, const FaradayField& F,
                             const Vec& x0, const Vec& y0, double T_lab, double tol,
                             int outputs = 200, const OdeOptions* override_opts = nullptr);

/// Autoparallel solution x'' + Gamma(x[,x'])(x',x') = 0 of any connection
/// field, integrated in its own affine parameter and resampled to lab time.
Trajectory integrate_autoparallel(const ConnectionField& conn, const MetricField& metric,
                                  const Vec& x0, const Vec& y0, double T_lab, double tol,
                                  int outputs = 200,
                                  const OdeOptions* override_opts = nullptr);

/// Cubic resampling onto a uniform grid in the target parameter, using
/// dt/dtau = y^0. Round trips return the original within interpolation error.
Trajectory reparameterize(const Trajectory& traj, TimeTarget target);

/// Max over samples of |eta(y,y) - 1|.
double constraint_drift(const Trajectory& traj, const MetricField& metric);

}  // namespace ald
