#include "ald/harness.hpp"

#include "ald/quadrature.hpp"
#include "ald/random.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <limits>
#include <mutex>
#include <ostream>
#include <sstream>
#include <thread>

namespace ald {

double position_bound(double alpha, double E, double t, double normF, double C, double C2,
                      double B2) {
  if (!(E > 0.0)) throw PreconditionError("position_bound: E must be positive");
  if (alpha < 0.0 || t < 0.0 || normF < 0.0)
    throw PreconditionError("position_bound: inputs must be nonnegative");
  return 2.0 * (C * normF + C2 * C2 * (1.0 + B2 * alpha)) * alpha * alpha * t * t / (E * E);
}

double velocity_bound(double alpha, double E, double t, double normF, double K, double K2,
                      double D2) {
  if (!(E > 0.0)) throw PreconditionError("velocity_bound: E must be positive");
  if (alpha < 0.0 || t < 0.0 || normF < 0.0)
    throw PreconditionError("velocity_bound: inputs must be nonnegative");
  return (K * normF + K2 * K2 * (1.0 + D2 * alpha)) * alpha * alpha * t / E;
}

double t_max_estimate(double E, double alpha, double L0, double C, double normF) {
  const double denom = alpha * C * normF;
  if (!(denom > 0.0)) throw PreconditionError("t_max_estimate: alpha * C * |F| must be > 0");
  return E * std::sqrt(L0 / denom);
}

FitResult loglog_fit(const std::vector<double>& x, const std::vector<double>& y) {
  FitResult fit;
  std::vector<double> lx, ly;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (x[i] > 0.0 && y[i] > 0.0) {
      lx.push_back(std::log(x[i]));
      ly.push_back(std::log(y[i]));
    }
  }
  fit.points = static_cast<int>(lx.size());
  if (fit.points < 2) {
    fit.degenerate = true;
    return fit;
  }
  double mx = 0, my = 0;
  for (int i = 0; i < fit.points; ++i) {
    mx += lx[i];
    my += ly[i];
  }
  mx /= fit.points;
  my /= fit.points;
  double sxx = 0, sxy = 0;
  for (int i = 0; i < fit.points; ++i) {
    sxx += (lx[i] - mx) * (lx[i] - mx);
    sxy += (lx[i] - mx) * (ly[i] - my);
  }
  if (sxx == 0.0) {
    fit.degenerate = true;
    return fit;
  }
  fit.exponent = sxy / sxx;
  double ss = 0;
  for (int i = 0; i < fit.points; ++i) {
    const double r = ly[i] - my - fit.exponent * (lx[i] - mx);
    ss += r * r;
  }
  fit.stderr_ = (fit.points > 2) ? std::sqrt(ss / (fit.points - 2) / sxx) : 0.0;
  return fit;
}

namespace {

struct Setup {
  int n = 4;
  MetricField metric = MetricField::minkowski(4);
  PresetField field;
  HyperboloidDistribution dist;
  bool field_constant = true;
  double T = 20.0;
  double tol = 1e-10;
  int outputs = 200;
  std::string mode = "vlasov";
  std::uint64_t seed = 1;
  double L0 = 1.0;
  TrajectoryBoundConstants bc;
  HypothesisThresholds hyp;
  Vec x0;
  std::vector<Particle> ensemble0;
};

Setup build_setup(const Config& cfg) {
  Setup s;
  s.n = cfg.get_int("metric.n", 4);
  if (s.n < 2) throw ConfigError("metric.n must be >= 2");
  const std::string metric_name = cfg.get_string("metric.name", "minkowski");
  if (metric_name != "minkowski")
    throw ConfigError("unknown metric preset '" + metric_name + "'");
  s.metric = MetricField::minkowski(s.n);

  FieldParams fp;
  fp.E0 = cfg.get_double("field.params.E0", 1.0);
  fp.B0 = cfg.get_double("field.params.B0", 1.0);
  fp.gradient = cfg.get_double("field.params.gradient", 1.0);
  fp.axis = cfg.get_int("field.params.axis", 3);
  const std::string field_name =
      cfg.get_string("field.name", s.n >= 3 ? "uniform_B" : "uniform_E");
  s.field = preset_field(field_name, fp, s.n);
  s.field_constant = (field_name != "quadrupole");

  const double rapidity = cfg.get_double("dist.center_rapidity", std::acosh(10.0));
  Vec V = Vec::Zero(s.n);
  V[0] = std::cosh(rapidity);
  V[1] = std::sinh(rapidity);

  const std::string kind = cfg.get_string("dist.kind", "gaussian_bump");
  if (kind == "dirac") {
    s.dist = HyperboloidDistribution::dirac(V);
  } else if (kind == "gaussian_bump") {
    double sigma = cfg.get_double("dist.sigma", 0.01);
    if (cfg.has("dist.alpha")) sigma = cfg.get_double("dist.alpha", 0.08) / 8.0;
    const double r_cut = cfg.get_double("dist.r_cut", 0.0);
    s.dist = HyperboloidDistribution::gaussian_bump(V, Vec::Constant(s.n - 1, sigma), r_cut);
  } else if (kind == "uniform_ball") {
    const double r = cfg.get_double("dist.r_cut", cfg.get_double("dist.sigma", 0.05));
    s.dist = HyperboloidDistribution::uniform_ball(V, r);
  } else {
    throw ConfigError("unknown dist.kind '" + kind + "'");
  }

  s.T = cfg.get_double("run.T", 20.0);
  s.tol = cfg.get_double("run.tol", 1e-10);
  s.outputs = cfg.get_int("run.outputs", 200);
  s.mode = cfg.get_string("run.mode", "vlasov");
  if (s.mode != "vlasov" && s.mode != "frozen")
    throw ConfigError("run.mode must be 'vlasov' or 'frozen'");
  s.seed = cfg.get_u64("run.seed", 1);
  s.L0 = cfg.get_double("run.L0", 1.0);

  s.bc.C = cfg.get_double("bounds.C", 2.0);
  s.bc.C2 = cfg.get_double("bounds.C2", 1.0);
  s.bc.B2 = cfg.get_double("bounds.B2", 1.0);
  s.bc.K = cfg.get_double("bounds.K", 2.0);
  s.bc.K2 = cfg.get_double("bounds.K2", 1.0);
  s.bc.D2 = cfg.get_double("bounds.D2", 1.0);

  s.hyp.E_min = cfg.get_double("hyp.E_min", 5.0);
  s.hyp.alpha_max = cfg.get_double("hyp.alpha_max", 0.2);
  s.hyp.theta = cfg.get_double("hyp.theta", 0.1);
  s.hyp.adiabatic = cfg.get_double("hyp.adiabatic", 0.05);

  s.x0 = Vec::Zero(s.n);

  const std::string source = cfg.get_string("dist.ensemble", "nodes");
  if (source == "nodes") {
    const int dflt = (s.n == 2) ? 48 : 8;
    s.ensemble0 = quadrature_particles(s.dist, s.metric, s.x0,
                                       cfg.get_int("dist.transport_nodes", dflt));
  } else if (source == "sampled") {
    s.ensemble0 = sample_ensemble(s.dist, s.metric, s.x0, cfg.get_int("dist.N", 1024),
                                  cfg.get_u64("dist.seed", s.seed));
  } else {
    throw ConfigError("dist.ensemble must be 'nodes' or 'sampled'");
  }
  return s;
}

double spatial_norm(const Vec& a) { return a.tail(a.size() - 1).norm(); }

double spatial_sq(const Vec& a) { return a.tail(a.size() - 1).squaredNorm(); }

/// trace of the centered second moment against eta
double warm_statistic(const Mat& eta, const MomentSet& m) {
  const Mat mu2 = m.m2 - m.m1 * m.m1.transpose();
  return std::abs((eta * mu2).trace());
}

}  // namespace

ComparisonReport run_comparison(const Config& cfg, bool keep_snapshots) {
  Setup s = build_setup(cfg);
  const int n = s.n;
  const int P = static_cast<int>(s.ensemble0.size());
  const Mat eta = s.metric.value(s.x0);
  const Mat eta_inv = s.metric.inverse(s.x0);
  const Tensor3 gamma_eta = christoffel_at(s.metric, s.x0);  // constant metric
  const Mat F0 = s.field.faraday(s.x0);
  const Mat Fmix0 = eta_inv * F0;

  ComparisonReport rep;
  rep.dim = n;
  rep.mode = s.mode;
  rep.seed = s.seed;
  rep.constants = s.bc;
  rep.horizon = s.T;

  // initial moments and the shared initial condition
  const MomentSet m0 = empirical_moments(s.metric, s.x0, s.ensemble0);
  const double mm0 = s.metric.inner(s.x0, m0.m1, m0.m1);
  const Vec y0 = m0.m1 / std::sqrt(mm0);

  // lab-frame |F|: eta_bar built from the normalized coordinate time axis
  {
    Vec e0 = Vec::Zero(n);
    e0[0] = 1.0 / std::sqrt(eta(0, 0));
    rep.norm_F = operator_norm(eta_bar_at(s.metric, e0, s.x0), Fmix0);
  }

  rep.lorentz = integrate_lorentz(s.metric, s.field.faraday, s.x0, y0, s.T, s.tol,
                                  s.outputs);

  // --- averaged trajectory co-integrated with the transported ensemble ---
  const int m_idx = 2 * n;  // [x~ y~ tau~ | particles]
  const int state_dim = 2 * n + 1 + 2 * n * P;
  Vec z0(state_dim);
  z0.head(n) = s.x0;
  z0.segment(n, n) = y0;
  z0[m_idx] = 0.0;
  std::vector<double> w(P);
  for (int p = 0; p < P; ++p) {
    w[p] = s.ensemble0[p].weight;
    z0.segment(m_idx + 1 + 2 * n * p, n) = s.x0;
    z0.segment(m_idx + 1 + 2 * n * p + n, n) = s.ensemble0[p].y;
  }

  const bool frozen = (s.mode == "frozen");
  const Vec m1_frozen = m0.m1;
  const Tensor3 m3_frozen = m0.m3;

  auto rhs = [&](double, const Vec& z) -> Vec {
    Vec dz(state_dim);
    const Vec xt = z.head(n);
    const Vec yt = z.segment(n, n);
    const Vec ytl = eta * yt;

    // ensemble moments needed by the averaged coefficients: m1 and
    // q^m = <y^m (eta(y, y~))^2>
    Vec m1 = Vec::Zero(n), q = Vec::Zero(n);
    if (frozen) {
      m1 = m1_frozen;
      for (int m = 0; m < n; ++m) {
        double acc = 0.0;
        for (int a = 0; a < n; ++a) {
          double al = 0.0;
          for (int b = 0; b < n; ++b) al += m3_frozen(m, a, b) * ytl[b];
          acc += ytl[a] * al;
        }
        q[m] = acc;
      }
    } else {
      for (int p = 0; p < P; ++p) {
        const auto yp = z.segment(m_idx + 1 + 2 * n * p + n, n);
        const double dot = yp.dot(ytl);
        const double wp = w[p];
        m1 += wp * yp;
        q += (wp * dot * dot) * yp;
      }
    }

    const Mat& Fm = Fmix0;  // constant-field fast path; quadrupole handled below
    Vec Fyt, Fm1, Fq;
    if (s.field_constant) {
      Fyt = Fm * yt;
      Fm1 = Fm * m1;
      Fq = Fm * q;
    } else {
      const Mat Fx = eta_inv * s.field.faraday(xt);
      Fyt = Fx * yt;
      Fm1 = Fx * m1;
      Fq = Fx * q;
    }
    const double m1y = m1.dot(ytl);
    const double yy = yt.dot(ytl);
    Vec accel = -(gamma_eta.contract(yt, yt) + Fyt * m1y + 0.5 * Fm1 * yy - 0.5 * Fq);

    dz.head(n) = yt / yt[0];
    dz.segment(n, n) = accel / yt[0];
    dz[m_idx] = 1.0 / yt[0];

    for (int p = 0; p < P; ++p) {
      const auto xp = z.segment(m_idx + 1 + 2 * n * p, n);
      const auto yp = z.segment(m_idx + 1 + 2 * n * p + n, n);
      const double ss = yp.dot(eta * yp);
      Vec acc_p;
      if (s.field_constant) {
        acc_p = -(gamma_eta.contract(yp, yp) + std::sqrt(std::max(ss, 1e-12)) * (Fm * yp));
      } else {
        const Mat Fx = eta_inv * s.field.faraday(xp);
        acc_p = -(gamma_eta.contract(yp, yp) + std::sqrt(std::max(ss, 1e-12)) * (Fx * yp));
      }
      dz.segment(m_idx + 1 + 2 * n * p, n) = yp / yp[0];
      dz.segment(m_idx + 1 + 2 * n * p + n, n) = acc_p / yp[0];
    }
    return dz;
  };

  // integrate in lab time, sampling the output grid from dense spans
  std::vector<Vec> sampled(s.outputs + 1);
  sampled[0] = z0;
  int next = 1;
  OdeOptions opts;
  opts.rtol = opts.atol = s.tol;
  Vec z = z0;
  auto observer = [&](const DenseSpan& span, const Vec&) -> bool {
    while (next <= s.outputs) {
      const double target = s.T * (static_cast<double>(next) / s.outputs);
      if (target > span.t1() + 1e-12) break;
      sampled[next] = span.eval(std::min(target, span.t1()));
      ++next;
    }
    return true;
  };
  const OdeStats stats = integrate_ode(rhs, 0.0, s.T, z, opts, observer);
  if (next <= s.outputs) sampled[s.outputs] = z;

  // unpack the averaged trajectory and the ensemble series
  rep.averaged.dim = n;
  rep.averaged.tol = s.tol;
  rep.averaged.steps = stats.steps;
  rep.averaged.rejected = stats.rejected;
  rep.moment_series.resize(s.outputs + 1);
  if (keep_snapshots) rep.ensemble_snapshots.resize(s.outputs + 1);
  rep.hypotheses.theta_sq.resize(s.outputs + 1);
  rep.hypotheses.theta_bar_sq.resize(s.outputs + 1);

  double drift = 0.0;
  std::vector<Particle> scratch(P);
  for (int k = 0; k <= s.outputs; ++k) {
    const Vec& zk = sampled[k];
    const double tk = s.T * (static_cast<double>(k) / s.outputs);
    TrajectoryPoint pt;
    pt.tau = zk[m_idx];
    pt.t = tk;
    pt.x = zk.head(n);
    pt.y = zk.segment(n, n);
    drift = std::max(drift, std::abs(s.metric.inner(pt.x, pt.y, pt.y) - 1.0));

    for (int p = 0; p < P; ++p) {
      scratch[p].y = zk.segment(m_idx + 1 + 2 * n * p + n, n);
      scratch[p].weight = w[p];
    }
    const MomentSet mk = empirical_moments(s.metric, s.x0, scratch);
    MomentSample ms;
    ms.t = tk;
    ms.m1 = mk.m1;
    ms.alpha = mk.alpha;
    ms.energy = mk.energy;
    ms.warm = warm_statistic(eta, mk);
    rep.moment_series[k] = std::move(ms);

    if (keep_snapshots) {
      auto& snap = rep.ensemble_snapshots[k];
      snap.resize(P);
      for (int p = 0; p < P; ++p) {
        snap[p].x = zk.segment(m_idx + 1 + 2 * n * p, n);
        snap[p].y = zk.segment(m_idx + 1 + 2 * n * p + n, n);
        snap[p].weight = w[p];
      }
    }
    rep.averaged.samples.push_back(std::move(pt));
  }
  rep.averaged.step_drift = drift;

  // --- series, bounds, hypotheses ---
  double alpha_max = 0.0;
  double E_min = std::numeric_limits<double>::infinity();
  for (const auto& ms : rep.moment_series) {
    alpha_max = std::max(alpha_max, ms.alpha);
    E_min = std::min(E_min, ms.energy);
  }
  rep.alpha = alpha_max;
  rep.energy = E_min;

  rep.series.resize(s.outputs + 1);
  rep.pass_position = rep.pass_velocity = true;
  rep.multiplier_position = rep.multiplier_velocity = 0.0;
  for (int k = 0; k <= s.outputs; ++k) {
    const auto& pl = rep.lorentz.samples[k];
    const auto& pa = rep.averaged.samples[k];
    SeriesPoint sp;
    sp.t = pl.t;
    sp.div_x = (pa.x.tail(n - 1) - pl.x.tail(n - 1)).norm();
    sp.div_v = (pa.y.tail(n - 1) / pa.y[0] - pl.y.tail(n - 1) / pl.y[0]).norm();
    sp.bound_x = position_bound(alpha_max, E_min, sp.t, rep.norm_F, s.bc.C, s.bc.C2, s.bc.B2);
    sp.bound_v = velocity_bound(alpha_max, E_min, sp.t, rep.norm_F, s.bc.K, s.bc.K2, s.bc.D2);
    if (k > 0) {
      if (sp.bound_x > 0.0)
        rep.multiplier_position = std::max(rep.multiplier_position, sp.div_x / sp.bound_x);
      else if (sp.div_x > 0.0)
        rep.multiplier_position = std::numeric_limits<double>::infinity();
      if (sp.bound_v > 0.0)
        rep.multiplier_velocity = std::max(rep.multiplier_velocity, sp.div_v / sp.bound_v);
      else if (sp.div_v > 0.0)
        rep.multiplier_velocity = std::numeric_limits<double>::infinity();
      if (sp.div_x > sp.bound_x) rep.pass_position = false;
      if (sp.div_v > sp.bound_v) rep.pass_velocity = false;
    }
    rep.series[k] = sp;
  }
  // dirac: zero bound, divergence at integrator noise. Compare against 10 tol.
  if (alpha_max == 0.0) {
    rep.pass_position = rep.pass_velocity = true;
    for (int k = 0; k <= s.outputs; ++k) {
      if (rep.series[k].div_x > 10.0 * s.tol) rep.pass_position = false;
      if (rep.series[k].div_v > 10.0 * s.tol) rep.pass_velocity = false;
    }
  }
  rep.pass = rep.pass_position && rep.pass_velocity;

  rep.hypotheses = check_hypotheses(rep, s.hyp);
  try {
    rep.t_max = t_max_estimate(E_min, alpha_max, s.L0, s.bc.C, rep.norm_F);
  } catch (const PreconditionError&) {
    rep.t_max = std::numeric_limits<double>::infinity();
  }
  return rep;
}

HypothesisDiagnostics check_hypotheses(const ComparisonReport& rep,
                                       const HypothesisThresholds& th) {
  HypothesisDiagnostics h;
  const int m = static_cast<int>(rep.moment_series.size());
  h.theta_sq.resize(m);
  h.theta_bar_sq.resize(m);
  h.E_min = std::numeric_limits<double>::infinity();
  for (int k = 0; k < m; ++k) {
    const auto& ms = rep.moment_series[k];
    h.E_min = std::min(h.E_min, ms.energy);
    h.alpha_max = std::max(h.alpha_max, ms.alpha);
    h.warm_fluid_max = std::max(h.warm_fluid_max, ms.warm);
    const double msp = spatial_sq(ms.m1);
    h.theta_sq[k] = spatial_sq(rep.lorentz.samples[k].y) - msp;
    h.theta_bar_sq[k] = msp - spatial_sq(rep.averaged.samples[k].y);
    h.theta_diff_max =
        std::max(h.theta_diff_max, std::abs(h.theta_sq[k] - h.theta_bar_sq[k]));
  }
  for (int k = 1; k + 1 < m; ++k) {
    const double dt = rep.moment_series[k + 1].t - rep.moment_series[k - 1].t;
    const double dlogE =
        std::log(rep.moment_series[k + 1].energy) - std::log(rep.moment_series[k - 1].energy);
    h.adiabaticity = std::max(h.adiabaticity, std::abs(dlogE / dt));
  }
  h.pass_energy = h.E_min >= th.E_min;
  h.pass_alpha = h.alpha_max <= th.alpha_max;
  h.pass_theta = h.theta_diff_max <= th.theta;
  h.pass_adiabatic = h.adiabaticity <= th.adiabatic;
  return h;
}

namespace {

nlohmann::json fit_json(const FitResult& f) {
  return {{"exponent", f.exponent},
          {"stderr", f.stderr_},
          {"points", f.points},
          {"degenerate", f.degenerate}};
}

}  // namespace

std::string report_json(const ComparisonReport& rep) {
  nlohmann::json j;
  j["alpha"] = rep.alpha;
  j["energy"] = rep.energy;
  j["norm_F"] = rep.norm_F;
  j["dim"] = rep.dim;
  j["mode"] = rep.mode;
  j["seed"] = rep.seed;
  j["horizon"] = rep.horizon;
  j["constants"] = {{"C", rep.constants.C},   {"C2", rep.constants.C2},
                    {"B2", rep.constants.B2}, {"K", rep.constants.K},
                    {"K2", rep.constants.K2}, {"D2", rep.constants.D2}};
  nlohmann::json series = nlohmann::json::array();
  for (const auto& sp : rep.series) {
    series.push_back({{"t", sp.t},
                      {"div_x", sp.div_x},
                      {"bound_x", sp.bound_x},
                      {"div_v", sp.div_v},
                      {"bound_v", sp.bound_v}});
  }
  j["series"] = std::move(series);
  j["hypotheses"] = {{"E_min", rep.hypotheses.E_min},
                     {"alpha_max", rep.hypotheses.alpha_max},
                     {"theta_diff_max", rep.hypotheses.theta_diff_max},
                     {"warm_fluid_max", rep.hypotheses.warm_fluid_max},
                     {"adiabaticity", rep.hypotheses.adiabaticity},
                     {"pass_energy", rep.hypotheses.pass_energy},
                     {"pass_alpha", rep.hypotheses.pass_alpha},
                     {"pass_theta", rep.hypotheses.pass_theta},
                     {"pass_adiabatic", rep.hypotheses.pass_adiabatic}};
  j["pass"] = rep.pass;
  j["pass_position"] = rep.pass_position;
  j["pass_velocity"] = rep.pass_velocity;
  j["multiplier_position"] = rep.multiplier_position;
  j["multiplier_velocity"] = rep.multiplier_velocity;
  j["t_max"] = rep.t_max;
  j["integrator"] = {{"steps_lorentz", rep.lorentz.steps},
                     {"rejected_lorentz", rep.lorentz.rejected},
                     {"steps_averaged", rep.averaged.steps},
                     {"rejected_averaged", rep.averaged.rejected},
                     {"drift_lorentz", rep.lorentz.step_drift},
                     {"drift_averaged", rep.averaged.step_drift}};
  return j.dump(2) + "\n";
}

namespace {

void put(std::ostream& os, double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  os << buf;
}

}  // namespace

void write_series_csv(std::ostream& os, const ComparisonReport& rep) {
  os << "t,div_x,bound_x,div_v,bound_v\n";
  for (const auto& sp : rep.series) {
    put(os, sp.t);
    os << ',';
    put(os, sp.div_x);
    os << ',';
    put(os, sp.bound_x);
    os << ',';
    put(os, sp.div_v);
    os << ',';
    put(os, sp.bound_v);
    os << '\n';
  }
}

void write_trajectory_csv(std::ostream& os, const Trajectory& traj,
                          const MetricField& metric) {
  const int n = traj.dim;
  os << "tau,t";
  for (int i = 0; i < n; ++i) os << ",x" << i;
  for (int i = 0; i < n; ++i) os << ",y" << i;
  os << ",eta_norm\n";
  for (const auto& p : traj.samples) {
    put(os, p.tau);
    os << ',';
    put(os, p.t);
    for (int i = 0; i < n; ++i) {
      os << ',';
      put(os, p.x[i]);
    }
    for (int i = 0; i < n; ++i) {
      os << ',';
      put(os, p.y[i]);
    }
    os << ',';
    put(os, metric.inner(p.x, p.y, p.y));
    os << '\n';
  }
}

void write_ensemble_csv(std::ostream& os, const ComparisonReport& rep) {
  const int n = rep.dim;
  os << "t,id,weight";
  for (int i = 0; i < n; ++i) os << ",x" << i;
  for (int i = 0; i < n; ++i) os << ",y" << i;
  os << '\n';
  for (std::size_t k = 0; k < rep.ensemble_snapshots.size(); ++k) {
    const double t = rep.series[k].t;
    const auto& snap = rep.ensemble_snapshots[k];
    for (std::size_t p = 0; p < snap.size(); ++p) {
      put(os, t);
      os << ',' << p << ',';
      put(os, snap[p].weight);
      for (int i = 0; i < n; ++i) {
        os << ',';
        put(os, snap[p].x[i]);
      }
      for (int i = 0; i < n; ++i) {
        os << ',';
        put(os, snap[p].y[i]);
      }
      os << '\n';
    }
  }
}

ScalingStudy scaling_study(const Config& cfg) {
  ScalingStudy study;
  const std::vector<double> alphas =
      cfg.get_list("scaling.alphas", {0.02, 0.04, 0.08, 0.16});
  const std::vector<double> energies = cfg.get_list("scaling.energies", {5, 10, 20, 40});
  const double alpha_ref = cfg.get_double("scaling.alpha_ref", 0.08);
  const double energy_ref = cfg.get_double("scaling.energy_ref", 10.0);
  const bool full_grid = cfg.get_bool("scaling.full_grid", true);
  const double T = cfg.get_double("run.T", 20.0);

  struct Job {
    double alpha, energy;
  };
  std::vector<Job> jobs;
  auto add_job = [&jobs](double a, double e) {
    for (const Job& j : jobs)
      if (j.alpha == a && j.energy == e) return;
    jobs.push_back({a, e});
  };
  if (full_grid) {
    for (double a : alphas)
      for (double e : energies) add_job(a, e);
  } else {
    for (double a : alphas) add_job(a, energy_ref);
    for (double e : energies) add_job(alpha_ref, e);
  }
  add_job(alpha_ref, energy_ref);

  std::vector<ComparisonReport> reports(jobs.size());
  std::vector<ScalingCell> cells(jobs.size());
  const int threads =
      std::max(1, std::min<int>(cfg.get_int("scaling.threads", 2),
                                static_cast<int>(std::thread::hardware_concurrency())));
  std::atomic<std::size_t> cursor{0};
  std::exception_ptr first_error;
  std::mutex err_mu;
  auto worker = [&]() {
    while (true) {
      const std::size_t i = cursor.fetch_add(1);
      if (i >= jobs.size()) break;
      try {
        Config c = cfg;
        c.set("dist.kind", "gaussian_bump");
        c.set("dist.alpha", std::to_string(jobs[i].alpha));
        c.set("dist.center_rapidity", std::to_string(std::acosh(jobs[i].energy)));
        reports[i] = run_comparison(c, /*keep_snapshots=*/false);
      } catch (...) {
        std::lock_guard<std::mutex> lock(err_mu);
        if (!first_error) first_error = std::current_exception();
        return;
      }
    }
  };
  std::vector<std::thread> pool;
  for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  if (first_error) std::rethrow_exception(first_error);

  for (std::size_t i = 0; i < jobs.size(); ++i) {
    const auto& rep = reports[i];
    ScalingCell cell;
    cell.alpha_target = jobs[i].alpha;
    cell.energy_target = jobs[i].energy;
    cell.T = T;
    cell.alpha = rep.alpha;
    cell.energy = rep.energy;
    for (const auto& sp : rep.series) {
      cell.max_div_x = std::max(cell.max_div_x, sp.div_x);
      cell.max_div_v = std::max(cell.max_div_v, sp.div_v);
    }
    cell.ratio_x = rep.multiplier_position;
    cell.ratio_v = rep.multiplier_velocity;
    cell.pass_x = rep.pass_position;
    cell.pass_v = rep.pass_velocity;
    study.all_pass_x = study.all_pass_x && cell.pass_x;
    study.all_pass_v = study.all_pass_v && cell.pass_v;
    cells[i] = cell;
  }
  study.cells = std::move(cells);

  // axis fits through the reference values
  std::vector<double> ax, ax_div, ax_divv;
  std::vector<double> ex, ex_div, ex_divv;
  for (const auto& c : study.cells) {
    if (c.energy_target == energy_ref) {
      ax.push_back(c.alpha_target);
      ax_div.push_back(c.max_div_x);
      ax_divv.push_back(c.max_div_v);
    }
    if (c.alpha_target == alpha_ref) {
      ex.push_back(c.energy_target);
      ex_div.push_back(c.max_div_x);
      ex_divv.push_back(c.max_div_v);
    }
  }
  study.alpha_fit_x = loglog_fit(ax, ax_div);
  study.alpha_fit_v = loglog_fit(ax, ax_divv);
  study.energy_fit_x = loglog_fit(ex, ex_div);
  study.energy_fit_v = loglog_fit(ex, ex_divv);

  // early-window time fit on the reference cell
  study.t_window_lo = T / 40.0;
  study.t_window_hi = T / 8.0;
  for (std::size_t i = 0; i < jobs.size(); ++i) {
    if (jobs[i].alpha == alpha_ref && jobs[i].energy == energy_ref) {
      std::vector<double> ts, dx, dv;
      for (const auto& sp : reports[i].series) {
        if (sp.t >= study.t_window_lo && sp.t <= study.t_window_hi) {
          ts.push_back(sp.t);
          dx.push_back(sp.div_x);
          dv.push_back(sp.div_v);
        }
      }
      study.t_fit_x = loglog_fit(ts, dx);
      study.t_fit_v = loglog_fit(ts, dv);
      break;
    }
  }
  return study;
}

std::string scaling_json(const ScalingStudy& study) {
  nlohmann::json j;
  j["alpha_fit_x"] = fit_json(study.alpha_fit_x);
  j["alpha_fit_v"] = fit_json(study.alpha_fit_v);
  j["energy_fit_x"] = fit_json(study.energy_fit_x);
  j["energy_fit_v"] = fit_json(study.energy_fit_v);
  j["t_fit_x"] = fit_json(study.t_fit_x);
  j["t_fit_v"] = fit_json(study.t_fit_v);
  j["t_window"] = {study.t_window_lo, study.t_window_hi};
  j["all_pass_x"] = study.all_pass_x;
  j["all_pass_v"] = study.all_pass_v;
  j["cells"] = nlohmann::json::array();
  for (const auto& c : study.cells) {
    j["cells"].push_back({{"alpha_target", c.alpha_target},
                          {"energy_target", c.energy_target},
                          {"T", c.T},
                          {"alpha", c.alpha},
                          {"energy", c.energy},
                          {"max_div_x", c.max_div_x},
                          {"max_div_v", c.max_div_v},
                          {"ratio_x", c.ratio_x},
                          {"ratio_v", c.ratio_v},
                          {"pass_x", c.pass_x},
                          {"pass_v", c.pass_v}});
  }
  return j.dump(2) + "\n";
}

void write_scaling_csv(std::ostream& os, const ScalingStudy& study) {
  os << "alpha_target,energy_target,T,alpha,energy,max_div_x,max_div_v,ratio_x,ratio_v,"
        "pass_x,pass_v\n";
  for (const auto& c : study.cells) {
    put(os, c.alpha_target);
    os << ',';
    put(os, c.energy_target);
    os << ',';
    put(os, c.T);
    os << ',';
    put(os, c.alpha);
    os << ',';
    put(os, c.energy);
    os << ',';
    put(os, c.max_div_x);
    os << ',';
    put(os, c.max_div_v);
    os << ',';
    put(os, c.ratio_x);
    os << ',';
    put(os, c.ratio_v);
    os << ',' << (c.pass_x ? 1 : 0) << ',' << (c.pass_v ? 1 : 0) << '\n';
  }
}

namespace {

struct CheckPrinter {
  std::ostream& os;
  int failures = 0;
  void operator()(const std::string& name, bool ok, const std::string& detail = "") {
    os << (ok ? "[PASS] " : "[FAIL] ") << name;
    if (!detail.empty()) os << "  (" << detail << ")";
    os << '\n';
    if (!ok) ++failures;
  }
};

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.3g", v);
  return buf;
}

}  // namespace

int run_check_suite(std::ostream& os) {
  CheckPrinter check{os};
  const int n = 4;
  const MetricField mink = MetricField::minkowski(n);
  Rng rng(2024);
  auto random_x = [&]() {
    Vec x(n);
    for (int i = 0; i < n; ++i) x[i] = rng.uniform(-1.0, 1.0);
    return x;
  };
  auto random_unit_y = [&]() {
    Vec u(n - 1);
    for (int a = 0; a < n - 1; ++a) u[a] = rng.uniform(-1.5, 1.5);
    return hyperboloid_lift(mink, Vec::Zero(n), u);
  };

  // preset Faraday tensors against the finite-difference oracle
  {
    double worst = 0.0;
    for (const std::string name : {"uniform_E", "uniform_B", "crossed_EB", "quadrupole"}) {
      const PresetField f = preset_field(name, {}, n);
      for (int trial = 0; trial < 3; ++trial) {
        const Vec x = random_x();
        const Potential fd(n, [&f](const Vec& xx) { return f.potential.value(xx); });
        worst = std::max(worst,
                         (faraday_at(fd, x) - f.faraday(x)).cwiseAbs().maxCoeff());
      }
    }
    check("preset faraday vs finite differences", worst < 1e-7, "max " + num(worst));
  }

  // gauge invariance of the Faraday tensor and the connection coefficients
  {
    const PresetField f = preset_field("uniform_B", {}, n);
    double worst = 0.0;
    for (int trial = 0; trial < 3; ++trial) {
      const double a = rng.uniform(-1, 1), b = rng.uniform(-1, 1);
      ScalarField lambda(
          [a, b](const Vec& x) { return a * std::sin(x[0]) * x[1] + b * x[2] * x[2]; },
          [a, b, n](const Vec& x) {
            Vec g = Vec::Zero(n);
            g[0] = a * std::cos(x[0]) * x[1];
            g[1] = a * std::sin(x[0]);
            g[2] = 2 * b * x[2];
            return g;
          },
          [a, b, n](const Vec& x) {
            Mat H = Mat::Zero(n, n);
            H(0, 0) = -a * std::sin(x[0]) * x[1];
            H(0, 1) = H(1, 0) = a * std::cos(x[0]);
            H(2, 2) = 2 * b;
            return H;
          });
      const Potential Ap = gauge_transform(f.potential, lambda);
      const Vec x = random_x();
      const Vec y = random_unit_y();
      const Tensor3 g1 = lorentz_gamma(mink, faraday_at(f.potential, x), x, y);
      const Tensor3 g2 = lorentz_gamma(mink, faraday_at(Ap, x), x, y);
      worst = std::max(worst, Tensor3::max_abs_diff(g1, g2));
    }
    check("gauge invariance of the connection", worst <= 1e-10, "max " + num(worst));
  }

  // spray homogeneity and the nonlinear connection contraction
  {
    const PresetField f = preset_field("crossed_EB", {}, n);
    double worst_h = 0.0, worst_c = 0.0;
    for (int trial = 0; trial < 10; ++trial) {
      const Vec x = random_x();
      const Vec y = random_unit_y() * rng.uniform(0.8, 1.6);
      const Mat F = f.faraday(x);
      const Vec g1 = spray_at(mink, F, x, y);
      const Vec g2 = spray_at(mink, F, x, 2.0 * y);
      worst_h = std::max(worst_h, (g2 - 4.0 * g1).cwiseAbs().maxCoeff());
      const Mat N = nonlinear_connection(mink, F, x, y);
      worst_c = std::max(worst_c, (N * y - g1).cwiseAbs().maxCoeff());
    }
    check("spray degree-2 homogeneity", worst_h < 1e-10, "max " + num(worst_h));
    check("y . N = G (Euler identity)", worst_c < 1e-10, "max " + num(worst_c));
  }

  // transversality and the L/T reassembly
  {
    const PresetField f = preset_field("uniform_B", {}, n);
    double worst_t = 0.0, worst_r = 0.0;
    for (int trial = 0; trial < 10; ++trial) {
      const Vec x = random_x();
      const Vec y = random_unit_y();
      const Mat F = f.faraday(x);
      const auto lt = decompose_LT(mink, F, x, y);
      worst_t = std::max(worst_t, lt.T.contract(y, y).cwiseAbs().maxCoeff());
      const Tensor3 sum = christoffel_at(mink, x) + lt.L + lt.T;
      worst_r = std::max(worst_r, Tensor3::max_abs_diff(sum, lorentz_gamma(mink, F, x, y)));
    }
    check("transversality T(y,y) = 0", worst_t <= 1e-12, "max " + num(worst_t));
    check("LGamma = etaGamma + L + T", worst_r <= 1e-12, "max " + num(worst_r));
  }

  // averaged coefficients vs brute-force fiber average (n = 2)
  {
    const MetricField m2 = MetricField::minkowski(2);
    const PresetField f = preset_field("uniform_E", {}, 2);
    double worst = 0.0;
    for (int trial = 0; trial < 5; ++trial) {
      std::vector<Particle> pts;
      double tw = 0.0;
      for (int p = 0; p < 5; ++p) {
        Vec u(1);
        u[0] = rng.uniform(-0.4, 0.4);
        const double w = rng.uniform(0.1, 1.0);
        pts.push_back({hyperboloid_lift(m2, Vec::Zero(2), u), w});
        tw += w;
      }
      for (auto& p : pts) p.weight /= tw;
      const Vec x = Vec::Zero(2);
      const Mat F = f.faraday(x);
      const MomentSet mom = empirical_moments(m2, x, pts);
      const Tensor3 avg = averaged_gamma(m2, F, mom, x);
      Tensor3 brute(2);
      for (const auto& p : pts) {
        Tensor3 g = lorentz_gamma(m2, F, x, p.y);
        g *= p.weight;
        brute += g;
      }
      worst = std::max(worst, Tensor3::max_abs_diff(avg, brute));
    }
    check("averaged connection vs brute-force average", worst <= 1e-12, "max " + num(worst));
  }

  // closed-form difference vs direct subtraction
  {
    const PresetField f = preset_field("uniform_B", {}, n);
    Vec V = Vec::Zero(n);
    V[0] = std::cosh(1.0);
    V[1] = std::sinh(1.0);
    const auto dist = HyperboloidDistribution::gaussian_bump(V, Vec::Constant(n - 1, 0.02));
    const Vec x = Vec::Zero(n);
    const MomentSet mom = moments(dist, mink, x, 12);
    double worst = 0.0;
    const auto draws = sample_ensemble(dist, mink, x, 5, 7);
    for (const auto& p : draws) {
      worst = std::max(worst,
                       connection_difference(mink, f.faraday(x), mom, x, p.y).residual);
    }
    check("difference decomposition residual", worst <= 1e-10, "max " + num(worst));
  }

  // cyclotron closure at coarse tolerance
  {
    const PresetField f = preset_field("uniform_B", {}, n);
    const double gamma = 2.0, v = std::sqrt(1.0 - 1.0 / (gamma * gamma));
    Vec y0 = Vec::Zero(n);
    y0[0] = gamma;
    y0[1] = gamma * v;
    const double period = 2.0 * M_PI * gamma;
    const auto traj =
        integrate_lorentz(mink, f.faraday, Vec::Zero(n), y0, period, 1e-10, 64);
    const auto& last = traj.samples.back();
    const double err = (last.x.tail(n - 1) - Vec::Zero(n - 1)).norm() / (gamma * v);
    check("cyclotron closure", err < 1e-7, "rel err " + num(err));
    check("constraint drift", traj.step_drift < 1e-8, num(traj.step_drift));
  }

  // cold fluid: averaged and Lorentz dynamics coincide for a dirac bunch
  {
    Config cfg = Config::from_string(
        "dist.kind = dirac\nrun.T = 5\nrun.outputs = 50\nrun.tol = 1e-10\n");
    const ComparisonReport rep = run_comparison(cfg, false);
    double worst = 0.0;
    for (const auto& sp : rep.series) worst = std::max(worst, sp.div_x);
    check("cold fluid coincidence", worst <= 1e-9, "max div " + num(worst));
  }

  // report determinism
  {
    Config cfg = Config::from_string(
        "dist.alpha = 0.08\nrun.T = 2\nrun.outputs = 20\ndist.transport_nodes = 4\n");
    const std::string a = report_json(run_comparison(cfg, false));
    const std::string b = report_json(run_comparison(cfg, false));
    check("report determinism", a == b);
  }

  return check.failures;
}

}  // namespace ald
