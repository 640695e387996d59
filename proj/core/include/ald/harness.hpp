#pragma once

#include "ald/averaging.hpp"
#include "ald/config.hpp"
#include "ald/integrate.hpp"
#include "ald/kinetics.hpp"

#include <iosfwd>
#include <string>
#include <vector>

namespace ald {

/// Trajectory-bound constants (position: C, C2, B2; velocity: K, K2, D2).
struct TrajectoryBoundConstants {
  double C = 2.0;
  double C2 = 1.0;
  double B2 = 1.0;
  double K = 2.0;
  double K2 = 1.0;
  double D2 = 1.0;
};

struct HypothesisThresholds {
  double E_min = 5.0;
  double alpha_max = 0.2;
  double theta = 0.1;
  double adiabatic = 0.05;
};

/// 2 (C |F| + C2^2 (1 + B2 alpha)) alpha^2 E^-2 t^2. E <= 0 is an error.
double position_bound(double alpha, double E, double t, double normF, double C, double C2,
                      double B2);

/// (K |F| + K2^2 (1 + D2 alpha)) alpha^2 E^-1 t.
double velocity_bound(double alpha, double E, double t, double normF, double K, double K2,
                      double D2);

/// Validity horizon E sqrt(L0 / (alpha C |F|)).
double t_max_estimate(double E, double alpha, double L0, double C, double normF);

struct SeriesPoint {
  double t = 0.0;
  double div_x = 0.0;
  double bound_x = 0.0;
  double div_v = 0.0;
  double bound_v = 0.0;
};

struct MomentSample {
  double t = 0.0;
  Vec m1;
  double alpha = 0.0;
  double energy = 0.0;
  double warm = 0.0;  // |trace_eta of centered m2| = |1 - eta(m1,m1)| on the fiber
};

struct HypothesisDiagnostics {
  double E_min = 0.0;
  double alpha_max = 0.0;
  double theta_diff_max = 0.0;  // max |theta^2 - theta_bar^2|
  double warm_fluid_max = 0.0;
  double adiabaticity = 0.0;  // max |d log E / dt|
  bool pass_energy = false;
  bool pass_alpha = false;
  bool pass_theta = false;
  bool pass_adiabatic = false;
  std::vector<double> theta_sq;      // |y_sp|^2 - |m1_sp|^2 along the run
  std::vector<double> theta_bar_sq;  // |m1_sp|^2 - |ytilde_sp|^2
};

struct ComparisonReport {
  int dim = 4;
  std::string mode;
  std::uint64_t seed = 0;
  double alpha = 0.0;   // max over the run
  double energy = 0.0;  // min over the run
  double norm_F = 0.0;  // lab-frame operator norm of F^i_j
  double horizon = 0.0;
  TrajectoryBoundConstants constants;
  std::vector<SeriesPoint> series;
  HypothesisDiagnostics hypotheses;
  double t_max = 0.0;  // validity horizon estimate
  bool pass_position = false;
  bool pass_velocity = false;
  bool pass = false;
  /// Smallest multiplier m such that divergence <= m * bound at all t > 0.
  double multiplier_position = 0.0;
  double multiplier_velocity = 0.0;
  Trajectory lorentz;
  Trajectory averaged;
  std::vector<MomentSample> moment_series;
  std::vector<std::vector<ParticleState>> ensemble_snapshots;  // at output times
};

/// Paired-trajectory comparison: Lorentz solution from the ensemble mean
/// velocity vs the autoparallel of the averaged connection from the same
/// initial condition. Mode "vlasov" recomputes moments from the transported
/// ensemble at every evaluation (co-integrated); "frozen" holds them at t=0.
ComparisonReport run_comparison(const Config& cfg, bool keep_snapshots = true);

HypothesisDiagnostics check_hypotheses(const ComparisonReport& report,
                                       const HypothesisThresholds& thresholds);

std::string report_json(const ComparisonReport& report);
void write_series_csv(std::ostream& os, const ComparisonReport& report);
void write_trajectory_csv(std::ostream& os, const Trajectory& traj,
                          const MetricField& metric);
void write_ensemble_csv(std::ostream& os, const ComparisonReport& report);

struct FitResult {
  double exponent = 0.0;
  double stderr_ = 0.0;
  int points = 0;
  bool degenerate = false;  // zero divergence (cold fluid)
};

struct ScalingCell {
  double alpha_target = 0.0;
  double energy_target = 0.0;
  double T = 0.0;
  double alpha = 0.0;  // measured, max over run
  double energy = 0.0; // measured, min over run
  double max_div_x = 0.0;
  double max_div_v = 0.0;
  double ratio_x = 0.0;  // max_t div/bound
  double ratio_v = 0.0;
  bool pass_x = false;
  bool pass_v = false;
};

struct ScalingStudy {
  std::vector<ScalingCell> cells;
  FitResult alpha_fit_x, alpha_fit_v;
  FitResult energy_fit_x, energy_fit_v;
  FitResult t_fit_x, t_fit_v;  // early-window fits on the reference cell
  double t_window_lo = 0.0, t_window_hi = 0.0;
  bool all_pass_x = true, all_pass_v = true;
};

/// Grid study over alpha and energy targets (full cross product), with
/// log-log fits along the axis sweeps through the reference values and an
/// early-window time fit on the reference cell. Cells run in parallel;
/// assembly order is fixed.
ScalingStudy scaling_study(const Config& cfg);

std::string scaling_json(const ScalingStudy& study);
void write_scaling_csv(std::ostream& os, const ScalingStudy& study);

/// Least-squares slope of log(y) on log(x) with standard error.
FitResult loglog_fit(const std::vector<double>& x, const std::vector<double>& y);

/// Fast invariant suite over the presets; prints one pass/fail line per
/// check and returns the number of failures.
int run_check_suite(std::ostream& os);

}  // namespace ald
