// Command line front end: simulate / compare / scaling / check.

#include <CLI11.hpp>

#include "ald/harness.hpp"

#include <filesystem>
#include <fstream>
#include <iostream>

namespace fs = std::filesystem;

namespace {

ald::Config load_config(const std::string& path, const std::string& output_dir) {
  ald::Config cfg =
      path.empty() ? ald::Config::from_string("") : ald::Config::from_file(path);
  if (!output_dir.empty()) cfg.set("run.output_dir", output_dir);
  return cfg;
}

fs::path ensure_output_dir(const ald::Config& cfg) {
  const fs::path dir = cfg.get_string("run.output_dir", ".");
  fs::create_directories(dir);
  return dir;
}

void write_file(const fs::path& p, const std::string& contents) {
  std::ofstream out(p, std::ios::binary);
  out << contents;
  if (!out) throw ald::Error("failed to write " + p.string());
}

int cmd_simulate(const ald::Config& cfg) {
  const int n = cfg.get_int("metric.n", 4);
  const auto metric = ald::MetricField::minkowski(n);
  ald::FieldParams fp;
  fp.E0 = cfg.get_double("field.params.E0", 1.0);
  fp.B0 = cfg.get_double("field.params.B0", 1.0);
  fp.gradient = cfg.get_double("field.params.gradient", 1.0);
  fp.axis = cfg.get_int("field.params.axis", 3);
  const auto field = ald::preset_field(
      cfg.get_string("field.name", n >= 3 ? "uniform_B" : "uniform_E"), fp, n);

  const double rapidity = cfg.get_double("dist.center_rapidity", std::acosh(10.0));
  ald::Vec y0 = ald::Vec::Zero(n);
  y0[0] = std::cosh(rapidity);
  y0[1] = std::sinh(rapidity);
  const ald::Vec x0 = ald::Vec::Zero(n);
  const double T = cfg.get_double("run.T", 20.0);
  const double tol = cfg.get_double("run.tol", 1e-10);
  const int outputs = cfg.get_int("run.outputs", 200);

  const std::string kind = cfg.get_string("run.trajectory", "lorentz");
  ald::Trajectory traj;
  if (kind == "lorentz") {
    traj = ald::integrate_lorentz(metric, field.faraday, x0, y0, T, tol, outputs);
  } else if (kind == "tilde") {
    traj = ald::integrate_autoparallel(ald::tilde_field(metric, field.faraday), metric, x0,
                                       y0, T, tol, outputs);
  } else if (kind == "averaged") {
    // frozen moments of the configured distribution
    ald::Config frozen = cfg;
    frozen.set("run.mode", "frozen");
    frozen.set("run.T", "0.0001");
    frozen.set("run.outputs", "1");
    throw ald::ConfigError(
        "run.trajectory = averaged: use `compare` for the averaged dynamics");
  } else {
    throw ald::ConfigError("run.trajectory must be lorentz or tilde");
  }

  const fs::path dir = ensure_output_dir(cfg);
  std::ostringstream os;
  ald::write_trajectory_csv(os, traj, metric);
  write_file(dir / "trajectory.csv", os.str());
  std::cout << "wrote " << (dir / "trajectory.csv").string() << "  (" << traj.steps
            << " steps, " << traj.rejected << " rejected, drift " << traj.step_drift
            << ")\n";
  return 0;
}

int cmd_compare(const ald::Config& cfg) {
  const ald::ComparisonReport rep = ald::run_comparison(cfg);
  const fs::path dir = ensure_output_dir(cfg);
  write_file(dir / "report.json", ald::report_json(rep));
  {
    std::ostringstream os;
    ald::write_series_csv(os, rep);
    write_file(dir / "series.csv", os.str());
  }
  {
    std::ostringstream os;
    ald::write_ensemble_csv(os, rep);
    write_file(dir / "ensemble.csv", os.str());
  }
  std::cout << "wrote " << (dir / "report.json").string() << "\n"
            << "  alpha " << rep.alpha << ", E " << rep.energy << ", |F| " << rep.norm_F
            << "\n"
            << "  position: " << (rep.pass_position ? "within bound" : "EXCEEDS bound")
            << " (multiplier " << rep.multiplier_position << ")\n"
            << "  velocity: " << (rep.pass_velocity ? "within bound" : "EXCEEDS bound")
            << " (multiplier " << rep.multiplier_velocity << ")\n";
  return rep.pass ? 0 : 1;
}

int cmd_scaling(const ald::Config& cfg) {
  const ald::ScalingStudy study = ald::scaling_study(cfg);
  const fs::path dir = ensure_output_dir(cfg);
  {
    std::ostringstream os;
    ald::write_scaling_csv(os, study);
    write_file(dir / "scaling_table.csv", os.str());
  }
  write_file(dir / "scaling_fits.json", ald::scaling_json(study));
  std::cout << "wrote " << (dir / "scaling_table.csv").string() << "\n"
            << "  alpha exponent (pos) " << study.alpha_fit_x.exponent << " +- "
            << study.alpha_fit_x.stderr_ << "\n"
            << "  energy exponent (pos) " << study.energy_fit_x.exponent << " +- "
            << study.energy_fit_x.stderr_ << "\n"
            << "  t exponent (pos, early) " << study.t_fit_x.exponent << " +- "
            << study.t_fit_x.stderr_ << "\n"
            << "  t exponent (vel, early) " << study.t_fit_v.exponent << " +- "
            << study.t_fit_v.stderr_ << "\n"
            << "  bounds: position " << (study.all_pass_x ? "hold" : "VIOLATED")
            << ", velocity " << (study.all_pass_v ? "hold" : "VIOLATED") << "\n";
  return (study.all_pass_x && study.all_pass_v) ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"averaged Lorentz-force dynamics: simulation and verification"};
  app.require_subcommand(1);

  std::string config_path, output_dir;

  auto* simulate = app.add_subcommand("simulate", "integrate one trajectory to CSV");
  simulate->add_option("-c,--config", config_path, "config file");
  simulate->add_option("-o,--output-dir", output_dir, "output directory");

  auto* compare =
      app.add_subcommand("compare", "Lorentz vs averaged dynamics: JSON report + CSV");
  compare->add_option("-c,--config", config_path, "config file");
  compare->add_option("-o,--output-dir", output_dir, "output directory");

  auto* scaling = app.add_subcommand("scaling", "grid study with fitted exponents");
  scaling->add_option("-c,--config", config_path, "config file");
  scaling->add_option("-o,--output-dir", output_dir, "output directory");

  auto* check = app.add_subcommand("check", "run the invariant suite over the presets");

  CLI11_PARSE(app, argc, argv);

  try {
    if (app.got_subcommand(check)) {
      const int failures = ald::run_check_suite(std::cout);
      std::cout << (failures == 0 ? "all checks passed\n"
                                  : std::to_string(failures) + " check(s) failed\n");
      return failures == 0 ? 0 : 1;
    }
    const ald::Config cfg = load_config(config_path, output_dir);
    if (app.got_subcommand(simulate)) return cmd_simulate(cfg);
    if (app.got_subcommand(compare)) return cmd_compare(cfg);
    if (app.got_subcommand(scaling)) return cmd_scaling(cfg);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
