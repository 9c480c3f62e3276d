#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "specshift/experiments.hpp"

namespace specshift {

/// Every knob of the CLI, parsed from a sectioned key=value file and
/// overridable by flags. Unknown sections or keys are hard errors; the
/// fully resolved config is echoed into the output directory so a run is
/// reproducible from its artifacts alone. Negative sentinel values mean
/// "auto" (documented per field).
struct RunConfig {
  // [kernel]
  double kernel_beta = 2.0;
  int kernel_j_max = 4096;

  // [source]
  double source_r = 0.5;
  double source_eps_u = 0.05;
  double source_scale = 1.0;

  // [scenario]
  std::string scenario_kind = "bounded_linear";
  double scenario_p = std::numeric_limits<double>::infinity();

  // [filter]
  std::string filter_kind = "ridge";
  double filter_tau = 2.0;  // qualification for gradient_flow / spectral_cutoff

  // [sweep]
  std::string sweep_schedule = "thm1";
  double sweep_eps = -1.0;  // auto: documented default policy
  int sweep_m = 3;
  double sweep_manual_s = 0.5;
  std::vector<int> sweep_n_grid{128, 256, 512, 1024, 2048, 4096};
  std::vector<double> sweep_gamma_list{0.0};
  int sweep_trials = 20;
  double sweep_noise_bound = 0.2;
  std::uint64_t sweep_master_seed = 20260809;
  int sweep_workers = 0;  // 0 = available parallelism

  // [fit]
  int fit_n = 256;
  double fit_lambda = -1.0;  // auto: n^{-s} from the schedule
  int fit_grid_points = 257;

  // [filtercheck]
  int fc_lambda_count = 25;
  double fc_lambda_min = 1e-4;
  double fc_lambda_max = 1.0;
  int fc_t_count = 1000;
  double fc_theta_step = 0.25;
  double fc_force_E = -1.0;  // probe override; negative = use filter constants
  double fc_force_F = -1.0;

  // [moments]
  int moments_m_max = 8;
  double moments_L = -1.0;      // auto: grid fit
  double moments_sigma = -1.0;  // auto: grid fit
  bool moments_expect_fail = false;

  // [report]
  double report_tolerance = 0.10;
  double report_delta = 0.5;  // delta entering the advisory thresholds

  // [output]
  std::string out_dir;  // default: $SPECSHIFT_OUT or "out"

  RunConfig();

  /// Applies "section.key=value".
  void set(const std::string& dotted_key, const std::string& value);

  /// Parses a config file into this object. Throws on unknown keys,
  /// malformed lines, or unreadable files.
  void load_file(const std::string& path);

  /// Writes the fully resolved config, canonical order, parseable by
  /// load_file.
  void echo(std::ostream& os) const;

  /// Materializes the experiment plan (constructs scenario, kernel, filter,
  /// source; validation happens inside those constructors and in
  /// resolve_plan).
  ExperimentPlan build_plan() const;

  ShiftScenario build_scenario() const;
  KernelSpec build_kernel() const;
  FilterSpec build_filter() const;
};

}  // namespace specshift
