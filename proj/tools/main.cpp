// specshift: importance-weighted and truncated spectral algorithms for
// kernel regression under covariate shift, on synthetic Mercer kernels.
//
// Subcommands: verify-filters, check-moments, fit, convergence, report.
// Exit codes: 0 success, 1 assertion/criterion failure, 2 usage/config error.

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "specshift/config.hpp"
#include "specshift/csv.hpp"
#include "specshift/estimator.hpp"
#include "specshift/experiments.hpp"
#include "specshift/filters.hpp"
#include "specshift/rng.hpp"
#include "specshift/shift.hpp"

namespace fs = std::filesystem;
using namespace specshift;

namespace {

struct CommonFlags {
  std::string config_path;
  std::string out_dir;
  std::optional<std::uint64_t> seed;
  std::optional<int> workers;
  std::optional<double> tolerance;
  std::vector<std::string> sets;
};

void add_common(CLI::App* cmd, CommonFlags& flags) {
  cmd->add_option("--config", flags.config_path, "config file (key=value sections)");
  cmd->add_option("--out", flags.out_dir, "output directory");
  cmd->add_option("--seed", flags.seed, "master seed override");
  cmd->add_option("--workers", flags.workers, "worker pool size (0 = auto)");
  cmd->add_option("--tolerance", flags.tolerance, "report tolerance override");
  cmd->add_option("--set", flags.sets, "section.key=value override (repeatable)");
}

RunConfig resolve_config(const CommonFlags& flags) {
  RunConfig cfg;
  if (!flags.config_path.empty()) cfg.load_file(flags.config_path);
  for (const auto& kv : flags.sets) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) {
      throw std::invalid_argument("--set expects section.key=value, got: " + kv);
    }
    cfg.set(kv.substr(0, eq), kv.substr(eq + 1));
  }
  if (!flags.out_dir.empty()) cfg.out_dir = flags.out_dir;
  if (flags.seed) cfg.sweep_master_seed = *flags.seed;
  if (flags.workers) cfg.sweep_workers = *flags.workers;
  if (flags.tolerance) cfg.report_tolerance = *flags.tolerance;
  return cfg;
}

void echo_config(const RunConfig& cfg) {
  fs::create_directories(cfg.out_dir);
  std::ofstream os(fs::path(cfg.out_dir) / "config_echo.cfg");
  cfg.echo(os);
}

std::vector<double> log_spaced(double lo, double hi, int count) {
  std::vector<double> grid(count);
  for (int i = 0; i < count; ++i) {
    grid[i] = count == 1 ? lo
                         : lo * std::pow(hi / lo, double(i) / (count - 1));
  }
  return grid;
}

std::vector<double> linear_spaced(double lo, double hi, int count) {
  std::vector<double> grid(count);
  for (int i = 0; i < count; ++i) {
    grid[i] = count == 1 ? lo : lo + (hi - lo) * double(i) / (count - 1);
  }
  return grid;
}

std::vector<double> theta_grid(double step, double cap) {
  std::vector<double> grid;
  for (double th = 0.0; th <= cap + 1e-12; th += step) grid.push_back(th);
  return grid;
}

// ---------------------------------------------------------------------------

int cmd_verify_filters(const RunConfig& cfg) {
  echo_config(cfg);
  const KernelSpec kernel = cfg.build_kernel();
  const auto lambdas =
      log_spaced(cfg.fc_lambda_min, cfg.fc_lambda_max, cfg.fc_lambda_count);
  const auto ts = linear_spaced(0.0, kernel.kappa2, cfg.fc_t_count);

  std::vector<FilterSpec> filters = {FilterSpec::ridge(),
                                     FilterSpec::gradient_flow(cfg.filter_tau),
                                     FilterSpec::spectral_cutoff(cfg.filter_tau)};
  bool all_pass = true;
  std::ofstream os(fs::path(cfg.out_dir) / "filter_report.csv");
  os << "filter,theta,lambda,worst_t,ratio,bound,pass\n";
  for (auto filt : filters) {
    if (cfg.fc_force_E >= 0.0) filt.E = cfg.fc_force_E;
    if (cfg.fc_force_F >= 0.0) filt.F = cfg.fc_force_F;
    const auto phi_thetas = theta_grid(cfg.fc_theta_step, 1.0);
    const auto psi_thetas = theta_grid(cfg.fc_theta_step, filt.tau);
    const auto report = verify_filter_inequalities(filt, kernel.kappa2, lambdas,
                                                   ts, phi_thetas, psi_thetas);
    for (const auto& row : report.rows) {
      os << row.filter << (row.eq == 's' ? ":g" : ":res") << ','
         << fmt_double(row.theta) << ',' << fmt_double(row.lambda) << ','
         << fmt_double(row.worst_t) << ',' << fmt_double(row.ratio) << ','
         << fmt_double(row.bound) << ',' << (row.pass ? 1 : 0) << '\n';
    }
    all_pass = all_pass && report.all_pass;
  }
  std::cout << (all_pass ? "filter inequalities: all pass\n"
                         : "filter inequalities: VIOLATIONS (see report)\n");
  return all_pass ? 0 : 1;
}

int cmd_check_moments(const RunConfig& cfg) {
  echo_config(cfg);
  const ShiftScenario scn = cfg.build_scenario();
  double L = cfg.moments_L, sigma = cfg.moments_sigma;
  std::string source = "explicit";
  if (L < 0.0 || sigma < 0.0) {
    const auto fitted = fit_moment_constants(scn, cfg.scenario_p, cfg.moments_m_max);
    if (L < 0.0) L = fitted.first;
    if (sigma < 0.0) sigma = fitted.second;
    source = "grid-fit";
  }
  const auto report = moment_check(scn, cfg.scenario_p, cfg.moments_m_max, L, sigma);

  std::ofstream os(fs::path(cfg.out_dir) / "moment_report.csv");
  os << "scenario,p,m,lhs,rhs,margin,pass\n";
  for (const auto& row : report.rows) {
    os << row.scenario << ',' << fmt_double(row.p) << ',' << row.m << ','
       << fmt_double(row.lhs) << ',' << fmt_double(row.rhs) << ','
       << fmt_double(row.margin) << ',' << (row.pass ? 1 : 0) << '\n';
  }
  std::ofstream meta(fs::path(cfg.out_dir) / "moment_constants.txt");
  meta << "L = " << fmt_double(L) << "\nsigma = " << fmt_double(sigma)
       << "\nsource = " << source << "\n";
  if (!report.all_conclusive) {
    std::cout << "moment check: quadrature inconclusive\n";
    return 1;
  }
  const bool ok = report.all_pass || cfg.moments_expect_fail;
  std::cout << "moment check: " << (report.all_pass ? "all pass" : "failures")
            << " (L=" << L << ", sigma=" << sigma << ", " << source << ")\n";
  return ok ? 0 : 1;
}

int cmd_fit(const RunConfig& cfg) {
  echo_config(cfg);
  const KernelSpec kernel = cfg.build_kernel();
  const ShiftScenario scn = cfg.build_scenario();
  const FilterSpec filt = cfg.build_filter();
  const SourceFunction src = make_source_function(
      kernel, SourceCondition{cfg.source_r, cfg.source_eps_u, cfg.source_scale});

  ExperimentPlan plan = cfg.build_plan();
  plan.n_grid = {cfg.fit_n};
  const ResolvedSchedule sched = resolve_plan(plan);
  const double lambda = cfg.fit_lambda > 0.0
                            ? cfg.fit_lambda
                            : std::pow(double(cfg.fit_n), -sched.s);

  Rng rng(derive_seed(cfg.sweep_master_seed, cfg.fit_n, 0));
  const Dataset ds = generate_dataset(scn, src.f, kernel, cfg.fit_n,
                                      cfg.sweep_noise_bound, rng);
  const SolvePath path = filt.kind == FilterKind::ridge ? SolvePath::ridge_direct
                                                        : SolvePath::eigen;
  SpectralEstimate est;
  if (plan.schedule == Schedule::thm2) {
    est = fit_truncated(ds, kernel, filt, lambda,
                        TruncationRule{cfg.sweep_m, sched.nu}, path);
  } else {
    est = fit(ds, kernel, filt, lambda, path);
  }

  const auto grid = linear_spaced(0.0, 1.0, cfg.fit_grid_points);
  const auto preds = predict_many(est, kernel, grid);
  std::ofstream os(fs::path(cfg.out_dir) / "predictions.csv");
  os << "x,f_hat,f_rho\n";
  for (std::size_t i = 0; i < grid.size(); ++i) {
    os << fmt_double(grid[i]) << ',' << fmt_double(preds[i]) << ','
       << fmt_double(src.f.evaluate(kernel, grid[i])) << '\n';
  }

  std::ofstream meta(fs::path(cfg.out_dir) / "fit_meta.txt");
  meta << "filter = " << filter_name(est.meta.filter) << "\n"
       << "lambda = " << fmt_double(est.meta.lambda) << "\n"
       << "spectrum_max = " << fmt_double(est.meta.spectrum_max) << "\n"
       << "kappa2 = " << fmt_double(kernel.kappa2) << "\n"
       << "clip_flag = " << (est.meta.clip_flag ? 1 : 0) << "\n"
       << "trunc_level = " << fmt_double(est.meta.trunc_level) << "\n"
       << "g_bound = " << fmt_double(src.g_bound) << "\n"
       << "u_norm = " << fmt_double(src.u_norm) << "\n";
  for (double gamma : cfg.sweep_gamma_list) {
    meta << "error_gamma_" << fmt_double(gamma) << " = "
         << fmt_double(error_norm(est, src.f, kernel, gamma)) << "\n";
  }
  std::cout << "fit written to " << cfg.out_dir << "\n";
  return 0;
}

AdvisoryConstants compute_advisory_constants(const ExperimentPlan& plan,
                                             const ResolvedSchedule& sched) {
  AdvisoryConstants k;
  k.kappa = std::sqrt(plan.kernel.kappa2);
  double c_n = 0.0;
  for (double lambda : log_spaced(1e-4, 1e-1, 25)) {
    c_n = std::max(c_n, plan.kernel.effective_dimension(lambda) *
                            std::pow(lambda, 1.0 / plan.kernel.beta));
  }
  k.C_N = c_n;
  const auto consts = tail_fit_constants(plan.scenario);
  k.L = consts.first;
  k.sigma = consts.second;
  if (plan.schedule != Schedule::thm2) {
    const double alpha0 = 1.0 / plan.kernel.beta;
    const double alpha = std::min(alpha0 + 0.5 * sched.eps, 1.0);
    k.M_alpha = plan.kernel.embedding_norm(alpha);
  }
  return k;
}

double compute_advisory(const ExperimentPlan& plan, const ResolvedSchedule& sched,
                        double delta) {
  const AdvisoryConstants k = compute_advisory_constants(plan, sched);
  if (plan.schedule == Schedule::thm2) {
    return min_sample_advisory_thm2(sched.s, sched.nu, plan.kernel.beta, plan.p,
                                    plan.m, delta, k);
  }
  const double alpha0 = 1.0 / plan.kernel.beta;
  return min_sample_advisory_thm1(sched.s, alpha0, sched.eps, plan.kernel.beta,
                                  plan.p, delta, k);
}

int write_report(const RunConfig& cfg, const ExperimentPlan& plan,
                 const ResolvedSchedule& sched, const RunTable& table) {
  const double n_min = compute_advisory(plan, sched, cfg.report_delta);
  std::vector<std::pair<double, RateFit>> fits;
  bool within = true;
  for (double gamma : plan.gamma_list) {
    const RateFit rf = fit_rate(table, gamma, sched.s, plan.source.r, n_min);
    within = within && std::abs(rf.slope - rf.theoretical) <= cfg.report_tolerance;
    fits.emplace_back(gamma, rf);
  }
  std::ofstream os(fs::path(cfg.out_dir) / "rate_report.csv");
  write_rate_report_csv(os, fits);
  for (const auto& [gamma, rf] : fits) {
    std::cout << "gamma=" << gamma << ": slope=" << rf.slope
              << " theoretical=" << rf.theoretical
              << " |gap|=" << std::abs(rf.slope - rf.theoretical)
              << " (stderr=" << rf.stderr_slope << ", n_dropped=" << rf.n_dropped
              << ", advisory n_min=" << rf.advisory_n_min << ")\n";
  }
  return within ? 0 : 1;
}

int cmd_convergence(const RunConfig& cfg) {
  echo_config(cfg);
  const ExperimentPlan plan = cfg.build_plan();
  const ResolvedSchedule sched = resolve_plan(plan);
  const RunTable table = run_convergence(plan);
  {
    std::ofstream os(fs::path(cfg.out_dir) / "runs.csv");
    write_run_table_csv(os, table);
  }
  std::size_t clipped = 0;
  for (const auto& row : table.rows) clipped += row.clip_flag ? 1 : 0;
  std::cout << "sweep complete: " << table.rows.size() << " rows -> "
            << (fs::path(cfg.out_dir) / "runs.csv").string()
            << " (spectrum guard exceedance frequency: "
            << double(clipped) / double(table.rows.size()) << ")\n";
  if (plan.n_grid.size() >= 3) {
    try {
      write_report(cfg, plan, sched, table);  // advisory report; no gate here
    } catch (const std::exception& e) {
      std::cerr << "rate report skipped: " << e.what() << "\n";
    }
  }
  return 0;
}

int cmd_report(const RunConfig& cfg, const std::string& runs_path) {
  echo_config(cfg);
  const ExperimentPlan plan = cfg.build_plan();
  const ResolvedSchedule sched = resolve_plan(plan);
  const fs::path path = runs_path.empty()
                            ? fs::path(cfg.out_dir) / "runs.csv"
                            : fs::path(runs_path);
  std::ifstream is(path);
  if (!is) {
    throw std::invalid_argument("report: cannot read run table " + path.string());
  }
  const RunTable table = read_run_table_csv(is);
  return write_report(cfg, plan, sched, table);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "weighted spectral algorithms for kernel regression under covariate "
      "shift"};
  app.require_subcommand(1);

  CommonFlags f_filters, f_moments, f_fit, f_conv, f_report;
  std::string runs_path;

  CLI::App* c_filters =
      app.add_subcommand("verify-filters", "check the filter inequalities on grids");
  add_common(c_filters, f_filters);
  CLI::App* c_moments =
      app.add_subcommand("check-moments", "validate the density-ratio moment condition");
  add_common(c_moments, f_moments);
  CLI::App* c_fit = app.add_subcommand("fit", "run one fit and emit predictions");
  add_common(c_fit, f_fit);
  CLI::App* c_conv =
      app.add_subcommand("convergence", "run a convergence sweep over n");
  add_common(c_conv, f_conv);
  CLI::App* c_report =
      app.add_subcommand("report", "fit rates from a run table and gate on tolerance");
  add_common(c_report, f_report);
  c_report->add_option("--runs", runs_path, "run table CSV (default: <out>/runs.csv)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    if (c_filters->parsed()) return cmd_verify_filters(resolve_config(f_filters));
    if (c_moments->parsed()) return cmd_check_moments(resolve_config(f_moments));
    if (c_fit->parsed()) return cmd_fit(resolve_config(f_fit));
    if (c_conv->parsed()) return cmd_convergence(resolve_config(f_conv));
    if (c_report->parsed()) return cmd_report(resolve_config(f_report), runs_path);
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}
