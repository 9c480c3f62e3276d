#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "specshift/estimator.hpp"
#include "specshift/filters.hpp"
#include "specshift/mercer.hpp"
#include "specshift/shift.hpp"

namespace specshift {

enum class Schedule { thm1, thm2, manual };

std::string schedule_name(Schedule s);

/// lambda = n^{-s} exponent for the importance-weighted estimator:
///
///   s = (2r + 1/beta + (alpha0+eps-1/beta)/p)^{-1}            if 2r > alpha0
///   s = (alpha0 + eps + 1/beta + (alpha0+eps-1/beta)/p)^{-1}  otherwise
///
/// p = inf drops the /p term. In the first case eps must lie in
/// (0, 2r - alpha0); otherwise any eps > 0.
struct SchedulePick {
  double s = 0.0;
  std::string branch;  // "well-specified-branch" or "misspecified-branch"
};

SchedulePick lambda_schedule_thm1(double r, double beta, double alpha0,
                                  double p, double eps);

/// Truncated-estimator schedule: nu = 1/(p(m-1)+1), D = n^nu and
///
///   s = (1-nu)/(2r + 1/beta)      if 2r > 1
///   s = (1-nu)/(1 + eps + 1/beta) otherwise.
struct Thm2Pick {
  double nu = 0.0;
  double s = 0.0;
  std::string branch;
};

Thm2Pick lambda_schedule_thm2(double r, double beta, double p, int m,
                              double eps);

/// Constants entering the sample-size thresholds, estimated from the
/// model (embedding norm, effective-dimension constant) and the moment
/// fit.
struct AdvisoryConstants {
  double M_alpha = 1.0;
  double C_N = 1.0;
  double L = 1.0;
  double sigma = 1.0;
  double kappa = 1.0;
};

/// Evaluates the max-expression threshold of the importance-weighting
/// sample-size condition. Advisory only: sweeps run regardless and tag runs
/// below threshold. Non-positive exponent denominators give +inf.
double min_sample_advisory_thm1(double s, double alpha0, double eps,
                                double beta, double p, double delta,
                                const AdvisoryConstants& k);

/// Same for the truncated-estimator condition.
double min_sample_advisory_thm2(double s, double nu, double beta, double p,
                                int m, double delta,
                                const AdvisoryConstants& k);

/// One convergence sweep: which scenario/kernel/filter/source, the lambda
/// schedule, the n grid and trial count, and the master seed everything is
/// derived from.
struct ExperimentPlan {
  ShiftScenario scenario = ShiftScenario::none();
  KernelSpec kernel = KernelSpec::make(2.0);
  FilterSpec filter = FilterSpec::ridge();
  SourceCondition source;
  double p = std::numeric_limits<double>::infinity();
  std::vector<double> gamma_list{0.0};
  std::vector<int> n_grid{128, 256, 512};
  int trials = 1;
  Schedule schedule = Schedule::thm1;
  double eps = -1.0;      // < 0 selects the documented default policy
  int m = 3;              // thm2 only
  double manual_s = 0.5;  // manual schedule only
  std::uint64_t master_seed = 1;
  double noise_bound = 0.2;
  int workers = 0;  // 0 = available parallelism
};

/// Resolved schedule parameters of a validated plan.
struct ResolvedSchedule {
  double s = 0.0;
  double nu = 0.0;  // 0 when no truncation
  double eps = 0.0;
  std::string branch;
};

/// Validates the plan (gamma range, grid monotonicity, schedule
/// preconditions, eigen-path size cap) and resolves s, nu and the eps
/// default policy. Throws std::invalid_argument on violations.
ResolvedSchedule resolve_plan(const ExperimentPlan& plan);

struct RunRow {
  std::string scenario;
  std::string filter;
  std::string schedule;
  double r = 0.0;
  double beta = 0.0;
  double p = 0.0;
  int m = 0;
  double eps = 0.0;
  double gamma = 0.0;
  int n = 0;
  int trial = 0;
  double lambda = 0.0;
  double trunc_level = 0.0;  // D; inf when truncation is off
  double error = 0.0;        // nan on a failed fit
  double spectrum_max = 0.0;
  bool clip_flag = false;
  std::uint64_t seed = 0;
};

struct RunTable {
  std::vector<RunRow> rows;
};

/// Runs the sweep. Cells (n, trial) are independent and scheduled over a
/// small worker pool; each cell derives its generator from
/// (master_seed, n, trial) and results merge in deterministic order, so
/// reruns are byte-identical. Individual fit failures become nan rows and
/// never abort the sweep.
RunTable run_convergence(const ExperimentPlan& plan);

/// Least-squares fit of log(median error) against log n.
struct RateFit {
  double slope = 0.0;
  double intercept = 0.0;
  double stderr_slope = 0.0;
  double theoretical = 0.0;  // -s(r - gamma/2)
  int n_used = 0;
  int n_dropped = 0;
  double advisory_n_min = 0.0;
};

/// Medians per n over successful trials at the given gamma, then a log-log
/// least-squares line. Smallest n values are dropped only when the advisory
/// threshold is finite, lands inside the grid, and at least three points
/// remain. Requires >= 3 distinct usable n.
RateFit fit_rate(const RunTable& table, double gamma, double s, double r,
                 double advisory_n_min = 0.0);

/// Run-table CSV, columns exactly:
/// scenario,filter,schedule,r,beta,p,m,eps,gamma,n,trial,lambda,D,error,
/// spectrum_max,clip_flag,seed
void write_run_table_csv(std::ostream& os, const RunTable& table);
RunTable read_run_table_csv(std::istream& is);

/// Rate-report CSV, columns exactly:
/// gamma,slope,stderr,theoretical,abs_gap,n_dropped
void write_rate_report_csv(std::ostream& os,
                           const std::vector<std::pair<double, RateFit>>& fits);

}  // namespace specshift
