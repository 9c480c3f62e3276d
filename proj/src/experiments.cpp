#include "specshift/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "specshift/csv.hpp"
#include "specshift/rng.hpp"

namespace specshift {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

bool is_inf(double p) { return !std::isfinite(p); }

}  // namespace

std::string schedule_name(Schedule s) {
  switch (s) {
    case Schedule::thm1: return "thm1";
    case Schedule::thm2: return "thm2";
    case Schedule::manual: return "manual";
  }
  return "?";
}

SchedulePick lambda_schedule_thm1(double r, double beta, double alpha0,
                                  double p, double eps) {
  if (!(beta > 1.0)) throw std::invalid_argument("thm1: beta must exceed 1");
  if (!(alpha0 >= 1.0 / beta && alpha0 < 1.0)) {
    throw std::invalid_argument("thm1: alpha0 must lie in [1/beta, 1)");
  }
  if (!(r > 0.0)) throw std::invalid_argument("thm1: r must be > 0");
  if (!(p >= 1.0)) throw std::invalid_argument("thm1: p must be >= 1");
  const double inv_p = is_inf(p) ? 0.0 : 1.0 / p;

  SchedulePick pick;
  if (2.0 * r > alpha0) {
    if (!(eps > 0.0 && eps < 2.0 * r - alpha0)) {
      std::ostringstream msg;
      msg << "thm1: with 2r > alpha0, eps must lie in (0, " << 2.0 * r - alpha0
          << "); got " << eps;
      throw std::invalid_argument(msg.str());
    }
    pick.s = 1.0 / (2.0 * r + 1.0 / beta + (alpha0 + eps - 1.0 / beta) * inv_p);
    pick.branch = "well-specified-branch";
  } else {
    if (!(eps > 0.0)) {
      throw std::invalid_argument("thm1: eps must be > 0; got nonpositive");
    }
    pick.s = 1.0 / (alpha0 + eps + 1.0 / beta +
                    (alpha0 + eps - 1.0 / beta) * inv_p);
    pick.branch = "misspecified-branch";
  }
  return pick;
}

Thm2Pick lambda_schedule_thm2(double r, double beta, double p, int m,
                              double eps) {
  if (!(beta > 1.0)) throw std::invalid_argument("thm2: beta must exceed 1");
  if (!(r > 0.0)) throw std::invalid_argument("thm2: r must be > 0");
  Thm2Pick pick;
  pick.nu = nu_exponent(p, m);  // rejects p = inf, m < 2
  if (2.0 * r > 1.0) {
    pick.s = (1.0 - pick.nu) / (2.0 * r + 1.0 / beta);
    pick.branch = "well-specified-branch";
  } else {
    if (!(eps > 0.0)) throw std::invalid_argument("thm2: eps must be > 0");
    pick.s = (1.0 - pick.nu) / (1.0 + eps + 1.0 / beta);
    pick.branch = "misspecified-branch";
  }
  return pick;
}

namespace {

// base^(1/denom), +inf when the exponent denominator is not positive.
double threshold(double base, double denom) {
  if (!(denom > 0.0)) return kInf;
  return std::pow(base, 1.0 / denom);
}

}  // namespace

double min_sample_advisory_thm1(double s, double alpha0, double eps,
                                double beta, double p, double delta,
                                const AdvisoryConstants& k) {
  const double alpha = alpha0 + 0.5 * eps;
  const double inv_p = is_inf(p) ? 0.0 : 1.0 / p;
  const double log_term = std::log(6.0 / delta);
  const double n1 =
      threshold(16.0 * k.L * k.M_alpha * k.M_alpha * log_term,
                1.0 - s * alpha);
  const double n2 = threshold(
      16.0 * k.sigma * std::pow(k.M_alpha, 1.0 + inv_p) * k.C_N * log_term,
      0.5 * (1.0 - s * (alpha + 1.0 / beta + (alpha - 1.0 / beta) * inv_p)));
  return std::max(n1, n2);
}

double min_sample_advisory_thm2(double s, double nu, double beta, double p,
                                int m, double delta,
                                const AdvisoryConstants& k) {
  double mfact = 1.0;
  for (int i = 2; i <= m; ++i) mfact *= i;
  const double log_term = std::log(6.0 / delta);
  const double moment = 0.5 * mfact * std::pow(k.L, m - 2) * k.sigma * k.sigma;
  const double n1 = threshold(
      2.0 * k.kappa * std::sqrt(k.C_N) * std::pow(moment, 0.5 * p),
      0.5 * (p * (m - 1) * nu - (1.0 + 1.0 / beta) * s));
  const double n2 =
      threshold(32.0 * k.kappa * k.kappa * log_term, 1.0 - nu - s);
  const double n3 = threshold(
      16.0 * std::sqrt(2.0) * k.kappa * std::sqrt(k.C_N) * log_term,
      0.5 * (1.0 - nu - (1.0 + 1.0 / beta) * s));
  return std::max({n1, n2, n3});
}

ResolvedSchedule resolve_plan(const ExperimentPlan& plan) {
  if (plan.n_grid.empty()) {
    throw std::invalid_argument("plan: n_grid is empty");
  }
  for (std::size_t i = 0; i + 1 < plan.n_grid.size(); ++i) {
    if (plan.n_grid[i] >= plan.n_grid[i + 1]) {
      throw std::invalid_argument("plan: n_grid must be strictly increasing");
    }
  }
  if (plan.n_grid.front() < 1) {
    throw std::invalid_argument("plan: n values must be positive");
  }
  if (plan.trials < 1) throw std::invalid_argument("plan: trials must be >= 1");
  const double gamma_cap = std::min(2.0 * plan.source.r, 1.0);
  for (double g : plan.gamma_list) {
    if (!(g >= 0.0 && g <= gamma_cap)) {
      std::ostringstream msg;
      msg << "plan: gamma=" << g << " outside [0, min{2r,1}] = [0, "
          << gamma_cap << "]";
      throw std::invalid_argument(msg.str());
    }
  }
  if (plan.scenario.kind() == ShiftKind::log_tail &&
      plan.p != plan.scenario.p()) {
    throw std::invalid_argument("plan: p must match the log_tail scenario's p");
  }
  if (plan.filter.kind != FilterKind::ridge && plan.n_grid.back() > 2048) {
    throw std::invalid_argument(
        "plan: the eigendecomposition path caps n at 2048; use ridge for "
        "larger sweeps");
  }
  if (!(plan.source.r <= plan.filter.tau)) {
    throw std::invalid_argument(
        "plan: source smoothness r exceeds the filter qualification tau");
  }

  ResolvedSchedule out;
  const double alpha0 = 1.0 / plan.kernel.beta;  // bounded eigenfunctions
  switch (plan.schedule) {
    case Schedule::thm1: {
      double eps = plan.eps;
      if (eps < 0.0) {
        eps = (2.0 * plan.source.r > alpha0)
                  ? std::min(0.3, 0.5 * (2.0 * plan.source.r - alpha0))
                  : 0.1;
      }
      const auto pick = lambda_schedule_thm1(plan.source.r, plan.kernel.beta,
                                             alpha0, plan.p, eps);
      out.s = pick.s;
      out.eps = eps;
      out.branch = pick.branch;
      break;
    }
    case Schedule::thm2: {
      const double eps = plan.eps < 0.0 ? 0.1 : plan.eps;
      const auto pick = lambda_schedule_thm2(plan.source.r, plan.kernel.beta,
                                             plan.p, plan.m, eps);
      out.s = pick.s;
      out.nu = pick.nu;
      out.eps = eps;
      out.branch = pick.branch;
      break;
    }
    case Schedule::manual: {
      if (!(plan.manual_s > 0.0 && plan.manual_s < 1.0)) {
        throw std::invalid_argument("plan: manual s must lie in (0,1)");
      }
      out.s = plan.manual_s;
      out.eps = std::max(plan.eps, 0.0);
      out.branch = "manual";
      break;
    }
  }
  if (!(out.s > 0.0 && out.s < 1.0)) {
    throw std::invalid_argument("plan: resolved schedule exponent s not in (0,1)");
  }
  return out;
}

RunTable run_convergence(const ExperimentPlan& plan) {
  const ResolvedSchedule sched = resolve_plan(plan);
  const SourceFunction src = make_source_function(plan.kernel, plan.source);
  const bool truncated = plan.schedule == Schedule::thm2;
  const SolvePath path = plan.filter.kind == FilterKind::ridge
                             ? SolvePath::ridge_direct
                             : SolvePath::eigen;

  struct Cell {
    int n = 0;
    int trial = 0;
  };
  std::vector<Cell> cells;
  for (int n : plan.n_grid) {
    for (int trial = 0; trial < plan.trials; ++trial) {
      cells.push_back({n, trial});
    }
  }
  std::vector<std::vector<RunRow>> results(cells.size());

  auto run_cell = [&](const Cell& cell) {
    const std::uint64_t seed = derive_seed(
        plan.master_seed, static_cast<std::uint64_t>(cell.n),
        static_cast<std::uint64_t>(cell.trial));
    Rng rng(seed);
    const double lambda = std::pow(static_cast<double>(cell.n), -sched.s);

    RunRow base;
    base.scenario = shift_name(plan.scenario.kind());
    base.filter = filter_name(plan.filter.kind);
    base.schedule = schedule_name(plan.schedule);
    base.r = plan.source.r;
    base.beta = plan.kernel.beta;
    base.p = plan.p;
    base.m = truncated ? plan.m : 0;
    base.eps = sched.eps;
    base.n = cell.n;
    base.trial = cell.trial;
    base.lambda = lambda;
    base.trunc_level = kInf;
    base.seed = seed;

    std::vector<RunRow> rows;
    try {
      const Dataset ds = generate_dataset(plan.scenario, src.f, plan.kernel,
                                          cell.n, plan.noise_bound, rng);
      SpectralEstimate est;
      if (truncated) {
        const TruncationRule rule{plan.m, sched.nu};
        est = fit_truncated(ds, plan.kernel, plan.filter, lambda, rule, path);
        base.trunc_level = est.meta.trunc_level;
      } else {
        est = fit(ds, plan.kernel, plan.filter, lambda, path);
      }
      base.spectrum_max = est.meta.spectrum_max;
      base.clip_flag = est.meta.clip_flag;
      for (double gamma : plan.gamma_list) {
        RunRow row = base;
        row.gamma = gamma;
        row.error = error_norm(est, src.f, plan.kernel, gamma);
        rows.push_back(row);
      }
    } catch (const std::exception&) {
      // Record the failure, keep the sweep alive.
      for (double gamma : plan.gamma_list) {
        RunRow row = base;
        row.gamma = gamma;
        row.error = std::numeric_limits<double>::quiet_NaN();
        rows.push_back(row);
      }
    }
    return rows;
  };

  int workers = plan.workers;
  if (workers <= 0) {
    workers = static_cast<int>(std::thread::hardware_concurrency());
    if (workers <= 0) workers = 1;
  }
  workers = std::min<int>(workers, static_cast<int>(cells.size()));

  if (workers <= 1) {
    for (std::size_t i = 0; i < cells.size(); ++i) results[i] = run_cell(cells[i]);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (int w = 0; w < workers; ++w) {
      pool.emplace_back([&]() {
        while (true) {
          const std::size_t i = next.fetch_add(1);
          if (i >= cells.size()) break;
          results[i] = run_cell(cells[i]);
        }
      });
    }
    for (auto& th : pool) th.join();
  }

  RunTable table;
  for (auto& rows : results) {
    for (auto& row : rows) table.rows.push_back(std::move(row));
  }
  return table;
}

RateFit fit_rate(const RunTable& table, double gamma, double s, double r,
                 double advisory_n_min) {
  // Median error per n over successful trials at this gamma.
  std::vector<std::pair<int, double>> medians;
  std::vector<int> ns;
  for (const auto& row : table.rows) {
    if (row.gamma == gamma && std::isfinite(row.error)) {
      if (std::find(ns.begin(), ns.end(), row.n) == ns.end()) ns.push_back(row.n);
    }
  }
  std::sort(ns.begin(), ns.end());
  for (int n : ns) {
    std::vector<double> errs;
    for (const auto& row : table.rows) {
      if (row.n == n && row.gamma == gamma && std::isfinite(row.error)) {
        errs.push_back(row.error);
      }
    }
    std::sort(errs.begin(), errs.end());
    const std::size_t k = errs.size();
    const double med =
        k % 2 == 1 ? errs[k / 2] : 0.5 * (errs[k / 2 - 1] + errs[k / 2]);
    medians.emplace_back(n, med);
  }

  RateFit fit;
  fit.advisory_n_min = advisory_n_min;
  fit.theoretical = -s * (r - 0.5 * gamma);

  // Burn-in drop: only when the advisory threshold actually lands inside
  // the grid, and never below three points.
  std::size_t drop = 0;
  if (std::isfinite(advisory_n_min) && advisory_n_min > 0.0 &&
      !medians.empty() && advisory_n_min <= medians.back().first) {
    while (medians.size() - drop > 3 && medians[drop].first < advisory_n_min) {
      ++drop;
    }
  }
  fit.n_dropped = static_cast<int>(drop);

  const std::size_t k = medians.size() - drop;
  if (k < 3) {
    throw std::invalid_argument(
        "fit_rate: need at least 3 distinct n values with successful trials");
  }
  double sx = 0.0, sy = 0.0;
  for (std::size_t i = drop; i < medians.size(); ++i) {
    sx += std::log(static_cast<double>(medians[i].first));
    sy += std::log(medians[i].second);
  }
  const double mx = sx / k, my = sy / k;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = drop; i < medians.size(); ++i) {
    const double dx = std::log(static_cast<double>(medians[i].first)) - mx;
    const double dy = std::log(medians[i].second) - my;
    sxx += dx * dx;
    sxy += dx * dy;
  }
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  double rss = 0.0;
  for (std::size_t i = drop; i < medians.size(); ++i) {
    const double x = std::log(static_cast<double>(medians[i].first));
    const double pred = fit.intercept + fit.slope * x;
    const double res = std::log(medians[i].second) - pred;
    rss += res * res;
  }
  fit.stderr_slope =
      k > 2 ? std::sqrt(rss / (k - 2) / sxx) : 0.0;
  fit.n_used = static_cast<int>(k);
  return fit;
}

void write_run_table_csv(std::ostream& os, const RunTable& table) {
  os << "scenario,filter,schedule,r,beta,p,m,eps,gamma,n,trial,lambda,D,"
        "error,spectrum_max,clip_flag,seed\n";
  for (const auto& row : table.rows) {
    os << row.scenario << ',' << row.filter << ',' << row.schedule << ','
       << fmt_double(row.r) << ',' << fmt_double(row.beta) << ','
       << fmt_double(row.p) << ',' << row.m << ',' << fmt_double(row.eps)
       << ',' << fmt_double(row.gamma) << ',' << row.n << ',' << row.trial
       << ',' << fmt_double(row.lambda) << ',' << fmt_double(row.trunc_level)
       << ',' << fmt_double(row.error) << ',' << fmt_double(row.spectrum_max)
       << ',' << (row.clip_flag ? 1 : 0) << ',' << row.seed << '\n';
  }
}

RunTable read_run_table_csv(std::istream& is) {
  RunTable table;
  std::string line;
  if (!std::getline(is, line)) {
    throw std::runtime_error("run table: empty stream");
  }
  const std::string expected =
      "scenario,filter,schedule,r,beta,p,m,eps,gamma,n,trial,lambda,D,"
      "error,spectrum_max,clip_flag,seed";
  if (line != expected) {
    throw std::runtime_error("run table: unexpected header: " + line);
  }
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::vector<std::string> parts;
    std::string field;
    std::istringstream ss(line);
    while (std::getline(ss, field, ',')) parts.push_back(field);
    if (parts.size() != 17) {
      throw std::runtime_error("run table: malformed row: " + line);
    }
    RunRow row;
    row.scenario = parts[0];
    row.filter = parts[1];
    row.schedule = parts[2];
    row.r = std::stod(parts[3]);
    row.beta = std::stod(parts[4]);
    row.p = std::stod(parts[5]);
    row.m = std::stoi(parts[6]);
    row.eps = std::stod(parts[7]);
    row.gamma = std::stod(parts[8]);
    row.n = std::stoi(parts[9]);
    row.trial = std::stoi(parts[10]);
    row.lambda = std::stod(parts[11]);
    row.trunc_level = std::stod(parts[12]);
    row.error = std::stod(parts[13]);
    row.spectrum_max = std::stod(parts[14]);
    row.clip_flag = parts[15] == "1";
    row.seed = std::stoull(parts[16]);
    table.rows.push_back(std::move(row));
  }
  return table;
}

void write_rate_report_csv(
    std::ostream& os, const std::vector<std::pair<double, RateFit>>& fits) {
  os << "gamma,slope,stderr,theoretical,abs_gap,n_dropped\n";
  for (const auto& [gamma, fit] : fits) {
    os << fmt_double(gamma) << ',' << fmt_double(fit.slope) << ','
       << fmt_double(fit.stderr_slope) << ',' << fmt_double(fit.theoretical)
       << ',' << fmt_double(std::abs(fit.slope - fit.theoretical)) << ','
       << fit.n_dropped << '\n';
  }
}

}  // namespace specshift
