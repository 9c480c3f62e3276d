#include <doctest.h>

#include <cmath>
#include <sstream>
#include <stdexcept>

#include "specshift/experiments.hpp"

using namespace specshift;

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

TEST_CASE("thm1 schedule values") {
  // Well-specified branch, p = inf: s = 1/(2r + 1/beta).
  auto pick = lambda_schedule_thm1(0.5, 2.0, 0.5, kInf, 0.3);
  CHECK(pick.s == doctest::Approx(2.0 / 3.0).epsilon(1e-15));
  CHECK(pick.branch == "well-specified-branch");

  // Misspecified branch.
  pick = lambda_schedule_thm1(0.2, 2.0, 0.5, kInf, 0.1);
  CHECK(pick.s == doctest::Approx(10.0 / 11.0).epsilon(1e-12));
  CHECK(pick.branch == "misspecified-branch");

  // Finite p keeps the /p term.
  pick = lambda_schedule_thm1(0.5, 2.0, 0.5, 2.0, 0.3);
  CHECK(pick.s == doctest::Approx(1.0 / 1.65).epsilon(1e-12));

  // eps outside (0, 2r - alpha0) is rejected with the range in the message.
  CHECK_THROWS_WITH_AS(lambda_schedule_thm1(0.5, 2.0, 0.5, kInf, 0.6),
                       doctest::Contains("(0, 0.5)"), std::invalid_argument);
  CHECK_THROWS_AS(lambda_schedule_thm1(0.5, 2.0, 0.5, kInf, 0.0),
                  std::invalid_argument);
  CHECK_THROWS_AS(lambda_schedule_thm1(0.5, 0.9, 0.5, kInf, 0.1),
                  std::invalid_argument);
  CHECK_THROWS_AS(lambda_schedule_thm1(0.5, 2.0, 0.4, kInf, 0.1),
                  std::invalid_argument);
}

TEST_CASE("thm2 schedule values") {
  auto pick = lambda_schedule_thm2(0.75, 2.0, 2.0, 3, 0.1);
  CHECK(pick.nu == doctest::Approx(0.2).epsilon(1e-15));
  CHECK(pick.s == doctest::Approx(0.4).epsilon(1e-15));
  CHECK(pick.branch == "well-specified-branch");

  pick = lambda_schedule_thm2(0.4, 2.0, 2.0, 3, 0.1);
  CHECK(pick.nu == doctest::Approx(0.2).epsilon(1e-15));
  CHECK(pick.s == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(pick.branch == "misspecified-branch");

  // m large: s increases toward 1/(2r + 1/beta) from below.
  double prev = 0.0;
  for (int m = 2; m <= 64; m *= 2) {
    const double s = lambda_schedule_thm2(0.75, 2.0, 2.0, m, 0.1).s;
    CHECK(s > prev);
    CHECK(s < 0.5);
    prev = s;
  }
  CHECK(prev > 0.49);

  CHECK_THROWS_AS(lambda_schedule_thm2(0.75, 2.0, kInf, 3, 0.1),
                  std::invalid_argument);
}

TEST_CASE("theoretical exponent decreases in gamma") {
  const double s = 2.0 / 3.0, r = 0.5;
  double prev = s * r + 1.0;
  for (double gamma : {0.0, 0.25, 0.5, 0.75, 1.0}) {
    const double expo = s * (r - 0.5 * gamma);
    CHECK(expo < prev);
    prev = expo;
  }
}

TEST_CASE("advisory threshold: oracle value and monotonicity") {
  AdvisoryConstants unit;  // all ones
  const double s = 0.05, alpha0 = 0.05, eps = 0.1, beta = 2.0;
  const double got =
      min_sample_advisory_thm1(s, alpha0, eps, beta, kInf, 0.5, unit);
  // Direct formula evaluation, written out independently.
  const double alpha = alpha0 + 0.5 * eps;
  const double n1 = std::pow(16.0 * std::log(12.0), 1.0 / (1.0 - s * alpha));
  const double n2 = std::pow(16.0 * std::log(12.0),
                             2.0 / (1.0 - s * (alpha + 0.5)));
  CHECK(got == doctest::Approx(std::max(n1, n2)).epsilon(1e-12));
  CHECK(got < 1e4);  // modest at desk scale

  // Nondecreasing as delta shrinks.
  double prev = 0.0;
  for (double delta : {0.5, 0.25, 0.1, 0.01}) {
    const double v =
        min_sample_advisory_thm1(s, alpha0, eps, beta, kInf, delta, unit);
    CHECK(v >= prev);
    prev = v;
  }

  // Nondecreasing in the embedding norm.
  prev = 0.0;
  for (double m_alpha : {0.5, 1.0, 2.0, 4.0}) {
    AdvisoryConstants k = unit;
    k.M_alpha = m_alpha;
    const double v =
        min_sample_advisory_thm1(s, alpha0, eps, beta, kInf, 0.5, k);
    CHECK(v >= prev);
    prev = v;
  }

  // Degenerate exponent denominators give +inf.
  CHECK(min_sample_advisory_thm1(0.99, 0.9, 0.3, 2.0, kInf, 0.5, unit) ==
        kInf);
}

TEST_CASE("rate fitting recovers exact power laws") {
  RunTable table;
  for (int n : {100, 200, 400, 800, 1600}) {
    RunRow row;
    row.gamma = 0.0;
    row.n = n;
    row.trial = 0;
    row.error = std::pow(double(n), -1.0 / 3.0);
    table.rows.push_back(row);
  }
  auto fit = fit_rate(table, 0.0, 2.0 / 3.0, 0.5);
  CHECK(fit.slope == doctest::Approx(-1.0 / 3.0).epsilon(1e-12));
  CHECK(fit.theoretical == doctest::Approx(-1.0 / 3.0));
  CHECK(fit.stderr_slope < 1e-12);
  CHECK(fit.n_used == 5);
  CHECK(fit.n_dropped == 0);

  for (auto& row : table.rows) row.error = 2.0 * std::pow(double(row.n), -0.4);
  fit = fit_rate(table, 0.0, 0.5, 0.8);
  CHECK(fit.slope == doctest::Approx(-0.4).epsilon(1e-10));
  CHECK(fit.intercept == doctest::Approx(std::log(2.0)).epsilon(1e-10));
}

TEST_CASE("rate fitting needs three points and applies the drop rule") {
  RunTable tiny;
  for (int n : {100, 200}) {
    RunRow row;
    row.n = n;
    row.error = 1.0 / n;
    tiny.rows.push_back(row);
  }
  CHECK_THROWS_AS(fit_rate(tiny, 0.0, 0.5, 0.5), std::invalid_argument);

  RunTable table;
  for (int n : {10, 100, 1000, 10000}) {
    RunRow row;
    row.gamma = 0.0;
    row.n = n;
    row.error = std::pow(double(n), -0.25);
    table.rows.push_back(row);
  }
  // Advisory inside the grid: drops the one flagged point, keeps >= 3.
  auto fit = fit_rate(table, 0.0, 0.5, 0.5, 150.0);
  CHECK(fit.n_dropped == 1);
  CHECK(fit.n_used == 3);

  // Vacuous advisory (beyond the grid): nothing dropped.
  fit = fit_rate(table, 0.0, 0.5, 0.5, 8.5e18);
  CHECK(fit.n_dropped == 0);
  CHECK(fit.n_used == 4);

  // Advisory never starves the fit below three points.
  fit = fit_rate(table, 0.0, 0.5, 0.5, 5000.0);
  CHECK(fit.n_dropped == 1);
  CHECK(fit.n_used == 3);
}

namespace {

ExperimentPlan toy_plan() {
  ExperimentPlan plan;
  plan.scenario = ShiftScenario::none();
  plan.kernel = KernelSpec::make(2.0, 256);
  plan.filter = FilterSpec::ridge();
  plan.source = SourceCondition{0.5, 0.05, 1.0};
  plan.p = kInf;
  plan.gamma_list = {0.0, 0.5};
  plan.n_grid = {16};
  plan.trials = 1;
  plan.schedule = Schedule::thm1;
  plan.master_seed = 31;
  plan.noise_bound = 0.2;
  plan.workers = 1;
  return plan;
}

}  // namespace

TEST_CASE("sweep bookkeeping: one cell, one row per gamma") {
  const auto table = run_convergence(toy_plan());
  CHECK(table.rows.size() == 2);
  CHECK(table.rows[0].gamma == 0.0);
  CHECK(table.rows[1].gamma == 0.5);
  CHECK(table.rows[0].n == 16);
  CHECK(table.rows[0].lambda ==
        doctest::Approx(std::pow(16.0, -2.0 / 3.0)).epsilon(1e-12));
  CHECK(std::isinf(table.rows[0].trunc_level));
  CHECK(std::isfinite(table.rows[0].error));
}

TEST_CASE("sweeps are deterministic and error decays with n") {
  auto plan = toy_plan();
  plan.n_grid = {128, 1024};
  plan.trials = 3;
  plan.gamma_list = {0.0};

  const auto t1 = run_convergence(plan);
  const auto t2 = run_convergence(plan);
  std::ostringstream s1, s2;
  write_run_table_csv(s1, t1);
  write_run_table_csv(s2, t2);
  CHECK(s1.str() == s2.str());

  // Parallel workers produce the identical table.
  plan.workers = 4;
  const auto t3 = run_convergence(plan);
  std::ostringstream s3;
  write_run_table_csv(s3, t3);
  CHECK(s3.str() == s1.str());

  double med128 = 0.0, med1024 = 0.0;
  std::vector<double> e128, e1024;
  for (const auto& row : t1.rows) {
    (row.n == 128 ? e128 : e1024).push_back(row.error);
  }
  std::sort(e128.begin(), e128.end());
  std::sort(e1024.begin(), e1024.end());
  med128 = e128[1];
  med1024 = e1024[1];
  CHECK(med1024 < med128);
}

TEST_CASE("run table round-trips through CSV") {
  auto plan = toy_plan();
  plan.n_grid = {32, 64};
  plan.trials = 2;
  const auto table = run_convergence(plan);
  std::ostringstream os;
  write_run_table_csv(os, table);
  std::istringstream is(os.str());
  const auto back = read_run_table_csv(is);
  REQUIRE(back.rows.size() == table.rows.size());
  for (std::size_t i = 0; i < table.rows.size(); ++i) {
    CHECK(back.rows[i].error == table.rows[i].error);
    CHECK(back.rows[i].lambda == table.rows[i].lambda);
    CHECK(back.rows[i].seed == table.rows[i].seed);
    CHECK(back.rows[i].n == table.rows[i].n);
  }
  std::ostringstream os2;
  write_run_table_csv(os2, back);
  CHECK(os2.str() == os.str());
}

TEST_CASE("plan validation rejects bad configurations") {
  auto plan = toy_plan();
  plan.gamma_list = {1.2};  // above min{2r,1} = 1
  CHECK_THROWS_AS(resolve_plan(plan), std::invalid_argument);

  plan = toy_plan();
  plan.n_grid = {64, 64};
  CHECK_THROWS_AS(resolve_plan(plan), std::invalid_argument);

  plan = toy_plan();
  plan.filter = FilterSpec::gradient_flow(2.0);
  plan.n_grid = {1024, 4096};
  CHECK_THROWS_AS(resolve_plan(plan), std::invalid_argument);

  plan = toy_plan();
  plan.scenario = ShiftScenario::log_tail(2.0);
  plan.p = 3.0;  // mismatch
  CHECK_THROWS_AS(resolve_plan(plan), std::invalid_argument);

  plan = toy_plan();
  plan.source.r = 1.5;  // beyond ridge qualification tau = 1
  CHECK_THROWS_AS(resolve_plan(plan), std::invalid_argument);

  // Default eps policy lands inside the admissible range.
  plan = toy_plan();
  const auto sched = resolve_plan(plan);
  CHECK(sched.eps == doctest::Approx(0.25));  // min(0.3, (2r-alpha0)/2)
  CHECK(sched.s == doctest::Approx(2.0 / 3.0));
}

TEST_CASE("truncated and plain estimators recorded side by side") {
  // The comparison is an empirical observation, not an assertion: record
  // both medians at the largest n.
  ExperimentPlan plan;
  plan.scenario = ShiftScenario::log_tail(2.0);
  plan.kernel = KernelSpec::make(2.0, 256);
  plan.filter = FilterSpec::ridge();
  plan.source = SourceCondition{0.75, 0.05, 1.0};
  plan.p = 2.0;
  plan.gamma_list = {0.0};
  plan.n_grid = {64, 128, 256};
  plan.trials = 5;
  plan.schedule = Schedule::thm2;
  plan.m = 3;
  plan.master_seed = 77;
  plan.workers = 1;
  const auto truncated = run_convergence(plan);

  plan.schedule = Schedule::manual;
  plan.manual_s = 0.4;
  const auto plain = run_convergence(plan);

  auto median_at = [](const RunTable& t, int n) {
    std::vector<double> e;
    for (const auto& row : t.rows) {
      if (row.n == n && std::isfinite(row.error)) e.push_back(row.error);
    }
    std::sort(e.begin(), e.end());
    return e[e.size() / 2];
  };
  const double med_t = median_at(truncated, 256);
  const double med_p = median_at(plain, 256);
  MESSAGE("median error at n=256: truncated=", med_t, " plain=", med_p);
  CHECK(std::isfinite(med_t));
  CHECK(std::isfinite(med_p));
  for (const auto& row : truncated.rows) {
    if (row.n == 256) {
      CHECK(row.trunc_level == doctest::Approx(std::pow(256.0, 0.2)));
    }
  }
}
