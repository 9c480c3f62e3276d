#include "specshift/filters.hpp"

#include <cmath>
#include <stdexcept>

namespace specshift {

std::string filter_name(FilterKind kind) {
  switch (kind) {
    case FilterKind::ridge: return "ridge";
    case FilterKind::gradient_flow: return "gradient_flow";
    case FilterKind::spectral_cutoff: return "spectral_cutoff";
  }
  return "?";
}

FilterSpec FilterSpec::ridge() { return {FilterKind::ridge, 1.0, 1.0, 1.0}; }

FilterSpec FilterSpec::gradient_flow(double tau) {
  if (!(tau >= 1.0)) {
    throw std::invalid_argument("gradient_flow: qualification tau must be >= 1");
  }
  const double f = std::pow(tau / std::exp(1.0), tau);
  return {FilterKind::gradient_flow, tau, 1.0, std::max(1.0, f)};
}

FilterSpec FilterSpec::spectral_cutoff(double tau) {
  if (!(tau >= 1.0)) {
    throw std::invalid_argument("spectral_cutoff: qualification tau must be >= 1");
  }
  return {FilterKind::spectral_cutoff, tau, 1.0, 1.0};
}

namespace {

void check_args(double lambda, double t) {
  if (!(lambda > 0.0)) {
    throw std::invalid_argument("filter: lambda must be > 0");
  }
  if (!(t >= 0.0)) {
    throw std::invalid_argument("filter: t must be >= 0");
  }
}

// (1 - e^{-u})/u, stable for all u >= 0. Below 1e-4 a 6-term Taylor series
// avoids cancellation; the estimator feeds eigenvalues spanning many orders
// of magnitude through this.
double one_minus_exp_over(double u) {
  if (u < 1e-4) {
    return 1.0 +
           u * (-1.0 / 2.0 +
                u * (1.0 / 6.0 +
                     u * (-1.0 / 24.0 + u * (1.0 / 120.0 - u / 720.0))));
  }
  return -std::expm1(-u) / u;
}

}  // namespace

double filter_value(const FilterSpec& spec, double lambda, double t) {
  check_args(lambda, t);
  switch (spec.kind) {
    case FilterKind::ridge:
      return 1.0 / (t + lambda);
    case FilterKind::gradient_flow:
      return one_minus_exp_over(t / lambda) / lambda;
    case FilterKind::spectral_cutoff:
      return t >= lambda ? 1.0 / t : 0.0;  // inclusive at t = lambda
  }
  throw std::logic_error("unreachable filter kind");
}

double residual_value(const FilterSpec& spec, double lambda, double t) {
  check_args(lambda, t);
  switch (spec.kind) {
    case FilterKind::ridge:
      return lambda / (t + lambda);
    case FilterKind::gradient_flow:
      return std::exp(-t / lambda);
    case FilterKind::spectral_cutoff:
      return t < lambda ? 1.0 : 0.0;
  }
  throw std::logic_error("unreachable filter kind");
}

FilterReport verify_filter_inequalities(const FilterSpec& spec, double kappa2,
                                        std::span<const double> lambda_grid,
                                        std::span<const double> t_grid,
                                        std::span<const double> theta_grid_phi,
                                        std::span<const double> theta_grid_psi,
                                        double slack) {
  if (lambda_grid.empty() || t_grid.empty()) {
    throw std::invalid_argument("verify_filter_inequalities: empty grid");
  }
  for (double t : t_grid) {
    if (!(t >= 0.0 && t <= kappa2)) {
      throw std::invalid_argument(
          "verify_filter_inequalities: t grid must lie in [0, kappa^2]");
    }
  }

  FilterReport report;
  const std::string name = filter_name(spec.kind);

  auto scan = [&](char eq, double theta, double lambda) {
    FilterCheckRow row;
    row.filter = name;
    row.eq = eq;
    row.theta = theta;
    row.lambda = lambda;
    row.bound = (eq == 's') ? spec.E : spec.F;
    const double scale =
        (eq == 's') ? std::pow(lambda, theta - 1.0) : std::pow(lambda, theta);
    double worst = -1.0;
    double worst_t = 0.0;
    for (double t : t_grid) {
      const double weight = std::pow(t, theta);  // pow(0,0) == 1
      const double core = (eq == 's') ? filter_value(spec, lambda, t)
                                      : std::abs(residual_value(spec, lambda, t));
      const double ratio = weight * core / scale;
      if (ratio > worst) {
        worst = ratio;
        worst_t = t;
      }
    }
    row.ratio = worst;
    row.worst_t = worst_t;
    row.pass = worst <= row.bound + slack;
    if (!row.pass) report.all_pass = false;
    report.rows.push_back(row);
  };

  // Thetas beyond the nominal ranges ([0,1] resp. [0,tau]) are allowed as
  // probes; beyond qualification the inequality fails and the violation
  // shows up as a report row with its witness.
  for (double theta : theta_grid_phi) {
    if (!(theta >= 0.0)) {
      throw std::invalid_argument("stability theta grid must be nonnegative");
    }
    for (double lambda : lambda_grid) scan('s', theta, lambda);
  }
  for (double theta : theta_grid_psi) {
    if (!(theta >= 0.0)) {
      throw std::invalid_argument("residual theta grid must be nonnegative");
    }
    for (double lambda : lambda_grid) scan('r', theta, lambda);
  }
  return report;
}

}  // namespace specshift
