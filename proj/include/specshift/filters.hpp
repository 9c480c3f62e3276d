#pragma once

#include <span>
#include <string>
#include <vector>

namespace specshift {

enum class FilterKind { ridge, gradient_flow, spectral_cutoff };

std::string filter_name(FilterKind kind);

/// A spectral filter g_lambda: [0, kappa^2] -> [0, inf) with its stability
/// constant E, residual constant F and qualification tau:
///
///   sup_t t^theta g_lambda(t)        <= E lambda^{theta-1},  theta in [0,1]
///   sup_t t^theta |1 - t g_lambda(t)| <= F lambda^theta,     theta in [0,tau]
///
/// The residual of every filter equals 1 at t = 0, so F >= 1 always; for
/// gradient flow the tight uniform constant is max{1, (tau/e)^tau} (the
/// (tau/e)^tau term is sup_u u^theta e^{-u} at theta = tau).
struct FilterSpec {
  FilterKind kind = FilterKind::ridge;
  double tau = 1.0;
  double E = 1.0;
  double F = 1.0;

  static FilterSpec ridge();                          // tau = 1, E = F = 1
  static FilterSpec gradient_flow(double tau = 2.0);  // E = 1, F = max{1,(tau/e)^tau}
  static FilterSpec spectral_cutoff(double tau = 2.0);  // E = F = 1
};

/// g_lambda(t). Gradient flow switches to a 6-term Taylor expansion of
/// (1 - e^{-u})/u for u = t/lambda < 1e-4; the cutoff is inclusive at
/// t = lambda. Rejects lambda <= 0 and t < 0.
double filter_value(const FilterSpec& spec, double lambda, double t);

/// 1 - t g_lambda(t): lambda/(t+lambda) for ridge, e^{-t/lambda} for
/// gradient flow, the indicator of t < lambda for the cutoff.
double residual_value(const FilterSpec& spec, double lambda, double t);

/// One grid check: the worst ratio over t for a fixed (equation, theta,
/// lambda) against its bound.
struct FilterCheckRow {
  std::string filter;
  char eq = 's';  // 's' = stability bound, 'r' = residual bound
  double theta = 0.0;
  double lambda = 0.0;
  double worst_t = 0.0;
  double ratio = 0.0;
  double bound = 0.0;
  bool pass = true;
};

struct FilterReport {
  std::vector<FilterCheckRow> rows;
  bool all_pass = true;
};

/// Checks both filter inequalities on dense grids and reports worst-case
/// witnesses. Violations are report rows, not exceptions.
FilterReport verify_filter_inequalities(const FilterSpec& spec, double kappa2,
                                        std::span<const double> lambda_grid,
                                        std::span<const double> t_grid,
                                        std::span<const double> theta_grid_phi,
                                        std::span<const double> theta_grid_psi,
                                        double slack = 1e-12);

}  // namespace specshift
