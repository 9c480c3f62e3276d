#pragma once

#include <span>
#include <vector>

#include <Eigen/Dense>

#include "specshift/filters.hpp"
#include "specshift/mercer.hpp"
#include "specshift/shift.hpp"

namespace specshift {

/// Which route computes g_lambda of the empirical operator. The
/// eigendecomposition is the reference implementation for every filter; the
/// direct Cholesky solve is a ridge-only fast path, cross-checked against it.
enum class SolvePath { eigen, ridge_direct };

struct FitMeta {
  FilterKind filter = FilterKind::ridge;
  double lambda = 0.0;
  double spectrum_max = 0.0;  // largest eigenvalue of the weighted operator
  bool clip_flag = false;     // spectrum_max exceeded kappa^2
  double trunc_level = std::numeric_limits<double>::infinity();  // D, inf if none
};

/// Fitted estimator f_hat = sum_i c_i K(., x_i) together with its exact
/// Mercer projection b_j = t_j sum_i c_i e_j(x_i). The two representations
/// agree as functions up to j_max truncation.
struct SpectralEstimate {
  std::vector<double> anchors;        // copy of the sample xs
  std::vector<double> coeffs;         // c, length n
  std::vector<double> mercer_coeffs;  // b, length j_max
  FitMeta meta;
};

/// M = (1/n) W^{1/2} K W^{1/2} with K the Gram matrix and W = diag(w_i);
/// symmetric PSD, sharing its nonzero spectrum with the weighted empirical
/// operator restricted to the sample span. The prefactor counts strictly
/// positive weights so zero-weight rows stay inert.
Eigen::MatrixXd assemble_weighted_operator(const Dataset& ds,
                                           const KernelSpec& spec);

/// Computes f_hat = g_lambda(L_hat) S_hat* y in the anchor basis:
/// c = (1/n) W^{1/2} U g_lambda(Lambda) U^T W^{1/2} y with M = U Lambda U^T.
/// Filters are evaluated on the actual spectrum even when it exceeds
/// kappa^2; the event is recorded in meta.clip_flag. The ridge_direct path
/// solves (M + lambda I) d = (1/n) W^{1/2} y instead and is valid for the
/// ridge filter only.
SpectralEstimate fit(const Dataset& ds, const KernelSpec& spec,
                     const FilterSpec& filt, double lambda,
                     SolvePath path = SolvePath::eigen);

/// Same, but with weights replaced by min(w_i, D), D = n^nu from the rule.
SpectralEstimate fit_truncated(const Dataset& ds, const KernelSpec& spec,
                               const FilterSpec& filt, double lambda,
                               const TruncationRule& rule,
                               SolvePath path = SolvePath::eigen);

/// Anchor-basis evaluation sum_i c_i K(x, x_i).
double predict(const SpectralEstimate& est, const KernelSpec& spec, double x);

/// Batch anchor-basis evaluation (same sum, assembled as a matrix product).
std::vector<double> predict_many(const SpectralEstimate& est,
                                 const KernelSpec& spec,
                                 std::span<const double> xs);

/// Interpolation-norm error sqrt(sum_j (b_j - a_j)^2 t_j^{-gamma}), exact
/// at the j_max truncation. gamma in [0,1].
double error_norm(const SpectralEstimate& est, const MercerFunction& f_rho,
                  const KernelSpec& spec, double gamma);

/// Spectrum guard diagnostic: did the weighted empirical operator leave the
/// filter domain [0, kappa^2]?
struct OperatorNormGuard {
  double spectrum_max = 0.0;
  double kappa2 = 0.0;
  bool clip_flag = false;
};

OperatorNormGuard operator_norm_guard(const FitMeta& meta,
                                      const KernelSpec& spec);

}  // namespace specshift
