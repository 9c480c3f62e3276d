#pragma once

#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "specshift/mercer.hpp"
#include "specshift/rng.hpp"

namespace specshift {

enum class ShiftKind { none, bounded_linear, log_tail };

std::string shift_name(ShiftKind kind);

/// A source/target distribution pair on (0,1] with closed-form density
/// ratio w = d rho_T / d rho_S. The target law is uniform on [0,1] in every
/// scenario; all shift lives in the source density q:
///
///   none:           q = 1,                        w = 1
///   bounded_linear: q(x) = 1/2 + x,               w(x) = 1/(1/2 + x)
///   log_tail(p):    q(x) = c_p (1+ln(1/x))^{-1/p}, w(x) = (1/c_p)(1+ln(1/x))^{1/p}
///
/// log_tail has an unbounded ratio whose target tail decays like
/// exp(-(c_p t)^p). Scenarios are immutable after construction; the log_tail
/// CDF table is frozen at build time and sampling only needs a caller-owned
/// generator.
class ShiftScenario {
 public:
  static ShiftScenario none();
  static ShiftScenario bounded_linear();
  /// Builds the quadrature CDF table and verifies the source density
  /// normalizes to 1 within 1e-10 (independent x-space quadrature route).
  static ShiftScenario log_tail(double p);

  ShiftKind kind() const { return kind_; }
  /// Moment exponent of Assumption-type tail control; +inf when the ratio
  /// is bounded.
  double p() const { return p_; }
  /// Normalization constant of the source density (1 except for log_tail).
  double c_norm() const { return c_norm_; }

  /// Source density q(x) on (0,1].
  double density(double x) const;

  /// w(x) = dρ_T/dρ_S. Rejects x outside (0,1]; the log_tail ratio diverges
  /// at x = 0.
  double density_ratio(double x) const;

  /// ess sup of w; +inf for log_tail.
  double sup_ratio() const;

  /// One draw from the source law. Inverse-CDF: analytic for none and
  /// bounded_linear, bisection on the cached table for log_tail. Consumes
  /// exactly one uniform.
  double sample(Rng& rng) const;

  /// CDF of the source law; table-interpolated for log_tail.
  double cdf(double x) const;

 private:
  ShiftScenario() = default;

  ShiftKind kind_ = ShiftKind::none;
  double p_ = std::numeric_limits<double>::infinity();
  double c_norm_ = 1.0;
  // log_tail survival table in t = ln(1/x) coordinates: surv_[k] = P(T >= t_k)
  // on a uniform t-grid [0, t_max_]; F_X(x) = P(T >= ln(1/x)).
  std::vector<double> surv_;
  double t_max_ = 0.0;
};

/// w_dagger = min(w, D).
double truncate_ratio(double w_value, double D);

/// nu = 1/(p(m-1)+1). Finite p only; the truncation path needs p < inf.
double nu_exponent(double p, int m);

/// Truncation schedule D = n^nu for the clipped estimator.
struct TruncationRule {
  int m = 2;
  double nu = 0.0;

  static TruncationRule from_moment(double p, int m);
  double level(int n) const;  // D = n^nu, always >= 1
};

struct MomentCheckRow {
  std::string scenario;
  double p = 0.0;
  int m = 0;
  double lhs = 0.0;    // (int w^{p(m-1)} drho_T)^{1/p}, or ||w^{m-1}||_inf
  double rhs = 0.0;    // (1/2) m! L^{m-2} sigma^2
  double margin = 0.0;  // rhs - lhs
  bool pass = false;
  bool conclusive = true;  // quadrature converged
};

struct MomentReport {
  std::vector<MomentCheckRow> rows;
  bool all_pass = true;
  bool all_conclusive = true;
};

/// Checks the density-ratio moment condition
///   (int w^{p(m-1)} drho_T)^{1/p} <= (1/2) m! L^{m-2} sigma^2,  m = 2..m_max
/// by adaptive quadrature (ess-sup route when p = inf). Non-convergent
/// quadrature is reported as inconclusive, never silently passed.
MomentReport moment_check(const ShiftScenario& scn, double p, int m_max,
                          double L, double sigma);

/// Fits (L, sigma) on a grid: for each L the minimal feasible sigma^2 is
/// max_m 2 lhs(m) / (m! L^{m-2}); returns the pair minimizing
/// max(L, sigma^2). No minimality claim.
std::pair<double, double> fit_moment_constants(const ShiftScenario& scn,
                                               double p, int m_max);

/// Constants read off the closed-form tail: bounded scenarios give
/// L = sigma^2 = ||w||_inf; log_tail matches the sufficient condition
/// 2 rho_T({w >= t}) <= sigma^2 exp(-t^p / L) with L = c_p^{-p},
/// sigma^2 = 2e.
std::pair<double, double> tail_fit_constants(const ShiftScenario& scn);

/// Source-drawn sample with importance weights attached.
struct Dataset {
  std::vector<double> xs;
  std::vector<double> ys;
  std::vector<double> ws;

  int size() const { return static_cast<int>(xs.size()); }
};

/// Draws x_i from the source law, sets y_i = f_rho(x_i) + eta_i with eta
/// uniform on [-noise_bound, noise_bound], and attaches w_i = w(x_i).
/// |y_i| <= g_bound + noise_bound always (bounded noise keeps the data
/// model inside the theory).
Dataset generate_dataset(const ShiftScenario& scn, const MercerFunction& f_rho,
                         const KernelSpec& spec, int n, double noise_bound,
                         Rng& rng);

}  // namespace specshift
