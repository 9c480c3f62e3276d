#pragma once

#include <vector>

namespace specshift {

enum class Basis { cosine };

/// Synthetic Mercer kernel on X = [0,1] with uniform target marginal:
///
///   K(x, x') = sum_{j<=j_max} t_j e_j(x) e_j(x'),
///   t_j = j^{-beta},  e_j(x) = sqrt(2) cos(j pi x).
///
/// The eigenfunctions are orthonormal in L2([0,1], uniform) and uniformly
/// bounded by sqrt(2), so the embedding index of the induced RKHS is 1/beta.
/// All interpolation-space norms are exact coefficient sums at this
/// truncation.
struct KernelSpec {
  double beta = 2.0;
  int j_max = 4096;
  Basis basis = Basis::cosine;
  double kappa2 = 0.0;  // sup_x K(x,x) = 2 sum_j t_j, attained at x = 0
  std::vector<double> eigenvalues;  // t_j at [j-1], cached at construction

  /// Validates beta > 1 (trace class) and precomputes the spectrum and
  /// kappa^2.
  static KernelSpec make(double beta, int j_max = 4096,
                         Basis basis = Basis::cosine);

  /// t_j = j^{-beta}, 1 <= j <= j_max.
  double eigenvalue(int j) const;

  /// e_j(x) = sqrt(2) cos(j pi x), x in [0,1].
  double eigenfunction(int j, double x) const;

  /// Truncated Mercer sum; symmetric, positive semi-definite.
  double kernel(double x, double xp) const;

  /// N(lambda) = sum_j t_j / (t_j + lambda).
  double effective_dimension(double lambda) const;

  /// Embedding norm M_alpha = sqrt(ess sup_x sum_j t_j^alpha e_j(x)^2),
  /// evaluated on a uniform 10^4-point grid plus x = 0 exactly (where the
  /// cosine-basis sup lives). Requires alpha > 1/beta.
  double embedding_norm(double alpha) const;
};

/// A function represented by its coefficients in the L2(rho_T) eigenbasis:
/// f = sum_j a_j e_j, with coeffs[j-1] = a_j.
struct MercerFunction {
  std::vector<double> coeffs;

  double norm_rhoT() const;
  double evaluate(const KernelSpec& spec, double x) const;
};

/// Interpolation-space norm ||f||_{[H]^gamma} = sqrt(sum_j a_j^2 t_j^{-gamma})
/// for gamma in [0,1]; gamma = 0 is the L2(rho_T) norm, gamma = 1 the RKHS
/// norm.
double interp_norm(const MercerFunction& f, const KernelSpec& spec,
                   double gamma);

/// Source-condition parameters: the target is f_rho = L_K^r u_rho with
/// u-coefficients u_j = scale * j^{-1/2 - eps_u}.
struct SourceCondition {
  double r = 0.5;
  double eps_u = 0.05;
  double scale = 1.0;
};

/// Constructed target function together with its reported regularity data.
struct SourceFunction {
  MercerFunction f;     // a_j = t_j^r u_j
  double r = 0.0;
  double g_bound = 0.0;  // sup-norm bound: sqrt(2) sum_j |a_j|
  double u_norm = 0.0;   // ||u_rho||_{rho_T}
};

/// Builds f_rho from the source condition. Requires
/// beta*r + 1/2 + eps_u > 1, which makes the coefficient series absolutely
/// summable and hence ||f_rho||_inf <= g_bound.
SourceFunction make_source_function(const KernelSpec& spec,
                                    const SourceCondition& src);

}  // namespace specshift
