#include "specshift/mercer.hpp"

#include <cmath>
#include <numbers>
#include <sstream>
#include <stdexcept>

namespace specshift {

namespace {

void check_index(int j, int j_max) {
  if (j < 1 || j > j_max) {
    std::ostringstream msg;
    msg << "eigen index j=" << j << " out of range [1, " << j_max << "]";
    throw std::out_of_range(msg.str());
  }
}

void check_point(double x) {
  if (!(x >= 0.0 && x <= 1.0)) {
    std::ostringstream msg;
    msg << "x=" << x << " outside [0,1]";
    throw std::invalid_argument(msg.str());
  }
}

}  // namespace

KernelSpec KernelSpec::make(double beta, int j_max, Basis basis) {
  if (!(beta > 1.0)) {
    throw std::invalid_argument(
        "KernelSpec: beta must exceed 1 (trace-class eigenvalue decay)");
  }
  if (j_max < 1) {
    throw std::invalid_argument("KernelSpec: j_max must be positive");
  }
  KernelSpec spec;
  spec.beta = beta;
  spec.j_max = j_max;
  spec.basis = basis;
  spec.eigenvalues.resize(j_max);
  for (int j = 1; j <= j_max; ++j) spec.eigenvalues[j - 1] = std::pow(j, -beta);
  double trace = 0.0;
  for (int j = j_max; j >= 1; --j) trace += spec.eigenvalues[j - 1];
  spec.kappa2 = 2.0 * trace;
  if (!(std::isfinite(spec.kappa2) && spec.kappa2 >= 1.0)) {
    throw std::invalid_argument("KernelSpec: kappa^2 must be finite and >= 1");
  }
  return spec;
}

double KernelSpec::eigenvalue(int j) const {
  check_index(j, j_max);
  return eigenvalues[j - 1];
}

double KernelSpec::eigenfunction(int j, double x) const {
  check_index(j, j_max);
  check_point(x);
  return std::numbers::sqrt2 * std::cos(j * std::numbers::pi * x);
}

double KernelSpec::kernel(double x, double xp) const {
  check_point(x);
  check_point(xp);
  const double ta = std::numbers::pi * x;
  const double tb = std::numbers::pi * xp;
  double sum = 0.0;
  for (int j = j_max; j >= 1; --j) {
    sum += eigenvalues[j - 1] * 2.0 * std::cos(j * ta) * std::cos(j * tb);
  }
  return sum;
}

double KernelSpec::effective_dimension(double lambda) const {
  if (!(lambda > 0.0)) {
    throw std::invalid_argument("effective_dimension: lambda must be > 0");
  }
  double sum = 0.0;
  for (int j = j_max; j >= 1; --j) {
    const double t = eigenvalues[j - 1];
    sum += t / (t + lambda);
  }
  return sum;
}

double KernelSpec::embedding_norm(double alpha) const {
  if (!(alpha > 1.0 / beta)) {
    std::ostringstream msg;
    msg << "embedding_norm: alpha=" << alpha
        << " must exceed the embedding index 1/beta=" << 1.0 / beta;
    throw std::invalid_argument(msg.str());
  }
  // For the cosine basis the ess-sup sits at x = 0, where every e_j^2 hits
  // its maximum 2 simultaneously. The grid is kept as a guard for future
  // basis additions.
  std::vector<double> weight(j_max);
  for (int j = 1; j <= j_max; ++j) weight[j - 1] = std::pow(j, -alpha * beta);
  constexpr int kGridPoints = 10000;
  double best = 0.0;
  for (int g = 0; g <= kGridPoints; ++g) {
    const double x = static_cast<double>(g) / kGridPoints;
    const double theta = std::numbers::pi * x;
    double sum = 0.0;
    for (int j = j_max; j >= 1; --j) {
      const double c = std::cos(j * theta);
      sum += weight[j - 1] * 2.0 * c * c;
    }
    if (sum > best) best = sum;
  }
  return std::sqrt(best);
}

double MercerFunction::norm_rhoT() const {
  double sum = 0.0;
  for (double a : coeffs) sum += a * a;
  return std::sqrt(sum);
}

double MercerFunction::evaluate(const KernelSpec& spec, double x) const {
  check_point(x);
  if (static_cast<int>(coeffs.size()) > spec.j_max) {
    throw std::invalid_argument("MercerFunction: more coefficients than j_max");
  }
  double sum = 0.0;
  const int n = static_cast<int>(coeffs.size());
  for (int j = 1; j <= n; ++j) {
    sum += coeffs[j - 1] * std::numbers::sqrt2 *
           std::cos(j * std::numbers::pi * x);
  }
  return sum;
}

double interp_norm(const MercerFunction& f, const KernelSpec& spec,
                   double gamma) {
  if (!(gamma >= 0.0 && gamma <= 1.0)) {
    throw std::invalid_argument("interp_norm: gamma must lie in [0,1]");
  }
  if (static_cast<int>(f.coeffs.size()) > spec.j_max) {
    throw std::invalid_argument("interp_norm: more coefficients than j_max");
  }
  double sum = 0.0;
  for (int j = 1; j <= static_cast<int>(f.coeffs.size()); ++j) {
    const double a = f.coeffs[j - 1];
    sum += a * a * std::pow(j, gamma * spec.beta);  // t_j^{-gamma}
  }
  return std::sqrt(sum);
}

SourceFunction make_source_function(const KernelSpec& spec,
                                    const SourceCondition& src) {
  if (!(src.r > 0.0)) {
    throw std::invalid_argument("SourceCondition: r must be > 0");
  }
  if (!(src.eps_u > 0.0) || !(src.scale > 0.0)) {
    throw std::invalid_argument("SourceCondition: eps_u and scale must be > 0");
  }
  const double decay = spec.beta * src.r + 0.5 + src.eps_u;
  if (!(decay > 1.0)) {
    std::ostringstream msg;
    msg << "SourceCondition: beta*r + 1/2 + eps_u = " << decay
        << " must exceed 1 so that sum_j |a_j| < inf (||f_rho||_inf bound)";
    throw std::invalid_argument(msg.str());
  }
  SourceFunction out;
  out.r = src.r;
  out.f.coeffs.resize(spec.j_max);
  double abs_sum = 0.0;
  double u_sq = 0.0;
  for (int j = 1; j <= spec.j_max; ++j) {
    const double u = src.scale * std::pow(j, -0.5 - src.eps_u);
    const double a = std::pow(j, -spec.beta * src.r) * u;  // t_j^r u_j
    out.f.coeffs[j - 1] = a;
    abs_sum += std::abs(a);
    u_sq += u * u;
  }
  out.g_bound = std::numbers::sqrt2 * abs_sum;
  out.u_norm = std::sqrt(u_sq);
  return out;
}

}  // namespace specshift
