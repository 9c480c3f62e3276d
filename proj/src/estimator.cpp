#include "specshift/estimator.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace specshift {

namespace {

void check_dataset(const Dataset& ds) {
  const std::size_t n = ds.xs.size();
  if (n == 0) throw std::invalid_argument("fit: dataset is empty");
  if (ds.ys.size() != n || ds.ws.size() != n) {
    throw std::invalid_argument("fit: xs/ys/ws length mismatch");
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (!std::isfinite(ds.xs[i]) || !std::isfinite(ds.ys[i]) ||
        !std::isfinite(ds.ws[i])) {
      throw std::invalid_argument("fit: non-finite value in dataset");
    }
    if (ds.ws[i] < 0.0) {
      throw std::invalid_argument("fit: negative weight");
    }
  }
}

int positive_weight_count(const Dataset& ds) {
  int n_pos = 0;
  for (double w : ds.ws) n_pos += (w > 0.0) ? 1 : 0;
  return n_pos;
}

// Phi(i, j-1) = e_j(x_i).
Eigen::MatrixXd feature_matrix(std::span<const double> xs,
                               const KernelSpec& spec) {
  const int n = static_cast<int>(xs.size());
  Eigen::MatrixXd phi(n, spec.j_max);
  for (int i = 0; i < n; ++i) {
    const double theta = std::numbers::pi * xs[i];
    for (int j = 1; j <= spec.j_max; ++j) {
      phi(i, j - 1) = std::numbers::sqrt2 * std::cos(j * theta);
    }
  }
  return phi;
}

Eigen::VectorXd eigenvalue_vector(const KernelSpec& spec) {
  return Eigen::Map<const Eigen::VectorXd>(spec.eigenvalues.data(), spec.j_max);
}

// Largest eigenvalue by fixed-count power iteration; the fixed count keeps
// the diagnostic deterministic.
double power_iteration_max(const Eigen::MatrixXd& m) {
  const int n = static_cast<int>(m.rows());
  Eigen::VectorXd v = Eigen::VectorXd::Ones(n) / std::sqrt(double(n));
  double value = 0.0;
  for (int it = 0; it < 64; ++it) {
    Eigen::VectorXd mv = m.selfadjointView<Eigen::Lower>() * v;
    const double norm = mv.norm();
    if (norm == 0.0) return 0.0;
    v = mv / norm;
    value = norm;
  }
  return value;
}

SpectralEstimate zero_estimate(const Dataset& ds, const KernelSpec& spec,
                               const FilterSpec& filt, double lambda) {
  SpectralEstimate est;
  est.anchors = ds.xs;
  est.coeffs.assign(ds.xs.size(), 0.0);
  est.mercer_coeffs.assign(spec.j_max, 0.0);
  est.meta.filter = filt.kind;
  est.meta.lambda = lambda;
  return est;
}

}  // namespace

Eigen::MatrixXd assemble_weighted_operator(const Dataset& ds,
                                           const KernelSpec& spec) {
  check_dataset(ds);
  const int n = ds.size();
  const int n_pos = positive_weight_count(ds);
  const Eigen::MatrixXd phi = feature_matrix(ds.xs, spec);
  const Eigen::VectorXd t = eigenvalue_vector(spec);

  Eigen::MatrixXd b = phi * t.cwiseSqrt().asDiagonal();
  Eigen::MatrixXd gram = Eigen::MatrixXd::Zero(n, n);
  gram.selfadjointView<Eigen::Lower>().rankUpdate(b);

  Eigen::VectorXd s(n);
  for (int i = 0; i < n; ++i) s(i) = std::sqrt(ds.ws[i]);
  const double norm = n_pos > 0 ? 1.0 / n_pos : 0.0;
  Eigen::MatrixXd m = Eigen::MatrixXd(gram.selfadjointView<Eigen::Lower>());
  m = norm * (s.asDiagonal() * m * s.asDiagonal());
  return m;
}

SpectralEstimate fit(const Dataset& ds, const KernelSpec& spec,
                     const FilterSpec& filt, double lambda, SolvePath path) {
  check_dataset(ds);
  if (!(lambda > 0.0)) throw std::invalid_argument("fit: lambda must be > 0");
  if (path == SolvePath::ridge_direct && filt.kind != FilterKind::ridge) {
    throw std::invalid_argument("fit: ridge_direct path needs the ridge filter");
  }

  const int n = ds.size();
  const int n_pos = positive_weight_count(ds);
  if (n_pos == 0) return zero_estimate(ds, spec, filt, lambda);
  const double norm = 1.0 / n_pos;

  const Eigen::MatrixXd phi = feature_matrix(ds.xs, spec);
  const Eigen::VectorXd t = eigenvalue_vector(spec);

  // Gram through its factor B = Phi D^{1/2}: PSD up to roundoff.
  Eigen::MatrixXd b_factor = phi * t.cwiseSqrt().asDiagonal();
  Eigen::MatrixXd gram = Eigen::MatrixXd::Zero(n, n);
  gram.selfadjointView<Eigen::Lower>().rankUpdate(b_factor);
  b_factor.resize(0, 0);

  Eigen::VectorXd s(n);
  for (int i = 0; i < n; ++i) s(i) = std::sqrt(ds.ws[i]);

  // M = (1/n) S K S, in place over the Gram buffer (lower triangle).
  for (int c = 0; c < n; ++c) {
    for (int r = c; r < n; ++r) {
      gram(r, c) *= norm * s(r) * s(c);
    }
  }

  const Eigen::VectorXd sy =
      s.cwiseProduct(Eigen::Map<const Eigen::VectorXd>(ds.ys.data(), n));

  SpectralEstimate est;
  est.anchors = ds.xs;
  est.meta.filter = filt.kind;
  est.meta.lambda = lambda;

  Eigen::VectorXd c(n);
  if (path == SolvePath::ridge_direct) {
    est.meta.spectrum_max = power_iteration_max(gram);
    Eigen::MatrixXd sys = gram.selfadjointView<Eigen::Lower>();
    sys.diagonal().array() += lambda;
    Eigen::LLT<Eigen::MatrixXd> llt(sys);
    if (llt.info() != Eigen::Success) {
      throw std::runtime_error("fit: Cholesky factorization failed");
    }
    const Eigen::VectorXd d = llt.solve(norm * sy);
    c = s.cwiseProduct(d);
  } else {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(
        Eigen::MatrixXd(gram.selfadjointView<Eigen::Lower>()));
    if (es.info() != Eigen::Success) {
      throw std::runtime_error("fit: eigendecomposition failed");
    }
    const Eigen::VectorXd& lam = es.eigenvalues();
    est.meta.spectrum_max = lam(n - 1);
    // Filters see the actual spectrum with no flooring; only roundoff
    // negatives are clamped to the domain boundary t = 0.
    Eigen::VectorXd g(n);
    for (int i = 0; i < n; ++i) {
      g(i) = filter_value(filt, lambda, std::max(lam(i), 0.0));
    }
    c = norm * s.cwiseProduct(
                   es.eigenvectors() *
                   g.cwiseProduct(es.eigenvectors().transpose() * sy));
  }

  est.meta.clip_flag = est.meta.spectrum_max > spec.kappa2;
  est.coeffs.assign(c.data(), c.data() + n);

  const Eigen::VectorXd b = t.cwiseProduct(phi.transpose() * c);
  est.mercer_coeffs.assign(b.data(), b.data() + spec.j_max);
  for (double v : est.coeffs) {
    if (!std::isfinite(v)) throw std::runtime_error("fit: non-finite coefficient");
  }
  return est;
}

SpectralEstimate fit_truncated(const Dataset& ds, const KernelSpec& spec,
                               const FilterSpec& filt, double lambda,
                               const TruncationRule& rule, SolvePath path) {
  const double level = rule.level(ds.size());
  Dataset clipped = ds;
  for (double& w : clipped.ws) w = truncate_ratio(w, level);
  SpectralEstimate est = fit(clipped, spec, filt, lambda, path);
  est.meta.trunc_level = level;
  return est;
}

double predict(const SpectralEstimate& est, const KernelSpec& spec, double x) {
  double sum = 0.0;
  for (std::size_t i = 0; i < est.anchors.size(); ++i) {
    sum += est.coeffs[i] * spec.kernel(x, est.anchors[i]);
  }
  return sum;
}

std::vector<double> predict_many(const SpectralEstimate& est,
                                 const KernelSpec& spec,
                                 std::span<const double> xs) {
  const int n = static_cast<int>(est.anchors.size());
  const Eigen::MatrixXd phi_a = feature_matrix(est.anchors, spec);
  const Eigen::MatrixXd phi_x = feature_matrix(xs, spec);
  const Eigen::VectorXd t = eigenvalue_vector(spec);
  const Eigen::VectorXd c =
      Eigen::Map<const Eigen::VectorXd>(est.coeffs.data(), n);
  const Eigen::VectorXd vals =
      phi_x * (t.asDiagonal() * (phi_a.transpose() * c));
  return {vals.data(), vals.data() + xs.size()};
}

double error_norm(const SpectralEstimate& est, const MercerFunction& f_rho,
                  const KernelSpec& spec, double gamma) {
  if (!(gamma >= 0.0 && gamma <= 1.0)) {
    throw std::invalid_argument("error_norm: gamma must lie in [0,1]");
  }
  if (static_cast<int>(est.mercer_coeffs.size()) != spec.j_max ||
      static_cast<int>(f_rho.coeffs.size()) != spec.j_max) {
    throw std::invalid_argument("error_norm: coefficient length mismatch");
  }
  double sum = 0.0;
  for (int j = 1; j <= spec.j_max; ++j) {
    const double gap = est.mercer_coeffs[j - 1] - f_rho.coeffs[j - 1];
    sum += gap * gap * std::pow(j, gamma * spec.beta);
  }
  return std::sqrt(sum);
}

OperatorNormGuard operator_norm_guard(const FitMeta& meta,
                                      const KernelSpec& spec) {
  return {meta.spectrum_max, spec.kappa2, meta.spectrum_max > spec.kappa2};
}

}  // namespace specshift
