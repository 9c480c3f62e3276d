#include <doctest.h>

#include <cmath>
#include <stdexcept>
#include <numbers>
#include <random>

#include <Eigen/Dense>

#include "oracles.hpp"
#include "specshift/mercer.hpp"

using namespace specshift;

TEST_CASE("eigenvalues follow the polynomial decay exactly") {
  const auto spec = KernelSpec::make(2.0, 64);
  CHECK(spec.eigenvalue(1) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(spec.eigenvalue(2) == doctest::Approx(0.25).epsilon(1e-15));
  const auto spec15 = KernelSpec::make(1.5, 64);
  CHECK(spec15.eigenvalue(4) == doctest::Approx(0.125).epsilon(1e-15));
  for (int j = 2; j <= 64; ++j) {
    CHECK(spec.eigenvalue(j) < spec.eigenvalue(j - 1));
    CHECK(spec.eigenvalue(j) > 0.0);
  }
  CHECK_THROWS_AS(spec.eigenvalue(0), std::out_of_range);
  CHECK_THROWS_AS(spec.eigenvalue(65), std::out_of_range);
}

TEST_CASE("construction rejects non-trace-class decay") {
  CHECK_THROWS_AS(KernelSpec::make(1.0, 16), std::invalid_argument);
  CHECK_THROWS_AS(KernelSpec::make(0.5, 16), std::invalid_argument);
  CHECK_THROWS_AS(KernelSpec::make(2.0, 0), std::invalid_argument);
  const auto spec = KernelSpec::make(2.0, 4096);
  CHECK(spec.kappa2 >= 1.0);
  CHECK(std::isfinite(spec.kappa2));
}

TEST_CASE("eigenfunction values and orthonormality") {
  const auto spec = KernelSpec::make(2.0, 8);
  CHECK(spec.eigenfunction(1, 0.0) ==
        doctest::Approx(std::numbers::sqrt2).epsilon(1e-14));
  CHECK(spec.eigenfunction(2, 0.5) ==
        doctest::Approx(-std::numbers::sqrt2).epsilon(1e-14));

  // Quadrature oracle, >= 1024-point rule: int e_j e_k = delta_jk.
  for (int j = 1; j <= 8; ++j) {
    for (int k = j; k <= 8; ++k) {
      const double integral = oracles::simpson_grid(
          [&](double x) {
            return spec.eigenfunction(j, x) * spec.eigenfunction(k, x);
          },
          0.0, 1.0, 4096);
      CHECK(std::abs(integral - (j == k ? 1.0 : 0.0)) < 1e-10);
    }
  }
}

TEST_CASE("kernel diagonal matches the zeta series at large truncation") {
  const auto spec = KernelSpec::make(2.0, 10000);
  // 2 * zeta(2) = pi^2 / 3 at x = x' = 0.
  const double target = std::numbers::pi * std::numbers::pi / 3.0;
  CHECK(std::abs(spec.kernel(0.0, 0.0) - target) < 1e-3);
  CHECK(spec.kernel(0.0, 0.0) ==
        doctest::Approx(2.0 * oracles::zeta_partial(2.0, 10000)).epsilon(1e-13));
}

TEST_CASE("kernel symmetry and Gram positive semi-definiteness") {
  const auto spec = KernelSpec::make(1.7, 256);
  std::mt19937_64 gen(7);
  auto u01 = [&] { return (gen() >> 11) * 0x1.0p-53; };
  for (int rep = 0; rep < 50; ++rep) {
    const double x = u01(), y = u01();
    CHECK(spec.kernel(x, y) == doctest::Approx(spec.kernel(y, x)).epsilon(1e-13));
  }
  CHECK(spec.kernel(0.3, 0.3) >= 0.0);

  // Dense eigensolver oracle on random point sets.
  for (int rep = 0; rep < 100; ++rep) {
    const int n = 2 + int(u01() * 48);
    Eigen::MatrixXd gram(n, n);
    std::vector<double> xs(n);
    for (auto& x : xs) x = u01();
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j <= i; ++j) {
        gram(i, j) = gram(j, i) = spec.kernel(xs[i], xs[j]);
      }
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(gram);
    CHECK(es.eigenvalues().minCoeff() >= -1e-10);
  }
}

TEST_CASE("kernel diagonal bounded by kappa^2 on a dense grid") {
  const auto spec = KernelSpec::make(2.0, 512);
  double sup = 0.0;
  for (int g = 0; g <= 10000; ++g) {
    sup = std::max(sup, spec.kernel(g / 10000.0, g / 10000.0));
  }
  CHECK(sup <= spec.kappa2 * (1 + 1e-12));
  CHECK(sup == doctest::Approx(spec.kappa2).epsilon(1e-12));  // attained at 0
}

TEST_CASE("interpolation norms: unit coefficients and monotonicity") {
  const auto spec = KernelSpec::make(2.0, 32);
  MercerFunction e1{{1.0}};
  CHECK(interp_norm(e1, spec, 0.0) == doctest::Approx(1.0));
  CHECK(interp_norm(e1, spec, 0.5) == doctest::Approx(1.0));
  CHECK(interp_norm(e1, spec, 1.0) == doctest::Approx(1.0));

  MercerFunction e2{{0.0, 1.0}};
  CHECK(interp_norm(e2, spec, 1.0) == doctest::Approx(2.0).epsilon(1e-14));

  std::mt19937_64 gen(11);
  auto u01 = [&] { return (gen() >> 11) * 0x1.0p-53; };
  for (int rep = 0; rep < 1000; ++rep) {
    MercerFunction f;
    f.coeffs.resize(32);
    for (auto& a : f.coeffs) a = 2.0 * u01() - 1.0;
    const double g1 = u01(), g2 = u01();
    const double lo = std::min(g1, g2), hi = std::max(g1, g2);
    CHECK(interp_norm(f, spec, lo) <= interp_norm(f, spec, hi) * (1 + 1e-12));
  }
  CHECK_THROWS_AS(interp_norm(e1, spec, 1.5), std::invalid_argument);
  CHECK_THROWS_AS(interp_norm(e1, spec, -0.1), std::invalid_argument);
}

TEST_CASE("source construction: coefficients, G bound, isometry") {
  const auto spec = KernelSpec::make(2.0, 2048);
  const auto src = make_source_function(spec, {0.5, 0.05, 1.0});
  CHECK(src.f.coeffs[0] == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(src.f.coeffs[1] ==
        doctest::Approx(std::pow(2.0, -1.55)).epsilon(1e-15));
  CHECK(src.f.coeffs[1] == doctest::Approx(0.34151).epsilon(1e-4));
  CHECK(src.g_bound > 0.0);
  CHECK(src.u_norm > 0.0);

  // ||f_rho||_{[H]^{2r}} = ||u_rho|| (coefficient isometry), 2r = 1 here.
  CHECK(interp_norm(src.f, spec, 2.0 * src.r) ==
        doctest::Approx(src.u_norm).epsilon(1e-12));

  // Same identity for a random u and r = 0.35.
  std::mt19937_64 gen(3);
  auto u01 = [&] { return (gen() >> 11) * 0x1.0p-53; };
  const auto small = KernelSpec::make(2.0, 64);
  MercerFunction f;
  f.coeffs.resize(64);
  double u_sq = 0.0;
  const double r = 0.35;
  for (int j = 1; j <= 64; ++j) {
    const double u = 2.0 * u01() - 1.0;
    u_sq += u * u;
    f.coeffs[j - 1] = std::pow(small.eigenvalue(j), r) * u;
  }
  CHECK(interp_norm(f, small, 2.0 * r) ==
        doctest::Approx(std::sqrt(u_sq)).epsilon(1e-12));
}

TEST_CASE("source construction rejects non-summable coefficient decay") {
  const auto spec = KernelSpec::make(2.0, 64);
  // beta*r + 1/2 + eps_u = 0.95 < 1.
  CHECK_THROWS_WITH_AS(make_source_function(spec, {0.2, 0.05, 1.0}),
                       doctest::Contains("must exceed 1"),
                       std::invalid_argument);
  CHECK_THROWS_AS(make_source_function(spec, {-0.5, 0.05, 1.0}),
                  std::invalid_argument);
}

TEST_CASE("sup-norm bound actually bounds the function") {
  const auto spec = KernelSpec::make(2.0, 512);
  const auto src = make_source_function(spec, {0.5, 0.05, 1.0});
  double sup = 0.0;
  for (int g = 0; g <= 2000; ++g) {
    sup = std::max(sup, std::abs(src.f.evaluate(spec, g / 2000.0)));
  }
  CHECK(sup <= src.g_bound * (1 + 1e-12));
}

TEST_CASE("effective dimension: limits, closed form, sandwich") {
  const auto spec = KernelSpec::make(2.0, 10000);
  // lambda -> inf kills every term.
  CHECK(spec.effective_dimension(1e9) < 2e-9 * 1.6449340668482264);

  // Closed-form series oracle at lambda = 0.01.
  const double oracle = oracles::effective_dim_closed_form_beta2(0.01);
  CHECK(oracle == doctest::Approx(15.2079633).epsilon(1e-7));
  CHECK(std::abs(spec.effective_dimension(0.01) - oracle) < 0.01);

  // N(lambda) * lambda^{1/beta} stays within a bounded band; the empirical
  // constants are recorded alongside the assertion.
  for (double beta : {1.5, 2.0, 3.0}) {
    const auto k = KernelSpec::make(beta, 10000);
    double lo = 1e300, hi = 0.0;
    for (int i = 0; i <= 24; ++i) {
      const double lambda = 1e-4 * std::pow(1e3, i / 24.0);
      const double ratio =
          k.effective_dimension(lambda) * std::pow(lambda, 1.0 / beta);
      lo = std::min(lo, ratio);
      hi = std::max(hi, ratio);
    }
    MESSAGE("beta=", beta, ": N(lambda) lambda^{1/beta} in [", lo, ", ", hi, "]");
    CHECK(lo >= 0.3);
    CHECK(hi <= 3.0);
  }
  CHECK_THROWS_AS(spec.effective_dimension(0.0), std::invalid_argument);
}

TEST_CASE("embedding norm: zeta values, kappa identity, monotonicity") {
  const auto spec = KernelSpec::make(2.0, 10000);
  // At alpha = 1 this is exactly kappa.
  CHECK(spec.embedding_norm(1.0) ==
        doctest::Approx(std::sqrt(spec.kappa2)).epsilon(1e-12));
  CHECK(std::abs(spec.embedding_norm(1.0) -
                 std::sqrt(std::numbers::pi * std::numbers::pi / 3.0)) < 1e-3);

  // Partial-sum zeta oracle at the same truncation.
  CHECK(spec.embedding_norm(0.75) ==
        doctest::Approx(std::sqrt(2.0 * oracles::zeta_partial(1.5, 10000)))
            .epsilon(1e-12));
  CHECK(std::abs(spec.embedding_norm(0.75) - 2.28587) < 0.01);

  // Nonincreasing in alpha.
  double prev = spec.embedding_norm(0.55);
  for (double alpha : {0.65, 0.75, 0.85, 1.0}) {
    const double cur = spec.embedding_norm(alpha);
    CHECK(cur <= prev * (1 + 1e-12));
    prev = cur;
  }
  CHECK_THROWS_AS(spec.embedding_norm(0.5), std::invalid_argument);
  CHECK_THROWS_AS(spec.embedding_norm(0.2), std::invalid_argument);
}
