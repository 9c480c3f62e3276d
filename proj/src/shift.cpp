#include "specshift/shift.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <sstream>
#include <stdexcept>

namespace specshift {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
// x below this is handled by the analytic tail of the log_tail CDF; the
// probability mass under it is ~2.5e-13.
constexpr double kXEps = 1e-12;

void check_domain(double x) {
  if (!(x > 0.0 && x <= 1.0)) {
    std::ostringstream msg;
    msg << "x=" << x << " outside the domain (0,1]";
    throw std::invalid_argument(msg.str());
  }
}

struct QuadResult {
  double value = 0.0;
  bool converged = true;
};

double simpson(double a, double fa, double b, double fb, double fm) {
  return (b - a) / 6.0 * (fa + 4.0 * fm + fb);
}

void adaptive_step(const std::function<double(double)>& f, double a, double fa,
                   double b, double fb, double fm, double whole, double tol,
                   int depth, QuadResult& out) {
  const double m = 0.5 * (a + b);
  const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
  const double flm = f(lm), frm = f(rm);
  const double left = simpson(a, fa, m, fm, flm);
  const double right = simpson(m, fm, b, fb, frm);
  const double delta = left + right - whole;
  if (std::abs(delta) <= 15.0 * tol || depth >= 48) {
    out.value += left + right + delta / 15.0;
    if (depth >= 48 && std::abs(delta) > 15.0 * tol) out.converged = false;
    return;
  }
  adaptive_step(f, a, fa, m, fm, flm, left, 0.5 * tol, depth + 1, out);
  adaptive_step(f, m, fm, b, fb, frm, right, 0.5 * tol, depth + 1, out);
}

QuadResult adaptive_simpson(const std::function<double(double)>& f, double a,
                            double b, double rel_tol) {
  QuadResult out;
  const double fa = f(a), fb = f(b), fm = f(0.5 * (a + b));
  const double whole = simpson(a, fa, b, fb, fm);
  const double tol = rel_tol * std::max(1.0, std::abs(whole));
  adaptive_step(f, a, fa, b, fb, fm, whole, tol, 0, out);
  return out;
}

// Composite 5-point Gauss-Legendre on [a,b] with n cells.
double gauss5(const std::function<double(double)>& f, double a, double b,
              int cells) {
  static const double node[5] = {-0.906179845938664, -0.5384693101056831, 0.0,
                                 0.5384693101056831, 0.906179845938664};
  static const double wt[5] = {0.23692688505618908, 0.47862867049936647,
                               0.5688888888888889, 0.47862867049936647,
                               0.23692688505618908};
  const double h = (b - a) / cells;
  double sum = 0.0;
  for (int c = 0; c < cells; ++c) {
    const double mid = a + (c + 0.5) * h;
    double cell = 0.0;
    for (int k = 0; k < 5; ++k) cell += wt[k] * f(mid + 0.5 * h * node[k]);
    sum += 0.5 * h * cell;
  }
  return sum;
}

// int_T^inf (1+t)^{-a} e^{-t} dt by the integration-by-parts asymptotic
// series; three terms suffice for T >= 25.
double upper_tail(double a, double T) {
  const double u = 1.0 + T;
  return std::exp(-T) * std::pow(u, -a) *
         (1.0 - a / u + a * (a + 1.0) / (u * u));
}

double factorial(int m) {
  double f = 1.0;
  for (int k = 2; k <= m; ++k) f *= k;
  return f;
}

}  // namespace

std::string shift_name(ShiftKind kind) {
  switch (kind) {
    case ShiftKind::none: return "none";
    case ShiftKind::bounded_linear: return "bounded_linear";
    case ShiftKind::log_tail: return "log_tail";
  }
  return "?";
}

ShiftScenario ShiftScenario::none() {
  ShiftScenario scn;
  scn.kind_ = ShiftKind::none;
  return scn;
}

ShiftScenario ShiftScenario::bounded_linear() {
  ShiftScenario scn;
  scn.kind_ = ShiftKind::bounded_linear;
  const auto q = adaptive_simpson([](double x) { return 0.5 + x; }, 0.0, 1.0,
                                  1e-13);
  if (!q.converged || std::abs(q.value - 1.0) > 1e-10) {
    throw std::runtime_error("bounded_linear: source density does not normalize");
  }
  return scn;
}

ShiftScenario ShiftScenario::log_tail(double p) {
  if (!(std::isfinite(p) && p >= 1.0)) {
    throw std::invalid_argument("log_tail: p must be finite and >= 1");
  }
  ShiftScenario scn;
  scn.kind_ = ShiftKind::log_tail;
  scn.p_ = p;
  const double a = 1.0 / p;

  // c_p = 1 / int_0^inf (1+t)^{-1/p} e^{-t} dt (t = ln(1/x)).
  const double I =
      gauss5([a](double t) { return std::pow(1.0 + t, -a) * std::exp(-t); },
             0.0, 60.0, 4096) +
      upper_tail(a, 60.0);
  scn.c_norm_ = 1.0 / I;

  // Survival table of T = ln(1/X): surv_[k] = P(T >= t_k), uniform grid.
  scn.t_max_ = std::log(1.0 / kXEps);
  const int cells = 16384;
  scn.surv_.assign(cells + 1, 0.0);
  const double h = scn.t_max_ / cells;
  scn.surv_[cells] = scn.c_norm_ * upper_tail(a, scn.t_max_);
  const double c = scn.c_norm_;
  for (int k = cells - 1; k >= 0; --k) {
    const double lo = k * h, hi = (k + 1) * h;
    scn.surv_[k] =
        scn.surv_[k + 1] +
        gauss5([c, a](double t) { return c * std::pow(1.0 + t, -a) * std::exp(-t); },
               lo, hi, 1);
  }

  // Independent normalization route: adaptive x-space quadrature of q plus
  // the analytic sub-eps tail.
  const auto q = adaptive_simpson(
      [&scn](double x) { return scn.density(x); }, kXEps, 1.0, 1e-13);
  const double total = q.value + scn.c_norm_ * upper_tail(a, scn.t_max_);
  if (!q.converged || std::abs(total - 1.0) > 1e-10) {
    std::ostringstream msg;
    msg << "log_tail(p=" << p << "): source density integrates to " << total;
    throw std::runtime_error(msg.str());
  }
  return scn;
}

double ShiftScenario::density(double x) const {
  check_domain(x);
  switch (kind_) {
    case ShiftKind::none: return 1.0;
    case ShiftKind::bounded_linear: return 0.5 + x;
    case ShiftKind::log_tail:
      return c_norm_ * std::pow(1.0 + std::log(1.0 / x), -1.0 / p_);
  }
  throw std::logic_error("unreachable shift kind");
}

double ShiftScenario::density_ratio(double x) const {
  check_domain(x);
  switch (kind_) {
    case ShiftKind::none: return 1.0;
    case ShiftKind::bounded_linear: return 1.0 / (0.5 + x);
    case ShiftKind::log_tail:
      return std::pow(1.0 + std::log(1.0 / x), 1.0 / p_) / c_norm_;
  }
  throw std::logic_error("unreachable shift kind");
}

double ShiftScenario::sup_ratio() const {
  switch (kind_) {
    case ShiftKind::none: return 1.0;
    case ShiftKind::bounded_linear: return 2.0;  // w(0+) = 1/(1/2)
    case ShiftKind::log_tail: return kInf;
  }
  throw std::logic_error("unreachable shift kind");
}

double ShiftScenario::sample(Rng& rng) const {
  const double u = rng.uniform01();
  switch (kind_) {
    case ShiftKind::none:
      return 1.0 - u;  // maps [0,1) onto (0,1]
    case ShiftKind::bounded_linear: {
      // CDF x/2 + x^2/2; root of x^2 + x - 2u' = 0 with u' = 1-u in (0,1].
      const double up = 1.0 - u;
      return 0.5 * (-1.0 + std::sqrt(1.0 + 8.0 * up));
    }
    case ShiftKind::log_tail: {
      // F_X(x) = P(T >= ln(1/x)); solve surv(t) = u by bisection on the
      // cached table, linear within the bracketing cell.
      if (u <= surv_.back()) return kXEps;
      const int cells = static_cast<int>(surv_.size()) - 1;
      int lo = 0, hi = cells;  // surv_[lo] >= u > surv_[hi]
      while (hi - lo > 1) {
        const int mid = (lo + hi) / 2;
        if (surv_[mid] >= u) {
          lo = mid;
        } else {
          hi = mid;
        }
      }
      const double h = t_max_ / cells;
      const double span = surv_[lo] - surv_[hi];
      const double frac = span > 0.0 ? (surv_[lo] - u) / span : 0.0;
      const double t = (lo + frac) * h;
      return std::exp(-t);
    }
  }
  throw std::logic_error("unreachable shift kind");
}

double ShiftScenario::cdf(double x) const {
  check_domain(x);
  switch (kind_) {
    case ShiftKind::none: return x;
    case ShiftKind::bounded_linear: return 0.5 * x + 0.5 * x * x;
    case ShiftKind::log_tail: {
      const double t = std::log(1.0 / x);
      if (t >= t_max_) return surv_.back();
      const int cells = static_cast<int>(surv_.size()) - 1;
      const double h = t_max_ / cells;
      const int k = std::min(static_cast<int>(t / h), cells - 1);
      const double frac = (t - k * h) / h;
      return surv_[k] + frac * (surv_[k + 1] - surv_[k]);
    }
  }
  throw std::logic_error("unreachable shift kind");
}

double truncate_ratio(double w_value, double D) {
  if (!(w_value >= 0.0)) {
    throw std::invalid_argument("truncate_ratio: w must be >= 0");
  }
  if (!(D > 0.0)) {
    throw std::invalid_argument("truncate_ratio: D must be > 0");
  }
  return std::min(w_value, D);
}

double nu_exponent(double p, int m) {
  if (!std::isfinite(p)) {
    throw std::invalid_argument(
        "nu_exponent: the truncation schedule needs finite p (p in [1,inf))");
  }
  if (!(p >= 1.0)) {
    throw std::invalid_argument("nu_exponent: p must be >= 1");
  }
  if (m < 2) {
    throw std::invalid_argument("nu_exponent: m must be >= 2");
  }
  return 1.0 / (p * (m - 1) + 1.0);
}

TruncationRule TruncationRule::from_moment(double p, int m) {
  return {m, nu_exponent(p, m)};
}

double TruncationRule::level(int n) const {
  if (n < 1) throw std::invalid_argument("TruncationRule: n must be >= 1");
  return std::pow(static_cast<double>(n), nu);
}

namespace {

// lhs of the moment condition for one m.
QuadResult moment_lhs(const ShiftScenario& scn, double p, int m) {
  QuadResult out;
  if (!std::isfinite(p)) {
    if (scn.kind() == ShiftKind::log_tail) {
      throw std::invalid_argument(
          "moment_check: p = inf needs a bounded density ratio");
    }
    out.value = std::pow(scn.sup_ratio(), m - 1);
    return out;
  }
  switch (scn.kind()) {
    case ShiftKind::none:
      out.value = 1.0;
      return out;
    case ShiftKind::bounded_linear: {
      const double e = p * (m - 1);
      auto q = adaptive_simpson(
          [e](double x) { return std::pow(0.5 + x, -e); }, 0.0, 1.0, 1e-12);
      out.value = std::pow(q.value, 1.0 / p);
      out.converged = q.converged;
      return out;
    }
    case ShiftKind::log_tail: {
      // In t = ln(1/x) coordinates the integrand is
      // c^{-p(m-1)} (1+t)^{m-1} e^{-t}.
      const double c = scn.c_norm();
      const int k = m - 1;
      auto q = adaptive_simpson(
          [k](double t) { return std::pow(1.0 + t, k) * std::exp(-t); }, 0.0,
          120.0, 1e-12);
      out.value = std::pow(std::pow(c, -p * k) * q.value, 1.0 / p);
      out.converged = q.converged;
      return out;
    }
  }
  throw std::logic_error("unreachable shift kind");
}

}  // namespace

MomentReport moment_check(const ShiftScenario& scn, double p, int m_max,
                          double L, double sigma) {
  if (m_max < 2) throw std::invalid_argument("moment_check: m_max must be >= 2");
  if (!(L > 0.0) || !(sigma > 0.0)) {
    throw std::invalid_argument("moment_check: L and sigma must be > 0");
  }
  MomentReport report;
  for (int m = 2; m <= m_max; ++m) {
    MomentCheckRow row;
    row.scenario = shift_name(scn.kind());
    row.p = p;
    row.m = m;
    const auto lhs = moment_lhs(scn, p, m);
    row.lhs = lhs.value;
    row.conclusive = lhs.converged;
    row.rhs = 0.5 * factorial(m) * std::pow(L, m - 2) * sigma * sigma;
    row.margin = row.rhs - row.lhs;
    row.pass = lhs.converged &&
               row.lhs <= row.rhs + 1e-12 * std::max(1.0, row.rhs);
    if (!row.pass) report.all_pass = false;
    if (!row.conclusive) report.all_conclusive = false;
    report.rows.push_back(row);
  }
  return report;
}

std::pair<double, double> fit_moment_constants(const ShiftScenario& scn,
                                               double p, int m_max) {
  if (m_max < 2) throw std::invalid_argument("fit: m_max must be >= 2");
  std::vector<double> lhs(m_max + 1, 0.0);
  for (int m = 2; m <= m_max; ++m) {
    const auto q = moment_lhs(scn, p, m);
    if (!q.converged) {
      throw std::runtime_error("fit_moment_constants: quadrature did not converge");
    }
    lhs[m] = q.value;
  }
  double best_L = 1.0, best_sigma2 = kInf, best_score = kInf;
  const int grid = 96;
  for (int g = 0; g <= grid; ++g) {
    const double L =
        std::exp(std::log(0.05) + (std::log(10.0) - std::log(0.05)) * g / grid);
    double sigma2 = 0.0;
    for (int m = 2; m <= m_max; ++m) {
      sigma2 = std::max(sigma2,
                        2.0 * lhs[m] / (factorial(m) * std::pow(L, m - 2)));
    }
    const double score = std::max(L, sigma2);
    if (score < best_score) {
      best_score = score;
      best_L = L;
      best_sigma2 = sigma2;
    }
  }
  return {best_L, std::sqrt(best_sigma2)};
}

std::pair<double, double> tail_fit_constants(const ShiftScenario& scn) {
  switch (scn.kind()) {
    case ShiftKind::none:
      return {1.0, 1.0};
    case ShiftKind::bounded_linear:
      return {2.0, std::sqrt(2.0)};  // L = sigma^2 = ||w||_inf
    case ShiftKind::log_tail: {
      const double L = std::pow(scn.c_norm(), -scn.p());
      return {L, std::sqrt(2.0 * std::exp(1.0))};
    }
  }
  throw std::logic_error("unreachable shift kind");
}

Dataset generate_dataset(const ShiftScenario& scn, const MercerFunction& f_rho,
                         const KernelSpec& spec, int n, double noise_bound,
                         Rng& rng) {
  if (n < 1) throw std::invalid_argument("generate_dataset: n must be >= 1");
  if (!(noise_bound >= 0.0)) {
    throw std::invalid_argument("generate_dataset: noise_bound must be >= 0");
  }
  Dataset ds;
  ds.xs.resize(n);
  ds.ys.resize(n);
  ds.ws.resize(n);
  for (int i = 0; i < n; ++i) {
    const double x = scn.sample(rng);
    const double eta = rng.uniform(-noise_bound, noise_bound);
    ds.xs[i] = x;
    ds.ys[i] = f_rho.evaluate(spec, x) + eta;
    ds.ws[i] = scn.density_ratio(x);
  }
  return ds;
}

}  // namespace specshift
