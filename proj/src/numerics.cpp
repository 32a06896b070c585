#include "intervalbf/numerics.hpp"

#include <boost/math/special_functions/beta.hpp>
#include <boost/math/special_functions/erf.hpp>

namespace intervalbf::numerics {

void QuadratureSettings::validate() const {
  if (!(rel_tol > 0.0)) throw DomainError("quadrature rel_tol must be > 0");
  if (!(abs_tol >= 0.0)) throw DomainError("quadrature abs_tol must be >= 0");
  if (max_subdivisions < 1)
    throw DomainError("quadrature max_subdivisions must be >= 1");
  if (!(tail_cut > 0.0)) throw DomainError("quadrature tail_cut must be > 0");
}

double erfc(double x) { return std::erfc(x); }

double erfc_inv(double p) {
  if (!(p > 0.0 && p < 2.0))
    throw DomainError("erfc_inv: argument must lie in (0, 2), got " +
                      std::to_string(p));
  return boost::math::erfc_inv(p);
}

double normal_pdf(double x) { return std::exp(log_normal_pdf(x)); }

double log_normal_pdf(double x) { return -0.5 * x * x - kLogSqrt2Pi; }

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

double log_gamma(double x) {
#if defined(__GLIBC__)
  int sign = 0;
  return ::lgamma_r(x, &sign);
#else
  return std::lgamma(x);
#endif
}

namespace {

void check_nu(double nu) {
  if (!(nu > 0.0) || !std::isfinite(nu))
    throw DomainError("degrees of freedom must be positive and finite, got " +
                      std::to_string(nu));
}

// log ∫₀^∞ u^ν exp(-u²/2 + z u) du.
double log_chi_scale_integral(double nu, double z) {
  if (z == 0.0)
    return 0.5 * (nu - 1.0) * std::log(2.0) + log_gamma(0.5 * (nu + 1.0));

  // h(u) = ν log u - u²/2 + z u is strictly concave; h'' = -ν/u² - 1.
  const double mode = 0.5 * (z + std::sqrt(z * z + 4.0 * nu));
  const auto h = [nu, z](double u) { return nu * std::log(u) - 0.5 * u * u + z * u; };
  const double peak = h(mode);
  const double sd = 1.0 / std::sqrt(nu / (mode * mode) + 1.0);

  // Walk out from the mode until the integrand has dropped by e^-40; by
  // concavity the discarded tails are negligible at double precision.
  constexpr double kDrop = 40.0;
  double reach = sd;
  while (peak - h(mode + reach) < kDrop) reach *= 2.0;
  const double right = mode + reach;
  double left = 0.0;
  for (double step = sd; step < mode; step *= 2.0) {
    if (peak - h(mode - step) >= kDrop) {
      left = mode - step;
      break;
    }
  }

  auto shifted = [&](double u) { return u > 0.0 ? std::exp(h(u) - peak) : 0.0; };
  QuadratureSettings inner;
  inner.rel_tol = 1e-12;
  inner.abs_tol = 0.0;
  inner.max_subdivisions = 200;
  const std::array<double, 4> pts = {mode - 4.0 * sd, mode - 1.5 * sd, mode + 1.5 * sd,
                                     mode + 4.0 * sd};
  const auto r = integrate(shifted, left, right, inner, pts);
  return peak + std::log(r.value);
}

}  // namespace

double log_nct_pdf(double t, TDistParams params) {
  check_nu(params.nu);
  if (!std::isfinite(t)) throw DomainError("log_nct_pdf: t must be finite");
  if (!std::isfinite(params.lambda))
    throw DomainError("log_nct_pdf: noncentrality must be finite");
  const double nu = params.nu, lambda = params.lambda;
  const double q = t * t + nu;
  const double z = t * lambda / std::sqrt(q);
  const double log_const = -kLogSqrt2Pi + (1.0 - 0.5 * nu) * std::log(2.0) +
                           0.5 * nu * std::log(nu) - log_gamma(0.5 * nu);
  return log_const - 0.5 * lambda * lambda - 0.5 * (nu + 1.0) * std::log(q) +
         log_chi_scale_integral(nu, z);
}

double student_t_cdf(double t, double nu) {
  check_nu(nu);
  if (std::isnan(t)) throw DomainError("student_t_cdf: t is NaN");
  if (t == kInf) return 1.0;
  if (t == -kInf) return 0.0;
  if (t == 0.0) return 0.5;
  // P(T < -|t|) = ½ I_{ν/(ν+t²)}(ν/2, ½)
  const double x = nu / (nu + t * t);
  const double lower_tail = 0.5 * boost::math::ibeta(0.5 * nu, 0.5, x);
  return t < 0.0 ? lower_tail : 1.0 - lower_tail;
}

double student_t_quantile(double p, double nu) {
  check_nu(nu);
  if (!(p > 0.0 && p < 1.0))
    throw DomainError("student_t_quantile: p must lie in (0, 1)");
  if (p == 0.5) return 0.0;
  double hi = 1.0;
  const double target = std::max(p, 1.0 - p);
  while (student_t_cdf(hi, nu) < target) hi *= 2.0;
  const double x = find_root([&](double v) { return student_t_cdf(v, nu) - target; },
                             0.0, hi, 1e-13);
  return p < 0.5 ? -x : x;
}

double log_sum_exp(std::span<const double> xs) {
  double top = -kInf;
  for (double x : xs) top = std::max(top, x);
  if (top == -kInf) return -kInf;
  if (top == kInf) return kInf;
  double acc = 0.0;
  for (double x : xs) acc += std::exp(x - top);
  return top + std::log(acc);
}

double find_root(const std::function<double(double)>& g, double lo, double hi,
                 double tol, int max_iter) {
  if (!(tol > 0.0)) throw DomainError("find_root: tol must be > 0");
  double a = lo, b = hi;
  double fa = g(a), fb = g(b);
  if (std::isnan(fa) || std::isnan(fb))
    throw DomainError("find_root: function is NaN at the bracket ends");
  if (fa == 0.0) return a;
  if (fb == 0.0) return b;
  if ((fa > 0.0) == (fb > 0.0))
    throw BracketError("find_root: no sign change on [" + std::to_string(lo) +
                       ", " + std::to_string(hi) + "]");

  double c = a, fc = fa;
  double d = b - a, e = d;
  for (int iter = 0; iter < max_iter; ++iter) {
    if ((fb > 0.0) == (fc > 0.0)) {
      c = a;
      fc = fa;
      d = e = b - a;
    }
    if (std::abs(fc) < std::abs(fb)) {
      a = b;
      b = c;
      c = a;
      fa = fb;
      fb = fc;
      fc = fa;
    }
    const double tol1 =
        2.0 * std::numeric_limits<double>::epsilon() * std::abs(b) + 0.5 * tol;
    const double m = 0.5 * (c - b);
    if (std::abs(m) <= tol1 || fb == 0.0) return b;

    if (std::abs(e) >= tol1 && std::abs(fa) > std::abs(fb)) {
      double p, q;
      const double s = fb / fa;
      if (a == c) {
        p = 2.0 * m * s;
        q = 1.0 - s;
      } else {
        const double qa = fa / fc, r = fb / fc;
        p = s * (2.0 * m * qa * (qa - r) - (b - a) * (r - 1.0));
        q = (qa - 1.0) * (r - 1.0) * (s - 1.0);
      }
      if (p > 0.0)
        q = -q;
      else
        p = -p;
      if (2.0 * p < std::min(3.0 * m * q - std::abs(tol1 * q), std::abs(e * q))) {
        e = d;
        d = p / q;
      } else {
        d = m;
        e = m;
      }
    } else {
      d = m;
      e = m;
    }
    a = b;
    fa = fb;
    b += std::abs(d) > tol1 ? d : (m > 0.0 ? tol1 : -tol1);
    fb = g(b);
    if (std::isnan(fb)) throw DomainError("find_root: function returned NaN");
  }
  throw ConvergenceError("find_root: iteration limit reached", b, std::abs(c - b));
}

}  // namespace intervalbf::numerics
