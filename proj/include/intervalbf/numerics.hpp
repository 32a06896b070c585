#ifndef INTERVALBF_NUMERICS_HPP
#define INTERVALBF_NUMERICS_HPP

// Numerical substrate: special functions, Student t / noncentral t densities,
// globally adaptive Gauss-Kronrod quadrature over (possibly unbounded)
// intervals, and a bracketing root finder.

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <limits>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "intervalbf/error.hpp"

namespace intervalbf::numerics {

inline constexpr double kInf = std::numeric_limits<double>::infinity();
inline constexpr double kPi = 3.141592653589793238462643383279502884;
inline constexpr double kLogSqrt2Pi = 0.918938533204672741780329736405617639;

struct QuadratureSettings {
  double rel_tol = 1e-8;
  double abs_tol = 1e-12;
  int max_subdivisions = 200;
  // Half-width, in units of the likelihood's standard error, of the window
  // the marginal-likelihood integrals are truncated to. Beyond 20 standard
  // errors a Gaussian-decaying integrand is below e^-200 of its peak.
  double tail_cut = 20.0;

  void validate() const;
};

struct TDistParams {
  double nu;
  double lambda = 0.0;
};

struct QuadratureResult {
  double value = 0.0;
  double err_est = 0.0;
  int subdivisions = 0;
};

// --- special functions -----------------------------------------------------

double erfc(double x);
/// Inverse of erfc on (0, 2).
double erfc_inv(double p);

double normal_pdf(double x);
double log_normal_pdf(double x);
double normal_cdf(double x);

/// log Γ(x) for x > 0 without touching the global signgam.
double log_gamma(double x);

// --- t distributions ---------------------------------------------------------

/// Log-density of the noncentral t distribution t(ν, λ).
///
/// Evaluated as a one-dimensional integral over the chi scale,
///   f(t) ∝ e^{-λ²/2} (t²+ν)^{-(ν+1)/2} ∫₀^∞ u^ν exp(-u²/2 + z u) du,
///   z = tλ / √(t²+ν),
/// whose integrand is strictly log-concave, so it is integrated around its
/// mode in log space. No alternating series, hence no cancellation for
/// tλ < 0.
double log_nct_pdf(double t, TDistParams params);

double student_t_cdf(double t, double nu);
double student_t_quantile(double p, double nu);

// --- reductions --------------------------------------------------------------

/// log Σ exp(x_i), -inf for an empty span.
double log_sum_exp(std::span<const double> xs);

// --- quadrature ----------------------------------------------------------------

namespace detail {

// 21-point Kronrod extension of the 10-point Gauss rule (QUADPACK qk21).
inline constexpr std::array<double, 11> kKronrodNodes = {
    0.995657163025808080735527280689003, 0.973906528517171720077964012084452,
    0.930157491355708226001207180059508, 0.865063366688984510732096688423493,
    0.780817726586416897063717578345042, 0.679409568299024406234327365114874,
    0.562757134668604683339000099272694, 0.433395394129247190799265943165784,
    0.294392862701460198131126603103866, 0.148874338981631210884826001129720,
    0.000000000000000000000000000000000};

inline constexpr std::array<double, 11> kKronrodWeights = {
    0.011694638867371874278064396062192, 0.032558162307964727478818972459390,
    0.054755896574351996031381300244580, 0.075039674810919952767043140916190,
    0.093125454583697605535065465083366, 0.109387158802297641899210590325805,
    0.123491976262065851077208686264322, 0.134709217311473325928054001771707,
    0.142775938577060080797094273138717, 0.147739104901338491374841515972068,
    0.149445554002916905664936468389821};

// Gauss weights for the odd-indexed Kronrod nodes 1, 3, 5, 7, 9.
inline constexpr std::array<double, 5> kGaussWeights = {
    0.066671344308688137593568809893332, 0.149451349150580593145776339657697,
    0.219086362515982043995534934228163, 0.269266719309996355091226921569469,
    0.295524224714752870173892994651338};

struct Panel {
  double a, b, value, err;
};

inline bool by_error(const Panel& lhs, const Panel& rhs) {
  return lhs.err < rhs.err;
}

template <typename F>
Panel gauss_kronrod_21(F& f, double a, double b) {
  const double center = 0.5 * (a + b);
  const double half = 0.5 * (b - a);
  const double fc = f(center);
  double kronrod = fc * kKronrodWeights[10];
  double gauss = 0.0;
  double abs_sum = std::abs(kronrod);
  std::array<double, 10> f1{}, f2{};
  for (std::size_t j = 0; j < 10; ++j) {
    const double dx = half * kKronrodNodes[j];
    f1[j] = f(center - dx);
    f2[j] = f(center + dx);
    const double pair = f1[j] + f2[j];
    kronrod += kKronrodWeights[j] * pair;
    abs_sum += kKronrodWeights[j] * (std::abs(f1[j]) + std::abs(f2[j]));
    if (j % 2 == 1) gauss += kGaussWeights[j / 2] * pair;
  }
  // Mean-absolute-deviation scale used by the QUADPACK error heuristic.
  const double mean = 0.5 * kronrod;
  double asc = kKronrodWeights[10] * std::abs(fc - mean);
  for (std::size_t j = 0; j < 10; ++j)
    asc += kKronrodWeights[j] * (std::abs(f1[j] - mean) + std::abs(f2[j] - mean));

  const double value = kronrod * half;
  asc *= std::abs(half);
  abs_sum *= std::abs(half);
  double err = std::abs((kronrod - gauss) * half);
  if (asc != 0.0 && err != 0.0)
    err = asc * std::min(1.0, std::pow(200.0 * err / asc, 1.5));
  constexpr double eps = std::numeric_limits<double>::epsilon();
  if (abs_sum > std::numeric_limits<double>::min() / (50.0 * eps))
    err = std::max(50.0 * eps * abs_sum, err);
  if (!std::isfinite(value))
    throw DomainError("integrand is not finite on [" + std::to_string(a) +
                      ", " + std::to_string(b) + "]");
  return {a, b, value, err};
}

template <typename F>
QuadratureResult integrate_finite(F& f, std::span<const double> breaks,
                                  const QuadratureSettings& s) {
  std::vector<Panel> heap;
  heap.reserve(static_cast<std::size_t>(s.max_subdivisions) + breaks.size());
  double total = 0.0, total_err = 0.0;
  for (std::size_t i = 0; i + 1 < breaks.size(); ++i) {
    if (!(breaks[i + 1] > breaks[i])) continue;
    heap.push_back(gauss_kronrod_21(f, breaks[i], breaks[i + 1]));
    total += heap.back().value;
    total_err += heap.back().err;
  }
  std::make_heap(heap.begin(), heap.end(), by_error);
  int splits = 0;
  constexpr double eps = std::numeric_limits<double>::epsilon();
  while (total_err > std::max(s.rel_tol * std::abs(total), s.abs_tol)) {
    std::pop_heap(heap.begin(), heap.end(), by_error);
    const Panel worst = heap.back();
    heap.pop_back();
    const double mid = 0.5 * (worst.a + worst.b);
    const bool too_narrow =
        !(mid > worst.a && mid < worst.b) ||
        (worst.b - worst.a) <= 4.0 * eps * std::max(std::abs(worst.a), std::abs(worst.b));
    if (splits >= s.max_subdivisions || too_narrow) {
      heap.push_back(worst);
      throw ConvergenceError("adaptive quadrature did not reach tolerance after " +
                                 std::to_string(splits) + " subdivisions",
                             total, total_err);
    }
    const Panel left = gauss_kronrod_21(f, worst.a, mid);
    const Panel right = gauss_kronrod_21(f, mid, worst.b);
    total += left.value + right.value - worst.value;
    total_err += left.err + right.err - worst.err;
    heap.push_back(left);
    std::push_heap(heap.begin(), heap.end(), by_error);
    heap.push_back(right);
    std::push_heap(heap.begin(), heap.end(), by_error);
    ++splits;
  }
  // Re-sum to shed the drift of the running updates.
  total = 0.0;
  total_err = 0.0;
  for (const auto& p : heap) {
    total += p.value;
    total_err += p.err;
  }
  return {total, total_err, splits};
}

}  // namespace detail

/// Globally adaptive Gauss-Kronrod (G10/K21) integration of f over
/// [lower, upper]. Either bound may be infinite; unbounded ends are mapped onto
/// a finite interval with x = a + s/(1-s) or x = s/(1-s²). `breaks` are
/// optional interior points that seed the initial panels (finite bounds only).
///
/// Throws ConvergenceError carrying the partial value when the tolerance
/// max(rel_tol·|I|, abs_tol) is not met within max_subdivisions splits.
template <typename F>
QuadratureResult integrate(F&& f, double lower, double upper,
                           const QuadratureSettings& settings = {},
                           std::span<const double> breaks = {}) {
  settings.validate();
  if (std::isnan(lower) || std::isnan(upper))
    throw DomainError("integrate: NaN bound");
  if (lower == upper) return {};
  if (lower > upper) {
    auto r = integrate(f, upper, lower, settings, breaks);
    r.value = -r.value;
    return r;
  }
  const bool lo_inf = std::isinf(lower), hi_inf = std::isinf(upper);
  if (!lo_inf && !hi_inf) {
    std::vector<double> pts;
    pts.reserve(breaks.size() + 2);
    pts.push_back(lower);
    for (double b : breaks)
      if (b > lower && b < upper) pts.push_back(b);
    pts.push_back(upper);
    std::sort(pts.begin(), pts.end());
    return detail::integrate_finite(f, pts, settings);
  }
  if (lo_inf && hi_inf) {
    auto g = [&f](double s) {
      const double q = 1.0 - s * s;
      const double w = (1.0 + s * s) / (q * q);
      const double v = f(s / q);
      return v == 0.0 ? 0.0 : v * w;
    };
    const std::array<double, 3> pts = {-1.0, 0.0, 1.0};
    return detail::integrate_finite(g, pts, settings);
  }
  const double anchor = lo_inf ? upper : lower;
  const double dir = lo_inf ? -1.0 : 1.0;
  auto g = [&f, anchor, dir](double s) {
    const double q = 1.0 - s;
    const double v = f(anchor + dir * s / q);
    return v == 0.0 ? 0.0 : v / (q * q);
  };
  const std::array<double, 2> pts = {0.0, 1.0};
  return detail::integrate_finite(g, pts, settings);
}

// --- root finding -------------------------------------------------------------

/// Brent's method (bisection-safeguarded inverse quadratic interpolation) on
/// [lo, hi]. Requires g(lo)·g(hi) ≤ 0; returns x with bracket width ≤ tol or
/// g(x) = 0.
double find_root(const std::function<double(double)>& g, double lo, double hi,
                 double tol = 1e-10, int max_iter = 300);

}  // namespace intervalbf::numerics

#endif  // INTERVALBF_NUMERICS_HPP
