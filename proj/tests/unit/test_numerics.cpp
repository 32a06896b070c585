#include "doctest.h"

#include <boost/math/distributions/non_central_t.hpp>
#include <boost/math/distributions/students_t.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <cmath>
#include <vector>

#include "intervalbf/numerics.hpp"

using namespace intervalbf;
using namespace intervalbf::numerics;

namespace {

double rel_err(double a, double b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); }

// Student t log-density written out from its gamma-function form.
double student_t_log_pdf(double t, double nu) {
  return std::lgamma(0.5 * (nu + 1)) - std::lgamma(0.5 * nu) - 0.5 * std::log(nu * kPi) -
         0.5 * (nu + 1) * std::log1p(t * t / nu);
}

}  // namespace

TEST_CASE("erfc and its inverse") {
  for (double x : {-3.0, -0.5, 0.0, 0.1, 1.0, 4.0, 10.0}) CHECK(numerics::erfc(x) == doctest::Approx(std::erfc(x)).epsilon(1e-15));
  for (double p : {1e-300, 1e-12, 0.01, 0.5, 1.0, 1.5, 1.99}) {
    const double x = erfc_inv(p);
    CHECK(rel_err(std::erfc(x), p) < 1e-12);
  }
  CHECK_THROWS_AS(erfc_inv(0.0), DomainError);
  CHECK_THROWS_AS(erfc_inv(2.0), DomainError);
}

TEST_CASE("normal helpers") {
  CHECK(normal_pdf(0.0) == doctest::Approx(1.0 / std::sqrt(2 * kPi)).epsilon(1e-15));
  CHECK(normal_cdf(0.0) == 0.5);
  CHECK(normal_cdf(1.959963984540054) == doctest::Approx(0.975).epsilon(1e-14));
  CHECK(log_normal_pdf(40.0) == doctest::Approx(-800.0 - kLogSqrt2Pi));
  CHECK(log_gamma(0.5) == doctest::Approx(0.5 * std::log(kPi)).epsilon(1e-15));
}

TEST_CASE("central noncentral t matches the Student t closed form") {
  for (double nu : {1.0, 3.0, 30.0, 424.0, 5000.0})
    for (double t : {-40.0, -3.0, -0.2, 0.0, 1.5, 7.0, 100.0}) {
      const double got = log_nct_pdf(t, {nu, 0.0});
      const double want = student_t_log_pdf(t, nu);
      CHECK(rel_err(std::exp(got), std::exp(want)) < 1e-10);
    }
}

TEST_CASE("noncentral t density integrates to one") {
  using boost::math::quadrature::gauss_kronrod;
  for (double nu : {3.0, 30.0, 424.0})
    for (double lambda : {-5.0, 0.0, 5.0}) {
      auto f = [&](double t) { return std::exp(log_nct_pdf(t, {nu, lambda})); };
      // Independent oracle: Boost's adaptive Gauss-Kronrod, split at the mode.
      const double mode = lambda;
      const double total = gauss_kronrod<double, 61>::integrate(f, -kInf, mode, 15, 1e-13) +
                           gauss_kronrod<double, 61>::integrate(f, mode, kInf, 15, 1e-13);
      CHECK(std::abs(total - 1.0) < 1e-6);
    }
}

TEST_CASE("noncentral t symmetry f(t; nu, lambda) = f(-t; nu, -lambda)") {
  for (double nu : {2.0, 17.0, 300.0})
    for (double lambda : {-9.0, -1.0, 0.5, 6.0})
      for (double t : {-12.0, -1.0, 0.3, 4.0}) {
        const double a = log_nct_pdf(t, {nu, lambda});
        const double b = log_nct_pdf(-t, {nu, -lambda});
        CHECK(std::abs(a - b) <= 1e-12 * std::max(1.0, std::abs(a)));
      }
}

TEST_CASE("noncentral t agrees with Boost in moderate regimes") {
  for (double nu : {5.0, 30.0, 200.0})
    for (double lambda : {-2.0, 0.5, 3.0})
      for (double t : {-2.0, 0.0, 1.0, 3.5}) {
        const boost::math::non_central_t dist(nu, lambda);
        CHECK(rel_err(std::exp(log_nct_pdf(t, {nu, lambda})), boost::math::pdf(dist, t)) < 1e-8);
      }
}

TEST_CASE("noncentral t extreme tails against high-precision constants") {
  // Reference log-densities from a 40-digit evaluation of the chi-scale integral.
  struct Case {
    double t, nu, lambda, log_pdf;
  };
  const Case cases[] = {{-5, 10, 8, -53.997238556322365728},
                        {2.5, 424, 1, -2.0421640967817626703},
                        {40, 30, 35, -3.0582235272798972147},
                        {-1, 3, -5, -7.5845036851277829062},
                        {0.3, 1, 0.2, -1.1781657377172533407},
                        {12, 600, -3, -101.97135840269763993}};
  for (const auto& c : cases) {
    CAPTURE(c.t);
    CAPTURE(c.lambda);
    CHECK(std::abs(log_nct_pdf(c.t, {c.nu, c.lambda}) - c.log_pdf) < 1e-9 * std::abs(c.log_pdf) + 1e-12);
  }
}

TEST_CASE("noncentral t rejects invalid parameters") {
  CHECK_THROWS_AS(log_nct_pdf(1.0, {0.0, 0.0}), DomainError);
  CHECK_THROWS_AS(log_nct_pdf(1.0, {-1.0, 0.0}), DomainError);
  CHECK_THROWS_AS(log_nct_pdf(std::nan(""), {3.0, 0.0}), DomainError);
}

TEST_CASE("Student t cdf and quantile") {
  for (double nu : {1.0, 4.0, 29.0, 1000.0}) {
    const boost::math::students_t dist(nu);
    for (double t : {-8.0, -1.0, 0.0, 0.7, 3.0})
      CHECK(rel_err(student_t_cdf(t, nu), boost::math::cdf(dist, t)) < 1e-12);
    for (double p : {1e-6, 0.05, 0.5, 0.9, 0.999}) {
      const double q = student_t_quantile(p, nu);
      CHECK(std::abs(q - boost::math::quantile(dist, p)) < 1e-9 * std::max(1.0, std::abs(q)));
    }
  }
  CHECK(student_t_cdf(kInf, 3.0) == 1.0);
  CHECK(student_t_cdf(-kInf, 3.0) == 0.0);
  CHECK_THROWS_AS(student_t_quantile(0.0, 3.0), DomainError);
  CHECK_THROWS_AS(student_t_quantile(1.0, 3.0), DomainError);
}

TEST_CASE("log_sum_exp") {
  const std::vector<double> big = {1000.0, 1000.0};
  CHECK(log_sum_exp(big) == doctest::Approx(1000.0 + std::log(2.0)));
  const std::vector<double> mixed = {-kInf, 0.0, std::log(3.0)};
  CHECK(log_sum_exp(mixed) == doctest::Approx(std::log(4.0)));
  CHECK(log_sum_exp(std::vector<double>{}) == -kInf);
  CHECK(log_sum_exp(std::vector<double>{-kInf, -kInf}) == -kInf);
}

TEST_CASE("adaptive quadrature on finite and unbounded ranges") {
  CHECK(integrate([](double x) { return x * x; }, 0.0, 3.0).value ==
        doctest::Approx(9.0).epsilon(1e-13));
  CHECK(integrate([](double x) { return std::exp(-x * x); }, -kInf, kInf).value ==
        doctest::Approx(std::sqrt(kPi)).epsilon(1e-10));
  CHECK(integrate([](double x) { return std::exp(-x); }, 0.0, kInf).value ==
        doctest::Approx(1.0).epsilon(1e-10));
  CHECK(integrate([](double x) { return std::exp(x); }, -kInf, 0.0).value ==
        doctest::Approx(1.0).epsilon(1e-10));
  CHECK(integrate([](double x) { return x; }, 2.0, 0.0).value == doctest::Approx(-2.0));
  CHECK(integrate([](double) { return 1.0; }, 1.0, 1.0).value == 0.0);

  // A kink is resolved immediately when given as a break point.
  const std::vector<double> breaks = {0.3};
  const auto r = integrate([](double x) { return std::abs(x - 0.3); }, 0.0, 1.0, {}, breaks);
  CHECK(r.value == doctest::Approx(0.5 * (0.09 + 0.49)).epsilon(1e-14));
  CHECK(r.subdivisions == 0);
}

TEST_CASE("quadrature reports non-convergence with the partial value") {
  QuadratureSettings s;
  s.max_subdivisions = 3;
  s.rel_tol = 1e-14;
  try {
    integrate([](double x) { return 1.0 / std::sqrt(x); }, 0.0, 1.0, s);
    FAIL("expected ConvergenceError");
  } catch (const ConvergenceError& e) {
    CHECK(e.partial_value() > 1.0);
    CHECK(e.partial_value() < 2.0);
    CHECK(e.error_estimate() > 0.0);
  }
  CHECK_THROWS_AS(integrate([](double x) { return 1.0 / x; }, -1.0, 1.0), DomainError);
  QuadratureSettings bad;
  bad.rel_tol = -1.0;
  CHECK_THROWS_AS(bad.validate(), DomainError);
}

TEST_CASE("root finding") {
  const double x = find_root([](double v) { return std::cos(v) - v; }, 0.0, 1.0, 1e-14);
  CHECK(x == doctest::Approx(0.7390851332151607).epsilon(1e-14));
  CHECK(find_root([](double v) { return v; }, 0.0, 5.0) == 0.0);
  CHECK_THROWS_AS(find_root([](double v) { return v * v + 1.0; }, -1.0, 1.0), BracketError);
  // Bisection oracle on a steep monotone function.
  auto g = [](double v) { return std::expm1(20.0 * v) - 3.0; };
  double lo = 0.0, hi = 1.0;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    (g(mid) < 0 ? lo : hi) = mid;
  }
  CHECK(find_root(g, 0.0, 1.0, 1e-15) == doctest::Approx(lo).epsilon(1e-13));
}
