#include "intervalbf/frequentist.hpp"

#include <algorithm>
#include <cmath>

#include "intervalbf/numerics.hpp"

namespace intervalbf::frequentist {

void EquivalenceBounds::validate() const {
  if (std::isnan(lower) || std::isnan(upper) || !(lower < upper))
    throw DomainError("equivalence bounds must satisfy lower < upper");
}

void EffectEstimate::validate() const {
  if (!(n1 >= 2.0) || !std::isfinite(n1)) throw DomainError("n1 must be >= 2");
  if (design == engine::Design::two_sample && (!n2 || !(*n2 >= 2.0) || !std::isfinite(*n2)))
    throw DomainError("two-sample design needs n2 >= 2");
  if (!std::isfinite(mean)) throw DomainError("effect estimate must be finite");
  if (!(sd > 0.0) || !std::isfinite(sd))
    throw DomainError("sd must be positive and finite (degenerate standard error)");
}

double EffectEstimate::standard_error() const {
  if (design == engine::Design::one_sample) return sd / std::sqrt(n1);
  return sd * std::sqrt(1.0 / n1 + 1.0 / *n2);
}

double EffectEstimate::dof() const {
  return design == engine::Design::one_sample ? n1 - 1.0 : n1 + *n2 - 2.0;
}

void to_json(nlohmann::json& j, const TostResult& r) {
  j = nlohmann::json{{"estimate", r.estimate},
                     {"standard_error", r.standard_error},
                     {"dof", r.dof},
                     {"t_lower", r.t_lower},
                     {"t_upper", r.t_upper},
                     {"p_lower", r.p_lower},
                     {"p_upper", r.p_upper},
                     {"equivalent", r.equivalent},
                     {"confidence_interval",
                      {r.confidence_interval.lo, r.confidence_interval.hi}}};
}

namespace {

void check_alpha(double alpha) {
  if (!(alpha > 0.0 && alpha < 0.5))
    throw DomainError("alpha must lie in (0, 0.5) for a (1-2α) interval");
}

}  // namespace

Interval confidence_interval(const EffectEstimate& est, double alpha) {
  est.validate();
  check_alpha(alpha);
  const double q = numerics::student_t_quantile(1.0 - alpha, est.dof());
  const double se = est.standard_error();
  return {est.mean - q * se, est.mean + q * se};
}

TostResult tost(const EffectEstimate& est, EquivalenceBounds bounds, double alpha) {
  est.validate();
  bounds.validate();
  if (!(alpha > 0.0 && alpha < 1.0)) throw DomainError("alpha must lie in (0, 1)");
  const double se = est.standard_error();
  if (!(se > 0.0) || !std::isfinite(se)) throw DomainError("degenerate standard error");
  const double nu = est.dof();

  TostResult r{};
  r.estimate = est.mean;
  r.standard_error = se;
  r.dof = nu;
  r.t_lower = (est.mean - bounds.lower) / se;
  r.t_upper = (est.mean - bounds.upper) / se;
  // H01: effect ≤ lower, rejected for large t_lower.
  r.p_lower = numerics::student_t_cdf(-r.t_lower, nu);
  // H02: effect ≥ upper, rejected for small t_upper.
  r.p_upper = numerics::student_t_cdf(r.t_upper, nu);
  r.equivalent = r.p_lower <= alpha && r.p_upper <= alpha;
  if (alpha < 0.5) {
    const double q = numerics::student_t_quantile(1.0 - alpha, nu);
    r.confidence_interval = {est.mean - q * se, est.mean + q * se};
  } else {
    r.confidence_interval = {est.mean, est.mean};
  }
  return r;
}

double sgpv(Interval estimate, Interval null_interval) {
  if (std::isnan(estimate.lo) || std::isnan(estimate.hi) || std::isnan(null_interval.lo) ||
      std::isnan(null_interval.hi))
    throw DomainError("sgpv: NaN interval bound");
  if (!estimate.bounded() || !(estimate.hi > estimate.lo))
    throw DomainError("sgpv: the interval estimate must have finite positive length");
  if (!(null_interval.hi > null_interval.lo))
    throw DomainError("sgpv: the null interval must be nonempty");

  const double est_len = estimate.length();
  const double overlap = std::max(
      0.0, std::min(estimate.hi, null_interval.hi) - std::max(estimate.lo, null_interval.lo));
  const double null_len = null_interval.length();
  const double correction =
      std::isinf(null_len) ? 1.0 : std::max(est_len / (2.0 * null_len), 1.0);
  return std::clamp(overlap / est_len * correction, 0.0, 1.0);
}

double sgpv(const EffectEstimate& est, Interval null_interval, double alpha) {
  return sgpv(confidence_interval(est, alpha), null_interval);
}

}  // namespace intervalbf::frequentist
