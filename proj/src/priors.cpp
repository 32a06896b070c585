#include "intervalbf/priors.hpp"

#include <cmath>

namespace intervalbf::priors {

using numerics::kInf;

std::string_view to_string(Family f) {
  switch (f) {
    case Family::flat: return "flat";
    case Family::moment: return "moment";
    case Family::inverse_moment: return "inverse_moment";
    case Family::half_moment: return "half_moment";
    case Family::half_inverse_moment: return "half_inverse_moment";
  }
  return "?";
}

std::string_view to_string(Side s) {
  switch (s) {
    case Side::left: return "left";
    case Side::right: return "right";
    case Side::both: return "both";
  }
  return "?";
}

Family family_from_string(std::string_view name) {
  if (name == "flat") return Family::flat;
  if (name == "moment" || name == "mom") return Family::moment;
  if (name == "inverse_moment" || name == "imom") return Family::inverse_moment;
  if (name == "half_moment") return Family::half_moment;
  if (name == "half_inverse_moment") return Family::half_inverse_moment;
  throw UsageError("unknown prior family '" + std::string(name) + "'");
}

Side side_from_string(std::string_view name) {
  if (name == "left") return Side::left;
  if (name == "right") return Side::right;
  if (name == "both") return Side::both;
  throw DomainError("unknown prior side '" + std::string(name) + "'");
}

bool is_half(Family f) {
  return f == Family::half_moment || f == Family::half_inverse_moment;
}

bool is_non_local(Family f) { return f != Family::flat; }

Family full_family(Family f) {
  if (f == Family::half_moment) return Family::moment;
  if (f == Family::half_inverse_moment) return Family::inverse_moment;
  return f;
}

Family half_family(Family f) {
  if (f == Family::moment) return Family::half_moment;
  if (f == Family::inverse_moment) return Family::half_inverse_moment;
  if (is_half(f)) return f;
  throw DomainError("flat prior has no half variant");
}

namespace {

void check_tau(double tau) {
  if (!(tau > 0.0) || !std::isfinite(tau))
    throw DomainError("prior scale tau must be positive and finite, got " +
                      std::to_string(tau));
}

Interval side_support(Side side) {
  switch (side) {
    case Side::left: return {-kInf, 0.0};
    case Side::right: return {0.0, kInf};
    case Side::both: return {-kInf, kInf};
  }
  return {-kInf, kInf};
}

// Base two-sided densities.
double log_moment(double u, double tau) {
  if (u == 0.0) return -kInf;
  const double a = u / tau;
  return 2.0 * std::log(std::abs(u)) - numerics::kLogSqrt2Pi - 3.0 * std::log(tau) -
         0.5 * a * a;
}

double log_inverse_moment(double u, double tau) {
  if (u == 0.0) return -kInf;
  // τ^{1/2}/Γ(1/2) · u^{-2} · exp(-τ/u²), Γ(1/2) = √π
  return 0.5 * std::log(tau) - 0.5 * std::log(numerics::kPi) -
         2.0 * std::log(std::abs(u)) - tau / (u * u);
}

// P(|U| < x) for the two-sided base family, x ≥ 0.
double central_mass(Family base, double tau, double x) {
  if (x <= 0.0) return 0.0;
  if (std::isinf(x)) return 1.0;
  if (base == Family::moment) {
    const double a = x / tau;
    return std::erf(a / std::sqrt(2.0)) - 2.0 * a * numerics::normal_pdf(a);
  }
  return std::erfc(std::sqrt(tau) / x);
}

// P(U > x) for the two-sided base family, x ≥ 0.
double upper_tail(Family base, double tau, double x) {
  if (x <= 0.0) return 0.5;
  if (std::isinf(x)) return 0.0;
  if (base == Family::moment) {
    const double a = x / tau;
    return 0.5 * std::erfc(a / std::sqrt(2.0)) + a * numerics::normal_pdf(a);
  }
  return 0.5 * std::erf(std::sqrt(tau) / x);
}

// Base-family probability of [lo, hi], lo ≤ hi, without catastrophic
// cancellation in either the centre or the tails.
double base_mass(Family base, double tau, double lo, double hi) {
  if (!(hi > lo)) return 0.0;
  if (lo < 0.0 && hi > 0.0)
    return 0.5 * (central_mass(base, tau, -lo) + central_mass(base, tau, hi));
  if (lo >= 0.0) {
    const double t_lo = upper_tail(base, tau, lo);
    if (t_lo < 0.25) return t_lo - upper_tail(base, tau, hi);
    return 0.5 * (central_mass(base, tau, hi) - central_mass(base, tau, lo));
  }
  return base_mass(base, tau, -hi, -lo);
}

}  // namespace

PriorSpec::PriorSpec(Family f, std::optional<double> tau, Interval support, Side side)
    : family_(f), tau_(tau), support_(support), side_(side) {}

PriorSpec PriorSpec::flat(double lo, double hi) {
  if (!std::isfinite(lo) || !std::isfinite(hi))
    throw DomainError("flat prior needs a bounded support");
  if (!(lo < hi)) throw DomainError("flat prior support must satisfy lo < hi");
  return PriorSpec(Family::flat, std::nullopt, {lo, hi}, Side::both);
}

PriorSpec PriorSpec::moment(double tau) {
  check_tau(tau);
  return PriorSpec(Family::moment, tau, side_support(Side::both), Side::both);
}

PriorSpec PriorSpec::inverse_moment(double tau) {
  check_tau(tau);
  return PriorSpec(Family::inverse_moment, tau, side_support(Side::both), Side::both);
}

PriorSpec PriorSpec::half_moment(double tau, Side side) {
  check_tau(tau);
  if (side == Side::both) throw DomainError("half prior needs side left or right");
  return PriorSpec(Family::half_moment, tau, side_support(side), side);
}

PriorSpec PriorSpec::half_inverse_moment(double tau, Side side) {
  check_tau(tau);
  if (side == Side::both) throw DomainError("half prior needs side left or right");
  return PriorSpec(Family::half_inverse_moment, tau, side_support(side), side);
}

PriorSpec PriorSpec::non_local(Family family, double tau, Side side) {
  switch (family) {
    case Family::moment: return moment(tau);
    case Family::inverse_moment: return inverse_moment(tau);
    case Family::half_moment: return half_moment(tau, side);
    case Family::half_inverse_moment: return half_inverse_moment(tau, side);
    case Family::flat: break;
  }
  throw DomainError("non_local: flat is not a non-local family");
}

double PriorSpec::base_log_density(double u) const {
  switch (full_family(family_)) {
    case Family::flat: return -std::log(support_.length());
    case Family::moment: return log_moment(u, *tau_);
    case Family::inverse_moment: return log_inverse_moment(u, *tau_);
    default: break;
  }
  return -kInf;
}

double PriorSpec::log_density(double u) const {
  if (std::isnan(u)) throw DomainError("prior density evaluated at NaN");
  if (!support_.contains(u)) return -kInf;
  const double base = base_log_density(u);
  return is_half(family_) ? base + std::log(2.0) : base;
}

double PriorSpec::density(double u) const { return std::exp(log_density(u)); }

std::vector<SupportPiece> PriorSpec::pieces() const {
  if (family_ == Family::flat) return {{support_, 0.0}};
  if (is_half(family_)) return {{support_, std::log(2.0)}};
  return {{{-kInf, 0.0}, 0.0}, {{0.0, kInf}, 0.0}};
}

double PriorSpec::cdf(double u) const {
  if (std::isnan(u)) throw DomainError("prior cdf evaluated at NaN");
  return interval_mass(*this, {-kInf, u});
}

PriorSpec PriorSpec::mirrored() const {
  switch (family_) {
    case Family::flat: return flat(-support_.hi, -support_.lo);
    case Family::moment:
    case Family::inverse_moment: return *this;
    default: break;
  }
  const Side flipped = side_ == Side::left ? Side::right : Side::left;
  return non_local(family_, *tau_, flipped);
}

void to_json(nlohmann::json& j, const PriorSpec& p) {
  auto bound = [](double x) { return std::isfinite(x) ? nlohmann::json(x) : nlohmann::json(); };
  j = nlohmann::json{{"family", to_string(p.family())},
                     {"tau", p.tau() ? nlohmann::json(*p.tau()) : nlohmann::json()},
                     {"support", {bound(p.support().lo), bound(p.support().hi)}},
                     {"side", to_string(p.side())}};
}

PriorSpec prior_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw DomainError("prior must be a JSON object");
  const Family family = family_from_string(j.at("family").get<std::string>());
  if (family == Family::flat) {
    const auto& s = j.at("support");
    if (!s.is_array() || s.size() != 2 || !s[0].is_number() || !s[1].is_number())
      throw DomainError("flat prior needs a bounded support [lo, hi]");
    return PriorSpec::flat(s[0].get<double>(), s[1].get<double>());
  }
  if (!j.contains("tau") || !j.at("tau").is_number())
    throw DomainError("non-local prior needs a numeric tau");
  const Side side = j.contains("side") ? side_from_string(j.at("side").get<std::string>())
                                       : Side::both;
  const PriorSpec p = PriorSpec::non_local(family, j.at("tau").get<double>(), side);
  if (j.contains("support") && j.at("support").is_array()) {
    const auto& s = j.at("support");
    auto read = [](const nlohmann::json& v, double fallback) {
      return v.is_number() ? v.get<double>() : fallback;
    };
    const Interval given{read(s.at(0), -kInf), read(s.at(1), kInf)};
    if (!(given == p.support()))
      throw DomainError("support of a " + std::string(to_string(family)) +
                        " prior is fixed by its side");
  }
  return p;
}

void from_json(const nlohmann::json& j, PriorSpec& p) { p = prior_from_json(j); }

double interval_mass(const PriorSpec& spec, Interval interval) {
  if (std::isnan(interval.lo) || std::isnan(interval.hi))
    throw DomainError("interval_mass: NaN bound");
  const Interval& s = spec.support();
  const double lo = std::max(interval.lo, s.lo);
  const double hi = std::min(interval.hi, s.hi);
  if (!(hi > lo)) return 0.0;
  if (spec.family() == Family::flat) return (hi - lo) / s.length();
  const double m = base_mass(full_family(spec.family()), *spec.tau(), lo, hi);
  return is_half(spec.family()) ? std::min(1.0, 2.0 * m) : m;
}

double interval_mass_quadrature(const PriorSpec& spec, Interval interval,
                                const numerics::QuadratureSettings& settings) {
  double total = 0.0;
  for (const auto& piece : spec.pieces()) {
    const double lo = std::max(interval.lo, piece.span.lo);
    const double hi = std::min(interval.hi, piece.span.hi);
    if (!(hi > lo)) continue;
    auto f = [&spec](double u) { return spec.density(u); };
    total += numerics::integrate(f, lo, hi, settings).value;
  }
  return total;
}

double tune_tau(Family family, TuningTarget target) {
  if (family == Family::flat) throw DomainError("tune_tau: flat prior has no scale");
  if (!(target.delta > 0.0) || !std::isfinite(target.delta))
    throw DomainError("tune_tau: delta must be positive and finite");
  if (!(target.epsilon > 0.0 && target.epsilon < 1.0))
    throw DomainError("tune_tau: epsilon must lie in (0, 1), got " +
                      std::to_string(target.epsilon));
  const double delta = target.delta, eps = target.epsilon;

  if (full_family(family) == Family::inverse_moment) {
    // erfc(√τ/δ) = ε
    const double r = numerics::erfc_inv(eps);
    return delta * delta * r * r;
  }

  // Moment: the mass depends on (δ, τ) only through a = δ/τ and increases in a.
  auto excess = [eps](double a) { return central_mass(Family::moment, 1.0, a) - eps; };
  double lo = 0.5, hi = 1.0;
  while (excess(lo) > 0.0) lo *= 0.5;
  while (excess(hi) < 0.0) hi *= 2.0;
  const double a = numerics::find_root(excess, lo, hi, 1e-15 * hi);
  return delta / a;
}

double sample(const PriorSpec& spec, Rng& rng) {
  if (spec.family() == Family::flat)
    return rng.uniform(spec.support().lo, spec.support().hi);

  const double tau = *spec.tau();
  double magnitude;
  if (full_family(spec.family()) == Family::moment) {
    // |U|/τ is chi with 3 degrees of freedom.
    const double x = rng.normal(), y = rng.normal(), z = rng.normal();
    magnitude = tau * std::sqrt(x * x + y * y + z * z);
  } else {
    // √τ/|U| is half-normal with variance 1/2.
    double z;
    do z = rng.normal();
    while (z == 0.0);
    magnitude = std::sqrt(2.0 * tau) / std::abs(z);
  }
  switch (spec.side()) {
    case Side::left: return -magnitude;
    case Side::right: return magnitude;
    case Side::both: break;
  }
  return rng.uniform() < 0.5 ? -magnitude : magnitude;
}

}  // namespace intervalbf::priors
