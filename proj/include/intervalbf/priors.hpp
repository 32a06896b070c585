#ifndef INTERVALBF_PRIORS_HPP
#define INTERVALBF_PRIORS_HPP

// Priors on the standardized effect d: flat, normal moment, normal inverse
// moment, and the one-sided ("half") variants of the two non-local families.

#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "json.hpp"

#include "intervalbf/numerics.hpp"
#include "intervalbf/rng.hpp"

namespace intervalbf::priors {

enum class Family { flat, moment, inverse_moment, half_moment, half_inverse_moment };
enum class Side { left, right, both };

std::string_view to_string(Family f);
std::string_view to_string(Side s);
Family family_from_string(std::string_view name);
Side side_from_string(std::string_view name);

bool is_half(Family f);
bool is_non_local(Family f);
/// moment for half_moment, inverse_moment for half_inverse_moment, else f.
Family full_family(Family f);
Family half_family(Family f);

struct Interval {
  double lo;
  double hi;

  double length() const { return hi - lo; }
  bool bounded() const { return std::isfinite(lo) && std::isfinite(hi); }
  bool contains(double x) const { return x >= lo && x <= hi; }
  friend bool operator==(const Interval&, const Interval&) = default;
};

/// A piece of a prior's support together with the log of the factor that
/// multiplies the base (two-sided) density on it: 0 for full priors, log 2 for
/// half priors.
struct SupportPiece {
  Interval span;
  double log_weight;
};

class PriorSpec {
 public:
  static PriorSpec flat(double lo, double hi);
  static PriorSpec moment(double tau);
  static PriorSpec inverse_moment(double tau);
  static PriorSpec half_moment(double tau, Side side);
  static PriorSpec half_inverse_moment(double tau, Side side);
  /// Non-flat constructor by family; `side` is ignored for full families.
  static PriorSpec non_local(Family family, double tau, Side side = Side::both);

  Family family() const { return family_; }
  /// Absent for flat.
  std::optional<double> tau() const { return tau_; }
  const Interval& support() const { return support_; }
  Side side() const { return side_; }

  /// log density at u; -inf outside the support and at u = 0 for the
  /// non-local families.
  double log_density(double u) const;
  double density(double u) const;

  /// log density of the two-sided family member this prior is built from
  /// (flat: its own density). log_density = base + log_weight on a piece.
  double base_log_density(double u) const;
  /// Support split at 0 for the non-local families so that the densities
  /// are smooth on every piece.
  std::vector<SupportPiece> pieces() const;

  /// Closed-form CDF.
  double cdf(double u) const;

  PriorSpec mirrored() const;

  friend bool operator==(const PriorSpec&, const PriorSpec&) = default;

 private:
  PriorSpec(Family f, std::optional<double> tau, Interval support, Side side);

  Family family_;
  std::optional<double> tau_;
  Interval support_;
  Side side_;
};

void to_json(nlohmann::json& j, const PriorSpec& p);
void from_json(const nlohmann::json& j, PriorSpec& p);
PriorSpec prior_from_json(const nlohmann::json& j);

struct TuningTarget {
  double delta;
  double epsilon;
};

/// Default leak target for the inverse-moment family, whose mass near 0 is
/// positive but can be driven arbitrarily low.
inline constexpr double kInverseMomentEpsilon = 1e-8;
inline constexpr double kMomentEpsilon = 0.01;

/// Prior probability of the interval, from the closed-form CDFs. For the
/// symmetric interval (-δ, δ) this is [2Φ(δ/τ)-1] - 2(δ/τ)φ(δ/τ) for the
/// moment family and erfc(√τ/δ) for the inverse-moment family.
double interval_mass(const PriorSpec& spec, Interval interval);

/// Same quantity by adaptive quadrature of the density.
double interval_mass_quadrature(const PriorSpec& spec, Interval interval,
                                const numerics::QuadratureSettings& settings = {});

/// τ such that interval_mass(spec(τ), (-δ, δ)) = ε. For half variants that is
/// the mass leaked into (0, δ) on their own side, which equals the two-sided
/// mass, so the same τ is returned.
double tune_tau(Family family, TuningTarget target);

double sample(const PriorSpec& spec, Rng& rng);

}  // namespace intervalbf::priors

#endif  // INTERVALBF_PRIORS_HPP
