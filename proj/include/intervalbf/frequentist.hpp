#ifndef INTERVALBF_FREQUENTIST_HPP
#define INTERVALBF_FREQUENTIST_HPP

// Frequentist comparators: the two one-sided tests (TOST) procedure and
// second-generation p-values.

#include <optional>

#include "json.hpp"

#include "intervalbf/engine.hpp"
#include "intervalbf/priors.hpp"

namespace intervalbf::frequentist {

using priors::Interval;

/// Equivalence bounds in effect units; lower < upper.
struct EquivalenceBounds {
  double lower;
  double upper;

  void validate() const;
};

/// Raw summary of a one- or two-sample comparison. For two samples `mean` is
/// the difference in means and `sd` the pooled sd.
struct EffectEstimate {
  engine::Design design = engine::Design::one_sample;
  double n1 = 0.0;
  std::optional<double> n2;
  double mean = 0.0;
  double sd = 1.0;

  double standard_error() const;
  double dof() const;
  void validate() const;
};

struct TostResult {
  double estimate;
  double standard_error;
  double dof;
  double t_lower;
  double t_upper;
  double p_lower;
  double p_upper;
  /// Both one-sided nulls rejected at level α: the effect is declared to lie
  /// within the equivalence bounds.
  bool equivalent;
  /// (1-2α) two-sided t interval.
  Interval confidence_interval;
};

void to_json(nlohmann::json& j, const TostResult& r);

/// (1-2α)·100% two-sided t interval for the effect.
Interval confidence_interval(const EffectEstimate& est, double alpha);

TostResult tost(const EffectEstimate& est, EquivalenceBounds bounds, double alpha);

/// Second-generation p-value p_δ = |I∩N|/|I| · max(|I|/(2|N|), 1). A null
/// interval with an infinite end has |N| = ∞, which turns the correction off.
double sgpv(Interval estimate, Interval null_interval);

/// SGPV with the (1-2α) t interval as the interval estimate.
double sgpv(const EffectEstimate& est, Interval null_interval, double alpha);

}  // namespace intervalbf::frequentist

#endif  // INTERVALBF_FREQUENTIST_HPP
