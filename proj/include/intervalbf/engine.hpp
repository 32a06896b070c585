#ifndef INTERVALBF_ENGINE_HPP
#define INTERVALBF_ENGINE_HPP

// Bayes factors on the t statistic. A study is reduced to (t_obs, ν, c) with
// λ = c·d; each hypothesis region carries a prior on the standardized effect d
// and its marginal likelihood is m = ∫ f(t_obs; ν, c·d) π(d) dd.

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "intervalbf/numerics.hpp"
#include "intervalbf/priors.hpp"

namespace intervalbf::engine {

using priors::Interval;
using priors::PriorSpec;

enum class Design { one_sample, two_sample };

std::string_view to_string(Design d);
Design design_from_string(std::string_view name);

struct TStatSummary {
  double t_obs = 0.0;
  double nu = 1.0;
  double ncp_scale = 1.0;
  Design design = Design::one_sample;
  double n1 = 0.0;
  std::optional<double> n2;

  /// Standard error of the standardized effect implied by (t, ν, c); sets the
  /// width of the likelihood in d.
  double effect_se() const;
  void validate() const;
};

void to_json(nlohmann::json& j, const TStatSummary& s);

/// t statistic of a one-sample mean (n2 ignored) or a two-sample difference
/// in means with pooled sd.
TStatSummary summarize(Design design, double n1, std::optional<double> n2,
                       double mean_effect, double sd);

/// A hypothesis region: a union of disjoint closed-open intervals. Boundary
/// points carry no mass, so open/closed ends are not tracked.
struct Region {
  std::vector<Interval> parts;

  bool contains(double d) const;
  friend bool operator==(const Region&, const Region&) = default;
};

struct HypothesisPartition {
  std::vector<double> cutpoints;
  std::vector<Region> regions;
  std::vector<PriorSpec> priors;
  std::vector<double> prior_probs;

  std::size_t size() const { return regions.size(); }

  /// Regions disjoint and covering ℝ, one prior and one probability per
  /// region, probabilities positive and summing to 1.
  void validate() const;

  /// Reflect d → -d hypothesis by hypothesis: index i of the result is the
  /// mirror image of index i, with the same prior probability.
  HypothesisPartition mirrored() const;

  /// m contiguous regions between sorted cutpoints.
  static HypothesisPartition from_cutpoints(std::vector<double> cutpoints,
                                            std::vector<PriorSpec> priors,
                                            std::vector<double> prior_probs);

  /// H0: d ∈ (-δ, δ) with a flat prior; H1: |d| ≥ δ with a two-sided
  /// non-local prior tuned so that it leaks `epsilon` into (-δ, δ).
  static HypothesisPartition two_way(double delta, priors::Family family,
                                     double epsilon, double p_null = 0.5);

  /// H1: d ≤ δ1 (half prior, left), H2: δ1 < d < δ2 (flat), H3: d ≥ δ2 (half
  /// prior, right). Each half prior is tuned so that it leaks ε/2 into the
  /// middle region. Requires δ1 < 0 < δ2.
  static HypothesisPartition three_way(double delta1, double delta2,
                                       priors::Family family, double epsilon,
                                       std::vector<double> prior_probs = {});
};

void to_json(nlohmann::json& j, const HypothesisPartition& p);
HypothesisPartition partition_from_json(const nlohmann::json& j);

struct DecisionRule {
  enum class Kind { threshold_kappa, max_posterior };
  Kind kind = Kind::max_posterior;
  double kappa = 0.5;

  static DecisionRule threshold(double kappa);
  static DecisionRule max_posterior();
  void validate() const;
};

void to_json(nlohmann::json& j, const DecisionRule& r);
DecisionRule rule_from_json(const nlohmann::json& j);

struct PosteriorReport {
  std::vector<double> log_marginals;
  std::vector<double> posteriors;
  /// log BF_ij = log m_i - log m_j.
  std::vector<std::vector<double>> log_bayes_factors;
  std::vector<std::vector<double>> bayes_factors;
  std::size_t decision = 0;
  DecisionRule rule;
};

void to_json(nlohmann::json& j, const PosteriorReport& r);

/// log ∫_{interval ∩ support} f(t_obs; ν, c·d) π(d) dd.
double log_marginal_over(const TStatSummary& summary, const PriorSpec& prior,
                         Interval interval,
                         const numerics::QuadratureSettings& settings = {});

/// log m = log ∫ f(t_obs; ν, c·d) π(d) dd over the prior's support.
double log_marginal(const TStatSummary& summary, const PriorSpec& prior,
                    const numerics::QuadratureSettings& settings = {});

std::vector<double> log_marginals(const TStatSummary& summary,
                                  const HypothesisPartition& partition,
                                  const numerics::QuadratureSettings& settings = {});

/// Posterior hypothesis probabilities, Bayes factors and decision from
/// per-hypothesis log marginals and prior probabilities.
PosteriorReport assemble_report(std::vector<double> log_marginals,
                                std::span<const double> prior_probs,
                                const DecisionRule& rule);

PosteriorReport posterior(const TStatSummary& summary,
                          const HypothesisPartition& partition,
                          const DecisionRule& rule,
                          const numerics::QuadratureSettings& settings = {});

/// κ rule (two hypotheses only): 0 iff P(H0|x) > κ. Max rule: argmax, ties to
/// the lower index.
std::size_t decide(std::span<const double> posteriors, const DecisionRule& rule);

/// κ rule for two hypotheses, max rule otherwise.
DecisionRule default_rule(std::size_t hypotheses, double kappa = 0.5);

nlohmann::json quadrature_to_json(const numerics::QuadratureSettings& s);
/// Keys missing from `j` keep their value in `base`.
numerics::QuadratureSettings quadrature_from_json(const nlohmann::json& j,
                                                  numerics::QuadratureSettings base = {});

}  // namespace intervalbf::engine

#endif  // INTERVALBF_ENGINE_HPP
