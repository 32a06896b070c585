#ifndef INTERVALBF_META_HPP
#define INTERVALBF_META_HPP

// Fixed-effect pooling of Bayes-factor evidence across independent studies,
// phase-to-phase updating of hypothesis probabilities, and per-drug
// superiority/equivalence/inferiority curves against a common reference.

#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "intervalbf/engine.hpp"
#include "intervalbf/trialdata.hpp"

namespace intervalbf::meta {

struct MetaStudy {
  std::string id;
  engine::TStatSummary summary;
  /// Study-specific partition, e.g. when a raw margin is standardized by the
  /// study's own sd. Must have as many hypotheses as the shared partition.
  std::optional<engine::HypothesisPartition> partition;
};

struct MetaInput {
  std::vector<MetaStudy> studies;
  engine::HypothesisPartition partition;

  void validate() const;
};

/// Hypothesis probabilities carried from an earlier phase.
struct PhasePosterior {
  std::vector<double> probs;

  static PhasePosterior uniform(std::size_t hypotheses);
  static PhasePosterior from_report(const engine::PosteriorReport& report);
  /// Entries in (0, 1) summing to 1 within 1e-9.
  void validate() const;
};

struct MetaReport {
  engine::PosteriorReport report;
  /// Prior probabilities the posteriors were computed under.
  std::vector<double> prior_probs;
  std::vector<std::string> study_ids;
  /// study_log_marginals[k][i] = log m_i for study k.
  std::vector<std::vector<double>> study_log_marginals;
};

void to_json(nlohmann::json& j, const MetaReport& r);

/// Per-study log marginals, one row per study. Errors are rethrown with the
/// study id prepended.
std::vector<std::vector<double>> study_log_marginals(
    const MetaInput& meta, const numerics::QuadratureSettings& settings = {});

/// Σ_k rows[k][i] for each i. Terms are summed in sorted order so the result
/// does not depend on the order of the rows.
std::vector<double> pooled_log_marginals(const std::vector<std::vector<double>>& rows);

MetaReport pool(const MetaInput& meta, const engine::DecisionRule& rule,
                const numerics::QuadratureSettings& settings = {});
MetaReport pool(const MetaInput& meta, const numerics::QuadratureSettings& settings = {});

/// Pooled marginals of `next_phase` combined with `current` as the prior.
MetaReport sequential_update(const PhasePosterior& current, const MetaInput& next_phase,
                             const engine::DecisionRule& rule,
                             const numerics::QuadratureSettings& settings = {});
MetaReport sequential_update(const PhasePosterior& current, const MetaInput& next_phase,
                             const numerics::QuadratureSettings& settings = {});

enum class MarginScale { raw, standardized };

struct LandscapeConfig {
  /// Reference arm every study must share.
  std::string reference;
  /// Positive, strictly increasing margins δ; cutpoints are (-δ, δ).
  std::vector<double> delta_grid;
  /// raw: δ is in outcome units and divided by each study's pooled sd.
  MarginScale scale = MarginScale::raw;
  priors::Family family = priors::Family::moment;
  double epsilon = priors::kMomentEpsilon;
  /// Equal when empty.
  std::vector<double> prior_probs;
  /// Superiority is the region below -δ (e.g. HbA1c reduction) when true.
  bool lower_is_better = true;
  /// Drugs to report, in order; empty means every drug in registry order.
  std::vector<std::string> drugs;
  std::string average_label = "average";
  std::size_t threads = 0;

  void validate() const;
};

struct LandscapePoint {
  std::string drug;
  double delta;
  double p_superior;
  double p_equivalent;
  double p_inferior;
  std::size_t studies;
};

struct LandscapeResult {
  std::vector<LandscapePoint> points;
  std::vector<std::string> warnings;
};

void to_json(nlohmann::json& j, const LandscapeResult& r);

/// For each drug and δ, the three-way pooled posterior over that drug's
/// studies; the average drug pools every included study.
LandscapeResult landscape(const std::vector<trialdata::StudyRecord>& registry,
                          const LandscapeConfig& config,
                          const numerics::QuadratureSettings& settings = {});

/// drug,delta,p_sup,p_eq,p_inf
std::string landscape_csv(const LandscapeResult& result);

}  // namespace intervalbf::meta

#endif  // INTERVALBF_META_HPP
