#ifndef INTERVALBF_SIMLAB_HPP
#define INTERVALBF_SIMLAB_HPP

// Monte Carlo experiments: two-way and three-way interval tests on simulated
// one-sample normal data, meta-analysis over replicated studies, phase-to-phase
// borrowing, and calibration of the κ threshold.
//
// Replicate k draws from Rng::stream(seed, k) only, so results do not depend
// on the number of worker threads.

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "intervalbf/engine.hpp"
#include "intervalbf/rng.hpp"

namespace intervalbf::simlab {

enum class Experiment { exp1_twoway, exp2_threeway, exp3_meta, e2e_borrowing };
enum class Method { bf_moment, bf_imom, tost, sgpv };

std::string_view to_string(Experiment e);
std::string_view to_string(Method m);
Experiment experiment_from_string(std::string_view name);
Method method_from_string(std::string_view name);
bool is_bayes_factor(Method m);

struct MuRange {
  double lo;
  double hi;
  friend bool operator==(const MuRange&, const MuRange&) = default;
};

struct ExperimentConfig {
  Experiment experiment = Experiment::exp1_twoway;
  /// True means for exp1 and exp2.
  std::vector<double> mu_values;
  /// Sample sizes for exp1 and exp2.
  std::vector<std::size_t> n_values;
  /// Ranges the per-study means are drawn from (exp3, e2e).
  std::vector<MuRange> mu_ranges;
  /// exp1, e2e: {δ}; exp2: {δ1, δ2}; exp3: the δ grid.
  std::vector<double> deltas;
  std::size_t replications = 200;
  std::uint64_t seed = 1;
  std::vector<Method> methods;
  /// Thresholds for the two-hypothesis experiments.
  std::vector<double> kappas = {0.5};
  /// TOST level; SGPV uses the (1-2α) interval.
  double alpha = 0.1;
  double epsilon_moment = priors::kMomentEpsilon;
  double epsilon_imom = priors::kInverseMomentEpsilon;
  /// Studies per meta-replicate and the range their sizes are drawn from.
  std::size_t studies = 10;
  std::size_t n_min = 100;
  std::size_t n_max = 200;
  /// Carried P(H0) values for e2e.
  std::vector<double> phase2_null_probs;
  /// 0 = INTERVALBF_THREADS or hardware concurrency. Not part of the result.
  std::size_t threads = 0;
  numerics::QuadratureSettings quadrature;

  static ExperimentConfig defaults(Experiment e);
  void validate() const;
};

void to_json(nlohmann::json& j, const ExperimentConfig& c);
/// Fields missing from `j` take the defaults of its "experiment".
ExperimentConfig config_from_json(const nlohmann::json& j);

/// One cell × method of a result table. Hypothesis indices follow the
/// partition: exp1/exp3/e2e 0 = H0 (inside the margin), 1 = H1; exp2 0 = below
/// δ1, 1 = between, 2 = above δ2.
struct ResultRow {
  Experiment experiment;
  Method method;
  std::optional<double> kappa;
  double mu_lo;
  double mu_hi;
  std::optional<double> n;
  double delta;
  std::optional<double> prior_h0;
  std::size_t replicates;
  std::size_t failures;
  /// Share of successful replicates concluding each hypothesis.
  std::vector<double> proportions;
  double undecided;
  /// Monte Carlo standard errors of `proportions`.
  std::vector<double> standard_errors;
  /// Bayes-factor methods only.
  std::vector<double> mean_posteriors;
  std::optional<double> mean_log_bf01;
};

struct ResultTable {
  ExperimentConfig config;
  std::vector<ResultRow> rows;
  /// "replicate k, <cell>: <message>" for every failed evaluation.
  std::vector<std::string> failures;
};

ResultTable run_experiment(const ExperimentConfig& config);

std::string to_csv(const ResultTable& table);
/// Small-multiple line plots of the table.
std::string to_svg(const ResultTable& table);

/// One-sample summary of n draws from N(mu, 1): the t statistic uses the
/// sample sd. The first n normals of `rng` are consumed.
engine::TStatSummary draw_one_sample(Rng& rng, double mu, std::size_t n);

struct CalibrationConfig {
  double target_alpha = 0.05;
  double delta = 0.1;
  /// Defaults to delta.
  std::optional<double> boundary_mu;
  std::size_t n = 500;
  priors::Family family = priors::Family::moment;
  std::optional<double> epsilon;
  std::size_t replications = 200;
  std::uint64_t seed = 1;
  /// Defaults to 0.50, 0.51, ..., 0.99.
  std::vector<double> grid;
  std::size_t threads = 0;
  numerics::QuadratureSettings quadrature;

  void validate() const;
};

void to_json(nlohmann::json& j, const CalibrationConfig& c);
CalibrationConfig calibration_from_json(const nlohmann::json& j);

struct CalibrationResult {
  double kappa;
  /// Estimated P(conclude H0) at the boundary for the chosen κ, with a 95%
  /// Wilson interval.
  double rate;
  double ci_lo;
  double ci_hi;
  bool attained;
  std::optional<std::string> warning;
  std::size_t failures;
  std::vector<double> grid;
  std::vector<double> rates;
};

void to_json(nlohmann::json& j, const CalibrationResult& r);

/// Smallest κ on the grid whose simulated rate of concluding H0 (equivalence)
/// when the true effect sits on the margin is ≤ target_alpha. When no grid
/// value qualifies the largest κ is returned with a warning.
CalibrationResult calibrate_kappa(const CalibrationConfig& config);

/// κ,rate rows for the whole grid.
std::string to_csv(const CalibrationResult& result);

}  // namespace intervalbf::simlab

#endif  // INTERVALBF_SIMLAB_HPP
