#include "intervalbf/meta.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <map>
#include <set>

#include "intervalbf/parallel.hpp"

namespace intervalbf::meta {

namespace {

[[noreturn]] void rethrow_for_study(const std::string& id) {
  const std::string prefix = "study '" + id + "': ";
  try {
    throw;
  } catch (const ConvergenceError& e) {
    throw ConvergenceError(prefix + e.what(), e.partial_value(), e.error_estimate());
  } catch (const BracketError& e) {
    throw BracketError(prefix + e.what());
  } catch (const UsageError& e) {
    throw UsageError(prefix + e.what());
  } catch (const DomainError& e) {
    throw DomainError(prefix + e.what());
  } catch (const Error& e) {
    throw Error(prefix + e.what());
  }
}

std::vector<double> equal_probs(std::size_t m) { return std::vector<double>(m, 1.0 / m); }

MetaReport combine(const MetaInput& meta, std::vector<double> prior_probs,
                   const engine::DecisionRule& rule,
                   const numerics::QuadratureSettings& settings) {
  MetaReport out;
  out.study_log_marginals = study_log_marginals(meta, settings);
  for (const auto& s : meta.studies) out.study_ids.push_back(s.id);
  out.report = engine::assemble_report(pooled_log_marginals(out.study_log_marginals),
                                       prior_probs, rule);
  out.prior_probs = std::move(prior_probs);
  return out;
}

std::string format_number(double x) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, ptr);
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string out = "\"";
  for (char ch : s) {
    if (ch == '"') out.push_back('"');
    out.push_back(ch);
  }
  return out + "\"";
}

}  // namespace

void MetaInput::validate() const {
  if (studies.empty()) throw DomainError("meta-analysis needs at least one study");
  partition.validate();
  std::set<std::string> ids;
  for (const auto& s : studies) {
    if (!ids.insert(s.id).second) throw DomainError("duplicate study id '" + s.id + "'");
    if (s.partition) {
      if (s.partition->size() != partition.size())
        throw UsageError("study '" + s.id + "': partition has " +
                         std::to_string(s.partition->size()) + " hypotheses, expected " +
                         std::to_string(partition.size()));
      s.partition->validate();
    }
  }
}

PhasePosterior PhasePosterior::uniform(std::size_t hypotheses) {
  if (hypotheses < 2) throw UsageError("a phase posterior needs at least two hypotheses");
  return {equal_probs(hypotheses)};
}

PhasePosterior PhasePosterior::from_report(const engine::PosteriorReport& report) {
  PhasePosterior p{report.posteriors};
  p.validate();
  return p;
}

void PhasePosterior::validate() const {
  if (probs.size() < 2) throw UsageError("a phase posterior needs at least two hypotheses");
  double total = 0.0;
  for (double p : probs) {
    if (!(p > 0.0 && p < 1.0))
      throw DomainError("phase posterior probabilities must lie in (0, 1)");
    total += p;
  }
  if (std::abs(total - 1.0) > 1e-9)
    throw DomainError("phase posterior probabilities must sum to 1");
}

void to_json(nlohmann::json& j, const MetaReport& r) {
  nlohmann::json studies = nlohmann::json::array();
  for (std::size_t k = 0; k < r.study_ids.size(); ++k)
    studies.push_back({{"id", r.study_ids[k]}, {"log_marginals", r.study_log_marginals[k]}});
  j = nlohmann::json{{"posterior", r.report}, {"prior_probs", r.prior_probs},
                     {"studies", studies}};
}

std::vector<std::vector<double>> study_log_marginals(
    const MetaInput& meta, const numerics::QuadratureSettings& settings) {
  meta.validate();
  std::vector<std::vector<double>> rows;
  rows.reserve(meta.studies.size());
  for (const auto& s : meta.studies) {
    try {
      s.summary.validate();
      rows.push_back(
          engine::log_marginals(s.summary, s.partition ? *s.partition : meta.partition, settings));
    } catch (const Error&) {
      rethrow_for_study(s.id);
    }
  }
  return rows;
}

std::vector<double> pooled_log_marginals(const std::vector<std::vector<double>>& rows) {
  if (rows.empty()) throw DomainError("nothing to pool");
  const std::size_t m = rows.front().size();
  std::vector<double> out(m);
  std::vector<double> terms(rows.size());
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t k = 0; k < rows.size(); ++k) {
      if (rows[k].size() != m) throw UsageError("studies disagree on the number of hypotheses");
      terms[k] = rows[k][i];
    }
    std::sort(terms.begin(), terms.end());
    double acc = 0.0;
    for (double t : terms) acc += t;
    out[i] = acc;
  }
  return out;
}

MetaReport pool(const MetaInput& meta, const engine::DecisionRule& rule,
                const numerics::QuadratureSettings& settings) {
  return combine(meta, meta.partition.prior_probs, rule, settings);
}

MetaReport pool(const MetaInput& meta, const numerics::QuadratureSettings& settings) {
  return pool(meta, engine::default_rule(meta.partition.size()), settings);
}

MetaReport sequential_update(const PhasePosterior& current, const MetaInput& next_phase,
                             const engine::DecisionRule& rule,
                             const numerics::QuadratureSettings& settings) {
  current.validate();
  if (current.probs.size() != next_phase.partition.size())
    throw UsageError("carried posterior has " + std::to_string(current.probs.size()) +
                     " hypotheses but the next phase tests " +
                     std::to_string(next_phase.partition.size()));
  return combine(next_phase, current.probs, rule, settings);
}

MetaReport sequential_update(const PhasePosterior& current, const MetaInput& next_phase,
                             const numerics::QuadratureSettings& settings) {
  return sequential_update(current, next_phase,
                           engine::default_rule(next_phase.partition.size()), settings);
}

void LandscapeConfig::validate() const {
  if (delta_grid.empty()) throw DomainError("landscape: empty delta grid");
  for (std::size_t i = 0; i < delta_grid.size(); ++i) {
    if (!(delta_grid[i] > 0.0) || !std::isfinite(delta_grid[i]))
      throw DomainError("landscape: margins must be positive and finite");
    if (i > 0 && !(delta_grid[i] > delta_grid[i - 1]))
      throw DomainError("landscape: delta grid must be strictly increasing");
  }
  if (!priors::is_non_local(family)) throw DomainError("landscape: family must be non-local");
  if (!(epsilon > 0.0 && epsilon < 1.0)) throw DomainError("landscape: epsilon must lie in (0, 1)");
  if (!prior_probs.empty() && prior_probs.size() != 3)
    throw UsageError("landscape: three prior probabilities expected");
}

void to_json(nlohmann::json& j, const LandscapeResult& r) {
  nlohmann::json points = nlohmann::json::array();
  for (const auto& p : r.points)
    points.push_back({{"drug", p.drug},
                      {"delta", p.delta},
                      {"p_sup", p.p_superior},
                      {"p_eq", p.p_equivalent},
                      {"p_inf", p.p_inferior},
                      {"studies", p.studies}});
  j = nlohmann::json{{"points", points}, {"warnings", r.warnings}};
}

LandscapeResult landscape(const std::vector<trialdata::StudyRecord>& registry,
                          const LandscapeConfig& config,
                          const numerics::QuadratureSettings& settings) {
  config.validate();
  LandscapeResult result;

  struct Entry {
    std::string id;
    std::string drug;
    engine::TStatSummary summary;
    double scale;
  };
  std::vector<Entry> included;
  std::vector<std::string> order;
  std::map<std::string, std::size_t> per_drug;
  for (const auto& rec : registry) {
    if (!config.reference.empty() && rec.reference != config.reference) {
      result.warnings.push_back("study '" + rec.study_id + "' skipped: reference arm '" +
                                rec.reference + "' is not '" + config.reference + "'");
      continue;
    }
    double scale = 1.0;
    if (config.scale == MarginScale::raw) {
      if (!rec.has_arm_summaries()) {
        result.warnings.push_back("study '" + rec.study_id +
                                  "' skipped: a raw margin needs arm means and sds");
        continue;
      }
      scale = rec.pooled_sd();
    }
    engine::TStatSummary summary;
    try {
      summary = trialdata::to_summary(rec);
    } catch (const Error&) {
      rethrow_for_study(rec.study_id);
    }
    included.push_back({rec.study_id, rec.drug, summary, scale});
    if (per_drug[rec.drug]++ == 0) order.push_back(rec.drug);
  }

  std::vector<std::string> drugs = config.drugs.empty() ? order : config.drugs;
  std::vector<std::string> reported;
  for (const auto& d : drugs) {
    if (per_drug.count(d) == 0 || per_drug[d] == 0)
      result.warnings.push_back("drug '" + d + "' has no usable studies; skipped");
    else
      reported.push_back(d);
  }
  if (included.empty()) {
    result.warnings.push_back("no usable studies; nothing to report");
    return result;
  }

  const std::vector<double> probs =
      config.prior_probs.empty() ? equal_probs(3) : config.prior_probs;
  const auto family = priors::full_family(config.family);
  const std::size_t nd = config.delta_grid.size();

  // rows[g][k]: log marginals of study k at grid point g.
  std::vector<std::vector<std::vector<double>>> rows(nd);
  parallel_for(nd, config.threads, [&](std::size_t g) {
    rows[g].resize(included.size());
    for (std::size_t k = 0; k < included.size(); ++k) {
      const auto& e = included[k];
      const double delta = config.delta_grid[g] / e.scale;
      try {
        const auto part =
            engine::HypothesisPartition::three_way(-delta, delta, family, config.epsilon, probs);
        rows[g][k] = engine::log_marginals(e.summary, part, settings);
      } catch (const Error&) {
        rethrow_for_study(e.id);
      }
    }
  });

  const auto rule = engine::DecisionRule::max_posterior();
  auto emit = [&](const std::string& label, const std::vector<std::size_t>& members,
                  std::size_t g) {
    std::vector<std::vector<double>> subset;
    subset.reserve(members.size());
    for (std::size_t k : members) subset.push_back(rows[g][k]);
    const auto rep = engine::assemble_report(pooled_log_marginals(subset), probs, rule);
    const double low = rep.posteriors[0], mid = rep.posteriors[1], high = rep.posteriors[2];
    result.points.push_back({label, config.delta_grid[g], config.lower_is_better ? low : high,
                             mid, config.lower_is_better ? high : low, members.size()});
  };

  for (const auto& drug : reported) {
    std::vector<std::size_t> members;
    for (std::size_t k = 0; k < included.size(); ++k)
      if (included[k].drug == drug) members.push_back(k);
    for (std::size_t g = 0; g < nd; ++g) emit(drug, members, g);
  }
  std::vector<std::size_t> everyone(included.size());
  for (std::size_t k = 0; k < everyone.size(); ++k) everyone[k] = k;
  for (std::size_t g = 0; g < nd; ++g) emit(config.average_label, everyone, g);
  return result;
}

std::string landscape_csv(const LandscapeResult& result) {
  std::string out = "drug,delta,p_sup,p_eq,p_inf\n";
  for (const auto& p : result.points)
    out += csv_field(p.drug) + "," + format_number(p.delta) + "," + format_number(p.p_superior) +
           "," + format_number(p.p_equivalent) + "," + format_number(p.p_inferior) + "\n";
  return out;
}

}  // namespace intervalbf::meta
