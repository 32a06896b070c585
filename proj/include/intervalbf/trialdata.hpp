#ifndef INTERVALBF_TRIALDATA_HPP
#define INTERVALBF_TRIALDATA_HPP

// Study registry: per-arm trial summaries read from CSV or JSON.
//
// CSV header (exact, in this order):
//   study_id,drug,reference,phase,n_treat,n_ref,mean_treat,mean_ref,sd_treat,sd_ref,endpoint,weeks
// optionally followed by t,nu,ncp_scale for studies reported only at the
// statistic level; on such rows the mean and sd cells may be left empty.

#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "intervalbf/engine.hpp"

namespace intervalbf::trialdata {

struct PrecomputedStatistic {
  double t;
  double nu;
  double ncp_scale;
  friend bool operator==(const PrecomputedStatistic&, const PrecomputedStatistic&) = default;
};

struct StudyRecord {
  std::string study_id;
  std::string drug;
  std::string reference;
  int phase = 3;
  double n_treat = 0.0;
  double n_ref = 0.0;
  std::optional<double> mean_treat;
  std::optional<double> mean_ref;
  std::optional<double> sd_treat;
  std::optional<double> sd_ref;
  std::string endpoint;
  double weeks = 0.0;
  std::optional<PrecomputedStatistic> statistic;

  bool has_arm_summaries() const;
  /// √(((n₁-1)s₁² + (n₂-1)s₂²)/(n₁+n₂-2)); DomainError for statistic-only rows.
  double pooled_sd() const;
  friend bool operator==(const StudyRecord&, const StudyRecord&) = default;
};

/// Field and invariant checks; `row` is used in the error message.
void validate(const StudyRecord& record, std::size_t row);

inline constexpr std::string_view kCsvHeader =
    "study_id,drug,reference,phase,n_treat,n_ref,mean_treat,mean_ref,sd_treat,sd_ref,endpoint,"
    "weeks";
inline constexpr std::string_view kCsvStatisticColumns = "t,nu,ncp_scale";

std::vector<StudyRecord> parse_csv(std::istream& in);
std::vector<StudyRecord> parse_json(const nlohmann::json& array);
/// Dispatches on the first non-blank character: '[' means JSON.
std::vector<StudyRecord> parse_registry(std::istream& in);
std::vector<StudyRecord> load_registry(const std::string& path);

/// CSV with the statistic columns appended only when some record needs them.
std::string to_csv(const std::vector<StudyRecord>& records);
nlohmann::json to_json(const std::vector<StudyRecord>& records);

/// Two-sample t summary of treatment minus reference.
engine::TStatSummary to_summary(const StudyRecord& record);

}  // namespace intervalbf::trialdata

#endif  // INTERVALBF_TRIALDATA_HPP
