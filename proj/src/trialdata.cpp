#include "intervalbf/trialdata.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <set>
#include <sstream>

namespace intervalbf::trialdata {

namespace {

constexpr std::size_t kBaseColumns = 12;
constexpr std::size_t kAllColumns = 15;
const std::vector<std::string> kColumnNames = {
    "study_id", "drug",    "reference", "phase",    "n_treat", "n_ref", "mean_treat", "mean_ref",
    "sd_treat", "sd_ref",  "endpoint",  "weeks",    "t",       "nu",    "ncp_scale"};

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

// RFC 4180 style: fields separated by commas, optionally double-quoted with
// "" as an escaped quote. Returns false on an unterminated quote.
bool split_csv_line(const std::string& line, std::vector<std::string>& out) {
  out.clear();
  std::string cell;
  bool quoted = false, was_quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char ch = line[i];
    if (quoted) {
      if (ch == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cell.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cell.push_back(ch);
      }
    } else if (ch == '"' && trim(cell).empty()) {
      quoted = was_quoted = true;
      cell.clear();
    } else if (ch == ',') {
      out.push_back(was_quoted ? cell : trim(cell));
      cell.clear();
      was_quoted = false;
    } else {
      cell.push_back(ch);
    }
  }
  if (quoted) return false;
  out.push_back(was_quoted ? cell : trim(cell));
  return true;
}

double parse_number(const std::string& cell, std::size_t row, const std::string& field) {
  if (cell.empty()) throw ParseError(row, field, "missing value");
  double value = 0.0;
  const char* begin = cell.data();
  const char* end = begin + cell.size();
  if (*begin == '+') ++begin;
  const auto [ptr, ec] = std::from_chars(begin, end, value);
  if (ec != std::errc() || ptr != end || !std::isfinite(value))
    throw ParseError(row, field, "not a finite number: '" + cell + "'");
  return value;
}

std::optional<double> parse_optional(const std::string& cell, std::size_t row,
                                     const std::string& field) {
  if (cell.empty()) return std::nullopt;
  return parse_number(cell, row, field);
}

std::string format_number(double x) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, ptr);
}

std::string format_optional(const std::optional<double>& x) {
  return x ? format_number(*x) : std::string();
}

std::string quote_if_needed(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos && trim(s) == s) return s;
  std::string out = "\"";
  for (char ch : s) {
    if (ch == '"') out.push_back('"');
    out.push_back(ch);
  }
  out.push_back('"');
  return out;
}

void check_unique(std::set<std::string>& seen, const StudyRecord& r, std::size_t row) {
  if (!seen.insert(r.study_id).second)
    throw ParseError(row, "study_id", "duplicate study id '" + r.study_id + "'");
}

}  // namespace

bool StudyRecord::has_arm_summaries() const {
  return mean_treat && mean_ref && sd_treat && sd_ref;
}

double StudyRecord::pooled_sd() const {
  if (!has_arm_summaries())
    throw DomainError("study '" + study_id + "' has no arm summaries to pool an sd from");
  const double num = (n_treat - 1.0) * *sd_treat * *sd_treat + (n_ref - 1.0) * *sd_ref * *sd_ref;
  return std::sqrt(num / (n_treat + n_ref - 2.0));
}

void validate(const StudyRecord& r, std::size_t row) {
  if (r.study_id.empty()) throw ParseError(row, "study_id", "empty study id");
  if (r.drug.empty()) throw ParseError(row, "drug", "empty drug label");
  if (r.reference.empty()) throw ParseError(row, "reference", "empty reference label");
  if (r.phase < 1 || r.phase > 3) throw ParseError(row, "phase", "phase must be 1, 2 or 3");
  if (!(r.n_treat >= 2.0)) throw ParseError(row, "n_treat", "group size must be >= 2");
  if (!(r.n_ref >= 2.0)) throw ParseError(row, "n_ref", "group size must be >= 2");
  if (!(r.weeks >= 0.0)) throw ParseError(row, "weeks", "weeks must be >= 0");
  if (r.sd_treat && !(*r.sd_treat > 0.0)) throw ParseError(row, "sd_treat", "sd must be > 0");
  if (r.sd_ref && !(*r.sd_ref > 0.0)) throw ParseError(row, "sd_ref", "sd must be > 0");
  if (r.statistic) {
    if (!(r.statistic->nu > 0.0)) throw ParseError(row, "nu", "degrees of freedom must be > 0");
    if (!(r.statistic->ncp_scale > 0.0))
      throw ParseError(row, "ncp_scale", "noncentrality scale must be > 0");
    return;
  }
  const char* fields[] = {"mean_treat", "mean_ref", "sd_treat", "sd_ref"};
  const std::optional<double>* values[] = {&r.mean_treat, &r.mean_ref, &r.sd_treat, &r.sd_ref};
  for (int i = 0; i < 4; ++i)
    if (!*values[i]) throw ParseError(row, fields[i], "missing value");
}

std::vector<StudyRecord> parse_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw ParseError(0, "header", "empty input");
  if (line.rfind("\xEF\xBB\xBF", 0) == 0) line.erase(0, 3);
  const std::string header = trim(line);
  const std::string base(kCsvHeader);
  const std::string extended = base + "," + std::string(kCsvStatisticColumns);
  std::size_t columns = 0;
  if (header == base)
    columns = kBaseColumns;
  else if (header == extended)
    columns = kAllColumns;
  else
    throw ParseError(0, "header", "expected header '" + extended + "' (last three optional)");

  std::vector<StudyRecord> out;
  std::set<std::string> seen;
  std::vector<std::string> cells;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    ++row;
    if (!split_csv_line(line, cells)) throw ParseError(row, "line", "unterminated quote");
    if (cells.size() != columns)
      throw ParseError(row, "line",
                       "expected " + std::to_string(columns) + " cells, found " +
                           std::to_string(cells.size()));
    StudyRecord r;
    r.study_id = cells[0];
    r.drug = cells[1];
    r.reference = cells[2];
    const double phase = parse_number(cells[3], row, "phase");
    if (phase != std::floor(phase)) throw ParseError(row, "phase", "phase must be an integer");
    r.phase = static_cast<int>(phase);
    r.n_treat = parse_number(cells[4], row, "n_treat");
    r.n_ref = parse_number(cells[5], row, "n_ref");
    r.mean_treat = parse_optional(cells[6], row, "mean_treat");
    r.mean_ref = parse_optional(cells[7], row, "mean_ref");
    r.sd_treat = parse_optional(cells[8], row, "sd_treat");
    r.sd_ref = parse_optional(cells[9], row, "sd_ref");
    r.endpoint = cells[10];
    r.weeks = parse_number(cells[11], row, "weeks");
    if (columns == kAllColumns) {
      const bool any = !cells[12].empty() || !cells[13].empty() || !cells[14].empty();
      if (any)
        r.statistic = PrecomputedStatistic{parse_number(cells[12], row, "t"),
                                           parse_number(cells[13], row, "nu"),
                                           parse_number(cells[14], row, "ncp_scale")};
    }
    validate(r, row);
    check_unique(seen, r, row);
    out.push_back(std::move(r));
  }
  return out;
}

std::vector<StudyRecord> parse_json(const nlohmann::json& array) {
  if (!array.is_array()) throw ParseError(0, "registry", "expected a JSON array");
  std::vector<StudyRecord> out;
  std::set<std::string> seen;
  std::size_t row = 0;
  for (const auto& obj : array) {
    ++row;
    if (!obj.is_object()) throw ParseError(row, "record", "expected an object");
    auto text = [&](const char* key) {
      if (!obj.contains(key) || !obj.at(key).is_string())
        throw ParseError(row, key, "missing or non-string value");
      return obj.at(key).get<std::string>();
    };
    auto number = [&](const char* key) {
      if (!obj.contains(key) || !obj.at(key).is_number())
        throw ParseError(row, key, "missing or non-numeric value");
      return obj.at(key).get<double>();
    };
    auto optional = [&](const char* key) -> std::optional<double> {
      if (!obj.contains(key) || obj.at(key).is_null()) return std::nullopt;
      if (!obj.at(key).is_number()) throw ParseError(row, key, "non-numeric value");
      return obj.at(key).get<double>();
    };
    StudyRecord r;
    r.study_id = text("study_id");
    r.drug = text("drug");
    r.reference = text("reference");
    const double phase = number("phase");
    if (phase != std::floor(phase)) throw ParseError(row, "phase", "phase must be an integer");
    r.phase = static_cast<int>(phase);
    r.n_treat = number("n_treat");
    r.n_ref = number("n_ref");
    r.mean_treat = optional("mean_treat");
    r.mean_ref = optional("mean_ref");
    r.sd_treat = optional("sd_treat");
    r.sd_ref = optional("sd_ref");
    r.endpoint = obj.contains("endpoint") ? text("endpoint") : std::string();
    r.weeks = number("weeks");
    const auto t = optional("t"), nu = optional("nu"), c = optional("ncp_scale");
    if (t || nu || c) {
      if (!t || !nu || !c)
        throw ParseError(row, "t", "t, nu and ncp_scale must be given together");
      r.statistic = PrecomputedStatistic{*t, *nu, *c};
    }
    validate(r, row);
    check_unique(seen, r, row);
    out.push_back(std::move(r));
  }
  return out;
}

std::vector<StudyRecord> parse_registry(std::istream& in) {
  std::stringstream buffer;
  buffer << in.rdbuf();
  const std::string text = buffer.str();
  const auto first = text.find_first_not_of(" \t\r\n");
  if (first != std::string::npos && text[first] == '[') {
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
      throw ParseError(0, "json", e.what());
    }
    return parse_json(j);
  }
  std::istringstream csv(text);
  return parse_csv(csv);
}

std::vector<StudyRecord> load_registry(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DomainError("cannot open registry '" + path + "'");
  return parse_registry(in);
}

std::string to_csv(const std::vector<StudyRecord>& records) {
  bool with_stats = false;
  for (const auto& r : records) with_stats = with_stats || r.statistic.has_value();
  std::string out(kCsvHeader);
  if (with_stats) out += "," + std::string(kCsvStatisticColumns);
  out += "\n";
  for (const auto& r : records) {
    out += quote_if_needed(r.study_id) + "," + quote_if_needed(r.drug) + "," +
           quote_if_needed(r.reference) + "," + std::to_string(r.phase) + "," +
           format_number(r.n_treat) + "," + format_number(r.n_ref) + "," +
           format_optional(r.mean_treat) + "," + format_optional(r.mean_ref) + "," +
           format_optional(r.sd_treat) + "," + format_optional(r.sd_ref) + "," +
           quote_if_needed(r.endpoint) + "," + format_number(r.weeks);
    if (with_stats) {
      if (r.statistic)
        out += "," + format_number(r.statistic->t) + "," + format_number(r.statistic->nu) +
               "," + format_number(r.statistic->ncp_scale);
      else
        out += ",,,";
    }
    out += "\n";
  }
  return out;
}

nlohmann::json to_json(const std::vector<StudyRecord>& records) {
  auto opt = [](const std::optional<double>& x) {
    return x ? nlohmann::json(*x) : nlohmann::json();
  };
  nlohmann::json out = nlohmann::json::array();
  for (const auto& r : records) {
    nlohmann::json o{{"study_id", r.study_id},     {"drug", r.drug},
                     {"reference", r.reference},   {"phase", r.phase},
                     {"n_treat", r.n_treat},       {"n_ref", r.n_ref},
                     {"mean_treat", opt(r.mean_treat)}, {"mean_ref", opt(r.mean_ref)},
                     {"sd_treat", opt(r.sd_treat)},     {"sd_ref", opt(r.sd_ref)},
                     {"endpoint", r.endpoint},     {"weeks", r.weeks}};
    if (r.statistic) {
      o["t"] = r.statistic->t;
      o["nu"] = r.statistic->nu;
      o["ncp_scale"] = r.statistic->ncp_scale;
    }
    out.push_back(std::move(o));
  }
  return out;
}

engine::TStatSummary to_summary(const StudyRecord& record) {
  validate(record, 0);
  if (record.statistic) {
    engine::TStatSummary s;
    s.design = engine::Design::two_sample;
    s.t_obs = record.statistic->t;
    s.nu = record.statistic->nu;
    s.ncp_scale = record.statistic->ncp_scale;
    s.n1 = record.n_treat;
    s.n2 = record.n_ref;
    s.validate();
    return s;
  }
  return engine::summarize(engine::Design::two_sample, record.n_treat, record.n_ref,
                           *record.mean_treat - *record.mean_ref, record.pooled_sd());
}

}  // namespace intervalbf::trialdata
