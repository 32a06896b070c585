// intervalbf: command-line front end.
//
// Every subcommand resolves its settings as defaults <- --config JSON <-
// explicit flags, runs, and emits {"manifest": ..., "result": ...} on stdout
// or a bundle directory with --out.

#include <openssl/evp.h>

#include <chrono>
#include <cmath>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "intervalbf/engine.hpp"
#include "intervalbf/frequentist.hpp"
#include "intervalbf/meta.hpp"
#include "intervalbf/simlab.hpp"
#include "intervalbf/svg.hpp"
#include "intervalbf/trialdata.hpp"

#ifndef INTERVALBF_VERSION
#define INTERVALBF_VERSION "0.0.0"
#endif

namespace fs = std::filesystem;
using nlohmann::json;
using namespace intervalbf;

namespace {

enum class Kind { number, integer, text, flag, numbers, texts, path };

struct OptSpec {
  std::string key;
  Kind kind;
  json fallback;
  std::string help;
};

struct Output {
  json result;
  std::string csv;
  std::string svg;
};

class Resolved;
using Handler = std::function<Output(Resolved&)>;

struct Command {
  std::string name;
  std::string description;
  std::vector<OptSpec> options;
  bool table = false;
  Handler run;
};

std::string flag_name(const std::string& key) {
  std::string s = "--" + key;
  for (auto& ch : s)
    if (ch == '_') ch = '-';
  return s;
}

std::string key_name(std::string s) {
  for (auto& ch : s)
    if (ch == '-') ch = '_';
  return s;
}

double parse_double(const std::string& text, const std::string& key) {
  if (text == "inf" || text == "+inf") return std::numeric_limits<double>::infinity();
  if (text == "-inf") return -std::numeric_limits<double>::infinity();
  std::size_t pos = 0;
  double v = 0.0;
  try {
    v = std::stod(text, &pos);
  } catch (const std::exception&) {
    pos = std::string::npos;
  }
  if (pos != text.size() || std::isnan(v))
    throw UsageError(flag_name(key) + ": not a number: '" + text + "'");
  return v;
}

std::vector<std::string> split(const std::string& text) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream in(text);
  while (std::getline(in, cell, ',')) {
    const auto b = cell.find_first_not_of(" \t");
    const auto e = cell.find_last_not_of(" \t");
    out.push_back(b == std::string::npos ? "" : cell.substr(b, e - b + 1));
  }
  return out;
}

json number_json(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return v;
}

json parse_flag_value(const OptSpec& spec, const std::string& text) {
  switch (spec.kind) {
    case Kind::number:
      return number_json(parse_double(text, spec.key));
    case Kind::integer: {
      const double v = parse_double(text, spec.key);
      if (v != std::floor(v) || v < 0 || std::isinf(v))
        throw UsageError(flag_name(spec.key) + ": expected a non-negative integer");
      return static_cast<std::uint64_t>(v);
    }
    case Kind::numbers: {
      json arr = json::array();
      for (const auto& cell : split(text)) arr.push_back(number_json(parse_double(cell, spec.key)));
      return arr;
    }
    case Kind::texts: {
      json arr = json::array();
      for (const auto& cell : split(text)) arr.push_back(cell);
      return arr;
    }
    default:
      return text;
  }
}

void check_config_value(const OptSpec& spec, const json& v) {
  if (v.is_null()) return;
  auto is_num = [](const json& x) {
    return x.is_number() || (x.is_string() && (x == "inf" || x == "-inf" || x == "+inf"));
  };
  bool ok = true;
  switch (spec.kind) {
    case Kind::number: ok = is_num(v); break;
    case Kind::integer: ok = v.is_number_unsigned() || (v.is_number_integer() && v.get<long long>() >= 0); break;
    case Kind::flag: ok = v.is_boolean(); break;
    case Kind::text:
    case Kind::path: ok = v.is_string(); break;
    case Kind::numbers:
      ok = v.is_array();
      if (ok)
        for (const auto& x : v) ok = ok && is_num(x);
      break;
    case Kind::texts:
      ok = v.is_array();
      if (ok)
        for (const auto& x : v) ok = ok && x.is_string();
      break;
  }
  if (!ok) throw UsageError("config: wrong type for '" + spec.key + "'");
}

double as_double(const json& v) {
  if (v.is_string()) {
    const auto s = v.get<std::string>();
    if (s == "inf" || s == "+inf") return std::numeric_limits<double>::infinity();
    if (s == "-inf") return -std::numeric_limits<double>::infinity();
    throw UsageError("expected a number, got '" + s + "'");
  }
  return v.get<double>();
}

/// Resolved settings of one invocation.
class Resolved {
 public:
  explicit Resolved(json cfg) : cfg_(std::move(cfg)) {}

  bool has(const std::string& key) const { return cfg_.contains(key) && !cfg_.at(key).is_null(); }
  std::optional<double> num(const std::string& key) const {
    if (!has(key)) return std::nullopt;
    return as_double(cfg_.at(key));
  }
  double num_or(const std::string& key, double fallback) const {
    return num(key).value_or(fallback);
  }
  double need(const std::string& key) const {
    if (!has(key)) throw UsageError(flag_name(key) + " is required");
    return *num(key);
  }
  std::optional<std::uint64_t> integer(const std::string& key) const {
    if (!has(key)) return std::nullopt;
    return cfg_.at(key).get<std::uint64_t>();
  }
  std::string text(const std::string& key) const {
    return has(key) ? cfg_.at(key).get<std::string>() : std::string();
  }
  bool flag(const std::string& key) const { return has(key) && cfg_.at(key).get<bool>(); }
  std::vector<double> nums(const std::string& key) const {
    std::vector<double> out;
    if (has(key))
      for (const auto& v : cfg_.at(key)) out.push_back(as_double(v));
    return out;
  }
  std::vector<std::string> texts(const std::string& key) const {
    return has(key) ? cfg_.at(key).get<std::vector<std::string>>() : std::vector<std::string>{};
  }
  /// Record a materialized default.
  void set(const std::string& key, json v) { cfg_[key] = std::move(v); }
  const json& config() const { return cfg_; }

 private:
  json cfg_;
};

// ---- shared option groups -------------------------------------------------

std::vector<OptSpec> summary_options() {
  return {
      {"design", Kind::text, "one_sample", "one_sample | two_sample"},
      {"n1", Kind::number, nullptr, "sample size (treatment group for two_sample) [count]"},
      {"n2", Kind::number, nullptr, "reference group size, two_sample only [count]"},
      {"mean_diff", Kind::number, nullptr,
       "observed mean (one_sample) or mean difference n1-group minus n2-group [raw outcome units]"},
      {"sd", Kind::number, nullptr, "sample sd, pooled for two_sample [raw outcome units]"},
      {"t", Kind::number, nullptr, "precomputed t statistic, instead of mean/sd [dimensionless]"},
      {"nu", Kind::number, nullptr, "degrees of freedom with --t [count]"},
      {"ncp_scale", Kind::number, nullptr,
       "noncentrality scale c with --t, lambda = c*d [sqrt(count)]"},
  };
}

std::vector<OptSpec> margin_options() {
  return {
      {"delta", Kind::number, nullptr, "margin half-width [standardized effect units]"},
      {"delta_raw", Kind::number, nullptr,
       "margin half-width, divided by the sd [raw outcome units]"},
  };
}

std::vector<OptSpec> prior_options() {
  return {
      {"prior", Kind::text, "moment", "non-local family: moment | inverse_moment"},
      {"epsilon", Kind::number, nullptr,
       "prior mass leaked into the margin region; default 0.01 (moment), 1e-8 "
       "(inverse_moment) [probability]"},
  };
}

std::vector<OptSpec> quadrature_options() {
  return {
      {"rel_tol", Kind::number, 1e-8, "quadrature relative tolerance [dimensionless]"},
      {"abs_tol", Kind::number, 1e-12, "quadrature absolute tolerance [dimensionless]"},
      {"max_subdivisions", Kind::integer, 200, "quadrature subdivision limit [count]"},
      {"tail_cut", Kind::number, 20.0,
       "likelihood window half-width [likelihood standard errors]"},
  };
}

std::vector<OptSpec> concat(std::initializer_list<std::vector<OptSpec>> groups) {
  std::vector<OptSpec> out;
  for (const auto& g : groups) out.insert(out.end(), g.begin(), g.end());
  return out;
}

numerics::QuadratureSettings quadrature(const Resolved& r) {
  numerics::QuadratureSettings q;
  q.rel_tol = r.num_or("rel_tol", q.rel_tol);
  q.abs_tol = r.num_or("abs_tol", q.abs_tol);
  q.max_subdivisions = static_cast<int>(r.integer("max_subdivisions").value_or(q.max_subdivisions));
  q.tail_cut = r.num_or("tail_cut", q.tail_cut);
  q.validate();
  return q;
}

priors::Family prior_family(Resolved& r) {
  const auto f = priors::full_family(priors::family_from_string(r.text("prior")));
  if (!priors::is_non_local(f)) throw UsageError("--prior must be a non-local family");
  return f;
}

double prior_epsilon(Resolved& r, priors::Family f) {
  const double eps = r.num_or("epsilon", f == priors::Family::moment
                                             ? priors::kMomentEpsilon
                                             : priors::kInverseMomentEpsilon);
  r.set("epsilon", eps);
  return eps;
}

struct SummaryInput {
  engine::TStatSummary summary;
  std::optional<double> sd;
};

SummaryInput read_summary(Resolved& r) {
  const auto design = engine::design_from_string(r.text("design"));
  if (r.has("t")) {
    engine::TStatSummary s;
    s.design = design;
    s.t_obs = r.need("t");
    if (r.has("n1")) {
      s.n1 = r.need("n1");
      if (design == engine::Design::two_sample) s.n2 = r.need("n2");
    }
    const auto derived = r.has("n1") ? std::optional(engine::summarize(design, s.n1, s.n2, 0.0, 1.0))
                                     : std::nullopt;
    s.nu = r.has("nu") ? r.need("nu") : derived ? derived->nu : r.need("nu");
    s.ncp_scale = r.has("ncp_scale") ? r.need("ncp_scale")
                  : derived          ? derived->ncp_scale
                                     : r.need("ncp_scale");
    s.validate();
    return {s, r.num("sd")};
  }
  const double n1 = r.need("n1");
  std::optional<double> n2;
  if (design == engine::Design::two_sample) n2 = r.need("n2");
  const double sd = r.need("sd");
  return {engine::summarize(design, n1, n2, r.need("mean_diff"), sd), sd};
}

struct Margin {
  double delta;
  std::optional<double> delta_raw;
  std::optional<double> sd;
};

json to_json(const Margin& m) {
  return {{"delta", m.delta},
          {"delta_raw", m.delta_raw ? json(*m.delta_raw) : json()},
          {"sd", m.sd ? json(*m.sd) : json()}};
}

Margin read_margin(const Resolved& r, std::optional<double> sd) {
  if (r.has("delta") && r.has("delta_raw"))
    throw UsageError("give either --delta or --delta-raw, not both");
  if (r.has("delta_raw")) {
    if (!sd) throw UsageError("--delta-raw needs --sd to convert to standardized units");
    return {r.need("delta_raw") / *sd, r.need("delta_raw"), sd};
  }
  if (!r.has("delta")) throw UsageError("a margin is required: --delta or --delta-raw");
  return {r.need("delta"), std::nullopt, sd};
}

engine::DecisionRule read_rule(Resolved& r, std::size_t hypotheses) {
  std::string kind = r.text("rule");
  if (kind.empty()) kind = hypotheses == 2 ? "kappa" : "max";
  r.set("rule", kind);
  if (kind == "kappa") return engine::DecisionRule::threshold(r.num_or("kappa", 0.5));
  if (kind == "max") return engine::DecisionRule::max_posterior();
  throw UsageError("--rule must be kappa or max");
}

std::string fmt(double x) {
  std::ostringstream s;
  s << std::setprecision(17) << x;
  return s.str();
}

/// Posterior-vs-δ panel plus its CSV.
void curve_output(Output& out, const std::vector<double>& grid,
                  const std::vector<std::vector<double>>& posts, const std::string& x_label) {
  const std::size_t m = posts.empty() ? 0 : posts.front().size();
  std::string csv = "delta";
  for (std::size_t i = 0; i < m; ++i) csv += ",p_h" + std::to_string(m == 2 ? i : i + 1);
  csv += "\n";
  svg::Panel panel{"Posterior probability vs margin", x_label, "posterior", {}, {{0.0, 1.0}}, {}};
  for (std::size_t i = 0; i < m; ++i)
    panel.series.push_back({"H" + std::to_string(m == 2 ? i : i + 1), {}, {}, false});
  for (std::size_t g = 0; g < grid.size(); ++g) {
    csv += fmt(grid[g]);
    for (std::size_t i = 0; i < m; ++i) {
      csv += "," + fmt(posts[g][i]);
      panel.series[i].x.push_back(grid[g]);
      panel.series[i].y.push_back(posts[g][i]);
    }
    csv += "\n";
  }
  out.csv = csv;
  out.svg = svg::render({panel}, "Posterior hypothesis probabilities", 1);
  json curve = json::array();
  for (std::size_t g = 0; g < grid.size(); ++g)
    curve.push_back({{"delta", grid[g]}, {"posteriors", posts[g]}});
  out.result["curve"] = curve;
}

std::vector<double> read_probs(const Resolved& r, std::size_t m) {
  auto p = r.nums("probs");
  if (p.empty()) return std::vector<double>(m, 1.0 / static_cast<double>(m));
  if (p.size() != m)
    throw UsageError("--probs needs " + std::to_string(m) + " values");
  return p;
}

// ---- subcommands ----------------------------------------------------------

Output run_tune(Resolved& r) {
  const auto family = priors::family_from_string(r.text("family"));
  if (!priors::is_non_local(family)) throw UsageError("--family must be non-local");
  const auto margin = read_margin(r, r.num("sd"));
  const double eps = prior_epsilon(r, priors::full_family(family));
  const double tau = priors::tune_tau(family, {margin.delta, eps});
  const auto full = priors::PriorSpec::non_local(priors::full_family(family), tau);
  Output out;
  out.result = {{"family", priors::to_string(family)},
                {"margin", to_json(margin)},
                {"epsilon", eps},
                {"tau", tau},
                {"interval_mass", priors::interval_mass(full, {-margin.delta, margin.delta})}};
  return out;
}

Output run_test(Resolved& r) {
  const auto in = read_summary(r);
  const auto margin = read_margin(r, in.sd);
  const auto family = prior_family(r);
  const double eps = prior_epsilon(r, family);
  const auto part =
      engine::HypothesisPartition::two_way(margin.delta, family, eps, r.num_or("p_null", 0.5));
  const auto rule = read_rule(r, 2);
  const auto report = engine::posterior(in.summary, part, rule, quadrature(r));
  Output out;
  out.result = {{"summary", in.summary}, {"margin", to_json(margin)},
                {"partition", part},     {"rule", rule},
                {"report", report}};
  return out;
}

engine::HypothesisPartition multi_partition(Resolved& r, const SummaryInput& in, json& echo) {
  if (r.has("partition")) {
    std::ifstream f(r.text("partition"));
    if (!f) throw UsageError("cannot open partition file '" + r.text("partition") + "'");
    json j;
    try {
      j = json::parse(f);
    } catch (const json::parse_error& e) {
      throw UsageError(std::string("partition file: ") + e.what());
    }
    return engine::partition_from_json(j);
  }
  const auto family = prior_family(r);
  const double eps = prior_epsilon(r, family);
  std::vector<double> cuts = r.nums("cutpoints");
  if (cuts.empty() && r.has("cutpoints_raw")) {
    if (!in.sd) throw UsageError("--cutpoints-raw needs --sd");
    for (double c : r.nums("cutpoints_raw")) cuts.push_back(c / *in.sd);
  }
  if (cuts.empty()) {
    const auto m = read_margin(r, in.sd);
    echo["margin"] = to_json(m);
    cuts = {-m.delta, m.delta};
  }
  if (cuts.size() != 2)
    throw UsageError("three-way testing takes exactly two cutpoints (or --partition FILE)");
  echo["cutpoints"] = cuts;
  return engine::HypothesisPartition::three_way(cuts[0], cuts[1], family, eps, read_probs(r, 3));
}

Output run_multi(Resolved& r) {
  const auto in = read_summary(r);
  json echo = json::object();
  const auto part = multi_partition(r, in, echo);
  const auto rule = read_rule(r, part.size());
  const auto q = quadrature(r);
  Output out;
  out.result = {{"summary", in.summary}, {"partition", part}, {"rule", rule},
                {"report", engine::posterior(in.summary, part, rule, q)}};
  out.result.update(echo);
  const auto grid = r.nums("curve");
  if (!grid.empty()) {
    const bool raw = r.has("delta_raw") || r.has("cutpoints_raw");
    const auto family = prior_family(r);
    const double eps = prior_epsilon(r, family);
    std::vector<std::vector<double>> posts;
    for (double d : grid) {
      const double ds = raw ? d / *in.sd : d;
      const auto p = engine::HypothesisPartition::three_way(-ds, ds, family, eps, read_probs(r, 3));
      posts.push_back(engine::posterior(in.summary, p, engine::DecisionRule::max_posterior(), q)
                          .posteriors);
    }
    curve_output(out, grid, posts, raw ? "delta (raw units)" : "delta (standardized)");
  }
  return out;
}

frequentist::EffectEstimate read_estimate(const Resolved& r) {
  frequentist::EffectEstimate e;
  e.design = engine::design_from_string(r.text("design"));
  e.n1 = r.need("n1");
  if (e.design == engine::Design::two_sample) e.n2 = r.need("n2");
  e.mean = r.need("mean_diff");
  e.sd = r.need("sd");
  e.validate();
  return e;
}

Output run_tost(Resolved& r) {
  const auto est = read_estimate(r);
  frequentist::EquivalenceBounds b{};
  json margin;
  if (r.has("lower") || r.has("upper")) {
    b = {r.need("lower"), r.need("upper")};
  } else {
    const auto m = read_margin(r, est.sd);
    b = {-m.delta * est.sd, m.delta * est.sd};
    margin = to_json(m);
  }
  const double alpha = r.num_or("alpha", 0.05);
  r.set("alpha", alpha);
  Output out;
  out.result = {{"bounds", {b.lower, b.upper}},
                {"alpha", alpha},
                {"tost", frequentist::tost(est, b, alpha)}};
  if (!margin.is_null()) out.result["margin"] = margin;
  return out;
}

Output run_sgpv(Resolved& r) {
  priors::Interval null_interval{};
  if (r.has("null")) {
    const auto v = r.nums("null");
    if (v.size() != 2) throw UsageError("--null takes LO,HI");
    null_interval = {v[0], v[1]};
  }
  priors::Interval estimate{};
  if (r.has("interval")) {
    const auto v = r.nums("interval");
    if (v.size() != 2) throw UsageError("--interval takes LO,HI");
    estimate = {v[0], v[1]};
    if (!r.has("null")) {
      const auto m = read_margin(r, r.num("sd"));
      const double s = m.delta_raw ? *m.sd : 1.0;
      null_interval = {-m.delta * s, m.delta * s};
    }
  } else {
    const auto est = read_estimate(r);
    const double alpha = r.num_or("alpha", 0.05);
    r.set("alpha", alpha);
    estimate = frequentist::confidence_interval(est, alpha);
    if (!r.has("null")) {
      const auto m = read_margin(r, est.sd);
      null_interval = {-m.delta * est.sd, m.delta * est.sd};
    }
  }
  Output out;
  out.result = {{"interval", {number_json(estimate.lo), number_json(estimate.hi)}},
                {"null", {number_json(null_interval.lo), number_json(null_interval.hi)}},
                {"sgpv", frequentist::sgpv(estimate, null_interval)}};
  return out;
}

/// Studies of a registry under a margin; a raw margin is standardized per study.
meta::MetaInput registry_input(Resolved& r, const std::string& key, std::size_t hypotheses,
                               const std::vector<double>& probs, double margin_value, bool raw) {
  const auto records = trialdata::load_registry(r.text(key));
  if (records.empty()) throw UsageError("registry '" + r.text(key) + "' has no studies");
  const auto family = prior_family(r);
  const double eps = prior_epsilon(r, family);
  auto build = [&](double d) {
    return hypotheses == 2
               ? engine::HypothesisPartition::two_way(d, family, eps, probs[0])
               : engine::HypothesisPartition::three_way(-d, d, family, eps, probs);
  };
  meta::MetaInput in;
  for (const auto& rec : records) {
    meta::MetaStudy s{rec.study_id, trialdata::to_summary(rec), std::nullopt};
    if (raw) {
      if (!rec.has_arm_summaries())
        throw UsageError("study '" + rec.study_id + "': --delta-raw needs arm means and sds");
      s.partition = build(margin_value / rec.pooled_sd());
    }
    in.studies.push_back(std::move(s));
  }
  in.partition = raw ? *in.studies.front().partition : build(margin_value);
  return in;
}

std::size_t read_hypotheses(Resolved& r) {
  const auto h = r.integer("hypotheses").value_or(2);
  if (h != 2 && h != 3) throw UsageError("--hypotheses must be 2 or 3");
  return h;
}

std::pair<double, bool> registry_margin(const Resolved& r) {
  if (r.has("delta") && r.has("delta_raw"))
    throw UsageError("give either --delta or --delta-raw, not both");
  if (r.has("delta_raw")) return {r.need("delta_raw"), true};
  if (r.has("delta")) return {r.need("delta"), false};
  throw UsageError("a margin is required: --delta or --delta-raw");
}

Output run_meta(Resolved& r) {
  const std::size_t h = read_hypotheses(r);
  const auto probs = read_probs(r, h);
  const auto [value, raw] = registry_margin(r);
  const auto q = quadrature(r);
  const auto in = registry_input(r, "registry", h, probs, value, raw);
  const auto rule = read_rule(r, h);
  Output out;
  out.result = {{"margin", {{raw ? "delta_raw" : "delta", value}}},
                {"partition", in.partition},
                {"pooled", meta::pool(in, rule, q)}};
  const auto grid = r.nums("curve");
  if (!grid.empty()) {
    std::vector<std::vector<double>> posts;
    for (double d : grid) {
      const auto at = registry_input(r, "registry", h, probs, d, raw);
      posts.push_back(meta::pool(at, engine::DecisionRule::max_posterior(), q).report.posteriors);
    }
    curve_output(out, grid, posts, raw ? "delta (raw units)" : "delta (standardized)");
  }
  return out;
}

Output run_e2e(Resolved& r) {
  const std::size_t h = read_hypotheses(r);
  const auto [value, raw] = registry_margin(r);
  const auto q = quadrature(r);
  const auto rule = read_rule(r, h);
  const auto equal = std::vector<double>(h, 1.0 / static_cast<double>(h));
  Output out;
  meta::PhasePosterior carried;
  if (r.has("phase2_probs")) {
    if (r.has("phase2")) throw UsageError("give either --phase2 or --phase2-probs, not both");
    carried.probs = r.nums("phase2_probs");
    out.result["phase2"] = {{"probs", carried.probs}};
  } else if (r.has("phase2")) {
    const auto p2 = meta::pool(registry_input(r, "phase2", h, equal, value, raw), rule, q);
    carried = meta::PhasePosterior::from_report(p2.report);
    out.result["phase2"] = p2;
  } else {
    throw UsageError("--phase2 FILE or --phase2-probs is required");
  }
  if (!r.has("phase3")) throw UsageError("--phase3 is required");
  const auto p3 = registry_input(r, "phase3", h, equal, value, raw);
  out.result["margin"] = {{raw ? "delta_raw" : "delta", value}};
  out.result["phase3"] = meta::sequential_update(carried, p3, rule, q);
  return out;
}

Output run_landscape(Resolved& r) {
  const auto records = trialdata::load_registry(r.text("registry"));
  meta::LandscapeConfig c;
  c.reference = r.text("reference");
  if (c.reference.empty() && !records.empty()) {
    c.reference = records.front().reference;
    r.set("reference", c.reference);
  }
  c.delta_grid = r.nums("deltas");
  const std::string scale = r.text("scale");
  if (scale == "raw")
    c.scale = meta::MarginScale::raw;
  else if (scale == "standardized")
    c.scale = meta::MarginScale::standardized;
  else
    throw UsageError("--scale must be raw or standardized");
  c.family = prior_family(r);
  c.epsilon = prior_epsilon(r, c.family);
  c.prior_probs = r.nums("probs");
  c.lower_is_better = !r.flag("higher_is_better");
  c.drugs = r.texts("drugs");
  const auto res = meta::landscape(records, c, quadrature(r));
  for (const auto& w : res.warnings) std::cerr << "warning: " << w << "\n";

  Output out;
  out.result = res;
  out.csv = meta::landscape_csv(res);
  std::vector<svg::Panel> panels = {
      {"Superiority", "delta", "posterior", {}, {{0.0, 1.0}}, {}},
      {"Equivalence", "delta", "posterior", {}, {{0.0, 1.0}}, {}},
      {"Inferiority", "delta", "posterior", {}, {{0.0, 1.0}}, {}}};
  std::map<std::string, std::size_t> series;
  for (const auto& p : res.points) {
    auto [it, fresh] = series.emplace(p.drug, series.size());
    if (fresh)
      for (auto& panel : panels)
        panel.series.push_back({p.drug, {}, {}, p.drug == c.average_label});
    const double ys[] = {p.p_superior, p.p_equivalent, p.p_inferior};
    for (int k = 0; k < 3; ++k) {
      panels[k].series[it->second].x.push_back(p.delta);
      panels[k].series[it->second].y.push_back(ys[k]);
    }
  }
  out.svg = svg::render(panels, "Competitive landscape vs " + c.reference, 3);
  return out;
}

Output run_simulate(Resolved& r) {
  const auto experiment = simlab::experiment_from_string(r.text("experiment"));
  auto c = simlab::ExperimentConfig::defaults(experiment);
  if (r.has("mu")) c.mu_values = r.nums("mu");
  if (r.has("n")) {
    c.n_values.clear();
    for (double n : r.nums("n")) {
      if (n != std::floor(n) || n < 2) throw UsageError("--n values must be integers >= 2");
      c.n_values.push_back(static_cast<std::size_t>(n));
    }
  }
  if (r.has("mu_ranges")) {
    const auto v = r.nums("mu_ranges");
    if (v.size() % 2 != 0) throw UsageError("--mu-ranges takes LO,HI pairs");
    c.mu_ranges.clear();
    for (std::size_t i = 0; i < v.size(); i += 2) c.mu_ranges.push_back({v[i], v[i + 1]});
  }
  if (r.has("deltas")) c.deltas = r.nums("deltas");
  if (r.has("reps")) c.replications = *r.integer("reps");
  if (r.has("seed")) c.seed = *r.integer("seed");
  if (r.has("methods")) {
    c.methods.clear();
    for (const auto& m : r.texts("methods")) c.methods.push_back(simlab::method_from_string(m));
  }
  if (r.has("kappas")) c.kappas = r.nums("kappas");
  c.alpha = r.num_or("alpha", c.alpha);
  c.epsilon_moment = r.num_or("epsilon_moment", c.epsilon_moment);
  c.epsilon_imom = r.num_or("epsilon_imom", c.epsilon_imom);
  if (r.has("studies")) c.studies = *r.integer("studies");
  if (r.has("n_min")) c.n_min = *r.integer("n_min");
  if (r.has("n_max")) c.n_max = *r.integer("n_max");
  if (r.has("phase2_probs")) c.phase2_null_probs = r.nums("phase2_probs");
  c.quadrature = quadrature(r);
  c.validate();

  std::vector<std::string> methods;
  for (auto m : c.methods) methods.emplace_back(simlab::to_string(m));
  json ranges = json::array();
  for (const auto& mr : c.mu_ranges) ranges.push_back(mr.lo), ranges.push_back(mr.hi);
  r.set("mu", c.mu_values);
  r.set("n", c.n_values);
  r.set("mu_ranges", ranges);
  r.set("deltas", c.deltas);
  r.set("reps", c.replications);
  r.set("seed", c.seed);
  r.set("methods", methods);
  r.set("kappas", c.kappas);
  r.set("alpha", c.alpha);
  r.set("epsilon_moment", c.epsilon_moment);
  r.set("epsilon_imom", c.epsilon_imom);
  r.set("studies", c.studies);
  r.set("n_min", c.n_min);
  r.set("n_max", c.n_max);
  r.set("phase2_probs", c.phase2_null_probs);

  const auto table = simlab::run_experiment(c);
  for (const auto& f : table.failures) std::cerr << "replicate failure: " << f << "\n";
  Output out;
  out.csv = simlab::to_csv(table);
  json rows = json::array();
  for (const auto& row : table.rows) {
    auto opt = [](const std::optional<double>& x) { return x ? json(*x) : json(); };
    auto finite = [](const std::vector<double>& v) {
      json a = json::array();
      for (double x : v) a.push_back(std::isfinite(x) ? json(x) : json());
      return a;
    };
    rows.push_back({{"method", simlab::to_string(row.method)},
                    {"kappa", opt(row.kappa)},
                    {"mu_lo", row.mu_lo},
                    {"mu_hi", row.mu_hi},
                    {"n", opt(row.n)},
                    {"delta", row.delta},
                    {"prior_h0", opt(row.prior_h0)},
                    {"replicates", row.replicates},
                    {"failures", row.failures},
                    {"proportions", finite(row.proportions)},
                    {"undecided", std::isfinite(row.undecided) ? json(row.undecided) : json()},
                    {"standard_errors", finite(row.standard_errors)},
                    {"mean_posteriors", finite(row.mean_posteriors)},
                    {"mean_log_bf01", opt(row.mean_log_bf01)}});
  }
  out.result = {{"experiment", simlab::to_string(c.experiment)},
                {"rows", rows},
                {"failures", table.failures}};
  out.svg = simlab::to_svg(table);
  return out;
}

Output run_calibrate(Resolved& r) {
  simlab::CalibrationConfig c;
  c.target_alpha = r.num_or("target_alpha", c.target_alpha);
  c.delta = r.num_or("delta", c.delta);
  c.boundary_mu = r.num("mu");
  c.n = r.integer("n").value_or(c.n);
  c.family = prior_family(r);
  c.epsilon = prior_epsilon(r, c.family);
  c.replications = r.integer("reps").value_or(c.replications);
  c.seed = r.integer("seed").value_or(c.seed);
  c.grid = r.nums("grid");
  c.quadrature = quadrature(r);
  c.validate();
  r.set("mu", c.boundary_mu.value_or(c.delta));
  r.set("reps", c.replications);
  r.set("seed", c.seed);
  r.set("n", c.n);
  r.set("target_alpha", c.target_alpha);
  r.set("delta", c.delta);

  const auto res = simlab::calibrate_kappa(c);
  if (res.warning) std::cerr << "warning: " << *res.warning << "\n";
  Output out;
  out.result = res;
  out.csv = simlab::to_csv(res);
  svg::Panel panel{"Boundary rate of concluding H0", "kappa", "rate", {}, {{0.0, 1.0}}, {res.kappa}};
  panel.series.push_back({"simulated rate", res.grid, res.rates, false});
  panel.series.push_back(
      {"target", {res.grid.front(), res.grid.back()}, {c.target_alpha, c.target_alpha}, true});
  out.svg = svg::render({panel}, "Kappa calibration", 1);
  return out;
}

std::vector<Command> commands() {
  const auto summary = summary_options();
  const auto margin = margin_options();
  const auto prior = prior_options();
  const auto quad = quadrature_options();
  const std::vector<OptSpec> rule = {
      {"rule", Kind::text, nullptr, "decision rule: kappa (two hypotheses) | max"},
      {"kappa", Kind::number, 0.5, "threshold on P(H0) for the kappa rule [probability]"}};
  const OptSpec curve{"curve", Kind::numbers, nullptr,
                      "margins for a posterior-vs-delta curve, same units as the margin "
                      "[comma-separated list]"};
  const OptSpec probs{"probs", Kind::numbers, nullptr,
                      "prior hypothesis probabilities, left to right; default equal "
                      "[comma-separated probabilities]"};
  const OptSpec hyps{"hypotheses", Kind::integer, 2, "2 (interval null) or 3 (three-way) [count]"};

  return {
      {"tune", "Tune the prior scale tau so the prior leaks epsilon into (-delta, delta)",
       concat({{{"family", Kind::text, "moment",
                 "moment | inverse_moment | half_moment | half_inverse_moment"},
                {"epsilon", Kind::number, nullptr,
                 "target mass in (-delta, delta); default 0.01 (moment), 1e-8 (inverse moment) "
                 "[probability]"},
                {"sd", Kind::number, nullptr, "outcome sd for --delta-raw [raw outcome units]"}},
               margin}),
       false, run_tune},
      {"test", "Two-way interval test: H0 |d| < delta vs H1 |d| >= delta",
       concat({summary, margin, prior,
               {{"p_null", Kind::number, 0.5, "prior probability of H0 [probability]"}}, rule,
               quad}),
       false, run_test},
      {"multi", "Three-way test: d <= delta1, delta1 < d < delta2, d >= delta2",
       concat({summary, margin, prior,
               {{"cutpoints", Kind::numbers, nullptr,
                 "delta1,delta2 [standardized effect units]"},
                {"cutpoints_raw", Kind::numbers, nullptr, "delta1,delta2 [raw outcome units]"},
                {"partition", Kind::path, nullptr, "partition JSON file, overrides the margin"},
                probs, curve},
               rule, quad}),
       false, run_multi},
      {"tost", "Two one-sided tests for equivalence",
       concat({summary,
               margin,
               {{"lower", Kind::number, nullptr, "lower equivalence bound [raw outcome units]"},
                {"upper", Kind::number, nullptr, "upper equivalence bound [raw outcome units]"},
                {"alpha", Kind::number, 0.05, "level of each one-sided test [probability]"}}}),
       false, run_tost},
      {"sgpv", "Second-generation p-value",
       concat({summary,
               margin,
               {{"interval", Kind::numbers, nullptr,
                 "interval estimate LO,HI, instead of a summary [raw outcome units]"},
                {"null", Kind::numbers, nullptr,
                 "null interval LO,HI; inf and -inf allowed [raw outcome units]"},
                {"alpha", Kind::number, 0.05,
                 "the interval estimate is the (1-2 alpha) t interval [probability]"}}}),
       false, run_sgpv},
      {"meta", "Pool Bayes-factor evidence over the studies of a registry",
       concat({{{"registry", Kind::path, nullptr, "study registry, CSV or JSON"}, hyps},
               margin, prior, {probs, curve}, rule, quad}),
       false, run_meta},
      {"e2e", "Carry phase-II posterior probabilities into a phase-III meta-analysis",
       concat({{{"phase2", Kind::path, nullptr, "phase-II registry, CSV or JSON"},
                {"phase2_probs", Kind::numbers, nullptr,
                 "phase-II posterior probabilities instead of a registry "
                 "[comma-separated probabilities]"},
                {"phase3", Kind::path, nullptr, "phase-III registry, CSV or JSON"},
                hyps},
               margin, prior, rule, quad}),
       false, run_e2e},
      {"landscape", "Per-drug superiority/equivalence/inferiority curves vs a reference arm",
       concat({{{"registry", Kind::path, nullptr, "study registry, CSV or JSON"},
                {"reference", Kind::text, nullptr,
                 "reference arm label; default: that of the first study"},
                {"deltas", Kind::numbers, json::array({0.1, 0.2, 0.3, 0.4, 0.5, 0.6}),
                 "margin grid [raw outcome units with --scale raw, else standardized]"},
                {"scale", Kind::text, "raw", "raw | standardized"},
                {"higher_is_better", Kind::flag, false,
                 "superiority means a larger treatment-minus-reference difference"},
                {"drugs", Kind::texts, nullptr, "drugs to report [comma-separated labels]"},
                probs},
               prior, quad}),
       true, run_landscape},
      {"simulate", "Run a simulation experiment (exp1, exp2, exp3, e2e)",
       concat({{{"experiment", Kind::text, "exp1", "exp1 | exp2 | exp3 | e2e"},
                {"seed", Kind::integer, nullptr, "random seed [64-bit integer]"},
                {"reps", Kind::integer, nullptr, "replications per cell [count]"},
                {"methods", Kind::texts, nullptr,
                 "bf_moment,bf_imom,tost,sgpv [comma-separated names]"},
                {"mu", Kind::numbers, nullptr, "true means, exp1/exp2 [standardized effect units]"},
                {"n", Kind::numbers, nullptr, "sample sizes, exp1/exp2 [count]"},
                {"mu_ranges", Kind::numbers, nullptr,
                 "LO,HI pairs for per-study means, exp3/e2e [standardized effect units]"},
                {"deltas", Kind::numbers, nullptr,
                 "margin (exp1, e2e), cutpoints (exp2) or margin grid (exp3) "
                 "[standardized effect units]"},
                {"kappas", Kind::numbers, nullptr, "thresholds on P(H0) [probability]"},
                {"alpha", Kind::number, nullptr, "TOST level; SGPV uses the (1-2 alpha) interval [probability]"},
                {"epsilon_moment", Kind::number, nullptr, "moment prior leak [probability]"},
                {"epsilon_imom", Kind::number, nullptr, "inverse-moment prior leak [probability]"},
                {"studies", Kind::integer, nullptr, "studies per meta-replicate [count]"},
                {"n_min", Kind::integer, nullptr, "smallest study size [count]"},
                {"n_max", Kind::integer, nullptr, "largest study size [count]"},
                {"phase2_probs", Kind::numbers, nullptr,
                 "carried phase-II P(H0) values, e2e [probability]"}},
               quad}),
       true, run_simulate},
      {"calibrate", "Choose kappa so P(conclude H0) at the margin stays below a target",
       concat({{{"target_alpha", Kind::number, 0.05, "target error rate [probability]"},
                {"delta", Kind::number, 0.1, "margin [standardized effect units]"},
                {"mu", Kind::number, nullptr,
                 "data-generating mean; default delta [standardized effect units]"},
                {"n", Kind::integer, 500, "sample size [count]"},
                {"reps", Kind::integer, 200, "replications [count]"},
                {"seed", Kind::integer, 1, "random seed [64-bit integer]"},
                {"grid", Kind::numbers, nullptr,
                 "kappa grid; default 0.50,0.51,...,0.99 [probability]"}},
               prior, quad}),
       true, run_calibrate},
  };
}

// ---- manifest and I/O -----------------------------------------------------

std::string sha256_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw UsageError("cannot open '" + path + "'");
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr);
  std::vector<char> buf(1 << 16);
  while (in) {
    in.read(buf.data(), static_cast<std::streamsize>(buf.size()));
    if (in.gcount() > 0) EVP_DigestUpdate(ctx, buf.data(), static_cast<std::size_t>(in.gcount()));
  }
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_DigestFinal_ex(ctx, md, &len);
  EVP_MD_CTX_free(ctx);
  std::ostringstream hex;
  for (unsigned int i = 0; i < len; ++i)
    hex << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(md[i]);
  return hex.str();
}

std::string utc_timestamp() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

json load_config(const std::string& path, const Command& cmd) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open config '" + path + "'");
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw UsageError("config '" + path + "': " + e.what());
  }
  if (j.contains("manifest") && j["manifest"].is_object()) j = j["manifest"];
  if (j.contains("subcommand") && j.contains("config")) {
    if (j["subcommand"] != cmd.name)
      throw UsageError("manifest is for '" + j["subcommand"].get<std::string>() + "', not '" +
                       cmd.name + "'");
    j = j["config"];
  }
  if (!j.is_object()) throw UsageError("config must be a JSON object");
  json out = json::object();
  for (const auto& [raw_key, value] : j.items()) {
    const auto key = key_name(raw_key);
    const auto it = std::find_if(cmd.options.begin(), cmd.options.end(),
                                 [&](const OptSpec& s) { return s.key == key; });
    if (it == cmd.options.end())
      throw UsageError("config: unknown setting '" + raw_key + "' for " + cmd.name);
    check_config_value(*it, value);
    out[key] = value;
  }
  return out;
}

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw UsageError("cannot write '" + path.string() + "'");
  out << text;
}

struct Bound {
  const Command* command;
  CLI::App* app;
  std::map<std::string, std::string> values;
  std::map<std::string, bool> flags;
  std::map<std::string, CLI::Option*> options;
  std::string config;
  std::string out_dir;
  std::string format = "json";
};

int execute(Bound& b) {
  const Command& cmd = *b.command;
  json cfg = json::object();
  for (const auto& spec : cmd.options) cfg[spec.key] = spec.fallback;
  if (!b.config.empty()) cfg.update(load_config(b.config, cmd));
  for (const auto& spec : cmd.options) {
    CLI::Option* opt = b.options.at(spec.key);
    if (opt->count() == 0) continue;
    cfg[spec.key] = spec.kind == Kind::flag ? json(b.flags.at(spec.key))
                                            : parse_flag_value(spec, b.values.at(spec.key));
  }

  Resolved resolved(cfg);
  Output output = cmd.run(resolved);

  json inputs = json::array();
  for (const auto& spec : cmd.options)
    if (spec.kind == Kind::path && resolved.has(spec.key)) {
      const auto p = resolved.text(spec.key);
      inputs.push_back({{"option", spec.key}, {"path", p}, {"sha256", sha256_file(p)}});
    }
  if (!b.config.empty())
    inputs.push_back({{"option", "config"}, {"path", b.config}, {"sha256", sha256_file(b.config)}});
  json manifest = {{"tool", "intervalbf"},
                   {"version", INTERVALBF_VERSION},
                   {"subcommand", cmd.name},
                   {"config", resolved.config()},
                   {"inputs", inputs},
                   {"seed", resolved.config().contains("seed") ? resolved.config()["seed"] : json()},
                   {"timestamp", utc_timestamp()}};

  if (!b.out_dir.empty()) {
    const fs::path dir(b.out_dir);
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw UsageError("cannot create '" + b.out_dir + "': " + ec.message());
    write_file(dir / "manifest.json", manifest.dump(2) + "\n");
    write_file(dir / "result.json", output.result.dump(2) + "\n");
    if (!output.csv.empty()) write_file(dir / "result.csv", output.csv);
    if (!output.svg.empty()) write_file(dir / "plot.svg", output.svg);
    std::cerr << "wrote " << dir.string() << "\n";
    return 0;
  }
  if (b.format == "csv") {
    if (output.csv.empty()) throw UsageError(cmd.name + " has no CSV output");
    std::cout << output.csv;
  } else {
    std::cout << json{{"manifest", manifest}, {"result", output.result}}.dump(2) << "\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Bayesian interval hypothesis tests on t statistics with non-local priors.\n"
               "Exit status: 0 success, 1 invalid input or usage, 2 numerical failure.\n"
               "INTERVALBF_THREADS caps worker threads (0 = all cores)."};
  app.set_version_flag("--version", std::string("intervalbf ") + INTERVALBF_VERSION);
  app.require_subcommand(1);

  const auto cmds = commands();
  std::vector<Bound> bound(cmds.size());
  for (std::size_t i = 0; i < cmds.size(); ++i) {
    const Command& cmd = cmds[i];
    Bound& b = bound[i];
    b.command = &cmd;
    b.app = app.add_subcommand(cmd.name, cmd.description);
    for (const auto& spec : cmd.options) {
      std::string help = spec.help;
      if (!spec.fallback.is_null()) help += " (default " + spec.fallback.dump() + ")";
      if (spec.kind == Kind::flag) {
        b.flags[spec.key] = false;
        b.options[spec.key] = b.app->add_flag(flag_name(spec.key), b.flags[spec.key], help);
      } else {
        b.values[spec.key];
        const char* type = spec.kind == Kind::number    ? "FLOAT"
                           : spec.kind == Kind::integer ? "INT"
                           : spec.kind == Kind::path    ? "FILE"
                           : spec.kind == Kind::numbers ? "LIST"
                           : spec.kind == Kind::texts   ? "LIST"
                                                        : "TEXT";
        b.options[spec.key] =
            b.app->add_option(flag_name(spec.key), b.values[spec.key], help)->type_name(type);
      }
    }
    b.app->add_option("--config", b.config,
                      "JSON settings or a previous run's manifest; flags override it")
        ->type_name("FILE");
    b.app->add_option("--out", b.out_dir,
                      "write manifest.json, result.json and any CSV/SVG to this directory")
        ->type_name("DIR");
    if (cmd.table)
      b.app->add_option("--format", b.format, "stdout format: json | csv (default \"json\")")
          ->check(CLI::IsMember({"json", "csv"}))
          ->type_name("TEXT");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n\n";
    const CLI::App* context = &app;
    for (const auto& b : bound)
      if (b.app->parsed()) context = b.app;
    std::cerr << context->help();
    return 1;
  }

  for (auto& b : bound) {
    if (!b.app->parsed()) continue;
    try {
      return execute(b);
    } catch (const ConvergenceError& e) {
      std::cerr << "numerical failure: " << e.what() << " (partial value " << e.partial_value()
                << ", error estimate " << e.error_estimate() << ")\n";
      return 2;
    } catch (const BracketError& e) {
      std::cerr << "numerical failure: " << e.what() << "\n";
      return 2;
    } catch (const Error& e) {
      std::cerr << "error: " << e.what() << "\n";
      return 1;
    } catch (const json::exception& e) {
      std::cerr << "error: " << e.what() << "\n";
      return 1;
    }
  }
  return 1;
}
