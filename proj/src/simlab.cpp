#include "intervalbf/simlab.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <functional>
#include <limits>
#include <map>

#include "intervalbf/frequentist.hpp"
#include "intervalbf/meta.hpp"
#include "intervalbf/parallel.hpp"
#include "intervalbf/svg.hpp"

namespace intervalbf::simlab {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

const std::array<std::pair<Experiment, std::string_view>, 4> kExperimentNames = {{
    {Experiment::exp1_twoway, "exp1"},
    {Experiment::exp2_threeway, "exp2"},
    {Experiment::exp3_meta, "exp3"},
    {Experiment::e2e_borrowing, "e2e"},
}};

const std::array<std::pair<Method, std::string_view>, 4> kMethodNames = {{
    {Method::bf_moment, "bf_moment"},
    {Method::bf_imom, "bf_imom"},
    {Method::tost, "tost"},
    {Method::sgpv, "sgpv"},
}};

std::vector<std::size_t> size_range(std::size_t from, std::size_t to, std::size_t step) {
  std::vector<std::size_t> out;
  for (std::size_t n = from; n <= to; n += step) out.push_back(n);
  return out;
}

std::string format_number(double x) {
  if (std::isnan(x)) return {};
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, ptr);
}

std::string format_optional(const std::optional<double>& x) {
  return x ? format_number(*x) : std::string();
}

priors::Family family_of(Method m) {
  return m == Method::bf_moment ? priors::Family::moment : priors::Family::inverse_moment;
}

double epsilon_of(Method m, const ExperimentConfig& c) {
  return m == Method::bf_moment ? c.epsilon_moment : c.epsilon_imom;
}

bool two_hypotheses(Experiment e) { return e != Experiment::exp2_threeway; }

/// Running mean and sd of standard normal draws, recorded at each requested
/// size (ascending).
struct PrefixStats {
  std::vector<double> mean;
  std::vector<double> sd;
};

PrefixStats prefix_stats(Rng& rng, const std::vector<std::size_t>& sizes) {
  PrefixStats out;
  double m = 0.0, s = 0.0;
  std::size_t k = 0;
  for (std::size_t target : sizes) {
    while (k < target) {
      const double z = rng.normal();
      ++k;
      const double d = z - m;
      m += d / static_cast<double>(k);
      s += d * (z - m);
    }
    out.mean.push_back(m);
    out.sd.push_back(std::sqrt(s / static_cast<double>(k - 1)));
  }
  return out;
}

struct Outcome {
  bool ok = false;
  std::array<double, 3> post{kNaN, kNaN, kNaN};
  int decision = -1;
  double log_bf01 = kNaN;
};

struct Cell {
  std::size_t method;
  double mu_lo;
  double mu_hi;
  std::optional<double> n;
  double delta;
  std::optional<double> prior_h0;
};

std::string describe(const Cell& c, const ExperimentConfig& cfg) {
  std::string s = std::string(to_string(cfg.methods[c.method])) + " mu=" +
                  format_number(c.mu_lo);
  if (c.mu_hi != c.mu_lo) s += ".." + format_number(c.mu_hi);
  if (c.n) s += " n=" + format_number(*c.n);
  s += " delta=" + format_number(c.delta);
  if (c.prior_h0) s += " prior_h0=" + format_number(*c.prior_h0);
  return s;
}

void fill_bf(Outcome& o, const engine::PosteriorReport& r) {
  for (std::size_t i = 0; i < r.posteriors.size(); ++i) o.post[i] = r.posteriors[i];
  if (r.posteriors.size() == 2) o.log_bf01 = r.log_bayes_factors[0][1];
  o.decision = static_cast<int>(r.decision);
  o.ok = true;
}

// Frequentist verdicts mapped onto the partition: TOST equivalence and an
// SGPV of 1 conclude the middle region; an SGPV of 0 concludes the region
// holding the estimate.
void fill_frequentist(Outcome& o, Method method, const frequentist::EffectEstimate& est,
                      double lower, double upper, double alpha, bool three) {
  const int middle = three ? 1 : 0;
  if (method == Method::tost) {
    o.decision = frequentist::tost(est, {lower, upper}, alpha).equivalent ? middle : -1;
  } else {
    const double p = frequentist::sgpv(est, {lower, upper}, alpha);
    if (p == 1.0)
      o.decision = middle;
    else if (p == 0.0)
      o.decision = three ? (est.mean <= lower ? 0 : 2) : 1;
    else
      o.decision = -1;
  }
  o.ok = true;
}

std::vector<engine::TStatSummary> draw_studies(Rng& rng, MuRange range, const ExperimentConfig& c) {
  std::vector<engine::TStatSummary> out;
  out.reserve(c.studies);
  for (std::size_t k = 0; k < c.studies; ++k) {
    const auto n = static_cast<std::size_t>(rng.uniform_int(
        static_cast<std::int64_t>(c.n_min), static_cast<std::int64_t>(c.n_max)));
    const double mu = rng.uniform(range.lo, range.hi);
    out.push_back(draw_one_sample(rng, mu, n));
  }
  return out;
}

std::vector<double> pooled(const std::vector<engine::TStatSummary>& studies,
                           const engine::HypothesisPartition& part,
                           const numerics::QuadratureSettings& q) {
  std::vector<std::vector<double>> rows;
  rows.reserve(studies.size());
  for (const auto& s : studies) rows.push_back(engine::log_marginals(s, part, q));
  return meta::pooled_log_marginals(rows);
}

template <class T>
T get_or(const nlohmann::json& j, const char* key, T fallback) {
  return j.contains(key) ? j.at(key).get<T>() : fallback;
}

}  // namespace

std::string_view to_string(Experiment e) {
  for (const auto& [k, v] : kExperimentNames)
    if (k == e) return v;
  return "?";
}

std::string_view to_string(Method m) {
  for (const auto& [k, v] : kMethodNames)
    if (k == m) return v;
  return "?";
}

Experiment experiment_from_string(std::string_view name) {
  for (const auto& [k, v] : kExperimentNames)
    if (v == name) return k;
  if (name == "exp1_twoway") return Experiment::exp1_twoway;
  if (name == "exp2_threeway") return Experiment::exp2_threeway;
  if (name == "exp3_meta") return Experiment::exp3_meta;
  if (name == "e2e_borrowing") return Experiment::e2e_borrowing;
  throw UsageError("unknown experiment '" + std::string(name) + "'");
}

Method method_from_string(std::string_view name) {
  for (const auto& [k, v] : kMethodNames)
    if (v == name) return k;
  throw UsageError("unknown method '" + std::string(name) + "'");
}

bool is_bayes_factor(Method m) { return m == Method::bf_moment || m == Method::bf_imom; }

ExperimentConfig ExperimentConfig::defaults(Experiment e) {
  ExperimentConfig c;
  c.experiment = e;
  switch (e) {
    case Experiment::exp1_twoway:
      c.mu_values = {0.0, 0.02, 0.1, 0.2};
      c.n_values = size_range(150, 1000, 50);
      c.deltas = {0.1};
      c.methods = {Method::bf_moment, Method::bf_imom, Method::tost, Method::sgpv};
      c.kappas = {0.5, 0.7};
      break;
    case Experiment::exp2_threeway:
      c.mu_values = {-0.2, 0.0, 0.2};
      c.n_values = size_range(25, 525, 50);
      c.deltas = {-0.1, 0.1};
      c.methods = {Method::bf_moment, Method::bf_imom};
      break;
    case Experiment::exp3_meta:
      c.mu_ranges = {{0.0, 0.1}, {0.2, 0.3}};
      c.deltas = {0.05, 0.1, 0.15, 0.2, 0.25, 0.3};
      c.methods = {Method::bf_moment, Method::bf_imom};
      break;
    case Experiment::e2e_borrowing:
      c.mu_ranges = {{0.0, 0.1}};
      c.deltas = {0.1};
      c.methods = {Method::bf_moment, Method::bf_imom};
      c.phase2_null_probs = {0.9, 0.5, 0.1};
      break;
  }
  return c;
}

void ExperimentConfig::validate() const {
  if (replications < 1) throw DomainError("replications must be >= 1");
  if (methods.empty()) throw DomainError("at least one method is required");
  if (deltas.empty()) throw DomainError("delta grid must be nonempty");
  if (!(alpha > 0.0 && alpha < 0.5)) throw DomainError("alpha must lie in (0, 0.5)");
  if (!(epsilon_moment > 0.0 && epsilon_moment < 1.0) ||
      !(epsilon_imom > 0.0 && epsilon_imom < 1.0))
    throw DomainError("epsilon must lie in (0, 1)");
  quadrature.validate();
  if (two_hypotheses(experiment)) {
    if (kappas.empty()) throw DomainError("at least one kappa is required");
    for (double k : kappas)
      if (!(k >= 0.0 && k < 1.0)) throw DomainError("kappa must lie in [0, 1)");
  }
  const bool per_cell = experiment == Experiment::exp1_twoway ||
                        experiment == Experiment::exp2_threeway;
  if (per_cell) {
    if (mu_values.empty()) throw DomainError("mu grid must be nonempty");
    if (n_values.empty()) throw DomainError("sample-size grid must be nonempty");
    for (double mu : mu_values)
      if (!std::isfinite(mu)) throw DomainError("mu values must be finite");
    for (std::size_t n : n_values)
      if (n < 2) throw DomainError("sample sizes must be >= 2");
  } else {
    for (Method m : methods)
      if (!is_bayes_factor(m))
        throw UsageError(std::string(to_string(m)) + " is not available for " +
                         std::string(to_string(experiment)));
    if (mu_ranges.empty()) throw DomainError("mu ranges must be nonempty");
    for (const auto& r : mu_ranges)
      if (!(r.lo < r.hi) || !std::isfinite(r.lo) || !std::isfinite(r.hi))
        throw DomainError("mu ranges need finite lo < hi");
    if (studies < 1) throw DomainError("studies must be >= 1");
    if (n_min < 2 || n_max < n_min) throw DomainError("study sizes need 2 <= n_min <= n_max");
  }
  switch (experiment) {
    case Experiment::exp1_twoway:
    case Experiment::e2e_borrowing:
      if (deltas.size() != 1 || !(deltas[0] > 0.0))
        throw DomainError("a single positive delta is required");
      break;
    case Experiment::exp2_threeway:
      if (deltas.size() != 2 || !(deltas[0] < 0.0 && deltas[1] > 0.0))
        throw DomainError("three-way cutpoints need delta1 < 0 < delta2");
      break;
    case Experiment::exp3_meta:
      for (double d : deltas)
        if (!(d > 0.0) || !std::isfinite(d)) throw DomainError("margins must be positive");
      break;
  }
  if (experiment == Experiment::e2e_borrowing) {
    if (mu_ranges.size() != 1) throw DomainError("e2e takes exactly one mu range");
    if (phase2_null_probs.empty()) throw DomainError("phase-II probabilities must be nonempty");
    for (double p : phase2_null_probs)
      if (!(p > 0.0 && p < 1.0)) throw DomainError("phase-II probabilities must lie in (0, 1)");
  }
}

void to_json(nlohmann::json& j, const ExperimentConfig& c) {
  std::vector<std::string> methods;
  for (Method m : c.methods) methods.emplace_back(to_string(m));
  nlohmann::json ranges = nlohmann::json::array();
  for (const auto& r : c.mu_ranges) ranges.push_back({r.lo, r.hi});
  j = nlohmann::json{{"experiment", to_string(c.experiment)},
                     {"mu_values", c.mu_values},
                     {"n_values", c.n_values},
                     {"mu_ranges", ranges},
                     {"deltas", c.deltas},
                     {"replications", c.replications},
                     {"seed", c.seed},
                     {"methods", methods},
                     {"kappas", c.kappas},
                     {"alpha", c.alpha},
                     {"epsilon_moment", c.epsilon_moment},
                     {"epsilon_imom", c.epsilon_imom},
                     {"studies", c.studies},
                     {"n_min", c.n_min},
                     {"n_max", c.n_max},
                     {"phase2_null_probs", c.phase2_null_probs},
                     {"quadrature", engine::quadrature_to_json(c.quadrature)}};
}

ExperimentConfig config_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw UsageError("experiment config must be a JSON object");
  const auto experiment =
      experiment_from_string(get_or<std::string>(j, "experiment", std::string("exp1")));
  ExperimentConfig c = ExperimentConfig::defaults(experiment);
  try {
    for (const auto& [key, v] : j.items()) {
      if (key == "experiment") continue;
      if (key == "mu_values") c.mu_values = v.get<std::vector<double>>();
      else if (key == "n_values") c.n_values = v.get<std::vector<std::size_t>>();
      else if (key == "mu_ranges") {
        c.mu_ranges.clear();
        for (const auto& r : v) {
          if (!r.is_array() || r.size() != 2) throw UsageError("mu_ranges entries are [lo, hi]");
          c.mu_ranges.push_back({r[0].get<double>(), r[1].get<double>()});
        }
      } else if (key == "deltas") c.deltas = v.get<std::vector<double>>();
      else if (key == "replications") c.replications = v.get<std::size_t>();
      else if (key == "seed") c.seed = v.get<std::uint64_t>();
      else if (key == "methods") {
        c.methods.clear();
        for (const auto& m : v) c.methods.push_back(method_from_string(m.get<std::string>()));
      } else if (key == "kappas") c.kappas = v.get<std::vector<double>>();
      else if (key == "alpha") c.alpha = v.get<double>();
      else if (key == "epsilon_moment") c.epsilon_moment = v.get<double>();
      else if (key == "epsilon_imom") c.epsilon_imom = v.get<double>();
      else if (key == "studies") c.studies = v.get<std::size_t>();
      else if (key == "n_min") c.n_min = v.get<std::size_t>();
      else if (key == "n_max") c.n_max = v.get<std::size_t>();
      else if (key == "phase2_null_probs") c.phase2_null_probs = v.get<std::vector<double>>();
      else if (key == "quadrature") c.quadrature = engine::quadrature_from_json(v);
      else if (key == "threads") c.threads = v.get<std::size_t>();
      else throw UsageError("unknown experiment setting '" + key + "'");
    }
  } catch (const nlohmann::json::exception& e) {
    throw UsageError(std::string("experiment config: ") + e.what());
  }
  c.validate();
  return c;
}

engine::TStatSummary draw_one_sample(Rng& rng, double mu, std::size_t n) {
  if (n < 2) throw DomainError("sample size must be >= 2");
  const auto stats = prefix_stats(rng, {n});
  return engine::summarize(engine::Design::one_sample, static_cast<double>(n), std::nullopt,
                           mu + stats.mean[0], stats.sd[0]);
}

ResultTable run_experiment(const ExperimentConfig& config) {
  config.validate();
  const ExperimentConfig& c = config;
  const bool three = c.experiment == Experiment::exp2_threeway;
  const std::size_t nm = c.methods.size();

  std::vector<Cell> cells;
  switch (c.experiment) {
    case Experiment::exp1_twoway:
    case Experiment::exp2_threeway:
      for (std::size_t m = 0; m < nm; ++m)
        for (double mu : c.mu_values)
          for (std::size_t n : c.n_values)
            cells.push_back({m, mu, mu, static_cast<double>(n),
                             three ? c.deltas[1] : c.deltas[0], std::nullopt});
      break;
    case Experiment::exp3_meta:
      for (std::size_t m = 0; m < nm; ++m)
        for (const auto& r : c.mu_ranges)
          for (double d : c.deltas) cells.push_back({m, r.lo, r.hi, std::nullopt, d, std::nullopt});
      break;
    case Experiment::e2e_borrowing:
      for (std::size_t m = 0; m < nm; ++m)
        for (double p : c.phase2_null_probs)
          cells.push_back({m, c.mu_ranges[0].lo, c.mu_ranges[0].hi, std::nullopt, c.deltas[0], p});
      break;
  }

  // partitions[m][g]: one per method and margin (empty for frequentist methods).
  std::vector<std::vector<engine::HypothesisPartition>> partitions(nm);
  for (std::size_t m = 0; m < nm; ++m) {
    if (!is_bayes_factor(c.methods[m])) continue;
    const auto fam = family_of(c.methods[m]);
    const double eps = epsilon_of(c.methods[m], c);
    if (three)
      partitions[m].push_back(
          engine::HypothesisPartition::three_way(c.deltas[0], c.deltas[1], fam, eps));
    else
      for (double d : c.deltas)
        partitions[m].push_back(engine::HypothesisPartition::two_way(d, fam, eps));
  }

  std::vector<std::size_t> sizes = c.n_values;
  std::sort(sizes.begin(), sizes.end());
  sizes.erase(std::unique(sizes.begin(), sizes.end()), sizes.end());

  std::vector<std::vector<Outcome>> outcomes(c.replications, std::vector<Outcome>(cells.size()));
  std::vector<std::vector<std::string>> errors(c.replications);

  auto replicate = [&](std::size_t k) {
    auto& out = outcomes[k];
    auto guard = [&](std::size_t i, const std::function<void()>& fn) {
      try {
        fn();
      } catch (const Error& e) {
        out[i] = Outcome{};
        errors[k].push_back("replicate " + std::to_string(k) + ", " + describe(cells[i], c) +
                            ": " + e.what());
      }
    };

    if (c.experiment == Experiment::exp1_twoway || three) {
      Rng rng = Rng::stream(c.seed, k);
      const auto stats = prefix_stats(rng, sizes);
      for (std::size_t i = 0; i < cells.size(); ++i) {
        guard(i, [&] {
          const Cell& cell = cells[i];
          const auto n = static_cast<std::size_t>(*cell.n);
          const auto pos = static_cast<std::size_t>(
              std::lower_bound(sizes.begin(), sizes.end(), n) - sizes.begin());
          const double mean = cell.mu_lo + stats.mean[pos];
          const double sd = stats.sd[pos];
          const Method method = c.methods[cell.method];
          if (is_bayes_factor(method)) {
            const auto& part = partitions[cell.method][0];
            const auto summary = engine::summarize(engine::Design::one_sample, *cell.n,
                                                   std::nullopt, mean, sd);
            fill_bf(out[i], engine::posterior(summary, part,
                                              engine::DecisionRule::max_posterior(),
                                              c.quadrature));
          } else {
            const frequentist::EffectEstimate est{engine::Design::one_sample, *cell.n,
                                                  std::nullopt, mean, sd};
            const double lower = three ? c.deltas[0] : -c.deltas[0];
            const double upper = three ? c.deltas[1] : c.deltas[0];
            fill_frequentist(out[i], method, est, lower, upper, c.alpha, three);
          }
        });
      }
      return;
    }

    if (c.experiment == Experiment::exp3_meta) {
      const std::size_t per_method = c.mu_ranges.size() * c.deltas.size();
      for (std::size_t j = 0; j < c.mu_ranges.size(); ++j) {
        Rng rng = Rng::stream(splitmix64(c.seed) + j, k);
        const auto studies = draw_studies(rng, c.mu_ranges[j], c);
        for (std::size_t m = 0; m < nm; ++m)
          for (std::size_t g = 0; g < c.deltas.size(); ++g) {
            const std::size_t i = m * per_method + j * c.deltas.size() + g;
            guard(i, [&] {
              const auto& part = partitions[m][g];
              fill_bf(out[i], engine::assemble_report(pooled(studies, part, c.quadrature),
                                                      part.prior_probs,
                                                      engine::DecisionRule::max_posterior()));
            });
          }
      }
      return;
    }

    Rng rng = Rng::stream(c.seed, k);
    const auto studies = draw_studies(rng, c.mu_ranges[0], c);
    const std::size_t np = c.phase2_null_probs.size();
    for (std::size_t m = 0; m < nm; ++m) {
      std::vector<double> logm;
      try {
        logm = pooled(studies, partitions[m][0], c.quadrature);
      } catch (const Error& e) {
        for (std::size_t p = 0; p < np; ++p)
          errors[k].push_back("replicate " + std::to_string(k) + ", " +
                              describe(cells[m * np + p], c) + ": " + e.what());
        continue;
      }
      for (std::size_t p = 0; p < np; ++p) {
        const std::size_t i = m * np + p;
        guard(i, [&] {
          const double p0 = c.phase2_null_probs[p];
          const std::vector<double> prior{p0, 1.0 - p0};
          fill_bf(out[i],
                  engine::assemble_report(logm, prior, engine::DecisionRule::max_posterior()));
        });
      }
    }
  };

  parallel_for(c.replications, c.threads, replicate);

  ResultTable table;
  table.config = config;
  for (const auto& e : errors) table.failures.insert(table.failures.end(), e.begin(), e.end());

  const std::size_t h = three ? 3 : 2;
  for (std::size_t i = 0; i < cells.size(); ++i) {
    const Cell& cell = cells[i];
    const Method method = c.methods[cell.method];
    std::vector<std::optional<double>> kappas;
    if (is_bayes_factor(method) && !three)
      kappas.assign(c.kappas.begin(), c.kappas.end());
    else
      kappas.push_back(std::nullopt);

    for (const auto& kappa : kappas) {
      ResultRow row{c.experiment, method, kappa, cell.mu_lo, cell.mu_hi, cell.n, cell.delta,
                    cell.prior_h0, c.replications, 0, {}, 0.0, {}, {}, std::nullopt};
      std::vector<double> counts(h, 0.0), post_sum(h, 0.0);
      double undecided = 0.0, bf_sum = 0.0;
      std::size_t ok = 0;
      for (std::size_t k = 0; k < c.replications; ++k) {
        const Outcome& o = outcomes[k][i];
        if (!o.ok) {
          ++row.failures;
          continue;
        }
        ++ok;
        int decision = o.decision;
        if (kappa) decision = o.post[0] > *kappa ? 0 : 1;
        if (decision < 0)
          undecided += 1.0;
        else
          counts[static_cast<std::size_t>(decision)] += 1.0;
        if (is_bayes_factor(method)) {
          for (std::size_t t = 0; t < h; ++t) post_sum[t] += o.post[t];
          if (!three) bf_sum += o.log_bf01;
        }
      }
      const double denom = ok > 0 ? static_cast<double>(ok) : kNaN;
      for (std::size_t t = 0; t < h; ++t) {
        const double p = counts[t] / denom;
        row.proportions.push_back(p);
        row.standard_errors.push_back(std::sqrt(p * (1.0 - p) / denom));
        if (is_bayes_factor(method)) row.mean_posteriors.push_back(post_sum[t] / denom);
      }
      row.undecided = undecided / denom;
      if (is_bayes_factor(method) && !three) row.mean_log_bf01 = bf_sum / denom;
      table.rows.push_back(std::move(row));
    }
  }
  return table;
}

std::string to_csv(const ResultTable& table) {
  std::string out =
      "experiment,method,kappa,mu_lo,mu_hi,n,delta,prior_h0,replicates,failures,"
      "prop_h0,prop_h1,prop_h2,prop_undecided,se_h0,se_h1,se_h2,"
      "mean_post_h0,mean_post_h1,mean_post_h2,mean_log_bf01\n";
  auto at = [](const std::vector<double>& v, std::size_t i) {
    return i < v.size() ? format_number(v[i]) : std::string();
  };
  for (const auto& r : table.rows) {
    out += std::string(to_string(r.experiment)) + "," + std::string(to_string(r.method)) + "," +
           format_optional(r.kappa) + "," + format_number(r.mu_lo) + "," +
           format_number(r.mu_hi) + "," + format_optional(r.n) + "," + format_number(r.delta) +
           "," + format_optional(r.prior_h0) + "," + std::to_string(r.replicates) + "," +
           std::to_string(r.failures);
    for (std::size_t t = 0; t < 3; ++t) out += "," + at(r.proportions, t);
    out += "," + format_number(r.undecided);
    for (std::size_t t = 0; t < 3; ++t) out += "," + at(r.standard_errors, t);
    for (std::size_t t = 0; t < 3; ++t) out += "," + at(r.mean_posteriors, t);
    out += "," + format_optional(r.mean_log_bf01) + "\n";
  }
  return out;
}

std::string to_svg(const ResultTable& table) {
  // Panels and series keyed by label, kept in first-seen order.
  std::vector<svg::Panel> panels;
  std::map<std::string, std::size_t> panel_index;
  auto add_point = [&](const std::string& panel, const std::string& x_label,
                       const std::string& y_label, const std::string& series, double x,
                       double y, std::optional<std::pair<double, double>> range) {
    auto [it, fresh] = panel_index.emplace(panel, panels.size());
    if (fresh) panels.push_back({panel, x_label, y_label, {}, range, {}});
    auto& p = panels[it->second];
    auto s = std::find_if(p.series.begin(), p.series.end(),
                          [&](const svg::Series& v) { return v.label == series; });
    if (s == p.series.end()) {
      p.series.push_back({series, {}, {}, false});
      s = std::prev(p.series.end());
    }
    s->x.push_back(x);
    s->y.push_back(y);
  };
  const std::pair<double, double> unit{0.0, 1.0};
  std::string title;
  for (const auto& r : table.rows) {
    const std::string method(to_string(r.method));
    const std::string kappa = r.kappa ? ", kappa=" + format_number(*r.kappa) : "";
    switch (r.experiment) {
      case Experiment::exp1_twoway:
        title = "Proportion concluding H0 vs sample size";
        add_point(method + kappa, "n", "P(conclude H0)", "mu=" + format_number(r.mu_lo), *r.n,
                  r.proportions[0], unit);
        break;
      case Experiment::exp2_threeway: {
        title = "Three-way test vs sample size";
        const bool bf = !r.mean_posteriors.empty();
        const char* names[] = {"H1 (below)", "H2 (between)", "H3 (above)"};
        for (std::size_t t = 0; t < 3; ++t)
          add_point(method + ", mu=" + format_number(r.mu_lo), "n",
                    bf ? "mean posterior" : "P(conclude)", names[t], *r.n,
                    bf ? r.mean_posteriors[t] : r.proportions[t], unit);
        break;
      }
      case Experiment::exp3_meta:
        if (r.kappa && r.kappa != table.config.kappas.front()) break;
        title = "Pooled log BF(H0:H1) vs margin";
        add_point(method, "delta", "mean log BF01",
                  "mu~U(" + format_number(r.mu_lo) + "," + format_number(r.mu_hi) + ")",
                  r.delta, *r.mean_log_bf01, std::nullopt);
        break;
      case Experiment::e2e_borrowing:
        if (r.kappa && r.kappa != table.config.kappas.front()) break;
        title = "Phase-III P(H0) vs carried phase-II P(H0)";
        add_point(method, "phase-II P(H0)", "mean P(H0 | phase III)", "posterior",
                  *r.prior_h0, r.mean_posteriors[0], unit);
        break;
    }
  }
  for (auto& p : panels) {
    if (table.config.experiment == Experiment::exp3_meta) p.x_marks.push_back(0.1);
    for (auto& s : p.series) {
      std::vector<std::size_t> idx(s.x.size());
      for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
      std::sort(idx.begin(), idx.end(), [&](auto a, auto b) { return s.x[a] < s.x[b]; });
      std::vector<double> x, y;
      for (auto i : idx) x.push_back(s.x[i]), y.push_back(s.y[i]);
      s.x = std::move(x);
      s.y = std::move(y);
    }
  }
  return svg::render(panels, title, 3);
}

void CalibrationConfig::validate() const {
  if (!(target_alpha > 0.0 && target_alpha <= 1.0))
    throw DomainError("target alpha must lie in (0, 1]");
  if (!(delta > 0.0) || !std::isfinite(delta)) throw DomainError("delta must be positive");
  if (boundary_mu && !std::isfinite(*boundary_mu)) throw DomainError("boundary mu must be finite");
  if (n < 2) throw DomainError("n must be >= 2");
  if (!priors::is_non_local(family)) throw DomainError("calibration needs a non-local family");
  if (epsilon && !(*epsilon > 0.0 && *epsilon < 1.0))
    throw DomainError("epsilon must lie in (0, 1)");
  if (replications < 1) throw DomainError("replications must be >= 1");
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (!(grid[i] >= 0.0 && grid[i] < 1.0)) throw DomainError("kappa grid values must lie in [0, 1)");
    if (i > 0 && !(grid[i] > grid[i - 1])) throw DomainError("kappa grid must be increasing");
  }
  quadrature.validate();
}

void to_json(nlohmann::json& j, const CalibrationConfig& c) {
  j = nlohmann::json{{"target_alpha", c.target_alpha},
                     {"delta", c.delta},
                     {"boundary_mu", c.boundary_mu.value_or(c.delta)},
                     {"n", c.n},
                     {"family", priors::to_string(c.family)},
                     {"epsilon", c.epsilon.value_or(c.family == priors::Family::moment
                                                        ? priors::kMomentEpsilon
                                                        : priors::kInverseMomentEpsilon)},
                     {"replications", c.replications},
                     {"seed", c.seed},
                     {"grid", c.grid},
                     {"quadrature", engine::quadrature_to_json(c.quadrature)}};
}

CalibrationConfig calibration_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw UsageError("calibration config must be a JSON object");
  CalibrationConfig c;
  try {
    for (const auto& [key, v] : j.items()) {
      if (key == "target_alpha") c.target_alpha = v.get<double>();
      else if (key == "delta") c.delta = v.get<double>();
      else if (key == "boundary_mu") {
        if (!v.is_null()) c.boundary_mu = v.get<double>();
      } else if (key == "n") c.n = v.get<std::size_t>();
      else if (key == "family") c.family = priors::family_from_string(v.get<std::string>());
      else if (key == "epsilon") {
        if (!v.is_null()) c.epsilon = v.get<double>();
      } else if (key == "replications") c.replications = v.get<std::size_t>();
      else if (key == "seed") c.seed = v.get<std::uint64_t>();
      else if (key == "grid") c.grid = v.get<std::vector<double>>();
      else if (key == "quadrature") c.quadrature = engine::quadrature_from_json(v);
      else if (key == "threads") c.threads = v.get<std::size_t>();
      else throw UsageError("unknown calibration setting '" + key + "'");
    }
  } catch (const nlohmann::json::exception& e) {
    throw UsageError(std::string("calibration config: ") + e.what());
  }
  c.validate();
  return c;
}

void to_json(nlohmann::json& j, const CalibrationResult& r) {
  j = nlohmann::json{{"kappa", r.kappa},       {"rate", r.rate},         {"ci", {r.ci_lo, r.ci_hi}},
                     {"attained", r.attained}, {"failures", r.failures}, {"grid", r.grid},
                     {"rates", r.rates}};
  j["warning"] = r.warning ? nlohmann::json(*r.warning) : nlohmann::json();
}

CalibrationResult calibrate_kappa(const CalibrationConfig& config) {
  config.validate();
  std::vector<double> grid = config.grid;
  if (grid.empty())
    for (int i = 50; i <= 99; ++i) grid.push_back(i / 100.0);
  const auto family = priors::full_family(config.family);
  const double eps = config.epsilon.value_or(family == priors::Family::moment
                                                 ? priors::kMomentEpsilon
                                                 : priors::kInverseMomentEpsilon);
  const auto part = engine::HypothesisPartition::two_way(config.delta, family, eps);
  const double mu = config.boundary_mu.value_or(config.delta);

  std::vector<double> p_null(config.replications, kNaN);
  parallel_for(config.replications, config.threads, [&](std::size_t k) {
    Rng rng = Rng::stream(config.seed, k);
    const auto summary = draw_one_sample(rng, mu, config.n);
    try {
      p_null[k] = engine::posterior(summary, part, engine::DecisionRule::max_posterior(),
                                    config.quadrature)
                      .posteriors[0];
    } catch (const Error&) {
    }
  });

  CalibrationResult r{};
  r.grid = grid;
  std::size_t ok = 0;
  for (double p : p_null) ok += std::isnan(p) ? 0 : 1;
  r.failures = config.replications - ok;
  if (ok == 0) throw ConvergenceError("calibration: every replicate failed", kNaN, kNaN);
  for (double kappa : grid) {
    std::size_t hits = 0;
    for (double p : p_null)
      if (!std::isnan(p) && p > kappa) ++hits;
    r.rates.push_back(static_cast<double>(hits) / static_cast<double>(ok));
  }
  std::size_t chosen = grid.size() - 1;
  r.attained = false;
  for (std::size_t i = 0; i < grid.size(); ++i)
    if (r.rates[i] <= config.target_alpha) {
      chosen = i;
      r.attained = true;
      break;
    }
  if (!r.attained)
    r.warning = "target alpha " + format_number(config.target_alpha) +
                " not attained on the grid; returning the largest kappa";
  r.kappa = grid[chosen];
  r.rate = r.rates[chosen];
  // Wilson score interval, z = 1.96.
  const double z = 1.959963984540054, nn = static_cast<double>(ok);
  const double centre = (r.rate + z * z / (2 * nn)) / (1 + z * z / nn);
  const double half =
      z * std::sqrt(r.rate * (1 - r.rate) / nn + z * z / (4 * nn * nn)) / (1 + z * z / nn);
  r.ci_lo = std::max(0.0, centre - half);
  r.ci_hi = std::min(1.0, centre + half);
  return r;
}

std::string to_csv(const CalibrationResult& result) {
  std::string out = "kappa,rate\n";
  for (std::size_t i = 0; i < result.grid.size(); ++i)
    out += format_number(result.grid[i]) + "," + format_number(result.rates[i]) + "\n";
  return out;
}

}  // namespace intervalbf::simlab
