#include "intervalbf/engine.hpp"

#include <algorithm>
#include <array>
#include <cmath>

namespace intervalbf::engine {

using numerics::kInf;

std::string_view to_string(Design d) {
  return d == Design::one_sample ? "one_sample" : "two_sample";
}

Design design_from_string(std::string_view name) {
  if (name == "one_sample") return Design::one_sample;
  if (name == "two_sample") return Design::two_sample;
  throw DomainError("unknown design '" + std::string(name) + "'");
}

double TStatSummary::effect_se() const {
  return std::sqrt(1.0 + t_obs * t_obs / (2.0 * nu)) / ncp_scale;
}

void TStatSummary::validate() const {
  if (!std::isfinite(t_obs)) throw DomainError("t statistic must be finite");
  if (!(nu > 0.0) || !std::isfinite(nu))
    throw DomainError("degrees of freedom must be positive and finite");
  if (!(ncp_scale > 0.0) || !std::isfinite(ncp_scale))
    throw DomainError("noncentrality scale must be positive and finite");
}

void to_json(nlohmann::json& j, const TStatSummary& s) {
  j = nlohmann::json{{"t_obs", s.t_obs},
                     {"nu", s.nu},
                     {"ncp_scale", s.ncp_scale},
                     {"design", to_string(s.design)},
                     {"n1", s.n1 > 0.0 ? nlohmann::json(s.n1) : nlohmann::json()},
                     {"n2", s.n2 ? nlohmann::json(*s.n2) : nlohmann::json()}};
}

TStatSummary summarize(Design design, double n1, std::optional<double> n2,
                       double mean_effect, double sd) {
  if (!(n1 >= 2.0) || !std::isfinite(n1)) throw DomainError("n1 must be >= 2");
  if (!(sd > 0.0) || !std::isfinite(sd))
    throw DomainError("sd must be positive and finite");
  if (!std::isfinite(mean_effect)) throw DomainError("mean effect must be finite");
  TStatSummary s;
  s.design = design;
  s.n1 = n1;
  if (design == Design::one_sample) {
    s.nu = n1 - 1.0;
    s.ncp_scale = std::sqrt(n1);
    s.t_obs = mean_effect / (sd / std::sqrt(n1));
  } else {
    if (!n2 || !(*n2 >= 2.0) || !std::isfinite(*n2))
      throw DomainError("two-sample design needs n2 >= 2");
    s.n2 = *n2;
    s.nu = n1 + *n2 - 2.0;
    s.ncp_scale = std::sqrt(n1 * *n2 / (n1 + *n2));
    s.t_obs = mean_effect / (sd * std::sqrt(1.0 / n1 + 1.0 / *n2));
  }
  if (!std::isfinite(s.t_obs)) throw DomainError("degenerate t statistic");
  return s;
}

bool Region::contains(double d) const {
  return std::any_of(parts.begin(), parts.end(),
                     [d](const Interval& i) { return d >= i.lo && d < i.hi; });
}

void HypothesisPartition::validate() const {
  const std::size_t m = regions.size();
  if (m < 2) throw DomainError("a partition needs at least two hypotheses");
  if (priors.size() != m)
    throw DomainError("partition needs exactly one prior per region");
  if (prior_probs.size() != m)
    throw DomainError("partition needs exactly one prior probability per region");
  double sum = 0.0;
  for (double p : prior_probs) {
    if (!(p > 0.0 && p <= 1.0))
      throw DomainError("hypothesis prior probabilities must lie in (0, 1]");
    sum += p;
  }
  if (std::abs(sum - 1.0) > 1e-9)
    throw DomainError("hypothesis prior probabilities must sum to 1");

  std::vector<Interval> all;
  for (const auto& r : regions) {
    if (r.parts.empty()) throw DomainError("empty hypothesis region");
    for (const auto& i : r.parts) {
      if (!(i.lo < i.hi)) throw DomainError("region interval must satisfy lo < hi");
      all.push_back(i);
    }
  }
  std::sort(all.begin(), all.end(),
            [](const Interval& a, const Interval& b) { return a.lo < b.lo; });
  if (all.front().lo != -kInf || all.back().hi != kInf)
    throw DomainError("regions must cover the whole real line");
  for (std::size_t i = 1; i < all.size(); ++i)
    if (all[i].lo != all[i - 1].hi)
      throw DomainError("regions must be disjoint and leave no gaps");
}

HypothesisPartition HypothesisPartition::mirrored() const {
  HypothesisPartition out;
  for (auto it = cutpoints.rbegin(); it != cutpoints.rend(); ++it) out.cutpoints.push_back(-*it);
  for (const auto& r : regions) {
    Region flipped;
    for (auto it = r.parts.rbegin(); it != r.parts.rend(); ++it)
      flipped.parts.push_back({-it->hi, -it->lo});
    out.regions.push_back(std::move(flipped));
  }
  for (const auto& p : priors) out.priors.push_back(p.mirrored());
  out.prior_probs = prior_probs;
  return out;
}

HypothesisPartition HypothesisPartition::from_cutpoints(std::vector<double> cutpoints,
                                                        std::vector<PriorSpec> priors,
                                                        std::vector<double> prior_probs) {
  if (!std::is_sorted(cutpoints.begin(), cutpoints.end()) ||
      std::adjacent_find(cutpoints.begin(), cutpoints.end()) != cutpoints.end())
    throw DomainError("cutpoints must be strictly increasing");
  for (double c : cutpoints)
    if (!std::isfinite(c)) throw DomainError("cutpoints must be finite");
  HypothesisPartition p;
  double lo = -kInf;
  for (double c : cutpoints) {
    p.regions.push_back(Region{{{lo, c}}});
    lo = c;
  }
  p.regions.push_back(Region{{{lo, kInf}}});
  p.cutpoints = std::move(cutpoints);
  p.priors = std::move(priors);
  p.prior_probs = std::move(prior_probs);
  p.validate();
  return p;
}

HypothesisPartition HypothesisPartition::two_way(double delta, priors::Family family,
                                                 double epsilon, double p_null) {
  if (!(delta > 0.0) || !std::isfinite(delta))
    throw DomainError("two-way margin delta must be positive");
  if (family == priors::Family::flat)
    throw DomainError("the alternative needs a non-local prior family");
  const auto full = priors::full_family(family);
  const double tau = priors::tune_tau(full, {delta, epsilon});
  HypothesisPartition p;
  p.cutpoints = {-delta, delta};
  p.regions = {Region{{{-delta, delta}}}, Region{{{-kInf, -delta}, {delta, kInf}}}};
  p.priors = {PriorSpec::flat(-delta, delta), PriorSpec::non_local(full, tau)};
  p.prior_probs = {p_null, 1.0 - p_null};
  p.validate();
  return p;
}

HypothesisPartition HypothesisPartition::three_way(double delta1, double delta2,
                                                   priors::Family family, double epsilon,
                                                   std::vector<double> prior_probs) {
  if (!(delta1 < 0.0 && delta2 > 0.0) || !std::isfinite(delta1) || !std::isfinite(delta2))
    throw DomainError("three-way cutpoints must satisfy delta1 < 0 < delta2");
  if (family == priors::Family::flat)
    throw DomainError("the outer hypotheses need a non-local prior family");
  const auto half = priors::half_family(family);
  const double tau_left = priors::tune_tau(half, {-delta1, 0.5 * epsilon});
  const double tau_right = priors::tune_tau(half, {delta2, 0.5 * epsilon});
  if (prior_probs.empty()) prior_probs = {1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0};
  return from_cutpoints({delta1, delta2},
                        {PriorSpec::non_local(half, tau_left, priors::Side::left),
                         PriorSpec::flat(delta1, delta2),
                         PriorSpec::non_local(half, tau_right, priors::Side::right)},
                        std::move(prior_probs));
}

namespace {

nlohmann::json bound_json(double x) {
  return std::isfinite(x) ? nlohmann::json(x) : nlohmann::json();
}

double bound_from_json(const nlohmann::json& v, double fallback) {
  if (v.is_null()) return fallback;
  return v.get<double>();
}

}  // namespace

void to_json(nlohmann::json& j, const HypothesisPartition& p) {
  nlohmann::json regions = nlohmann::json::array();
  for (const auto& r : p.regions) {
    nlohmann::json parts = nlohmann::json::array();
    for (const auto& i : r.parts) parts.push_back({bound_json(i.lo), bound_json(i.hi)});
    regions.push_back(parts);
  }
  j = nlohmann::json{{"cutpoints", p.cutpoints},
                     {"regions", regions},
                     {"priors", p.priors},
                     {"prior_probs", p.prior_probs}};
}

HypothesisPartition partition_from_json(const nlohmann::json& j) {
  HypothesisPartition p;
  p.cutpoints = j.value("cutpoints", std::vector<double>{});
  for (const auto& r : j.at("regions")) {
    Region region;
    for (const auto& i : r)
      region.parts.push_back({bound_from_json(i.at(0), -kInf), bound_from_json(i.at(1), kInf)});
    p.regions.push_back(std::move(region));
  }
  for (const auto& pr : j.at("priors")) p.priors.push_back(priors::prior_from_json(pr));
  p.prior_probs = j.at("prior_probs").get<std::vector<double>>();
  p.validate();
  return p;
}

DecisionRule DecisionRule::threshold(double kappa) {
  DecisionRule r{Kind::threshold_kappa, kappa};
  r.validate();
  return r;
}

DecisionRule DecisionRule::max_posterior() { return {Kind::max_posterior, 0.5}; }

void DecisionRule::validate() const {
  if (kind == Kind::threshold_kappa && !(kappa > 0.0 && kappa < 1.0))
    throw DomainError("kappa must lie in (0, 1)");
}

void to_json(nlohmann::json& j, const DecisionRule& r) {
  if (r.kind == DecisionRule::Kind::threshold_kappa)
    j = nlohmann::json{{"kind", "threshold_kappa"}, {"kappa", r.kappa}};
  else
    j = nlohmann::json{{"kind", "max_posterior"}};
}

DecisionRule rule_from_json(const nlohmann::json& j) {
  const auto kind = j.at("kind").get<std::string>();
  if (kind == "threshold_kappa") return DecisionRule::threshold(j.at("kappa").get<double>());
  if (kind == "max_posterior") return DecisionRule::max_posterior();
  throw DomainError("unknown decision rule '" + kind + "'");
}

void to_json(nlohmann::json& j, const PosteriorReport& r) {
  nlohmann::json bf = nlohmann::json::array();
  for (const auto& row : r.bayes_factors) {
    nlohmann::json out = nlohmann::json::array();
    for (double x : row) out.push_back(std::isfinite(x) ? nlohmann::json(x) : nlohmann::json());
    bf.push_back(out);
  }
  j = nlohmann::json{{"log_marginals", r.log_marginals},
                     {"posteriors", r.posteriors},
                     {"log_bayes_factors", r.log_bayes_factors},
                     {"bayes_factors", bf},
                     {"decision", r.decision},
                     {"rule", r.rule}};
}

namespace {

// One smooth piece of a prior's support, clipped to [a, b]. The integrand is
// located by a coarse scan plus golden-section refinement, then integrated in
// log-shifted form over a window of ±tail_cut likelihood standard errors that
// is widened until its interior edges are negligible.
double log_piece(const TStatSummary& s, const PriorSpec& prior, double a, double b,
                 const numerics::QuadratureSettings& q) {
  if (!(b > a)) return -kInf;
  const double c = s.ncp_scale;
  auto g = [&](double d) {
    const double lp = prior.base_log_density(d);
    if (lp == -kInf) return -kInf;
    return lp + numerics::log_nct_pdf(s.t_obs, {s.nu, c * d});
  };

  const double w = s.effect_se();
  const double centre = s.t_obs / c;
  const double reach = q.tail_cut * w;

  // Locate the maximum of g on [a, b].
  double lo = std::max(a, centre - reach), hi = std::min(b, centre + reach);
  if (!(hi >= lo)) lo = hi = (centre < a) ? a : b;
  double best = lo, best_val = g(lo);
  if (hi > lo) {
    constexpr int kGrid = 24;
    const double step = (hi - lo) / kGrid;
    for (int i = 1; i <= kGrid; ++i) {
      const double x = i == kGrid ? hi : lo + i * step;
      const double v = g(x);
      if (v > best_val) {
        best_val = v;
        best = x;
      }
    }
    double x0 = std::max(lo, best - step), x1 = std::min(hi, best + step);
    constexpr double kInvPhi = 0.6180339887498949;
    double xa = x1 - kInvPhi * (x1 - x0), xb = x0 + kInvPhi * (x1 - x0);
    double ga = g(xa), gb = g(xb);
    for (int it = 0; it < 40 && (x1 - x0) > 0.02 * w; ++it) {
      if (ga >= gb) {
        x1 = xb;
        xb = xa;
        gb = ga;
        xa = x1 - kInvPhi * (x1 - x0);
        ga = g(xa);
      } else {
        x0 = xa;
        xa = xb;
        ga = gb;
        xb = x0 + kInvPhi * (x1 - x0);
        gb = g(xb);
      }
    }
    if (ga > best_val) {
      best_val = ga;
      best = xa;
    }
    if (gb > best_val) {
      best_val = gb;
      best = xb;
    }
  }
  if (best_val == -kInf) {
    // Only reachable when the prior vanishes on the whole scanned window.
    best = std::clamp(0.5 * (lo + hi), a, b);
    best_val = g(best);
    if (best_val == -kInf) return -kInf;
  }

  // Integration window, widened until interior edges are negligible.
  constexpr double kNegligible = 60.0;
  double wl = std::max(a, best - reach), wr = std::min(b, best + reach);
  double grow = reach;
  for (int it = 0; wl > a && best_val - g(wl) < kNegligible; ++it, grow *= 2.0) {
    if (it == 64) throw ConvergenceError("marginal integrand does not decay", 0.0, 0.0);
    wl = std::max(a, best - 2.0 * grow);
  }
  grow = reach;
  for (int it = 0; wr < b && best_val - g(wr) < kNegligible; ++it, grow *= 2.0) {
    if (it == 64) throw ConvergenceError("marginal integrand does not decay", 0.0, 0.0);
    wr = std::min(b, best + 2.0 * grow);
  }

  auto f = [&](double d) {
    const double v = g(d);
    return v == -kInf ? 0.0 : std::exp(v - best_val);
  };
  const std::array<double, 5> breaks = {best - 4.0 * w, best - w, best, best + w,
                                        best + 4.0 * w};
  const auto r = numerics::integrate(f, wl, wr, q, breaks);
  if (!(r.value > 0.0)) return -kInf;
  return best_val + std::log(r.value);
}

}  // namespace

double log_marginal_over(const TStatSummary& summary, const PriorSpec& prior,
                         Interval interval, const numerics::QuadratureSettings& settings) {
  summary.validate();
  settings.validate();
  std::vector<double> terms;
  for (const auto& piece : prior.pieces()) {
    const double a = std::max(piece.span.lo, interval.lo);
    const double b = std::min(piece.span.hi, interval.hi);
    const double lp = log_piece(summary, prior, a, b, settings);
    if (lp != -kInf) terms.push_back(lp + piece.log_weight);
  }
  return numerics::log_sum_exp(terms);
}

double log_marginal(const TStatSummary& summary, const PriorSpec& prior,
                    const numerics::QuadratureSettings& settings) {
  const double lm = log_marginal_over(summary, prior, prior.support(), settings);
  if (!std::isfinite(lm))
    throw ConvergenceError("marginal likelihood underflowed to zero", 0.0, 0.0);
  return lm;
}

std::vector<double> log_marginals(const TStatSummary& summary,
                                  const HypothesisPartition& partition,
                                  const numerics::QuadratureSettings& settings) {
  std::vector<double> out;
  out.reserve(partition.size());
  for (const auto& prior : partition.priors) out.push_back(log_marginal(summary, prior, settings));
  return out;
}

std::size_t decide(std::span<const double> posteriors, const DecisionRule& rule) {
  if (posteriors.empty()) throw UsageError("decide: no posterior probabilities");
  if (rule.kind == DecisionRule::Kind::threshold_kappa) {
    if (posteriors.size() != 2)
      throw UsageError("the kappa threshold rule applies to two hypotheses only");
    return posteriors[0] > rule.kappa ? 0 : 1;
  }
  std::size_t arg = 0;
  for (std::size_t i = 1; i < posteriors.size(); ++i)
    if (posteriors[i] > posteriors[arg]) arg = i;
  return arg;
}

DecisionRule default_rule(std::size_t hypotheses, double kappa) {
  return hypotheses == 2 ? DecisionRule::threshold(kappa) : DecisionRule::max_posterior();
}

PosteriorReport assemble_report(std::vector<double> log_marginals,
                                std::span<const double> prior_probs,
                                const DecisionRule& rule) {
  rule.validate();
  const std::size_t m = log_marginals.size();
  if (prior_probs.size() != m)
    throw UsageError("one prior probability per hypothesis is required");
  std::vector<double> weighted(m);
  for (std::size_t i = 0; i < m; ++i) {
    if (!(prior_probs[i] > 0.0)) throw DomainError("prior probabilities must be positive");
    weighted[i] = log_marginals[i] + std::log(prior_probs[i]);
  }
  const double norm = numerics::log_sum_exp(weighted);
  if (!std::isfinite(norm))
    throw ConvergenceError("posterior normalizer is not finite", norm, 0.0);

  PosteriorReport r;
  r.posteriors.resize(m);
  for (std::size_t i = 0; i < m; ++i) r.posteriors[i] = std::exp(weighted[i] - norm);
  r.log_bayes_factors.assign(m, std::vector<double>(m));
  r.bayes_factors.assign(m, std::vector<double>(m));
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < m; ++j) {
      r.log_bayes_factors[i][j] = log_marginals[i] - log_marginals[j];
      r.bayes_factors[i][j] = std::exp(r.log_bayes_factors[i][j]);
    }
  r.log_marginals = std::move(log_marginals);
  r.rule = rule;
  r.decision = decide(r.posteriors, rule);
  return r;
}

PosteriorReport posterior(const TStatSummary& summary, const HypothesisPartition& partition,
                          const DecisionRule& rule,
                          const numerics::QuadratureSettings& settings) {
  partition.validate();
  return assemble_report(log_marginals(summary, partition, settings), partition.prior_probs,
                         rule);
}

nlohmann::json quadrature_to_json(const numerics::QuadratureSettings& s) {
  return {{"rel_tol", s.rel_tol},
          {"abs_tol", s.abs_tol},
          {"max_subdivisions", s.max_subdivisions},
          {"tail_cut", s.tail_cut}};
}

numerics::QuadratureSettings quadrature_from_json(const nlohmann::json& j,
                                                  numerics::QuadratureSettings base) {
  if (!j.is_object()) throw UsageError("quadrature settings must be a JSON object");
  for (const auto& [key, value] : j.items()) {
    if (key == "rel_tol")
      base.rel_tol = value.get<double>();
    else if (key == "abs_tol")
      base.abs_tol = value.get<double>();
    else if (key == "max_subdivisions")
      base.max_subdivisions = value.get<int>();
    else if (key == "tail_cut")
      base.tail_cut = value.get<double>();
    else
      throw UsageError("unknown quadrature setting '" + key + "'");
  }
  base.validate();
  return base;
}

}  // namespace intervalbf::engine
