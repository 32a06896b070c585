#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "intervalbf/meta.hpp"
#include "intervalbf/simlab.hpp"

using namespace intervalbf;
using namespace intervalbf::meta;
using priors::Family;

namespace {

std::vector<MetaStudy> draw(std::uint64_t seed, std::size_t count, double lo, double hi) {
  Rng rng(seed);
  std::vector<MetaStudy> out;
  for (std::size_t k = 0; k < count; ++k) {
    const double mu = rng.uniform(lo, hi);
    const auto n = static_cast<std::size_t>(rng.uniform_int(100, 200));
    out.push_back({"s" + std::to_string(k), simlab::draw_one_sample(rng, mu, n), std::nullopt});
  }
  return out;
}

MetaInput input(std::vector<MetaStudy> studies, engine::HypothesisPartition p) {
  return {std::move(studies), std::move(p)};
}

const auto kTwoWay = engine::HypothesisPartition::two_way(0.1, Family::moment, 0.01);
const auto kThreeWay = engine::HypothesisPartition::three_way(-0.1, 0.1, Family::moment, 0.01);

}  // namespace

TEST_CASE("pooled log marginals are the per-study sums") {
  const auto in = input(draw(1, 8, 0.0, 0.3), kThreeWay);
  const auto rows = study_log_marginals(in);
  REQUIRE(rows.size() == 8);
  const auto pooled = pooled_log_marginals(rows);
  for (std::size_t i = 0; i < 3; ++i) {
    double direct = 0.0;
    for (const auto& s : in.studies) direct += engine::log_marginal(s.summary, kThreeWay.priors[i]);
    CHECK(std::abs(pooled[i] - direct) <= 1e-12 * std::max(1.0, std::abs(direct)));
  }
  const auto rep = pool(in);
  CHECK(rep.report.log_marginals == pooled);
  CHECK(rep.study_ids.front() == "s0");
  CHECK(rep.prior_probs == kThreeWay.prior_probs);
}

TEST_CASE("pooling does not depend on study order") {
  auto studies = draw(2, 10, 0.0, 0.1);
  const auto base = pool(input(studies, kTwoWay));
  std::mt19937_64 gen(5);
  for (int rep = 0; rep < 5; ++rep) {
    std::shuffle(studies.begin(), studies.end(), gen);
    const auto r = pool(input(studies, kTwoWay));
    CHECK(r.report.log_marginals == base.report.log_marginals);
    CHECK(r.report.posteriors == base.report.posteriors);
  }
}

TEST_CASE("a duplicated study doubles its log marginals exactly") {
  const auto one = draw(3, 1, 0.0, 0.1);
  auto two = one;
  two.push_back(one.front());
  two.back().id = "copy";
  const auto a = pool(input(one, kTwoWay)).report.log_marginals;
  const auto b = pool(input(two, kTwoWay)).report.log_marginals;
  for (std::size_t i = 0; i < 2; ++i) CHECK(b[i] == 2.0 * a[i]);
}

TEST_CASE("pooling a single study equals the single-study posterior") {
  const auto s = draw(4, 1, 0.2, 0.3);
  const auto p = pool(input(s, kTwoWay), engine::DecisionRule::threshold(0.5));
  const auto q = engine::posterior(s.front().summary, kTwoWay, engine::DecisionRule::threshold(0.5));
  CHECK(p.report.posteriors == q.posteriors);
}

TEST_CASE("sequential updating chains to the pooled analysis") {
  const auto all = draw(5, 10, 0.0, 0.1);
  const std::vector<MetaStudy> first(all.begin(), all.begin() + 4);
  const std::vector<MetaStudy> second(all.begin() + 4, all.end());
  for (const auto& part : {kTwoWay, kThreeWay}) {
    const auto step1 = sequential_update(PhasePosterior::uniform(part.size()), input(first, part));
    const auto step2 = sequential_update(PhasePosterior::from_report(step1.report), input(second, part));
    auto uniform = part;
    uniform.prior_probs = PhasePosterior::uniform(part.size()).probs;
    const auto direct = pool(input(all, uniform));
    for (std::size_t i = 0; i < part.size(); ++i)
      CHECK(std::abs(step2.report.posteriors[i] - direct.report.posteriors[i]) < 1e-10);
  }
}

TEST_CASE("carried probabilities shift the posterior in their direction") {
  const auto studies = draw(6, 10, 0.0, 0.1);
  double last = 0.0;
  for (double p0 : {0.1, 0.5, 0.9}) {
    const PhasePosterior carried{{p0, 1.0 - p0}};
    const auto r = sequential_update(carried, input(studies, kTwoWay));
    CHECK(r.report.posteriors[0] > last);
    last = r.report.posteriors[0];
    CHECK(r.prior_probs[0] == p0);
  }
}

TEST_CASE("phase posterior validation") {
  const PhasePosterior ok{{0.2, 0.8}}, edge{{0.0, 1.0}}, short_sum{{0.2, 0.7}}, three{{0.3, 0.3, 0.4}};
  CHECK_NOTHROW(ok.validate());
  CHECK_THROWS_AS(edge.validate(), DomainError);
  CHECK_THROWS_AS(short_sum.validate(), DomainError);
  CHECK_THROWS_AS(sequential_update(three, input(draw(7, 2, 0, 0.1), kTwoWay)), UsageError);
}

TEST_CASE("study-specific partitions and error context") {
  auto studies = draw(8, 3, 0.0, 0.1);
  studies[1].partition = engine::HypothesisPartition::two_way(0.2, Family::moment, 0.01);
  const auto rows = study_log_marginals(input(studies, kTwoWay));
  CHECK(rows[1][0] == engine::log_marginal(studies[1].summary, priors::PriorSpec::flat(-0.2, 0.2)));

  studies[2].partition = kThreeWay;
  CHECK_THROWS_AS(pool(input(studies, kTwoWay)), Error);

  auto bad = draw(9, 2, 0.0, 0.1);
  bad[1].summary.nu = -1.0;
  bad[1].id = "broken";
  try {
    pool(input(bad, kTwoWay));
    FAIL("expected an error");
  } catch (const DomainError& e) {
    CHECK(std::string(e.what()).find("study 'broken'") != std::string::npos);
  }
  CHECK_THROWS_AS(pool(input({}, kTwoWay)), Error);
}

TEST_CASE("landscape over a small registry") {
  std::istringstream csv(std::string(trialdata::kCsvHeader) +
                         "\nA1,A,G,3,300,300,-1.2,-0.8,1.0,1.0,HbA1c,26\n"
                         "A2,A,G,3,250,250,-1.1,-0.8,1.1,0.9,HbA1c,26\n"
                         "B1,B,G,3,300,300,-0.85,-0.8,1.0,1.0,HbA1c,26\n"
                         "C1,C,X,3,300,300,-0.9,-0.8,1.0,1.0,HbA1c,26\n");
  const auto registry = trialdata::parse_registry(csv);
  LandscapeConfig c;
  c.reference = "G";
  c.delta_grid = {0.1, 0.2, 0.3, 0.4};
  c.threads = 2;
  const auto r = landscape(registry, c);
  CHECK(r.warnings.size() == 1);
  CHECK(r.points.size() == 12);
  for (const auto& p : r.points)
    CHECK(p.p_superior + p.p_equivalent + p.p_inferior == doctest::Approx(1.0).epsilon(1e-12));
  // Drug A lowers HbA1c by about 0.35: superior at small margins, equivalent at wide ones.
  CHECK(r.points[0].drug == "A");
  CHECK(r.points[0].p_superior > 0.9);
  CHECK(r.points[3].p_equivalent > r.points[3].p_superior);
  // Drug B is close to the reference.
  CHECK(r.points[4 + 3].p_equivalent > 0.9);
  CHECK(r.points[8].drug == "average");
  CHECK(r.points[8].studies == 3);

  // Raw margins are divided by each study's pooled sd.
  auto std_cfg = c;
  std_cfg.scale = MarginScale::standardized;
  const std::vector<trialdata::StudyRecord> b_only = {registry[2]};
  const auto raw = landscape(b_only, c);
  const auto stdz = landscape(b_only, std_cfg);
  CHECK(raw.points[0].p_equivalent == stdz.points[0].p_equivalent);

  auto flipped = c;
  flipped.lower_is_better = false;
  const auto f = landscape(registry, flipped);
  CHECK(f.points[0].p_inferior == r.points[0].p_superior);

  const std::string text = landscape_csv(r);
  CHECK(text.rfind("drug,delta,p_sup,p_eq,p_inf\n", 0) == 0);
  CHECK(std::count(text.begin(), text.end(), '\n') == 13);

  auto missing = c;
  missing.drugs = {"Z", "A"};
  const auto m = landscape(registry, missing);
  CHECK(m.warnings.size() == 2);
  CHECK(m.points.front().drug == "A");

  auto bad = c;
  bad.delta_grid = {0.2, 0.1};
  CHECK_THROWS_AS(landscape(registry, bad), DomainError);
}

TEST_CASE("landscape is independent of the thread count") {
  std::istringstream csv(std::string(trialdata::kCsvHeader) +
                         "\nA1,A,G,3,300,300,-1.2,-0.8,1.0,1.0,HbA1c,26\n"
                         "B1,B,G,3,300,300,-0.85,-0.8,1.0,1.0,HbA1c,26\n");
  const auto registry = trialdata::parse_registry(csv);
  LandscapeConfig c;
  c.reference = "G";
  c.delta_grid = {0.1, 0.2, 0.3, 0.4, 0.5};
  c.threads = 1;
  const auto a = landscape_csv(landscape(registry, c));
  c.threads = 4;
  CHECK(landscape_csv(landscape(registry, c)) == a);
}
