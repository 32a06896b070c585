#include "doctest.h"

#include <cmath>
#include <sstream>

#include "intervalbf/trialdata.hpp"

using namespace intervalbf;
using namespace intervalbf::trialdata;

namespace {

const std::string kHeader(kCsvHeader);

std::vector<StudyRecord> parse(const std::string& text) {
  std::istringstream in(text);
  return parse_registry(in);
}

std::size_t error_row(const std::string& text, std::string& field) {
  try {
    parse(text);
  } catch (const ParseError& e) {
    field = e.field();
    return e.row();
  }
  return 9999;
}

}  // namespace

TEST_CASE("CSV registry parses arm summaries") {
  const auto rs = parse(kHeader +
                        "\nS1,drugA,glargine,3,284,142,-0.9,-0.7,1.1,1.0,HbA1c,26\n"
                        "\"S,2\",drugB,glargine,2,50,50,-1.2,-0.8,0.9,0.8,\"HbA1c \"\"%\"\"\",52\n");
  REQUIRE(rs.size() == 2);
  CHECK(rs[0].study_id == "S1");
  CHECK(rs[0].phase == 3);
  CHECK(*rs[0].mean_treat == -0.9);
  CHECK(rs[1].study_id == "S,2");
  CHECK(rs[1].endpoint == "HbA1c \"%\"");
  CHECK(rs[1].weeks == 52.0);
  CHECK_FALSE(rs[0].statistic.has_value());
}

TEST_CASE("pooled sd and two-sample summary") {
  const auto r = parse(kHeader + "\nS1,A,R,3,284,142,-0.9,-0.7,1.1,1.0,HbA1c,26\n").front();
  const double sp = std::sqrt((283 * 1.21 + 141 * 1.0) / 424.0);
  CHECK(r.pooled_sd() == doctest::Approx(sp).epsilon(1e-15));
  const auto s = to_summary(r);
  CHECK(s.design == engine::Design::two_sample);
  CHECK(s.nu == 424.0);
  CHECK(s.t_obs == doctest::Approx(-0.2 / (sp * std::sqrt(1.0 / 284 + 1.0 / 142))).epsilon(1e-13));
}

TEST_CASE("statistic-only rows") {
  const auto rs = parse(kHeader + ",t,nu,ncp_scale\n"
                        "S1,A,R,3,100,100,,,,,HbA1c,26,-2.1,198,7.07\n"
                        "S2,A,R,3,100,100,-1,-0.8,1,1,HbA1c,26,,,\n");
  REQUIRE(rs.size() == 2);
  REQUIRE(rs[0].statistic.has_value());
  CHECK(rs[0].statistic->t == -2.1);
  CHECK_FALSE(rs[0].has_arm_summaries());
  CHECK_THROWS_AS(rs[0].pooled_sd(), DomainError);
  const auto s = to_summary(rs[0]);
  CHECK(s.t_obs == -2.1);
  CHECK(s.ncp_scale == 7.07);
  CHECK(rs[1].has_arm_summaries());
}

TEST_CASE("CSV errors name the row and field") {
  std::string field;
  CHECK(error_row(kHeader + "\nS1,A,R,3,284,142,-0.9,-0.7,-1.1,1.0,HbA1c,26\n", field) == 1);
  CHECK(field == "sd_treat");
  CHECK(error_row(kHeader + "\nS1,A,R,3,284,142,-0.9,-0.7,1.1,1.0,HbA1c,26\n"
                            "S2,A,R,4,284,142,-0.9,-0.7,1.1,1.0,HbA1c,26\n", field) == 2);
  CHECK(field == "phase");
  CHECK(error_row(kHeader + "\nS1,A,R,3,284,142,x,-0.7,1.1,1.0,HbA1c,26\n", field) == 1);
  CHECK(field == "mean_treat");
  CHECK(error_row(kHeader + "\nS1,A,R,3,1,142,-0.9,-0.7,1.1,1.0,HbA1c,26\n", field) == 1);
  CHECK(field == "n_treat");
  CHECK(error_row(kHeader + "\nS1,A,R,3,284,142,-0.9,,1.1,1.0,HbA1c,26\n", field) == 1);
  CHECK(field == "mean_ref");
  CHECK(error_row(kHeader + "\nS1,A,R,3,284,142,-0.9,-0.7,1.1,1.0,HbA1c,26\n"
                            "S1,A,R,3,284,142,-0.9,-0.7,1.1,1.0,HbA1c,26\n", field) == 2);
  CHECK(field == "study_id");
  CHECK(error_row(kHeader + "\nS1,A,R,3,284,142\n", field) == 1);
  CHECK(field == "line");
  CHECK(error_row("study_id,drug\nS1,A\n", field) == 0);
  CHECK(field == "header");
  CHECK(error_row(kHeader + "\nS1,A,R,2.5,284,142,-0.9,-0.7,1.1,1.0,HbA1c,26\n", field) == 1);
  CHECK(field == "phase");
  CHECK(error_row(kHeader + "\nS1,A,R,3,284,142,-0.9,-0.7,1.1,1.0,HbA1c,inf\n", field) == 1);
  CHECK(field == "weeks");
}

TEST_CASE("JSON registry mirrors the CSV rules") {
  const auto rs = parse(R"([{"study_id":"S1","drug":"A","reference":"R","phase":3,"n_treat":284,
     "n_ref":142,"mean_treat":-0.9,"mean_ref":-0.7,"sd_treat":1.1,"sd_ref":1.0,
     "endpoint":"HbA1c","weeks":26}])");
  REQUIRE(rs.size() == 1);
  CHECK(rs[0].n_ref == 142.0);
  std::string field;
  CHECK(error_row(R"([{"study_id":"S1","drug":"A","reference":"R","phase":3,"n_treat":284,
     "n_ref":142,"endpoint":"HbA1c","weeks":26,"t":1.0}])", field) == 1);
  CHECK(field == "t");
  CHECK(error_row(R"([{"study_id":"S1","drug":"A","reference":"R","phase":"3","n_treat":284,
     "n_ref":142,"endpoint":"HbA1c","weeks":26}])", field) == 1);
  CHECK(field == "phase");
  CHECK_THROWS_AS(parse("[{"), ParseError);
}

TEST_CASE("round trips through CSV and JSON") {
  const auto rs = parse(kHeader + ",t,nu,ncp_scale\n"
                        "S1,A,R,3,284,142,-0.9,-0.7,1.1,1.0,HbA1c,26,,,\n"
                        "S2,B,R,2,100,100,,,,,\"a,b\",12,-2.1,198,7.0710678118654755\n"
                        "S3,B,R,2,100,100,0.1,0.30000000000000004,1,1,x,0,,,\n");
  std::istringstream csv(to_csv(rs));
  CHECK(parse_registry(csv) == rs);
  CHECK(parse_json(to_json(rs)) == rs);
  // Without statistic rows the extra columns are dropped.
  const std::vector<StudyRecord> plain = {rs[0]};
  CHECK(to_csv(plain).substr(0, kHeader.size() + 1) == kHeader + "\n");
}

TEST_CASE("missing registry file") {
  CHECK_THROWS_AS(load_registry("/nonexistent/registry.csv"), DomainError);
}
