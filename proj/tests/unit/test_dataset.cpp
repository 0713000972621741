#include <algorithm>
#include <filesystem>
#include <random>

#include "doctest.h"
#include "riskint/dataset.hpp"
#include "riskint/errors.hpp"

using namespace riskint;

namespace {

std::string error_kind(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.kind();
  }
  return "";
}

const std::filesystem::path kFixture = std::filesystem::path(RISKINT_DATA_DIR) / "fixture_cohort.csv";

}  // namespace

TEST_CASE("load_cohort reads the reconstruction fixture") {
  Cohort c = load_cohort(kFixture);
  CHECK(c.size() == 150);
  CHECK(c.covariate_count() == 3);
  CHECK(c.covariate_names() == std::vector<std::string>{"age", "male", "urban"});
}

TEST_CASE("parse errors reject the whole file") {
  CHECK(error_kind([] { parse_cohort_csv("y,z1,z2,x\n2,0,1,3\n"); }) == "NonBinaryValue");
  CHECK(error_kind([] { parse_cohort_csv("y,z1,z2,x\n1,0,1,\n"); }) == "MissingValue");
  CHECK(error_kind([] { parse_cohort_csv("y,z1,z2,x\n1,0,1,NA\n"); }) == "MissingValue");
  CHECK(error_kind([] { parse_cohort_csv("y,z1,x\n1,0,1\n"); }) == "MissingColumn");
  CHECK(error_kind([] { parse_cohort_csv(""); }) == "EmptyFile");
  CHECK(error_kind([] { parse_cohort_csv("y,z1,z2\n"); }) == "EmptyFile");
  CHECK(error_kind([] { parse_cohort_csv("y,z1,z2,x\n1,0,1,abc\n"); }) == "NonNumericValue");
  CHECK(error_kind([] { parse_cohort_csv("y,z1,z2,x\n1,0,1\n"); }) == "MalformedRow");

  try {
    parse_cohort_csv("y,z1,z2,x\n1,0,1,3\n0,1,1,2\n1,0.5,0,1\n");
    FAIL("expected NonBinaryValue");
  } catch (const Error& e) {
    CHECK(e.kind() == "NonBinaryValue");
    CHECK(e.details()["row"] == 3);
    CHECK(e.details()["column"] == "z1");
  }
}

TEST_CASE("single valid row and custom column mapping") {
  Cohort c = parse_cohort_csv("id,dead,hosp,stage,age\n7,1,0,0,55.5\n",
                              {"dead", "hosp", "stage", {"age"}});
  CHECK(c.size() == 1);
  CHECK(c.records()[0].y == 1);
  CHECK(c.records()[0].x == std::vector<double>{55.5});
}

TEST_CASE("default covariates are the unmapped columns in header order") {
  Cohort c = parse_cohort_csv("b,y,z2,a,z1\n1,0,1,2,0\n");
  CHECK(c.covariate_names() == std::vector<std::string>{"b", "a"});
  CHECK(c.records()[0].x == std::vector<double>{1.0, 2.0});
}

TEST_CASE("canonical CSV round trip is the identity") {
  std::mt19937_64 gen(3);
  std::uniform_real_distribution<double> u(-1e3, 1e3);
  std::vector<SubjectRecord> recs;
  for (int i = 0; i < 200; ++i) {
    recs.push_back({static_cast<int>(gen() % 2), static_cast<int>(gen() % 2),
                    static_cast<int>(gen() % 2), {u(gen), u(gen) * 1e-7, std::floor(u(gen))}});
  }
  Cohort c(recs, {"a", "b", "c"});
  Cohort back = parse_cohort_csv(cohort_to_csv(c));
  CHECK(back.records() == c.records());
  CHECK(back.covariate_names() == c.covariate_names());
}

TEST_CASE("lower median takes rank ceil(n/2)") {
  CHECK(lower_median({3, 1, 2}) == 2);
  CHECK(lower_median({4, 1, 3, 2}) == 2);
  CHECK(lower_median({5}) == 5);
}

TEST_CASE("describe on a single record") {
  Cohort c = parse_cohort_csv("y,z1,z2\n1,0,0\n");
  auto t = describe(c);
  CHECK(t.overall.cells[exposure_cell_index(0, 0)] == EventCount{1, 1});
  CHECK(t.overall.cells[exposure_cell_index(1, 1)] == EventCount{0, 0});
  CHECK(t.overall.cells[exposure_cell_index(0, 1)] == EventCount{0, 0});
  CHECK(t.overall.cells[exposure_cell_index(1, 0)] == EventCount{0, 0});
}

TEST_CASE("describe reproduces the descriptive table of the fixture") {
  Cohort c = load_cohort(kFixture);
  auto t = describe(c, {{"age", 67.0}});
  auto cell = [](const DescriptiveRow& r, int z1, int z2) { return r.cells[exposure_cell_index(z1, z2)]; };
  CHECK(cell(t.overall, 1, 1) == EventCount{23, 75});
  CHECK(cell(t.overall, 0, 1) == EventCount{4, 36});
  CHECK(cell(t.overall, 1, 0) == EventCount{23, 31});
  CHECK(cell(t.overall, 0, 0) == EventCount{5, 8});

  REQUIRE(t.groups.size() == 3);
  const auto& age = t.groups[0];
  CHECK_FALSE(age.binary);
  CHECK(age.cut == 67.0);
  CHECK(cell(age.rows[0], 1, 1) == EventCount{12, 41});
  CHECK(cell(age.rows[0], 0, 1) == EventCount{2, 13});
  CHECK(cell(age.rows[0], 1, 0) == EventCount{11, 13});
  CHECK(cell(age.rows[0], 0, 0) == EventCount{2, 2});
  CHECK(cell(age.rows[1], 1, 1) == EventCount{11, 34});

  // default split is the lower median, which is not the labelled 67
  CHECK(describe(c).groups[0].cut == 69.0);

  const auto& male = t.groups[1];
  CHECK(male.binary);
  CHECK(cell(male.rows[0], 1, 1) == EventCount{4, 22});  // female
  CHECK(cell(male.rows[1], 1, 1) == EventCount{19, 53});
  CHECK(cell(male.rows[0], 0, 0) == EventCount{0, 1});

  const auto& urban = t.groups[2];
  CHECK(cell(urban.rows[0], 0, 1) == EventCount{4, 26});  // rural
  CHECK(cell(urban.rows[1], 0, 1) == EventCount{0, 10});
  CHECK(cell(urban.rows[1], 0, 0) == EventCount{2, 2});
}

TEST_CASE("describe totals and permutation invariance") {
  Cohort c = load_cohort(kFixture);
  auto t = describe(c);
  std::size_t total = 0, events = 0, ys = 0;
  for (const auto& cell : t.overall.cells) {
    total += cell.total;
    events += cell.events;
  }
  for (const auto& r : c.records()) ys += static_cast<std::size_t>(r.y);
  CHECK(total == c.size());
  CHECK(events == ys);
  for (const auto& g : t.groups) {
    std::size_t gt = 0;
    for (const auto& row : g.rows)
      for (const auto& cell : row.cells) gt += cell.total;
    CHECK(gt == c.size());
  }

  auto recs = c.records();
  std::mt19937 gen(9);
  std::shuffle(recs.begin(), recs.end(), gen);
  auto t2 = describe(Cohort(recs, c.covariate_names()));
  CHECK(t2.to_json() == t.to_json());
  CHECK(t.to_text().find("23/75") != std::string::npos);
}
