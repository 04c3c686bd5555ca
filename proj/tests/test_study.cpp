#include "hhj/study.hpp"

#include <gtest/gtest.h>

#include <sstream>

using namespace hhj;

namespace {

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(s);
  while (std::getline(in, item, sep)) out.push_back(item);
  return out;
}

StudyConfig small_config() {
  StudyConfig c;
  c.levels = {2, 4};
  c.timing = false;
  return c;
}

}  // namespace

TEST(Study, CsvHeaderAndColumns) {
  std::ostringstream out;
  run_study(small_config(), out);
  const auto lines = split(out.str(), '\n');
  ASSERT_EQ(lines.size(), 3u);
  EXPECT_EQ(lines[0],
            "level,nT,ndof_sigma,ndof_stream,ndof_multiplier,err_h1semi_u,eoc_h1semi_u,"
            "err_l2_sigma,eoc_l2_sigma,err_l2_p,eoc_l2_p,err_l2_u,eoc_l2_u,solver_residual,"
            "wall_time_s");
  for (std::size_t i = 1; i < lines.size(); ++i) EXPECT_EQ(split(lines[i], ',').size(), 15u);
  const auto first = split(lines[1], ',');
  EXPECT_EQ(first[0], "2");
  EXPECT_EQ(first[1], "8");
  EXPECT_EQ(first[6], "");  // no eoc on the first level
  EXPECT_EQ(first[14], "0.000");
  EXPECT_NE(split(lines[2], ',')[6], "");
}

TEST(Study, CsvIsByteIdenticalWithoutTiming) {
  std::ostringstream a;
  std::ostringstream b;
  run_study(small_config(), a);
  run_study(small_config(), b);
  EXPECT_EQ(a.str(), b.str());
}

TEST(Study, MarkdownTable) {
  StudyConfig c = small_config();
  c.format = TableFormat::Markdown;
  std::ostringstream out;
  run_study(c, out);
  const auto lines = split(out.str(), '\n');
  ASSERT_EQ(lines.size(), 4u);
  EXPECT_EQ(lines[1], "|---|---|---|---|---|---|---|---|---|---|---|");
  EXPECT_NE(lines[2].find("(-)"), std::string::npos);
  EXPECT_EQ(lines[3].find("(-)"), std::string::npos);
}

TEST(Study, RatesMatchEocOfConsecutiveLevels) {
  std::ostringstream out;
  const StudyResult r = run_study(small_config(), out);
  ASSERT_EQ(r.levels.size(), 2u);
  const Rates eo = rates(r.levels, 1);
  EXPECT_DOUBLE_EQ(eo.l2_u, std::log2(r.levels[0].errors.err_l2_u / r.levels[1].errors.err_l2_u));
  EXPECT_THROW(rates(r.levels, 0), Error);
}

TEST(Study, DefaultLevels) {
  EXPECT_EQ(default_levels(2, 2), (std::vector<int>{4, 8, 16, 32, 64}));
  EXPECT_EQ(default_levels(2, 3), (std::vector<int>{4, 8, 16, 32}));
  EXPECT_EQ(default_levels(2, 4), (std::vector<int>{2, 4, 8, 16}));
  EXPECT_EQ(default_levels(3, 2), (std::vector<int>{1, 2, 4}));
  StudyConfig c;
  c.dim = 3;
  c.validate();
  EXPECT_EQ(c.levels, default_levels(3, 2));
}

TEST(Study, ValidationRejectsBadConfigs) {
  auto bad = [](auto mutate) {
    StudyConfig c;
    mutate(c);
    EXPECT_THROW(c.validate(), Error);
  };
  bad([](StudyConfig& c) { c.dim = 4; });
  bad([](StudyConfig& c) { c.order = 1; });
  bad([](StudyConfig& c) { c.dim = 3; c.order = 4; });
  bad([](StudyConfig& c) { c.levels = {4, 4}; });
  bad([](StudyConfig& c) { c.levels = {8, 4}; });
  bad([](StudyConfig& c) { c.levels = {0, 2}; });
  bad([](StudyConfig& c) { c.nu = 0.0; });
  bad([](StudyConfig& c) { c.tol = 1e-3; });
  bad([](StudyConfig& c) { c.threads = 0; });
}

TEST(Study, JsonConfigOverridesBase) {
  StudyConfig base;
  base.seed = 5;
  const StudyConfig c = config_from_json(
      R"({"dim": 3, "order": 3, "levels": [1, 2], "nu": 0.01, "tol": 1e-12,
          "format": "markdown", "threads": 2, "perturbation": false,
          "method": "iterative", "timing": false})",
      base);
  EXPECT_EQ(c.dim, 3);
  EXPECT_EQ(c.order, 3);
  EXPECT_EQ(c.levels, (std::vector<int>{1, 2}));
  EXPECT_DOUBLE_EQ(c.nu, 0.01);
  EXPECT_DOUBLE_EQ(c.tol, 1e-12);
  EXPECT_EQ(c.format, TableFormat::Markdown);
  EXPECT_EQ(c.seed, 5u);
  EXPECT_EQ(c.threads, 2);
  EXPECT_FALSE(c.perturbation);
  EXPECT_EQ(c.method, SolverMethod::Iterative);
  EXPECT_FALSE(c.timing);
}

TEST(Study, JsonErrors) {
  EXPECT_THROW(config_from_json("{not json"), Error);
  EXPECT_THROW(config_from_json("[1, 2]"), Error);
  EXPECT_THROW(config_from_json(R"({"dim": "two"})"), Error);
  EXPECT_THROW(config_from_json(R"({"format": "xml"})"), Error);
  EXPECT_THROW(load_config("/nonexistent/config.json"), Error);
}

TEST(Study, FormatNames) {
  EXPECT_EQ(table_format_from_string("md"), TableFormat::Markdown);
  EXPECT_EQ(table_format_from_string(to_string(TableFormat::Csv)), TableFormat::Csv);
}

TEST(Checks, Default2DSuitePasses) {
  StudyConfig c;
  c.levels = {4};
  std::ostringstream out;
  const CheckReport r = run_checks(c, out);
  EXPECT_TRUE(r.passed()) << out.str();
  EXPECT_EQ(r.checks.size(), 7u);
  EXPECT_NE(out.str().find("all checks passed"), std::string::npos);
}

TEST(Checks, SeededNtContinuity3D) {
  StudyConfig c;
  c.dim = 3;
  c.levels = {1};
  c.seed = 42;
  c.perturbation = false;
  std::ostringstream out;
  const CheckReport r = run_checks(c, out);
  EXPECT_TRUE(r.passed()) << out.str();
  const auto it = std::find_if(r.checks.begin(), r.checks.end(),
                               [](const CheckResult& x) { return x.name == "nt_continuity"; });
  ASSERT_NE(it, r.checks.end());
  EXPECT_LE(it->value, 1e-12);
}
