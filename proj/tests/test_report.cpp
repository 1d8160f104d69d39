// SPDX-License-Identifier: Apache-2.0
#include <affinelab/report.hpp>

#include "common.hpp"

#include <gtest/gtest.h>

#include <cstdio>
#include <filesystem>
#include <set>

namespace affinelab {
namespace {

TEST(Sampling, SobolPointsFillTheBox) {
  const std::vector<Box> box = {{0.5, 2.0}, {-1.0, 1.0}, {-0.25, 0.25}};
  const auto pts = sobol_points(box, 64, 7);
  ASSERT_EQ(pts.size(), 64u);
  std::vector<double> mean(3, 0.0);
  for (const auto& p : pts) {
    ASSERT_EQ(p.size(), 3u);
    for (std::size_t k = 0; k < 3; ++k) {
      EXPECT_GE(p[k], box[k].lo);
      EXPECT_LT(p[k], box[k].hi);
      mean[k] += p[k] / 64.0;
    }
  }
  // a shifted Sobol set of 64 points integrates linear functions almost exactly
  for (std::size_t k = 0; k < 3; ++k) EXPECT_NEAR(mean[k], 0.5 * (box[k].lo + box[k].hi), 0.02 * (box[k].hi - box[k].lo));
}

TEST(Sampling, SeedSelectsTheShift) {
  const std::vector<Box> box(2, kDefaultBox);
  EXPECT_EQ(sobol_points(box, 10, 3), sobol_points(box, 10, 3));
  EXPECT_NE(sobol_points(box, 10, 3), sobol_points(box, 10, 4));
  EXPECT_THROW(sobol_points(box, 0, 1), Error);
}

TEST(Sampling, BoxComesFromDomainHints) {
  const auto spec = parse_immersion("n=2; domain u1 = [1, 3]; F = (u1, u2, u1^2 + u2^2)");
  const auto box = sample_box(spec);
  EXPECT_EQ(box[0].lo, 1.0);
  EXPECT_EQ(box[0].hi, 3.0);
  EXPECT_EQ(box[1].lo, kDefaultBox.lo);
  EXPECT_EQ(box[1].hi, kDefaultBox.hi);
}

TEST(Sampling, PointLists) {
  const auto pts = parse_points("0.1, 0.2; -1,3e-1 ;", 2);
  ASSERT_EQ(pts.size(), 2u);
  EXPECT_EQ(pts[1], (ChartPoint{-1.0, 0.3}));
  EXPECT_THROW(parse_points("0.1,0.2,0.3", 2), Error);
  EXPECT_THROW(parse_points("0.1,x", 2), Error);
  EXPECT_THROW(parse_points(" ; ", 2), Error);
}

RunConfig config(Command cmd, const std::string& text) {
  RunConfig cfg;
  cfg.command = cmd;
  cfg.spec_text = text;
  cfg.points = 6;
  return cfg;
}

TEST(Run, ExitCodes) {
  EXPECT_EQ(run(config(Command::check, testing::paraboloid(3))).exit, Exit::ok);
  EXPECT_EQ(run(config(Command::check, testing::kPerturbed)).exit, Exit::check_failed);
  EXPECT_EQ(run(config(Command::check, "n=2; F = (u1, u2, u1^2 - u2^2)")).exit, Exit::numerical_failure);
  EXPECT_EQ(run(config(Command::check, "n=2; F = (u1, u2)")).exit, Exit::input_error);
  auto cfg = config(Command::classify, testing::paraboloid(3));
  cfg.order = 3;
  EXPECT_EQ(run(cfg).exit, Exit::input_error);
  cfg = config(Command::classify, "");
  cfg.spec_path = "/nonexistent/surface.sdl";
  EXPECT_EQ(run(cfg).exit, Exit::input_error);
}

TEST(Run, CheckReportsEveryIdentity) {
  const auto res = run(config(Command::check, testing::lorentz_hypersurface(4)));
  ASSERT_EQ(res.exit, Exit::ok);
  EXPECT_FALSE(res.report.has_value());
  std::set<std::string> names;
  for (const auto& c : res.checks) {
    names.insert(c.name);
    EXPECT_TRUE(c.pass) << c.name << " " << c.value;
  }
  for (const char* k : {"apolarity", "gauss", "codazzi_S", "chi_identity", "bianchi", "metricity", "C_cross",
                        "semiparallel"})
    EXPECT_TRUE(names.count(k)) << k;
  for (const auto& r : res.records) {
    ASSERT_TRUE(r.rc_discrepancy.has_value());
    EXPECT_LT(*r.rc_discrepancy, 1e-7);
  }
}

TEST(Run, OrderFourSkipsCommutatorRoute) {
  auto cfg = config(Command::check, testing::paraboloid(3));
  cfg.order = 4;
  const auto res = run(cfg);
  ASSERT_EQ(res.exit, Exit::ok);
  EXPECT_FALSE(res.records[0].rc_commutator.has_value());
}

TEST(Run, ReportIsIndependentOfThreadCount) {
  auto cfg = config(Command::classify, testing::lorentz_hypersurface(3));
  cfg.points = 12;
  cfg.threads = 1;
  const std::string one = render(run(cfg));
  cfg.threads = 5;
  EXPECT_EQ(render(run(cfg)), one);
  cfg.format = Format::text;
  EXPECT_NE(render(run(cfg)).find("LorentzSphere_1_3"), std::string::npos);
}

TEST(Run, JsonSchema) {
  const auto j = to_json(run(config(Command::classify, testing::product_hypersurface(3))));
  for (const char* k : {"config", "per_point", "aggregate", "verdict", "versions"}) EXPECT_TRUE(j.contains(k)) << k;
  EXPECT_EQ(j["per_point"].size(), 6u);
  EXPECT_EQ(j["verdict"]["verdict"], "CalabiType_1_2");
  EXPECT_EQ(j["config"]["sample"]["seed"], 1);
  EXPECT_EQ(j["exit"], 0);
  // floats survive a text round trip
  const auto again = Json::parse(j.dump());
  EXPECT_EQ(again["per_point"][3]["H"].get<double>(), j["per_point"][3]["H"].get<double>());
}

TEST(Run, PartialReportOnError) {
  auto cfg = config(Command::check, "n=3; F = (u1, u2, u3, -log(u1) + u2^2 + u3^2)");
  cfg.point_list = "0.5,0,0; -0.5,0,0";
  const auto res = run(cfg);
  EXPECT_EQ(res.exit, Exit::numerical_failure);
  ASSERT_EQ(res.records.size(), 2u);
  EXPECT_FALSE(res.records[0].error.has_value() && res.records[1].error.has_value());
  const auto j = to_json(res);
  EXPECT_EQ(j["per_point"][1]["status"], "evaluation_error");
}

TEST(Run, FamilyEmitsAndClassifies) {
  const auto path = std::filesystem::temp_directory_path() / "affinelab_test_w3.sdl";
  RunConfig cfg;
  cfg.command = Command::family;
  FamilyParams p;
  p.id = FamilyId::W3;
  p.c = 0.5;
  cfg.family = p;
  cfg.emit_path = path.string();
  cfg.points = 8;
  ASSERT_EQ(run(cfg).exit, Exit::ok);
  RunConfig back;
  back.command = Command::classify;
  back.spec_path = path.string();
  back.points = 8;
  const auto res = run(back);
  std::filesystem::remove(path);
  ASSERT_TRUE(res.report.has_value());
  EXPECT_EQ(res.report->verdict, Verdict::WarpedFamily_3);
}

TEST(Run, ScanTabulatesVerdictsAndParameterErrors) {
  RunConfig cfg;
  cfg.command = Command::scan;
  FamilyParams p;
  p.id = FamilyId::W1;
  cfg.family = p;
  cfg.grid = ScanGrid{"c", 0.5, 0.0, 3};
  cfg.points = 4;
  const auto res = run(cfg);
  ASSERT_EQ(res.scan.size(), 3u);
  EXPECT_EQ(res.scan[0]["verdict"], "WarpedFamily_1");
  EXPECT_EQ(res.scan[1]["verdict"], "WarpedFamily_1");
  EXPECT_EQ(res.scan[2]["error"], "parameter_error");
  EXPECT_EQ(res.exit, Exit::ok);
}

}  // namespace
}  // namespace affinelab
