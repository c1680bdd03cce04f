#include "rco/bench.hpp"

#include <gtest/gtest.h>

#include <sstream>

using namespace rco;

namespace {

RunRecord run(const std::string& instance, const std::string& solver, double time, bool solved = true) {
  RunRecord r;
  r.instance = instance;
  r.solver = solver;
  r.family = "random";
  r.status = solved ? SolveStatus::Optimal : SolveStatus::TimeLimit;
  r.time_s = time;
  return r;
}

double rho(const Profile& p, const std::string& solver, double tau) {
  const auto s = std::find(p.solvers.begin(), p.solvers.end(), solver) - p.solvers.begin();
  for (const auto& pt : p.points) {
    if (pt.tau == tau) return pt.rho[static_cast<std::size_t>(s)];
  }
  return -1.0;
}

}  // namespace

TEST(Profile, TwoSolverFixture) {
  const std::vector<RunRecord> runs{run("p1", "A", 1), run("p2", "A", 2), run("p1", "B", 2), run("p2", "B", 1)};
  const auto p = performance_profile(runs, {1, 2});
  EXPECT_EQ(rho(p, "A", 1), 0.5);
  EXPECT_EQ(rho(p, "A", 2), 1.0);
  EXPECT_EQ(rho(p, "B", 1), 0.5);
  EXPECT_EQ(rho(p, "B", 2), 1.0);
}

TEST(Profile, SingleSolverIsSolvedFraction) {
  const std::vector<RunRecord> runs{run("p1", "A", 3), run("p2", "A", 5), run("p3", "A", 60, false),
                                    run("p4", "A", 0.5)};
  const auto p = performance_profile(runs, default_tau_grid());
  for (const auto& pt : p.points) EXPECT_EQ(pt.rho[0], 0.75);
}

TEST(Profile, TimeoutNeverCounted) {
  const std::vector<RunRecord> runs{run("p1", "A", 1), run("p2", "A", 1), run("p3", "A", 1), run("p4", "A", 9, false),
                                    run("p1", "B", 4), run("p2", "B", 4), run("p3", "B", 4), run("p4", "B", 4)};
  const auto p = performance_profile(runs, default_tau_grid());
  EXPECT_EQ(rho(p, "A", 1024), 0.75);
  EXPECT_EQ(rho(p, "B", 1), 0.25);
  EXPECT_EQ(rho(p, "B", 4), 1.0);
  double prev = 0.0;
  for (const auto& pt : p.points) {
    EXPECT_GE(pt.rho[1], prev);
    prev = pt.rho[1];
  }
}

TEST(Profile, DefaultGrid) {
  const auto g = default_tau_grid();
  ASSERT_EQ(g.size(), 11u);
  EXPECT_EQ(g.front(), 1.0);
  EXPECT_EQ(g.back(), 1024.0);
}

TEST(RunsCsv, RoundTrip) {
  RunRecord r = run("grid-sp-r3-s1", "ellas", 0.25);
  r.family = "grid-sp";
  r.n = 12;
  r.m = 30;
  r.value = 5.5;
  r.bound = 5.5;
  r.nodes = 9;
  r.iters = 45;
  std::stringstream ss;
  write_runs_csv(ss, {r, run("x", "ellas", 60, false)});
  const std::string text = ss.str();
  EXPECT_EQ(text.rfind(kCsvVersionLine, 0), 0u);
  EXPECT_NE(text.find(kCsvColumns), std::string::npos);
  EXPECT_NE(text.find("# summary"), std::string::npos);
  const auto back = read_runs_csv(ss);
  ASSERT_EQ(back.size(), 2u);
  EXPECT_EQ(back[0].instance, "grid-sp-r3-s1");
  EXPECT_EQ(back[0].solver, "ellas");
  EXPECT_EQ(back[0].value, 5.5);
  EXPECT_EQ(back[0].nodes, 9u);
  EXPECT_EQ(back[1].status, SolveStatus::TimeLimit);
  EXPECT_EQ(back[1].value, std::numeric_limits<double>::infinity());
}

TEST(RunsCsv, MissingColumnRejected) {
  std::stringstream ss("label,family,status\nx@a,random,Optimal\n");
  EXPECT_THROW(read_runs_csv(ss), CsvError);
  std::stringstream empty("# nothing\n");
  EXPECT_THROW(read_runs_csv(empty), CsvError);
}

TEST(RunsCsv, EmptyRunListIsHeaderOnly) {
  std::stringstream ss;
  write_runs_csv(ss, {});
  EXPECT_EQ(ss.str(), std::string(kCsvVersionLine) + "\n" + kCsvColumns + "\n");
  EXPECT_TRUE(read_runs_csv(ss).empty());
}

TEST(Manifest, ParseAndErrors) {
  std::stringstream ok("# suite\nsolvers ellas,ellas-cold\ngen grid-sp 3 1\ngen random 10 7 40\nfile a.inst\n");
  const auto m = parse_manifest(ok);
  ASSERT_EQ(m.entries.size(), 3u);
  EXPECT_EQ(m.solvers, (std::vector<std::string>{"ellas", "ellas-cold"}));
  EXPECT_EQ(m.entries[1].m, 40);
  EXPECT_EQ(m.entries[1].seed, 7u);
  EXPECT_EQ(m.entries[2].path, "a.inst");
  std::stringstream bad("gen grid-sp\n");
  EXPECT_THROW(parse_manifest(bad), std::runtime_error);
  std::stringstream unknown("solvers gurobi\n");
  EXPECT_THROW(parse_manifest(unknown), std::runtime_error);
}

TEST(Bench, ManifestOrderAndSummary) {
  std::stringstream text;
  for (int seed = 0; seed < 10; ++seed) text << "gen grid-sp 3 " << seed << "\ngen grid-sp 4 " << seed << "\n";
  const auto m = parse_manifest(text);
  BenchOptions opt;
  opt.threads = 4;
  const auto runs = run_bench(m, opt);
  ASSERT_EQ(runs.size(), 20u);
  for (int seed = 0; seed < 10; ++seed) {
    EXPECT_EQ(runs[2 * seed].instance, "grid-sp-r3-s" + std::to_string(seed));
    EXPECT_EQ(runs[2 * seed + 1].instance, "grid-sp-r4-s" + std::to_string(seed));
  }
  opt.threads = 1;
  const auto again = run_bench(m, opt);
  for (std::size_t i = 0; i < runs.size(); ++i) {
    EXPECT_EQ(runs[i].value, again[i].value);
    EXPECT_EQ(runs[i].bound, again[i].bound);
    EXPECT_EQ(runs[i].status, SolveStatus::Optimal);
    EXPECT_GE(runs[i].value, runs[i].bound - 1e-6);
    EXPECT_GE(runs[i].ps_pct, 0.0);
    EXPECT_LE(runs[i].ps_pct, 100.0);
  }
  std::stringstream csv;
  write_runs_csv(csv, runs);
  EXPECT_NO_THROW(performance_profile(read_runs_csv(csv), default_tau_grid()));
}
