// rco: generate, solve and benchmark robust combinatorial instances.
//
// Exit codes: 0 optimal / success, 1 usage or input error, 2 infeasible,
// 3 time limit, 4 verification mismatch.

#include "rco/bench.hpp"
#include "rco/bnb.hpp"
#include "rco/instances.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

namespace fs = std::filesystem;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitError = 1;
constexpr int kExitInfeasible = 2;
constexpr int kExitTimeLimit = 3;
constexpr int kExitMismatch = 4;
constexpr int kVerifyMaxDim = 20;

fs::path output_dir() {
  if (const char* env = std::getenv("RCO_OUTPUT_DIR"); env && *env) return env;
  return fs::current_path();
}

// Output paths without a directory part land in RCO_OUTPUT_DIR.
fs::path resolve_output(const std::string& name) {
  fs::path p(name);
  if (p.has_parent_path() || p.is_absolute()) return p;
  return output_dir() / p;
}

int exit_code(rco::SolveStatus s) {
  switch (s) {
    case rco::SolveStatus::Optimal: return kExitOk;
    case rco::SolveStatus::Infeasible: return kExitInfeasible;
    case rco::SolveStatus::TimeLimit: return kExitTimeLimit;
  }
  return kExitError;
}

// Minimum over all integer points of the box accepted by the oracle.
std::optional<double> enumerate_optimum(const rco::Instance& inst) {
  const int n = inst.n();
  const auto oracle = rco::make_oracle(inst);
  const rco::SpdFactor f = rco::spd_sqrt_inverse(inst.q);
  rco::Vector x(n);
  for (int i = 0; i < n; ++i) x(i) = static_cast<double>(inst.lower[i]);
  std::optional<double> best;
  while (true) {
    if (rco::check_membership(*oracle, x)) {
      const double v = rco::objective(f, inst.c, x);
      if (!best || v < *best) best = v;
    }
    int i = 0;
    while (i < n && x(i) >= static_cast<double>(inst.upper[i])) {
      x(i) = static_cast<double>(inst.lower[i]);
      ++i;
    }
    if (i == n) break;
    x(i) += 1.0;
  }
  return best;
}

double box_points(const rco::Instance& inst) {
  double count = 1.0;
  for (int i = 0; i < inst.n(); ++i) count *= static_cast<double>(inst.upper[i] - inst.lower[i] + 1);
  return count;
}

int cmd_gen(const std::string& family, int size, int m, std::uint64_t seed, const std::string& out) {
  const rco::Instance inst = rco::generate(family, size, m, seed);
  const fs::path path = resolve_output(out.empty() ? inst.label + ".inst" : out);
  rco::write_instance(path.string(), inst);
  std::cout << inst.label << " n=" << inst.n() << " m=" << rco::detail::csv_real(inst.m()) << " -> "
            << path.string() << '\n';
  return kExitOk;
}

int cmd_solve(const std::string& in, double tol, double time_limit, bool verify, bool cold) {
  const rco::Instance inst = rco::read_instance(in);
  rco::SolveParams params;
  params.opt_tol = tol;
  params.time_limit = time_limit;
  params.warm_start = !cold;
  const rco::SolveResult res = rco::solve(inst, params);
  const rco::RunRecord rec = rco::make_record(inst, cold ? "ellas-cold" : "ellas", res);

  std::cout << rco::kCsvVersionLine << '\n' << rco::kCsvColumns << '\n' << rco::to_csv_line(rec) << '\n';
  std::cout << "# status " << rco::to_string(rec.status) << ", value " << rco::detail::csv_real(rec.value)
            << ", bound " << rco::detail::csv_real(rec.bound) << ", " << rec.nodes << " nodes, " << rec.iters
            << " iterations, " << rec.time_s << " s\n";
  if (res.incumbent) {
    std::cout << "# x";
    for (long long v : res.incumbent->x) std::cout << ' ' << v;
    std::cout << '\n';
  }

  if (verify) {
    if (inst.n() > kVerifyMaxDim || box_points(inst) > std::ldexp(1.0, kVerifyMaxDim)) {
      std::cerr << "verify: skipped, box too large for enumeration\n";
    } else if (rec.status != rco::SolveStatus::TimeLimit) {
      const auto ref = enumerate_optimum(inst);
      const bool agree = ref ? (res.incumbent && std::abs(*ref - res.incumbent->value) <= tol) : !res.incumbent;
      std::cout << "# verify: enumeration " << (ref ? rco::detail::csv_real(*ref) : std::string("infeasible"))
                << (agree ? " (match)" : " (MISMATCH)") << '\n';
      if (!agree) return kExitMismatch;
    }
  }
  return exit_code(rec.status);
}

int cmd_bench(const std::string& manifest_path, const std::string& out, const rco::BenchOptions& opt) {
  std::ifstream in(manifest_path);
  if (!in) throw std::runtime_error("cannot open manifest '" + manifest_path + "'");
  const rco::Manifest manifest = rco::parse_manifest(in);
  const auto runs = rco::run_bench(manifest, opt);
  if (out.empty()) {
    rco::write_runs_csv(std::cout, runs);
    return kExitOk;
  }
  const fs::path path = resolve_output(out);
  std::ofstream file(path);
  if (!file) throw std::runtime_error("cannot write '" + path.string() + "'");
  rco::write_runs_csv(file, runs);
  std::cerr << runs.size() << " runs -> " << path.string() << '\n';
  return kExitOk;
}

int cmd_profile(const std::string& runs_path, const std::string& out, std::vector<double> taus) {
  std::ifstream in(runs_path);
  if (!in) throw std::runtime_error("cannot open runs file '" + runs_path + "'");
  if (taus.empty()) taus = rco::default_tau_grid();
  for (double t : taus) {
    if (!(t >= 1.0)) throw std::runtime_error("tau values must be >= 1");
  }
  const auto prof = rco::performance_profile(rco::read_runs_csv(in), taus);
  if (out.empty()) {
    rco::write_profile_csv(std::cout, prof);
    return kExitOk;
  }
  const fs::path path = resolve_output(out);
  std::ofstream file(path);
  if (!file) throw std::runtime_error("cannot write '" + path.string() + "'");
  rco::write_profile_csv(file, prof);
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Branch-and-bound for integer programs with ellipsoidal uncertainty"};
  app.require_subcommand(1);

  double tol = 1e-4;
  std::uint64_t seed = 0;

  auto* gen = app.add_subcommand("gen", "Generate an instance file");
  std::string family;
  int size = 0;
  int rows = 1000;
  std::string gen_out;
  gen->add_option("family", family, "random | grid-sp | assignment | mst | mst-grid | tsp")->required();
  gen->add_option("size", size, "n for random, r for grids, |V| otherwise")->required();
  gen->add_option("-m,--rows", rows, "Number of rows (random family)");
  gen->add_option("--seed", seed, "Generator seed");
  gen->add_option("-o,--out", gen_out, "Output file (default <label>.inst in $RCO_OUTPUT_DIR)");

  auto* solve = app.add_subcommand("solve", "Solve an instance file");
  std::string solve_in;
  double solve_limit = std::numeric_limits<double>::infinity();
  bool verify = false;
  bool cold = false;
  solve->add_option("instance", solve_in, "Instance file")->required();
  solve->add_option("--tol", tol, "Absolute optimality tolerance")->capture_default_str();
  solve->add_option("--time-limit", solve_limit, "Seconds (default: none)");
  solve->add_flag("--verify", verify, "Cross-check against enumeration (n <= 20)");
  solve->add_flag("--cold", cold, "Disable warm starts");

  auto* bench = app.add_subcommand("bench", "Run a benchmark manifest");
  std::string manifest;
  std::string bench_out;
  rco::BenchOptions bopt;
  bench->add_option("manifest", manifest, "Manifest file")->required();
  bench->add_option("-o,--out", bench_out, "Output CSV (default stdout)");
  bench->add_option("--tol", bopt.opt_tol, "Absolute optimality tolerance")->capture_default_str();
  bench->add_option("--time-limit", bopt.time_limit, "Seconds per run")->capture_default_str();
  bench->add_option("--threads", bopt.threads, "Parallel solves")->capture_default_str();

  auto* profile = app.add_subcommand("profile", "Performance profile from a runs CSV");
  std::string runs;
  std::string profile_out;
  std::vector<double> taus;
  profile->add_option("runs", runs, "Runs CSV from bench")->required();
  profile->add_option("-o,--out", profile_out, "Output CSV (default stdout)");
  profile->add_option("--tau", taus, "Tau grid (default 1,2,4,...,1024)")->delimiter(',');

  CLI11_PARSE(app, argc, argv);

  try {
    if (*gen) return cmd_gen(family, size, rows, seed, gen_out);
    if (*solve) return cmd_solve(solve_in, tol, solve_limit, verify, cold);
    if (*bench) return cmd_bench(manifest, bench_out, bopt);
    if (*profile) return cmd_profile(runs, profile_out, taus);
  } catch (const rco::ParseError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitError;
  }
  return kExitError;
}
