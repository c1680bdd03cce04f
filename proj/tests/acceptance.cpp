// Acceptance run. Prints one PASS/FAIL line per criterion; criterion 7 is
// advisory and prints WARN instead of failing.

#include "enumerate.hpp"
#include "rco/bench.hpp"
#include "rco/bnb.hpp"

#include <algorithm>
#include <chrono>
#include <cstdarg>
#include <cmath>
#include <cstdio>
#include <sstream>
#include <string>
#include <vector>

using namespace rco;

namespace {

// Pinned tolerances.
constexpr double kValueTol = 1e-4;
constexpr double kGapRel = 1e-6;
constexpr double kLambdaFloor = -1e-12;
constexpr double kEllipsoidTol = 1e-9;
constexpr double kStepFloor = 1e-12;
constexpr double kStallTol = 1e-10;
constexpr double kPinvRel = 1e-7;
constexpr double kBoundRel = 1e-6;
constexpr double kRatioLimit = 25.0;

struct Outcome {
  int id = 0;
  std::string name;
  bool pass = false;
  bool advisory = false;
  std::string detail;
};

// Observes every relaxation of a solve and records invariant violations.
class Monitor {
 public:
  std::size_t relaxations = 0;
  std::size_t optimal_relaxations = 0;
  std::size_t iterations = 0;
  std::size_t duality_failures = 0;
  double worst_gap = 0.0;
  double worst_ellipsoid = 0.0;
  double worst_lambda = 0.0;
  std::size_t feasibility_failures = 0;
  std::size_t size_failures = 0;
  std::size_t optimal_size_failures = 0;
  std::size_t ascent_checked = 0;
  std::size_t ascent_failures = 0;
  std::size_t bound_checked = 0;
  std::size_t bound_failures = 0;
  double worst_bound_excess = -std::numeric_limits<double>::infinity();

  void attach(SolveParams& params, const Instance& inst, const SeparationOracle& oracle,
              const std::vector<reference::Candidate>* points) {
    inst_ = &inst;
    oracle_ = &oracle;
    points_ = points;
    factor_ = std::make_shared<const SpdFactor>(spd_sqrt_inverse(inst.q));
    params.on_node_start = [this](const Node& node) { start(node); };
    params.on_iteration = [this](const IterationRecord& r) { iteration(r); };
    params.on_node_done = [this](const Node& node, const RelaxationResult& res, const RelaxationState& st) {
      done(node, res, st);
    };
  }

 private:
  void start(const Node& node) {
    ++relaxations;
    lower_ = node.lower;
    upper_ = node.upper;
    if (node.warm) {
      prev_value_ = node.warm->dual_value();
      prev_norm_ = node.warm->lambda().norm();
    } else {
      const auto aset = ActiveSet::from_box(*factor_, inst_->c, to_vector(node.lower), to_vector(node.upper));
      prev_value_ = aset.dual_value();
      prev_norm_ = aset.lambda().norm();
    }
    node_optimum_.reset();
    if (points_) node_optimum_ = reference::best_in_box(*points_, lower_, upper_);
  }

  void iteration(const IterationRecord& r) {
    ++iterations;
    if (r.active_rows > r.dim + 1) ++size_failures;
    if (r.step > kStepFloor) {
      ++ascent_checked;
      const bool up = r.dual_value > prev_value_;
      const bool stall_down = std::abs(r.dual_value - prev_value_) <= kStallTol && r.lambda_norm < prev_norm_;
      if (!up && !stall_down) ++ascent_failures;
    }
    prev_value_ = r.dual_value;
    prev_norm_ = r.lambda_norm;
    if (points_ && node_optimum_) {
      ++bound_checked;
      const double excess = r.dual_value - *node_optimum_;
      worst_bound_excess = std::max(worst_bound_excess, excess);
      if (excess > kBoundRel * (1.0 + std::abs(*node_optimum_))) ++bound_failures;
    }
  }

  void done(const Node& node, const RelaxationResult& res, const RelaxationState& st) {
    const auto* opt = std::get_if<RelaxOptimal>(&res);
    if (!opt) return;
    ++optimal_relaxations;
    const double fx = objective(*factor_, inst_->c, opt->x);
    const double gap = std::abs(fx + st.aset.rhs().dot(opt->lambda));
    worst_gap = std::max(worst_gap, gap / (1.0 + std::abs(fx)));
    if (gap > kGapRel * (1.0 + std::abs(fx))) ++duality_failures;
    const BoxedOracle boxed(to_vector(node.lower), to_vector(node.upper), *oracle_);
    if (!check_membership(boxed, opt->x)) ++feasibility_failures;
    if (opt->lambda.size() > 0) {
      worst_lambda = std::min(worst_lambda, opt->lambda.minCoeff());
      if (opt->lambda.minCoeff() < kLambdaFloor) ++duality_failures;
    }
    const double ell = st.ellipsoid_norm();
    worst_ellipsoid = std::max(worst_ellipsoid, ell);
    if (ell > 1.0 + kEllipsoidTol) ++duality_failures;
    if (st.aset.size() > st.dim()) ++optimal_size_failures;
  }

  const Instance* inst_ = nullptr;
  const SeparationOracle* oracle_ = nullptr;
  const std::vector<reference::Candidate>* points_ = nullptr;
  std::shared_ptr<const SpdFactor> factor_;
  IntVector lower_, upper_;
  double prev_value_ = 0.0;
  double prev_norm_ = 0.0;
  std::optional<double> node_optimum_;
};

struct SolveCheck {
  std::size_t agree = 0;
  std::size_t total = 0;
  double worst = 0.0;
  std::size_t corrupted = 0;
  std::vector<std::string> mismatches;
};

void solve_and_compare(const Instance& inst, Monitor& monitor, SolveCheck& check, bool bound_checks) {
  const auto points = reference::feasible_points(inst);
  const auto best = reference::best_value(points);
  auto oracle = make_oracle(inst);
  SolveParams params;
  monitor.attach(params, inst, *oracle, bound_checks ? &points : nullptr);
  const auto r = solve(inst, params);
  ++check.total;
  check.corrupted += r.stats.corrupted_deletes;
  bool ok = false;
  if (!best) {
    ok = !r.incumbent && r.stats.status == SolveStatus::Infeasible;
  } else if (r.incumbent) {
    const double diff = std::abs(r.incumbent->value - *best);
    check.worst = std::max(check.worst, diff);
    ok = diff <= kValueTol && r.stats.status == SolveStatus::Optimal;
  }
  if (ok) {
    ++check.agree;
  } else {
    check.mismatches.push_back(inst.label);
  }
}

std::string fmt(const char* f, ...) __attribute__((format(printf, 1, 2)));
std::string fmt(const char* f, ...) {
  char buf[512];
  va_list args;
  va_start(args, f);
  std::vsnprintf(buf, sizeof buf, f, args);
  va_end(args);
  return buf;
}

double spectral_norm(const Matrix& m) {
  if (m.size() == 0) return 0.0;
  return Eigen::JacobiSVD<Matrix>(m).singularValues()(0);
}

Outcome pinv_sequences() {
  Rng rng(20240601);
  double worst = 0.0;
  std::size_t failures = 0, ops = 0, dependent = 0;
  for (int seq = 0; seq < 1000; ++seq) {
    const auto n = static_cast<Eigen::Index>(rng.uniform_int(1, 40));
    const Eigen::Index cap = std::min<Eigen::Index>(30, n);
    PseudoInverse p = pinv_full(Matrix(0, n));
    const int length = static_cast<int>(rng.uniform_int(10, 80));
    for (int op = 0; op < length; ++op) {
      const bool add = p.rows() == 0 || (p.rows() < cap && rng.uniform01() < 0.55);
      if (add) {
        Vector a(n);
        if (p.rows() > 0 && rng.uniform01() < 0.1) {
          // Combination of existing rows: must be reported dependent.
          a = p.of.transpose() * Vector::NullaryExpr(p.rows(), [&] { return rng.uniform(-1, 1); });
        } else {
          for (Eigen::Index i = 0; i < n; ++i) a(i) = rng.uniform(-1, 1);
        }
        auto r = pinv_append_row(p, a);
        if (auto* full = std::get_if<PseudoInverse>(&r)) {
          p = std::move(*full);
        } else {
          ++dependent;
        }
      } else {
        p = pinv_delete_row(p, static_cast<Eigen::Index>(rng.uniform_int(0, p.rows() - 1)));
      }
      ++ops;
      const double res = moore_penrose_residual(p);
      const double scale = 1.0 + spectral_norm(p.of);
      worst = std::max(worst, res / scale);
      if (res > kPinvRel * scale) ++failures;
    }
  }
  Outcome o;
  o.pass = failures == 0;
  o.detail = fmt("%zu ops, %zu dependent rows rejected, worst residual/(1+|M|) %.2e (limit %.0e)", ops, dependent,
                 worst, kPinvRel);
  return o;
}

}  // namespace

int main() {
  const auto t0 = std::chrono::steady_clock::now();
  std::vector<Outcome> outcomes;
  Monitor monitor;

  // 1: random binary instances against enumeration, also feeding 3, 4, 5, 9.
  SolveCheck c1;
  const int ns[] = {8, 10, 12};
  const int ms[] = {20, 50};
  for (int i = 0; i < 50; ++i) {
    const Instance inst = gen_random_binary(ns[i % 3], ms[(i / 3) % 2], 1000 + static_cast<std::uint64_t>(i));
    solve_and_compare(inst, monitor, c1, true);
  }
  const std::size_t c9_checked = monitor.bound_checked;
  const std::size_t c9_failures = monitor.bound_failures;
  const double c9_worst = monitor.worst_bound_excess;
  const double c1_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  {
    Outcome o{1, "integer optimum equals enumeration (random binary)"};
    o.pass = c1.agree == c1.total && c1.total == 50;
    o.detail = fmt("%zu/%zu agree, worst |diff| %.2e (tol %.0e), %.1f s", c1.agree, c1.total, c1.worst, kValueTol,
                   c1_time);
    for (const auto& m : c1.mismatches) o.detail += " mismatch:" + m;
    outcomes.push_back(o);
  }

  // 2: combinatorial families against structure enumeration.
  SolveCheck c2;
  struct FamilySpec {
    const char* family;
    std::vector<int> sizes;
  };
  const std::vector<FamilySpec> families{
      {"grid-sp", {3, 4, 5}}, {"assignment", {6, 8}}, {"mst", {5, 6, 7}}, {"tsp", {6, 7, 8}}};
  std::string counts;
  bool counts_ok = true;
  for (const auto& fam : families) {
    for (int size : fam.sizes) {
      for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const Instance inst = generate(fam.family, size, 0, 2000 + seed);
        if (seed == 0) {
          const auto& g = std::get<GraphModel>(inst.feasible_set);
          const std::size_t found = reference::graph_points(inst).size();
          std::size_t expected = 0;
          switch (g.kind) {
            case GraphKind::GridSP: {
              double b = 1;
              for (int k = 1; k <= size - 1; ++k) b = b * (size - 1 + k) / k;
              expected = static_cast<std::size_t>(std::llround(b));
              break;
            }
            case GraphKind::Assignment: {
              expected = 1;
              for (int k = 2; k <= size / 2; ++k) expected *= static_cast<std::size_t>(k);
              break;
            }
            case GraphKind::MstComplete:
            case GraphKind::MstGrid:
              expected = static_cast<std::size_t>(std::llround(std::pow(size, size - 2)));
              break;
            case GraphKind::Tsp: {
              expected = 1;
              for (int k = 2; k <= size - 1; ++k) expected *= static_cast<std::size_t>(k);
              expected /= 2;
              break;
            }
          }
          counts_ok = counts_ok && found == expected;
          counts += fmt(" %s-%d:%zu", fam.family, size, found);
        }
        solve_and_compare(inst, monitor, c2, false);
      }
    }
  }
  {
    Outcome o{2, "combinatorial optima equal enumeration"};
    o.pass = c2.agree == c2.total && counts_ok;
    o.detail = fmt("%zu/%zu agree, worst |diff| %.2e (tol %.0e); structures", c2.agree, c2.total, c2.worst,
                   kValueTol) +
               counts + (counts_ok ? "" : " (COUNT MISMATCH)");
    for (const auto& m : c2.mismatches) o.detail += " mismatch:" + m;
    outcomes.push_back(o);
  }

  {
    Outcome o{3, "strong duality and feasibility at optimal relaxations"};
    o.pass = monitor.duality_failures == 0 && monitor.feasibility_failures == 0 && monitor.optimal_relaxations > 0;
    o.detail = fmt("%zu optimal of %zu relaxations; worst rel gap %.2e (tol %.0e), min lambda %.2e (floor %.0e), "
                   "worst ellipsoid %.12f (tol 1+%.0e), %zu infeasible x",
                   monitor.optimal_relaxations, monitor.relaxations, monitor.worst_gap, kGapRel, monitor.worst_lambda,
                   kLambdaFloor, monitor.worst_ellipsoid, kEllipsoidTol, monitor.feasibility_failures);
    if (monitor.relaxations < 10000) o.detail += " (fewer than 1e4 relaxations)";
    o.pass = o.pass && monitor.relaxations >= 10000;
    outcomes.push_back(o);
  }
  {
    Outcome o{4, "active set size bounded by n+1 (n at optimum)"};
    o.pass = monitor.size_failures == 0 && monitor.optimal_size_failures == 0;
    o.detail = fmt("%zu iterations, %zu above n+1, %zu optimal terminations above n", monitor.iterations,
                   monitor.size_failures, monitor.optimal_size_failures);
    outcomes.push_back(o);
  }
  {
    Outcome o{5, "lexicographic dual ascent"};
    o.pass = monitor.ascent_failures == 0 && monitor.ascent_checked > 0;
    o.detail = fmt("%zu steps with |step| > %.0e, %zu without ascent (stall tol %.0e)", monitor.ascent_checked,
                   kStepFloor, monitor.ascent_failures, kStallTol);
    outcomes.push_back(o);
  }
  {
    Outcome o = pinv_sequences();
    o.id = 6;
    o.name = "pseudo-inverse updates stay Moore-Penrose";
    o.pass = o.pass && c2.corrupted == 0 && c1.corrupted == 0;
    o.detail += fmt("; corrupted deletes in solves: %zu", c1.corrupted + c2.corrupted);
    outcomes.push_back(o);
  }

  // 7: iterations per node on n=25, m=1000.
  {
    std::size_t nodes = 0, iters = 0, solved = 0;
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
      SolveParams p;
      p.time_limit = 120.0;
      const auto r = solve(gen_random_binary(25, 1000, 3000 + seed), p);
      nodes += r.stats.nodes;
      iters += r.stats.ellas_iterations;
      solved += r.stats.status == SolveStatus::Optimal ? 1 : 0;
    }
    const double ratio = nodes ? static_cast<double>(iters) / static_cast<double>(nodes) : 0.0;
    Outcome o{7, "warm-start iterations per node (n=25, m=1000)"};
    o.advisory = true;
    o.pass = ratio <= kRatioLimit && solved == 10;
    o.detail = fmt("%zu/10 solved, %zu nodes, %zu iterations, ratio %.2f (limit %.0f, published ~6.4)", solved, nodes,
                   iters, ratio, kRatioLimit);
    outcomes.push_back(o);
  }

  // 8: profile of the two-solver fixture through the CSV path.
  {
    std::vector<RunRecord> runs;
    const auto add = [&](const char* inst, const char* solver, double t) {
      RunRecord r;
      r.instance = inst;
      r.solver = solver;
      r.family = "fixture";
      r.status = SolveStatus::Optimal;
      r.time_s = t;
      runs.push_back(r);
    };
    add("p1", "s1", 1);
    add("p2", "s1", 2);
    add("p1", "s2", 2);
    add("p2", "s2", 1);
    std::stringstream csv;
    write_runs_csv(csv, runs);
    const Profile prof = performance_profile(read_runs_csv(csv), {1, 2});
    bool ok = prof.solvers.size() == 2 && prof.points.size() == 2;
    for (std::size_t s = 0; ok && s < 2; ++s) {
      ok = prof.points[0].rho[s] == 0.5 && prof.points[1].rho[s] == 1.0;
    }
    Outcome o{8, "performance profile fixture"};
    o.pass = ok;
    o.detail = ok ? "rho(1)=0.5 and rho(2)=1 for both solvers (exact)" : "unexpected rho values";
    outcomes.push_back(o);
  }

  {
    Outcome o{9, "intermediate dual values bounded by node optimum"};
    o.pass = c9_failures == 0 && c9_checked > 0;
    o.detail = fmt("%zu dual values checked, %zu above the enumerated node optimum, worst excess %.2e (tol %.0e "
                   "relative)",
                   c9_checked, c9_failures, c9_worst, kBoundRel);
    outcomes.push_back(o);
  }

  std::sort(outcomes.begin(), outcomes.end(), [](const Outcome& a, const Outcome& b) { return a.id < b.id; });
  int failures = 0;
  for (const auto& o : outcomes) {
    const char* tag = o.pass ? "PASS" : (o.advisory ? "WARN" : "FAIL");
    if (!o.pass && !o.advisory) ++failures;
    std::printf("[%s] criterion %d: %s -- %s\n", tag, o.id, o.name.c_str(), o.detail.c_str());
  }
  const double total = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  std::printf("%d hard failure(s), %.1f s\n", failures, total);
  return failures == 0 ? 0 : 1;
}
