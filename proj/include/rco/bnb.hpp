#pragma once

// Depth-first branch-and-bound over integer boxes with warm-started dual
// active-set relaxations and pruning against the incumbent at every
// iteration.

#include "rco/active_set_solver.hpp"
#include "rco/instances.hpp"
#include "rco/oracles.hpp"

#include <chrono>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <memory>
#include <optional>
#include <utility>
#include <vector>

namespace rco {

inline constexpr double kIntegralityTol = 1e-6;

using IntVector = std::vector<long long>;

/// Objective and feasible set as seen by the branch-and-bound driver.
struct Problem {
  std::shared_ptr<const SpdFactor> factor;
  Vector c;
  IntVector lower;
  IntVector upper;
  const SeparationOracle* oracle = nullptr;

  [[nodiscard]] Eigen::Index dim() const { return c.size(); }
};

struct BranchRow {
  Vector a;
  double b = 0.0;
};

struct Node {
  IntVector lower;
  IntVector upper;
  /// Terminal active set of the parent, shared by both children and copied
  /// when a child is processed.
  std::shared_ptr<const ActiveSet> warm;
  double parent_bound = -std::numeric_limits<double>::infinity();
  std::size_t depth = 0;
  std::optional<BranchRow> pending_branch_row;
};

struct Incumbent {
  IntVector x;
  double value = std::numeric_limits<double>::infinity();
};

enum class SolveStatus { Optimal, Infeasible, TimeLimit };

inline const char* to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::Optimal: return "Optimal";
    case SolveStatus::Infeasible: return "Infeasible";
    case SolveStatus::TimeLimit: return "TimeLimit";
  }
  return "Unknown";
}

struct SolveStats {
  std::size_t nodes = 0;
  std::size_t ellas_iterations = 0;
  std::size_t pinv_recomputes = 0;
  std::size_t corrupted_deletes = 0;
  double wall_time = 0.0;
  SolveStatus status = SolveStatus::Infeasible;
  /// Global lower bound: the incumbent value when solved, else the minimum
  /// over open nodes.
  double bound = -std::numeric_limits<double>::infinity();
};

struct SolveResult {
  std::optional<Incumbent> incumbent;
  SolveStats stats;
};

struct SolveParams {
  double opt_tol = 1e-4;
  double time_limit = std::numeric_limits<double>::infinity();
  std::size_t node_limit = std::numeric_limits<std::size_t>::max();
  bool warm_start = true;
  IterationLimits limits;

  /// Instrumentation hooks; all optional.
  std::function<void(const Node&)> on_node_start;
  std::function<void(const Node&, const RelaxationResult&, const RelaxationState&)> on_node_done;
  IterationObserver on_iteration;
};

/// Variable maximising min(x_i - floor x_i, ceil x_i - x_i) among those with
/// fractionality above 1e-6 and a non-degenerate domain. Smallest index wins
/// ties.
inline std::optional<Eigen::Index> select_branching_variable(const Vector& x, const IntVector& lower,
                                                             const IntVector& upper) {
  std::optional<Eigen::Index> best;
  double best_frac = kIntegralityTol;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    if (lower[i] >= upper[i]) continue;
    const double frac = std::min(x(i) - std::floor(x(i)), std::ceil(x(i)) - x(i));
    if (frac > best_frac) {
      best_frac = frac;
      best = i;
    }
  }
  return best;
}

inline bool is_integral(const Vector& x) {
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    if (std::abs(x(i) - std::round(x(i))) > kIntegralityTol) return false;
  }
  return true;
}

/// Splits the domain of variable i at x_i. The down child gets x_i <= floor,
/// the up child x_i >= ceil; both inherit `terminal` and carry the new bound
/// as a row to activate before their first subproblem.
inline std::pair<Node, Node> branch(const Node& node, Eigen::Index i, double xi,
                                    std::shared_ptr<const ActiveSet> terminal, double bound) {
  const auto n = static_cast<Eigen::Index>(node.lower.size());
  const auto down_value = static_cast<long long>(std::floor(xi));
  const long long up_value = down_value + 1;
  Node down = node;
  Node up = node;
  down.upper[i] = down_value;
  up.lower[i] = up_value;
  down.warm = terminal;
  up.warm = std::move(terminal);
  down.parent_bound = up.parent_bound = bound;
  down.depth = up.depth = node.depth + 1;
  Vector e = Vector::Zero(n);
  e(i) = 1.0;
  down.pending_branch_row = BranchRow{e, static_cast<double>(down_value)};
  up.pending_branch_row = BranchRow{-e, -static_cast<double>(up_value)};
  return {std::move(down), std::move(up)};
}

inline Vector to_vector(const IntVector& v) {
  Vector out(static_cast<Eigen::Index>(v.size()));
  for (std::size_t i = 0; i < v.size(); ++i) out(static_cast<Eigen::Index>(i)) = static_cast<double>(v[i]);
  return out;
}

struct NodeOutcome {
  enum class Kind { Pruned, NewIncumbent, Branched } kind = Kind::Pruned;
  /// Integral point accepted by the oracle, if the node produced one.
  std::optional<Incumbent> candidate;
  std::vector<Node> children;
  double bound = -std::numeric_limits<double>::infinity();
  std::size_t iterations = 0;
  std::size_t pinv_recomputes = 0;
  std::size_t corrupted_deletes = 0;
};

namespace detail {

inline std::optional<Incumbent> verify_integral(const Problem& p, const BoxedOracle& oracle, const Vector& x) {
  if (!is_integral(x)) return std::nullopt;
  const Vector rounded = x.array().round().matrix();
  if (!check_membership(oracle, rounded)) return std::nullopt;
  Incumbent inc;
  inc.x.resize(static_cast<std::size_t>(rounded.size()));
  for (Eigen::Index i = 0; i < rounded.size(); ++i) inc.x[static_cast<std::size_t>(i)] = std::llround(rounded(i));
  inc.value = objective(*p.factor, p.c, rounded);
  return inc;
}

inline std::optional<Eigen::Index> first_free_variable(const Node& node) {
  for (std::size_t i = 0; i < node.lower.size(); ++i) {
    if (node.lower[i] < node.upper[i]) return static_cast<Eigen::Index>(i);
  }
  return std::nullopt;
}

}  // namespace detail

/// Solves the relaxation of one node and decides whether to prune it, record
/// an incumbent, or branch.
inline NodeOutcome process_node(const Node& node, const std::optional<Incumbent>& incumbent, const Problem& p,
                                const SolveParams& params) {
  NodeOutcome out;
  const Eigen::Index n = p.dim();
  for (Eigen::Index i = 0; i < n; ++i) {
    if (node.lower[i] > node.upper[i]) return out;
  }
  const Vector lo = to_vector(node.lower);
  const Vector hi = to_vector(node.upper);
  BoxedOracle oracle(lo, hi, *p.oracle);

  RelaxationState st;
  bool warm = false;
  if (params.warm_start && node.warm) {
    ActiveSet aset = *node.warm;
    if (!aset.has_dependent_row() || aset.drop_idle_dependent_row()) {
      if (node.pending_branch_row) aset.append_row(node.pending_branch_row->a, node.pending_branch_row->b, *p.factor);
      st = warm_state(p.factor, p.c, std::move(aset));
      warm = true;
    }
  }
  if (!warm) st = initialize(p.factor, p.c, lo, hi);
  st.best_dual_value = std::max(st.best_dual_value, node.parent_bound);

  std::optional<double> prune;
  if (incumbent) prune = incumbent->value;
  const RelaxationResult res = solve_relaxation(st, oracle, prune, params.limits, params.on_iteration);
  out.iterations = st.iter;
  out.pinv_recomputes = st.pinv_recomputes;
  out.corrupted_deletes = st.corrupted_deletes;
  if (params.on_node_done) params.on_node_done(node, res, st);

  if (std::holds_alternative<RelaxInfeasible>(res)) return out;
  if (const auto* bp = std::get_if<RelaxBoundPruned>(&res)) {
    out.bound = bp->bound;
    return out;
  }

  const auto branch_at = [&](Eigen::Index i, double xi, double bound) {
    auto terminal = std::make_shared<const ActiveSet>(st.aset);
    auto [down, up] = branch(node, i, xi, std::move(terminal), bound);
    out.kind = NodeOutcome::Kind::Branched;
    out.children.push_back(std::move(down));
    out.children.push_back(std::move(up));
  };

  if (const auto* opt = std::get_if<RelaxOptimal>(&res)) {
    out.bound = opt->value;
    if (auto inc = detail::verify_integral(p, oracle, opt->x)) {
      out.candidate = std::move(inc);
      out.kind = NodeOutcome::Kind::NewIncumbent;
      return out;
    }
    if (auto i = select_branching_variable(opt->x, node.lower, node.upper)) {
      branch_at(*i, opt->x(*i), opt->value);
      return out;
    }
    // Integral up to tolerance but rejected after rounding: split a free
    // variable instead.
    if (auto i = detail::first_free_variable(node)) {
      branch_at(*i, static_cast<double>(node.lower[*i]) + 0.5, opt->value);
    }
    return out;
  }

  // Stalled relaxation: the dual bound is still valid.
  const double bound = std::get<RelaxIterationLimit>(res).bound;
  out.bound = bound;
  if (st.last_x) {
    if (auto inc = detail::verify_integral(p, oracle, *st.last_x)) out.candidate = std::move(inc);
    if (auto i = select_branching_variable(*st.last_x, node.lower, node.upper)) {
      branch_at(*i, (*st.last_x)(*i), bound);
      return out;
    }
  }
  if (auto i = detail::first_free_variable(node)) {
    branch_at(*i, static_cast<double>(node.lower[*i]) + 0.5, bound);
    return out;
  }
  // Single point left.
  if (!out.candidate) {
    const Vector x = lo;
    out.candidate = detail::verify_integral(p, oracle, x);
  }
  if (out.candidate) out.kind = NodeOutcome::Kind::NewIncumbent;
  return out;
}

/// Depth-first branch-and-bound, down child first.
inline SolveResult solve(const Problem& p, const SolveParams& params = {}) {
  using Clock = std::chrono::steady_clock;
  const auto start = Clock::now();
  const auto elapsed = [&] { return std::chrono::duration<double>(Clock::now() - start).count(); };

  SolveParams local = params;
  if (std::isfinite(params.time_limit)) {
    local.limits.deadline = start + std::chrono::duration_cast<Clock::duration>(
                                        std::chrono::duration<double>(std::max(0.0, params.time_limit)));
  }
  local.limits.opt_tol = params.opt_tol;

  SolveResult result;
  auto& stats = result.stats;
  std::vector<Node> stack;
  Node root;
  root.lower = p.lower;
  root.upper = p.upper;
  stack.push_back(std::move(root));
  bool interrupted = false;
  double interrupted_bound = std::numeric_limits<double>::infinity();

  while (!stack.empty()) {
    if (elapsed() >= params.time_limit || stats.nodes >= params.node_limit) {
      interrupted = true;
      break;
    }
    Node node = std::move(stack.back());
    stack.pop_back();
    if (result.incumbent && node.parent_bound >= result.incumbent->value - params.opt_tol) continue;

    ++stats.nodes;
    if (params.on_node_start) params.on_node_start(node);
    NodeOutcome out = process_node(node, result.incumbent, p, local);
    stats.ellas_iterations += out.iterations;
    stats.pinv_recomputes += out.pinv_recomputes;
    stats.corrupted_deletes += out.corrupted_deletes;

    if (out.candidate && (!result.incumbent || out.candidate->value < result.incumbent->value)) {
      result.incumbent = std::move(out.candidate);
    }
    if (local.limits.deadline && Clock::now() >= *local.limits.deadline && out.kind == NodeOutcome::Kind::Branched) {
      interrupted = true;
      interrupted_bound = std::max(out.bound, node.parent_bound);
      for (auto& child : out.children) stack.push_back(std::move(child));
      break;
    }
    // Up child pushed first so the down child is explored first.
    for (auto it = out.children.rbegin(); it != out.children.rend(); ++it) stack.push_back(std::move(*it));
  }

  stats.wall_time = elapsed();
  if (!interrupted) {
    stats.status = result.incumbent ? SolveStatus::Optimal : SolveStatus::Infeasible;
    stats.bound = result.incumbent ? result.incumbent->value : std::numeric_limits<double>::infinity();
  } else {
    stats.status = SolveStatus::TimeLimit;
    double bound = result.incumbent ? result.incumbent->value : std::numeric_limits<double>::infinity();
    bound = std::min(bound, interrupted_bound);
    for (const auto& node : stack) bound = std::min(bound, node.parent_bound);
    stats.bound = bound;
  }
  return result;
}

/// Convenience overload building the factor and oracle from an instance.
inline SolveResult solve(const Instance& inst, const SolveParams& params = {}) {
  auto oracle = make_oracle(inst);
  Problem p;
  p.factor = std::make_shared<const SpdFactor>(spd_sqrt_inverse(inst.q));
  p.c = inst.c;
  p.lower = inst.lower;
  p.upper = inst.upper;
  p.oracle = oracle.get();
  return solve(p, params);
}

}  // namespace rco
