#pragma once

// Dual active-set method for the continuous relaxation
//
//   min c^T x + sqrt(x^T Q x)  s.t.  x in P,
//
// where P is only known through a separation oracle. Iterates stay feasible
// for the Lagrangian dual, so every iteration yields a valid lower bound.

#include "rco/linalg.hpp"
#include "rco/separation.hpp"
#include "rco/subproblem.hpp"

#include <chrono>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <memory>
#include <optional>
#include <stdexcept>
#include <variant>

namespace rco {

class EmptyReleaseSet : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

namespace solver_tol {
inline constexpr double kNonnegative = 1e-12;
inline constexpr double kEllipsoid = 1e-12;
inline constexpr double kZeroDual = 1e-10;
inline constexpr double kNormDecrease = 1e-12;
}  // namespace solver_tol

struct IterationLimits {
  std::size_t max_iterations = 200000;
  /// Minimum dual improvement that resets the stall counter.
  double tail_tol = 1e-9;
  /// Consecutive stalled iterations before giving up; 0 means 2(n+1).
  std::size_t stall_window = 0;
  /// Incremental pseudo-inverse updates allowed between full recomputes.
  std::size_t recompute_every = 500;
  /// Slack for pruning against the incumbent.
  double opt_tol = 1e-4;
  /// Active-row residual of a recovered primal point that forces a recompute.
  double active_residual_tol = 1e-6;
  /// Relative primal-dual gap accepted at optimal termination.
  double gap_tol = 1e-6;
  std::optional<std::chrono::steady_clock::time_point> deadline;
};

enum class StepKind { Primal, Dual, Recompute };

/// Snapshot taken at the end of every iteration.
struct IterationRecord {
  std::size_t iteration = 0;
  StepKind kind = StepKind::Primal;
  double dual_value = 0.0;
  double lambda_norm = 0.0;
  /// |lambda_new - lambda_old| produced by the step.
  double step = 0.0;
  Eigen::Index active_rows = 0;
  Eigen::Index dim = 0;
  double min_lambda = 0.0;
  double ellipsoid = 0.0;
};

using IterationObserver = std::function<void(const IterationRecord&)>;

/// State of one relaxation solve. Exclusively owned by a single solve.
struct RelaxationState {
  ActiveSet aset;
  std::shared_ptr<const SpdFactor> factor;
  Vector c;
  /// Q^{-1/2} c
  Vector s;
  double best_dual_value = -std::numeric_limits<double>::infinity();
  std::size_t iter = 0;
  std::size_t pinv_recomputes = 0;
  std::size_t updates_since_recompute = 0;
  std::size_t corrupted_deletes = 0;
  std::optional<Vector> last_x;

  [[nodiscard]] Eigen::Index dim() const { return c.size(); }

  [[nodiscard]] double ellipsoid_norm() const {
    return aset.dual_gradient(s, aset.lambda()).norm();
  }

  void recompute() {
    aset.recompute(*factor);
    ++pinv_recomputes;
    updates_since_recompute = 0;
  }
};

struct RelaxOptimal {
  Vector x;
  Vector lambda;
  double value = 0.0;
};

struct RelaxInfeasible {
  /// Nonnegative dual ray with -b^T ray > 0.
  Vector ray;
};

struct RelaxBoundPruned {
  double bound = 0.0;
};

struct RelaxIterationLimit {
  double bound = 0.0;
};

using RelaxationResult = std::variant<RelaxOptimal, RelaxInfeasible, RelaxBoundPruned, RelaxIterationLimit>;

inline double objective(const SpdFactor& f, const Vector& c, const Vector& x) {
  return c.dot(x) + std::sqrt(std::max(0.0, x.dot(f.q * x)));
}

/// Initial state from the box [l, u].
inline RelaxationState initialize(std::shared_ptr<const SpdFactor> factor, const Vector& c, const Vector& l,
                                  const Vector& u) {
  RelaxationState st;
  st.aset = ActiveSet::from_box(*factor, c, l, u);
  st.s = factor->q_inv_half * c;
  st.c = c;
  st.factor = std::move(factor);
  st.best_dual_value = st.aset.dual_value();
  return st;
}

/// Warm start from an inherited active set.
inline RelaxationState warm_state(std::shared_ptr<const SpdFactor> factor, const Vector& c, ActiveSet aset) {
  RelaxationState st;
  st.aset = std::move(aset);
  st.s = factor->q_inv_half * c;
  st.c = c;
  st.factor = std::move(factor);
  st.best_dual_value = st.aset.dual_value();
  return st;
}

/// Largest delta in [0, 1] with (1 - delta) prev + delta tilde ellipsoid
/// feasible. Root of |g0 + delta d|^2 = 1 by the quadratic formula.
inline double safeguard_delta(const RelaxationState& st, const Vector& lambda_prev, const Vector& lambda_tilde) {
  const Vector g0 = st.aset.dual_gradient(st.s, lambda_prev);
  const Vector d = st.aset.scaled_transpose_times(lambda_tilde - lambda_prev);
  if ((g0 + d).squaredNorm() <= 1.0 + solver_tol::kEllipsoid) return 1.0;
  const double qa = d.squaredNorm();
  const double qb = 2.0 * g0.dot(d);
  const double qc = std::min(0.0, g0.squaredNorm() - 1.0);
  if (qa <= 0.0) return 1.0;
  const double disc = std::sqrt(std::max(0.0, qb * qb - 4.0 * qa * qc));
  // Cancellation-free form of the positive root.
  const double delta = qb > 0.0 ? (-2.0 * qc) / (qb + disc) : (-qb + disc) / (2.0 * qa);
  return std::clamp(delta, 0.0, 1.0);
}

inline Vector feasibility_safeguard(const RelaxationState& st, const Vector& lambda_prev,
                                    const Vector& lambda_tilde) {
  const double delta = safeguard_delta(st, lambda_prev, lambda_tilde);
  if (delta == 1.0) return lambda_tilde;
  return lambda_prev + delta * (lambda_tilde - lambda_prev);
}

struct DualStepResult {
  bool infeasible = false;
  double alpha = 0.0;
  Eigen::Index released = -1;
  /// Ascent direction used for the step (the infeasibility ray when
  /// `infeasible`).
  Vector direction;
};

/// Moves lambda along the ascent direction as far as nonnegativity allows and
/// releases the blocking row (smallest index on ties).
inline DualStepResult dual_step(RelaxationState& st, const DualOutcome& outcome) {
  DualStepResult res;
  Vector& lambda = st.aset.lambda();
  Vector p;
  if (const auto* u = std::get_if<DualUnbounded>(&outcome)) {
    const double norm = u->direction.norm();
    p = norm > 0.0 ? Vector(u->direction / norm) : u->direction;
    if (p.size() == 0 || p.minCoeff() >= -solver_tol::kNonnegative) {
      res.infeasible = true;
      res.direction = p;
      return res;
    }
  } else if (const auto* o = std::get_if<DualOptimal>(&outcome)) {
    p = o->lambda_tilde - lambda;
  } else {
    throw std::logic_error("dual_step: no ascent direction for a zero right-hand side");
  }

  Eigen::Index j = -1;
  double ratio = std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < p.size(); ++i) {
    if (p(i) < -solver_tol::kNonnegative) {
      const double r = -lambda(i) / p(i);
      if (j < 0 || r < ratio) {
        j = i;
        ratio = r;
      }
    }
  }
  if (j < 0) throw EmptyReleaseSet("dual_step: no multiplier decreases along the direction");

  res.alpha = std::max(0.0, ratio);
  res.released = j;
  res.direction = p;
  lambda += res.alpha * p;
  lambda(j) = 0.0;
  lambda = lambda.cwiseMax(0.0);
  if (!st.aset.remove_row(j, *st.factor)) {
    ++st.corrupted_deletes;
    ++st.pinv_recomputes;
    st.updates_since_recompute = 0;
  } else {
    ++st.updates_since_recompute;
  }
  return res;
}

struct PrimalStepResult {
  enum class Kind { OptimalFound, CutAdded, NeedsRecompute, Failed } kind = Kind::Failed;
  Vector x;
  double violation = 0.0;
};

/// Recovers x from the current (dual feasible, subproblem optimal) lambda and
/// either certifies x in P or appends a violated cut with multiplier zero.
/// A zero right-hand side yields x = 0. With `allow_recompute`, a recovered x
/// that misses its own active rows asks for a pseudo-inverse rebuild.
inline PrimalStepResult primal_step(RelaxationState& st, const SeparationOracle& oracle,
                                    const IterationLimits& limits, bool allow_recompute) {
  PrimalStepResult res;
  const Vector& b = st.aset.rhs();
  if (b.norm() <= subproblem_tol::kZeroRhs) {
    res.x = Vector::Zero(st.dim());
  } else {
    try {
      res.x = recover_primal(st.aset, st.aset.lambda(), *st.factor, st.c);
    } catch (const DegenerateRecovery&) {
      res.kind = allow_recompute ? PrimalStepResult::Kind::NeedsRecompute : PrimalStepResult::Kind::Failed;
      return res;
    }
    const double resid = (st.aset.rows() * res.x - b).cwiseAbs().maxCoeff();
    if (allow_recompute && resid > limits.active_residual_tol) {
      res.kind = PrimalStepResult::Kind::NeedsRecompute;
      return res;
    }
  }
  st.last_x = res.x;

  SeparationResult sep = oracle.separate(res.x);
  if (is_feasible(sep)) {
    res.kind = PrimalStepResult::Kind::OptimalFound;
    return res;
  }
  auto& cut = std::get<Violated>(sep);
  res.violation = cut.a.dot(res.x) - cut.b;
  if (!(res.violation > kSeparationTol)) {
    throw std::logic_error("primal_step: oracle returned a cut that is not violated");
  }
  if (st.aset.has_dependent_row() && !st.aset.drop_idle_dependent_row()) {
    res.kind = PrimalStepResult::Kind::Failed;
    return res;
  }
  st.aset.append_row(cut.a, cut.b, *st.factor);
  ++st.updates_since_recompute;
  res.kind = PrimalStepResult::Kind::CutAdded;
  return res;
}

/// Runs the active-set loop until the relaxation is solved, proven
/// infeasible, pruned against `prune_bound`, or stalled.
inline RelaxationResult solve_relaxation(RelaxationState& st, const SeparationOracle& oracle,
                                         std::optional<double> prune_bound, const IterationLimits& limits,
                                         const IterationObserver& observer = {}) {
  const Eigen::Index n = st.dim();
  const std::size_t window = limits.stall_window ? limits.stall_window : static_cast<std::size_t>(2 * (n + 1));
  double prev_value = st.aset.dual_value();
  double prev_norm = st.aset.lambda().norm();
  st.best_dual_value = std::max(st.best_dual_value, prev_value);
  const auto pruned = [&] { return prune_bound && st.best_dual_value >= *prune_bound - limits.opt_tol; };
  if (pruned()) return RelaxBoundPruned{st.best_dual_value};

  std::size_t stall = 0;
  bool just_recomputed = false;

  const auto report = [&](StepKind kind, double step) {
    if (!observer) return;
    IterationRecord rec;
    rec.iteration = st.iter;
    rec.kind = kind;
    rec.dual_value = st.aset.dual_value();
    rec.lambda_norm = st.aset.lambda().norm();
    rec.step = step;
    rec.active_rows = st.aset.size();
    rec.dim = n;
    rec.min_lambda = st.aset.size() ? st.aset.lambda().minCoeff() : 0.0;
    rec.ellipsoid = st.ellipsoid_norm();
    observer(rec);
  };
  const auto recompute = [&] {
    st.recompute();
    just_recomputed = true;
    report(StepKind::Recompute, 0.0);
  };

  while (true) {
    if (st.iter >= limits.max_iterations) return RelaxIterationLimit{st.best_dual_value};
    if (limits.deadline && (st.iter & 63U) == 0 && std::chrono::steady_clock::now() >= *limits.deadline) {
      return RelaxIterationLimit{st.best_dual_value};
    }
    ++st.iter;
    if (st.updates_since_recompute >= limits.recompute_every) st.recompute();

    DualOutcome outcome;
    try {
      outcome = solve_dual_subproblem(st.aset, *st.factor, st.c);
    } catch (const DualInfeasibleDetected&) {
      if (just_recomputed) return RelaxIterationLimit{st.best_dual_value};
      recompute();
      continue;
    }

    const Vector lambda_old = st.aset.lambda();
    StepKind kind = StepKind::Dual;
    double step = 0.0;
    std::optional<PrimalStepResult> primal;

    if (std::holds_alternative<DualZero>(outcome)) {
      kind = StepKind::Primal;
      primal = primal_step(st, oracle, limits, !just_recomputed);
    } else if (auto* opt = std::get_if<DualOptimal>(&outcome)) {
      opt->lambda_tilde = feasibility_safeguard(st, lambda_old, opt->lambda_tilde);
      if (opt->lambda_tilde.size() == 0 || opt->lambda_tilde.minCoeff() >= -solver_tol::kNonnegative) {
        kind = StepKind::Primal;
        st.aset.lambda() = opt->lambda_tilde.cwiseMax(0.0);
        step = (st.aset.lambda() - lambda_old).norm();
        primal = primal_step(st, oracle, limits, !just_recomputed);
      } else {
        const DualStepResult ds = dual_step(st, outcome);
        step = ds.alpha * ds.direction.norm();
      }
    } else {
      const DualStepResult ds = dual_step(st, outcome);
      if (ds.infeasible) return RelaxInfeasible{ds.direction};
      step = ds.alpha * ds.direction.norm();
    }

    if (primal) {
      using K = PrimalStepResult::Kind;
      if (primal->kind == K::NeedsRecompute) {
        recompute();
        continue;
      }
      if (primal->kind == K::Failed) return RelaxIterationLimit{std::max(st.best_dual_value, st.aset.dual_value())};
      if (primal->kind == K::OptimalFound) {
        const double value = st.aset.dual_value();
        const double fx = objective(*st.factor, st.c, primal->x);
        if (std::abs(fx - value) > limits.gap_tol * (1.0 + std::abs(fx)) && !just_recomputed) {
          recompute();
          continue;
        }
        st.best_dual_value = std::max(st.best_dual_value, value);
        report(kind, step);
        return RelaxOptimal{primal->x, st.aset.lambda(), value};
      }
    }
    just_recomputed = false;

    const double value = st.aset.dual_value();
    const double norm = st.aset.lambda().norm();
    report(kind, step);
    st.best_dual_value = std::max(st.best_dual_value, value);
    if (pruned()) return RelaxBoundPruned{st.best_dual_value};

    const bool improved = value > prev_value + limits.tail_tol ||
                          (value >= prev_value - limits.tail_tol && norm < prev_norm - solver_tol::kNormDecrease);
    stall = improved ? 0 : stall + 1;
    prev_value = value;
    prev_norm = norm;
    if (stall >= window) return RelaxIterationLimit{st.best_dual_value};
  }
}

}  // namespace rco
