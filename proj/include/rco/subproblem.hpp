#pragma once

// Closed-form solution of the equality-constrained subproblem pair
//
//   min  c^T x + |Q^{1/2} x|   s.t.  A x = b
//   max  -b^T lambda           s.t.  |Q^{-1/2}(c + A^T lambda)| <= 1
//
// where A holds the rows of the current active set. Everything is expressed
// through M = A Q^{-1/2} and its pseudo-inverse.

#include "rco/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <stdexcept>
#include <utility>
#include <variant>

namespace rco {

class DualInfeasibleDetected : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DegenerateRecovery : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace subproblem_tol {
inline constexpr double kKernel = 1e-8;
inline constexpr double kZeroRhs = 1e-12;
inline constexpr double kInfeasibleDistance = 1e-6;
inline constexpr double kCaseA = 1e-10;
inline constexpr double kDenominator = 1e-12;
inline constexpr double kCaseB = 1e-6;
}  // namespace subproblem_tol

/// Rows currently treated as equalities, their multipliers and the
/// pseudo-inverse of the scaled rows A Q^{-1/2}.
///
/// The scaled rows always split into a block of full row rank, whose
/// pseudo-inverse is kept in `aqih`, and at most one trailing row that is a
/// linear combination h * block of the others. The trailing row makes the dual
/// subproblem unbounded along (-h | 1) and is resolved by the next dual step.
class ActiveSet {
 public:
  ActiveSet() = default;

  /// Empty active set in dimension n.
  explicit ActiveSet(Eigen::Index n)
      : rows_(0, n), rhs_(0), lambda_(0) {
    aqih_.of.resize(0, n);
    aqih_.pinv.resize(n, 0);
    aqih_.full_row_rank = true;
  }

  /// Builds the set row by row with incremental pseudo-inverse updates. At
  /// most one row may be linearly dependent on the preceding ones, and it must
  /// be the last.
  static ActiveSet from_rows(const Matrix& rows, const Vector& rhs, const Vector& lambda,
                             const SpdFactor& f) {
    if (rows.rows() != rhs.size() || rows.rows() != lambda.size() || rows.cols() != f.dim()) {
      throw DimensionMismatch("ActiveSet::from_rows: inconsistent sizes");
    }
    ActiveSet s(rows.cols());
    for (Eigen::Index i = 0; i < rows.rows(); ++i) {
      if (s.has_dependent_row()) {
        throw std::invalid_argument("ActiveSet::from_rows: only the last row may be dependent");
      }
      s.append_row(rows.row(i).transpose(), rhs(i), f);
      s.lambda_(i) = lambda(i);
    }
    return s;
  }

  /// Initial set for the box [l, u]: x_i <= u_i with multiplier -c_i when
  /// c_i < 0, else -x_i <= -l_i with multiplier c_i. Then A^T lambda = -c and,
  /// A being a signed identity, (A Q^{-1/2})^+ = Q^{1/2} A.
  static ActiveSet from_box(const SpdFactor& f, const Vector& c, const Vector& l, const Vector& u) {
    const Eigen::Index n = f.dim();
    if (c.size() != n || l.size() != n || u.size() != n) {
      throw DimensionMismatch("ActiveSet::from_box: size mismatch");
    }
    if (!l.allFinite() || !u.allFinite()) throw std::invalid_argument("ActiveSet::from_box: unbounded box");
    if ((l.array() > u.array()).any()) throw std::invalid_argument("ActiveSet::from_box: empty box");
    ActiveSet s(n);
    s.rows_ = Matrix::Zero(n, n);
    s.rhs_.resize(n);
    s.lambda_.resize(n);
    Vector sign(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      if (c(i) < 0.0) {
        sign(i) = 1.0;
        s.rhs_(i) = u(i);
        s.lambda_(i) = -c(i);
      } else {
        sign(i) = -1.0;
        s.rhs_(i) = -l(i);
        s.lambda_(i) = c(i);
      }
      s.rows_(i, i) = sign(i);
    }
    s.aqih_.of = sign.asDiagonal() * f.q_inv_half;
    s.aqih_.pinv = f.q_half * sign.asDiagonal();
    s.aqih_.full_row_rank = true;
    return s;
  }

  [[nodiscard]] Eigen::Index size() const { return rows_.rows(); }
  [[nodiscard]] Eigen::Index dim() const { return rows_.cols(); }
  [[nodiscard]] bool has_dependent_row() const { return dependent_.has_value(); }
  [[nodiscard]] Eigen::Index independent_rows() const { return aqih_.rows(); }

  [[nodiscard]] const Matrix& rows() const { return rows_; }
  [[nodiscard]] const Vector& rhs() const { return rhs_; }
  [[nodiscard]] const Vector& lambda() const { return lambda_; }
  [[nodiscard]] Vector& lambda() { return lambda_; }
  [[nodiscard]] const PseudoInverse& aqih() const { return aqih_; }

  /// Coefficients h of the dependent trailing row, if there is one.
  [[nodiscard]] const Vector* dependent_h() const { return dependent_ ? &dependent_->h : nullptr; }

  /// All scaled rows A Q^{-1/2}, including a dependent trailing row.
  [[nodiscard]] Matrix scaled_rows() const {
    if (!dependent_) return aqih_.of;
    Matrix m(size(), dim());
    m.topRows(aqih_.rows()) = aqih_.of;
    m.row(size() - 1) = dependent_->scaled.transpose();
    return m;
  }

  /// (A Q^{-1/2})^T y over all rows.
  [[nodiscard]] Vector scaled_transpose_times(const Vector& y) const {
    Vector out = aqih_.of.transpose() * y.head(aqih_.rows());
    if (dependent_) out += dependent_->scaled * y(size() - 1);
    return out;
  }

  /// Q^{-1/2}(c + A^T y) given s = Q^{-1/2} c.
  [[nodiscard]] Vector dual_gradient(const Vector& s, const Vector& y) const {
    return s + scaled_transpose_times(y);
  }

  [[nodiscard]] double dual_value() const { return -rhs_.dot(lambda_); }

  /// Appends a ≤-row with multiplier zero.
  void append_row(const Vector& a, double b, const SpdFactor& f) {
    if (a.size() != dim()) throw DimensionMismatch("ActiveSet::append_row: row length mismatch");
    if (dependent_) throw std::logic_error("ActiveSet::append_row: a dependent row is pending");
    const Vector scaled = f.q_inv_half * a;
    auto res = pinv_append_row(aqih_, scaled);
    if (auto* p = std::get_if<PseudoInverse>(&res)) {
      aqih_ = std::move(*p);
    } else {
      dependent_ = Dependent{scaled, std::move(std::get<RankDeficient>(res).h)};
    }
    push_row(a, b);
  }

  /// Removes row j together with its multiplier. Returns false when the
  /// incremental update hit a vanishing column and the pseudo-inverse had to
  /// be rebuilt from scratch.
  bool remove_row(Eigen::Index j, const SpdFactor& f) {
    if (j < 0 || j >= size()) throw std::out_of_range("ActiveSet::remove_row: index out of range");
    if (dependent_ && j == size() - 1) {
      dependent_.reset();
      erase_row(j);
      return true;
    }
    bool incremental = true;
    try {
      aqih_ = pinv_delete_row(aqih_, j);
    } catch (const CorruptedPseudoInverse&) {
      incremental = false;
    }
    erase_row(j);
    if (!incremental) {
      recompute(f);
      return false;
    }
    if (dependent_) {
      auto res = pinv_append_row(aqih_, dependent_->scaled);
      if (auto* p = std::get_if<PseudoInverse>(&res)) {
        aqih_ = std::move(*p);
        dependent_.reset();
      } else {
        dependent_->h = std::move(std::get<RankDeficient>(res).h);
      }
    }
    return true;
  }

  /// Drops a dependent trailing row if it carries no weight in the dual.
  bool drop_idle_dependent_row() {
    if (!dependent_ || std::abs(lambda_(size() - 1)) > 0.0) return false;
    dependent_.reset();
    erase_row(size() - 1);
    return true;
  }

  /// Rebuilds scaled rows and pseudo-inverse from the raw rows.
  void recompute(const SpdFactor& f) {
    const Eigen::Index block = dependent_ ? size() - 1 : size();
    Matrix scaled = rows_.topRows(block) * f.q_inv_half;
    PseudoInverse fresh = pinv_full(scaled);
    if (!fresh.full_row_rank) {
      // Numerically dependent rows inside the block: rebuild row by row and
      // drop dependent rows that carry a zero multiplier.
      rebuild_incrementally(f);
      return;
    }
    aqih_ = std::move(fresh);
    if (dependent_) {
      dependent_->scaled = f.q_inv_half * rows_.row(size() - 1).transpose();
      auto res = pinv_append_row(aqih_, dependent_->scaled);
      if (auto* p = std::get_if<PseudoInverse>(&res)) {
        aqih_ = std::move(*p);
        dependent_.reset();
      } else {
        dependent_->h = std::move(std::get<RankDeficient>(res).h);
      }
    }
  }

 private:
  struct Dependent {
    Vector scaled;
    Vector h;
  };

  void push_row(const Vector& a, double b) {
    const Eigen::Index m = size();
    rows_.conservativeResize(m + 1, Eigen::NoChange);
    rows_.row(m) = a.transpose();
    rhs_.conservativeResize(m + 1);
    rhs_(m) = b;
    lambda_.conservativeResize(m + 1);
    lambda_(m) = 0.0;
  }

  void erase_row(Eigen::Index j) {
    const Eigen::Index m = size();
    const Eigen::Index tail = m - 1 - j;
    rows_.middleRows(j, tail) = rows_.bottomRows(tail).eval();
    rows_.conservativeResize(m - 1, Eigen::NoChange);
    rhs_.segment(j, tail) = rhs_.tail(tail).eval();
    rhs_.conservativeResize(m - 1);
    lambda_.segment(j, tail) = lambda_.tail(tail).eval();
    lambda_.conservativeResize(m - 1);
  }

  void rebuild_incrementally(const SpdFactor& f) {
    const Matrix raw = rows_;
    const Vector rhs = rhs_;
    const Vector lam = lambda_;
    *this = ActiveSet(raw.cols());
    for (Eigen::Index i = 0; i < raw.rows(); ++i) {
      if (dependent_) {
        if (lambda_(size() - 1) == 0.0) {
          dependent_.reset();
          erase_row(size() - 1);
        } else {
          // Keep the weighted row; accept the SVD pseudo-inverse of the block.
          dependent_.reset();
          aqih_ = pinv_full(rows_ * f.q_inv_half);
          aqih_.full_row_rank = true;
        }
      }
      append_row(raw.row(i).transpose(), rhs(i), f);
      lambda_(size() - 1) = lam(i);
    }
  }

  Matrix rows_;
  Vector rhs_;
  Vector lambda_;
  PseudoInverse aqih_;
  std::optional<Dependent> dependent_;
};

/// Steepest-ascent ray of an unbounded dual subproblem (length m).
struct DualUnbounded {
  Vector direction;
};

/// Minimal-norm optimum of a bounded dual subproblem.
struct DualOptimal {
  Vector lambda_tilde;
  double value = 0.0;
  Vector v_star;
  Vector p_center;
  double radius = 0.0;
};

/// Right-hand side is zero: the optimum value is 0 and x = 0 solves the
/// primal subproblem.
struct DualZero {};

using DualOutcome = std::variant<DualUnbounded, DualOptimal, DualZero>;

namespace detail {

// Bounded case for scaled rows M with pseudo-inverse P; s = Q^{-1/2} c.
inline DualOutcome bounded_dual(const Matrix& m, const Matrix& p, const Vector& b, const Vector& s) {
  if (b.norm() <= subproblem_tol::kZeroRhs) return DualZero{};
  DualOptimal out;
  // Projection of s onto range(M^T), using (M^T)^+ = (M^+)^T.
  out.p_center = m.transpose() * (p.transpose() * s);
  const double dist = (out.p_center - s).norm();
  if (dist > 1.0 + subproblem_tol::kInfeasibleDistance) {
    throw DualInfeasibleDetected("dual subproblem infeasible: distance " + std::to_string(dist));
  }
  out.radius = std::sqrt(std::max(0.0, 1.0 - dist * dist));
  const Vector pb = p * b;
  const double npb = pb.norm();
  out.v_star = out.p_center;
  if (npb > 0.0) out.v_star += (out.radius / npb) * pb;
  out.lambda_tilde = -(p.transpose() * out.v_star);
  out.value = -b.dot(out.lambda_tilde);
  return out;
}

}  // namespace detail

/// Solves the dual subproblem for scaled rows with a general (possibly rank
/// deficient) pseudo-inverse `aqih`, right-hand side b and s = Q^{-1/2} c.
inline DualOutcome solve_dual_subproblem(const PseudoInverse& aqih, const Vector& b, const Vector& s) {
  if (b.size() != aqih.rows() || s.size() != aqih.cols()) {
    throw DimensionMismatch("solve_dual_subproblem: size mismatch");
  }
  const Vector ker = project_kernel(aqih, -b);
  if (ker.norm() > subproblem_tol::kKernel * (1.0 + b.norm())) return DualUnbounded{ker};
  return detail::bounded_dual(aqih.of, aqih.pinv, b, s);
}

/// Solves the dual subproblem of an active set.
inline DualOutcome solve_dual_subproblem(const ActiveSet& aset, const SpdFactor& f, const Vector& c) {
  if (c.size() != aset.dim() || f.dim() != aset.dim()) {
    throw DimensionMismatch("solve_dual_subproblem: size mismatch");
  }
  const Vector s = f.q_inv_half * c;
  const Vector& b = aset.rhs();
  if (const Vector* h = aset.dependent_h()) {
    // ker((A Q^{-1/2})^T) is spanned by d = (-h | 1).
    const Eigen::Index m = aset.size();
    Vector d(m);
    d.head(m - 1) = -*h;
    d(m - 1) = 1.0;
    const double ascent = -b.dot(d);
    const double dd = d.squaredNorm();
    if (std::abs(ascent) / std::sqrt(dd) > subproblem_tol::kKernel * (1.0 + b.norm())) {
      return DualUnbounded{(ascent / dd) * d};
    }
    const Matrix scaled = aset.scaled_rows();
    const PseudoInverse full = pinv_full(scaled);
    return detail::bounded_dual(full.of, full.pinv, b, s);
  }
  return detail::bounded_dual(aset.aqih().of, aset.aqih().pinv, b, s);
}

/// Primal optimum x* = alpha * xbar of the equality-constrained subproblem from
/// an optimal multiplier, where xbar = Q^{-1}(c + A^T lambda).
inline Vector recover_primal(const ActiveSet& aset, const Vector& lambda_star, const SpdFactor& f,
                             const Vector& c) {
  if (lambda_star.size() != aset.size() || c.size() != aset.dim()) {
    throw DimensionMismatch("recover_primal: size mismatch");
  }
  const Vector& b = aset.rhs();
  // g = Q^{-1/2}(c + A^T lambda), so xbar = Q^{-1/2} g, xbar^T Q xbar = |g|^2
  // and c^T xbar = (Q^{-1/2} c)^T g.
  const Vector s = f.q_inv_half * c;
  const Vector g = aset.dual_gradient(s, lambda_star);
  const Vector xbar = f.q_inv_half * g;
  const double blam = b.dot(lambda_star);

  double alpha = 0.0;
  if (std::abs(blam) > subproblem_tol::kCaseA) {
    const double denom = s.dot(g) - g.norm();
    if (std::abs(denom) <= subproblem_tol::kDenominator) {
      throw DegenerateRecovery("recover_primal: vanishing denominator");
    }
    alpha = -blam / denom;
  } else {
    const Vector ax = aset.rows() * xbar;
    if (ax.size() == 0) throw DegenerateRecovery("recover_primal: empty active set");
    Eigen::Index j = 0;
    ax.cwiseAbs().maxCoeff(&j);
    if (ax(j) == 0.0) throw DegenerateRecovery("recover_primal: A xbar vanishes");
    alpha = b(j) / ax(j);
    if ((alpha * ax - b).norm() > subproblem_tol::kCaseB * (1.0 + b.norm())) {
      throw DegenerateRecovery("recover_primal: inconsistent scaling");
    }
  }
  if (!(alpha < 0.0)) throw DegenerateRecovery("recover_primal: non-negative scaling");
  return alpha * xbar;
}

}  // namespace rco
