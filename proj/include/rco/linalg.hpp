#pragma once

// Dense linear algebra used by the dual active-set solver: the inverse square
// root of the covariance matrix and a Moore-Penrose pseudo-inverse that can be
// extended or shrunk by one row in O(mn).

#include <Eigen/Dense>

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <variant>

namespace rco {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

class NotPositiveDefinite : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class NotSymmetric : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DimensionMismatch : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Raised when a row deletion finds a vanishing pseudo-inverse column; the
/// owner has to rebuild the pseudo-inverse from scratch.
class CorruptedPseudoInverse : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace linalg_tol {
inline constexpr double kSymmetry = 1e-10;
inline constexpr double kEigenFloor = 1e-12;
inline constexpr double kRank = 1e-9;
inline constexpr double kSingularCut = 1e-11;
inline constexpr double kDeleteColumn = 1e-14;
}  // namespace linalg_tol

/// Symmetric positive definite matrix together with its square root and
/// inverse square root (both symmetric).
struct SpdFactor {
  Matrix q;
  Matrix q_half;
  Matrix q_inv_half;

  [[nodiscard]] Eigen::Index dim() const { return q.rows(); }

  /// Q^{-1} y computed as Q^{-1/2} (Q^{-1/2} y).
  [[nodiscard]] Vector solve(const Vector& y) const { return q_inv_half * (q_inv_half * y); }
};

inline double max_abs(const Matrix& m) { return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff(); }

/// Builds the factor from a symmetric eigendecomposition of q. Eigenvalues
/// below 1e-12 * trace(q) / n are rejected.
inline SpdFactor spd_sqrt_inverse(const Matrix& q) {
  if (q.rows() != q.cols() || q.rows() == 0) {
    throw DimensionMismatch("spd_sqrt_inverse: matrix must be square and non-empty");
  }
  if (!q.allFinite()) throw NotPositiveDefinite("spd_sqrt_inverse: non-finite entry");
  const double asym = max_abs(q - q.transpose());
  if (asym > linalg_tol::kSymmetry * (1.0 + max_abs(q))) {
    throw NotSymmetric("spd_sqrt_inverse: asymmetry " + std::to_string(asym));
  }
  const Matrix sym = 0.5 * (q + q.transpose());
  const auto n = static_cast<double>(q.rows());
  const double floor = linalg_tol::kEigenFloor * sym.trace() / n;

  Eigen::SelfAdjointEigenSolver<Matrix> eig(sym);
  if (eig.info() != Eigen::Success) throw NotPositiveDefinite("spd_sqrt_inverse: eigensolver failed");
  const Vector& w = eig.eigenvalues();
  if (!(sym.trace() > 0.0) || w.minCoeff() <= floor) {
    throw NotPositiveDefinite("spd_sqrt_inverse: smallest eigenvalue " + std::to_string(w.minCoeff()));
  }
  const Matrix& v = eig.eigenvectors();
  SpdFactor f;
  f.q = sym;
  f.q_half = v * w.cwiseSqrt().asDiagonal() * v.transpose();
  f.q_inv_half = v * w.cwiseSqrt().cwiseInverse().asDiagonal() * v.transpose();
  f.q_half = 0.5 * (f.q_half + f.q_half.transpose()).eval();
  f.q_inv_half = 0.5 * (f.q_inv_half + f.q_inv_half.transpose()).eval();
  return f;
}

/// Pseudo-inverse `pinv` (cols x rows) of the matrix `of` (rows x cols).
struct PseudoInverse {
  Matrix of;
  Matrix pinv;
  bool full_row_rank = true;

  [[nodiscard]] Eigen::Index rows() const { return of.rows(); }
  [[nodiscard]] Eigen::Index cols() const { return of.cols(); }
};

/// Largest of the four Moore-Penrose residuals in the max-abs norm.
inline double moore_penrose_residual(const Matrix& m, const Matrix& p) {
  if (m.size() == 0) return 0.0;
  const Matrix mp = m * p;
  const Matrix pm = p * m;
  double r = max_abs(mp * m - m);
  r = std::max(r, max_abs(pm * p - p));
  r = std::max(r, max_abs(mp.transpose() - mp));
  r = std::max(r, max_abs(pm.transpose() - pm));
  return r;
}

inline double moore_penrose_residual(const PseudoInverse& p) { return moore_penrose_residual(p.of, p.pinv); }

/// From-scratch pseudo-inverse via SVD, truncating singular values below
/// 1e-11 * sigma_max.
inline PseudoInverse pinv_full(const Matrix& m) {
  PseudoInverse out;
  out.of = m;
  out.pinv = Matrix::Zero(m.cols(), m.rows());
  if (m.rows() == 0 || m.cols() == 0) {
    out.full_row_rank = m.rows() == 0;
    return out;
  }
  Eigen::JacobiSVD<Matrix> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Vector& s = svd.singularValues();
  const double cut = linalg_tol::kSingularCut * (s.size() ? s(0) : 0.0);
  Eigen::Index rank = 0;
  for (Eigen::Index i = 0; i < s.size(); ++i) {
    if (s(i) > cut && s(i) > 0.0) ++rank;
  }
  if (rank > 0) {
    out.pinv = svd.matrixV().leftCols(rank) * s.head(rank).cwiseInverse().asDiagonal() *
               svd.matrixU().leftCols(rank).transpose();
  }
  out.full_row_rank = rank == m.rows();
  return out;
}

/// The appended row is a linear combination h * M of the existing rows.
struct RankDeficient {
  Vector h;
};

using AppendResult = std::variant<PseudoInverse, RankDeficient>;

/// Extends the pseudo-inverse of a full-row-rank M by one row `a`. With
/// h = a M^+ and v = a - h M, a nonzero v gives
///   [M; a]^+ = (M^+ | 0) - v^T (h | -1) / |v|^2,
/// and v == 0 reports the dependency coefficients h instead.
inline AppendResult pinv_append_row(const PseudoInverse& p, const Vector& a) {
  if (!p.full_row_rank) throw std::invalid_argument("pinv_append_row: matrix is not of full row rank");
  if (a.size() != p.cols()) throw DimensionMismatch("pinv_append_row: row length mismatch");

  const Eigen::Index m = p.rows();
  const Eigen::Index n = p.cols();
  Vector h = p.pinv.transpose() * a;
  const Vector v = a - p.of.transpose() * h;
  const double vv = v.squaredNorm();
  if (m >= n || std::sqrt(vv) <= linalg_tol::kRank * (1.0 + a.norm())) {
    return RankDeficient{std::move(h)};
  }

  PseudoInverse out;
  out.full_row_rank = true;
  out.of.resize(m + 1, n);
  out.of.topRows(m) = p.of;
  out.of.row(m) = a.transpose();
  out.pinv.resize(n, m + 1);
  out.pinv.leftCols(m) = p.pinv - (v / vv) * h.transpose();
  out.pinv.col(m) = v / vv;
  return out;
}

/// Removes row r from a full-row-rank M: subtract w w^T M^+ / |w|^2 where w is
/// column r of M^+, then drop column r.
inline PseudoInverse pinv_delete_row(const PseudoInverse& p, Eigen::Index r) {
  if (!p.full_row_rank) throw std::invalid_argument("pinv_delete_row: matrix is not of full row rank");
  if (r < 0 || r >= p.rows()) throw std::out_of_range("pinv_delete_row: row index out of range");

  const Eigen::Index m = p.rows();
  const Eigen::Index n = p.cols();
  const Vector w = p.pinv.col(r);
  const double ww = w.squaredNorm();
  if (std::sqrt(ww) < linalg_tol::kDeleteColumn) {
    throw CorruptedPseudoInverse("pinv_delete_row: vanishing pseudo-inverse column");
  }
  const Matrix updated = p.pinv - (w / ww) * (w.transpose() * p.pinv);

  PseudoInverse out;
  out.full_row_rank = true;
  out.of.resize(m - 1, n);
  out.pinv.resize(n, m - 1);
  out.of.topRows(r) = p.of.topRows(r);
  out.of.bottomRows(m - 1 - r) = p.of.bottomRows(m - 1 - r);
  out.pinv.leftCols(r) = updated.leftCols(r);
  out.pinv.rightCols(m - 1 - r) = updated.rightCols(m - 1 - r);
  return out;
}

/// y - M M^+ y for y in the row-index space (length rows()).
inline Vector project_kernel(const PseudoInverse& p, const Vector& y) {
  if (y.size() != p.rows()) throw DimensionMismatch("project_kernel: vector length mismatch");
  return y - p.of * (p.pinv * y);
}

/// M^+ M y for y in the column space (length cols()).
inline Vector project_range(const PseudoInverse& p, const Vector& y) {
  if (y.size() != p.cols()) throw DimensionMismatch("project_range: vector length mismatch");
  return p.pinv * (p.of * y);
}

}  // namespace rco
