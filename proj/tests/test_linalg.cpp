#include "rco/instances.hpp"
#include "rco/linalg.hpp"

#include <gtest/gtest.h>

using namespace rco;

namespace {

Matrix rows(std::initializer_list<std::initializer_list<double>> r) {
  Matrix m(static_cast<Eigen::Index>(r.size()), static_cast<Eigen::Index>(r.begin()->size()));
  Eigen::Index i = 0;
  for (const auto& row : r) {
    Eigen::Index j = 0;
    for (double v : row) m(i, j++) = v;
    ++i;
  }
  return m;
}

Vector vec(std::initializer_list<double> v) {
  Vector out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) out(i++) = x;
  return out;
}

}  // namespace

TEST(SpdSqrtInverse, Identity) {
  const auto f = spd_sqrt_inverse(Matrix::Identity(3, 3));
  EXPECT_LT(max_abs(f.q_inv_half - Matrix::Identity(3, 3)), 1e-14);
}

TEST(SpdSqrtInverse, Diagonal) {
  const auto f = spd_sqrt_inverse(rows({{4, 0}, {0, 9}}));
  EXPECT_NEAR(f.q_inv_half(0, 0), 0.5, 1e-14);
  EXPECT_NEAR(f.q_inv_half(1, 1), 1.0 / 3.0, 1e-14);
  EXPECT_NEAR(f.q_half(1, 1), 3.0, 1e-14);
  EXPECT_NEAR(f.q_inv_half(0, 1), 0.0, 1e-14);
}

TEST(SpdSqrtInverse, GeneratedMatrixWhitens) {
  Rng rng(7);
  const Matrix q = gen_q(5, rng);
  const auto f = spd_sqrt_inverse(q);
  EXPECT_LT(max_abs(f.q_inv_half * q * f.q_inv_half - Matrix::Identity(5, 5)), 1e-8);
  EXPECT_LT(max_abs(f.q_half * f.q_half - q), 1e-12);
}

TEST(SpdSqrtInverse, Rejections) {
  EXPECT_THROW(spd_sqrt_inverse(rows({{1, 2}, {0, 1}})), NotSymmetric);
  EXPECT_THROW(spd_sqrt_inverse(rows({{1, 0}, {0, -1}})), NotPositiveDefinite);
  EXPECT_THROW(spd_sqrt_inverse(rows({{1, 0}, {0, 0}})), NotPositiveDefinite);
  EXPECT_THROW(spd_sqrt_inverse(Matrix(2, 3)), DimensionMismatch);
}

TEST(PinvFull, Examples) {
  EXPECT_LT(max_abs(pinv_full(Matrix::Identity(2, 2)).pinv - Matrix::Identity(2, 2)), 1e-14);
  const auto p = pinv_full(rows({{2, 0}}));
  EXPECT_LT(max_abs(p.pinv - rows({{0.5}, {0}})), 1e-14);
  EXPECT_TRUE(p.full_row_rank);
}

TEST(PinvFull, RankThreeResiduals) {
  Rng rng(11);
  Matrix left(4, 3), right(3, 6);
  for (Eigen::Index i = 0; i < left.size(); ++i) left.data()[i] = rng.uniform(-1, 1);
  for (Eigen::Index i = 0; i < right.size(); ++i) right.data()[i] = rng.uniform(-1, 1);
  const Matrix m = left * right;
  const auto p = pinv_full(m);
  EXPECT_FALSE(p.full_row_rank);
  EXPECT_LT(moore_penrose_residual(p), 1e-10);
}

TEST(PinvAppend, FullRank) {
  const auto r = pinv_append_row(pinv_full(rows({{1, 0}})), vec({0, 2}));
  ASSERT_TRUE(std::holds_alternative<PseudoInverse>(r));
  const auto& p = std::get<PseudoInverse>(r);
  EXPECT_LT(max_abs(p.pinv - rows({{1, 0}, {0, 0.5}})), 1e-14);
  EXPECT_LT(max_abs(p.pinv - pinv_full(rows({{1, 0}, {0, 2}})).pinv), 1e-14);
}

TEST(PinvAppend, RankDeficient) {
  const auto r = pinv_append_row(pinv_full(rows({{1, 0}})), vec({2, 0}));
  ASSERT_TRUE(std::holds_alternative<RankDeficient>(r));
  EXPECT_NEAR(std::get<RankDeficient>(r).h(0), 2.0, 1e-14);

  const auto z = pinv_append_row(pinv_full(Matrix::Identity(2, 2)), vec({0, 0}));
  ASSERT_TRUE(std::holds_alternative<RankDeficient>(z));
  EXPECT_LT(std::get<RankDeficient>(z).h.norm(), 1e-14);
}

TEST(PinvAppend, LengthMismatch) {
  EXPECT_THROW(pinv_append_row(pinv_full(rows({{1, 0}})), vec({1, 0, 0})), DimensionMismatch);
}

TEST(PinvDelete, Examples) {
  const auto p = pinv_delete_row(pinv_full(Matrix::Identity(3, 3)), 1);
  const Matrix kept = rows({{1, 0, 0}, {0, 0, 1}});
  EXPECT_LT(max_abs(p.of - kept), 0.0 + 1e-15);
  EXPECT_LT(max_abs(p.pinv - kept.transpose()), 1e-14);

  const auto q = pinv_delete_row(pinv_full(rows({{1, 0}, {1, 1}})), 0);
  EXPECT_LT(max_abs(q.pinv - rows({{0.5}, {0.5}})), 1e-12);
  EXPECT_THROW(pinv_delete_row(q, 3), std::out_of_range);
}

TEST(PinvDelete, RoundTrip) {
  Rng rng(3);
  Matrix m(3, 5);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = rng.uniform(-1, 1);
  const auto full = pinv_full(m);
  const auto del = pinv_delete_row(full, 1);
  const auto back = std::get<PseudoInverse>(pinv_append_row(del, m.row(1).transpose()));
  EXPECT_LT(moore_penrose_residual(back), 1e-9);
  EXPECT_LT(moore_penrose_residual(del), 1e-9);
}

TEST(ProjectKernel, Examples) {
  EXPECT_LT(project_kernel(pinv_full(rows({{1, 0}})), vec({3})).norm(), 1e-14);
  const auto p = pinv_full(rows({{1, 0}, {2, 0}}));
  const Vector k = project_kernel(p, vec({1, 0}));
  EXPECT_NEAR(k(0), 0.8, 1e-12);
  EXPECT_NEAR(k(1), -0.4, 1e-12);
  EXPECT_LT((project_kernel(p, k) - k).norm(), 1e-10);
  EXPECT_THROW(project_kernel(p, vec({1})), DimensionMismatch);
}

TEST(ProjectRange, Examples) {
  EXPECT_LT((project_range(pinv_full(Matrix::Identity(2, 2)), vec({1, 2})) - vec({1, 2})).norm(), 1e-14);
  EXPECT_LT((project_range(pinv_full(rows({{1, 0}})), vec({3, 4})) - vec({3, 0})).norm(), 1e-14);

  Rng rng(5);
  Matrix m(3, 6);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = rng.uniform(-1, 1);
  Vector y(6);
  for (Eigen::Index i = 0; i < 6; ++i) y(i) = rng.uniform(-1, 1);
  const Vector proj = project_range(pinv_full(m), y);
  EXPECT_LE(std::abs((y - proj).dot(proj)), 1e-9 * y.squaredNorm());
}
