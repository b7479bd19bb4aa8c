#include "setrl/matrix.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

using namespace setrl;

namespace {
constexpr double kTight = 1e-12;

Matrix random_matrix(std::mt19937_64& g, int r, int c, double lo = -2.0, double hi = 2.0) {
  Matrix m(r, c);
  std::uniform_real_distribution<double> d(lo, hi);
  for (double& v : m.a) v = d(g);
  return m;
}
}  // namespace

TEST(Matrix, MatmulIdentity) {
  std::mt19937_64 g(7);
  Matrix m = random_matrix(g, 3, 5);
  Matrix out = matmul(Matrix::identity(3), m);
  EXPECT_NEAR(max_abs_diff(out, m), 0.0, kTight);
}

TEST(Matrix, MatmulZero) {
  Matrix a(2, 2, {1, 2, 3, 4});
  Matrix z(2, 1);
  Matrix out = matmul(a, z);
  EXPECT_EQ(out.rows, 2);
  EXPECT_EQ(out.cols, 1);
  EXPECT_EQ(out(0, 0), 0.0);
  EXPECT_EQ(out(1, 0), 0.0);
}

TEST(Matrix, MatmulMatchesTripleLoop) {
  std::mt19937_64 g(11);
  Matrix a = random_matrix(g, 4, 5);
  Matrix b = random_matrix(g, 5, 2);
  Matrix out = matmul(a, b);
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 2; ++j) {
      double s = 0.0;
      for (int k = 0; k < 5; ++k) s += a(i, k) * b(k, j);
      EXPECT_NEAR(out(i, j), s, kTight);
    }
}

TEST(Matrix, MatmulShapeMismatchThrows) {
  Matrix a(2, 3), b(2, 3);
  EXPECT_THROW(matmul(a, b), std::invalid_argument);
}

TEST(Matrix, MatmulVariantsAgree) {
  std::mt19937_64 g(13);
  Matrix a = random_matrix(g, 4, 3);
  Matrix b = random_matrix(g, 5, 3);
  Matrix nt;
  matmul_nt_into(nt, a, b);
  EXPECT_NEAR(max_abs_diff(nt, matmul(a, transpose(b))), 0.0, kTight);
  Matrix c = random_matrix(g, 4, 6);
  Matrix tn;
  matmul_tn_into(tn, a, c);
  EXPECT_NEAR(max_abs_diff(tn, matmul(transpose(a), c)), 0.0, kTight);
}

TEST(Softmax, SymmetricRow) {
  Matrix x(1, 2);
  Matrix s = row_softmax(x);
  EXPECT_NEAR(s(0, 0), 0.5, kTight);
  EXPECT_NEAR(s(0, 1), 0.5, kTight);
}

TEST(Softmax, LargeEntriesNoOverflow) {
  Matrix x(1, 3, {1000.0, 1000.0, 1000.0});
  Matrix s = row_softmax(x);
  for (int j = 0; j < 3; ++j) EXPECT_NEAR(s(0, j), 1.0 / 3.0, kTight);
}

TEST(Softmax, ClosedFormLog3) {
  Matrix x(1, 2, {0.0, std::log(3.0)});
  Matrix s = row_softmax(x);
  EXPECT_NEAR(s(0, 0), 0.25, kTight);
  EXPECT_NEAR(s(0, 1), 0.75, kTight);
}

TEST(Softmax, RowsSumToOneAndShiftInvariant) {
  std::mt19937_64 g(3);
  Matrix x = random_matrix(g, 6, 4, -10.0, 10.0);
  Matrix s = row_softmax(x);
  Matrix shifted = x;
  for (int i = 0; i < x.rows; ++i)
    for (int j = 0; j < x.cols; ++j) shifted(i, j) += 17.5;
  Matrix s2 = row_softmax(shifted);
  for (int i = 0; i < x.rows; ++i) {
    double sum = 0.0;
    for (int j = 0; j < x.cols; ++j) {
      sum += s(i, j);
      EXPECT_GT(s(i, j), 0.0);
      EXPECT_LT(s(i, j), 1.0);
    }
    EXPECT_NEAR(sum, 1.0, kTight);
  }
  EXPECT_NEAR(max_abs_diff(s, s2), 0.0, kTight);
}

TEST(Relu, Basics) {
  Matrix x(1, 3, {-1.0, 0.0, 2.0});
  Matrix r = relu(x);
  EXPECT_EQ(r(0, 0), 0.0);
  EXPECT_EQ(r(0, 1), 0.0);
  EXPECT_EQ(r(0, 2), 2.0);
  Matrix neg(2, 2, {-1, -2, -3, -4});
  EXPECT_NEAR(frobenius(relu(neg)), 0.0, kTight);
}

TEST(Project, InteriorRowUnchanged) {
  Matrix x(1, 2, {0.3, 0.4});
  Matrix p = row_project_lp(x, 2.0);
  EXPECT_EQ(p(0, 0), 0.3);
  EXPECT_EQ(p(0, 1), 0.4);
}

TEST(Project, ScalesA345Vector) {
  Matrix x(1, 2, {3.0, 4.0});
  Matrix p = row_project_lp(x, 2.0);
  EXPECT_NEAR(p(0, 0), 0.6, kTight);
  EXPECT_NEAR(p(0, 1), 0.8, kTight);
}

TEST(Project, L1OnAxis) {
  Matrix x(1, 2, {2.0, 0.0});
  Matrix p = row_project_lp(x, 1.0);
  EXPECT_NEAR(p(0, 0), 1.0, kTight);
  EXPECT_NEAR(p(0, 1), 0.0, kTight);
}

TEST(Project, IdempotentBitwise) {
  std::mt19937_64 g(23);
  for (double p : {1.0, 2.0, kInf}) {
    Matrix x = random_matrix(g, 5, 4, -3.0, 3.0);
    Matrix once = row_project_lp(x, p);
    Matrix twice = row_project_lp(once, p);
    for (int i = 0; i < once.size(); ++i) EXPECT_EQ(once.a[i], twice.a[i]) << "p=" << p;
  }
}

TEST(Project, RowNormsWithinBall) {
  std::mt19937_64 g(29);
  for (double p : {1.0, 1.5, 2.0, 3.0, kInf}) {
    Matrix x = random_matrix(g, 8, 5, -4.0, 4.0);
    Matrix pr = row_project_lp(x, p);
    for (int i = 0; i < pr.rows; ++i) EXPECT_LE(row_lp_norm(pr, i, p), 1.0 + 1e-12);
  }
}

TEST(Project, RejectsBadOrder) { EXPECT_THROW(row_project_lp(Matrix(1, 1), 0.5), std::domain_error); }

TEST(Clip, Basics) {
  EXPECT_EQ(clip_scalar(0.5, 1.0), 0.5);
  EXPECT_EQ(clip_scalar(2.0, 1.0), 1.0);
  EXPECT_EQ(clip_scalar(-3.0, 1.0), -1.0);
  EXPECT_THROW(clip_scalar(1.0, 0.0), std::domain_error);
}

TEST(Norms, HandValues) {
  // W = [[3,4],[0,5]]: row p=2 norms are 5 and 5.
  Matrix w(2, 2, {3, 4, 0, 5});
  EXPECT_NEAR(norm_pq_T(w, 2.0, 2.0), std::sqrt(50.0), kTight);
  EXPECT_NEAR(norm_pinf_T(w, 2.0), 5.0, kTight);
  EXPECT_NEAR(norm_pq_T(w, 1.0, kInf), 7.0, kTight);
  EXPECT_NEAR(frobenius(w), std::sqrt(9.0 + 16.0 + 25.0), kTight);
}

TEST(Norms, FrobeniusIsL22) {
  std::mt19937_64 g(31);
  Matrix x = random_matrix(g, 4, 6);
  EXPECT_NEAR(frobenius(x), norm_pq_T(x, 2.0, 2.0), 1e-12);
}

TEST(Norms, VecNormComparison) {
  // Lemma-style sanity: ||x||_q <= ||x||_p <= d^(1/p-1/q) ||x||_q for p < q.
  std::mt19937_64 g(37);
  std::uniform_real_distribution<double> d(-2.0, 2.0);
  for (int t = 0; t < 200; ++t) {
    std::vector<double> v(6);
    for (double& x : v) x = d(g);
    const double p = 1.0 + 2.0 * std::uniform_real_distribution<double>(0, 1)(g);
    const double q = p + 2.0 * std::uniform_real_distribution<double>(0, 1)(g) + 1e-6;
    const double np = lp_norm(v, p);
    const double nq = lp_norm(v, q);
    EXPECT_LE(nq, np + 1e-12);
    EXPECT_LE(np, std::pow(6.0, 1.0 / p - 1.0 / q) * nq + 1e-12);
  }
}
