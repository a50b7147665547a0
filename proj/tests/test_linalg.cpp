#include "varmarank/linalg.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace varmarank;

namespace {

Matrix random_matrix(int r, int c, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> g;
    Matrix m(r, c);
    for (int i = 0; i < r; ++i) {
        for (int j = 0; j < c; ++j) m(i, j) = g(rng);
    }
    return m;
}

}  // namespace

TEST(Linalg, KronMatchesEntrywiseDefinition) {
    const Matrix a = random_matrix(2, 3, 1);
    const Matrix b = random_matrix(3, 2, 2);
    const Matrix k = kron(a, b);
    ASSERT_EQ(k.rows(), 6);
    ASSERT_EQ(k.cols(), 6);
    for (int i = 0; i < 2; ++i) {
        for (int j = 0; j < 3; ++j) {
            for (int r = 0; r < 3; ++r) {
                for (int c = 0; c < 2; ++c) EXPECT_EQ(k(i * 3 + r, j * 2 + c), a(i, j) * b(r, c));
            }
        }
    }
}

TEST(Linalg, VecIsColumnMajorAndUnvecInverts) {
    Matrix a(2, 2);
    a << 1, 2, 3, 4;
    const Vector v = vec(a);
    EXPECT_EQ(v(0), 1);
    EXPECT_EQ(v(1), 3);
    EXPECT_EQ(v(2), 2);
    EXPECT_EQ(v(3), 4);
    EXPECT_EQ(unvec(v, 2, 2), a);
}

TEST(Linalg, VecOfProductIdentity) {
    // vec(ABC) = (C' (x) A) vec(B)
    const Matrix a = random_matrix(3, 2, 3);
    const Matrix b = random_matrix(2, 4, 4);
    const Matrix c = random_matrix(4, 2, 5);
    EXPECT_LT((vec(a * b * c) - kron(c.transpose(), a) * vec(b)).norm(), 1e-12);
}

TEST(Linalg, PseudoInverseOfRankDeficientMatrix) {
    const Matrix u = random_matrix(6, 3, 6);
    const Matrix s = u * u.transpose();  // rank 3
    const PseudoInverse pi = pseudo_inverse(s);
    EXPECT_EQ(pi.rank, 3);
    // Penrose conditions.
    EXPECT_LT((s * pi.matrix * s - s).norm(), 1e-9 * s.norm());
    EXPECT_LT((pi.matrix * s * pi.matrix - pi.matrix).norm(), 1e-9 * pi.matrix.norm());
    EXPECT_LT((s * pi.matrix - (s * pi.matrix).transpose()).norm(), 1e-9);
}

TEST(Linalg, PseudoInverseOfZeroMatrixIsZero) {
    const PseudoInverse pi = pseudo_inverse(Matrix::Zero(3, 3));
    EXPECT_EQ(pi.rank, 0);
    EXPECT_EQ(pi.matrix.norm(), 0.0);
}

TEST(Linalg, SvdSolveRecoversSolutionAndRejectsSingular) {
    const Matrix a = random_matrix(4, 4, 7);
    const Matrix x = random_matrix(4, 2, 8);
    const SvdSolve s = svd_solve(a, a * x);
    EXPECT_LT((s.x - x).norm(), 1e-10);
    EXPECT_GE(s.condition_number, 1.0);
    Matrix sing = a;
    sing.col(3) = sing.col(0);
    EXPECT_THROW(svd_solve(sing, x), std::runtime_error);
}

TEST(Linalg, SymmetricSqrtSquaresBack) {
    const Matrix u = random_matrix(4, 4, 9);
    const Matrix s = u * u.transpose() + Matrix::Identity(4, 4);
    const Matrix r = symmetric_sqrt(s);
    EXPECT_LT((r * r - s).norm(), 1e-10);
    EXPECT_LT((r - r.transpose()).norm(), 1e-12);
}

TEST(Linalg, SpectralRadius) {
    Matrix a(2, 2);
    a << 0.0, -1.0, 1.0, 0.0;  // eigenvalues +-i
    EXPECT_NEAR(spectral_radius(a), 1.0, 1e-14);
    EXPECT_EQ(spectral_radius(Matrix(0, 0)), 0.0);
}
