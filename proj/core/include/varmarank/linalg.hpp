#pragma once

#include <Eigen/Dense>

namespace varmarank {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Kronecker product A (x) B.
Matrix kron(const Matrix& a, const Matrix& b);

/// Column-major vectorization.
Vector vec(const Matrix& a);

/// Inverse of vec for a rows x cols matrix.
Matrix unvec(const Vector& v, Eigen::Index rows, Eigen::Index cols);

/// Moore-Penrose inverse together with the numerical rank it used.
struct PseudoInverse {
    Matrix matrix;
    int rank = 0;
    double sigma_max = 0.0;
    double cutoff = 0.0;
};

/// Pseudo-inverse via SVD; singular values below rel_cutoff * sigma_max are
/// treated as zero.
PseudoInverse pseudo_inverse(const Matrix& a, double rel_cutoff = 1e-10);

/// Solution of a x = b via SVD with the same relative cutoff. Throws
/// std::runtime_error if a is numerically rank deficient.
struct SvdSolve {
    Matrix x;
    double condition_number = 0.0;
};
SvdSolve svd_solve(const Matrix& a, const Matrix& b, double rel_cutoff = 1e-10);

/// Symmetric square root of a symmetric positive semidefinite matrix.
/// Negative eigenvalues from rounding are clamped to zero.
Matrix symmetric_sqrt(const Matrix& a);

/// Largest eigenvalue modulus of a general square matrix; 0 for empty input.
double spectral_radius(const Matrix& a);

}  // namespace varmarank
