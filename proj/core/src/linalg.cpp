#include "varmarank/linalg.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include <algorithm>
#include <limits>
#include <stdexcept>
#include <string>

namespace varmarank {

Matrix kron(const Matrix& a, const Matrix& b) {
    Matrix out(a.rows() * b.rows(), a.cols() * b.cols());
    for (Eigen::Index i = 0; i < a.rows(); ++i) {
        for (Eigen::Index j = 0; j < a.cols(); ++j) {
            out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
        }
    }
    return out;
}

Vector vec(const Matrix& a) {
    return Eigen::Map<const Vector>(a.data(), a.size());
}

Matrix unvec(const Vector& v, Eigen::Index rows, Eigen::Index cols) {
    if (v.size() != rows * cols) {
        throw std::invalid_argument("unvec: size mismatch");
    }
    return Eigen::Map<const Matrix>(v.data(), rows, cols);
}

PseudoInverse pseudo_inverse(const Matrix& a, double rel_cutoff) {
    PseudoInverse out;
    out.matrix = Matrix::Zero(a.cols(), a.rows());
    if (a.size() == 0) {
        return out;
    }
    Eigen::JacobiSVD<Matrix> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const Vector& s = svd.singularValues();
    out.sigma_max = s.size() > 0 ? s(0) : 0.0;
    out.cutoff = rel_cutoff * out.sigma_max;
    Vector inv = Vector::Zero(s.size());
    for (Eigen::Index i = 0; i < s.size(); ++i) {
        if (s(i) > out.cutoff && s(i) > 0.0) {
            inv(i) = 1.0 / s(i);
            ++out.rank;
        }
    }
    out.matrix = svd.matrixV() * inv.asDiagonal() * svd.matrixU().transpose();
    return out;
}

SvdSolve svd_solve(const Matrix& a, const Matrix& b, double rel_cutoff) {
    if (a.rows() != a.cols() || a.rows() != b.rows()) {
        throw std::invalid_argument("svd_solve: dimension mismatch");
    }
    SvdSolve out;
    if (a.size() == 0) {
        out.x = Matrix::Zero(0, b.cols());
        out.condition_number = 1.0;
        return out;
    }
    Eigen::JacobiSVD<Matrix> svd(a, Eigen::ComputeFullU | Eigen::ComputeFullV);
    const Vector& s = svd.singularValues();
    const double smax = s(0);
    const double smin = s(s.size() - 1);
    out.condition_number = smin > 0.0 ? smax / smin : std::numeric_limits<double>::infinity();
    if (!(smax > 0.0) || smin <= rel_cutoff * smax) {
        throw std::runtime_error("svd_solve: matrix is numerically singular (condition number " +
                                 std::to_string(out.condition_number) + ")");
    }
    out.x = svd.matrixV() * (s.cwiseInverse().asDiagonal() * (svd.matrixU().transpose() * b));
    return out;
}

Matrix symmetric_sqrt(const Matrix& a) {
    if (a.size() == 0) {
        return a;
    }
    Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (a + a.transpose()));
    Vector ev = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
    return es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose();
}

double spectral_radius(const Matrix& a) {
    if (a.size() == 0) {
        return 0.0;
    }
    Eigen::EigenSolver<Matrix> es(a, false);
    return es.eigenvalues().cwiseAbs().maxCoeff();
}

}  // namespace varmarank
