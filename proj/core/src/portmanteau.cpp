#include "varmarank/portmanteau.hpp"

#include "varmarank/special.hpp"

#include <cmath>
#include <cstdlib>
#include <stdexcept>

namespace varmarank {

std::string to_string(TestMethod method) {
    return method == TestMethod::gaussian ? "gaussian" : "rank";
}

TestMethod test_method_from_string(const std::string& name) {
    if (name == "gaussian") return TestMethod::gaussian;
    if (name == "rank") return TestMethod::rank;
    throw std::invalid_argument("unknown test method '" + name + "'");
}

int degrees_of_freedom(int d, int m, int p, int q) {
    const int df = d * d * (m - p - q);
    if (df <= 0) {
        throw std::invalid_argument("non-positive degrees of freedom: m = " + std::to_string(m) +
                                    " must exceed p + q = " + std::to_string(p + q));
    }
    return df;
}

double p_value(double statistic, int df) {
    if (df < 1) throw std::invalid_argument("p_value: df must be at least 1");
    if (!(statistic >= 0.0)) throw std::invalid_argument("p_value: statistic must be non-negative");
    return chi_square_sf(statistic, df);
}

TestReport gaussian_stat_from_residuals(const Matrix& z, const Matrix& sigma, int m, int p, int q,
                                        const GaussianOptions& options) {
    const auto n = static_cast<int>(z.rows());
    const int d = static_cast<int>(z.cols());
    TestReport r;
    r.method = TestMethod::gaussian;
    r.m = m;
    r.df = degrees_of_freedom(d, m, p, q);
    if (m > n - 1) throw std::invalid_argument("gaussian_stat: m exceeds n - 1");
    Eigen::LLT<Matrix> llt(sigma);
    if (sigma.rows() != d || llt.info() != Eigen::Success) throw std::invalid_argument("gaussian_stat: singular sigma");
    const Matrix sinv = llt.solve(Matrix::Identity(d, d));

    r.per_lag.reserve(static_cast<std::size_t>(m));
    for (int i = 1; i <= m; ++i) {
        Matrix c = z.bottomRows(n - i).transpose() * z.topRows(n - i) / static_cast<double>(n - i);
        if (options.literal_normalization) c = -sinv * c;
        // vec(C)' (S^{-1} (x) S^{-1}) vec(C) = tr(C' S^{-1} C S^{-1})
        const double term = (n - i) * (c.transpose() * sinv * c * sinv).trace();
        r.per_lag.push_back(term);
        r.statistic += term;
    }
    r.mp_rank = m * d * d;
    r.p_value = p_value(std::max(r.statistic, 0.0), r.df);
    return r;
}

TestReport gaussian_stat(const SeriesData& series, const QmleFit& fit, int m, const GaussianOptions& options) {
    const Matrix z = residuals(series, fit.theta_hat).z;
    return gaussian_stat_from_residuals(z, fit.sigma_hat, m, fit.theta_hat.order.p, fit.theta_hat.order.q, options);
}

WeightMatrices weight_matrices(const ThetaVector& theta, const Matrix& K, const Matrix& D, int m) {
    const int d = theta.order.d;
    const int d2 = d * d;
    const int P = theta.order.n_params();
    if (m < 1) throw std::invalid_argument("weight_matrices: m must be positive");
    if (K.rows() != d2 || K.cols() != d2 || D.rows() != d2 || D.cols() != d2) {
        throw std::invalid_argument("weight_matrices: K and D must be d^2 x d^2");
    }
    const Matrix d_half = symmetric_sqrt(D);
    const Matrix eye_m = Matrix::Identity(m, m);

    WeightMatrices out;
    if (P == 0) {
        out.E = Matrix::Identity(m * d2, m * d2);
        for (int i = 0; i < m; ++i) {
            Matrix w = Matrix::Zero(d2, m * d2);
            w.block(0, i * d2, d2, d2) = d_half;
            out.W.push_back(w);
            out.Omega.push_back(w * w.transpose());
        }
        return out;
    }

    const CoeffBlocks cb = coeff_blocks(theta, m);
    const Matrix C = cb.stacked();  // P x m d^2
    const Matrix IK = kron(eye_m, K);
    const Matrix upsilon = C * IK * C.transpose();
    SvdSolve solve;
    try {
        solve = svd_solve(upsilon, C);  // U^{-1} C
    } catch (const std::runtime_error& e) {
        throw std::invalid_argument(std::string("weight_matrices: singular sum c_i K c_i'; ") + e.what());
    }
    const Matrix& u_inv_c = solve.x;

    out.E = Matrix::Identity(m * d2, m * d2) - IK * C.transpose() * u_inv_c;
    const Matrix tail = u_inv_c * kron(eye_m, d_half);  // U^{-1} C (I (x) D^{1/2})
    for (int i = 1; i <= m; ++i) {
        Matrix w = -K * cb.c[static_cast<std::size_t>(i - 1)].transpose() * tail;
        w.block(0, (i - 1) * d2, d2, d2) += d_half;
        out.Omega.push_back(w * w.transpose());
        out.W.push_back(std::move(w));
    }
    return out;
}

TestReport rank_stat_from_scores(const Matrix& j1, const Matrix& j2, const ThetaVector& theta, const Matrix& K,
                                 const ScoreSpec& scores, int m, RankForm form) {
    const int d = theta.order.d;
    const int d2 = d * d;
    const auto n = static_cast<int>(j1.rows());
    TestReport r;
    r.method = TestMethod::rank;
    r.scores = scores.kind;
    r.m = m;
    r.df = degrees_of_freedom(d, m, theta.order.p, theta.order.q);
    if (m > n - 1) throw std::invalid_argument("rank_stat: m exceeds n - 1");

    const WeightMatrices wm = weight_matrices(theta, K, scores.D, m);
    const Vector g = stack_cross_cov(j1, j2, m);

    r.per_lag.reserve(static_cast<std::size_t>(m));
    double per_lag_total = 0.0;
    for (int i = 1; i <= m; ++i) {
        // sqrt(n) times the stacked block is (n-i)^{1/2} vec(G_i).
        const Vector gi = std::sqrt(static_cast<double>(n)) * g.segment((i - 1) * d2, d2);
        const double term = gi.dot(pseudo_inverse(wm.Omega[static_cast<std::size_t>(i - 1)]).matrix * gi);
        r.per_lag.push_back(term);
        per_lag_total += term;
    }

    const Matrix V = wm.E * kron(Matrix::Identity(m, m), scores.D) * wm.E.transpose();
    const PseudoInverse vp = pseudo_inverse(0.5 * (V + V.transpose()));
    r.mp_rank = vp.rank;
    if (std::abs(r.mp_rank - r.df) > d2) {
        r.warnings.push_back("pseudo-inverse rank " + std::to_string(r.mp_rank) + " differs from df " +
                             std::to_string(r.df) + " by more than d^2; the weighting matrix is near-singular");
    }
    r.statistic = form == RankForm::stacked ? n * g.dot(vp.matrix * g) : per_lag_total;
    r.p_value = p_value(std::max(r.statistic, 0.0), r.df);
    return r;
}

TestReport rank_stat(const REstimate& estimate, const ScoreSpec& scores, int m, const KMatrix& K_hat, RankForm form) {
    return rank_stat_from_scores(estimate.at_estimate.j1, estimate.at_estimate.j2, estimate.theta_tilde, K_hat.K,
                                 scores, m, form);
}

}  // namespace varmarank
