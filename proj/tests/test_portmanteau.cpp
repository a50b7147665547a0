#include "oracles.hpp"
#include "varmarank/estimation.hpp"
#include "varmarank/innovations.hpp"
#include "varmarank/montecarlo.hpp"
#include "varmarank/portmanteau.hpp"
#include "varmarank/special.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

using namespace varmarank;

namespace {

ThetaVector null_theta() { return ThetaVector::from_spec(reference_null_spec()); }

Matrix random_k(int d2, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> g(0.0, 0.3);
    Matrix k = Matrix::Identity(d2, d2);
    for (int i = 0; i < d2; ++i)
        for (int j = 0; j < d2; ++j) k(i, j) += g(rng);
    return k;
}

// (n - i) vec(C)' (S^{-1} (x) S^{-1}) vec(C) summed over lags, via explicit Kronecker products.
double gaussian_oracle(const Matrix& z, const Matrix& sigma, int m) {
    const auto n = static_cast<int>(z.rows());
    const Matrix w = kron(sigma, sigma).inverse();
    double q = 0.0;
    for (int i = 1; i <= m; ++i) {
        const Vector c = vec(oracle::naive_cross_cov(z, z, i));
        q += (n - i) * c.dot(w * c);
    }
    return q;
}

}  // namespace

TEST(DegreesOfFreedom, Values) {
    EXPECT_EQ(degrees_of_freedom(2, 5, 1, 1), 12);
    EXPECT_EQ(degrees_of_freedom(2, 25, 1, 1), 92);
    EXPECT_EQ(degrees_of_freedom(2, 8, 1, 1), 24);
    EXPECT_EQ(degrees_of_freedom(2, 5, 0, 0), 20);
}

TEST(DegreesOfFreedom, NonPositiveRejected) {
    try {
        degrees_of_freedom(2, 2, 1, 1);
        FAIL();
    } catch (const std::invalid_argument& e) {
        EXPECT_NE(std::string(e.what()).find("non-positive degrees of freedom"), std::string::npos);
    }
}

TEST(PValue, Values) {
    EXPECT_EQ(p_value(0.0, 7), 1.0);
    EXPECT_NEAR(p_value(2.0 * std::log(20.0), 2), 0.05, 1e-12);
    EXPECT_NEAR(p_value(21.026, 12), 1.0 - oracle::chi_square_cdf_simpson(21.026, 12), 1e-10);
    EXPECT_NEAR(p_value(21.026, 12), 0.050, 5e-4);
    EXPECT_THROW(p_value(-1.0, 3), std::invalid_argument);
    EXPECT_THROW(p_value(1.0, 0), std::invalid_argument);
}

TEST(GaussianStat, MatchesKroneckerOracle) {
    const auto x = simulate(reference_null_spec(), 300, make_named_sampler("skewt"), 3).series;
    const QmleFit fit = qmle(x, 1, 1);
    for (int m : {3, 5, 12}) {
        const TestReport r = gaussian_stat(x, fit, m);
        const Matrix z = residuals(x, fit.theta_hat).z;
        EXPECT_NEAR(r.statistic, gaussian_oracle(z, fit.sigma_hat, m), 1e-9 * r.statistic);
        EXPECT_EQ(r.df, 4 * (m - 2));
        EXPECT_EQ(r.p_value, chi_square_sf(r.statistic, r.df));
        EXPECT_EQ(static_cast<int>(r.per_lag.size()), m);
        double sum = 0.0;
        for (double v : r.per_lag) sum += v;
        EXPECT_NEAR(sum, r.statistic, 1e-12 * r.statistic);
        EXPECT_EQ(r.method, TestMethod::gaussian);
        EXPECT_FALSE(r.scores.has_value());
    }
}

TEST(GaussianStat, NonDecreasingInM) {
    const auto x = simulate(reference_null_spec(), 200, make_named_sampler("mixture"), 4).series;
    const QmleFit fit = qmle(x, 1, 1);
    double prev = 0.0;
    for (int m = 3; m <= 25; ++m) {
        const double q = gaussian_stat(x, fit, m).statistic;
        EXPECT_GE(q, prev);
        prev = q;
    }
}

TEST(GaussianStat, ZeroCrossCovariancesGiveZero) {
    // Two non-zero rows further apart than m: every lagged product vanishes.
    const int m = 5;
    Matrix z = Matrix::Zero(20, 2);
    z.row(0) << 1.0, 2.0;
    z.row(m + 1) << -3.0, 1.0;
    const TestReport r = gaussian_stat_from_residuals(z, residual_covariance(z), m, 0, 0);
    EXPECT_EQ(r.statistic, 0.0);
    EXPECT_EQ(r.p_value, 1.0);
}

TEST(GaussianStat, LiteralNormalizationDiffers) {
    const auto x = simulate(reference_null_spec(), 300, make_named_sampler("mixture"), 5).series;
    const QmleFit fit = qmle(x, 1, 1);
    GaussianOptions lit;
    lit.literal_normalization = true;
    const Matrix z = residuals(x, fit.theta_hat).z;
    const Matrix sinv = fit.sigma_hat.inverse();
    const Matrix w = kron(fit.sigma_hat, fit.sigma_hat).inverse();
    double q = 0.0;
    for (int i = 1; i <= 5; ++i) {
        const Vector c = vec(-sinv * oracle::naive_cross_cov(z, z, i));
        q += (300 - i) * c.dot(w * c);
    }
    const double literal = gaussian_stat(x, fit, 5, lit).statistic;
    EXPECT_NEAR(literal, q, 1e-9 * q);
    EXPECT_GT(std::abs(literal - gaussian_stat(x, fit, 5).statistic), 1e-3);
}

TEST(GaussianStat, Errors) {
    const Matrix z = InnovationSampler::spherical_normal(2).sample(50, 1);
    EXPECT_THROW(gaussian_stat_from_residuals(z, residual_covariance(z), 2, 1, 1), std::invalid_argument);
    EXPECT_THROW(gaussian_stat_from_residuals(z, Matrix::Zero(2, 2), 5, 1, 1), std::invalid_argument);
    EXPECT_THROW(gaussian_stat_from_residuals(z, residual_covariance(z), 50, 0, 0), std::invalid_argument);
}

TEST(GaussianStat, WhiteNoiseMeanNearChiSquareMean) {
    const auto s = InnovationSampler::spherical_normal(2);
    double sum = 0.0;
    for (int rep = 0; rep < 1000; ++rep) {
        const Matrix z = s.sample(1000, 5000 + rep);
        sum += gaussian_stat_from_residuals(z, residual_covariance(z), 5, 0, 0).statistic;
    }
    EXPECT_NEAR(sum / 1000.0, 20.0, 1.0);
}

TEST(WeightMatrices, TraceIdempotencyAndDiagonalBlocks) {
    const Matrix d = score_moments(ScoreKind::vdw, 2);
    for (int m : {5, 10, 25}) {
        for (const Matrix& k : {Matrix(Matrix::Identity(4, 4)), random_k(4, m)}) {
            const WeightMatrices w = weight_matrices(null_theta(), k, d, m);
            EXPECT_NEAR(w.E.trace(), (m - 2) * 4.0, 1e-6);
            EXPECT_LT((w.E * w.E - w.E).norm(), 1e-8);
            const Matrix v = w.E * kron(Matrix::Identity(m, m), d) * w.E.transpose();
            for (int i = 0; i < m; ++i) {
                EXPECT_LT((w.Omega[i] - v.block(4 * i, 4 * i, 4, 4)).cwiseAbs().maxCoeff(), 1e-10);
            }
        }
    }
    EXPECT_NEAR(weight_matrices(null_theta(), Matrix::Identity(4, 4), d, 10).E.trace(), 32.0, 1e-6);
}

TEST(WeightMatrices, RandomValidThetaIsIdempotent) {
    std::mt19937_64 rng(3);
    std::normal_distribution<double> g(0.0, 0.3);
    for (int rep = 0; rep < 5; ++rep) {
        VarmaSpec s;
        do {
            s = VarmaSpec{2, {Matrix::NullaryExpr(2, 2, [&] { return g(rng); })},
                          {Matrix::NullaryExpr(2, 2, [&] { return g(rng); }), Matrix::NullaryExpr(2, 2, [&] { return g(rng); })}};
        } while (!validate_spec(s, 0.1).pass);
        const WeightMatrices w = weight_matrices(ThetaVector::from_spec(s), random_k(4, 10 + rep), Matrix::Identity(4, 4), 12);
        EXPECT_LT((w.E * w.E - w.E).norm(), 1e-8);
        EXPECT_NEAR(w.E.trace(), (12 - 3) * 4.0, 1e-6);
    }
}

TEST(WeightMatrices, NoParametersGiveIdentity) {
    const Matrix d = score_moments(ScoreKind::sign, 2);
    const WeightMatrices w = weight_matrices(ThetaVector{{2, 0, 0}, Vector(0)}, Matrix::Identity(4, 4), d, 6);
    EXPECT_EQ(w.E, Matrix::Identity(24, 24));
    for (const auto& o : w.Omega) EXPECT_LT((o - d).norm(), 1e-15);
}

TEST(WeightMatrices, SingularUpsilonRejected) {
    EXPECT_THROW(weight_matrices(null_theta(), Matrix::Zero(4, 4), Matrix::Identity(4, 4), 5), std::invalid_argument);
}

TEST(RankStat, ZeroCrossCovarianceGivesZero) {
    const Matrix j = Matrix::Zero(100, 2);
    const auto s = ScoreSpec::named(ScoreKind::vdw, 2);
    const TestReport r = rank_stat_from_scores(j, j, null_theta(), Matrix::Identity(4, 4), s, 8);
    EXPECT_EQ(r.statistic, 0.0);
    EXPECT_EQ(r.df, 24);
    EXPECT_EQ(r.p_value, 1.0);
}

TEST(RankStat, StackedEqualsPerLagWithoutParameters) {
    const Matrix z = make_named_sampler("skewt").sample(200, 6);
    const Grid g = make_grid(200, 2, std::nullopt, 1);
    const auto s = ScoreSpec::named(ScoreKind::vdw, 2);
    const auto map = compute_map(z, g);
    const Matrix j = score_matrix(s, map.ranks, map.signs, g.n_R, 1);
    const ThetaVector empty{{2, 0, 0}, Vector(0)};
    const TestReport a = rank_stat_from_scores(j, j, empty, Matrix::Zero(4, 4), s, 6, RankForm::stacked);
    const TestReport b = rank_stat_from_scores(j, j, empty, Matrix::Zero(4, 4), s, 6, RankForm::per_lag);
    EXPECT_NEAR(a.statistic, b.statistic, 1e-8);
    EXPECT_EQ(a.mp_rank, 24);
}

TEST(RankStat, PerLagMatchesOmegaOracle) {
    const auto x = simulate(reference_null_spec(), 300, make_named_sampler("mixture"), 7).series;
    const Grid g = make_grid(300, 2, std::nullopt, 1);
    const auto s = ScoreSpec::named(ScoreKind::spearman, 2);
    const QmleFit fit = qmle(x, 1, 1);
    const KMatrix k = estimate_K(x, fit.theta_hat, s, g);
    const REstimate est = r_estimate_one_step(x, fit.theta_hat, s, g, k);
    const int m = 6;
    const TestReport r = rank_stat(est, s, m, k, RankForm::per_lag);
    const WeightMatrices w = weight_matrices(est.theta_tilde, k.K, s.D, m);
    double q = 0.0;
    for (int i = 1; i <= m; ++i) {
        const Vector gi = vec(oracle::naive_cross_cov(est.at_estimate.j1, est.at_estimate.j2, i));
        q += (300 - i) * gi.dot(w.Omega[i - 1].completeOrthogonalDecomposition().pseudoInverse() * gi);
        EXPECT_NEAR(r.per_lag[i - 1], (300 - i) * gi.dot(w.Omega[i - 1].completeOrthogonalDecomposition().pseudoInverse() * gi), 1e-8);
    }
    EXPECT_NEAR(r.statistic, q, 1e-8 * (1.0 + q));
}

TEST(RankStat, StackedFormMatchesPseudoInverseOracle) {
    const auto x = simulate(reference_null_spec(), 300, make_named_sampler("normal"), 8).series;
    const Grid g = make_grid(300, 2, std::nullopt, 1);
    const auto s = ScoreSpec::named(ScoreKind::vdw, 2);
    const QmleFit fit = qmle(x, 1, 1);
    const KMatrix k = estimate_K(x, fit.theta_hat, s, g);
    const REstimate est = r_estimate_one_step(x, fit.theta_hat, s, g, k);
    const int m = 8;
    const TestReport r = rank_stat(est, s, m, k);
    const WeightMatrices w = weight_matrices(est.theta_tilde, k.K, s.D, m);
    const Matrix v = w.E * kron(Matrix::Identity(m, m), s.D) * w.E.transpose();
    Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (v + v.transpose()));
    const double cutoff = 1e-10 * es.eigenvalues().cwiseAbs().maxCoeff();
    Matrix pinv = Matrix::Zero(v.rows(), v.cols());
    int rank = 0;
    for (int i = 0; i < v.rows(); ++i) {
        if (std::abs(es.eigenvalues()(i)) > cutoff) {
            pinv += es.eigenvectors().col(i) * es.eigenvectors().col(i).transpose() / es.eigenvalues()(i);
            ++rank;
        }
    }
    const Vector gamma = stack_cross_cov(est.at_estimate.j1, est.at_estimate.j2, m);
    EXPECT_NEAR(r.statistic, 300.0 * gamma.dot(pinv * gamma), 1e-8 * r.statistic);
    EXPECT_EQ(r.mp_rank, rank);
    EXPECT_EQ(r.mp_rank, r.df);
    EXPECT_TRUE(r.warnings.empty());
    EXPECT_EQ(r.scores, ScoreKind::vdw);
}

TEST(RankStat, OrthogonalInvariance) {
    // Rotating data, coefficients and grid directions by a common Q leaves
    // ranks unchanged and the statistic invariant (K = I is rotation invariant).
    const Matrix q = oracle::random_orthogonal(2, 5);
    const VarmaSpec spec = reference_null_spec();
    VarmaSpec rotated = spec;
    rotated.ar[0] = q * spec.ar[0] * q.transpose();
    rotated.ma[0] = q * spec.ma[0] * q.transpose();
    const auto x = simulate(spec, 240, make_named_sampler("skewt"), 9).series;
    const SeriesData xq{x.values * q.transpose()};
    const Grid g = make_grid(240, 2, 12, 3);
    const Grid gq = grid_from_directions(g.n_R, g.directions * q.transpose(), g.n_0);
    const auto s = ScoreSpec::named(ScoreKind::vdw, 2);
    const auto a = rank_residuals(x, ThetaVector::from_spec(spec), s, g);
    const auto b = rank_residuals(xq, ThetaVector::from_spec(rotated), s, gq);
    EXPECT_EQ(a.map.ranks, b.map.ranks);
    EXPECT_EQ(a.map.assignment, b.map.assignment);
    const Matrix k = Matrix::Identity(4, 4);
    for (int m : {5, 10}) {
        const double qa = rank_stat_from_scores(a.j1, a.j2, ThetaVector::from_spec(spec), k, s, m).statistic;
        const double qb = rank_stat_from_scores(b.j1, b.j2, ThetaVector::from_spec(rotated), k, s, m).statistic;
        EXPECT_NEAR(qa, qb, 1e-9 * qa);
    }
}
