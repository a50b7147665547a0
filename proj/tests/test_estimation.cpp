#include "oracles.hpp"
#include "varmarank/estimation.hpp"
#include "varmarank/innovations.hpp"
#include "varmarank/montecarlo.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace varmarank;

namespace {

VarmaSpec var1() {
    VarmaSpec s = reference_null_spec();
    s.ma.clear();
    return s;
}

SeriesData null_series(int n, std::uint64_t seed, const char* density = "normal") {
    return simulate(reference_null_spec(), n, make_named_sampler(density), seed).series;
}

// Conditional Gaussian log-likelihood with fixed sigma, up to constants.
double loglik(const SeriesData& s, const ThetaVector& theta, const Matrix& sigma) {
    const Matrix z = residuals(s, theta).z;
    const Matrix sinv = sigma.inverse();
    double out = 0.0;
    for (Eigen::Index t = 0; t < z.rows(); ++t) out -= 0.5 * z.row(t) * sinv * z.row(t).transpose();
    return out;
}

}  // namespace

TEST(Qmle, PureVarEqualsLeastSquares) {
    for (std::uint64_t seed : {1, 2, 3}) {
        const auto x = simulate(var1(), 400, make_named_sampler("skewt"), seed).series;
        const QmleFit fit = qmle(x, 1, 0);
        ASSERT_TRUE(fit.converged) << fit.message;
        const Matrix a = oracle::var_ols(x.values, 1)[0];
        EXPECT_LT((fit.theta_hat.to_spec().ar[0] - a).cwiseAbs().maxCoeff(), 1e-8);
    }
}

TEST(Qmle, PureVarTwoEqualsLeastSquares) {
    VarmaSpec s = var1();
    s.ar.push_back(0.2 * Matrix::Identity(2, 2));
    const auto x = simulate(s, 600, make_named_sampler("normal"), 8).series;
    const QmleFit fit = qmle(x, 2, 0);
    ASSERT_TRUE(fit.converged);
    // Zero pre-sample values make the t = 2 row a regression on (X_1, 0).
    Matrix padded = Matrix::Zero(x.values.rows() + 1, 2);
    padded.bottomRows(x.values.rows()) = x.values;
    const auto a = oracle::var_ols(padded, 2);
    const VarmaSpec est = fit.theta_hat.to_spec();
    for (int i = 0; i < 2; ++i) EXPECT_LT((est.ar[i] - a[i]).cwiseAbs().maxCoeff(), 1e-8);
}

TEST(Qmle, WhiteNoiseHasEmptyTheta) {
    const auto x = simulate(VarmaSpec{2, {}, {}}, 100, make_named_sampler("normal"), 4).series;
    const QmleFit fit = qmle(x, 0, 0);
    EXPECT_EQ(fit.theta_hat.values.size(), 0);
    EXPECT_TRUE(fit.converged);
    EXPECT_LT((fit.sigma_hat - x.values.transpose() * x.values / 100.0).norm(), 1e-15);
}

TEST(Qmle, ConvergedFitSatisfiesInvariants) {
    for (const char* density : {"normal", "mixture", "skewt"}) {
        const auto x = null_series(500, 12, density);
        const QmleFit fit = qmle(x, 1, 1);
        ASSERT_TRUE(fit.converged) << density << ": " << fit.message;
        EXPECT_LT(gaussian_score(x, fit.theta_hat, fit.sigma_hat).norm(), 1e-8 * 8);
        EXPECT_LT((fit.sigma_hat - fit.sigma_hat.transpose()).norm(), 1e-12);
        EXPECT_GT(Eigen::SelfAdjointEigenSolver<Matrix>(fit.sigma_hat).eigenvalues().minCoeff(), 0.0);
        EXPECT_TRUE(validate_spec(fit.theta_hat.to_spec()).pass);
        EXPECT_NEAR(fit.log_det_sigma, std::log(fit.sigma_hat.determinant()), 1e-10);
    }
}

TEST(Qmle, RejectsBadInit) {
    const auto x = null_series(200, 1);
    QmleOptions opts;
    opts.init = ThetaVector::from_spec(var1());
    EXPECT_THROW(qmle(x, 1, 1, opts), std::invalid_argument);
    VarmaSpec bad = reference_null_spec();
    bad.ar[0] = Matrix::Identity(2, 2);
    opts.init = ThetaVector::from_spec(bad);
    EXPECT_THROW(qmle(x, 1, 1, opts), std::invalid_argument);
}

TEST(HannanRissanen, ValidAndClose) {
    const auto x = null_series(4000, 3);
    const ThetaVector t = hannan_rissanen(x, 1, 1);
    EXPECT_TRUE(validate_spec(t.to_spec()).pass);
    EXPECT_LT((t.values - ThetaVector::from_spec(reference_null_spec()).values).norm(), 0.2);
}

TEST(GaussianScore, MatchesCoeffBlockRouteAndFiniteDifference) {
    const auto x = null_series(300, 5, "mixture");
    ThetaVector theta = ThetaVector::from_spec(reference_null_spec());
    theta.values(1) += 0.05;
    theta.values(6) -= 0.05;
    const Matrix z = residuals(x, theta).z;
    const Matrix sigma = residual_covariance(z);
    const Vector g = gaussian_score(x, theta, sigma);

    // Route 2: n^{-1/2} sum_i c_i (n - i) vec(sigma^{-1} C_i) with all n - 1 blocks.
    const int n = 300;
    const auto cb = coeff_blocks(theta, n - 1);
    Vector route2 = Vector::Zero(8);
    for (int i = 1; i < n; ++i) {
        route2 += cb.c[i - 1] * ((n - i) * vec(sigma.inverse() * oracle::naive_cross_cov(z, z, i)));
    }
    route2 /= std::sqrt(static_cast<double>(n));
    EXPECT_LT((g - route2).norm(), 1e-9 * (1.0 + g.norm()));

    // Route 3: central differences of the log-likelihood.
    Vector fd(8);
    const double h = 1e-6;
    for (int k = 0; k < 8; ++k) {
        ThetaVector tp = theta, tm = theta;
        tp.values(k) += h;
        tm.values(k) -= h;
        fd(k) = (loglik(x, tp, sigma) - loglik(x, tm, sigma)) / (2 * h) / std::sqrt(static_cast<double>(n));
    }
    EXPECT_LT((g - fd).norm(), 1e-5 * (1.0 + g.norm()));
}

TEST(GaussianCentralSequence, NegatedWeightedCrossCovariances) {
    const auto x = null_series(250, 6);
    const ThetaVector theta = ThetaVector::from_spec(reference_null_spec());
    const Matrix z = residuals(x, theta).z;
    const Matrix sigma = residual_covariance(z);
    const int m = 30;
    const auto cb = coeff_blocks(theta, m);
    Vector expected = Vector::Zero(8);
    for (int i = 1; i <= m; ++i) {
        expected -= std::sqrt(250.0 - i) * cb.c[i - 1] * vec(sigma.inverse() * oracle::naive_cross_cov(z, z, i));
    }
    EXPECT_LT((gaussian_central_sequence(x, theta, sigma, m) - expected).norm(), 1e-12);
}

TEST(RankCentralSequence, WhiteNoiseIsEmpty) {
    const auto x = simulate(VarmaSpec{2, {}, {}}, 100, make_named_sampler("normal"), 4).series;
    const Grid g = make_grid(100, 2, 10, 1);
    EXPECT_EQ(rank_central_sequence(x, ThetaVector{{2, 0, 0}, Vector(0)}, ScoreSpec::named(ScoreKind::vdw, 2), g).size(), 0);
}

TEST(RankCentralSequence, SingleTerm) {
    const auto x = null_series(200, 7);
    const ThetaVector theta = ThetaVector::from_spec(reference_null_spec());
    const Grid g = make_grid(200, 2, std::nullopt, 1);
    const auto s = ScoreSpec::named(ScoreKind::spearman, 2);
    const auto rr = rank_residuals(x, theta, s, g);
    const Vector expected = coeff_blocks(theta, 1).c[0] * (std::sqrt(199.0) * vec(cross_cov(rr.j1, rr.j2, 1).matrix));
    EXPECT_LT((rank_central_sequence(x, theta, s, g, 1) - expected).norm(), 1e-13);
}

TEST(RankCentralSequence, AutoTruncationMatchesFullSum) {
    const auto x = null_series(400, 8, "skewt");
    const ThetaVector theta = ThetaVector::from_spec(reference_null_spec());
    const Grid g = make_grid(400, 2, std::nullopt, 1);
    const auto s = ScoreSpec::named(ScoreKind::vdw, 2);
    const Vector full = rank_central_sequence(x, theta, s, g, 399);
    const Vector autod = rank_central_sequence(x, theta, s, g);
    EXPECT_LT((full - autod).norm(), 1e-8);
    EXPECT_LT(truncated_blocks(theta, 400).m(), 399);
}

TEST(EstimateK, ReproducibleAndFlagged) {
    const auto x = null_series(30, 9);
    const Grid g = make_grid(30, 2, std::nullopt, 1);
    const auto s = ScoreSpec::named(ScoreKind::vdw, 2);
    const ThetaVector theta = ThetaVector::from_spec(reference_null_spec());
    const KMatrix a = estimate_K(x, theta, s, g);
    const KMatrix b = estimate_K(x, theta, s, g);
    EXPECT_EQ(a.K, b.K);
    EXPECT_TRUE(a.high_variance);
    EXPECT_FALSE(a.warning.empty());
    EXPECT_DOUBLE_EQ(a.perturbation_scale, 1.0 / std::sqrt(30.0));
    EXPECT_TRUE(a.K.allFinite());
    EXPECT_FALSE(estimate_K(null_series(200, 9), theta, s, make_grid(200, 2, std::nullopt, 1)).high_variance);
}

TEST(EstimateK, BaseResidualsGiveSameResult) {
    const auto x = null_series(200, 10);
    const Grid g = make_grid(200, 2, std::nullopt, 1);
    const auto s = ScoreSpec::named(ScoreKind::sign, 2);
    const ThetaVector theta = ThetaVector::from_spec(reference_null_spec());
    const auto base = rank_residuals(x, theta, s, g);
    EXPECT_EQ(estimate_K(x, theta, s, g).K, estimate_K(x, theta, s, g, &base).K);
}

TEST(EstimateK, NoParametersRejected) {
    const auto x = simulate(VarmaSpec{2, {}, {}}, 50, make_named_sampler("normal"), 4).series;
    EXPECT_THROW(estimate_K(x, ThetaVector{{2, 0, 0}, Vector(0)}, ScoreSpec::named(ScoreKind::vdw, 2),
                            make_grid(50, 2, 5, 0)),
                 std::invalid_argument);
}

TEST(REstimate, OneStepFormulaHoldsExactly) {
    const auto x = null_series(300, 11, "mixture");
    const Grid g = make_grid(300, 2, std::nullopt, 1);
    const auto s = ScoreSpec::named(ScoreKind::vdw, 2);
    const QmleFit fit = qmle(x, 1, 1);
    const KMatrix k = estimate_K(x, fit.theta_hat, s, g);
    const REstimate est = r_estimate_one_step(x, fit.theta_hat, s, g, k);
    const Vector step = est.upsilon_hat.fullPivLu().solve(est.central_seq_at_bar) / std::sqrt(300.0);
    EXPECT_LT((est.theta_tilde.values - fit.theta_hat.values - step).norm(), 1e-12);
    EXPECT_GE(est.condition_number, 1.0);
    EXPECT_EQ(est.central_seq_at_estimate.size(), 8);

    Matrix ups = Matrix::Zero(8, 8);
    for (const auto& c : truncated_blocks(fit.theta_hat, 300).c) ups += c * k.K * c.transpose();
    EXPECT_LT((est.upsilon_hat - ups).norm(), 1e-12);
}

TEST(REstimate, ZeroCentralSequenceIsFixedPoint) {
    // With K = I and the central sequence forced to zero via a custom score
    // that vanishes identically, theta_tilde equals theta_bar.
    const auto x = null_series(100, 12);
    const Grid g = make_grid(100, 2, std::nullopt, 1);
    auto zero = [](const Vector& v) { return Vector(Vector::Zero(v.size())); };
    const auto s = ScoreSpec::custom(2, zero, zero, 1000, 1);
    const ThetaVector theta = ThetaVector::from_spec(reference_null_spec());
    const REstimate est = r_estimate_one_step(x, theta, s, g, KMatrix{Matrix::Identity(4, 4), 0.1, false, ""});
    EXPECT_EQ(est.central_seq_at_bar.norm(), 0.0);
    EXPECT_EQ(est.theta_tilde.values, theta.values);
}

TEST(REstimate, SingularUpsilonReported) {
    const auto x = null_series(100, 13);
    const Grid g = make_grid(100, 2, std::nullopt, 1);
    const ThetaVector theta = ThetaVector::from_spec(reference_null_spec());
    EXPECT_THROW(r_estimate_one_step(x, theta, ScoreSpec::named(ScoreKind::vdw, 2), g,
                                     KMatrix{Matrix::Zero(4, 4), 0.1, false, ""}),
                 std::runtime_error);
}

TEST(REstimate, DiscretizationRoundsToLattice) {
    const auto x = null_series(400, 14);
    const Grid g = make_grid(400, 2, std::nullopt, 1);
    const auto s = ScoreSpec::named(ScoreKind::vdw, 2);
    const QmleFit fit = qmle(x, 1, 1);
    REstimateOptions opts;
    opts.discretize = 0.5;
    const REstimate est = r_estimate_one_step(x, fit.theta_hat, s, g, estimate_K(x, fit.theta_hat, s, g), opts);
    const double h = 0.5 / 20.0;
    for (int k = 0; k < 8; ++k) {
        EXPECT_NEAR(est.theta_bar.values(k) / h, std::round(est.theta_bar.values(k) / h), 1e-9);
        EXPECT_LE(std::abs(est.theta_bar.values(k) - fit.theta_hat.values(k)), h / 2 + 1e-15);
    }
}
