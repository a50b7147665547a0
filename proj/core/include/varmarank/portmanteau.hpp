#pragma once

#include "varmarank/estimation.hpp"
#include "varmarank/linalg.hpp"
#include "varmarank/scores.hpp"
#include "varmarank/varma.hpp"

#include <optional>
#include <string>
#include <vector>

namespace varmarank {

enum class TestMethod { gaussian, rank };

std::string to_string(TestMethod method);
TestMethod test_method_from_string(const std::string& name);

struct TestReport {
    double statistic = 0.0;
    int m = 0;
    int df = 0;
    double p_value = 1.0;
    TestMethod method = TestMethod::gaussian;
    std::optional<ScoreKind> scores;
    std::vector<double> per_lag;  // lag-by-lag quadratic forms
    int mp_rank = 0;              // numerical rank of the inverted weighting matrix
    std::vector<std::string> warnings;
};

/// d^2 (m - p - q); throws std::invalid_argument when not positive.
int degrees_of_freedom(int d, int m, int p, int q);

/// Upper tail of the chi-square law with df degrees of freedom.
double p_value(double statistic, int df);

struct GaussianOptions {
    /// Use -sigma^{-1} C_i in place of C_i inside the (sigma (x) sigma)^{-1}
    /// quadratic form. Off by default.
    bool literal_normalization = false;
};

/// sum_{i<=m} (n-i) vec(C_i)' (sigma^{-1} (x) sigma^{-1}) vec(C_i) with
/// C_i = (n-i)^{-1} sum_{t>i} Z_t Z_{t-i}'.
TestReport gaussian_stat_from_residuals(const Matrix& z, const Matrix& sigma, int m, int p, int q,
                                        const GaussianOptions& options = {});

TestReport gaussian_stat(const SeriesData& series, const QmleFit& fit, int m, const GaussianOptions& options = {});

struct WeightMatrices {
    Matrix E;                  // m d^2 x m d^2
    std::vector<Matrix> Omega;  // m blocks, d^2 x d^2
    std::vector<Matrix> W;      // m blocks, d^2 x m d^2
};

/// With C = (c_1, ..., c_m) and U = sum_{i<=m} c_i K c_i':
///   E   = I - (I_m (x) K) C' U^{-1} C,
///   W_i = (e_i' (x) D^{1/2}) - K c_i' U^{-1} C (I_m (x) D^{1/2}),
///   Omega_i = W_i W_i'.
/// Stacking the W_i gives E (I_m (x) D^{1/2}), so Omega_i is the i-th
/// diagonal block of E (I_m (x) D) E'.
WeightMatrices weight_matrices(const ThetaVector& theta, const Matrix& K, const Matrix& D, int m);

enum class RankForm {
    stacked,  // n G' (E (I (x) D) E')^- G
    per_lag,  // sum_i (n-i) vec(G_i)' Omega_i^- vec(G_i)
};

/// Rank statistic from score matrices at the estimate. per_lag is always
/// filled from the Omega_i form; the statistic follows `form`.
TestReport rank_stat_from_scores(const Matrix& j1, const Matrix& j2, const ThetaVector& theta, const Matrix& K,
                                 const ScoreSpec& scores, int m, RankForm form = RankForm::stacked);

TestReport rank_stat(const REstimate& estimate, const ScoreSpec& scores, int m, const KMatrix& K_hat,
                     RankForm form = RankForm::stacked);

}  // namespace varmarank
