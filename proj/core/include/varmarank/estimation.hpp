#pragma once

#include "varmarank/center_outward.hpp"
#include "varmarank/linalg.hpp"
#include "varmarank/scores.hpp"
#include "varmarank/varma.hpp"

#include <optional>
#include <string>

namespace varmarank {

/// Two-stage regression start: a long VAR gives innovation proxies, then
/// X_t is regressed on its own lags and the lagged proxies. Coefficients
/// are shrunk towards zero until the model is stationary and invertible.
/// long_order = 0 picks max(p + q + 1, ceil(1.5 log n)).
ThetaVector hannan_rissanen(const SeriesData& series, int p, int q, int long_order = 0);

struct QmleOptions {
    int max_iterations = 200;
    double tolerance = 1e-8;  // multiplied by (p + q) d^2
    int max_halvings = 40;
    std::optional<ThetaVector> init;
};

struct QmleFit {
    ThetaVector theta_hat;
    Matrix sigma_hat;  // n^{-1} sum Z_t Z_t' at theta_hat
    int iterations = 0;
    bool converged = false;
    double final_gradient_norm = 0.0;  // |gaussian_score(theta_hat)|
    double log_det_sigma = 0.0;
    std::string message;
};

/// Conditional Gaussian QMLE (zero pre-sample values) by Gauss-Newton on
/// the exact residual Jacobian, with step halving on invalid iterates or
/// objective increases. Converged when |gaussian_score| < tolerance (p+q)d^2.
QmleFit qmle(const SeriesData& series, int p, int q, const QmleOptions& options = {});

/// Sample covariance n^{-1} sum Z_t Z_t'.
Matrix residual_covariance(const Matrix& z);

/// Exact score of the conditional Gaussian likelihood with covariance sigma,
/// scaled by n^{-1/2}:
///   n^{-1/2} sum_{i=1}^{n-1} c_i (n - i) vec(sigma^{-1} C_i),
/// computed from the residual Jacobian recursion.
Vector gaussian_score(const SeriesData& series, const ThetaVector& theta, const Matrix& sigma);

/// Gaussian central sequence
///   sum_i c_i (n - i)^{1/2} vec(-sigma^{-1} C_i),  C_i = (n-i)^{-1} sum Z_t Z_{t-i}',
/// truncated where the c-blocks fall below 1e-12 (or at m_max).
Vector gaussian_central_sequence(const SeriesData& series, const ThetaVector& theta, const Matrix& sigma,
                                 std::optional<int> m_max = std::nullopt);

/// Residuals, their center-outward map and the two score matrices at theta.
struct RankResiduals {
    Matrix z;
    CenterOutwardMap map;
    Matrix j1;
    Matrix j2;
};

/// warm, if given, holds rank residuals on the same grid at a nearby theta.
RankResiduals rank_residuals(const SeriesData& series, const ThetaVector& theta, const ScoreSpec& scores,
                             const Grid& grid, const RankResiduals* warm = nullptr);

/// sum_{i=1}^{m} c_i (n - i)^{1/2} vec(G_i) with G_i the score
/// cross-covariances; m = min(blocks, n - 1).
Vector rank_central_sequence(const CoeffBlocks& blocks, const Matrix& j1, const Matrix& j2);

/// Rank-based central sequence at theta; m_max defaults to the lag where
/// the c-blocks fall below 1e-12.
Vector rank_central_sequence(const SeriesData& series, const ThetaVector& theta, const ScoreSpec& scores,
                             const Grid& grid, std::optional<int> m_max = std::nullopt);

/// c-blocks up to the adaptive truncation lag (at most n - 1).
CoeffBlocks truncated_blocks(const ThetaVector& theta, int n);

struct KMatrix {
    Matrix K;                         // d^2 x d^2
    double perturbation_scale = 0.0;  // n^{-1/2}
    bool high_variance = false;       // n < 10 d^2
    std::string warning;
};

/// Finite-difference estimate of the cross-information matrix: column j is
///   (n-1)^{1/2} [vec G_1(theta + n^{-1/2} tau_j) - vec G_1(theta)],
///   tau_j = -c_1 (c_1' c_1)^{-1} e_j,
/// with every map computed on the same grid. base, if given, must hold the
/// rank residuals at theta.
KMatrix estimate_K(const SeriesData& series, const ThetaVector& theta, const ScoreSpec& scores, const Grid& grid,
                   const RankResiduals* base = nullptr);

struct REstimateOptions {
    std::optional<double> discretize;  // round theta_bar to a c n^{-1/2} lattice
};

struct REstimate {
    ThetaVector theta_bar;  // after optional discretization
    ThetaVector theta_tilde;
    Matrix upsilon_hat;  // sum_i c_i K c_i'
    double condition_number = 0.0;
    Vector central_seq_at_bar;
    Vector central_seq_at_estimate;  // rank central sequence at theta_tilde
    RankResiduals at_estimate;
};

/// theta_tilde = theta_bar + n^{-1/2} upsilon^{-1} Delta(theta_bar).
/// base, if given, must hold the rank residuals at theta_bar.
REstimate r_estimate_one_step(const SeriesData& series, const ThetaVector& theta_bar, const ScoreSpec& scores,
                              const Grid& grid, const KMatrix& K_hat, const REstimateOptions& options = {},
                              const RankResiduals* base = nullptr);

}  // namespace varmarank
