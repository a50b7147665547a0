#pragma once

#include "varmarank/center_outward.hpp"
#include "varmarank/linalg.hpp"

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace varmarank {

enum class ScoreKind { sign, spearman, vdw, custom };

std::string to_string(ScoreKind kind);
ScoreKind score_kind_from_string(const std::string& name);

/// Map from a point of the open unit ball to R^d.
using ScoreFunction = std::function<Vector(const Vector&)>;

/// Pair of score functions (J1, J2) together with their moment matrix
///   D = E[J2 J2'] (x) E[J1 J1'] - E[J2] E[J2]' (x) E[J1] E[J1]'
/// under the spherical uniform law on the ball.
struct ScoreSpec {
    ScoreKind kind = ScoreKind::vdw;
    int d = 2;
    ScoreFunction J1;
    ScoreFunction J2;
    Matrix D;
    Matrix D_se;  // Monte Carlo standard errors (zero for closed forms)
    bool mean_zero = true;

    /// sign: u / |u|; spearman: u; vdw: sqrt(chi2_d quantile(|u|)) u / |u|.
    static ScoreSpec named(ScoreKind kind, int d);

    /// D estimated by Monte Carlo over the spherical uniform law.
    static ScoreSpec custom(int d, ScoreFunction j1, ScoreFunction j2, std::int64_t draws = 200000,
                            std::uint64_t seed = 1);
};

/// Score of the grid point with the given rank and sign. Rank 0 (the
/// origin) gives the zero vector for every kind.
Vector score_eval(const ScoreSpec& spec, int rank, const Vector& sign, int n_R, int which);

/// n x d matrix whose row t is score_eval(spec, ranks[t], signs.row(t), n_R, which).
Matrix score_matrix(const ScoreSpec& spec, const std::vector<int>& ranks, const Matrix& signs, int n_R,
                    int which);

/// Closed-form D for the named kinds: I/d^2, I/(9 d^2) and I.
Matrix score_moments(ScoreKind kind, int d);

struct MomentEstimate {
    Matrix D;
    Matrix se;  // entrywise standard errors
    std::int64_t draws = 0;
};

/// Unbiased Monte Carlo estimate of D from independent spherical uniform
/// draws, with entrywise standard errors.
MomentEstimate score_moments_mc(const ScoreFunction& j1, const ScoreFunction& j2, int d,
                                std::int64_t draws, std::uint64_t seed);

/// Mean of J_which over all grid points. Antipodal pairs are summed first,
/// so odd scores give an exact zero on symmetric grids.
Vector grid_score_mean(const ScoreSpec& spec, const Grid& grid, int which);

/// n^{-1} sum over grid points of |J_which|^2.
double grid_score_energy(const ScoreSpec& spec, const Grid& grid, int which);

/// Finite-grid counterpart of D: M2 (x) M1 - (m2 m2') (x) (m1 m1'), with
/// M_l and m_l the second moment and mean of J_l over the grid points.
Matrix grid_score_moments(const ScoreSpec& spec, const Grid& grid);

/// Copy of spec whose D is grid_score_moments(spec, grid).
ScoreSpec with_grid_moments(const ScoreSpec& spec, const Grid& grid);

struct RankCrossCov {
    int lag = 0;
    Matrix matrix;  // (n - lag)^{-1} sum_{t > lag} J1_t J2_{t-lag}'
    int n_terms = 0;
};

/// Cross-covariance of the score rows: rows of j1 and j2 are time points.
RankCrossCov cross_cov(const Matrix& j1, const Matrix& j2, int lag);

RankCrossCov rank_cross_cov(const std::vector<int>& ranks, const Matrix& signs, const ScoreSpec& spec,
                            int lag, int n_R);

/// n^{-1/2} (sqrt(n-1) vec G_1', ..., sqrt(n-m) vec G_m')' of length m d^2.
Vector stack_cross_cov(const Matrix& j1, const Matrix& j2, int m);

Vector stack_cross_cov(const std::vector<int>& ranks, const Matrix& signs, const ScoreSpec& spec, int m,
                       int n_R);

/// Inverse of stack_cross_cov: the m cross-covariance matrices.
std::vector<Matrix> unstack_cross_cov(const Vector& stacked, int d, int n);

}  // namespace varmarank
