#include "varmarank/scores.hpp"

#include "varmarank/special.hpp"

#include <cmath>
#include <random>
#include <stdexcept>

namespace varmarank {

namespace {

double radial_factor(ScoreKind kind, double radius, int d) {
    switch (kind) {
        case ScoreKind::sign: return 1.0;
        case ScoreKind::spearman: return radius;
        case ScoreKind::vdw: return std::sqrt(chi_square_quantile(radius, d));
        case ScoreKind::custom: break;
    }
    throw std::logic_error("radial_factor: custom scores have no radial form");
}

ScoreFunction radial_score(ScoreKind kind, int d) {
    return [kind, d](const Vector& u) -> Vector {
        const double r = u.norm();
        if (r == 0.0) return Vector::Zero(u.size());
        return (radial_factor(kind, r, d) / r) * u;
    };
}

void check_which(int which) {
    if (which != 1 && which != 2) throw std::invalid_argument("score index must be 1 or 2");
}

const ScoreFunction& pick(const ScoreSpec& spec, int which) {
    check_which(which);
    return which == 1 ? spec.J1 : spec.J2;
}

Vector draw_spherical_uniform(int d, std::mt19937_64& rng, std::normal_distribution<double>& normal,
                              std::uniform_real_distribution<double>& unif) {
    Vector u(d);
    double norm = 0.0;
    while (norm == 0.0) {
        for (int k = 0; k < d; ++k) u(k) = normal(rng);
        norm = u.norm();
    }
    return (unif(rng) / norm) * u;
}

}  // namespace

std::string to_string(ScoreKind kind) {
    switch (kind) {
        case ScoreKind::sign: return "sign";
        case ScoreKind::spearman: return "spearman";
        case ScoreKind::vdw: return "vdw";
        case ScoreKind::custom: return "custom";
    }
    return "unknown";
}

ScoreKind score_kind_from_string(const std::string& name) {
    if (name == "sign") return ScoreKind::sign;
    if (name == "spearman") return ScoreKind::spearman;
    if (name == "vdw" || name == "van_der_waerden") return ScoreKind::vdw;
    if (name == "custom") return ScoreKind::custom;
    throw std::invalid_argument("unknown score kind '" + name + "'");
}

ScoreSpec ScoreSpec::named(ScoreKind kind, int d) {
    if (kind == ScoreKind::custom) throw std::invalid_argument("ScoreSpec::named: use ScoreSpec::custom");
    if (d < 1) throw std::invalid_argument("ScoreSpec::named: d must be positive");
    ScoreSpec s;
    s.kind = kind;
    s.d = d;
    s.J1 = radial_score(kind, d);
    s.J2 = s.J1;
    s.D = score_moments(kind, d);
    s.D_se = Matrix::Zero(d * d, d * d);
    s.mean_zero = true;
    return s;
}

ScoreSpec ScoreSpec::custom(int d, ScoreFunction j1, ScoreFunction j2, std::int64_t draws, std::uint64_t seed) {
    if (d < 1) throw std::invalid_argument("ScoreSpec::custom: d must be positive");
    if (!j1 || !j2) throw std::invalid_argument("ScoreSpec::custom: empty score function");
    ScoreSpec s;
    s.kind = ScoreKind::custom;
    s.d = d;
    s.J1 = std::move(j1);
    s.J2 = std::move(j2);
    auto est = score_moments_mc(s.J1, s.J2, d, draws, seed);
    s.D = std::move(est.D);
    s.D_se = std::move(est.se);
    s.mean_zero = false;
    return s;
}

Vector score_eval(const ScoreSpec& spec, int rank, const Vector& sign, int n_R, int which) {
    check_which(which);
    if (n_R < 1) throw std::invalid_argument("score_eval: n_R must be positive");
    if (rank < 0 || rank > n_R) {
        throw std::invalid_argument("score_eval: rank " + std::to_string(rank) + " outside 0.." + std::to_string(n_R));
    }
    if (sign.size() != spec.d) throw std::invalid_argument("score_eval: sign has wrong dimension");
    if (rank == 0) return Vector::Zero(spec.d);
    const double radius = static_cast<double>(rank) / (n_R + 1);
    if (spec.kind == ScoreKind::custom) return pick(spec, which)(radius * sign);
    return radial_factor(spec.kind, radius, spec.d) * sign;
}

Matrix score_matrix(const ScoreSpec& spec, const std::vector<int>& ranks, const Matrix& signs, int n_R,
                    int which) {
    check_which(which);
    const auto n = static_cast<Eigen::Index>(ranks.size());
    if (signs.rows() != n || signs.cols() != spec.d) throw std::invalid_argument("score_matrix: shape mismatch");
    Matrix out = Matrix::Zero(n, spec.d);
    if (spec.kind == ScoreKind::custom) {
        for (Eigen::Index t = 0; t < n; ++t) {
            out.row(t) = score_eval(spec, ranks[static_cast<std::size_t>(t)], signs.row(t).transpose(), n_R, which)
                             .transpose();
        }
        return out;
    }
    std::vector<double> factor(static_cast<std::size_t>(n_R) + 1, 0.0);
    for (int r = 1; r <= n_R; ++r) {
        factor[static_cast<std::size_t>(r)] = radial_factor(spec.kind, static_cast<double>(r) / (n_R + 1), spec.d);
    }
    for (Eigen::Index t = 0; t < n; ++t) {
        const int r = ranks[static_cast<std::size_t>(t)];
        if (r < 0 || r > n_R) throw std::invalid_argument("score_matrix: rank out of range");
        out.row(t) = factor[static_cast<std::size_t>(r)] * signs.row(t);
    }
    return out;
}

Matrix score_moments(ScoreKind kind, int d) {
    if (d < 1) throw std::invalid_argument("score_moments: d must be positive");
    const int d2 = d * d;
    const Matrix eye = Matrix::Identity(d2, d2);
    switch (kind) {
        case ScoreKind::sign: return eye / static_cast<double>(d2);
        case ScoreKind::spearman: return eye / (9.0 * d2);
        case ScoreKind::vdw: return eye;
        case ScoreKind::custom: break;
    }
    throw std::invalid_argument("score_moments: custom scores need score_moments_mc");
}

MomentEstimate score_moments_mc(const ScoreFunction& j1, const ScoreFunction& j2, int d, std::int64_t draws,
                                std::uint64_t seed) {
    if (draws < 2) throw std::invalid_argument("score_moments_mc: need at least two draws");
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    auto draw = [&] { return draw_spherical_uniform(d, rng, normal, unif); };

    // Each term is an unbiased draw of D built from six independent points:
    // (J2(v) J2(v)') (x) (J1(u) J1(u)') - (J2(w1) J2(w2)') (x) (J1(w3) J1(w4)').
    // Every factor is averaged over the coordinate sign flips of its own point
    // (d <= 6); the flips preserve the uniform law on the ball and the points
    // stay independent.
    const int d2 = d * d;
    const int flips = d <= 6 ? 1 << d : 1;
    auto flipped = [d](const Vector& p, int f) {
        Vector q = p;
        for (int c = 0; c < d; ++c)
            if (f >> c & 1) q(c) = -q(c);
        return q;
    };
    auto mean_outer = [&](const ScoreFunction& j, const Vector& p) {
        Matrix acc = Matrix::Zero(d, d);
        for (int f = 0; f < flips; ++f) {
            const Vector v = j(flipped(p, f));
            acc.noalias() += v * v.transpose();
        }
        return Matrix(acc / static_cast<double>(flips));
    };
    auto mean_value = [&](const ScoreFunction& j, const Vector& p) {
        Vector acc = Vector::Zero(d);
        for (int f = 0; f < flips; ++f) acc += j(flipped(p, f));
        return Vector(acc / static_cast<double>(flips));
    };
    Matrix mean = Matrix::Zero(d2, d2);
    Matrix m2 = Matrix::Zero(d2, d2);
    for (std::int64_t k = 1; k <= draws; ++k) {
        const Matrix a1 = mean_outer(j1, draw());
        const Matrix a2 = mean_outer(j2, draw());
        const Vector b1 = mean_value(j2, draw());
        const Vector b2 = mean_value(j2, draw());
        const Vector b3 = mean_value(j1, draw());
        const Vector b4 = mean_value(j1, draw());
        const Matrix raw = kron(a2, a1) - kron(b1 * b2.transpose(), b3 * b4.transpose());
        const Matrix x = 0.5 * (raw + raw.transpose());
        const Matrix delta = x - mean;
        mean += delta / static_cast<double>(k);
        m2 += delta.cwiseProduct(x - mean);
    }
    MomentEstimate out;
    out.D = mean;
    out.se = (m2 / static_cast<double>(draws - 1) / static_cast<double>(draws)).cwiseSqrt();
    out.draws = draws;
    return out;
}

Vector grid_score_mean(const ScoreSpec& spec, const Grid& grid, int which) {
    check_which(which);
    if (grid.d != spec.d) throw std::invalid_argument("grid_score_mean: dimension mismatch");
    Vector sum = Vector::Zero(spec.d);
    for (int r = 1; r <= grid.n_R; ++r) {
        for (int s = 0; s < grid.n_S; ++s) {
            const int a = grid.antipode[static_cast<std::size_t>(s)];
            if (a >= 0 && a < s) continue;
            Vector term = score_eval(spec, r, grid.directions.row(s).transpose(), grid.n_R, which);
            if (a >= 0) term += score_eval(spec, r, grid.directions.row(a).transpose(), grid.n_R, which);
            sum += term;
        }
    }
    // The n_0 origin points score zero.
    return sum / static_cast<double>(grid.n());
}

double grid_score_energy(const ScoreSpec& spec, const Grid& grid, int which) {
    check_which(which);
    double sum = 0.0;
    for (int i = 0; i < grid.n(); ++i) {
        const int r = grid.radius_index[static_cast<std::size_t>(i)];
        if (r == 0) continue;
        const int s = grid.direction_index[static_cast<std::size_t>(i)];
        sum += score_eval(spec, r, grid.directions.row(s).transpose(), grid.n_R, which).squaredNorm();
    }
    return sum / grid.n();
}

Matrix grid_score_moments(const ScoreSpec& spec, const Grid& grid) {
    if (grid.d != spec.d) throw std::invalid_argument("grid_score_moments: dimension mismatch");
    const int d = spec.d;
    Matrix m1 = Matrix::Zero(d, d);
    Matrix m2 = Matrix::Zero(d, d);
    for (int i = 0; i < grid.n(); ++i) {
        const int r = grid.radius_index[static_cast<std::size_t>(i)];
        if (r == 0) continue;
        const Vector u = grid.directions.row(grid.direction_index[static_cast<std::size_t>(i)]).transpose();
        const Vector a = score_eval(spec, r, u, grid.n_R, 1);
        const Vector b = score_eval(spec, r, u, grid.n_R, 2);
        m1.noalias() += a * a.transpose();
        m2.noalias() += b * b.transpose();
    }
    m1 /= grid.n();
    m2 /= grid.n();
    const Vector mu1 = grid_score_mean(spec, grid, 1);
    const Vector mu2 = grid_score_mean(spec, grid, 2);
    return kron(m2, m1) - kron(mu2 * mu2.transpose(), mu1 * mu1.transpose());
}

ScoreSpec with_grid_moments(const ScoreSpec& spec, const Grid& grid) {
    ScoreSpec out = spec;
    out.D = grid_score_moments(spec, grid);
    out.D_se = Matrix::Zero(out.D.rows(), out.D.cols());
    return out;
}

RankCrossCov cross_cov(const Matrix& j1, const Matrix& j2, int lag) {
    const auto n = j1.rows();
    if (j2.rows() != n || j2.cols() != j1.cols()) throw std::invalid_argument("cross_cov: shape mismatch");
    if (lag < 1 || lag > n - 1) {
        throw std::invalid_argument("cross_cov: lag " + std::to_string(lag) + " outside 1.." + std::to_string(n - 1));
    }
    const auto terms = n - lag;
    RankCrossCov out;
    out.lag = lag;
    out.n_terms = static_cast<int>(terms);
    out.matrix = j1.bottomRows(terms).transpose() * j2.topRows(terms) / static_cast<double>(terms);
    return out;
}

RankCrossCov rank_cross_cov(const std::vector<int>& ranks, const Matrix& signs, const ScoreSpec& spec, int lag,
                            int n_R) {
    return cross_cov(score_matrix(spec, ranks, signs, n_R, 1), score_matrix(spec, ranks, signs, n_R, 2), lag);
}

Vector stack_cross_cov(const Matrix& j1, const Matrix& j2, int m) {
    const auto n = j1.rows();
    if (m < 1 || m > n - 1) throw std::invalid_argument("stack_cross_cov: m must lie in 1..n-1");
    const auto d2 = j1.cols() * j1.cols();
    Vector out(m * d2);
    for (int i = 1; i <= m; ++i) {
        const double w = std::sqrt(static_cast<double>(n - i) / static_cast<double>(n));
        out.segment((i - 1) * d2, d2) = w * vec(cross_cov(j1, j2, i).matrix);
    }
    return out;
}

Vector stack_cross_cov(const std::vector<int>& ranks, const Matrix& signs, const ScoreSpec& spec, int m,
                       int n_R) {
    return stack_cross_cov(score_matrix(spec, ranks, signs, n_R, 1), score_matrix(spec, ranks, signs, n_R, 2), m);
}

std::vector<Matrix> unstack_cross_cov(const Vector& stacked, int d, int n) {
    const int d2 = d * d;
    if (d < 1 || stacked.size() % d2 != 0) throw std::invalid_argument("unstack_cross_cov: bad length");
    const int m = static_cast<int>(stacked.size() / d2);
    if (m > n - 1) throw std::invalid_argument("unstack_cross_cov: m exceeds n-1");
    std::vector<Matrix> out;
    out.reserve(static_cast<std::size_t>(m));
    for (int i = 1; i <= m; ++i) {
        const double w = std::sqrt(static_cast<double>(n - i) / static_cast<double>(n));
        out.push_back(unvec(stacked.segment((i - 1) * d2, d2) / w, d, d));
    }
    return out;
}

}  // namespace varmarank
