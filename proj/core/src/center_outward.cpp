#include "varmarank/center_outward.hpp"

#include "format.hpp"
#include "varmarank/assignment.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <ostream>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <tuple>

namespace varmarank {

namespace {

struct Factorization {
    int n_S;
    int n_0;
};

Factorization factorize(int n, int n_R) {
    const int n_S = n / n_R;
    return {n_S, n - n_R * n_S};
}

bool feasible(int n, int d, int n_R) {
    if (n_R < 1 || n_R > n) return false;
    const auto f = factorize(n, n_R);
    if (f.n_S < 1) return false;
    if (d == 1 && f.n_S > 2) return false;
    return f.n_0 < std::min(n_R, f.n_S);
}

std::string list_radii(const std::vector<int>& radii) {
    std::ostringstream os;
    for (std::size_t k = 0; k < radii.size(); ++k) os << (k ? ", " : "") << radii[k];
    return os.str();
}

Matrix draw_directions(int n_S, int d, bool symmetric, std::uint64_t seed) {
    Matrix u(n_S, d);
    std::mt19937_64 rng(seed);
    if (d == 1) {
        u(0, 0) = 1.0;
        if (n_S == 2) u(1, 0) = -1.0;
        return u;
    }
    if (d == 2) {
        const double step = 2.0 * std::numbers::pi / n_S;
        const double offset = std::uniform_real_distribution<double>(0.0, step)(rng);
        // With n_S even the second half is the exact negation of the first.
        const int base = (n_S % 2 == 0) ? n_S / 2 : n_S;
        for (int s = 0; s < base; ++s) {
            const double a = offset + step * s;
            u(s, 0) = std::cos(a);
            u(s, 1) = std::sin(a);
        }
        for (int s = base; s < n_S; ++s) u.row(s) = -u.row(s - base);
        return u;
    }
    std::normal_distribution<double> normal(0.0, 1.0);
    const int base = symmetric ? n_S / 2 : n_S;
    for (int s = 0; s < base; ++s) {
        double norm = 0.0;
        while (norm < 1e-8) {
            for (int k = 0; k < d; ++k) u(s, k) = normal(rng);
            norm = u.row(s).norm();
        }
        u.row(s) /= norm;
    }
    for (int s = base; s < n_S; ++s) u.row(s) = -u.row(s - base);
    return u;
}

std::vector<int> find_antipodes(const Matrix& u) {
    std::vector<int> out(static_cast<std::size_t>(u.rows()), -1);
    for (Eigen::Index s = 0; s < u.rows(); ++s) {
        for (Eigen::Index k = 0; k < u.rows(); ++k) {
            if (k != s && (u.row(s) + u.row(k)).squaredNorm() == 0.0) {
                out[static_cast<std::size_t>(s)] = static_cast<int>(k);
                break;
            }
        }
    }
    return out;
}

}  // namespace

std::vector<int> feasible_radii(int n, int d) {
    if (n < 1) throw std::invalid_argument("feasible_radii: n must be positive");
    std::vector<int> out;
    for (int r = 1; r <= n; ++r) {
        if (feasible(n, d, r)) out.push_back(r);
    }
    return out;
}

int default_radii(int n, int d) {
    const auto radii = feasible_radii(n, d);
    if (radii.empty()) throw std::invalid_argument("default_radii: no feasible factorization");
    const double root = std::sqrt(static_cast<double>(n));
    int best = -1;
    auto key = [&](int r) {
        const auto f = factorize(n, r);
        return std::make_tuple(f.n_0 != 0, f.n_S % 2 != 0, std::fabs(r - root), r);
    };
    for (int r : radii) {
        if (r < 0.5 * root || r > 2.0 * root) continue;
        if (best < 0 || key(r) < key(best)) best = r;
    }
    if (best < 0) {
        for (int r : radii) {
            if (best < 0 || key(r) < key(best)) best = r;
        }
    }
    return best;
}

Grid make_grid(int n, int d, std::optional<int> n_R, std::uint64_t seed, std::optional<bool> symmetric) {
    if (n < 1) throw std::invalid_argument("make_grid: n must be positive");
    if (d < 1) throw std::invalid_argument("make_grid: d must be positive");
    const int radii = n_R ? *n_R : default_radii(n, d);
    if (!feasible(n, d, radii)) {
        throw std::invalid_argument("make_grid: n_R = " + std::to_string(radii) + " does not factorize n = " +
                                    std::to_string(n) + " with n_0 < min(n_R, n_S); feasible n_R: " +
                                    list_radii(feasible_radii(n, d)));
    }
    const auto f = factorize(n, radii);
    const bool sym = symmetric ? *symmetric : (f.n_S % 2 == 0);
    if (sym && f.n_S % 2 != 0) {
        throw std::invalid_argument("make_grid: a symmetric grid needs an even number of directions, got n_S = " +
                                    std::to_string(f.n_S));
    }
    Grid g = grid_from_directions(radii, draw_directions(f.n_S, d, sym, seed), f.n_0);
    g.symmetric = sym;
    return g;
}

Grid grid_from_directions(int n_R, const Matrix& directions, int n_0) {
    if (n_R < 1) throw std::invalid_argument("grid_from_directions: n_R must be positive");
    if (directions.rows() < 1 || directions.cols() < 1) {
        throw std::invalid_argument("grid_from_directions: need at least one direction");
    }
    if (n_0 < 0) throw std::invalid_argument("grid_from_directions: n_0 must be non-negative");
    for (Eigen::Index s = 0; s < directions.rows(); ++s) {
        if (std::fabs(directions.row(s).norm() - 1.0) > 1e-12) {
            throw std::invalid_argument("grid_from_directions: directions must have unit norm");
        }
    }

    Grid g;
    g.d = static_cast<int>(directions.cols());
    g.n_R = n_R;
    g.n_S = static_cast<int>(directions.rows());
    g.n_0 = n_0;
    g.directions = directions;
    g.antipode = find_antipodes(directions);
    g.symmetric = std::all_of(g.antipode.begin(), g.antipode.end(), [](int a) { return a >= 0; });

    const int n = g.n();
    g.points = Matrix::Zero(n, g.d);
    g.radius_index.assign(static_cast<std::size_t>(n), 0);
    g.direction_index.assign(static_cast<std::size_t>(n), -1);
    int idx = 0;
    for (int r = 1; r <= n_R; ++r) {
        const double radius = static_cast<double>(r) / (n_R + 1);
        for (int s = 0; s < g.n_S; ++s, ++idx) {
            g.points.row(idx) = radius * directions.row(s);
            g.radius_index[static_cast<std::size_t>(idx)] = r;
            g.direction_index[static_cast<std::size_t>(idx)] = s;
        }
    }
    return g;
}

CenterOutwardMap compute_map(const Matrix& residuals, const Grid& grid, const CenterOutwardMap* warm) {
    const int n = grid.n();
    if (residuals.rows() != n) {
        throw std::invalid_argument("compute_map: " + std::to_string(residuals.rows()) + " residuals for " +
                                    std::to_string(n) + " grid points");
    }
    if (residuals.cols() != grid.d) throw std::invalid_argument("compute_map: residual dimension differs from grid");
    if (!residuals.allFinite()) throw std::invalid_argument("compute_map: non-finite residual");

    // Rescaling by a positive constant leaves the optimal coupling unchanged.
    const double max_sq = residuals.rowwise().squaredNorm().maxCoeff();
    const double scale = max_sq > 0.0 ? 1.0 / max_sq : 1.0;
    Matrix cost(n, n);
    for (int k = 0; k < n; ++k) {
        for (int t = 0; t < n; ++t) cost(t, k) = scale * (residuals.row(t) - grid.points.row(k)).squaredNorm();
    }
    AssignmentResult lap;
    if (warm && static_cast<int>(warm->column_duals.size()) == n) {
        std::vector<double> hint(warm->column_duals);
        for (double& v : hint) v *= scale;
        lap = solve_assignment(cost, hint);
    } else {
        lap = solve_assignment(cost);
    }

    CenterOutwardMap map;
    map.n_R = grid.n_R;
    map.assignment = lap.row_to_col;
    map.column_duals = lap.column_duals;
    for (double& v : map.column_duals) v /= scale;
    map.F.resize(n, grid.d);
    map.signs = Matrix::Zero(n, grid.d);
    map.ranks.resize(static_cast<std::size_t>(n));
    for (int t = 0; t < n; ++t) {
        const int k = map.assignment[static_cast<std::size_t>(t)];
        map.F.row(t) = grid.points.row(k);
        map.ranks[static_cast<std::size_t>(t)] = grid.radius_index[static_cast<std::size_t>(k)];
        const int s = grid.direction_index[static_cast<std::size_t>(k)];
        if (s >= 0) map.signs.row(t) = grid.directions.row(s);
        map.total_cost += (residuals.row(t) - map.F.row(t)).squaredNorm();
    }
    return map;
}

RanksAndSigns ranks_and_signs(const CenterOutwardMap& map) {
    RanksAndSigns out;
    const auto n = map.F.rows();
    out.ranks.resize(static_cast<std::size_t>(n));
    out.signs = Matrix::Zero(n, map.F.cols());
    for (Eigen::Index t = 0; t < n; ++t) {
        const double norm = map.F.row(t).norm();
        out.ranks[static_cast<std::size_t>(t)] = static_cast<int>(std::lround((map.n_R + 1) * norm));
        if (norm > 0.0) out.signs.row(t) = map.F.row(t) / norm;
    }
    return out;
}

void write_grid_csv(std::ostream& os, const Grid& grid) {
    os << "idx,r";
    for (int k = 1; k <= grid.d; ++k) os << ",u" << k;
    os << '\n';
    for (int i = 0; i < grid.n(); ++i) {
        os << i << ',' << grid.radius_index[static_cast<std::size_t>(i)];
        const int s = grid.direction_index[static_cast<std::size_t>(i)];
        for (int k = 0; k < grid.d; ++k) {
            os << ',' << detail::format_double(s >= 0 ? grid.directions(s, k) : 0.0);
        }
        os << '\n';
    }
}

void write_map_csv(std::ostream& os, const CenterOutwardMap& map) {
    const auto d = map.signs.cols();
    os << "t,grid_idx,rank";
    for (Eigen::Index k = 1; k <= d; ++k) os << ",s" << k;
    os << '\n';
    for (int t = 0; t < map.n(); ++t) {
        os << (t + 1) << ',' << map.assignment[static_cast<std::size_t>(t)] << ',' << map.ranks[static_cast<std::size_t>(t)];
        for (Eigen::Index k = 0; k < d; ++k) os << ',' << detail::format_double(map.signs(t, k));
        os << '\n';
    }
}

}  // namespace varmarank
