#pragma once

#include "varmarank/linalg.hpp"

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <vector>

namespace varmarank {

/// Regular grid of n = n_R * n_S + n_0 points in the open unit ball:
/// radii r / (n_R + 1), r = 1..n_R, on each of n_S unit directions, plus
/// n_0 copies of the origin.
///
/// Points are stored radius-major: index (r - 1) * n_S + s for the point at
/// radius r on direction s, followed by the n_0 origins.
struct Grid {
    int d = 0;
    int n_R = 0;
    int n_S = 0;
    int n_0 = 0;
    bool symmetric = false;
    Matrix directions;                 // n_S x d
    std::vector<int> antipode;         // index of -u for each direction, or -1
    Matrix points;                     // n x d
    std::vector<int> radius_index;     // r per point, 0 at the origin
    std::vector<int> direction_index;  // s per point, -1 at the origin

    int n() const { return n_R * n_S + n_0; }
};

/// Every n_R for which n_S = floor(n / n_R) leaves 0 <= n_0 < min(n_R, n_S).
/// For d = 1 only n_S <= 2 is admissible.
std::vector<int> feasible_radii(int n, int d = 2);

/// Default n_R: among feasible values in [sqrt(n)/2, 2 sqrt(n)] prefer
/// n_0 = 0, then even n_S, then n_R closest to sqrt(n). Falls back to any
/// feasible value when that window is empty.
int default_radii(int n, int d = 2);

/// d = 2: equiangular directions rotated by a seeded offset.
/// d >= 3: seeded uniform directions, in antipodal pairs when symmetric.
/// d = 1: +1 (and -1 when n_S = 2).
/// symmetric defaults to (n_S even); requesting it with odd n_S throws.
Grid make_grid(int n, int d, std::optional<int> n_R = std::nullopt, std::uint64_t seed = 0,
               std::optional<bool> symmetric = std::nullopt);

/// Grid on caller-supplied unit directions (rows of `directions`).
Grid grid_from_directions(int n_R, const Matrix& directions, int n_0 = 0);

struct CenterOutwardMap {
    int n_R = 0;
    std::vector<int> assignment;  // residual t -> grid point index
    Matrix F;                     // n x d, F(Z_t) = grid point assigned to Z_t
    std::vector<int> ranks;       // radius index of the assigned point
    Matrix signs;                 // n x d, direction of the assigned point (zero at origin)
    double total_cost = 0.0;      // sum_t |Z_t - F(Z_t)|^2, summed in t order
    std::vector<double> column_duals;  // assignment duals in squared-distance units

    int n() const { return static_cast<int>(assignment.size()); }
};

/// Optimal coupling of the residual rows with the grid points under squared
/// Euclidean cost. Ranks and signs are read off the grid, so that
/// F = rank / (n_R + 1) * sign holds exactly.
/// warm, if given, is a map on the same grid whose duals start the solver.
CenterOutwardMap compute_map(const Matrix& residuals, const Grid& grid, const CenterOutwardMap* warm = nullptr);

struct RanksAndSigns {
    std::vector<int> ranks;
    Matrix signs;
};

/// Recovers ranks and signs from the F values alone: rank is
/// (n_R + 1) |F| rounded, sign is F / |F| (zero at the origin).
RanksAndSigns ranks_and_signs(const CenterOutwardMap& map);

/// CSV with header idx,r,u1..ud (one row per grid point; the origin has
/// r = 0 and u = 0).
void write_grid_csv(std::ostream& os, const Grid& grid);

/// CSV with header t,grid_idx,rank,s1..sd; t counts from 1.
void write_map_csv(std::ostream& os, const CenterOutwardMap& map);

}  // namespace varmarank
