#pragma once

#include "varmarank/linalg.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace varmarank {

class InnovationSampler;

/// VARMA(p, q) model in dimension d:
///   X_t - sum_i A_i X_{t-i} = e_t + sum_j B_j e_{t-j}.
struct VarmaSpec {
    int d = 1;
    std::vector<Matrix> ar;  // A_1 .. A_p
    std::vector<Matrix> ma;  // B_1 .. B_q

    int p() const { return static_cast<int>(ar.size()); }
    int q() const { return static_cast<int>(ma.size()); }
    int n_params() const { return (p() + q()) * d * d; }
};

/// Throws std::invalid_argument unless every coefficient is d x d.
void check_structure(const VarmaSpec& spec);

struct ModelOrder {
    int d = 1;
    int p = 0;
    int q = 0;

    int n_params() const { return (p + q) * d * d; }
    bool operator==(const ModelOrder&) const = default;
};

/// The stacked parameter (vec A_1', ..., vec A_p', vec B_1', ..., vec B_q')'
/// with column-major vec.
struct ThetaVector {
    ModelOrder order;
    Vector values;

    static ThetaVector from_spec(const VarmaSpec& spec);
    VarmaSpec to_spec() const;
};

struct ValidationReport {
    bool pass = true;
    std::vector<double> ar_moduli;  // eigenvalue moduli of the AR companion matrix
    std::vector<double> ma_moduli;  // same for the MA operator
    double det_ar_last = 0.0;       // det A_p (0 when p = 0)
    double det_ma_last = 0.0;       // det B_q (0 when q = 0)
    std::vector<std::string> issues;
    std::vector<std::string> warnings;
};

/// Stationarity/invertibility check on the companion spectra plus the
/// non-singularity of A_p and B_q. Left coprimeness is not tested; a warning
/// says so.
ValidationReport validate_spec(const VarmaSpec& spec, double tol = 1e-8);

/// Throws std::invalid_argument with the report's issues if validation fails.
void require_valid(const VarmaSpec& spec, double tol = 1e-8);

struct GreenMatrices {
    std::vector<Matrix> G;  // coefficients of (I - sum A_i z^i)^{-1}
    std::vector<Matrix> H;  // coefficients of (I + sum B_j z^j)^{-1}
    int U = 0;
};

GreenMatrices green_matrices(const VarmaSpec& spec, int U);

/// Smallest U with max(|G_U|, |H_U|) < tail_tol, capped at max_order.
GreenMatrices green_matrices_adaptive(const VarmaSpec& spec, int max_order,
                                      double tail_tol = 1e-12);

/// c_1 .. c_m, each (p+q)d^2 x d^2, of the linearization
///   dZ_t / dtheta' = - sum_i (Z_{t-i}' (x) I_d) c_i'.
struct CoeffBlocks {
    std::vector<Matrix> c;

    int m() const { return static_cast<int>(c.size()); }
    /// Horizontal concatenation (c_1, ..., c_m).
    Matrix stacked() const;
};

CoeffBlocks coeff_blocks(const ThetaVector& theta, int m);

/// Blocks up to the first lag where two consecutive blocks have Frobenius
/// norm below tol, capped at max_m.
CoeffBlocks coeff_blocks_adaptive(const ThetaVector& theta, int max_m, double tol = 1e-12);

/// Rows are time points t = 1..n, columns are components.
struct SeriesData {
    Matrix values;

    Eigen::Index n() const { return values.rows(); }
    Eigen::Index dim() const { return values.cols(); }
};

struct Simulation {
    SeriesData series;
    Matrix innovations;  // the n innovations that drove the retained part
};

/// Simulates with zero pre-sample values. With burn_in = 0 the returned
/// innovations are exactly the residuals at the true parameter.
Simulation simulate(const VarmaSpec& spec, int n, const InnovationSampler& sampler,
                    std::uint64_t seed, int burn_in = 200);

struct ResidualSet {
    Matrix z;
    ThetaVector theta;
};

/// Z_t = X_t - sum A_i X_{t-i} - sum B_j Z_{t-j} with zero initial values.
ResidualSet residuals(const SeriesData& series, const ThetaVector& theta);

}  // namespace varmarank
