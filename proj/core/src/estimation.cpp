#include "varmarank/estimation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace varmarank {

namespace {

ModelOrder order_for(const SeriesData& series, int p, int q) {
    if (p < 0 || q < 0) throw std::invalid_argument("model orders must be non-negative");
    if (series.dim() < 1) throw std::invalid_argument("series has no components");
    return {static_cast<int>(series.dim()), p, q};
}

bool is_valid(const ThetaVector& theta) { return validate_spec(theta.to_spec()).pass; }

// Least-squares coefficients of y on r (columns), via SVD.
Matrix least_squares(const Matrix& r, const Matrix& y) {
    return r.jacobiSvd(Eigen::ComputeThinU | Eigen::ComputeThinV).solve(y);
}

// Residuals and their Jacobian dZ_t/dtheta' (d x P per t) by recursion.
struct Linearization {
    Matrix z;
    std::vector<Matrix> jac;
};

Linearization linearize(const SeriesData& series, const ThetaVector& theta) {
    const VarmaSpec spec = theta.to_spec();
    const int d = spec.d;
    const int d2 = d * d;
    const int p = spec.p();
    const int q = spec.q();
    const int P = theta.order.n_params();
    const auto n = series.n();
    const Matrix& x = series.values;

    Linearization out;
    out.z = residuals(series, theta).z;
    out.jac.assign(static_cast<std::size_t>(n), Matrix::Zero(d, P));
    for (Eigen::Index t = 0; t < n; ++t) {
        Matrix& jt = out.jac[static_cast<std::size_t>(t)];
        // -(v' (x) I_d) places v_k at (r, k d + r).
        auto put = [&](int block, const auto& v) {
            for (int k = 0; k < d; ++k) {
                for (int r = 0; r < d; ++r) jt(r, block * d2 + k * d + r) -= v(k);
            }
        };
        for (int i = 1; i <= p && i <= t; ++i) put(i - 1, x.row(t - i));
        for (int j = 1; j <= q && j <= t; ++j) put(p + j - 1, out.z.row(t - j));
        for (int j = 1; j <= q && j <= t; ++j) {
            jt.noalias() -= spec.ma[static_cast<std::size_t>(j - 1)] * out.jac[static_cast<std::size_t>(t - j)];
        }
    }
    return out;
}

double log_det_spd(const Matrix& s) {
    Eigen::LLT<Matrix> llt(s);
    if (llt.info() != Eigen::Success) return std::numeric_limits<double>::infinity();
    return 2.0 * llt.matrixLLT().diagonal().array().log().sum();
}

}  // namespace

Matrix residual_covariance(const Matrix& z) {
    if (z.rows() < 1) throw std::invalid_argument("residual_covariance: empty residuals");
    return z.transpose() * z / static_cast<double>(z.rows());
}

ThetaVector hannan_rissanen(const SeriesData& series, int p, int q, int long_order) {
    const ModelOrder order = order_for(series, p, q);
    const int d = order.d;
    const auto n = static_cast<int>(series.n());
    ThetaVector theta{order, Vector::Zero(order.n_params())};
    if (p + q == 0) return theta;
    const Matrix& x = series.values;

    // Regress x_t (t >= start) on the given lagged blocks.
    auto regress = [&](int start, const std::vector<const Matrix*>& sources, const std::vector<int>& lags) {
        const int rows = n - start;
        Matrix r(rows, static_cast<Eigen::Index>(lags.size()) * d);
        for (int t = start; t < n; ++t) {
            for (std::size_t b = 0; b < lags.size(); ++b) {
                r.block(t - start, static_cast<Eigen::Index>(b) * d, 1, d) = sources[b]->row(t - lags[b]);
            }
        }
        return std::make_pair(least_squares(r, x.bottomRows(rows)), r);
    };

    Matrix innov = x;
    int start = p;
    if (q > 0) {
        int h = long_order > 0 ? long_order
                               : std::max(p + q + 1, static_cast<int>(std::ceil(1.5 * std::log(static_cast<double>(n)))));
        h = std::min(h, std::max(1, (n - 1) / (2 * d + 1)));
        std::vector<const Matrix*> src(static_cast<std::size_t>(h), &x);
        std::vector<int> lags;
        for (int i = 1; i <= h; ++i) lags.push_back(i);
        const auto [coef, r] = regress(h, src, lags);
        innov = Matrix::Zero(n, d);
        innov.bottomRows(n - h) = x.bottomRows(n - h) - r * coef;
        start = h + q;
    }
    if (n - start <= (p + q) * d) throw std::invalid_argument("hannan_rissanen: series too short for the model order");

    std::vector<const Matrix*> src;
    std::vector<int> lags;
    for (int i = 1; i <= p; ++i) {
        src.push_back(&x);
        lags.push_back(i);
    }
    for (int j = 1; j <= q; ++j) {
        src.push_back(&innov);
        lags.push_back(j);
    }
    const Matrix coef = regress(start, src, lags).first;  // ((p+q) d) x d, block b is M_b'
    const int d2 = d * d;
    for (int b = 0; b < p + q; ++b) {
        theta.values.segment(b * d2, d2) = vec(coef.block(b * d, 0, d, d).transpose());
    }

    // Shrink into the admissible region; det(B_q) must stay non-zero.
    for (int k = 0; k < 200 && !is_valid(theta); ++k) theta.values *= 0.9;
    if (!is_valid(theta)) {
        theta.values.setZero();
        for (int b = 0; b < p + q; ++b) {
            theta.values.segment(b * d2, d2) = 0.1 * vec(Matrix::Identity(d, d));
        }
    }
    return theta;
}

QmleFit qmle(const SeriesData& series, int p, int q, const QmleOptions& options) {
    const ModelOrder order = order_for(series, p, q);
    const auto n = series.n();
    const int P = order.n_params();
    if (n < 2) throw std::invalid_argument("qmle: series too short");

    QmleFit fit;
    if (P == 0) {
        fit.theta_hat = {order, Vector::Zero(0)};
        fit.sigma_hat = residual_covariance(series.values);
        fit.converged = true;
        fit.log_det_sigma = log_det_spd(fit.sigma_hat);
        fit.message = "no parameters";
        return fit;
    }
    if (n <= 2 * P) throw std::invalid_argument("qmle: series too short for the model order");

    ThetaVector theta = options.init ? *options.init : hannan_rissanen(series, p, q);
    if (!(theta.order == order)) throw std::invalid_argument("qmle: initial value has the wrong order");
    if (!is_valid(theta)) throw std::invalid_argument("qmle: initial value is not stationary and invertible");

    const double tol = options.tolerance * P;
    const double root_n = std::sqrt(static_cast<double>(n));
    Linearization lin = linearize(series, theta);
    double objective = log_det_spd(residual_covariance(lin.z));
    fit.message = "iteration limit reached";

    for (int it = 0;; ++it) {
        const Matrix sigma = residual_covariance(lin.z);
        const Matrix sinv = sigma.inverse();
        Vector g = Vector::Zero(P);
        Matrix h = Matrix::Zero(P, P);
        for (Eigen::Index t = 0; t < n; ++t) {
            const Matrix& jt = lin.jac[static_cast<std::size_t>(t)];
            const Matrix sj = sinv * jt;
            g.noalias() += sj.transpose() * lin.z.row(t).transpose();
            h.noalias() += jt.transpose() * sj;
        }
        fit.final_gradient_norm = g.norm() / root_n;
        fit.iterations = it;
        if (fit.final_gradient_norm < tol) {
            fit.converged = true;
            fit.message = "converged";
            break;
        }
        if (it >= options.max_iterations) break;

        Vector delta;
        try {
            delta = -svd_solve(h, g).x;
        } catch (const std::runtime_error&) {
            fit.message = "singular Gauss-Newton matrix";
            break;
        }
        bool accepted = false;
        double step = 1.0;
        for (int k = 0; k <= options.max_halvings; ++k, step *= 0.5) {
            ThetaVector cand{order, theta.values + step * delta};
            if (!is_valid(cand)) continue;
            Linearization cand_lin = linearize(series, cand);
            const double cand_obj = log_det_spd(residual_covariance(cand_lin.z));
            // Allow rounding-level ties near the optimum.
            if (cand_obj <= objective + 1e-13 * std::max(1.0, std::fabs(objective))) {
                theta = std::move(cand);
                lin = std::move(cand_lin);
                objective = cand_obj;
                accepted = true;
                break;
            }
        }
        if (!accepted) {
            fit.message = "step halving failed to improve the objective";
            break;
        }
    }

    fit.theta_hat = theta;
    fit.sigma_hat = residual_covariance(lin.z);
    fit.log_det_sigma = objective;
    return fit;
}

Vector gaussian_score(const SeriesData& series, const ThetaVector& theta, const Matrix& sigma) {
    const int P = theta.order.n_params();
    if (P == 0) return Vector::Zero(0);
    const Linearization lin = linearize(series, theta);
    const Matrix sinv = sigma.inverse();
    Vector g = Vector::Zero(P);
    for (Eigen::Index t = 0; t < series.n(); ++t) {
        g.noalias() -= lin.jac[static_cast<std::size_t>(t)].transpose() * (sinv * lin.z.row(t).transpose());
    }
    return g / std::sqrt(static_cast<double>(series.n()));
}

CoeffBlocks truncated_blocks(const ThetaVector& theta, int n) {
    if (n < 2) throw std::invalid_argument("truncated_blocks: need n >= 2");
    return coeff_blocks_adaptive(theta, n - 1, 1e-12);
}

Vector gaussian_central_sequence(const SeriesData& series, const ThetaVector& theta, const Matrix& sigma,
                                 std::optional<int> m_max) {
    const int P = theta.order.n_params();
    if (P == 0) return Vector::Zero(0);
    const auto n = static_cast<int>(series.n());
    const CoeffBlocks cb = m_max ? coeff_blocks(theta, std::min(*m_max, n - 1)) : truncated_blocks(theta, n);
    const Matrix z = residuals(series, theta).z;
    const Matrix sinv = sigma.inverse();
    Vector out = Vector::Zero(P);
    for (int i = 1; i <= cb.m() && i <= n - 1; ++i) {
        const Matrix ci = z.bottomRows(n - i).transpose() * z.topRows(n - i) / static_cast<double>(n - i);
        out.noalias() -= std::sqrt(static_cast<double>(n - i)) * cb.c[static_cast<std::size_t>(i - 1)] * vec(sinv * ci);
    }
    return out;
}

RankResiduals rank_residuals(const SeriesData& series, const ThetaVector& theta, const ScoreSpec& scores,
                             const Grid& grid, const RankResiduals* warm) {
    if (scores.d != grid.d) throw std::invalid_argument("rank_residuals: score and grid dimensions differ");
    RankResiduals out;
    out.z = residuals(series, theta).z;
    out.map = compute_map(out.z, grid, warm ? &warm->map : nullptr);
    out.j1 = score_matrix(scores, out.map.ranks, out.map.signs, grid.n_R, 1);
    out.j2 = score_matrix(scores, out.map.ranks, out.map.signs, grid.n_R, 2);
    return out;
}

Vector rank_central_sequence(const CoeffBlocks& blocks, const Matrix& j1, const Matrix& j2) {
    if (blocks.m() == 0) return Vector::Zero(0);
    const auto n = static_cast<int>(j1.rows());
    Vector out = Vector::Zero(blocks.c.front().rows());
    for (int i = 1; i <= blocks.m() && i <= n - 1; ++i) {
        out.noalias() += std::sqrt(static_cast<double>(n - i)) * blocks.c[static_cast<std::size_t>(i - 1)] *
                         vec(cross_cov(j1, j2, i).matrix);
    }
    return out;
}

Vector rank_central_sequence(const SeriesData& series, const ThetaVector& theta, const ScoreSpec& scores,
                             const Grid& grid, std::optional<int> m_max) {
    if (theta.order.n_params() == 0) return Vector::Zero(0);
    const auto n = static_cast<int>(series.n());
    if (m_max && (*m_max < 1 || *m_max > n - 1)) throw std::invalid_argument("rank_central_sequence: m_max outside 1..n-1");
    const CoeffBlocks cb = m_max ? coeff_blocks(theta, *m_max) : truncated_blocks(theta, n);
    const RankResiduals rr = rank_residuals(series, theta, scores, grid);
    return rank_central_sequence(cb, rr.j1, rr.j2);
}

KMatrix estimate_K(const SeriesData& series, const ThetaVector& theta, const ScoreSpec& scores, const Grid& grid,
                   const RankResiduals* base) {
    const int d = theta.order.d;
    const int d2 = d * d;
    const auto n = static_cast<int>(series.n());
    if (theta.order.n_params() == 0) throw std::invalid_argument("estimate_K: the model has no parameters");
    if (n < 2) throw std::invalid_argument("estimate_K: series too short");

    const Matrix c1 = coeff_blocks(theta, 1).c.front();
    const Matrix gram = c1.transpose() * c1;
    PseudoInverse pinv = pseudo_inverse(gram);
    if (pinv.rank < d2) throw std::invalid_argument("estimate_K: c_1' c_1 is singular");

    RankResiduals own;
    if (!base) {
        own = rank_residuals(series, theta, scores, grid);
        base = &own;
    }
    const Vector g0 = vec(cross_cov(base->j1, base->j2, 1).matrix);

    KMatrix out;
    out.perturbation_scale = 1.0 / std::sqrt(static_cast<double>(n));
    out.K.resize(d2, d2);
    const Matrix tau = -c1 * pinv.matrix;  // column j is tau_j
    for (int j = 0; j < d2; ++j) {
        ThetaVector shifted{theta.order, theta.values + out.perturbation_scale * tau.col(j)};
        const RankResiduals rr = rank_residuals(series, shifted, scores, grid, base);
        // c_1' tau_j = -e_j, so the difference estimates K e_j directly.
        out.K.col(j) = std::sqrt(static_cast<double>(n - 1)) * (vec(cross_cov(rr.j1, rr.j2, 1).matrix) - g0);
    }
    if (n < 10 * d2) {
        out.high_variance = true;
        out.warning = "n < 10 d^2: the finite-difference estimate of K is highly variable";
    }
    return out;
}

REstimate r_estimate_one_step(const SeriesData& series, const ThetaVector& theta_bar, const ScoreSpec& scores,
                              const Grid& grid, const KMatrix& K_hat, const REstimateOptions& options,
                              const RankResiduals* base) {
    const auto n = static_cast<int>(series.n());
    const double root_n = std::sqrt(static_cast<double>(n));
    REstimate out;
    out.theta_bar = theta_bar;
    if (options.discretize) {
        const double c = *options.discretize;
        if (!(c > 0.0)) throw std::invalid_argument("r_estimate_one_step: discretization step must be positive");
        const double h = c / root_n;
        out.theta_bar.values = (theta_bar.values / h).array().round() * h;
        base = nullptr;
    }
    const int P = theta_bar.order.n_params();
    if (P == 0) {
        out.theta_tilde = out.theta_bar;
        out.upsilon_hat = Matrix::Zero(0, 0);
        out.condition_number = 1.0;
        out.at_estimate = base ? *base : rank_residuals(series, out.theta_bar, scores, grid);
        return out;
    }

    const CoeffBlocks cb = truncated_blocks(out.theta_bar, n);
    RankResiduals own;
    if (!base) {
        own = rank_residuals(series, out.theta_bar, scores, grid);
        base = &own;
    }
    out.central_seq_at_bar = rank_central_sequence(cb, base->j1, base->j2);

    out.upsilon_hat = Matrix::Zero(P, P);
    for (const auto& c : cb.c) out.upsilon_hat.noalias() += c * K_hat.K * c.transpose();
    SvdSolve solve;
    try {
        solve = svd_solve(out.upsilon_hat, out.central_seq_at_bar);
    } catch (const std::runtime_error& e) {
        throw std::runtime_error(std::string("r_estimate_one_step: singular upsilon; ") + e.what());
    }
    out.condition_number = solve.condition_number;
    out.theta_tilde = {out.theta_bar.order, out.theta_bar.values + solve.x.col(0) / root_n};

    if (!validate_spec(out.theta_tilde.to_spec()).pass) {
        throw std::runtime_error("r_estimate_one_step: the one-step estimate is not stationary and invertible");
    }
    out.at_estimate = rank_residuals(series, out.theta_tilde, scores, grid, base);
    out.central_seq_at_estimate = rank_central_sequence(truncated_blocks(out.theta_tilde, n), out.at_estimate.j1,
                                                        out.at_estimate.j2);
    return out;
}

}  // namespace varmarank
