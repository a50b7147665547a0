#include "varmarank/varma.hpp"

#include "varmarank/innovations.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace varmarank {

void check_structure(const VarmaSpec& spec) {
    if (spec.d < 1) throw std::invalid_argument("VarmaSpec: d must be positive");
    auto check = [&](const std::vector<Matrix>& mats, const char* name) {
        for (std::size_t i = 0; i < mats.size(); ++i) {
            if (mats[i].rows() != spec.d || mats[i].cols() != spec.d) {
                std::ostringstream os;
                os << "VarmaSpec: " << name << "_" << (i + 1) << " is " << mats[i].rows() << "x"
                   << mats[i].cols() << ", expected " << spec.d << "x" << spec.d;
                throw std::invalid_argument(os.str());
            }
        }
    };
    check(spec.ar, "A");
    check(spec.ma, "B");
}

ThetaVector ThetaVector::from_spec(const VarmaSpec& spec) {
    check_structure(spec);
    ThetaVector theta;
    theta.order = {spec.d, spec.p(), spec.q()};
    const int d2 = spec.d * spec.d;
    theta.values.resize(theta.order.n_params());
    int k = 0;
    for (const auto& a : spec.ar) theta.values.segment(d2 * k++, d2) = vec(a);
    for (const auto& b : spec.ma) theta.values.segment(d2 * k++, d2) = vec(b);
    return theta;
}

VarmaSpec ThetaVector::to_spec() const {
    if (order.d < 1 || order.p < 0 || order.q < 0) {
        throw std::invalid_argument("ThetaVector: invalid model order");
    }
    if (values.size() != order.n_params()) {
        std::ostringstream os;
        os << "ThetaVector: length " << values.size() << " does not match (p+q)d^2 = " << order.n_params();
        throw std::invalid_argument(os.str());
    }
    VarmaSpec spec;
    spec.d = order.d;
    const int d2 = order.d * order.d;
    int k = 0;
    for (int i = 0; i < order.p; ++i) spec.ar.push_back(unvec(values.segment(d2 * k++, d2), order.d, order.d));
    for (int j = 0; j < order.q; ++j) spec.ma.push_back(unvec(values.segment(d2 * k++, d2), order.d, order.d));
    return spec;
}

namespace {

// Companion matrix of x_t = sum_i M_i x_{t-i}; its eigenvalues are the
// reciprocals of the roots of det(I - sum M_i z^i).
Matrix companion(const std::vector<Matrix>& mats, int d, double sign) {
    const int k = static_cast<int>(mats.size());
    Matrix c = Matrix::Zero(k * d, k * d);
    for (int i = 0; i < k; ++i) c.block(0, i * d, d, d) = sign * mats[static_cast<std::size_t>(i)];
    if (k > 1) c.block(d, 0, (k - 1) * d, (k - 1) * d).setIdentity();
    return c;
}

std::vector<double> moduli(const Matrix& c) {
    std::vector<double> out;
    if (c.size() == 0) return out;
    Eigen::EigenSolver<Matrix> es(c, false);
    for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i) out.push_back(std::abs(es.eigenvalues()(i)));
    std::sort(out.begin(), out.end(), std::greater<>());
    return out;
}

}  // namespace

ValidationReport validate_spec(const VarmaSpec& spec, double tol) {
    if (!(tol > 0.0)) throw std::invalid_argument("validate_spec: tol must be positive");
    check_structure(spec);

    ValidationReport r;
    r.ar_moduli = moduli(companion(spec.ar, spec.d, 1.0));
    r.ma_moduli = moduli(companion(spec.ma, spec.d, -1.0));
    const double bound = 1.0 - tol;
    for (double m : r.ar_moduli) {
        if (!(m <= bound)) {
            r.pass = false;
            r.issues.push_back("AR companion eigenvalue modulus " + std::to_string(m) + " is not below 1 - tol");
        }
    }
    for (double m : r.ma_moduli) {
        if (!(m <= bound)) {
            r.pass = false;
            r.issues.push_back("MA companion eigenvalue modulus " + std::to_string(m) + " is not below 1 - tol");
        }
    }
    if (spec.p() > 0) {
        r.det_ar_last = spec.ar.back().determinant();
        if (!(std::fabs(r.det_ar_last) > tol)) {
            r.pass = false;
            r.issues.push_back("det(A_p) is numerically zero");
        }
    }
    if (spec.q() > 0) {
        r.det_ma_last = spec.ma.back().determinant();
        if (!(std::fabs(r.det_ma_last) > tol)) {
            r.pass = false;
            r.issues.push_back("det(B_q) is numerically zero");
        }
    }
    if (spec.p() > 0 && spec.q() > 0) {
        r.warnings.push_back("left coprimeness of the AR and MA operators is assumed, not checked");
    }
    return r;
}

void require_valid(const VarmaSpec& spec, double tol) {
    const auto report = validate_spec(spec, tol);
    if (!report.pass) {
        std::string msg = "invalid VARMA specification:";
        for (const auto& issue : report.issues) msg += " " + issue + ";";
        throw std::invalid_argument(msg);
    }
}

namespace {

void extend_green(const VarmaSpec& spec, GreenMatrices& g, int U) {
    const int d = spec.d;
    if (g.G.empty()) {
        g.G.push_back(Matrix::Identity(d, d));
        g.H.push_back(Matrix::Identity(d, d));
    }
    for (int u = static_cast<int>(g.G.size()); u <= U; ++u) {
        Matrix gu = Matrix::Zero(d, d);
        for (int i = 1; i <= std::min(spec.p(), u); ++i) gu.noalias() += spec.ar[static_cast<std::size_t>(i - 1)] * g.G[static_cast<std::size_t>(u - i)];
        Matrix hu = Matrix::Zero(d, d);
        for (int j = 1; j <= std::min(spec.q(), u); ++j) hu.noalias() -= spec.ma[static_cast<std::size_t>(j - 1)] * g.H[static_cast<std::size_t>(u - j)];
        g.G.push_back(std::move(gu));
        g.H.push_back(std::move(hu));
    }
    g.U = static_cast<int>(g.G.size()) - 1;
}

GreenMatrices green_unchecked(const VarmaSpec& spec, int U) {
    GreenMatrices g;
    extend_green(spec, g, U);
    return g;
}

}  // namespace

GreenMatrices green_matrices(const VarmaSpec& spec, int U) {
    if (U < 1) throw std::invalid_argument("green_matrices: U must be at least 1");
    require_valid(spec);
    return green_unchecked(spec, U);
}

GreenMatrices green_matrices_adaptive(const VarmaSpec& spec, int max_order, double tail_tol) {
    if (max_order < 1) throw std::invalid_argument("green_matrices_adaptive: max_order must be at least 1");
    require_valid(spec);
    GreenMatrices g;
    extend_green(spec, g, 1);
    while (g.U < max_order &&
           std::max(g.G.back().norm(), g.H.back().norm()) >= tail_tol) {
        extend_green(spec, g, g.U + 1);
    }
    return g;
}

Matrix CoeffBlocks::stacked() const {
    if (c.empty()) return Matrix(0, 0);
    const auto rows = c.front().rows();
    const auto cols = c.front().cols();
    Matrix out(rows, cols * static_cast<Eigen::Index>(c.size()));
    for (std::size_t i = 0; i < c.size(); ++i) out.middleCols(static_cast<Eigen::Index>(i) * cols, cols) = c[i];
    return out;
}

namespace {

// c_i from its block formula; g must hold Green matrices up to index i - 1.
Matrix coeff_block(const VarmaSpec& spec, const GreenMatrices& g, int i) {
    const int d = spec.d;
    const int d2 = d * d;
    const int p = spec.p();
    const int q = spec.q();
    Matrix c = Matrix::Zero((p + q) * d2, d2);
    const Matrix eye = Matrix::Identity(d, d);
    auto B = [&](int k) -> const Matrix& { return k == 0 ? eye : spec.ma[static_cast<std::size_t>(k - 1)]; };

    for (int l = 1; l <= p; ++l) {
        Matrix block = Matrix::Zero(d2, d2);
        for (int j = 0; j <= i - l; ++j) {
            Matrix inner = Matrix::Zero(d, d);
            for (int k = 0; k <= std::min(q, i - j - l); ++k) {
                inner.noalias() += g.G[static_cast<std::size_t>(i - j - k - l)] * B(k);
            }
            block += kron(inner, g.H[static_cast<std::size_t>(j)].transpose());
        }
        c.block((l - 1) * d2, 0, d2, d2) = block;
    }
    for (int l = 1; l <= q; ++l) {
        if (i - l >= 0) {
            c.block((p + l - 1) * d2, 0, d2, d2) = kron(eye, g.H[static_cast<std::size_t>(i - l)].transpose());
        }
    }
    return c;
}

}  // namespace

CoeffBlocks coeff_blocks(const ThetaVector& theta, int m) {
    if (m < 1) throw std::invalid_argument("coeff_blocks: m must be at least 1");
    const VarmaSpec spec = theta.to_spec();
    require_valid(spec);
    const GreenMatrices g = green_unchecked(spec, std::max(m - 1, 1));
    CoeffBlocks out;
    out.c.reserve(static_cast<std::size_t>(m));
    for (int i = 1; i <= m; ++i) out.c.push_back(coeff_block(spec, g, i));
    return out;
}

CoeffBlocks coeff_blocks_adaptive(const ThetaVector& theta, int max_m, double tol) {
    if (max_m < 1) throw std::invalid_argument("coeff_blocks_adaptive: max_m must be at least 1");
    const VarmaSpec spec = theta.to_spec();
    require_valid(spec);
    GreenMatrices g;
    extend_green(spec, g, 1);
    CoeffBlocks out;
    int small_run = 0;
    for (int i = 1; i <= max_m; ++i) {
        if (g.U < i - 1) extend_green(spec, g, i - 1);
        out.c.push_back(coeff_block(spec, g, i));
        if (out.c.back().norm() < tol) {
            if (++small_run == 2) break;
        } else {
            small_run = 0;
        }
    }
    return out;
}

Simulation simulate(const VarmaSpec& spec, int n, const InnovationSampler& sampler,
                    std::uint64_t seed, int burn_in) {
    if (n < 1) throw std::invalid_argument("simulate: n must be positive");
    if (burn_in < 0) throw std::invalid_argument("simulate: burn_in must be non-negative");
    if (sampler.dim() != spec.d) throw std::invalid_argument("simulate: sampler dimension does not match spec");
    require_valid(spec);

    Rng rng(seed);
    const int total = n + burn_in;
    const Matrix eps = sampler.draw(total, rng);
    Matrix x = Matrix::Zero(total, spec.d);
    for (int t = 0; t < total; ++t) {
        Vector xt = eps.row(t).transpose();
        for (int i = 1; i <= std::min(spec.p(), t); ++i) xt.noalias() += spec.ar[static_cast<std::size_t>(i - 1)] * x.row(t - i).transpose();
        for (int j = 1; j <= std::min(spec.q(), t); ++j) xt.noalias() += spec.ma[static_cast<std::size_t>(j - 1)] * eps.row(t - j).transpose();
        x.row(t) = xt.transpose();
    }
    Simulation sim;
    sim.series.values = x.bottomRows(n);
    sim.innovations = eps.bottomRows(n);
    return sim;
}

ResidualSet residuals(const SeriesData& series, const ThetaVector& theta) {
    const VarmaSpec spec = theta.to_spec();
    if (series.dim() != spec.d) throw std::invalid_argument("residuals: series dimension does not match theta");
    const auto n = series.n();
    const Matrix& x = series.values;
    Matrix z(n, spec.d);
    for (Eigen::Index t = 0; t < n; ++t) {
        Vector zt = x.row(t).transpose();
        for (int i = 1; i <= spec.p() && i <= t; ++i) zt.noalias() -= spec.ar[static_cast<std::size_t>(i - 1)] * x.row(t - i).transpose();
        for (int j = 1; j <= spec.q() && j <= t; ++j) zt.noalias() -= spec.ma[static_cast<std::size_t>(j - 1)] * z.row(t - j).transpose();
        z.row(t) = zt.transpose();
    }
    return {std::move(z), theta};
}

}  // namespace varmarank
