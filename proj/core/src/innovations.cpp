#include "varmarank/innovations.hpp"

#include <Eigen/Cholesky>

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace varmarank {

std::string to_string(InnovationKind kind) {
    switch (kind) {
        case InnovationKind::spherical_normal: return "normal";
        case InnovationKind::gaussian_mixture: return "mixture";
        case InnovationKind::skew_t: return "skewt";
        case InnovationKind::custom: return "custom";
    }
    return "unknown";
}

InnovationKind innovation_kind_from_string(const std::string& name) {
    if (name == "normal" || name == "spherical_normal") return InnovationKind::spherical_normal;
    if (name == "mixture" || name == "gaussian_mixture") return InnovationKind::gaussian_mixture;
    if (name == "skewt" || name == "skew_t") return InnovationKind::skew_t;
    if (name == "custom") return InnovationKind::custom;
    throw std::invalid_argument("unknown innovation density '" + name + "'");
}

InnovationSampler InnovationSampler::spherical_normal(int d) {
    if (d < 1) throw std::invalid_argument("spherical_normal: d must be positive");
    InnovationSampler s;
    s.kind_ = InnovationKind::spherical_normal;
    s.d_ = d;
    s.raw_mean_ = Vector::Zero(d);
    return s;
}

InnovationSampler InnovationSampler::gaussian_mixture(std::vector<MixtureComponent> components) {
    if (components.empty()) throw std::invalid_argument("gaussian_mixture: no components");
    const auto d = components.front().mean.size();
    if (d < 1) throw std::invalid_argument("gaussian_mixture: empty mean");

    InnovationSampler s;
    s.kind_ = InnovationKind::gaussian_mixture;
    s.d_ = static_cast<int>(d);
    s.raw_mean_ = Vector::Zero(d);
    double total = 0.0;
    for (const auto& c : components) {
        if (c.mean.size() != d || c.cov.rows() != d || c.cov.cols() != d) {
            throw std::invalid_argument("gaussian_mixture: inconsistent component dimensions");
        }
        if (!(c.weight > 0.0)) throw std::invalid_argument("gaussian_mixture: weights must be positive");
        if ((c.cov - c.cov.transpose()).norm() > 1e-12 * (1.0 + c.cov.norm())) {
            throw std::invalid_argument("gaussian_mixture: covariance must be symmetric");
        }
        Eigen::LLT<Matrix> llt(c.cov);
        if (llt.info() != Eigen::Success) {
            throw std::invalid_argument("gaussian_mixture: covariance must be positive definite");
        }
        s.chol_.push_back(llt.matrixL());
        total += c.weight;
        s.cumulative_.push_back(total);
        s.raw_mean_ += c.weight * c.mean;
    }
    if (std::fabs(total - 1.0) > 1e-12) throw std::invalid_argument("gaussian_mixture: weights must sum to 1");
    s.cumulative_.back() = 1.0;
    s.components_ = std::move(components);
    return s;
}

InnovationSampler InnovationSampler::three_gaussian_mixture(MixtureSigma2 variant) {
    Matrix s1(2, 2), s2(2, 2), s3(2, 2);
    s1 << 7, 5, 5, 5;
    if (variant == MixtureSigma2::lower_negated) {
        s2 << 7, -6, -6, 6;
    } else {
        s2 << 7, 6, 6, 6;
    }
    s3 << 4, 0, 0, 3;
    return gaussian_mixture({
        {3.0 / 8.0, Vector{{-5.0, 0.0}}, s1},
        {3.0 / 8.0, Vector{{5.0, 0.0}}, s2},
        {1.0 / 4.0, Vector{{0.0, 0.0}}, s3},
    });
}

InnovationSampler InnovationSampler::skew_t(int d, double df, Vector slant) {
    if (d < 1) throw std::invalid_argument("skew_t: d must be positive");
    if (slant.size() != d) throw std::invalid_argument("skew_t: slant must have length d");
    if (!(df > 1.0)) throw std::invalid_argument("skew_t: df must exceed 1 for a finite mean");

    InnovationSampler s;
    s.kind_ = InnovationKind::skew_t;
    s.d_ = d;
    s.df_ = df;
    s.slant_ = std::move(slant);
    s.delta_ = s.slant_ / std::sqrt(1.0 + s.slant_.squaredNorm());
    // (I - delta delta')^{1/2}
    s.residual_root_ = symmetric_sqrt(Matrix::Identity(d, d) - s.delta_ * s.delta_.transpose());
    // E[Y] = delta * sqrt(df / pi) * Gamma((df - 1) / 2) / Gamma(df / 2)
    const double scale = std::sqrt(df / std::numbers::pi) *
                         std::exp(std::lgamma(0.5 * (df - 1.0)) - std::lgamma(0.5 * df));
    s.raw_mean_ = scale * s.delta_;
    return s;
}

InnovationSampler InnovationSampler::default_skew_t3() {
    return skew_t(2, 3.0, Vector{{2.0, 2.0}});
}

InnovationSampler InnovationSampler::custom(int d, CustomDraw draw) {
    if (d < 1) throw std::invalid_argument("custom sampler: d must be positive");
    if (!draw) throw std::invalid_argument("custom sampler: empty draw function");
    InnovationSampler s;
    s.kind_ = InnovationKind::custom;
    s.d_ = d;
    s.raw_mean_ = Vector::Zero(d);
    s.custom_ = std::move(draw);
    return s;
}

Matrix InnovationSampler::draw(int n, Rng& rng, std::vector<int>* labels) const {
    if (n < 0) throw std::invalid_argument("draw: negative sample size");
    Matrix out(n, d_);
    std::normal_distribution<double> normal(0.0, 1.0);
    if (labels) labels->assign(static_cast<std::size_t>(n), 0);

    switch (kind_) {
        case InnovationKind::spherical_normal:
            for (int t = 0; t < n; ++t) {
                for (int k = 0; k < d_; ++k) out(t, k) = normal(rng);
            }
            break;
        case InnovationKind::gaussian_mixture: {
            std::uniform_real_distribution<double> unif(0.0, 1.0);
            Vector z(d_);
            for (int t = 0; t < n; ++t) {
                const double u = unif(rng);
                std::size_t c = 0;
                while (c + 1 < cumulative_.size() && u >= cumulative_[c]) ++c;
                for (int k = 0; k < d_; ++k) z(k) = normal(rng);
                out.row(t) = (components_[c].mean + chol_[c] * z - raw_mean_).transpose();
                if (labels) (*labels)[static_cast<std::size_t>(t)] = static_cast<int>(c);
            }
            break;
        }
        case InnovationKind::skew_t: {
            std::chi_squared_distribution<double> chi(df_);
            Vector u(d_);
            for (int t = 0; t < n; ++t) {
                const double u0 = std::fabs(normal(rng));
                for (int k = 0; k < d_; ++k) u(k) = normal(rng);
                const Vector sn = delta_ * u0 + residual_root_ * u;
                const double w = chi(rng);
                out.row(t) = (sn / std::sqrt(w / df_) - raw_mean_).transpose();
            }
            break;
        }
        case InnovationKind::custom:
            for (int t = 0; t < n; ++t) {
                Vector v = custom_(rng);
                if (v.size() != d_) throw std::runtime_error("custom sampler returned wrong dimension");
                out.row(t) = v.transpose();
            }
            break;
    }
    return out;
}

Matrix InnovationSampler::sample(int n, std::uint64_t seed) const {
    Rng rng(seed);
    return draw(n, rng);
}

InnovationSampler make_named_sampler(const std::string& name, int d) {
    switch (innovation_kind_from_string(name)) {
        case InnovationKind::spherical_normal:
            return InnovationSampler::spherical_normal(d);
        case InnovationKind::gaussian_mixture:
            if (d != 2) throw std::invalid_argument("the three-component mixture is bivariate");
            return InnovationSampler::three_gaussian_mixture();
        case InnovationKind::skew_t:
            if (d == 2) return InnovationSampler::default_skew_t3();
            return InnovationSampler::skew_t(d, 3.0, Vector::Constant(d, 2.0));
        case InnovationKind::custom:
            break;
    }
    throw std::invalid_argument("no named sampler for '" + name + "'");
}

}  // namespace varmarank
