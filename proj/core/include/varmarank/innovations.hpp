#pragma once

#include "varmarank/linalg.hpp"

#include <cstdint>
#include <functional>
#include <random>
#include <string>
#include <vector>

namespace varmarank {

using Rng = std::mt19937_64;

enum class InnovationKind { spherical_normal, gaussian_mixture, skew_t, custom };

std::string to_string(InnovationKind kind);
InnovationKind innovation_kind_from_string(const std::string& name);

struct MixtureComponent {
    double weight = 0.0;
    Vector mean;
    Matrix cov;
};

/// Which symmetrization of the second covariance of the three-component
/// mixture to use; the coefficient table prints an asymmetric matrix.
enum class MixtureSigma2 {
    lower_negated,  // [[7, -6], [-6, 6]]
    upper_read,     // [[7, 6], [6, 6]]
};

/// Draws i.i.d. mean-zero innovations. Every sampler is centered by
/// subtracting its analytic mean.
class InnovationSampler {
public:
    using CustomDraw = std::function<Vector(Rng&)>;

    static InnovationSampler spherical_normal(int d);
    static InnovationSampler gaussian_mixture(std::vector<MixtureComponent> components);
    /// 3/8 N((-5,0), S1) + 3/8 N((5,0), S2) + 1/4 N((0,0), S3).
    static InnovationSampler three_gaussian_mixture(MixtureSigma2 variant = MixtureSigma2::lower_negated);
    /// Azzalini-Capitanio skew-t with identity scale.
    static InnovationSampler skew_t(int d, double df, Vector slant);
    /// Bivariate skew-t with 3 degrees of freedom and slant (2, 2).
    static InnovationSampler default_skew_t3();
    /// Caller-supplied draw; no centering is applied.
    static InnovationSampler custom(int d, CustomDraw draw);

    InnovationKind kind() const { return kind_; }
    int dim() const { return d_; }

    /// Analytic mean of the uncentered law (subtracted from every draw).
    const Vector& raw_mean() const { return raw_mean_; }
    const std::vector<MixtureComponent>& components() const { return components_; }
    double df() const { return df_; }
    const Vector& slant() const { return slant_; }

    /// n x d matrix of draws. For mixtures, labels (if given) receives the
    /// component index of every row.
    Matrix draw(int n, Rng& rng, std::vector<int>* labels = nullptr) const;

    /// Deterministic convenience wrapper: draw(n, Rng(seed)).
    Matrix sample(int n, std::uint64_t seed) const;

private:
    InnovationSampler() = default;

    InnovationKind kind_ = InnovationKind::spherical_normal;
    int d_ = 1;
    Vector raw_mean_;
    std::vector<MixtureComponent> components_;
    std::vector<Matrix> chol_;
    std::vector<double> cumulative_;
    double df_ = 0.0;
    Vector slant_;
    Vector delta_;
    Matrix residual_root_;
    CustomDraw custom_;
};

/// Named sampler for the three experiment densities: "normal", "mixture",
/// "skewt".
InnovationSampler make_named_sampler(const std::string& name, int d = 2);

}  // namespace varmarank
