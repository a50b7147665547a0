#include "varmarank/special.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace varmarank {

namespace {

constexpr double kEps = 1e-16;
constexpr int kMaxIter = 10000;

// Power series for P(a, x); converges quickly for x < a + 1.
double gamma_p_series(double a, double x) {
    double term = 1.0 / a;
    double sum = term;
    double ap = a;
    for (int k = 0; k < kMaxIter; ++k) {
        ap += 1.0;
        term *= x / ap;
        sum += term;
        if (std::fabs(term) < std::fabs(sum) * kEps) {
            break;
        }
    }
    return sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

// Continued fraction for Q(a, x) (modified Lentz); used for x >= a + 1.
double gamma_q_fraction(double a, double x) {
    constexpr double tiny = 1e-300;
    double b = x + 1.0 - a;
    double c = 1.0 / tiny;
    double d = 1.0 / b;
    double h = d;
    for (int i = 1; i < kMaxIter; ++i) {
        const double an = -i * (i - a);
        b += 2.0;
        d = an * d + b;
        if (std::fabs(d) < tiny) d = tiny;
        c = b + an / c;
        if (std::fabs(c) < tiny) c = tiny;
        d = 1.0 / d;
        const double delta = d * c;
        h *= delta;
        if (std::fabs(delta - 1.0) < kEps) {
            break;
        }
    }
    return std::exp(-x + a * std::log(x) - std::lgamma(a)) * h;
}

void check_args(double a, double x) {
    if (!(a > 0.0) || !(x >= 0.0)) {
        throw std::domain_error("incomplete gamma: require a > 0 and x >= 0");
    }
}

}  // namespace

double gamma_p(double a, double x) {
    check_args(a, x);
    if (x == 0.0) return 0.0;
    if (std::isinf(x)) return 1.0;
    if (x < a + 1.0) return gamma_p_series(a, x);
    return 1.0 - gamma_q_fraction(a, x);
}

double gamma_q(double a, double x) {
    check_args(a, x);
    if (x == 0.0) return 1.0;
    if (std::isinf(x)) return 0.0;
    if (x < a + 1.0) return 1.0 - gamma_p_series(a, x);
    return gamma_q_fraction(a, x);
}

double gamma_p_inverse(double a, double p) {
    if (!(a > 0.0)) throw std::domain_error("gamma_p_inverse: a must be positive");
    if (!(p >= 0.0) || !(p < 1.0)) throw std::domain_error("gamma_p_inverse: p must lie in [0, 1)");
    if (p == 0.0) return 0.0;

    double lo = 0.0;
    double hi = std::max(1.0, a);
    while (gamma_p(a, hi) < p) {
        lo = hi;
        hi *= 2.0;
        if (!std::isfinite(hi)) throw std::runtime_error("gamma_p_inverse: bracket overflow");
    }

    const double log_norm = std::lgamma(a);
    double x = 0.5 * (lo + hi);
    for (int it = 0; it < 200; ++it) {
        const double f = gamma_p(a, x) - p;
        if (f == 0.0) return x;
        if (f < 0.0) lo = x; else hi = x;

        const double density = std::exp((a - 1.0) * std::log(x) - x - log_norm);
        double next = density > 0.0 ? x - f / density : 0.5 * (lo + hi);
        if (!(next > lo && next < hi)) {
            next = 0.5 * (lo + hi);
        }
        if (std::fabs(next - x) <= 1e-12 * std::max(x, std::numeric_limits<double>::min())) {
            return next;
        }
        if (hi - lo <= 1e-12 * hi) {
            return 0.5 * (lo + hi);
        }
        x = next;
    }
    return x;
}

double chi_square_cdf(double x, double df) {
    if (x <= 0.0) return 0.0;
    return gamma_p(0.5 * df, 0.5 * x);
}

double chi_square_sf(double x, double df) {
    if (x <= 0.0) return 1.0;
    return gamma_q(0.5 * df, 0.5 * x);
}

double chi_square_quantile(double p, double df) {
    return 2.0 * gamma_p_inverse(0.5 * df, p);
}

}  // namespace varmarank
