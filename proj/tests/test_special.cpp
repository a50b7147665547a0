#include "oracles.hpp"
#include "varmarank/special.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace varmarank;

TEST(Special, ChiSquareTwoDfIsExponential) {
    for (double x : {0.0, 0.1, 1.0, 5.9915, 20.0, 80.0}) {
        EXPECT_NEAR(chi_square_sf(x, 2), std::exp(-x / 2.0), 1e-14);
    }
}

TEST(Special, CdfAgreesWithSimpsonIntegration) {
    for (double df : {1.0, 2.0, 3.0, 12.0, 20.0, 92.0}) {
        for (double x : {0.5, 2.0, df, 2.0 * df, 3.0 * df + 5.0}) {
            EXPECT_NEAR(chi_square_cdf(x, df), oracle::chi_square_cdf_simpson(x, df), 1e-10)
                << "df=" << df << " x=" << x;
        }
    }
}

TEST(Special, CdfAndSfSumToOne) {
    for (double df : {1.0, 4.0, 24.0, 100.0}) {
        for (double x : {0.01, 1.0, 10.0, 50.0, 200.0}) {
            EXPECT_NEAR(chi_square_cdf(x, df) + chi_square_sf(x, df), 1.0, 1e-14);
        }
    }
}

TEST(Special, QuantileInvertsCdf) {
    for (double df : {1.0, 2.0, 3.0, 12.0, 92.0}) {
        for (double p : {1e-6, 0.01, 0.25, 0.5, 0.95, 0.999999}) {
            const double x = chi_square_quantile(p, df);
            EXPECT_NEAR(chi_square_cdf(x, df), p, 1e-12) << "df=" << df << " p=" << p;
        }
    }
}

TEST(Special, QuantileTwoDfClosedForm) {
    for (double p : {0.1, 0.5, 0.9}) EXPECT_NEAR(chi_square_quantile(p, 2), -2.0 * std::log(1.0 - p), 1e-12);
}

TEST(Special, QuantileAtZeroIsZero) { EXPECT_EQ(chi_square_quantile(0.0, 3), 0.0); }

TEST(Special, GammaPHalfIsErf) {
    for (double x : {0.1, 1.0, 4.0}) EXPECT_NEAR(gamma_p(0.5, x), std::erf(std::sqrt(x)), 1e-14);
}

TEST(Special, RejectsInvalidArguments) {
    EXPECT_THROW(gamma_p(0.0, 1.0), std::domain_error);
    EXPECT_THROW(gamma_p(1.0, -1.0), std::domain_error);
    EXPECT_THROW(gamma_p_inverse(1.0, 1.0), std::domain_error);
}
