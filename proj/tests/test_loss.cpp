#include "flame/loss.hpp"

#include <doctest.h>

#include <cmath>
#include <random>

using namespace flame;

namespace {

// Deterministic draws for the property checks.
struct Draw {
    std::mt19937_64 engine{20240811};
    double uniform(double lo, double hi) {
        const double t = static_cast<double>(engine() >> 11) * 0x1.0p-53;
        return lo + (hi - lo) * t;
    }
};

}  // namespace

TEST_CASE("dwd loss closed form") {
    CHECK(dwd_loss(1.0, 1.0) == doctest::Approx(1.0));
    CHECK(dwd_loss(0.0, 1.0) == doctest::Approx(2.0));
    CHECK(dwd_loss(2.0, 1.0) == doctest::Approx(0.5));
    // Strictly positive everywhere, including far on the linear branch.
    Draw draw;
    for (int k = 0; k < 1000; ++k) {
        const double u = draw.uniform(-50.0, 50.0);
        const double C = draw.uniform(0.01, 100.0);
        CHECK(dwd_loss(u, C) > 0.0);
    }
}

TEST_CASE("modified hinge closed form") {
    CHECK(modified_hinge(0.0, 1.0) == doctest::Approx(1.0));
    CHECK(modified_hinge(1.0, 1.0) == doctest::Approx(0.0));
    CHECK(modified_hinge(0.25, 4.0) == doctest::Approx(1.0));
}

TEST_CASE("flame loss closed form and reductions") {
    CHECK(flame_loss(0.5, 1.0, 1.0) == doctest::Approx(0.5));
    CHECK(flame_loss(1.5, 1.0, 0.5) == doctest::Approx(1.0 / 1.5 - 0.5));

    Draw draw;
    for (int k = 0; k < 10000; ++k) {
        const double u = draw.uniform(-10.0, 10.0);
        const double C = draw.uniform(0.01, 50.0);
        CHECK(std::abs(flame_loss(u, C, 0.0) - dwd_loss(u, C)) <= 1e-12);
        CHECK(std::abs(flame_loss(u, C, 1.0) - modified_hinge(u, C)) <= 1e-12);
        const double thresholded = std::max(dwd_loss(u, C) - std::sqrt(C), 0.0);
        CHECK(std::abs(modified_hinge(u, C) - thresholded) <= 1e-12);
    }
}

TEST_CASE("flame loss is convex, monotone and ordered in theta") {
    Draw draw;
    for (int k = 0; k < 2000; ++k) {
        const double C = draw.uniform(0.05, 20.0);
        const double theta = draw.uniform(0.0, 1.0);
        const double u1 = draw.uniform(-5.0, 8.0);
        const double u2 = draw.uniform(-5.0, 8.0);
        const double t = draw.uniform(0.0, 1.0);
        const double lhs = flame_loss(t * u1 + (1.0 - t) * u2, C, theta);
        const double rhs = t * flame_loss(u1, C, theta) + (1.0 - t) * flame_loss(u2, C, theta);
        CHECK(lhs <= rhs + 1e-12);

        const double lo = std::min(u1, u2);
        const double hi = std::max(u1, u2);
        CHECK(flame_loss(lo, C, theta) >= flame_loss(hi, C, theta) - 1e-12);

        const double theta2 = draw.uniform(0.0, 1.0);
        const double small = std::min(theta, theta2);
        const double large = std::max(theta, theta2);
        CHECK(flame_loss(u1, C, small) >= flame_loss(u1, C, large) - 1e-12);
        CHECK(flame_loss(u1, C, theta) >= 0.0);
    }
}

TEST_CASE("flame loss is continuous at both kinks") {
    Draw draw;
    const double eps = 1e-8;
    for (int k = 0; k < 500; ++k) {
        const double C = draw.uniform(0.05, 20.0);
        const double theta = draw.uniform(0.05, 1.0);
        for (const double kink : {1.0 / std::sqrt(C), 1.0 / (theta * std::sqrt(C))}) {
            const double jump =
                std::abs(flame_loss(kink - eps, C, theta) - flame_loss(kink + eps, C, theta));
            // The linear branch attains the bound exactly; the loss values are
            // O(sqrt(C)) so their difference carries absolute rounding noise.
            CHECK(jump <= 2.0 * C * eps + 1e-12);
        }
    }
}

TEST_CASE("subgradient values and finite differences") {
    CHECK(flame_subgradient(0.0, 1.0, 0.5) == doctest::Approx(-1.0));
    CHECK(flame_subgradient(2.0, 1.0, 0.5) == doctest::Approx(0.0));
    CHECK(flame_subgradient(1.5, 1.0, 0.5) == doctest::Approx(-1.0 / 2.25));

    Draw draw;
    const double h = 1e-6;
    for (int k = 0; k < 3000; ++k) {
        const double C = draw.uniform(0.05, 20.0);
        const double theta = draw.uniform(0.0, 1.0);
        const double u = draw.uniform(-4.0, 6.0);
        const double k1 = 1.0 / std::sqrt(C);
        const double k2 = theta > 0.0 ? 1.0 / (theta * std::sqrt(C)) : 1e18;
        if (std::abs(u - k1) <= 1e-4 || std::abs(u - k2) <= 1e-4) continue;
        const double central =
            (flame_loss(u + h, C, theta) - flame_loss(u - h, C, theta)) / (2.0 * h);
        CHECK(std::abs(flame_subgradient(u, C, theta) - central) <= 1e-4 * (1.0 + C));
    }
}

TEST_CASE("loss argument validation") {
    CHECK_THROWS_AS(dwd_loss(std::nan(""), 1.0), std::invalid_argument);
    CHECK_THROWS_AS(dwd_loss(0.0, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(dwd_loss(0.0, -2.0), std::invalid_argument);
    CHECK_THROWS_AS(flame_loss(0.0, 1.0, -0.1), std::invalid_argument);
    CHECK_THROWS_AS(flame_loss(0.0, 1.0, 1.1), std::invalid_argument);
    CHECK_THROWS_AS(flame_subgradient(0.0, 1.0, 2.0), std::invalid_argument);
}

TEST_CASE("default loss scale follows the median inter-class distance") {
    Eigen::MatrixXd x(4, 1);
    x << 0.0, 0.0, 2.0, 2.0;
    Eigen::VectorXd y(4);
    y << 1.0, 1.0, -1.0, -1.0;
    const LabeledDataset data(x, y);
    // All four inter-class distances equal 2, so C = 100 / 4.
    CHECK(default_loss_scale(data) == doctest::Approx(25.0));
}
