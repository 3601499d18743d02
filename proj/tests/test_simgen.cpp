#include "flame/simgen.hpp"

#include "flame/loss.hpp"
#include "flame/metrics.hpp"
#include "flame/solver.hpp"

#include <doctest.h>

#include <Eigen/Eigenvalues>

#include <cmath>

using namespace flame;

TEST_CASE("covariance construction") {
    CHECK(make_covariance(CovarianceSpec::identity(3)).isApprox(Eigen::MatrixXd::Identity(3, 3)));

    const Eigen::MatrixXd inter = make_covariance(CovarianceSpec::interchangeable(2, 0.8));
    CHECK(inter(0, 0) == 1.0);
    CHECK(inter(0, 1) == 0.8);
    CHECK(inter(1, 0) == 0.8);

    const Eigen::MatrixXd block =
        make_covariance(CovarianceSpec::block_interchangeable({150, 100, 25, 15, 10}, 0.8));
    CHECK(block.rows() == 300);
    CHECK(block(0, 149) == 0.8);
    CHECK(block(0, 150) == 0.0);     // across the first block boundary
    CHECK(block(150, 249) == 0.8);   // inside the second block
    CHECK(block(299, 289) == 0.0);   // across the last block boundary
    CHECK(block(299, 290) == 0.8);
    CHECK(block.isApprox(block.transpose()));

    CHECK_THROWS_AS(make_covariance(CovarianceSpec::interchangeable(4, 1.0)),
                    std::invalid_argument);
    CHECK_THROWS_AS(make_covariance(CovarianceSpec::interchangeable(4, -0.5)),
                    std::invalid_argument);
}

TEST_CASE("interchangeable eigenvalues match the closed form") {
    const int d = 7;
    const double rho = 0.6;
    const Eigen::MatrixXd sigma = make_covariance(CovarianceSpec::interchangeable(d, rho));
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(sigma);
    const Eigen::VectorXd values = eig.eigenvalues();
    CHECK(std::abs(values[d - 1] - (1.0 + (d - 1) * rho)) <= 1e-10);
    for (int i = 0; i + 1 < d; ++i) {
        CHECK(std::abs(values[i] - (1.0 - rho)) <= 1e-10);
    }
}

TEST_CASE("mahalanobis scaling") {
    // Identity covariance, mu1 = e1, target 4: (2c)^2 = 4 so c = 1.
    Eigen::VectorXd e1 = Eigen::VectorXd::Zero(3);
    e1[0] = 1.0;
    const Eigen::VectorXd scaled =
        scale_mean_to_mahalanobis(e1, Eigen::MatrixXd::Identity(3, 3), 4.0);
    CHECK(scaled.isApprox(e1, 1e-12));

    // The tapered profile against an interchangeable covariance reproduces
    // the requested distance.
    const int d = 300;
    const Eigen::MatrixXd sigma = make_covariance(CovarianceSpec::interchangeable(d, 0.8));
    const Eigen::VectorXd mu = scale_mean_to_mahalanobis(tapered_mean(d), sigma, 5.4);
    const Eigen::VectorXd diff = 2.0 * mu;
    const double check = diff.dot(sigma.llt().solve(diff));
    CHECK(std::abs(check - 5.4) <= 5.4 * 1e-10);

    // Doubling the target multiplies the scale by sqrt(2); re-scaling a
    // scaled mean is a fixed point.
    const Eigen::VectorXd doubled = scale_mean_to_mahalanobis(tapered_mean(d), sigma, 10.8);
    CHECK(doubled.isApprox(std::sqrt(2.0) * mu, 1e-10));
    CHECK(scale_mean_to_mahalanobis(mu, sigma, 5.4).isApprox(mu, 1e-10));
}

TEST_CASE("two-class sampling: determinism, shape and moments") {
    TwoClassGaussianSpec spec;
    spec.covariance = CovarianceSpec::identity(4);
    spec.mu_plus = Eigen::VectorXd::Constant(4, 0.5);
    spec.mu_minus = -spec.mu_plus;
    spec.n_plus = 50000;
    spec.n_minus = 50000;
    spec.seed = 1234;
    const LabeledDataset data = sample_two_class(spec);
    CHECK(data.size() == 100000);
    CHECK(data.positive_count() == 50000);

    // CLT bound: class means within 3 sqrt(diag Sigma / n) per coordinate.
    Eigen::VectorXd mean_plus = Eigen::VectorXd::Zero(4);
    Eigen::VectorXd mean_minus = Eigen::VectorXd::Zero(4);
    for (Eigen::Index i = 0; i < data.size(); ++i) {
        if (data.labels()[i] == 1.0) {
            mean_plus += data.features().row(i).transpose();
        } else {
            mean_minus += data.features().row(i).transpose();
        }
    }
    mean_plus /= 50000.0;
    mean_minus /= 50000.0;
    const double bound = 3.0 / std::sqrt(50000.0);
    for (int j = 0; j < 4; ++j) {
        CHECK(std::abs(mean_plus[j] - 0.5) <= bound);
        CHECK(std::abs(mean_minus[j] + 0.5) <= bound);
    }

    const LabeledDataset again = sample_two_class(spec);
    CHECK(again.features() == data.features());
    CHECK(again.labels() == data.labels());
}

TEST_CASE("the increasing-dimension design has the documented shape") {
    TwoClassGaussianSpec spec;
    spec.covariance = CovarianceSpec::identity(100);
    spec.mu_plus = linear_profile_mean(100, 2.7);
    spec.mu_minus = -spec.mu_plus;
    spec.n_plus = 120;
    spec.n_minus = 120;
    spec.seed = 9;
    CHECK(spec.mu_plus.norm() == doctest::Approx(2.7));
    CHECK(spec.mu_plus[0] > spec.mu_plus[99]);
    const LabeledDataset data = sample_two_class(spec);
    CHECK(data.size() == 240);
    CHECK(data.dim() == 100);
    CHECK(data.positive_count() == 120);
    CHECK(data.negative_count() == 120);
}

TEST_CASE("bayes rule closed forms") {
    Eigen::VectorXd mu0 = Eigen::VectorXd::Constant(3, 0.7);
    const LinearModel symmetric =
        bayes_rule(mu0, -mu0, Eigen::MatrixXd::Identity(3, 3));
    CHECK(symmetric.direction.isApprox(2.0 * mu0, 1e-12));
    CHECK(symmetric.intercept == doctest::Approx(0.0));

    Eigen::MatrixXd sigma = Eigen::MatrixXd::Zero(2, 2);
    sigma(0, 0) = 1.0;
    sigma(1, 1) = 4.0;
    Eigen::VectorXd mu_plus(2), mu_minus(2);
    mu_plus << 1.0, 2.0;
    mu_minus << 0.0, 0.0;
    const LinearModel model = bayes_rule(mu_plus, mu_minus, sigma);
    CHECK(model.direction[0] == doctest::Approx(1.0));
    CHECK(model.direction[1] == doctest::Approx(0.5));
    CHECK(model.intercept == doctest::Approx(-1.0));

    // Translating both means shifts the intercept by -c'omega only.
    Eigen::VectorXd shift(2);
    shift << 3.0, -1.0;
    const LinearModel moved = bayes_rule(mu_plus + shift, mu_minus + shift, sigma);
    CHECK(moved.direction.isApprox(model.direction, 1e-12));
    CHECK(moved.intercept ==
          doctest::Approx(model.intercept - shift.dot(model.direction)));

    // Plugging the positive mean into the symmetric model is positive.
    CHECK(decision_value(symmetric, mu0) == doctest::Approx(2.0 * mu0.squaredNorm()));
}

TEST_CASE("bayes rule is the gold standard on a large test set") {
    const int d = 5;
    TwoClassGaussianSpec train_spec;
    train_spec.covariance = CovarianceSpec::identity(d);
    train_spec.mu_plus = Eigen::VectorXd::Constant(d, 0.35);
    train_spec.mu_minus = -train_spec.mu_plus;
    train_spec.n_plus = 200;
    train_spec.n_minus = 200;
    train_spec.seed = 31;
    const LabeledDataset train = sample_two_class(train_spec);

    TwoClassGaussianSpec test_spec = train_spec;
    test_spec.n_plus = 10000;
    test_spec.n_minus = 10000;
    test_spec.seed = 32;
    const LabeledDataset test = sample_two_class(test_spec);

    const Eigen::MatrixXd sigma = make_covariance(train_spec.covariance);
    const LinearModel bayes = bayes_rule(train_spec.mu_plus, train_spec.mu_minus, sigma);

    auto mwe_of = [&](const LinearModel& model) {
        Eigen::VectorXd preds(test.size());
        for (Eigen::Index i = 0; i < test.size(); ++i) {
            preds[i] = predict_label(model, test.features().row(i).transpose());
        }
        return mean_within_class_error(preds, test.labels());
    };

    const double bayes_mwe = mwe_of(bayes);
    for (const double theta : {0.0, 0.5, 1.0}) {
        FlameConfig config = FlameConfig::norm_ball(theta);
        const FitResult fitted = fit_socp(train, config);
        CHECK(bayes_mwe <= mwe_of(fitted.model) + 0.01);
    }
}

TEST_CASE("spec validation") {
    TwoClassGaussianSpec spec;
    spec.covariance = CovarianceSpec::identity(2);
    spec.mu_plus = Eigen::VectorXd::Zero(2);
    spec.mu_minus = Eigen::VectorXd::Zero(3);
    spec.n_plus = 1;
    spec.n_minus = 1;
    CHECK_THROWS_AS(sample_two_class(spec), std::invalid_argument);
    spec.mu_minus = Eigen::VectorXd::Zero(2);
    spec.n_plus = 0;
    CHECK_THROWS_AS(sample_two_class(spec), std::invalid_argument);

    CHECK_THROWS_AS(half_quarter_blocks(3), std::invalid_argument);
    CHECK(half_quarter_blocks(50) == std::vector<int>{25, 12, 13});
    CHECK(half_quarter_blocks(300) == std::vector<int>{150, 75, 75});
    CHECK(tapered_mean(300)[0] == doctest::Approx(75.0));
    CHECK(tapered_mean(300)[74] == doctest::Approx(1.0));
    CHECK(tapered_mean(300)[75] == 0.0);
}
