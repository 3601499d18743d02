#include "flame/simgen.hpp"

#include "flame/rng.hpp"

#include <Eigen/Cholesky>

#include <cmath>
#include <numeric>

namespace flame {

CovarianceSpec CovarianceSpec::identity(int dim) {
    CovarianceSpec spec;
    spec.kind = Kind::Identity;
    spec.dim = dim;
    return spec;
}

CovarianceSpec CovarianceSpec::interchangeable(int dim, double rho) {
    CovarianceSpec spec;
    spec.kind = Kind::Interchangeable;
    spec.dim = dim;
    spec.rho = rho;
    return spec;
}

CovarianceSpec CovarianceSpec::block_interchangeable(std::vector<int> block_sizes, double rho) {
    CovarianceSpec spec;
    spec.kind = Kind::BlockInterchangeable;
    spec.dim = std::accumulate(block_sizes.begin(), block_sizes.end(), 0);
    spec.rho = rho;
    spec.block_sizes = std::move(block_sizes);
    return spec;
}

void CovarianceSpec::validate() const {
    if (dim < 1) {
        throw std::invalid_argument("CovarianceSpec: dimension must be positive");
    }
    auto check_rho = [&](int block) {
        const double lower = block > 1 ? -1.0 / static_cast<double>(block - 1) : -1.0;
        if (rho <= lower || rho >= 1.0) {
            throw std::invalid_argument(
                "CovarianceSpec: rho outside the positive-definite range");
        }
    };
    switch (kind) {
        case Kind::Identity:
            break;
        case Kind::Interchangeable:
            check_rho(dim);
            break;
        case Kind::BlockInterchangeable: {
            if (block_sizes.empty()) {
                throw std::invalid_argument("CovarianceSpec: block sizes missing");
            }
            int total = 0;
            for (int size : block_sizes) {
                if (size < 1) {
                    throw std::invalid_argument("CovarianceSpec: block sizes must be positive");
                }
                check_rho(size);
                total += size;
            }
            if (total != dim) {
                throw std::invalid_argument("CovarianceSpec: block sizes must sum to dim");
            }
            break;
        }
    }
}

void TwoClassGaussianSpec::validate() const {
    covariance.validate();
    if (mu_plus.size() != covariance.dim || mu_minus.size() != covariance.dim) {
        throw std::invalid_argument("TwoClassGaussianSpec: mean dimensions must match covariance");
    }
    if (n_plus < 1 || n_minus < 1) {
        throw std::invalid_argument("TwoClassGaussianSpec: class sizes must be at least 1");
    }
    if (!mu_plus.allFinite() || !mu_minus.allFinite()) {
        throw std::invalid_argument("TwoClassGaussianSpec: means must be finite");
    }
}

Eigen::MatrixXd make_covariance(const CovarianceSpec& spec) {
    spec.validate();
    const int d = spec.dim;
    Eigen::MatrixXd sigma = Eigen::MatrixXd::Identity(d, d);
    switch (spec.kind) {
        case CovarianceSpec::Kind::Identity:
            break;
        case CovarianceSpec::Kind::Interchangeable:
            sigma.setConstant(spec.rho);
            sigma.diagonal().setOnes();
            break;
        case CovarianceSpec::Kind::BlockInterchangeable: {
            sigma.setZero();
            int offset = 0;
            for (int size : spec.block_sizes) {
                sigma.block(offset, offset, size, size).setConstant(spec.rho);
                sigma.block(offset, offset, size, size).diagonal().setOnes();
                offset += size;
            }
            break;
        }
    }
    Eigen::LLT<Eigen::MatrixXd> llt(sigma);
    if (llt.info() != Eigen::Success) {
        throw std::invalid_argument("make_covariance: matrix is not positive definite");
    }
    return sigma;
}

Eigen::VectorXd scale_mean_to_mahalanobis(const Eigen::VectorXd& mu1,
                                          const Eigen::MatrixXd& sigma, double target) {
    if (mu1.size() == 0 || mu1.norm() == 0.0) {
        throw std::invalid_argument("scale_mean_to_mahalanobis: mu1 must be nonzero");
    }
    if (!std::isfinite(target) || target <= 0.0) {
        throw std::invalid_argument("scale_mean_to_mahalanobis: target must be positive");
    }
    Eigen::LLT<Eigen::MatrixXd> llt(sigma);
    if (llt.info() != Eigen::Success) {
        throw std::invalid_argument("scale_mean_to_mahalanobis: singular covariance");
    }
    const Eigen::VectorXd solved = llt.solve(mu1);
    const double base = 4.0 * mu1.dot(solved);  // distance with c = 1
    return std::sqrt(target / base) * mu1;
}

LabeledDataset sample_two_class(const TwoClassGaussianSpec& spec) {
    spec.validate();
    const Eigen::MatrixXd sigma = make_covariance(spec.covariance);
    Eigen::LLT<Eigen::MatrixXd> llt(sigma);
    if (llt.info() != Eigen::Success) {
        throw std::invalid_argument("sample_two_class: covariance factorization failed");
    }
    const Eigen::MatrixXd chol = llt.matrixL();
    const int d = spec.covariance.dim;
    const int n = spec.n_plus + spec.n_minus;

    NormalSampler normal(spec.seed);
    Eigen::MatrixXd features(n, d);
    Eigen::VectorXd labels(n);
    Eigen::VectorXd z(d);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < d; ++j) z[j] = normal();
        const bool positive = i < spec.n_plus;
        const Eigen::VectorXd& mu = positive ? spec.mu_plus : spec.mu_minus;
        features.row(i) = (mu + chol * z).transpose();
        labels[i] = positive ? 1.0 : -1.0;
    }
    return LabeledDataset(std::move(features), std::move(labels));
}

LinearModel bayes_rule(const Eigen::VectorXd& mu_plus, const Eigen::VectorXd& mu_minus,
                       const Eigen::MatrixXd& sigma) {
    if (mu_plus.size() != mu_minus.size() || mu_plus.size() != sigma.rows() ||
        sigma.rows() != sigma.cols()) {
        throw std::invalid_argument("bayes_rule: dimension mismatch");
    }
    Eigen::LLT<Eigen::MatrixXd> llt(sigma);
    if (llt.info() != Eigen::Success) {
        throw std::invalid_argument("bayes_rule: singular covariance");
    }
    LinearModel model;
    model.direction = llt.solve(mu_plus - mu_minus);
    model.intercept = -0.5 * (mu_plus + mu_minus).dot(model.direction);
    return model;
}

Eigen::VectorXd linear_profile_mean(int d, double norm) {
    if (d < 1 || norm <= 0.0) {
        throw std::invalid_argument("linear_profile_mean: invalid arguments");
    }
    Eigen::VectorXd mu(d);
    for (int j = 0; j < d; ++j) mu[j] = static_cast<double>(d - j);
    return mu * (norm / mu.norm());
}

Eigen::VectorXd tapered_mean(int d) {
    if (d < 1) {
        throw std::invalid_argument("tapered_mean: dimension must be positive");
    }
    const int k = (d + 3) / 4;
    Eigen::VectorXd mu = Eigen::VectorXd::Zero(d);
    for (int j = 0; j < k; ++j) mu[j] = static_cast<double>(k - j);
    return mu;
}

std::vector<int> half_quarter_blocks(int d) {
    if (d < 4) {
        throw std::invalid_argument("half_quarter_blocks: need d >= 4");
    }
    const int first = d / 2;
    const int second = d / 4;
    return {first, second, d - first - second};
}

}  // namespace flame
