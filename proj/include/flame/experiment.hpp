#pragma once

#include "flame/cv.hpp"
#include "flame/simgen.hpp"
#include "flame/types.hpp"

#include <json.hpp>

#include <optional>
#include <string>
#include <vector>

namespace flame {

/// Population design for simulation sweeps. The mean profile and covariance
/// adapt to each dimension in the sweep; sizes split a fixed total by the
/// imbalance factor.
struct SweepDesign {
    enum class MeanKind {
        LinearProfileNorm,   // (d, d-1, ..., 1) scaled to `mean_norm`
        TaperedMahalanobis,  // (ceil(d/4), ..., 1, 0, ...) scaled to `mahalanobis`
        FirstCoordinates,    // `mean_value` on the first `mean_support` coords
    };
    enum class CovKind { Identity, Interchangeable, BlockHalfQuarter, BlockExplicit };

    MeanKind mean_kind = MeanKind::LinearProfileNorm;
    double mean_norm = 2.7;
    double mahalanobis = 5.4;
    double mean_value = 1.0;
    int mean_support = 1;

    CovKind cov_kind = CovKind::Identity;
    double rho = 0.0;
    std::vector<int> blocks;  // BlockExplicit only

    int total_n = 240;
    int test_n_per_class = 1000;

    CovarianceSpec covariance_for(int d) const;
    /// Means are +-mu; mu depends on d and, for Mahalanobis scaling, on the
    /// covariance.
    Eigen::VectorXd mean_for(int d) const;
};

struct ExperimentConfig {
    SweepDesign design;
    std::vector<double> theta_grid{0.0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0};
    std::vector<int> dims{50};
    std::vector<double> imbalances{1.0};
    int replicates = 1;
    std::uint64_t seed = 0;
    FlameConfig solver;
    int workers = 1;

    void validate() const;
};

struct ExperimentRecord {
    double theta = 0.0;
    int d = 0;
    double m = 1.0;
    int replicate = 0;
    double mwe = 0.0;
    double intercept_deviation = 0.0;
    double angle_degrees = 0.0;
    double rank_comp = 0.0;
    Eigen::VectorXd direction;  // unit norm; lets aggregates be recomputed
    double beta = 0.0;
    std::string error;  // non-empty when the cell replicate failed

    bool failed() const { return !error.empty(); }
};

struct ExperimentAggregate {
    double theta = 0.0;
    int d = 0;
    double m = 1.0;
    int count = 0;
    double mean_mwe = 0.0;
    double mean_intercept_deviation = 0.0;
    double mean_angle_degrees = 0.0;
    double mean_rank_comp = 0.0;
    double dispersion = 0.0;      // sign-aligned directions
    double dispersion_raw = 0.0;  // as fitted
};

struct ExperimentReport {
    int format_version = 1;
    nlohmann::json config_echo;
    std::vector<ExperimentRecord> records;
    std::vector<ExperimentAggregate> aggregates;

    bool all_failed() const;
};

/// Metric sweep over theta x dims x imbalances x replicates, evaluated
/// against the Bayes oracle of each simulated population. Cell replicates
/// run on `workers` threads with disjoint derived seeds, so the report does
/// not depend on scheduling. Failures are recorded per cell and the sweep
/// continues.
ExperimentReport run_experiment(const ExperimentConfig& config);

/// Recomputes per-cell aggregates from the records (used after editing or
/// loading a report).
std::vector<ExperimentAggregate> aggregate_records(const std::vector<ExperimentRecord>& records);

struct CvRecord {
    double theta = 0.0;
    int split = 0;
    int fold = 0;
    double mwe = 0.0;
};

struct CvAggregate {
    double theta = 0.0;
    double mean_mwe = 0.0;
    double stderr_mwe = 0.0;
    int records = 0;
};

struct CvReport {
    int format_version = 1;
    nlohmann::json config_echo;
    std::vector<CvRecord> records;
    std::vector<CvAggregate> aggregates;
};

/// Stratified k-fold CV over `splits` random splits for every theta in the
/// grid; within-class error on each held-out fold.
CvReport cross_validate(const LabeledDataset& data, FlameConfig config,
                        const std::vector<double>& theta_grid, int folds, int splits,
                        std::uint64_t seed);

nlohmann::json experiment_config_to_json(const ExperimentConfig& config);
ExperimentConfig experiment_config_from_json(const nlohmann::json& j);

nlohmann::json two_class_spec_to_json(const TwoClassGaussianSpec& spec);
TwoClassGaussianSpec two_class_spec_from_json(const nlohmann::json& j);

nlohmann::json report_to_json(const ExperimentReport& report);
ExperimentReport report_from_json(const nlohmann::json& j);
std::string report_to_csv(const ExperimentReport& report);

nlohmann::json cv_report_to_json(const CvReport& report);
std::string cv_report_to_csv(const CvReport& report);

}  // namespace flame
