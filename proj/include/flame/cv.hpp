#pragma once

#include "flame/types.hpp"

#include <cstdint>
#include <vector>

namespace flame {

struct CvConfig {
    int folds = 5;
    int repeats = 1;
    std::uint64_t seed = 0;
};

/// Stratified fold assignment: samples of each class are shuffled with the
/// seed and dealt round-robin, so every fold keeps the class ratio as close
/// as fold sizes allow. Returns, per fold, the held-out sample indices.
std::vector<std::vector<Eigen::Index>> make_stratified_folds(const Eigen::VectorXd& labels,
                                                             int folds, std::uint64_t seed);

LabeledDataset subset_dataset(const LabeledDataset& data,
                              const std::vector<Eigen::Index>& indices);

}  // namespace flame
