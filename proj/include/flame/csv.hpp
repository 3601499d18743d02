#pragma once

#include "flame/types.hpp"

#include <iosfwd>
#include <string>

namespace flame {

/// Reads a comma-separated file with a mandatory header row, UTF-8 text and
/// '.' decimals. The label column must carry exactly two distinct tokens;
/// the positive token maps to +1 and the other to -1. Feature columns must
/// be numeric. Errors carry row/column context.
LabeledDataset load_csv(const std::string& path, const std::string& label_column,
                        const std::string& positive_token);

/// Feature matrix without labels, same dialect; used for prediction inputs.
Eigen::MatrixXd load_features_csv(const std::string& path,
                                  std::vector<std::string>* names = nullptr);

/// Keeps the `keep` features with the largest |sd/mean| ratio, preserving
/// the original column order. Zero-mean features with positive sd rank above
/// every finite ratio (by sd among themselves); a warning is emitted for
/// them since the ratio is formally undefined.
LabeledDataset variance_ratio_filter(const LabeledDataset& data, int keep,
                                     std::ostream* warnings = nullptr);

}  // namespace flame
