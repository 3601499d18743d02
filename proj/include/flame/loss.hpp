#pragma once

#include "flame/types.hpp"

namespace flame {

/// DWD loss V(u): 2*sqrt(C) - C*u for u <= 1/sqrt(C), else 1/u.
/// Convex, non-increasing and strictly positive everywhere.
double dwd_loss(double u, double C);

/// Modified Hinge loss H*(u): sqrt(C) - C*u for u <= 1/sqrt(C), else 0.
/// Equals the DWD loss soft-thresholded at sqrt(C).
double modified_hinge(double u, double C);

/// FLAME loss L(u) = (V(u) - theta*sqrt(C))_+ :
///   (2-theta)*sqrt(C) - C*u          for u <= 1/sqrt(C)
///   1/u - theta*sqrt(C)              for 1/sqrt(C) <= u < 1/(theta*sqrt(C))
///   0                                for u >= 1/(theta*sqrt(C))
/// theta = 0 recovers the DWD loss (the zero branch is empty),
/// theta = 1 recovers the modified Hinge loss.
double flame_loss(double u, double C, double theta);

/// One-sided derivative of flame_loss; at kinks, the right-hand derivative,
/// which is always a valid subgradient element.
double flame_subgradient(double u, double C, double theta);

/// Data-driven default for the loss scale C: 100 / t^2 where t is the
/// median Euclidean distance between inter-class sample pairs. A scale
/// heuristic, overridable through FlameConfig::loss_scale.
double default_loss_scale(const LabeledDataset& data);

/// Loss scale from config, falling back to the data-driven default.
double resolve_loss_scale(const FlameConfig& config, const LabeledDataset& data);

}  // namespace flame
