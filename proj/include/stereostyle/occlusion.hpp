#pragma once

#include "stereostyle/tensor.hpp"

namespace stereostyle {

/// Default forward-backward consistency threshold in pixels.
inline constexpr double kDefaultConsistencyTau = 0.5;

/// Forward-backward consistency check. Pixel p of the forward view is
/// occluded when its correspondence p + (d_fwd(p), 0) leaves the image, or
/// when the round trip |d_fwd(p) + d_bwd(p + d_fwd(p))| exceeds tau
/// (d_bwd sampled with the linear backward warp).
OcclusionMask consistency_check(const DisparityMap& d_fwd, const DisparityMap& d_bwd,
                                double tau = kDefaultConsistencyTau);

/// Class-balance weights: 1 at visible pixels, #visible/#occluded at occluded
/// ones. A mask without occlusions yields all ones. A fully occluded mask
/// would give weight 0 everywhere; weights are clamped to 1 instead and a
/// warning is written to stderr.
WeightMap balance_weights(const OcclusionMask& m);

}  // namespace stereostyle
