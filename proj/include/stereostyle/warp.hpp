#pragma once

#include "stereostyle/tensor.hpp"

namespace stereostyle {

/// Accumulated splat weight below which a forward-warped pixel is a hole.
inline constexpr double kHoleThreshold = 1e-4;

struct WarpGrad {
  Tensor3 grad_x;
  DisparityMap grad_d;
};

struct FlowWarpGrad {
  Tensor3 grad_x;
  Tensor3 grad_flow;  // 2 channels: d/d(dx), d/d(dy)
};

struct SplatResult {
  Tensor3 image;
  HoleMask holes;
};

// Backward warping (gather). output(p) = x(p + (d(p), 0)) with linear
// interpolation; source coordinates are clamped to the image.

Tensor3 backward_warp(const Tensor3& x, const DisparityMap& d);
WarpGrad backward_warp_vjp(const Tensor3& x, const DisparityMap& d, const Tensor3& cotangent);

/// 2D variant: output(p) = x(p + flow(p)), bilinear, clamped.
Tensor3 backward_warp_flow(const Tensor3& x, const Tensor3& flow);
FlowWarpGrad backward_warp_flow_vjp(const Tensor3& x, const Tensor3& flow,
                                    const Tensor3& cotangent);

// Forward warping (splat). Every source pixel q with mask(q) == 0 distributes
// x(q) over the four grid points around q + displacement(q) with bilinear
// weights; each output pixel is the weight-normalized sum of what it
// received. Pixels whose total weight is below kHoleThreshold are zero and
// flagged in the returned hole mask.

SplatResult forward_warp(const Tensor3& x, const DisparityMap& d, const OcclusionMask& m);
SplatResult forward_warp(const Tensor3& x, const DisparityMap& d, const HoleMask& m);
WarpGrad forward_warp_vjp(const Tensor3& x, const DisparityMap& d, const OcclusionMask& m,
                          const Tensor3& cotangent);
WarpGrad forward_warp_vjp(const Tensor3& x, const DisparityMap& d, const HoleMask& m,
                          const Tensor3& cotangent);

SplatResult forward_warp_flow(const Tensor3& x, const Tensor3& flow, const OcclusionMask& m);
FlowWarpGrad forward_warp_flow_vjp(const Tensor3& x, const Tensor3& flow,
                                   const OcclusionMask& m, const Tensor3& cotangent);

}  // namespace stereostyle
