#pragma once

#include "stereostyle/tensor.hpp"

namespace stereostyle {

/// Mean |d - d_gt| over pixels visible in m_gt. Throws UndefinedMetricError
/// when every pixel is occluded.
double epe_nonoccluded(const DisparityMap& d, const DisparityMap& d_gt, const OcclusionMask& m_gt);

/// F1 score of the occluded class: 2PR / (P + R). Both masks empty gives 1;
/// no true positives gives 0.
double occlusion_fscore(const OcclusionMask& m, const OcclusionMask& m_gt);

/// Sum of the left and right disparity losses of a stylized pair.
double consistency_metric(const Tensor3& o_l, const Tensor3& o_r, const DisparityMap& d_l,
                          const DisparityMap& d_r, const OcclusionMask& m_l,
                          const OcclusionMask& m_r);

}  // namespace stereostyle
