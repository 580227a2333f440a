#include "stereostyle/eval.hpp"

#include <cmath>

#include "stereostyle/losses.hpp"

namespace stereostyle {

double epe_nonoccluded(const DisparityMap& d, const DisparityMap& d_gt, const OcclusionMask& m_gt) {
  require_same_extent(d, d_gt, "epe_nonoccluded");
  require_same_extent(d, m_gt, "epe_nonoccluded");
  if (count_nonzero(m_gt) == m_gt.size())
    throw UndefinedMetricError("epe_nonoccluded: every pixel is occluded");
  return disp_train_loss(d, d_gt, m_gt);
}

double occlusion_fscore(const OcclusionMask& m, const OcclusionMask& m_gt) {
  require_same_extent(m, m_gt, "occlusion_fscore");
  std::size_t tp = 0, fp = 0, fn = 0;
  auto a = m.values();
  auto b = m_gt.values();
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i] && b[i]) ++tp;
    else if (a[i]) ++fp;
    else if (b[i]) ++fn;
  }
  if (tp + fp + fn == 0) return 1.0;
  if (tp == 0) return 0.0;
  const double precision = static_cast<double>(tp) / static_cast<double>(tp + fp);
  const double recall = static_cast<double>(tp) / static_cast<double>(tp + fn);
  return 2.0 * precision * recall / (precision + recall);
}

double consistency_metric(const Tensor3& o_l, const Tensor3& o_r, const DisparityMap& d_l,
                          const DisparityMap& d_r, const OcclusionMask& m_l,
                          const OcclusionMask& m_r) {
  return disparity_loss_value(o_l, o_r, d_l, m_l) + disparity_loss_value(o_r, o_l, d_r, m_r);
}

}  // namespace stereostyle
