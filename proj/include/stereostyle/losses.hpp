#pragma once

#include <array>
#include <vector>

#include "stereostyle/features.hpp"
#include "stereostyle/tensor.hpp"

namespace stereostyle {

struct LossAndGrad {
  double value = 0.0;
  Tensor3 grad;
};

/// Sum over content taps of the mean squared feature difference.
LossAndGrad content_loss(const FeatureExtractor& e, const Tensor3& o, const Tensor3& i);

/// Gram matrices of `style` at every style tap, in style_taps() order.
std::vector<GramMatrix> style_grams(const FeatureExtractor& e, const Tensor3& style);

/// Sum over style taps of the squared Frobenius distance between Gram matrices.
LossAndGrad style_loss(const FeatureExtractor& e, const Tensor3& o,
                       const std::vector<GramMatrix>& s_grams);

/// Content and style losses of one view sharing a single forward and
/// backward pass. Targets are computed once at construction.
class PerceptualObjective {
public:
  PerceptualObjective(const FeatureExtractor& e, const Tensor3& content_image,
                      std::vector<GramMatrix> style_grams);

  struct Result {
    double content = 0.0;
    double style = 0.0;
    /// alpha * d(content)/do + beta * d(style)/do
    Tensor3 grad;
    bool content_finite = true;
    bool style_finite = true;
  };

  Result evaluate(const Tensor3& o, double alpha, double beta) const;

  const FeatureExtractor& extractor() const noexcept { return *e_; }

private:
  const FeatureExtractor* e_;
  int height_;
  int width_;
  int channels_;
  std::vector<Tensor3> content_targets_;  // content_taps() order
  std::vector<GramMatrix> style_grams_;   // style_taps() order
};

struct DisparityLossResult {
  double value = 0.0;
  Tensor3 grad_o_v;
  Tensor3 grad_o_vstar;
};

/// Mean over visible pixels and channels of (o_v - backward_warp(o_vstar, d_v))^2.
/// Zero (with zero gradients) when every pixel is occluded. The disparity is
/// a constant.
DisparityLossResult disparity_loss(const Tensor3& o_v, const Tensor3& o_vstar,
                                   const DisparityMap& d_v, const OcclusionMask& m_v);

/// Value-only variant of disparity_loss.
double disparity_loss_value(const Tensor3& o_v, const Tensor3& o_vstar, const DisparityMap& d_v,
                            const OcclusionMask& m_v);

/// Mean |d - d_gt| over visible pixels of m_gt; 0 if every pixel is occluded.
double disp_train_loss(const DisparityMap& d, const DisparityMap& d_gt, const OcclusionMask& m_gt);

inline constexpr double kCrossEntropyEpsilon = 1e-7;

/// Class-balanced binary cross-entropy averaged over all pixels. `m_pred` is a
/// single-channel soft mask; predictions are clamped into [eps, 1 - eps].
double occ_train_loss(const Tensor3& m_pred, const OcclusionMask& m_gt, const WeightMap& w);

/// Prediction and ground truth of one view for the disparity/occlusion
/// training objective.
struct DispOccView {
  const DisparityMap& d;
  const DisparityMap& d_gt;
  const Tensor3& m_pred;
  const OcclusionMask& m_gt;
};

/// Per-resolution training objective over both views:
/// sum_v disp_train_loss + lambda * occ_train_loss, with weights from
/// balance_weights(m_gt).
double dispocc_loss(const DispOccView& left, const DispOccView& right, double lambda);

/// Masked squared difference between o_t and o_prev warped along the
/// backward flow (2 channels: dx, dy), mean over visible pixels and channels.
/// Gradient w.r.t. o_t only.
LossAndGrad temporal_loss(const Tensor3& o_t, const Tensor3& o_prev, const Tensor3& flow,
                          const OcclusionMask& m_t);

/// Unweighted loss components of one view.
struct ViewLosses {
  double content = 0.0;
  double style = 0.0;
  double disparity = 0.0;
};

/// Raw component losses and the weighted total over both views.
struct LossBreakdown {
  double content_l = 0.0;
  double content_r = 0.0;
  double style_l = 0.0;
  double style_r = 0.0;
  double disp_l = 0.0;
  double disp_r = 0.0;
  double total = 0.0;

  /// The six weighted summands of `total`
  /// (alpha*content_l, alpha*content_r, beta*style_l, beta*style_r, gamma*disp_l, gamma*disp_r).
  std::array<double, 6> weighted(const LossWeights& w) const;
  /// alpha*(content_l+content_r) + beta*(style_l+style_r)
  double perceptual(const LossWeights& w) const;
};

LossBreakdown total_loss(const LossWeights& w, const ViewLosses& left, const ViewLosses& right);

}  // namespace stereostyle
