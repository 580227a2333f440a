#pragma once

#include <cstdint>

#include "stereostyle/features.hpp"
#include "stereostyle/tensor.hpp"

namespace stereostyle {

/// Features of the virtual view halfway between left and right.
///
/// `disparity` is the symmetric shift D_h = (-d_l + d_r) / 4 measured on the
/// middle grid: middle pixel p corresponds to left pixel p + (D_h(p), 0) and
/// right pixel p - (D_h(p), 0). `features` is zero wherever `holes` is 1.
struct MiddleDomain {
  Tensor3 features;
  DisparityMap disparity;
  HoleMask holes;
};

/// Bilinear resize of a disparity field to height x width (half-pixel
/// centers); values are scaled by width / d.width() since they are lengths
/// along x.
DisparityMap resize_disparity(const DisparityMap& d, int height, int width);

/// Bilinear resize of a mask followed by thresholding at 0.5.
OcclusionMask resize_mask(const OcclusionMask& m, int height, int width);

/// Bilinear resize of every channel (half-pixel centers, clamped).
Tensor3 resize_bilinear(const Tensor3& t, int height, int width);

/// Forward-warps both views by half their disparity into the middle grid.
/// Where both views land the middle value is their average, where only one
/// lands it is that view's value, and where neither does the pixel is a hole.
/// Disparities and masks at a finer resolution than the features are resized
/// to the feature grid first.
MiddleDomain to_middle(const Tensor3& f_l, const Tensor3& f_r, const DisparityMap& d_l,
                       const DisparityMap& d_r, const OcclusionMask& m_l,
                       const OcclusionMask& m_r);

struct StereoFeatures {
  Tensor3 left;
  Tensor3 right;
};

/// Forward-warps the middle features back to each view (holes excluded) and
/// fuses: occluded pixels, and visible pixels that received nothing, keep the
/// original per-view feature; other pixels take the warped middle feature.
StereoFeatures from_middle(const MiddleDomain& mid, const Tensor3& f_l, const Tensor3& f_r,
                           const OcclusionMask& m_l, const OcclusionMask& m_r);

/// Encoder/decoder pair used for feed-forward composition. The decoder maps
/// encoder features back to an image; its output is resized to the input
/// resolution when the encoder downsamples.
struct StylePipeline {
  FeatureExtractor encoder;
  FeatureExtractor decoder;
};

/// Random-weight 3->16->16 encoder and 16->16->3 decoder (3x3, stride 1).
StylePipeline make_default_pipeline(std::uint64_t seed = 7);

struct StereoImages {
  Tensor3 left;
  Tensor3 right;
};

/// encode -> to_middle -> from_middle -> decode for both views.
StereoImages stereo_consistent_pass(const StylePipeline& p, const Tensor3& i_l,
                                    const Tensor3& i_r, const DisparityMap& d_l,
                                    const DisparityMap& d_r, const OcclusionMask& m_l,
                                    const OcclusionMask& m_r);

/// Baseline: encode and decode each view on its own.
StereoImages independent_pass(const StylePipeline& p, const Tensor3& i_l, const Tensor3& i_r);

}  // namespace stereostyle
