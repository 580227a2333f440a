#pragma once

#include "stereostyle/tensor.hpp"

namespace stereostyle {

/// A stereo pair with bidirectional disparities and occlusion masks.
struct StereoPair {
  Tensor3 left;
  Tensor3 right;
  DisparityMap d_left;
  DisparityMap d_right;
  OcclusionMask m_left;
  OcclusionMask m_right;

  /// Throws DimensionError unless every field shares one extent and both
  /// views have the same channel count.
  void validate() const;
};

}  // namespace stereostyle
