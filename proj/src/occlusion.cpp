#include "stereostyle/occlusion.hpp"

#include <cmath>
#include <iostream>

#include "stereostyle/warp.hpp"

namespace stereostyle {

OcclusionMask consistency_check(const DisparityMap& d_fwd, const DisparityMap& d_bwd,
                                double tau) {
  require_same_extent(d_fwd, d_bwd, "consistency_check");
  if (!(tau > 0.0)) throw ConfigError("consistency_check: tau must be positive");
  const int H = d_fwd.height(), W = d_fwd.width();
  const Tensor3 back = backward_warp(to_tensor(d_bwd), d_fwd);
  OcclusionMask m(H, W);
  for (int y = 0; y < H; ++y) {
    for (int x = 0; x < W; ++x) {
      const double target = x + d_fwd(y, x);
      const bool outside = target < 0.0 || target > W - 1;
      m(y, x) = (outside || std::abs(d_fwd(y, x) + back(y, x, 0)) > tau) ? 1 : 0;
    }
  }
  return m;
}

WeightMap balance_weights(const OcclusionMask& m) {
  const std::size_t occ = count_nonzero(m);
  const std::size_t visible = m.size() - occ;
  WeightMap w(m.height(), m.width(), 1.0);
  if (occ == 0) return w;
  if (visible == 0) {
    std::cerr << "warning: balance_weights: mask is fully occluded, using unit weights\n";
    return w;
  }
  const double ratio = static_cast<double>(visible) / static_cast<double>(occ);
  auto mv = m.values();
  auto wv = w.values();
  for (std::size_t i = 0; i < mv.size(); ++i)
    if (mv[i]) wv[i] = ratio;
  return w;
}

}  // namespace stereostyle
