#include "stereostyle/middle.hpp"

#include <algorithm>
#include <cmath>

#include "stereostyle/warp.hpp"

namespace stereostyle {

namespace {

struct Sample {
  int i0;
  int i1;
  double frac;
};

// Half-pixel-center source coordinate for destination index `i`.
Sample source(int i, int out_n, int in_n) {
  const double s = std::clamp((i + 0.5) * in_n / out_n - 0.5, 0.0, static_cast<double>(in_n - 1));
  const int i0 = static_cast<int>(std::floor(s));
  const int i1 = std::min(i0 + 1, in_n - 1);
  return {i0, i1, s - i0};
}

template <typename Get>
double bilerp(const Sample& sy, const Sample& sx, Get get) {
  const double top = (1 - sx.frac) * get(sy.i0, sx.i0) + sx.frac * get(sy.i0, sx.i1);
  const double bot = (1 - sx.frac) * get(sy.i1, sx.i0) + sx.frac * get(sy.i1, sx.i1);
  return (1 - sy.frac) * top + sy.frac * bot;
}

DisparityMap scaled(const DisparityMap& d, double s) {
  DisparityMap out(d.height(), d.width());
  auto src = d.values();
  auto dst = out.values();
  for (std::size_t i = 0; i < src.size(); ++i) dst[i] = src[i] * s;
  return out;
}

// Warps back to a view and fuses with the original features.
Tensor3 fuse(const MiddleDomain& mid, const DisparityMap& shift, const Tensor3& f,
             const OcclusionMask& m) {
  const SplatResult back = forward_warp(mid.features, shift, mid.holes);
  Tensor3 out = f;
  for (int y = 0; y < f.height(); ++y) {
    for (int x = 0; x < f.width(); ++x) {
      if (m(y, x) || back.holes(y, x)) continue;
      std::copy_n(back.image.pixel(y, x), f.channels(), out.pixel(y, x));
    }
  }
  return out;
}

}  // namespace

DisparityMap resize_disparity(const DisparityMap& d, int height, int width) {
  if (d.height() == height && d.width() == width) return d;
  DisparityMap out(height, width);
  const double scale = static_cast<double>(width) / d.width();
  for (int y = 0; y < height; ++y) {
    const Sample sy = source(y, height, d.height());
    for (int x = 0; x < width; ++x) {
      const Sample sx = source(x, width, d.width());
      out(y, x) = scale * bilerp(sy, sx, [&](int yy, int xx) { return d(yy, xx); });
    }
  }
  return out;
}

OcclusionMask resize_mask(const OcclusionMask& m, int height, int width) {
  if (m.height() == height && m.width() == width) return m;
  OcclusionMask out(height, width);
  for (int y = 0; y < height; ++y) {
    const Sample sy = source(y, height, m.height());
    for (int x = 0; x < width; ++x) {
      const Sample sx = source(x, width, m.width());
      const double v = bilerp(sy, sx, [&](int yy, int xx) { return double(m(yy, xx)); });
      out(y, x) = v >= 0.5 ? 1 : 0;
    }
  }
  return out;
}

Tensor3 resize_bilinear(const Tensor3& t, int height, int width) {
  if (t.height() == height && t.width() == width) return t;
  Tensor3 out(height, width, t.channels());
  for (int y = 0; y < height; ++y) {
    const Sample sy = source(y, height, t.height());
    for (int x = 0; x < width; ++x) {
      const Sample sx = source(x, width, t.width());
      for (int c = 0; c < t.channels(); ++c)
        out(y, x, c) = bilerp(sy, sx, [&](int yy, int xx) { return t(yy, xx, c); });
    }
  }
  return out;
}

MiddleDomain to_middle(const Tensor3& f_l, const Tensor3& f_r, const DisparityMap& d_l,
                       const DisparityMap& d_r, const OcclusionMask& m_l,
                       const OcclusionMask& m_r) {
  if (!f_l.same_shape(f_r)) throw DimensionError("to_middle: feature shape mismatch");
  require_same_extent(d_l, d_r, "to_middle");
  require_same_extent(d_l, m_l, "to_middle");
  require_same_extent(d_l, m_r, "to_middle");
  const int H = f_l.height(), W = f_l.width(), C = f_l.channels();

  const DisparityMap half_l = scaled(resize_disparity(d_l, H, W), 0.5);
  const DisparityMap half_r = scaled(resize_disparity(d_r, H, W), 0.5);
  const OcclusionMask ml = resize_mask(m_l, H, W);
  const OcclusionMask mr = resize_mask(m_r, H, W);

  const SplatResult fl = forward_warp(f_l, half_l, ml);
  const SplatResult fr = forward_warp(f_r, half_r, mr);
  const SplatResult dl = forward_warp(to_tensor(half_l), half_l, ml);
  const SplatResult dr = forward_warp(to_tensor(half_r), half_r, mr);

  MiddleDomain mid{Tensor3(H, W, C), DisparityMap(H, W), HoleMask(H, W)};
  for (int y = 0; y < H; ++y) {
    for (int x = 0; x < W; ++x) {
      const bool has_l = !fl.holes(y, x);
      const bool has_r = !fr.holes(y, x);
      double* out = mid.features.pixel(y, x);
      const double* a = fl.image.pixel(y, x);
      const double* b = fr.image.pixel(y, x);
      if (has_l && has_r) {
        for (int c = 0; c < C; ++c) out[c] = (a[c] + b[c]) / 2.0;
        mid.disparity(y, x) = (-dl.image(y, x, 0) + dr.image(y, x, 0)) / 2.0;
      } else if (has_l) {
        std::copy_n(a, C, out);
        mid.disparity(y, x) = -dl.image(y, x, 0);
      } else if (has_r) {
        std::copy_n(b, C, out);
        mid.disparity(y, x) = dr.image(y, x, 0);
      } else {
        mid.holes(y, x) = 1;
      }
    }
  }
  return mid;
}

StereoFeatures from_middle(const MiddleDomain& mid, const Tensor3& f_l, const Tensor3& f_r,
                           const OcclusionMask& m_l, const OcclusionMask& m_r) {
  if (!f_l.same_shape(f_r) || !f_l.same_shape(mid.features))
    throw DimensionError("from_middle: feature shape mismatch");
  require_same_extent(m_l, m_r, "from_middle");
  const int H = f_l.height(), W = f_l.width();
  const OcclusionMask ml = resize_mask(m_l, H, W);
  const OcclusionMask mr = resize_mask(m_r, H, W);
  // Middle pixel p sits at p + D_h in the left view and p - D_h in the right.
  return {fuse(mid, mid.disparity, f_l, ml), fuse(mid, negate(mid.disparity), f_r, mr)};
}

StylePipeline make_default_pipeline(std::uint64_t seed) {
  return {make_random_extractor({3, 16, 16}, seed),
          make_random_extractor({16, 16, 3}, seed + 1, /*linear_last=*/true)};
}

StereoImages stereo_consistent_pass(const StylePipeline& p, const Tensor3& i_l,
                                    const Tensor3& i_r, const DisparityMap& d_l,
                                    const DisparityMap& d_r, const OcclusionMask& m_l,
                                    const OcclusionMask& m_r) {
  if (!i_l.same_shape(i_r)) throw DimensionError("stereo_consistent_pass: view shape mismatch");
  require_same_extent(i_l, d_l, "stereo_consistent_pass");
  if (p.decoder.input_channels() != p.encoder.output_channels())
    throw DimensionError("stereo_consistent_pass: decoder does not accept encoder features");
  const Tensor3 f_l = run(p.encoder, i_l);
  const Tensor3 f_r = run(p.encoder, i_r);
  const MiddleDomain mid = to_middle(f_l, f_r, d_l, d_r, m_l, m_r);
  const StereoFeatures fused = from_middle(mid, f_l, f_r, m_l, m_r);
  const int H = i_l.height(), W = i_l.width();
  return {resize_bilinear(run(p.decoder, fused.left), H, W),
          resize_bilinear(run(p.decoder, fused.right), H, W)};
}

StereoImages independent_pass(const StylePipeline& p, const Tensor3& i_l, const Tensor3& i_r) {
  if (p.decoder.input_channels() != p.encoder.output_channels())
    throw DimensionError("independent_pass: decoder does not accept encoder features");
  const int H = i_l.height(), W = i_l.width();
  return {resize_bilinear(run(p.decoder, run(p.encoder, i_l)), H, W),
          resize_bilinear(run(p.decoder, run(p.encoder, i_r)), H, W)};
}

}  // namespace stereostyle
