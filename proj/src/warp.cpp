#include "stereostyle/warp.hpp"

#include <cmath>
#include <span>
#include <vector>

namespace stereostyle {

namespace {

// Clamped linear sampling position along one axis of length n.
struct Axis {
  int i0;
  int i1;
  double frac;
  bool clamped;  // position saturated at the border; derivative is zero
};

Axis locate(double s, int n) {
  Axis a{0, 0, 0.0, false};
  if (n == 1) {
    a.clamped = true;
    return a;
  }
  if (s <= 0.0) {
    a.i0 = 0;
    a.i1 = 1;
    a.clamped = s < 0.0;
    return a;
  }
  if (s >= n - 1) {
    a.i0 = n - 2;
    a.i1 = n - 1;
    a.frac = 1.0;
    a.clamped = s > n - 1;
    return a;
  }
  a.i0 = static_cast<int>(std::floor(s));
  if (a.i0 > n - 2) a.i0 = n - 2;
  a.i1 = a.i0 + 1;
  a.frac = s - a.i0;
  return a;
}

void check_flow(const Tensor3& x, const Tensor3& flow, const char* what) {
  require_same_extent(x, flow, what);
  if (flow.channels() != 2) throw DimensionError(std::string(what) + ": flow needs 2 channels");
}

// Displacement accessors so the horizontal and 2D warps share one kernel.
struct HorizontalField {
  const DisparityMap& d;
  double dx(int y, int x) const { return d(y, x); }
  double dy(int, int) const { return 0.0; }
};

struct FlowField {
  const Tensor3& f;
  double dx(int y, int x) const { return f(y, x, 0); }
  double dy(int y, int x) const { return f(y, x, 1); }
};

template <typename Field>
Tensor3 gather(const Tensor3& x, const Field& field) {
  const int H = x.height(), W = x.width(), C = x.channels();
  Tensor3 out(H, W, C);
  for (int y = 0; y < H; ++y) {
    for (int px = 0; px < W; ++px) {
      const Axis ax = locate(px + field.dx(y, px), W);
      const Axis ay = locate(y + field.dy(y, px), H);
      const double* p00 = x.pixel(ay.i0, ax.i0);
      const double* p01 = x.pixel(ay.i0, ax.i1);
      const double* p10 = x.pixel(ay.i1, ax.i0);
      const double* p11 = x.pixel(ay.i1, ax.i1);
      double* o = out.pixel(y, px);
      for (int c = 0; c < C; ++c) {
        const double top = (1.0 - ax.frac) * p00[c] + ax.frac * p01[c];
        const double bot = (1.0 - ax.frac) * p10[c] + ax.frac * p11[c];
        o[c] = (1.0 - ay.frac) * top + ay.frac * bot;
      }
    }
  }
  return out;
}

// Adjoint of gather. grad_dx / grad_dy receive d(loss)/d(displacement).
template <typename Field>
void gather_vjp(const Tensor3& x, const Field& field, const Tensor3& cot, Tensor3& grad_x,
                std::span<double> grad_dx, std::span<double> grad_dy) {
  const int H = x.height(), W = x.width(), C = x.channels();
  for (int y = 0; y < H; ++y) {
    for (int px = 0; px < W; ++px) {
      const Axis ax = locate(px + field.dx(y, px), W);
      const Axis ay = locate(y + field.dy(y, px), H);
      const double wx0 = 1.0 - ax.frac, wx1 = ax.frac;
      const double wy0 = 1.0 - ay.frac, wy1 = ay.frac;
      const double* g = cot.pixel(y, px);
      double* g00 = grad_x.pixel(ay.i0, ax.i0);
      double* g01 = grad_x.pixel(ay.i0, ax.i1);
      double* g10 = grad_x.pixel(ay.i1, ax.i0);
      double* g11 = grad_x.pixel(ay.i1, ax.i1);
      const double* p00 = x.pixel(ay.i0, ax.i0);
      const double* p01 = x.pixel(ay.i0, ax.i1);
      const double* p10 = x.pixel(ay.i1, ax.i0);
      const double* p11 = x.pixel(ay.i1, ax.i1);
      double sdx = 0.0, sdy = 0.0;
      for (int c = 0; c < C; ++c) {
        g00[c] += wy0 * wx0 * g[c];
        g01[c] += wy0 * wx1 * g[c];
        g10[c] += wy1 * wx0 * g[c];
        g11[c] += wy1 * wx1 * g[c];
        sdx += g[c] * (wy0 * (p01[c] - p00[c]) + wy1 * (p11[c] - p10[c]));
        sdy += g[c] * (wx0 * (p10[c] - p00[c]) + wx1 * (p11[c] - p01[c]));
      }
      const std::size_t i = static_cast<std::size_t>(y) * W + px;
      if (!ax.clamped) grad_dx[i] += sdx;
      if (!grad_dy.empty() && !ay.clamped) grad_dy[i] += sdy;
    }
  }
}

struct Corner {
  int x;
  int y;
  double w;
  double dw_dx;  // derivative of w w.r.t. the target x coordinate
  double dw_dy;
};

// Bilinear splat footprint of a target position; only in-bounds corners.
int splat_corners(double tx, double ty, int W, int H, Corner (&out)[4]) {
  const double fx0 = std::floor(tx), fy0 = std::floor(ty);
  const int x0 = static_cast<int>(fx0), y0 = static_cast<int>(fy0);
  const double fx = tx - fx0, fy = ty - fy0;
  const Corner all[4] = {
      {x0, y0, (1 - fx) * (1 - fy), -(1 - fy), -(1 - fx)},
      {x0 + 1, y0, fx * (1 - fy), (1 - fy), -fx},
      {x0, y0 + 1, (1 - fx) * fy, -fy, (1 - fx)},
      {x0 + 1, y0 + 1, fx * fy, fy, fx},
  };
  int n = 0;
  for (const Corner& c : all) {
    if (c.x >= 0 && c.x < W && c.y >= 0 && c.y < H) out[n++] = c;
  }
  return n;
}

struct Accumulators {
  std::vector<double> num;  // H*W*C
  std::vector<double> den;  // H*W
};

template <typename Field>
Accumulators accumulate(const Tensor3& x, const Field& field, std::span<const std::uint8_t> mask) {
  const int H = x.height(), W = x.width(), C = x.channels();
  Accumulators acc{std::vector<double>(x.size(), 0.0),
                   std::vector<double>(static_cast<std::size_t>(H) * W, 0.0)};
  Corner corners[4];
  for (int y = 0; y < H; ++y) {
    for (int qx = 0; qx < W; ++qx) {
      if (mask[static_cast<std::size_t>(y) * W + qx]) continue;
      const int n = splat_corners(qx + field.dx(y, qx), y + field.dy(y, qx), W, H, corners);
      const double* src = x.pixel(y, qx);
      for (int k = 0; k < n; ++k) {
        const std::size_t p = static_cast<std::size_t>(corners[k].y) * W + corners[k].x;
        acc.den[p] += corners[k].w;
        for (int c = 0; c < C; ++c) acc.num[p * C + c] += corners[k].w * src[c];
      }
    }
  }
  return acc;
}

template <typename Field>
SplatResult splat(const Tensor3& x, const Field& field, std::span<const std::uint8_t> mask) {
  const int H = x.height(), W = x.width(), C = x.channels();
  const Accumulators acc = accumulate(x, field, mask);
  SplatResult r{Tensor3(H, W, C), HoleMask(H, W)};
  auto out = r.image.values();
  auto holes = r.holes.values();
  for (std::size_t p = 0; p < acc.den.size(); ++p) {
    if (acc.den[p] < kHoleThreshold) {
      holes[p] = 1;
      continue;
    }
    for (int c = 0; c < C; ++c) out[p * C + c] = acc.num[p * C + c] / acc.den[p];
  }
  return r;
}

template <typename Field>
void splat_vjp(const Tensor3& x, const Field& field, std::span<const std::uint8_t> mask,
               const Tensor3& cot, Tensor3& grad_x, std::span<double> grad_dx,
               std::span<double> grad_dy) {
  const int H = x.height(), W = x.width(), C = x.channels();
  const Accumulators acc = accumulate(x, field, mask);

  // out = num / den: d/dnum = cot / den, d/dden = -sum_c cot * out / den.
  std::vector<double> g_num(x.size(), 0.0);
  std::vector<double> g_den(acc.den.size(), 0.0);
  auto g = cot.values();
  for (std::size_t p = 0; p < acc.den.size(); ++p) {
    const double den = acc.den[p];
    if (den < kHoleThreshold) continue;
    double s = 0.0;
    for (int c = 0; c < C; ++c) {
      const double out = acc.num[p * C + c] / den;
      g_num[p * C + c] = g[p * C + c] / den;
      s += g[p * C + c] * out;
    }
    g_den[p] = -s / den;
  }

  Corner corners[4];
  for (int y = 0; y < H; ++y) {
    for (int qx = 0; qx < W; ++qx) {
      const std::size_t q = static_cast<std::size_t>(y) * W + qx;
      if (mask[q]) continue;
      const int n = splat_corners(qx + field.dx(y, qx), y + field.dy(y, qx), W, H, corners);
      const double* src = x.pixel(y, qx);
      double* gx = grad_x.pixel(y, qx);
      double tdx = 0.0, tdy = 0.0;
      for (int k = 0; k < n; ++k) {
        const std::size_t p = static_cast<std::size_t>(corners[k].y) * W + corners[k].x;
        double dl_dw = g_den[p];
        for (int c = 0; c < C; ++c) {
          gx[c] += corners[k].w * g_num[p * C + c];
          dl_dw += g_num[p * C + c] * src[c];
        }
        tdx += dl_dw * corners[k].dw_dx;
        tdy += dl_dw * corners[k].dw_dy;
      }
      grad_dx[q] += tdx;
      if (!grad_dy.empty()) grad_dy[q] += tdy;
    }
  }
}

void require_cotangent(const Tensor3& x, const Tensor3& cot, const char* what) {
  if (!x.same_shape(cot)) throw DimensionError(std::string(what) + ": cotangent shape mismatch");
}

// Splits an interleaved 2-channel flow gradient buffer into a tensor.
Tensor3 interleave(int H, int W, const std::vector<double>& gx, const std::vector<double>& gy) {
  Tensor3 t(H, W, 2);
  for (int y = 0; y < H; ++y)
    for (int x = 0; x < W; ++x) {
      const std::size_t i = static_cast<std::size_t>(y) * W + x;
      t(y, x, 0) = gx[i];
      t(y, x, 1) = gy[i];
    }
  return t;
}

template <typename Mask>
SplatResult forward_warp_impl(const Tensor3& x, const DisparityMap& d, const Mask& m) {
  require_same_extent(x, d, "forward_warp");
  require_same_extent(x, m, "forward_warp");
  return splat(x, HorizontalField{d}, m.values());
}

template <typename Mask>
WarpGrad forward_warp_vjp_impl(const Tensor3& x, const DisparityMap& d, const Mask& m,
                               const Tensor3& cot) {
  require_same_extent(x, d, "forward_warp_vjp");
  require_same_extent(x, m, "forward_warp_vjp");
  require_cotangent(x, cot, "forward_warp_vjp");
  WarpGrad g{Tensor3(x.height(), x.width(), x.channels()), DisparityMap(x.height(), x.width())};
  splat_vjp(x, HorizontalField{d}, m.values(), cot, g.grad_x, g.grad_d.values(), {});
  return g;
}

}  // namespace

Tensor3 backward_warp(const Tensor3& x, const DisparityMap& d) {
  require_same_extent(x, d, "backward_warp");
  return gather(x, HorizontalField{d});
}

WarpGrad backward_warp_vjp(const Tensor3& x, const DisparityMap& d, const Tensor3& cotangent) {
  require_same_extent(x, d, "backward_warp_vjp");
  require_cotangent(x, cotangent, "backward_warp_vjp");
  WarpGrad g{Tensor3(x.height(), x.width(), x.channels()), DisparityMap(x.height(), x.width())};
  gather_vjp(x, HorizontalField{d}, cotangent, g.grad_x, g.grad_d.values(), {});
  return g;
}

Tensor3 backward_warp_flow(const Tensor3& x, const Tensor3& flow) {
  check_flow(x, flow, "backward_warp_flow");
  return gather(x, FlowField{flow});
}

FlowWarpGrad backward_warp_flow_vjp(const Tensor3& x, const Tensor3& flow,
                                    const Tensor3& cotangent) {
  check_flow(x, flow, "backward_warp_flow_vjp");
  require_cotangent(x, cotangent, "backward_warp_flow_vjp");
  const int H = x.height(), W = x.width();
  std::vector<double> gx(static_cast<std::size_t>(H) * W, 0.0), gy(gx.size(), 0.0);
  Tensor3 grad_x(H, W, x.channels());
  gather_vjp(x, FlowField{flow}, cotangent, grad_x, gx, gy);
  return {std::move(grad_x), interleave(H, W, gx, gy)};
}

SplatResult forward_warp(const Tensor3& x, const DisparityMap& d, const OcclusionMask& m) {
  return forward_warp_impl(x, d, m);
}

SplatResult forward_warp(const Tensor3& x, const DisparityMap& d, const HoleMask& m) {
  return forward_warp_impl(x, d, m);
}

WarpGrad forward_warp_vjp(const Tensor3& x, const DisparityMap& d, const OcclusionMask& m,
                          const Tensor3& cotangent) {
  return forward_warp_vjp_impl(x, d, m, cotangent);
}

WarpGrad forward_warp_vjp(const Tensor3& x, const DisparityMap& d, const HoleMask& m,
                          const Tensor3& cotangent) {
  return forward_warp_vjp_impl(x, d, m, cotangent);
}

SplatResult forward_warp_flow(const Tensor3& x, const Tensor3& flow, const OcclusionMask& m) {
  check_flow(x, flow, "forward_warp_flow");
  require_same_extent(x, m, "forward_warp_flow");
  return splat(x, FlowField{flow}, m.values());
}

FlowWarpGrad forward_warp_flow_vjp(const Tensor3& x, const Tensor3& flow,
                                   const OcclusionMask& m, const Tensor3& cotangent) {
  check_flow(x, flow, "forward_warp_flow_vjp");
  require_same_extent(x, m, "forward_warp_flow_vjp");
  require_cotangent(x, cotangent, "forward_warp_flow_vjp");
  const int H = x.height(), W = x.width();
  std::vector<double> gx(static_cast<std::size_t>(H) * W, 0.0), gy(gx.size(), 0.0);
  Tensor3 grad_x(H, W, x.channels());
  splat_vjp(x, FlowField{flow}, m.values(), cotangent, grad_x, gx, gy);
  return {std::move(grad_x), interleave(H, W, gx, gy)};
}

}  // namespace stereostyle
