#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "stereostyle/errors.hpp"

namespace stereostyle {

/// Dense H x W x C grid of reals stored row-major in (y, x, c) order.
///
/// Carries images (C = 1 or 3, values nominally in [0,1]), feature maps and
/// 2-channel flow fields (channel 0 = dx, channel 1 = dy).
class Tensor3 {
public:
  Tensor3() = default;
  Tensor3(int height, int width, int channels, double fill = 0.0);

  int height() const noexcept { return height_; }
  int width() const noexcept { return width_; }
  int channels() const noexcept { return channels_; }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  double& operator()(int y, int x, int c) noexcept { return data_[index(y, x, c)]; }
  double operator()(int y, int x, int c) const noexcept { return data_[index(y, x, c)]; }

  std::size_t index(int y, int x, int c) const noexcept {
    return (static_cast<std::size_t>(y) * width_ + x) * channels_ + c;
  }

  std::span<double> values() noexcept { return data_; }
  std::span<const double> values() const noexcept { return data_; }
  double* pixel(int y, int x) noexcept { return data_.data() + index(y, x, 0); }
  const double* pixel(int y, int x) const noexcept { return data_.data() + index(y, x, 0); }

  bool same_shape(const Tensor3& o) const noexcept {
    return height_ == o.height_ && width_ == o.width_ && channels_ == o.channels_;
  }

  void fill(double v);
  bool all_finite() const noexcept;

  Tensor3& operator+=(const Tensor3& o);
  Tensor3& operator-=(const Tensor3& o);
  Tensor3& operator*=(double s) noexcept;

  friend bool operator==(const Tensor3&, const Tensor3&) = default;

private:
  int height_ = 0;
  int width_ = 0;
  int channels_ = 0;
  std::vector<double> data_;
};

Tensor3 operator+(Tensor3 a, const Tensor3& b);
Tensor3 operator-(Tensor3 a, const Tensor3& b);
Tensor3 operator*(double s, Tensor3 a);

/// Single-channel H x W grid. The tag makes disparity, masks and weights
/// distinct types that cannot be mixed up at call sites.
template <typename T, typename Tag>
class Grid {
public:
  using value_type = T;

  Grid() = default;
  Grid(int height, int width, T fill = T{}) : height_(height), width_(width) {
    if (height < 1 || width < 1) {
      throw DimensionError("grid dimensions must be positive, got " + std::to_string(height) +
                           "x" + std::to_string(width));
    }
    data_.assign(static_cast<std::size_t>(height) * width, fill);
  }

  int height() const noexcept { return height_; }
  int width() const noexcept { return width_; }
  std::size_t size() const noexcept { return data_.size(); }

  T& operator()(int y, int x) noexcept { return data_[static_cast<std::size_t>(y) * width_ + x]; }
  T operator()(int y, int x) const noexcept {
    return data_[static_cast<std::size_t>(y) * width_ + x];
  }

  std::span<T> values() noexcept { return data_; }
  std::span<const T> values() const noexcept { return data_; }

  void fill(T v) { data_.assign(data_.size(), v); }

  friend bool operator==(const Grid&, const Grid&) = default;

private:
  int height_ = 0;
  int width_ = 0;
  std::vector<T> data_;
};

struct DisparityTag {};
struct OcclusionTag {};
struct HoleTag {};
struct WeightTag {};

/// Signed horizontal displacement in pixels: pixel (x, y) of one view
/// corresponds to (x + d(x, y), y) in the opposite view.
using DisparityMap = Grid<double, DisparityTag>;
/// 1 = pixel has no valid correspondence in the opposite view.
using OcclusionMask = Grid<std::uint8_t, OcclusionTag>;
/// 1 = no source pixel was splatted here by a forward warp.
using HoleMask = Grid<std::uint8_t, HoleTag>;
/// Per-pixel class-balance weights.
using WeightMap = Grid<double, WeightTag>;

template <typename A, typename B>
bool same_extent(const A& a, const B& b) noexcept {
  return a.height() == b.height() && a.width() == b.width();
}

/// Throws DimensionError naming `what` unless `a` and `b` share height and width.
template <typename A, typename B>
void require_same_extent(const A& a, const B& b, const char* what) {
  if (!same_extent(a, b)) {
    throw DimensionError(std::string(what) + ": extent mismatch " + std::to_string(a.height()) +
                         "x" + std::to_string(a.width()) + " vs " +
                         std::to_string(b.height()) + "x" + std::to_string(b.width()));
  }
}

template <typename T, typename Tag>
std::size_t count_nonzero(const Grid<T, Tag>& g) {
  std::size_t n = 0;
  for (T v : g.values()) n += (v != T{}) ? 1 : 0;
  return n;
}

/// Copies a single-channel grid into a 1-channel tensor.
template <typename T, typename Tag>
Tensor3 to_tensor(const Grid<T, Tag>& g) {
  Tensor3 t(g.height(), g.width(), 1);
  auto src = g.values();
  auto dst = t.values();
  for (std::size_t i = 0; i < src.size(); ++i) dst[i] = static_cast<double>(src[i]);
  return t;
}

/// Reads channel `c` of `t` as a disparity map.
DisparityMap disparity_from_tensor(const Tensor3& t, int c = 0);

/// Horizontal mirror (x -> W-1-x). Used for view-swap symmetry checks.
Tensor3 mirror(const Tensor3& t);
template <typename T, typename Tag>
Grid<T, Tag> mirror(const Grid<T, Tag>& g) {
  Grid<T, Tag> out(g.height(), g.width());
  for (int y = 0; y < g.height(); ++y)
    for (int x = 0; x < g.width(); ++x) out(y, x) = g(y, g.width() - 1 - x);
  return out;
}

/// Negated disparity field.
DisparityMap negate(const DisparityMap& d);

/// Loss weights: alpha (content), beta (style), gamma (disparity), lambda (occlusion).
struct LossWeights {
  double alpha = 1.0;
  double beta = 1e3;
  double gamma = 500.0;
  double lambda = 1.0;

  /// Throws ConfigError if any weight is negative or non-finite.
  void validate() const;
};

}  // namespace stereostyle
