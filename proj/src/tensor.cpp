#include "stereostyle/tensor.hpp"

#include <algorithm>
#include <cmath>

#include "stereostyle/stereo_pair.hpp"

namespace stereostyle {

Tensor3::Tensor3(int height, int width, int channels, double fill)
    : height_(height), width_(width), channels_(channels) {
  if (height < 1 || width < 1 || channels < 1) {
    throw DimensionError("tensor dimensions must be positive, got " + std::to_string(height) +
                         "x" + std::to_string(width) + "x" + std::to_string(channels));
  }
  data_.assign(static_cast<std::size_t>(height) * width * channels, fill);
}

void Tensor3::fill(double v) { std::fill(data_.begin(), data_.end(), v); }

bool Tensor3::all_finite() const noexcept {
  return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

Tensor3& Tensor3::operator+=(const Tensor3& o) {
  if (!same_shape(o)) throw DimensionError("tensor +=: shape mismatch");
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += o.data_[i];
  return *this;
}

Tensor3& Tensor3::operator-=(const Tensor3& o) {
  if (!same_shape(o)) throw DimensionError("tensor -=: shape mismatch");
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] -= o.data_[i];
  return *this;
}

Tensor3& Tensor3::operator*=(double s) noexcept {
  for (double& v : data_) v *= s;
  return *this;
}

Tensor3 operator+(Tensor3 a, const Tensor3& b) { return a += b; }
Tensor3 operator-(Tensor3 a, const Tensor3& b) { return a -= b; }
Tensor3 operator*(double s, Tensor3 a) { return a *= s; }

DisparityMap disparity_from_tensor(const Tensor3& t, int c) {
  if (c < 0 || c >= t.channels()) throw DimensionError("disparity_from_tensor: bad channel");
  DisparityMap d(t.height(), t.width());
  for (int y = 0; y < t.height(); ++y)
    for (int x = 0; x < t.width(); ++x) d(y, x) = t(y, x, c);
  return d;
}

Tensor3 mirror(const Tensor3& t) {
  Tensor3 out(t.height(), t.width(), t.channels());
  for (int y = 0; y < t.height(); ++y)
    for (int x = 0; x < t.width(); ++x)
      for (int c = 0; c < t.channels(); ++c) out(y, x, c) = t(y, t.width() - 1 - x, c);
  return out;
}

DisparityMap negate(const DisparityMap& d) {
  DisparityMap out(d.height(), d.width());
  auto src = d.values();
  auto dst = out.values();
  for (std::size_t i = 0; i < src.size(); ++i) dst[i] = -src[i];
  return out;
}

void LossWeights::validate() const {
  const double w[] = {alpha, beta, gamma, lambda};
  const char* names[] = {"alpha", "beta", "gamma", "lambda"};
  for (int i = 0; i < 4; ++i) {
    if (!std::isfinite(w[i]) || w[i] < 0.0) {
      throw ConfigError(std::string("loss weight ") + names[i] +
                        " must be finite and non-negative");
    }
  }
}

void StereoPair::validate() const {
  if (!left.same_shape(right)) throw DimensionError("stereo pair: view shape mismatch");
  require_same_extent(left, d_left, "stereo pair (left disparity)");
  require_same_extent(left, d_right, "stereo pair (right disparity)");
  require_same_extent(left, m_left, "stereo pair (left mask)");
  require_same_extent(left, m_right, "stereo pair (right mask)");
}

}  // namespace stereostyle
