#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "stereostyle/tensor.hpp"

namespace stereostyle {

enum class Activation : std::uint32_t { identity = 0, relu = 1 };

/// One same-padded 2D convolution followed by an activation.
///
/// `weights` holds kernel_h * kernel_w * in_channels * out_channels values in
/// row-major (ky, kx, c_in, c_out) order.
struct ConvLayer {
  int kernel_h = 1;
  int kernel_w = 1;
  int in_channels = 1;
  int out_channels = 1;
  std::vector<double> weights;
  std::vector<double> bias;
  Activation activation = Activation::identity;
  int stride = 1;

  double& weight(int ky, int kx, int ci, int co) {
    return weights[((static_cast<std::size_t>(ky) * kernel_w + kx) * in_channels + ci) *
                       out_channels + co];
  }
  double weight(int ky, int kx, int ci, int co) const {
    return weights[((static_cast<std::size_t>(ky) * kernel_w + kx) * in_channels + ci) *
                       out_channels + co];
  }

  friend bool operator==(const ConvLayer&, const ConvLayer&) = default;
};

/// Output extent of a same-padded convolution: ceil(n / stride).
int conv_output_extent(int n, int stride);

/// Immutable stack of convolution layers with declared content and style taps.
class FeatureExtractor {
public:
  /// Throws DimensionError on channel mismatches between consecutive layers,
  /// malformed layers, or out-of-range tap indices.
  FeatureExtractor(std::vector<ConvLayer> layers, std::vector<int> content_taps,
                   std::vector<int> style_taps);

  const std::vector<ConvLayer>& layers() const noexcept { return layers_; }
  const std::vector<int>& content_taps() const noexcept { return content_taps_; }
  const std::vector<int>& style_taps() const noexcept { return style_taps_; }
  /// Sorted union of content and style taps; the order used by extract().
  const std::vector<int>& tapped_layers() const noexcept { return tapped_; }
  /// Position of `layer` within tapped_layers().
  std::size_t tap_slot(int layer) const;

  int input_channels() const noexcept { return layers_.front().in_channels; }
  int output_channels() const noexcept { return layers_.back().out_channels; }

  friend bool operator==(const FeatureExtractor&, const FeatureExtractor&) = default;

private:
  std::vector<ConvLayer> layers_;
  std::vector<int> content_taps_;
  std::vector<int> style_taps_;
  std::vector<int> tapped_;
};

/// Every layer's activation for one input, kept for the backward pass.
struct ForwardPass {
  Tensor3 input;
  std::vector<Tensor3> outputs;
};

ForwardPass forward(const FeatureExtractor& e, const Tensor3& img);

/// Tapped activations of `pass`, in tapped_layers() order.
std::vector<Tensor3> taps(const FeatureExtractor& e, const ForwardPass& pass);

/// Gradient w.r.t. the input given cotangents for the tapped layers
/// (tapped_layers() order). Weights are constants.
Tensor3 vjp(const FeatureExtractor& e, const ForwardPass& pass,
            const std::vector<Tensor3>& cotangents);

/// Forward evaluation returning the tapped layers.
std::vector<Tensor3> extract(const FeatureExtractor& e, const Tensor3& img);

Tensor3 extract_vjp(const FeatureExtractor& e, const Tensor3& img,
                    const std::vector<Tensor3>& cotangents);

/// Forward pass returning only the final layer (used as an encoder/decoder).
Tensor3 run(const FeatureExtractor& e, const Tensor3& img);

/// Symmetric C x C channel correlation matrix.
class GramMatrix {
public:
  GramMatrix() = default;
  explicit GramMatrix(int channels) : n_(channels), v_(static_cast<std::size_t>(channels) * channels) {}

  int channels() const noexcept { return n_; }
  double& operator()(int a, int b) noexcept { return v_[static_cast<std::size_t>(a) * n_ + b]; }
  double operator()(int a, int b) const noexcept { return v_[static_cast<std::size_t>(a) * n_ + b]; }
  const std::vector<double>& values() const noexcept { return v_; }
  double* data() noexcept { return v_.data(); }

  friend bool operator==(const GramMatrix&, const GramMatrix&) = default;

private:
  int n_ = 0;
  std::vector<double> v_;
};

/// G[a][b] = sum_{y,x} f(y,x,a) f(y,x,b) / (H * W * C).
GramMatrix gram(const Tensor3& f);

/// Gradient w.r.t. f of <cotangent, gram(f)>.
Tensor3 gram_vjp(const Tensor3& f, const GramMatrix& cotangent);

/// Binary weight file (little-endian):
///   "SSXF" magic, u32 version (1), u32 layer count,
///   per layer: u32 kernel_h, kernel_w, in_channels, out_channels,
///              f32 weights[kh*kw*cin*cout], f32 bias[cout],
///              u32 activation (0 identity, 1 relu), u32 stride (1 or 2),
///   u32 content tap count, u32 indices..., u32 style tap count, u32 indices...
/// Truncated or malformed files raise ParseError; bad magic, activation
/// codes or strides raise FormatError.
FeatureExtractor load_extractor(const std::filesystem::path& path);
void save_extractor(const FeatureExtractor& e, const std::filesystem::path& path);

/// Random-weight 3->16->32->32->32 network of 3x3 relu convolutions, all at
/// stride 1 so features shift with integer disparities. Content tap {2},
/// style taps {0,1,2,3}. Weights are He-uniform from Lcg64(seed) and
/// exactly representable in fp32.
FeatureExtractor make_default_extractor(std::uint64_t seed = 20180615);

/// Random-weight network with the given channel sequence, 3x3 kernels,
/// stride 1 everywhere, relu on all but the last layer when `linear_last`.
/// Taps are the last layer for both content and style.
FeatureExtractor make_random_extractor(const std::vector<int>& channels, std::uint64_t seed,
                                       bool linear_last = false, int kernel = 3);

}  // namespace stereostyle
