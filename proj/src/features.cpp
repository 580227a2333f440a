#include "stereostyle/features.hpp"

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>

#include "stereostyle/rng.hpp"

namespace stereostyle {

namespace {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MatrixMap = Eigen::Map<RowMatrix>;
using ConstMatrixMap = Eigen::Map<const RowMatrix>;

// Leading padding of a same-padded convolution along one axis.
int pad_before(int n, int k, int stride) {
  const int out = conv_output_extent(n, stride);
  const int total = std::max((out - 1) * stride + k - n, 0);
  return total / 2;
}

// Rows are output pixels, columns are (ky, kx, c_in) taps.
RowMatrix im2col(const Tensor3& in, const ConvLayer& l) {
  const int H = in.height(), W = in.width(), C = in.channels();
  const int Ho = conv_output_extent(H, l.stride), Wo = conv_output_extent(W, l.stride);
  const int py = pad_before(H, l.kernel_h, l.stride), px = pad_before(W, l.kernel_w, l.stride);
  const int K = l.kernel_h * l.kernel_w * C;
  RowMatrix col = RowMatrix::Zero(static_cast<Eigen::Index>(Ho) * Wo, K);
  for (int oy = 0; oy < Ho; ++oy) {
    for (int ox = 0; ox < Wo; ++ox) {
      double* row = col.row(static_cast<Eigen::Index>(oy) * Wo + ox).data();
      for (int ky = 0; ky < l.kernel_h; ++ky) {
        const int iy = oy * l.stride + ky - py;
        if (iy < 0 || iy >= H) continue;
        for (int kx = 0; kx < l.kernel_w; ++kx) {
          const int ix = ox * l.stride + kx - px;
          if (ix < 0 || ix >= W) continue;
          std::memcpy(row + (ky * l.kernel_w + kx) * C, in.pixel(iy, ix), sizeof(double) * C);
        }
      }
    }
  }
  return col;
}

void col2im_add(const RowMatrix& col, const ConvLayer& l, Tensor3& grad_in) {
  const int H = grad_in.height(), W = grad_in.width(), C = grad_in.channels();
  const int Ho = conv_output_extent(H, l.stride), Wo = conv_output_extent(W, l.stride);
  const int py = pad_before(H, l.kernel_h, l.stride), px = pad_before(W, l.kernel_w, l.stride);
  for (int oy = 0; oy < Ho; ++oy) {
    for (int ox = 0; ox < Wo; ++ox) {
      const double* row = col.row(static_cast<Eigen::Index>(oy) * Wo + ox).data();
      for (int ky = 0; ky < l.kernel_h; ++ky) {
        const int iy = oy * l.stride + ky - py;
        if (iy < 0 || iy >= H) continue;
        for (int kx = 0; kx < l.kernel_w; ++kx) {
          const int ix = ox * l.stride + kx - px;
          if (ix < 0 || ix >= W) continue;
          double* g = grad_in.pixel(iy, ix);
          const double* src = row + (ky * l.kernel_w + kx) * C;
          for (int c = 0; c < C; ++c) g[c] += src[c];
        }
      }
    }
  }
}

ConstMatrixMap weight_matrix(const ConvLayer& l) {
  return {l.weights.data(), static_cast<Eigen::Index>(l.kernel_h) * l.kernel_w * l.in_channels,
          l.out_channels};
}

Tensor3 conv_forward(const Tensor3& in, const ConvLayer& l) {
  const int Ho = conv_output_extent(in.height(), l.stride);
  const int Wo = conv_output_extent(in.width(), l.stride);
  Tensor3 out(Ho, Wo, l.out_channels);
  MatrixMap o(out.values().data(), static_cast<Eigen::Index>(Ho) * Wo, l.out_channels);
  o.noalias() = im2col(in, l) * weight_matrix(l);
  const Eigen::Map<const Eigen::RowVectorXd> b(l.bias.data(), l.out_channels);
  o.rowwise() += b;
  if (l.activation == Activation::relu) o = o.cwiseMax(0.0);
  return out;
}

void check_layer(const ConvLayer& l, std::size_t i) {
  const std::string where = "layer " + std::to_string(i) + ": ";
  if (l.kernel_h < 1 || l.kernel_w < 1 || l.in_channels < 1 || l.out_channels < 1)
    throw DimensionError(where + "non-positive shape");
  if (l.weights.size() != static_cast<std::size_t>(l.kernel_h) * l.kernel_w * l.in_channels *
                              l.out_channels)
    throw DimensionError(where + "weight count does not match shape");
  if (l.bias.size() != static_cast<std::size_t>(l.out_channels))
    throw DimensionError(where + "bias count does not match output channels");
  if (l.stride != 1 && l.stride != 2) throw DimensionError(where + "stride must be 1 or 2");
  if (l.activation != Activation::identity && l.activation != Activation::relu)
    throw DimensionError(where + "unknown activation");
}

// Little-endian binary helpers for the weight file.
class Reader {
public:
  Reader(std::vector<char> bytes, std::string name) : bytes_(std::move(bytes)), name_(std::move(name)) {}

  void take(void* dst, std::size_t n) {
    if (pos_ + n > bytes_.size()) throw ParseError("'" + name_ + "': truncated extractor file");
    std::memcpy(dst, bytes_.data() + pos_, n);
    pos_ += n;
  }
  std::uint32_t u32() {
    unsigned char b[4];
    take(b, 4);
    return b[0] | (b[1] << 8) | (b[2] << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
  }
  float f32() {
    const std::uint32_t u = u32();
    float f;
    std::memcpy(&f, &u, 4);
    return f;
  }
  bool done() const { return pos_ == bytes_.size(); }
  std::size_t remaining() const { return bytes_.size() - pos_; }
  const std::string& name() const { return name_; }

private:
  std::vector<char> bytes_;
  std::string name_;
  std::size_t pos_ = 0;
};

void put_u32(std::ostream& out, std::uint32_t v) {
  const char b[4] = {static_cast<char>(v & 0xff), static_cast<char>((v >> 8) & 0xff),
                     static_cast<char>((v >> 16) & 0xff), static_cast<char>((v >> 24) & 0xff)};
  out.write(b, 4);
}

void put_f32(std::ostream& out, double v) {
  const float f = static_cast<float>(v);
  std::uint32_t u;
  std::memcpy(&u, &f, 4);
  put_u32(out, u);
}

constexpr char kMagic[4] = {'S', 'S', 'X', 'F'};
constexpr std::uint32_t kVersion = 1;
// Upper bound on any single dimension in a weight file; rejects garbage
// headers before they turn into huge allocations.
constexpr std::uint32_t kMaxDim = 1u << 16;

ConvLayer random_layer(Lcg64& rng, int k, int cin, int cout, Activation act, int stride) {
  ConvLayer l;
  l.kernel_h = l.kernel_w = k;
  l.in_channels = cin;
  l.out_channels = cout;
  l.activation = act;
  l.stride = stride;
  const double bound = std::sqrt(6.0 / (k * k * cin));
  l.weights.resize(static_cast<std::size_t>(k) * k * cin * cout);
  for (double& w : l.weights) w = static_cast<float>(rng.uniform(-bound, bound));
  l.bias.resize(cout);
  for (double& b : l.bias) b = static_cast<float>(rng.uniform(-0.05, 0.05));
  return l;
}

}  // namespace

int conv_output_extent(int n, int stride) { return (n + stride - 1) / stride; }

FeatureExtractor::FeatureExtractor(std::vector<ConvLayer> layers, std::vector<int> content_taps,
                                   std::vector<int> style_taps)
    : layers_(std::move(layers)),
      content_taps_(std::move(content_taps)),
      style_taps_(std::move(style_taps)) {
  if (layers_.empty()) throw DimensionError("extractor needs at least one layer");
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    check_layer(layers_[i], i);
    if (i > 0 && layers_[i].in_channels != layers_[i - 1].out_channels)
      throw DimensionError("layer " + std::to_string(i) + ": expects " +
                           std::to_string(layers_[i].in_channels) + " input channels, previous layer produces " +
                           std::to_string(layers_[i - 1].out_channels));
  }
  const int n = static_cast<int>(layers_.size());
  for (const auto* taps : {&content_taps_, &style_taps_}) {
    for (int t : *taps) {
      if (t < 0 || t >= n) throw DimensionError("tap index " + std::to_string(t) + " out of range");
      tapped_.push_back(t);
    }
  }
  std::sort(tapped_.begin(), tapped_.end());
  tapped_.erase(std::unique(tapped_.begin(), tapped_.end()), tapped_.end());
}

std::size_t FeatureExtractor::tap_slot(int layer) const {
  const auto it = std::lower_bound(tapped_.begin(), tapped_.end(), layer);
  if (it == tapped_.end() || *it != layer)
    throw DimensionError("layer " + std::to_string(layer) + " is not tapped");
  return static_cast<std::size_t>(it - tapped_.begin());
}

ForwardPass forward(const FeatureExtractor& e, const Tensor3& img) {
  if (img.channels() != e.input_channels())
    throw DimensionError("extract: image has " + std::to_string(img.channels()) +
                         " channels, extractor expects " + std::to_string(e.input_channels()));
  ForwardPass pass{img, {}};
  pass.outputs.reserve(e.layers().size());
  const Tensor3* in = &pass.input;
  for (const ConvLayer& l : e.layers()) {
    pass.outputs.push_back(conv_forward(*in, l));
    in = &pass.outputs.back();
  }
  return pass;
}

std::vector<Tensor3> taps(const FeatureExtractor& e, const ForwardPass& pass) {
  std::vector<Tensor3> out;
  out.reserve(e.tapped_layers().size());
  for (int t : e.tapped_layers()) out.push_back(pass.outputs[t]);
  return out;
}

Tensor3 vjp(const FeatureExtractor& e, const ForwardPass& pass,
            const std::vector<Tensor3>& cotangents) {
  const auto& tapped = e.tapped_layers();
  if (cotangents.size() != tapped.size())
    throw DimensionError("extract_vjp: expected " + std::to_string(tapped.size()) +
                         " cotangents, got " + std::to_string(cotangents.size()));
  for (std::size_t i = 0; i < tapped.size(); ++i) {
    if (!cotangents[i].same_shape(pass.outputs[tapped[i]]))
      throw DimensionError("extract_vjp: cotangent " + std::to_string(i) + " shape mismatch");
  }

  const int last = tapped.back();
  // Gradient w.r.t. the output of the current layer.
  Tensor3 grad = cotangents.back();
  std::size_t next_tap = tapped.size() - 1;
  for (int i = last; i >= 0; --i) {
    if (i != last && next_tap > 0 && tapped[next_tap - 1] == i) {
      grad += cotangents[--next_tap];
    }
    const ConvLayer& l = e.layers()[i];
    const Tensor3& out = pass.outputs[i];
    const Tensor3& in = i == 0 ? pass.input : pass.outputs[i - 1];
    if (l.activation == Activation::relu) {
      auto g = grad.values();
      auto o = out.values();
      for (std::size_t k = 0; k < g.size(); ++k)
        if (!(o[k] > 0.0)) g[k] = 0.0;
    }
    const ConstMatrixMap g(grad.values().data(), static_cast<Eigen::Index>(out.height()) * out.width(),
                           l.out_channels);
    const RowMatrix gcol = g * weight_matrix(l).transpose();
    Tensor3 grad_in(in.height(), in.width(), in.channels());
    col2im_add(gcol, l, grad_in);
    grad = std::move(grad_in);
  }
  return grad;
}

std::vector<Tensor3> extract(const FeatureExtractor& e, const Tensor3& img) {
  return taps(e, forward(e, img));
}

Tensor3 extract_vjp(const FeatureExtractor& e, const Tensor3& img,
                    const std::vector<Tensor3>& cotangents) {
  return vjp(e, forward(e, img), cotangents);
}

Tensor3 run(const FeatureExtractor& e, const Tensor3& img) {
  return std::move(forward(e, img).outputs.back());
}

GramMatrix gram(const Tensor3& f) {
  const int C = f.channels();
  const ConstMatrixMap m(f.values().data(), static_cast<Eigen::Index>(f.height()) * f.width(), C);
  GramMatrix g(C);
  MatrixMap gm(g.data(), C, C);
  gm.noalias() = m.transpose() * m;
  gm /= static_cast<double>(f.size());
  // Exact symmetry regardless of the product kernel's summation order.
  for (int a = 0; a < C; ++a)
    for (int b = a + 1; b < C; ++b) gm(b, a) = gm(a, b);
  return g;
}

Tensor3 gram_vjp(const Tensor3& f, const GramMatrix& cotangent) {
  const int C = f.channels();
  if (cotangent.channels() != C) throw DimensionError("gram_vjp: channel mismatch");
  const ConstMatrixMap m(f.values().data(), static_cast<Eigen::Index>(f.height()) * f.width(), C);
  const ConstMatrixMap gbar(cotangent.values().data(), C, C);
  Tensor3 out(f.height(), f.width(), C);
  MatrixMap o(out.values().data(), static_cast<Eigen::Index>(f.height()) * f.width(), C);
  o.noalias() = m * (gbar + gbar.transpose()) / static_cast<double>(f.size());
  return out;
}

FeatureExtractor load_extractor(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  Reader r({std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()}, path.string());
  if (r.remaining() == 0) throw ParseError("'" + path.string() + "': empty extractor file");

  char magic[4];
  r.take(magic, 4);
  if (std::memcmp(magic, kMagic, 4) != 0) throw FormatError("'" + path.string() + "': bad magic");
  if (r.u32() != kVersion) throw FormatError("'" + path.string() + "': unsupported version");

  const std::uint32_t count = r.u32();
  if (count == 0 || count > kMaxDim) throw ParseError("'" + path.string() + "': bad layer count");
  std::vector<ConvLayer> layers(count);
  for (ConvLayer& l : layers) {
    std::uint32_t dims[4];
    for (auto& d : dims) {
      d = r.u32();
      if (d == 0 || d > kMaxDim) throw ParseError("'" + path.string() + "': bad layer shape");
    }
    l.kernel_h = static_cast<int>(dims[0]);
    l.kernel_w = static_cast<int>(dims[1]);
    l.in_channels = static_cast<int>(dims[2]);
    l.out_channels = static_cast<int>(dims[3]);
    const std::size_t nw = static_cast<std::size_t>(dims[0]) * dims[1] * dims[2] * dims[3];
    if (nw * 4 > r.remaining()) throw ParseError("'" + path.string() + "': truncated extractor file");
    l.weights.resize(nw);
    for (double& w : l.weights) w = r.f32();
    l.bias.resize(l.out_channels);
    for (double& b : l.bias) b = r.f32();
    const std::uint32_t act = r.u32();
    if (act > 1) throw FormatError("'" + path.string() + "': invalid activation code " + std::to_string(act));
    l.activation = static_cast<Activation>(act);
    const std::uint32_t stride = r.u32();
    if (stride != 1 && stride != 2) throw FormatError("'" + path.string() + "': invalid stride");
    l.stride = static_cast<int>(stride);
  }
  auto read_taps = [&]() {
    const std::uint32_t n = r.u32();
    if (n > count) throw ParseError("'" + path.string() + "': bad tap count");
    std::vector<int> t(n);
    for (int& v : t) v = static_cast<int>(r.u32());
    return t;
  };
  std::vector<int> content = read_taps();
  std::vector<int> style = read_taps();
  if (!r.done()) throw ParseError("'" + path.string() + "': trailing bytes");
  try {
    return FeatureExtractor(std::move(layers), std::move(content), std::move(style));
  } catch (const DimensionError& e) {
    throw FormatError("'" + path.string() + "': " + e.what());
  }
}

void save_extractor(const FeatureExtractor& e, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write '" + path.string() + "'");
  out.write(kMagic, 4);
  put_u32(out, kVersion);
  put_u32(out, static_cast<std::uint32_t>(e.layers().size()));
  for (const ConvLayer& l : e.layers()) {
    put_u32(out, l.kernel_h);
    put_u32(out, l.kernel_w);
    put_u32(out, l.in_channels);
    put_u32(out, l.out_channels);
    for (double w : l.weights) put_f32(out, w);
    for (double b : l.bias) put_f32(out, b);
    put_u32(out, static_cast<std::uint32_t>(l.activation));
    put_u32(out, l.stride);
  }
  for (const auto* taps : {&e.content_taps(), &e.style_taps()}) {
    put_u32(out, static_cast<std::uint32_t>(taps->size()));
    for (int t : *taps) put_u32(out, t);
  }
  if (!out) throw IoError("write failed for '" + path.string() + "'");
}

FeatureExtractor make_default_extractor(std::uint64_t seed) {
  Lcg64 rng(seed);
  std::vector<ConvLayer> layers;
  layers.push_back(random_layer(rng, 3, 3, 16, Activation::relu, 1));
  layers.push_back(random_layer(rng, 3, 16, 32, Activation::relu, 1));
  layers.push_back(random_layer(rng, 3, 32, 32, Activation::relu, 1));
  layers.push_back(random_layer(rng, 3, 32, 32, Activation::relu, 1));
  return FeatureExtractor(std::move(layers), {2}, {0, 1, 2, 3});
}

FeatureExtractor make_random_extractor(const std::vector<int>& channels, std::uint64_t seed,
                                       bool linear_last, int kernel) {
  if (channels.size() < 2) throw DimensionError("make_random_extractor: need >= 2 channel counts");
  Lcg64 rng(seed);
  std::vector<ConvLayer> layers;
  for (std::size_t i = 0; i + 1 < channels.size(); ++i) {
    const bool last = i + 2 == channels.size();
    layers.push_back(random_layer(rng, kernel, channels[i], channels[i + 1],
                                  last && linear_last ? Activation::identity : Activation::relu, 1));
  }
  const int top = static_cast<int>(layers.size()) - 1;
  return FeatureExtractor(std::move(layers), {top}, {top});
}

}  // namespace stereostyle
