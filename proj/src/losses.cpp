#include "stereostyle/losses.hpp"

#include <algorithm>
#include <cmath>

#include "stereostyle/occlusion.hpp"
#include "stereostyle/warp.hpp"

namespace stereostyle {

namespace {

bool finite(const Tensor3& t) { return t.all_finite(); }

// Masked mean squared difference a - b and its gradient w.r.t. a.
LossAndGrad masked_mse(const Tensor3& a, const Tensor3& b, const OcclusionMask& m) {
  const int H = a.height(), W = a.width(), C = a.channels();
  LossAndGrad r{0.0, Tensor3(H, W, C)};
  const std::size_t visible = m.size() - count_nonzero(m);
  if (visible == 0) return r;
  const double n = static_cast<double>(visible) * C;
  double sum = 0.0;
  for (int y = 0; y < H; ++y) {
    for (int x = 0; x < W; ++x) {
      if (m(y, x)) continue;
      const double* pa = a.pixel(y, x);
      const double* pb = b.pixel(y, x);
      double* g = r.grad.pixel(y, x);
      for (int c = 0; c < C; ++c) {
        const double diff = pa[c] - pb[c];
        sum += diff * diff;
        g[c] = 2.0 * diff / n;
      }
    }
  }
  r.value = sum / n;
  return r;
}

}  // namespace

PerceptualObjective::PerceptualObjective(const FeatureExtractor& e, const Tensor3& content_image,
                                         std::vector<GramMatrix> grams)
    : e_(&e),
      height_(content_image.height()),
      width_(content_image.width()),
      channels_(content_image.channels()),
      style_grams_(std::move(grams)) {
  if (style_grams_.size() != e.style_taps().size())
    throw DimensionError("style loss: " + std::to_string(style_grams_.size()) +
                         " Gram matrices for " + std::to_string(e.style_taps().size()) +
                         " style taps");
  const ForwardPass pass = forward(e, content_image);
  for (int t : e.content_taps()) content_targets_.push_back(pass.outputs[t]);
  for (std::size_t k = 0; k < style_grams_.size(); ++k) {
    const int c = e.layers()[e.style_taps()[k]].out_channels;
    if (style_grams_[k].channels() != c)
      throw DimensionError("style loss: Gram matrix " + std::to_string(k) + " has wrong size");
  }
}

PerceptualObjective::Result PerceptualObjective::evaluate(const Tensor3& o, double alpha,
                                                          double beta) const {
  const FeatureExtractor& e = *e_;
  if (o.height() != height_ || o.width() != width_ || o.channels() != channels_)
    throw DimensionError("perceptual loss: image shape mismatch");
  const ForwardPass pass = forward(e, o);

  std::vector<Tensor3> cot;
  cot.reserve(e.tapped_layers().size());
  for (int t : e.tapped_layers()) {
    const Tensor3& f = pass.outputs[t];
    cot.emplace_back(f.height(), f.width(), f.channels());
  }

  Result r;
  for (std::size_t k = 0; k < e.content_taps().size(); ++k) {
    const int layer = e.content_taps()[k];
    const Tensor3& f = pass.outputs[layer];
    const Tensor3& target = content_targets_[k];
    if (!f.same_shape(target)) throw DimensionError("content loss: shape mismatch");
    const double n = static_cast<double>(f.size());
    Tensor3& c = cot[e.tap_slot(layer)];
    auto fv = f.values();
    auto tv = target.values();
    auto cv = c.values();
    double sum = 0.0;
    for (std::size_t i = 0; i < fv.size(); ++i) {
      const double diff = fv[i] - tv[i];
      sum += diff * diff;
      cv[i] += alpha * 2.0 * diff / n;
    }
    r.content += sum / n;
  }

  for (std::size_t k = 0; k < e.style_taps().size(); ++k) {
    const int layer = e.style_taps()[k];
    const Tensor3& f = pass.outputs[layer];
    const GramMatrix g = gram(f);
    const GramMatrix& s = style_grams_[k];
    GramMatrix gbar(g.channels());
    double sum = 0.0;
    for (int a = 0; a < g.channels(); ++a) {
      for (int b = 0; b < g.channels(); ++b) {
        const double diff = g(a, b) - s(a, b);
        sum += diff * diff;
        gbar(a, b) = beta * 2.0 * diff;
      }
    }
    r.style += sum;
    cot[e.tap_slot(layer)] += gram_vjp(f, gbar);
  }

  r.content_finite = std::isfinite(r.content);
  r.style_finite = std::isfinite(r.style);
  for (const Tensor3& c : cot) {
    if (!finite(c)) {
      // Attribute to whichever term produced a non-finite value, else both.
      if (r.content_finite && r.style_finite) r.content_finite = r.style_finite = false;
    }
  }
  r.grad = vjp(e, pass, cot);
  return r;
}

LossAndGrad content_loss(const FeatureExtractor& e, const Tensor3& o, const Tensor3& i) {
  if (!o.same_shape(i)) throw DimensionError("content_loss: shape mismatch");
  std::vector<GramMatrix> zero;
  for (int t : e.style_taps()) zero.emplace_back(e.layers()[t].out_channels);
  const PerceptualObjective obj(e, i, std::move(zero));
  auto r = obj.evaluate(o, 1.0, 0.0);
  return {r.content, std::move(r.grad)};
}

std::vector<GramMatrix> style_grams(const FeatureExtractor& e, const Tensor3& style) {
  const ForwardPass pass = forward(e, style);
  std::vector<GramMatrix> g;
  for (int t : e.style_taps()) g.push_back(gram(pass.outputs[t]));
  return g;
}

LossAndGrad style_loss(const FeatureExtractor& e, const Tensor3& o,
                       const std::vector<GramMatrix>& s_grams) {
  const PerceptualObjective obj(e, o, s_grams);
  auto r = obj.evaluate(o, 0.0, 1.0);
  return {r.style, std::move(r.grad)};
}

DisparityLossResult disparity_loss(const Tensor3& o_v, const Tensor3& o_vstar,
                                   const DisparityMap& d_v, const OcclusionMask& m_v) {
  if (!o_v.same_shape(o_vstar)) throw DimensionError("disparity_loss: view shape mismatch");
  require_same_extent(o_v, d_v, "disparity_loss");
  require_same_extent(o_v, m_v, "disparity_loss");
  const Tensor3 warped = backward_warp(o_vstar, d_v);
  LossAndGrad r = masked_mse(o_v, warped, m_v);
  Tensor3 neg = -1.0 * r.grad;
  Tensor3 grad_star = backward_warp_vjp(o_vstar, d_v, neg).grad_x;
  return {r.value, std::move(r.grad), std::move(grad_star)};
}

double disparity_loss_value(const Tensor3& o_v, const Tensor3& o_vstar, const DisparityMap& d_v,
                            const OcclusionMask& m_v) {
  if (!o_v.same_shape(o_vstar)) throw DimensionError("disparity_loss: view shape mismatch");
  require_same_extent(o_v, d_v, "disparity_loss");
  require_same_extent(o_v, m_v, "disparity_loss");
  return masked_mse(o_v, backward_warp(o_vstar, d_v), m_v).value;
}

double disp_train_loss(const DisparityMap& d, const DisparityMap& d_gt, const OcclusionMask& m_gt) {
  require_same_extent(d, d_gt, "disp_train_loss");
  require_same_extent(d, m_gt, "disp_train_loss");
  auto a = d.values();
  auto b = d_gt.values();
  auto m = m_gt.values();
  double sum = 0.0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (m[i]) continue;
    sum += std::abs(a[i] - b[i]);
    ++n;
  }
  return n == 0 ? 0.0 : sum / static_cast<double>(n);
}

double occ_train_loss(const Tensor3& m_pred, const OcclusionMask& m_gt, const WeightMap& w) {
  require_same_extent(m_pred, m_gt, "occ_train_loss");
  require_same_extent(m_pred, w, "occ_train_loss");
  if (m_pred.channels() != 1) throw DimensionError("occ_train_loss: prediction must have 1 channel");
  auto p = m_pred.values();
  auto g = m_gt.values();
  auto wv = w.values();
  double sum = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double q = std::clamp(p[i], kCrossEntropyEpsilon, 1.0 - kCrossEntropyEpsilon);
    sum += wv[i] * (g[i] ? std::log(q) : std::log(1.0 - q));
  }
  return -sum / static_cast<double>(p.size());
}

double dispocc_loss(const DispOccView& left, const DispOccView& right, double lambda) {
  double total = 0.0;
  for (const DispOccView* v : {&left, &right}) {
    total += disp_train_loss(v->d, v->d_gt, v->m_gt) +
             lambda * occ_train_loss(v->m_pred, v->m_gt, balance_weights(v->m_gt));
  }
  return total;
}

LossAndGrad temporal_loss(const Tensor3& o_t, const Tensor3& o_prev, const Tensor3& flow,
                          const OcclusionMask& m_t) {
  if (!o_t.same_shape(o_prev)) throw DimensionError("temporal_loss: frame shape mismatch");
  require_same_extent(o_t, m_t, "temporal_loss");
  return masked_mse(o_t, backward_warp_flow(o_prev, flow), m_t);
}

std::array<double, 6> LossBreakdown::weighted(const LossWeights& w) const {
  return {w.alpha * content_l, w.alpha * content_r, w.beta * style_l,
          w.beta * style_r,    w.gamma * disp_l,    w.gamma * disp_r};
}

double LossBreakdown::perceptual(const LossWeights& w) const {
  return w.alpha * (content_l + content_r) + w.beta * (style_l + style_r);
}

LossBreakdown total_loss(const LossWeights& w, const ViewLosses& left, const ViewLosses& right) {
  w.validate();
  LossBreakdown b;
  b.content_l = left.content;
  b.content_r = right.content;
  b.style_l = left.style;
  b.style_r = right.style;
  b.disp_l = left.disparity;
  b.disp_r = right.disparity;
  double total = 0.0;
  for (double t : b.weighted(w)) total += t;
  b.total = total;
  return b;
}

}  // namespace stereostyle
