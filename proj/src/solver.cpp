#include "stereostyle/solver.hpp"

#include <algorithm>
#include <cmath>
#include <future>

#include "stereostyle/rng.hpp"

namespace stereostyle {

namespace {

// Plain gradient descent only touches params.
void apply_update(AdamState& s, const Tensor3& grad, const SolverConfig& cfg) {
  if (cfg.optimizer == Optimizer::adam) {
    s = adam_step(std::move(s), grad, {cfg.learning_rate, cfg.beta1, cfg.beta2, cfg.epsilon});
    return;
  }
  auto p = s.params.values();
  auto g = grad.values();
  for (std::size_t i = 0; i < p.size(); ++i) p[i] -= cfg.learning_rate * g[i];
}

void clamp01(Tensor3& t) {
  for (double& v : t.values()) v = std::clamp(v, 0.0, 1.0);
}

bool logged(int step, const SolverConfig& cfg) { return step % cfg.log_every == 0; }

// Runs f(0) and f(1), concurrently when threads > 1. Each call writes only
// its own outputs, so the result does not depend on the thread count.
template <typename F>
void for_both_views(int threads, F&& f) {
  if (threads > 1) {
    auto right = std::async(std::launch::async, [&] { f(1); });
    f(0);
    right.get();
  } else {
    f(0);
    f(1);
  }
}

}  // namespace

void SolverConfig::validate() const {
  if (steps <= 0) throw ConfigError("solver: steps must be positive");
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate))
    throw ConfigError("solver: learning rate must be positive");
  if (!(beta1 > 0.0 && beta1 < 1.0) || !(beta2 > 0.0 && beta2 < 1.0))
    throw ConfigError("solver: Adam betas must lie in (0, 1)");
  if (!(epsilon > 0.0)) throw ConfigError("solver: Adam epsilon must be positive");
  if (log_every <= 0) throw ConfigError("solver: log_every must be positive");
  if (threads <= 0) throw ConfigError("solver: threads must be positive");
}

AdamState AdamState::start(Tensor3 params) {
  AdamState s;
  s.m = Tensor3(params.height(), params.width(), params.channels());
  s.v = s.m;
  s.params = std::move(params);
  return s;
}

AdamState adam_step(AdamState s, const Tensor3& grad, const AdamParams& p) {
  if (!grad.same_shape(s.params) || !grad.same_shape(s.m) || !grad.same_shape(s.v))
    throw DimensionError("adam_step: gradient shape mismatch");
  s.t += 1;
  const double c1 = 1.0 - std::pow(p.beta1, s.t);
  const double c2 = 1.0 - std::pow(p.beta2, s.t);
  auto x = s.params.values();
  auto m = s.m.values();
  auto v = s.v.values();
  auto g = grad.values();
  for (std::size_t i = 0; i < x.size(); ++i) {
    m[i] = p.beta1 * m[i] + (1.0 - p.beta1) * g[i];
    v[i] = p.beta2 * v[i] + (1.0 - p.beta2) * g[i] * g[i];
    const double mhat = m[i] / c1;
    const double vhat = v[i] / c2;
    x[i] -= p.learning_rate * mhat / (std::sqrt(vhat) + p.epsilon);
  }
  return s;
}

Tensor3 initial_image(const Tensor3& content, const SolverConfig& cfg, View view) {
  if (cfg.init == InitMode::content_copy) return content;
  // Each view draws from its own stream so mono and stereo solves agree.
  Lcg64 rng(cfg.seed * 2 + static_cast<std::uint64_t>(view));
  Tensor3 t(content.height(), content.width(), content.channels());
  for (double& v : t.values()) v = rng.uniform();
  return t;
}

StereoResult stylize_stereo(const StereoPair& pair, const Tensor3& style,
                            const FeatureExtractor& e, const LossWeights& w,
                            const SolverConfig& cfg) {
  pair.validate();
  w.validate();
  cfg.validate();
  const std::vector<GramMatrix> grams = style_grams(e, style);
  const PerceptualObjective objectives[2] = {PerceptualObjective(e, pair.left, grams),
                                             PerceptualObjective(e, pair.right, grams)};
  const DisparityMap* disp[2] = {&pair.d_left, &pair.d_right};
  const OcclusionMask* mask[2] = {&pair.m_left, &pair.m_right};

  AdamState views[2] = {AdamState::start(initial_image(pair.left, cfg, View::left)),
                        AdamState::start(initial_image(pair.right, cfg, View::right))};
  StereoResult result;

  for (int step = 0; step <= cfg.steps; ++step) {
    const bool final_eval = step == cfg.steps;
    PerceptualObjective::Result perc[2];
    DisparityLossResult dl[2];
    for_both_views(cfg.threads, [&](int v) {
      perc[v] = objectives[v].evaluate(views[v].params, w.alpha, w.beta);
      dl[v] = disparity_loss(views[v].params, views[1 - v].params, *disp[v], *mask[v]);
    });

    if (final_eval || logged(step, cfg)) {
      const LossBreakdown b = total_loss(w, {perc[0].content, perc[0].style, dl[0].value},
                                         {perc[1].content, perc[1].style, dl[1].value});
      result.trace.push_back({step, b});
    }
    if (final_eval) break;

    Tensor3 grads[2] = {std::move(perc[0].grad), std::move(perc[1].grad)};
    for (int v = 0; v < 2; ++v) {
      if (!perc[v].content_finite) throw DivergenceError(step, v == 0 ? "content_l" : "content_r");
      if (!perc[v].style_finite) throw DivergenceError(step, v == 0 ? "style_l" : "style_r");
      if (!grads[v].all_finite()) throw DivergenceError(step, v == 0 ? "perceptual_l" : "perceptual_r");
    }
    if (w.gamma != 0.0) {
      // Term v touches view v directly and view 1-v through the warp.
      for (int v = 0; v < 2; ++v) {
        if (!dl[v].grad_o_v.all_finite() || !dl[v].grad_o_vstar.all_finite())
          throw DivergenceError(step, v == 0 ? "disp_l" : "disp_r");
        grads[v] += w.gamma * dl[v].grad_o_v;
        grads[1 - v] += w.gamma * dl[v].grad_o_vstar;
      }
    }
    for (int v = 0; v < 2; ++v) apply_update(views[v], grads[v], cfg);
  }

  result.left = std::move(views[0].params);
  result.right = std::move(views[1].params);
  clamp01(result.left);
  clamp01(result.right);
  return result;
}

MonoResult stylize_mono(const Tensor3& content, const Tensor3& style, const FeatureExtractor& e,
                        const LossWeights& w, const SolverConfig& cfg, View view) {
  w.validate();
  cfg.validate();
  const PerceptualObjective objective(e, content, style_grams(e, style));
  AdamState state = AdamState::start(initial_image(content, cfg, view));
  MonoResult result;
  for (int step = 0; step <= cfg.steps; ++step) {
    PerceptualObjective::Result r = objective.evaluate(state.params, w.alpha, w.beta);
    if (step == cfg.steps || logged(step, cfg)) {
      result.trace.push_back(
          {step, r.content, r.style, w.alpha * r.content + w.beta * r.style});
    }
    if (step == cfg.steps) break;
    if (!r.content_finite) throw DivergenceError(step, "content");
    if (!r.style_finite) throw DivergenceError(step, "style");
    if (!r.grad.all_finite()) throw DivergenceError(step, "perceptual");
    apply_update(state, r.grad, cfg);
  }
  result.image = std::move(state.params);
  clamp01(result.image);
  return result;
}

}  // namespace stereostyle
