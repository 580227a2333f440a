#pragma once

#include <cstdint>
#include <vector>

#include "stereostyle/features.hpp"
#include "stereostyle/losses.hpp"
#include "stereostyle/stereo_pair.hpp"
#include "stereostyle/tensor.hpp"

namespace stereostyle {

enum class Optimizer { adam, plain_gd };
enum class InitMode { content_copy, uniform_noise };

struct SolverConfig {
  int steps = 300;
  double learning_rate = 0.01;
  Optimizer optimizer = Optimizer::adam;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  InitMode init = InitMode::content_copy;
  std::uint64_t seed = 0;
  int log_every = 10;
  /// Worker threads for per-step evaluation; results do not depend on it.
  int threads = 1;

  /// Throws ConfigError on out-of-range settings.
  void validate() const;
};

struct AdamParams {
  double learning_rate = 0.01;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

/// Parameters with their first/second moment estimates.
struct AdamState {
  Tensor3 params;
  Tensor3 m;
  Tensor3 v;
  int t = 0;

  /// Zero moments for the given parameters.
  static AdamState start(Tensor3 params);
};

/// One bias-corrected Adam update.
AdamState adam_step(AdamState state, const Tensor3& grad, const AdamParams& p);

struct TraceEntry {
  int step = 0;
  LossBreakdown losses;
};

struct StereoResult {
  Tensor3 left;
  Tensor3 right;
  std::vector<TraceEntry> trace;
};

/// Jointly optimizes both views of `pair` against
///   sum_v alpha*content + beta*style + gamma*disparity.
/// Trace entries are taken at steps 0, log_every, 2*log_every, ... (before the
/// update of that step) and once more for the final iterate. Outputs are
/// clamped to [0,1] only on return. Throws DivergenceError on non-finite
/// gradients.
StereoResult stylize_stereo(const StereoPair& pair, const Tensor3& style,
                            const FeatureExtractor& e, const LossWeights& w,
                            const SolverConfig& cfg);

struct MonoTraceEntry {
  int step = 0;
  double content = 0.0;
  double style = 0.0;
  double total = 0.0;
};

struct MonoResult {
  Tensor3 image;
  std::vector<MonoTraceEntry> trace;
};

enum class View : int { left = 0, right = 1 };

/// Single-view solve with alpha/beta from `w`. With the same seed and view it
/// reproduces the corresponding output of stylize_stereo at gamma = 0.
MonoResult stylize_mono(const Tensor3& content, const Tensor3& style, const FeatureExtractor& e,
                        const LossWeights& w, const SolverConfig& cfg, View view = View::left);

/// Initial iterate for one view.
Tensor3 initial_image(const Tensor3& content, const SolverConfig& cfg, View view);

}  // namespace stereostyle
