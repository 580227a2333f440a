#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "stereostyle/stereo_pair.hpp"
#include "stereostyle/tensor.hpp"

namespace stereostyle {

/// A textured rectangle. Bounds are in left-view pixels, half-open
/// [x0, x1) x [y0, y1). `disparity` is the left-view disparity (right view
/// uses its negation); `depth` orders layers, smaller = nearer.
struct SceneLayer {
  int x0 = 0;
  int y0 = 0;
  int x1 = 0;
  int y1 = 0;
  std::uint64_t seed = 0;
  int disparity = 0;
  int depth = 0;
};

/// Fronto-parallel layered scene over a textured background.
struct SceneSpec {
  int width = 0;
  int height = 0;
  std::uint64_t background_seed = 0;
  int background_disparity = 0;
  std::vector<SceneLayer> layers;

  /// Throws SpecError when a layer leaves the canvas, |disparity| >= width/4,
  /// depths repeat, or a nearer layer has a larger left-view disparity than a
  /// farther one (the background counts as the farthest layer).
  void validate() const;
};

/// Parses the line-oriented scene format:
///
///   # comment
///   width 64
///   height 64
///   background_seed 11
///   background_disparity -1
///   layer <x0> <y0> <x1> <y1> <seed> <disparity> <depth>
///
/// Throws SpecError on unknown keys, malformed numbers, missing width/height,
/// or a spec that fails validate().
SceneSpec parse_scene(std::string_view text);
SceneSpec load_scene(const std::filesystem::path& path);

/// Deterministic RGB texture value of a layer at integer layer coordinates
/// (u, v): value noise on a 4-pixel lattice, lattice colors drawn from Lcg64
/// seeded by a hash of (seed, cell).
void texture_rgb(std::uint64_t seed, int u, int v, double rgb[3]);

/// Painter's-algorithm rendering of both views with exact ground truth.
/// Occlusion is decided by per-pixel visibility: a pixel is occluded when
/// its correspondence leaves the image or the opposite view shows a
/// different layer there.
StereoPair render_stereo(const SceneSpec& spec);

/// Names of the procedural style textures, in index order.
const std::vector<std::string>& style_preset_names();

/// One of four procedural RGB style textures (stripes, checker, dots, waves).
/// Throws ConfigError on an unknown name.
Tensor3 style_preset(const std::string& name, int height, int width);

}  // namespace stereostyle
