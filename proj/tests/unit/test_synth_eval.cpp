#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "stereostyle/eval.hpp"
#include "stereostyle/losses.hpp"
#include "stereostyle/occlusion.hpp"
#include "stereostyle/synth.hpp"
#include "stereostyle/warp.hpp"
#include "test_support.hpp"

using namespace stereostyle;
using namespace testing;

namespace {

const std::filesystem::path kScenes = std::filesystem::path(STEREOSTYLE_DATA_DIR) / "scenes";

// Index of the nearest layer covering a pixel of one view (-1 = background).
// A left-view layer pixel x shows up in the right view at x + disparity.
int top_layer(const SceneSpec& s, int y, int x, bool right_view) {
  int best = -1;
  for (int i = 0; i < static_cast<int>(s.layers.size()); ++i) {
    const SceneLayer& l = s.layers[i];
    const int u = right_view ? x - l.disparity : x;
    if (y < l.y0 || y >= l.y1 || u < l.x0 || u >= l.x1) continue;
    if (best < 0 || l.depth < s.layers[best].depth) best = i;
  }
  return best;
}

int disparity_of(const SceneSpec& s, int layer) {
  return layer < 0 ? s.background_disparity : s.layers[layer].disparity;
}

// Pixelwise visibility: occluded when the correspondence leaves the canvas or
// the other view shows a different surface there.
OcclusionMask visibility(const SceneSpec& s, bool right_view) {
  OcclusionMask m(s.height, s.width);
  for (int y = 0; y < s.height; ++y)
    for (int x = 0; x < s.width; ++x) {
      const int here = top_layer(s, y, x, right_view);
      const int d = disparity_of(s, here);
      const int t = right_view ? x - d : x + d;
      m(y, x) = (t < 0 || t >= s.width || top_layer(s, y, t, !right_view) != here) ? 1 : 0;
    }
  return m;
}

// Masked mean of (o_v - gather(o_vstar, d_v))^2 with explicit clamped lerp.
double brute_disparity_loss(const Tensor3& o, const Tensor3& star, const DisparityMap& d,
                            const OcclusionMask& m) {
  const int W = o.width();
  double sum = 0.0;
  int n = 0;
  for (int y = 0; y < o.height(); ++y)
    for (int x = 0; x < W; ++x) {
      if (m(y, x)) continue;
      const double t = std::clamp(x + d(y, x), 0.0, W - 1.0);
      const int lo = static_cast<int>(std::floor(t));
      const int hi = std::min(lo + 1, W - 1);
      const double a = t - lo;
      for (int c = 0; c < o.channels(); ++c) {
        const double w = (1 - a) * star(y, lo, c) + a * star(y, hi, c);
        sum += (o(y, x, c) - w) * (o(y, x, c) - w);
        ++n;
      }
    }
  return n == 0 ? 0.0 : sum / n;
}

std::vector<std::filesystem::path> bundled_scenes() {
  std::vector<std::filesystem::path> out;
  for (const auto& entry : std::filesystem::directory_iterator(kScenes))
    if (entry.path().extension() == ".scene") out.push_back(entry.path());
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace

TEST_CASE("zero-disparity scene renders identical views") {
  SceneSpec s;
  s.width = 20;
  s.height = 12;
  s.background_seed = 1;
  s.layers.push_back({4, 3, 14, 9, 2, 0, 1});
  const StereoPair p = render_stereo(s);
  CHECK(p.left == p.right);
  CHECK(all_zero_grid(p.d_left));
  CHECK(all_zero_grid(p.d_right));
  CHECK(all_zero_grid(p.m_left));
  CHECK(all_zero_grid(p.m_right));
}

TEST_CASE("a rectangle at -4 leaves occlusion bands of width 4") {
  SceneSpec s;
  s.width = 32;
  s.height = 14;
  s.background_seed = 5;
  s.layers.push_back({10, 3, 20, 11, 6, -4, 1});
  const StereoPair p = render_stereo(s);
  CHECK(p.m_left == visibility(s, false));
  CHECK(p.m_right == visibility(s, true));
  for (int y = 0; y < 14; ++y)
    for (int x = 0; x < 32; ++x) {
      const bool rows = y >= 3 && y < 11;
      CHECK(p.m_left(y, x) == ((rows && x >= 6 && x < 10) ? 1 : 0));
      CHECK(p.m_right(y, x) == ((rows && x >= 16 && x < 20) ? 1 : 0));
      CHECK(p.d_left(y, x) == ((rows && x >= 10 && x < 20) ? -4.0 : 0.0));
      CHECK(p.d_right(y, x) == ((rows && x >= 6 && x < 16) ? 4.0 : 0.0));
    }
}

TEST_CASE("bundled scenes agree with the visibility oracle") {
  const auto scenes = bundled_scenes();
  CHECK(scenes.size() >= 5);
  for (const auto& path : scenes) {
    CAPTURE(path.filename().string());
    const SceneSpec s = load_scene(path);
    const StereoPair p = render_stereo(s);
    CHECK(p.m_left == visibility(s, false));
    CHECK(p.m_right == visibility(s, true));
    CHECK(consistency_check(p.d_left, p.d_right, 0.5) == p.m_left);
    CHECK(consistency_check(p.d_right, p.d_left, 0.5) == p.m_right);
    CHECK(epe_nonoccluded(p.d_left, p.d_left, p.m_left) == 0.0);

    // Each visible pixel is a copy of its correspondence.
    const Tensor3 wl = backward_warp(p.right, p.d_left);
    const Tensor3 wr = backward_warp(p.left, p.d_right);
    for (int y = 0; y < s.height; ++y)
      for (int x = 0; x < s.width; ++x)
        for (int c = 0; c < 3; ++c) {
          if (!p.m_left(y, x)) CHECK(wl(y, x, c) == p.left(y, x, c));
          if (!p.m_right(y, x)) CHECK(wr(y, x, c) == p.right(y, x, c));
        }
    CHECK(consistency_metric(p.left, p.right, p.d_left, p.d_right, p.m_left, p.m_right) == 0.0);
  }
}

TEST_CASE("rendering is deterministic") {
  const SceneSpec s = load_scene(kScenes / "three_layer.scene");
  const StereoPair a = render_stereo(s), b = render_stereo(s);
  CHECK(a.left == b.left);
  CHECK(a.right == b.right);
  double rgb[3], again[3];
  texture_rgb(77, 13, 5, rgb);
  texture_rgb(77, 13, 5, again);
  for (int c = 0; c < 3; ++c) {
    CHECK(rgb[c] == again[c]);
    CHECK((rgb[c] >= 0.0 && rgb[c] <= 1.0));
  }
}

TEST_CASE("scene parsing") {
  const SceneSpec s = parse_scene(
      "# demo\nwidth 30\nheight 10\nbackground_seed 4\nbackground_disparity -1\n"
      "layer 2 1 12 9 5 -3 1   # front\n");
  CHECK(s.width == 30);
  CHECK(s.height == 10);
  CHECK(s.background_seed == 4);
  CHECK(s.background_disparity == -1);
  REQUIRE(s.layers.size() == 1);
  CHECK(s.layers[0].x1 == 12);
  CHECK(s.layers[0].disparity == -3);

  const auto bad = [](const char* text) { CHECK_THROWS_AS(parse_scene(text), SpecError); };
  bad("");
  bad("width 10\n");
  bad("width 10\nheight 5\ncolour 3\n");
  bad("width ten\nheight 5\n");
  bad("width 10\nheight 5\nlayer 0 0 4 4 1 -1\n");
  bad("width 20\nheight 5\nlayer 0 0 21 4 1 -1 1\n");
  bad("width 20\nheight 5\nlayer 3 0 3 4 1 -1 1\n");
  bad("width 20\nheight 5\nlayer 0 0 4 4 1 -5 1\n");
  bad("width 20\nheight 5\nlayer 0 0 4 4 1 -1 1\nlayer 5 0 9 4 1 -2 1\n");
  bad("width 20\nheight 5\nlayer 0 0 4 4 1 -1 1\nlayer 5 0 9 4 1 -2 2\n");
  bad("width 20\nheight 5\nbackground_disparity -2\nlayer 0 0 4 4 1 -1 1\n");
  CHECK_THROWS_AS(load_scene(kScenes / "missing.scene"), IoError);
}

TEST_CASE("style presets") {
  CHECK(style_preset_names().size() == 4);
  for (const std::string& name : style_preset_names()) {
    const Tensor3 t = style_preset(name, 9, 11);
    CHECK(t.height() == 9);
    CHECK(t.width() == 11);
    CHECK(t.channels() == 3);
    for (double v : t.values()) CHECK((v >= 0.0 && v <= 1.0));
    CHECK(t == style_preset(name, 9, 11));
  }
  CHECK_THROWS_AS(style_preset("pointillism", 4, 4), ConfigError);
}

TEST_CASE("endpoint error") {
  const DisparityMap gt = random_disparity(6, 7, 1, -4, 0);
  const OcclusionMask none(6, 7);
  CHECK(epe_nonoccluded(gt, gt, none) == 0.0);

  DisparityMap off = gt;
  for (double& v : off.values()) v += 1.0;
  CHECK(epe_nonoccluded(off, gt, none) == doctest::Approx(1.0).epsilon(1e-14));

  const OcclusionMask m = random_mask(6, 7, 2, 0.3);
  DisparityMap inside = gt;
  for (std::size_t i = 0; i < m.size(); ++i)
    if (m.values()[i]) inside.values()[i] += 5.0;
  CHECK(epe_nonoccluded(inside, gt, m) == 0.0);

  CHECK_THROWS_AS(epe_nonoccluded(gt, gt, OcclusionMask(6, 7, 1)), UndefinedMetricError);
  CHECK_THROWS_AS(epe_nonoccluded(gt, DisparityMap(6, 8), none), DimensionError);
}

TEST_CASE("occlusion F-score") {
  OcclusionMask gt(4, 4);
  gt(0, 0) = gt(0, 1) = gt(2, 2) = gt(3, 3) = 1;
  CHECK(occlusion_fscore(gt, gt) == 1.0);
  CHECK(occlusion_fscore(OcclusionMask(4, 4), gt) == 0.0);
  CHECK(occlusion_fscore(OcclusionMask(4, 4), OcclusionMask(4, 4)) == 1.0);

  OcclusionMask half(4, 4);
  half(0, 0) = half(2, 2) = 1;
  CHECK(occlusion_fscore(half, gt) == doctest::Approx(2.0 / 3.0).epsilon(1e-14));
  CHECK_THROWS_AS(occlusion_fscore(gt, OcclusionMask(4, 5)), DimensionError);
}

TEST_CASE("consistency metric matches the brute-force sum") {
  for (std::uint64_t s = 1; s <= 4; ++s) {
    const Tensor3 ol = random_tensor(7, 10, 3, s), orr = random_tensor(7, 10, 3, s + 10);
    const DisparityMap dl = random_disparity(7, 10, s + 20, -3.5, 0.5);
    const DisparityMap dr = random_disparity(7, 10, s + 30, -0.5, 3.5);
    const OcclusionMask ml = random_mask(7, 10, s + 40, 0.25), mr = random_mask(7, 10, s + 50, 0.25);
    const double expected = brute_disparity_loss(ol, orr, dl, ml) + brute_disparity_loss(orr, ol, dr, mr);
    CHECK(std::abs(consistency_metric(ol, orr, dl, dr, ml, mr) - expected) <= 1e-10);

    const double swapped = consistency_metric(mirror(orr), mirror(ol), negate(mirror(dr)),
                                              negate(mirror(dl)), mirror(mr), mirror(ml));
    CHECK(swapped == doctest::Approx(expected).epsilon(1e-12));
  }
  CHECK_THROWS_AS(consistency_metric(Tensor3(3, 4, 3), Tensor3(3, 5, 3), DisparityMap(3, 4),
                                     DisparityMap(3, 4), OcclusionMask(3, 4), OcclusionMask(3, 4)),
                  DimensionError);
}
