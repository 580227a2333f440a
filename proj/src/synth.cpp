#include "stereostyle/synth.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numbers>
#include <set>
#include <sstream>

#include "stereostyle/rng.hpp"

namespace stereostyle {

namespace {

constexpr int kCell = 4;

int floor_div(int a, int b) { return a >= 0 ? a / b : -((-a + b - 1) / b); }

std::uint64_t cell_hash(std::uint64_t seed, int i, int j) {
  std::uint64_t h = seed * 0x9E3779B97F4A7C15ULL;
  h ^= static_cast<std::uint64_t>(static_cast<std::uint32_t>(i)) * 0xC2B2AE3D27D4EB4FULL;
  h ^= static_cast<std::uint64_t>(static_cast<std::uint32_t>(j)) * 0x165667B19E3779F9ULL;
  return h;
}

void lattice_rgb(std::uint64_t seed, int i, int j, double rgb[3]) {
  Lcg64 rng(cell_hash(seed, i, j));
  for (int c = 0; c < 3; ++c) rgb[c] = rng.uniform();
}

struct Placement {
  const SceneLayer* layer;  // nullptr = background
  int disparity;            // left-view disparity
};

// Layer visible at (x, y) of the given view, nearest first.
Placement top_layer(const SceneSpec& s, const std::vector<const SceneLayer*>& by_depth, int x,
                    int y, bool right_view) {
  for (const SceneLayer* l : by_depth) {
    const int shift = right_view ? l->disparity : 0;
    if (y >= l->y0 && y < l->y1 && x >= l->x0 + shift && x < l->x1 + shift) return {l, l->disparity};
  }
  return {nullptr, s.background_disparity};
}

int parse_int(const std::string& tok, int line) {
  int v = 0;
  const auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (ec != std::errc() || ptr != tok.data() + tok.size())
    throw SpecError("line " + std::to_string(line) + ": bad integer '" + tok + "'");
  return v;
}

std::uint64_t parse_u64(const std::string& tok, int line) {
  std::uint64_t v = 0;
  const auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (ec != std::errc() || ptr != tok.data() + tok.size())
    throw SpecError("line " + std::to_string(line) + ": bad seed '" + tok + "'");
  return v;
}

}  // namespace

void SceneSpec::validate() const {
  if (width < 1 || height < 1) throw SpecError("scene: canvas size must be positive");
  const auto too_large = [&](int d) { return 4 * std::abs(d) >= width; };
  if (too_large(background_disparity)) throw SpecError("scene: background disparity too large");
  std::set<int> depths;
  for (std::size_t i = 0; i < layers.size(); ++i) {
    const SceneLayer& l = layers[i];
    const std::string name = "scene: layer " + std::to_string(i);
    if (l.x0 < 0 || l.y0 < 0 || l.x1 > width || l.y1 > height || l.x0 >= l.x1 || l.y0 >= l.y1)
      throw SpecError(name + " exceeds the canvas or is empty");
    if (too_large(l.disparity)) throw SpecError(name + ": |disparity| must be < width/4");
    if (!depths.insert(l.depth).second) throw SpecError(name + ": duplicate depth");
    if (l.disparity > background_disparity)
      throw SpecError(name + ": shifts less than the background");
  }
  for (const SceneLayer& a : layers)
    for (const SceneLayer& b : layers)
      if (a.depth < b.depth && a.disparity > b.disparity)
        throw SpecError("scene: nearer layer must not shift less than a farther one");
}

SceneSpec parse_scene(std::string_view text) {
  SceneSpec s;
  bool have_w = false, have_h = false;
  std::istringstream in{std::string(text)};
  std::string raw;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    if (const auto hash = raw.find('#'); hash != std::string::npos) raw.erase(hash);
    std::istringstream ls(raw);
    std::vector<std::string> tok;
    for (std::string t; ls >> t;) tok.push_back(t);
    if (tok.empty()) continue;
    const std::string& key = tok[0];
    const auto expect = [&](std::size_t n) {
      if (tok.size() != n + 1)
        throw SpecError("line " + std::to_string(line_no) + ": '" + key + "' takes " +
                        std::to_string(n) + " value(s)");
    };
    if (key == "width") {
      expect(1);
      s.width = parse_int(tok[1], line_no);
      have_w = true;
    } else if (key == "height") {
      expect(1);
      s.height = parse_int(tok[1], line_no);
      have_h = true;
    } else if (key == "background_seed") {
      expect(1);
      s.background_seed = parse_u64(tok[1], line_no);
    } else if (key == "background_disparity") {
      expect(1);
      s.background_disparity = parse_int(tok[1], line_no);
    } else if (key == "layer") {
      expect(7);
      SceneLayer l;
      l.x0 = parse_int(tok[1], line_no);
      l.y0 = parse_int(tok[2], line_no);
      l.x1 = parse_int(tok[3], line_no);
      l.y1 = parse_int(tok[4], line_no);
      l.seed = parse_u64(tok[5], line_no);
      l.disparity = parse_int(tok[6], line_no);
      l.depth = parse_int(tok[7], line_no);
      s.layers.push_back(l);
    } else {
      throw SpecError("line " + std::to_string(line_no) + ": unknown key '" + key + "'");
    }
  }
  if (!have_w || !have_h) throw SpecError("scene: width and height are required");
  s.validate();
  return s;
}

SceneSpec load_scene(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open scene '" + path.string() + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_scene(buf.str());
}

void texture_rgb(std::uint64_t seed, int u, int v, double rgb[3]) {
  const int i = floor_div(u, kCell), j = floor_div(v, kCell);
  const double fx = static_cast<double>(u - i * kCell) / kCell;
  const double fy = static_cast<double>(v - j * kCell) / kCell;
  double c00[3], c10[3], c01[3], c11[3];
  lattice_rgb(seed, i, j, c00);
  lattice_rgb(seed, i + 1, j, c10);
  lattice_rgb(seed, i, j + 1, c01);
  lattice_rgb(seed, i + 1, j + 1, c11);
  for (int c = 0; c < 3; ++c) {
    const double top = (1 - fx) * c00[c] + fx * c10[c];
    const double bot = (1 - fx) * c01[c] + fx * c11[c];
    rgb[c] = (1 - fy) * top + fy * bot;
  }
}

StereoPair render_stereo(const SceneSpec& spec) {
  spec.validate();
  const int H = spec.height, W = spec.width;
  std::vector<const SceneLayer*> by_depth;
  for (const SceneLayer& l : spec.layers) by_depth.push_back(&l);
  std::sort(by_depth.begin(), by_depth.end(),
            [](const SceneLayer* a, const SceneLayer* b) { return a->depth < b->depth; });

  StereoPair p{Tensor3(H, W, 3), Tensor3(H, W, 3), DisparityMap(H, W), DisparityMap(H, W),
               OcclusionMask(H, W), OcclusionMask(H, W)};
  for (int view = 0; view < 2; ++view) {
    const bool right = view == 1;
    Tensor3& img = right ? p.right : p.left;
    DisparityMap& disp = right ? p.d_right : p.d_left;
    OcclusionMask& occ = right ? p.m_right : p.m_left;
    for (int y = 0; y < H; ++y) {
      for (int x = 0; x < W; ++x) {
        const Placement top = top_layer(spec, by_depth, x, y, right);
        // Left-view x of the surface point seen here.
        const int left_x = right ? x - top.disparity : x;
        const int u = top.layer ? left_x - top.layer->x0 : left_x;
        const int v = top.layer ? y - top.layer->y0 : y;
        texture_rgb(top.layer ? top.layer->seed : spec.background_seed, u, v, img.pixel(y, x));
        disp(y, x) = right ? -top.disparity : top.disparity;

        const int partner = x + static_cast<int>(disp(y, x));
        bool occluded = partner < 0 || partner >= W;
        if (!occluded) {
          const Placement other = top_layer(spec, by_depth, partner, y, !right);
          occluded = other.layer != top.layer;
        }
        occ(y, x) = occluded ? 1 : 0;
      }
    }
  }
  return p;
}

const std::vector<std::string>& style_preset_names() {
  static const std::vector<std::string> names = {"stripes", "checker", "dots", "waves"};
  return names;
}

Tensor3 style_preset(const std::string& name, int height, int width) {
  Tensor3 t(height, width, 3);
  constexpr double pi = std::numbers::pi;
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      double* px = t.pixel(y, x);
      if (name == "stripes") {
        const double s = 0.5 + 0.5 * std::sin(2 * pi * (x + y) / 8.0);
        px[0] = 0.9 * s + 0.1;
        px[1] = 0.3 * s;
        px[2] = 0.6 * (1 - s) + 0.2;
      } else if (name == "checker") {
        const bool on = ((x / 6) + (y / 6)) % 2 == 0;
        px[0] = on ? 0.95 : 0.1;
        px[1] = on ? 0.85 : 0.2;
        px[2] = on ? 0.2 : 0.5;
      } else if (name == "dots") {
        const double dx = (x % 10) - 4.5, dy = (y % 10) - 4.5;
        const double r = std::sqrt(dx * dx + dy * dy);
        const double s = r < 3.0 ? 1.0 : 0.0;
        px[0] = 0.2 + 0.7 * s;
        px[1] = 0.6 - 0.4 * s;
        px[2] = 0.8;
      } else if (name == "waves") {
        const double s = 0.5 + 0.5 * std::sin(2 * pi * x / 12.0 + 2.0 * std::sin(2 * pi * y / 16.0));
        px[0] = 0.1 + 0.3 * s;
        px[1] = 0.4 + 0.5 * s;
        px[2] = 0.9 - 0.6 * s;
      } else {
        throw ConfigError("unknown style preset '" + name + "'");
      }
    }
  }
  return t;
}

}  // namespace stereostyle
