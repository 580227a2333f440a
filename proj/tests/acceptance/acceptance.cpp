// Acceptance suite: prints one PASS/FAIL line per criterion. Exits zero only
// when the failing criteria are exactly those named by --known-failures
// (comma-separated numbers), so a fixed or a new failure both fail the run.

#include <chrono>
#include <cstdio>
#include <functional>
#include <numbers>
#include <set>
#include <sstream>
#include <string>

#include "../unit/test_support.hpp"
#include "stereostyle/cli.hpp"
#include "stereostyle/eval.hpp"
#include "stereostyle/features.hpp"
#include "stereostyle/losses.hpp"
#include "stereostyle/middle.hpp"
#include "stereostyle/occlusion.hpp"
#include "stereostyle/solver.hpp"
#include "stereostyle/synth.hpp"
#include "stereostyle/warp.hpp"

using namespace stereostyle;
using namespace testing;
namespace fs = std::filesystem;

namespace {

const fs::path kScenes = fs::path(STEREOSTYLE_DATA_DIR) / "scenes";
constexpr int N = 8;  // gradient fixtures are N x N
constexpr double kFdTolerance = 1e-4;

struct Outcome {
  bool pass = true;
  std::string detail;
};

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// Accumulates finite-difference checks; every one must stay within tolerance.
struct FdLedger {
  double worst = 0.0;
  std::string worst_name;
  int checks = 0;
  int failed = 0;

  void add(const std::string& name, const FdReport& r) {
    ++checks;
    if (r.worst_rel > kFdTolerance) ++failed;
    if (r.worst_rel >= worst) {
      worst = r.worst_rel;
      worst_name = name;
    }
  }
};

Tensor3 random_flow(std::uint64_t seed, double lo, double hi) {
  const DisparityMap a = random_disparity(N, N, seed, lo, hi);
  const DisparityMap b = random_disparity(N, N, seed + 1, lo, hi);
  Tensor3 f(N, N, 2);
  for (int y = 0; y < N; ++y)
    for (int x = 0; x < N; ++x) {
      f(y, x, 0) = a(y, x);
      f(y, x, 1) = b(y, x);
    }
  return f;
}

void warp_checks(FdLedger& led) {
  const int C = 3;
  const Tensor3 x = random_tensor(N, N, C, 101);
  const Tensor3 cot = random_tensor(N, N, C, 102, -1, 1);
  const OcclusionMask m = random_mask(N, N, 103, 0.15);

  const DisparityMap d = random_disparity(N, N, 104, -2.5, 2.5);
  const WarpGrad bg = backward_warp_vjp(x, d, cot);
  led.add("backward_warp x", directional_check(
                                 [&](const Vec& v) { return dot(backward_warp(unflat(v, N, N, C), d), cot); },
                                 flat(x), flat(bg.grad_x), 1));
  led.add("backward_warp d", directional_check(
                                 [&](const Vec& v) { return dot(backward_warp(x, unflat_disparity(v, N, N)), cot); },
                                 flat(d), flat(bg.grad_d), 2));

  const Tensor3 bflow = random_flow(105, -2.5, 2.5);
  const FlowWarpGrad bfg = backward_warp_flow_vjp(x, bflow, cot);
  led.add("backward_warp_flow x",
          directional_check([&](const Vec& v) { return dot(backward_warp_flow(unflat(v, N, N, C), bflow), cot); },
                            flat(x), flat(bfg.grad_x), 3));
  led.add("backward_warp_flow flow",
          directional_check([&](const Vec& v) { return dot(backward_warp_flow(x, unflat(v, N, N, 2)), cot); },
                            flat(bflow), flat(bfg.grad_flow), 4));

  const DisparityMap fd = random_disparity(N, N, 106, -1.8, 1.8);
  const WarpGrad fg = forward_warp_vjp(x, fd, m, cot);
  led.add("forward_warp x",
          directional_check([&](const Vec& v) { return dot(forward_warp(unflat(v, N, N, C), fd, m).image, cot); },
                            flat(x), flat(fg.grad_x), 5));
  led.add("forward_warp d", directional_check(
                                [&](const Vec& v) {
                                  return dot(forward_warp(x, unflat_disparity(v, N, N), m).image, cot);
                                },
                                flat(fd), flat(fg.grad_d), 6));

  const Tensor3 fflow = random_flow(107, -1.4, 1.4);
  const FlowWarpGrad ffg = forward_warp_flow_vjp(x, fflow, m, cot);
  led.add("forward_warp_flow x", directional_check(
                                     [&](const Vec& v) {
                                       return dot(forward_warp_flow(unflat(v, N, N, C), fflow, m).image, cot);
                                     },
                                     flat(x), flat(ffg.grad_x), 7));
  led.add("forward_warp_flow flow", directional_check(
                                        [&](const Vec& v) {
                                          return dot(forward_warp_flow(x, unflat(v, N, N, 2), m).image, cot);
                                        },
                                        flat(fflow), flat(ffg.grad_flow), 8));
}

void loss_checks(FdLedger& led) {
  const FeatureExtractor e = make_default_extractor();
  const auto smooth = same_relu_pattern(e, N, N, 3);
  const Tensor3 content = random_tensor(N, N, 3, 201);
  const Tensor3 o = random_tensor(N, N, 3, 202);
  const auto grams = style_grams(e, random_tensor(N, N, 3, 203));

  const LossAndGrad c = content_loss(e, o, content);
  led.add("content_loss", directional_check(
                              [&](const Vec& v) { return content_loss(e, unflat(v, N, N, 3), content).value; },
                              flat(o), flat(c.grad), 11, 10, 1e-4, 1e-8, smooth));
  const LossAndGrad s = style_loss(e, o, grams);
  led.add("style_loss",
          directional_check([&](const Vec& v) { return style_loss(e, unflat(v, N, N, 3), grams).value; },
                            flat(o), flat(s.grad), 12, 10, 1e-4, 1e-8, smooth));
  const PerceptualObjective obj(e, content, grams);
  const auto pr = obj.evaluate(o, 1.0, 1e3);
  led.add("perceptual objective", directional_check(
                                      [&](const Vec& v) {
                                        const auto r = obj.evaluate(unflat(v, N, N, 3), 1.0, 1e3);
                                        return r.content + 1e3 * r.style;
                                      },
                                      flat(o), flat(pr.grad), 13, 10, 1e-4, 1e-8, smooth));

  const Tensor3 star = random_tensor(N, N, 3, 204);
  const DisparityMap d = random_disparity(N, N, 205, -2.5, 2.5);
  const OcclusionMask m = random_mask(N, N, 206, 0.2);
  const DisparityLossResult dl = disparity_loss(o, star, d, m);
  led.add("disparity_loss o_v", directional_check(
                                    [&](const Vec& v) { return disparity_loss_value(unflat(v, N, N, 3), star, d, m); },
                                    flat(o), flat(dl.grad_o_v), 14));
  led.add("disparity_loss o_vstar",
          directional_check([&](const Vec& v) { return disparity_loss_value(o, unflat(v, N, N, 3), d, m); },
                            flat(star), flat(dl.grad_o_vstar), 15));

  const Tensor3 f = random_tensor(N, N, 4, 207, -1, 1);
  const Tensor3 gc = random_tensor(4, 4, 1, 208, -1, 1);
  GramMatrix cot(4);
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) cot(i, j) = gc(i, j, 0);
  const Tensor3 gg = gram_vjp(f, cot);
  led.add("gram", directional_check(
                      [&](const Vec& v) {
                        const GramMatrix g = gram(unflat(v, N, N, 4));
                        double sum = 0.0;
                        for (int i = 0; i < 4; ++i)
                          for (int j = 0; j < 4; ++j) sum += g(i, j) * cot(i, j);
                        return sum;
                      },
                      flat(f), flat(gg), 16));
}

FdReport temporal_fd() {
  const Tensor3 prev = random_tensor(N, N, 3, 301);
  const Tensor3 cur = random_tensor(N, N, 3, 302);
  const Tensor3 flow = random_flow(303, -1.45, 1.45);
  const OcclusionMask m = random_mask(N, N, 305, 0.2);
  const LossAndGrad r = temporal_loss(cur, prev, flow, m);
  return directional_check([&](const Vec& v) { return temporal_loss(unflat(v, N, N, 3), prev, flow, m).value; },
                           flat(cur), flat(r.grad), 17);
}

Outcome criterion1() {
  const auto t0 = std::chrono::steady_clock::now();
  FdLedger led;
  warp_checks(led);
  loss_checks(led);
  led.add("temporal_loss", temporal_fd());
  const double secs = seconds_since(t0);
  Outcome o;
  o.pass = led.failed == 0 && secs < 60.0;
  o.detail = std::to_string(led.checks) + " checks, " + std::to_string(led.failed) + " over tolerance, worst rel " +
             fmt("%.2e", led.worst) + " (" + led.worst_name + "), " + fmt("%.1f", secs) + " s";
  return o;
}

Outcome criterion2() {
  Outcome o;
  const Tensor3 x = random_tensor(16, 20, 3, 401);
  const DisparityMap zero(16, 20);
  const OcclusionMask none(16, 20);
  const bool back_id = backward_warp(x, zero) == x;
  const SplatResult fw = forward_warp(x, zero, none);
  const bool fwd_id = fw.image == x && all_zero_grid(fw.holes);

  double const_err = 0.0;
  int nonhole = 0;
  for (std::uint64_t s = 0; s < 4; ++s) {
    DisparityMap d(16, 20);
    Lcg64 rng(410 + s);
    for (int y = 0; y < 16; ++y)
      for (int px = 0; px < 20; ++px)
        d(y, px) = px < 3 ? static_cast<int>(rng.below(4)) : -static_cast<int>(rng.below(4));
    const DisparityMap frac = random_disparity(16, 20, 420 + s, -3.0, 3.0);
    for (const DisparityMap* dd : {static_cast<const DisparityMap*>(&d), &frac}) {
      const SplatResult r = forward_warp(Tensor3(16, 20, 3, 0.37), *dd, random_mask(16, 20, 430 + s, 0.2));
      for (int y = 0; y < 16; ++y)
        for (int px = 0; px < 20; ++px) {
          if (r.holes(y, px)) continue;
          ++nonhole;
          for (int c = 0; c < 3; ++c) const_err = std::max(const_err, std::abs(r.image(y, px, c) - 0.37));
        }
    }
  }

  double lin_err = 0.0;
  for (std::uint64_t s = 0; s < 4; ++s) {
    const Tensor3 a = random_tensor(16, 20, 3, 440 + s), b = random_tensor(16, 20, 3, 450 + s);
    const DisparityMap d = random_disparity(16, 20, 460 + s, -4.0, 4.0, 0.0);
    const double ka = 0.7, kb = -1.3;
    lin_err = std::max(lin_err, max_abs_diff(backward_warp(ka * a + kb * b, d),
                                             ka * backward_warp(a, d) + kb * backward_warp(b, d)));
  }
  o.pass = back_id && fwd_id && nonhole > 0 && const_err <= 1e-12 && lin_err <= 1e-12;
  o.detail = std::string("backward identity ") + (back_id ? "exact" : "broken") + ", forward identity " +
             (fwd_id ? "exact" : "broken") + ", constant splat max err " + fmt("%.1e", const_err) +
             ", linearity max err " + fmt("%.1e", lin_err);
  return o;
}

Outcome criterion3() {
  Outcome o;
  int scenes = 0, exact = 0;
  double worst_f = 1.0;
  for (const auto& entry : fs::directory_iterator(kScenes)) {
    if (entry.path().extension() != ".scene") continue;
    ++scenes;
    const StereoPair p = render_stereo(load_scene(entry.path()));
    const OcclusionMask ml = consistency_check(p.d_left, p.d_right, 0.5);
    const OcclusionMask mr = consistency_check(p.d_right, p.d_left, 0.5);
    if (ml == p.m_left && mr == p.m_right) ++exact;
    worst_f = std::min({worst_f, occlusion_fscore(ml, p.m_left), occlusion_fscore(mr, p.m_right)});
  }
  o.pass = scenes >= 5 && exact == scenes && worst_f == 1.0;
  o.detail = std::to_string(exact) + "/" + std::to_string(scenes) + " scenes exact, min F-score " + fmt("%.6f", worst_f);
  return o;
}

Outcome criterion4() {
  Outcome o;
  const Tensor3 f = random_tensor(12, 16, 8, 501), g = random_tensor(12, 16, 8, 502);
  const DisparityMap zero(12, 16);
  const OcclusionMask none(12, 16);
  const StereoFeatures same = from_middle(to_middle(f, f, zero, zero, none, none), f, f, none, none);
  const bool identity = same.left == f && same.right == f;

  const StereoFeatures mixed = from_middle(to_middle(f, g, zero, zero, none, none), f, g, none, none);
  Tensor3 avg(12, 16, 8);
  for (std::size_t i = 0; i < avg.size(); ++i) avg.values()[i] = (f.values()[i] + g.values()[i]) / 2.0;
  const double avg_err = std::max(max_abs_diff(mixed.left, avg), max_abs_diff(mixed.right, avg));

  double swap_err = 0.0;
  bool holes_match = true;
  for (std::uint64_t s = 0; s < 5; ++s) {
    const DisparityMap dl = random_disparity(12, 16, 510 + s, -4.0, 0.0);
    const DisparityMap dr = random_disparity(12, 16, 520 + s, 0.0, 4.0);
    const OcclusionMask ml = random_mask(12, 16, 530 + s, 0.2), mr = random_mask(12, 16, 540 + s, 0.2);
    const MiddleDomain a = to_middle(f, g, dl, dr, ml, mr);
    const MiddleDomain b =
        to_middle(mirror(g), mirror(f), negate(mirror(dr)), negate(mirror(dl)), mirror(mr), mirror(ml));
    holes_match = holes_match && b.holes == mirror(a.holes);
    const Tensor3 fa = mirror(a.features);
    for (int y = 0; y < 12; ++y)
      for (int x = 0; x < 16; ++x) {
        if (b.holes(y, x)) continue;
        for (int c = 0; c < 8; ++c) swap_err = std::max(swap_err, std::abs(b.features(y, x, c) - fa(y, x, c)));
      }
  }
  o.pass = identity && avg_err == 0.0 && holes_match && swap_err <= 1e-5;
  o.detail = std::string("round trip ") + (identity ? "exact" : "broken") + ", average max err " +
             fmt("%.1e", avg_err) + ", view-swap max err " + fmt("%.1e", swap_err);
  return o;
}

Outcome criterion5() {
  const auto t0 = std::chrono::steady_clock::now();
  const FeatureExtractor e = make_default_extractor();
  const char* const scenes[] = {"two_layer.scene", "three_layer.scene", "staircase.scene"};
  const LossWeights with;
  LossWeights without = with;
  without.gamma = 0.0;
  const SolverConfig cfg;  // 300 Adam steps from the content images

  Outcome o;
  int runs = 0, lower = 0;
  double worst_dev = 0.0, worst_ratio = 0.0;
  for (const char* scene : scenes) {
    const StereoPair p = render_stereo(load_scene(kScenes / scene));
    for (const std::string& preset : style_preset_names()) {
      const Tensor3 style = style_preset(preset, p.left.height(), p.left.width());
      const StereoResult base = stylize_stereo(p, style, e, without, cfg);
      const StereoResult joint = stylize_stereo(p, style, e, with, cfg);
      const double cb = consistency_metric(base.left, base.right, p.d_left, p.d_right, p.m_left, p.m_right);
      const double cj = consistency_metric(joint.left, joint.right, p.d_left, p.d_right, p.m_left, p.m_right);
      const double pb = base.trace.back().losses.perceptual(with);
      const double pj = joint.trace.back().losses.perceptual(with);
      ++runs;
      if (cj < cb) ++lower;
      worst_dev = std::max(worst_dev, std::abs(pj - pb) / pb);
      worst_ratio = std::max(worst_ratio, cj / cb);
      std::printf("    %-18s %-8s consistency %.3e -> %.3e, perceptual %.4g -> %.4g\n", scene, preset.c_str(), cb, cj,
                  pb, pj);
    }
  }
  const double secs = seconds_since(t0);
  o.pass = lower == runs && worst_dev < 0.10 && secs < 600.0;
  o.detail = std::to_string(lower) + "/" + std::to_string(runs) + " pairs more consistent (worst ratio " +
             fmt("%.2e", worst_ratio) + "), max perceptual change " + fmt("%.2f", 100 * worst_dev) + "%, " +
             fmt("%.0f", secs) + " s";
  return o;
}

Outcome criterion6() {
  Outcome o;
  const DisparityMap gt = random_disparity(9, 11, 601, -5.0, 5.0);
  DisparityMap off = gt;
  for (double& v : off.values()) v += 1.0;
  const double unit = disp_train_loss(off, gt, random_mask(9, 11, 602, 0.3));
  const double ln2 = occ_train_loss(Tensor3(9, 11, 1, 0.5), random_mask(9, 11, 603, 0.3), WeightMap(9, 11, 1.0));

  double ratio_err = 0.0, sum_err = 0.0;
  for (std::uint64_t s = 0; s < 5; ++s) {
    const OcclusionMask m = random_mask(9, 11, 610 + s, 0.1 + 0.1 * s);
    const WeightMap w = balance_weights(m);
    const double occ = static_cast<double>(count_nonzero(m));
    const double vis = static_cast<double>(m.size()) - occ;
    double occ_sum = 0.0;
    for (std::size_t i = 0; i < m.size(); ++i) {
      if (m.values()[i]) {
        occ_sum += w.values()[i];
        ratio_err = std::max(ratio_err, std::abs(w.values()[i] - vis / occ));
      } else {
        ratio_err = std::max(ratio_err, std::abs(w.values()[i] - 1.0));
      }
    }
    sum_err = std::max(sum_err, std::abs(occ_sum - vis));
  }
  const double unit_err = std::abs(unit - 1.0), ln2_err = std::abs(ln2 - std::numbers::ln2);
  o.pass = unit_err <= 1e-10 && ln2_err <= 1e-10 && ratio_err <= 1e-12 && sum_err <= 1e-9;
  o.detail = "unit offset err " + fmt("%.1e", unit_err) + ", ln 2 err " + fmt("%.1e", ln2_err) +
             ", balance weight err " + fmt("%.1e", ratio_err);
  return o;
}

Outcome criterion7() {
  Outcome o;
  const fs::path dir = scratch_dir("acceptance_determinism");
  std::ostringstream sink;
  if (run_cli({"synth", "--spec", (kScenes / "two_layer.scene").string(), "--out-dir", dir.string()}, sink, sink) != 0) {
    o.pass = false;
    o.detail = "synth failed: " + sink.str();
    return o;
  }
  const auto solve = [&](const std::string& tag, int threads) {
    return run_cli({"stylize-stereo", "--left", (dir / "left.png").string(), "--right", (dir / "right.png").string(),
                    "--disp-left", (dir / "disp_left.pfm").string(), "--disp-right",
                    (dir / "disp_right.pfm").string(), "--style", "preset:waves", "--steps", "40", "--init", "noise",
                    "--seed", "17", "--threads", std::to_string(threads), "--out-left",
                    (dir / (tag + "_l.png")).string(), "--out-right", (dir / (tag + "_r.png")).string(), "--trace",
                    (dir / (tag + ".csv")).string()},
                   sink, sink);
  };
  const bool ran = solve("a", 1) == 0 && solve("b", 1) == 0 && solve("c", 4) == 0;
  int identical = 0;
  for (const char* suffix : {"_l.png", "_r.png", ".csv", "_l.occ.pfm", "_r.occ.pfm"}) {
    const std::string a = read_bytes(dir / (std::string("a") + suffix));
    if (!a.empty() && a == read_bytes(dir / (std::string("b") + suffix)) &&
        a == read_bytes(dir / (std::string("c") + suffix)))
      ++identical;
  }
  o.pass = ran && identical == 5;
  o.detail = std::to_string(identical) + "/5 output files bitwise identical across 3 runs (1, 1 and 4 threads)";
  return o;
}

Outcome criterion8() {
  Outcome o;
  // Static scene: the current frame is the previous one carried along the flow.
  const Tensor3 prev = random_tensor(N, N, 3, 801);
  const Tensor3 flow = random_flow(802, -1.45, 1.45);
  const OcclusionMask m = random_mask(N, N, 803, 0.2);
  const double still = temporal_loss(prev, prev, Tensor3(N, N, 2), m).value;
  const double carried = temporal_loss(backward_warp_flow(prev, flow), prev, flow, m).value;
  const LossAndGrad occluded = temporal_loss(random_tensor(N, N, 3, 804), prev, flow, OcclusionMask(N, N, 1));
  const FdReport fd = temporal_fd();
  o.pass = still == 0.0 && carried == 0.0 && occluded.value == 0.0 && all_zero(occluded.grad) &&
           fd.worst_rel <= kFdTolerance;
  o.detail = "static " + fmt("%.1e", std::max(still, carried)) + ", fully occluded " + fmt("%.1e", occluded.value) +
             ", gradient worst rel " + fmt("%.2e", fd.worst_rel);
  return o;
}

}  // namespace

int main(int argc, char** argv) {
  std::set<int> known;
  for (int i = 1; i + 1 < argc; i += 2) {
    if (std::string(argv[i]) != "--known-failures") continue;
    std::istringstream list(argv[i + 1]);
    std::string item;
    while (std::getline(list, item, ',')) known.insert(std::stoi(item));
  }

  const std::pair<const char*, std::function<Outcome()>> criteria[] = {
      {"gradient oracles", criterion1},  {"warp identities", criterion2},
      {"occlusion oracle", criterion3},  {"middle-domain round trip", criterion4},
      {"consistency vs style", criterion5}, {"training losses", criterion6},
      {"determinism", criterion7},       {"temporal loss", criterion8},
  };
  std::set<int> failed;
  for (int i = 0; i < 8; ++i) {
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("threw: ") + e.what()};
    }
    if (!o.pass) failed.insert(i + 1);
    std::printf("criterion %d %s: %s (%s)%s\n", i + 1, o.pass ? "PASS" : "FAIL", criteria[i].first,
                o.detail.c_str(), known.count(i + 1) ? (o.pass ? " [listed as known failure]" : " [known failure]") : "");
    std::fflush(stdout);
  }
  return failed == known ? 0 : 1;
}
