#include "stereostyle/cli.hpp"

#include <CLI11.hpp>

#include <charconv>
#include <filesystem>
#include <fstream>
#include <optional>

#include "stereostyle/eval.hpp"
#include "stereostyle/features.hpp"
#include "stereostyle/io.hpp"
#include "stereostyle/occlusion.hpp"
#include "stereostyle/solver.hpp"
#include "stereostyle/synth.hpp"
#include "stereostyle/warp.hpp"

namespace stereostyle {

namespace fs = std::filesystem;

namespace {

const std::string kPresetPrefix = "preset:";

struct SolveFlags {
  std::string style;
  std::string extractor;
  LossWeights weights;
  SolverConfig cfg;
  std::string optimizer = "adam";
  std::string init = "content";
  std::string trace;
};

void add_solve_flags(CLI::App* cmd, SolveFlags& f, bool stereo) {
  cmd->add_option("--style", f.style, "Style image (PNG) or preset:<stripes|checker|dots|waves>")
      ->required();
  cmd->add_option("--extractor", f.extractor, "Feature extractor weight file (default: built-in)");
  cmd->add_option("--alpha", f.weights.alpha, "Content weight")->capture_default_str();
  cmd->add_option("--beta", f.weights.beta, "Style weight")->capture_default_str();
  if (stereo) cmd->add_option("--gamma", f.weights.gamma, "Disparity weight")->capture_default_str();
  cmd->add_option("--steps", f.cfg.steps, "Optimization steps")->capture_default_str();
  cmd->add_option("--lr", f.cfg.learning_rate, "Learning rate")->capture_default_str();
  cmd->add_option("--seed", f.cfg.seed, "Seed for noise initialization")->capture_default_str();
  cmd->add_option("--optimizer", f.optimizer, "adam or gd")
      ->check(CLI::IsMember({"adam", "gd"}))
      ->capture_default_str();
  cmd->add_option("--init", f.init, "content or noise")
      ->check(CLI::IsMember({"content", "noise"}))
      ->capture_default_str();
  cmd->add_option("--log-every", f.cfg.log_every, "Trace interval in steps")->capture_default_str();
  cmd->add_option("--threads", f.cfg.threads, "Worker threads")->capture_default_str();
  cmd->add_option("--trace", f.trace, "CSV path for the loss trace");
}

void finish_solve_flags(SolveFlags& f) {
  f.cfg.optimizer = f.optimizer == "gd" ? Optimizer::plain_gd : Optimizer::adam;
  f.cfg.init = f.init == "noise" ? InitMode::uniform_noise : InitMode::content_copy;
}

Tensor3 load_style(const std::string& spec, const Tensor3& like) {
  if (spec.rfind(kPresetPrefix, 0) == 0)
    return style_preset(spec.substr(kPresetPrefix.size()), like.height(), like.width());
  return load_image(spec);
}

Tensor3 as_rgb(const Tensor3& t) {
  if (t.channels() == 3) return t;
  Tensor3 out(t.height(), t.width(), 3);
  for (int y = 0; y < t.height(); ++y)
    for (int x = 0; x < t.width(); ++x)
      for (int c = 0; c < 3; ++c) out(y, x, c) = t(y, x, 0);
  return out;
}

FeatureExtractor load_or_default(const std::string& path) {
  return path.empty() ? make_default_extractor() : load_extractor(path);
}

void write_csv_row(std::ostream& out, int step, std::initializer_list<double> values) {
  out << step;
  for (double v : values) out << ',' << format_decimal(v);
  out << '\n';
}

std::ofstream open_text(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write '" + path + "'");
  return out;
}

// "<dir>/<stem>.occ.pfm" next to an output image.
fs::path sibling(const fs::path& image, const std::string& suffix) {
  fs::path p = image;
  p.replace_extension();
  return p.string() + suffix;
}

int cmd_stylize_stereo(const std::string& left, const std::string& right,
                       const std::string& disp_left, const std::string& disp_right,
                       const std::string& occ_left, const std::string& occ_right, double tau,
                       const std::string& out_left, const std::string& out_right, SolveFlags& f,
                       std::ostream& out) {
  finish_solve_flags(f);
  StereoPair pair;
  pair.left = as_rgb(load_image(left));
  pair.right = as_rgb(load_image(right));
  pair.d_left = load_float_map(disp_left);
  pair.d_right = load_float_map(disp_right);
  if (occ_left.empty() != occ_right.empty())
    throw ConfigError("--occ-left and --occ-right must be given together");
  const bool computed = occ_left.empty();
  if (computed) {
    pair.m_left = consistency_check(pair.d_left, pair.d_right, tau);
    pair.m_right = consistency_check(pair.d_right, pair.d_left, tau);
  } else {
    pair.m_left = load_mask(occ_left);
    pair.m_right = load_mask(occ_right);
  }
  pair.validate();
  const Tensor3 style = as_rgb(load_style(f.style, pair.left));
  const FeatureExtractor e = load_or_default(f.extractor);

  const StereoResult r = stylize_stereo(pair, style, e, f.weights, f.cfg);
  save_image(r.left, out_left);
  save_image(r.right, out_right);
  if (computed) {
    save_float_map(pair.m_left, sibling(out_left, ".occ.pfm"));
    save_float_map(pair.m_right, sibling(out_right, ".occ.pfm"));
  }
  if (!f.trace.empty()) {
    std::ofstream csv = open_text(f.trace);
    csv << "step,content_l,content_r,style_l,style_r,disp_l,disp_r,total\n";
    for (const TraceEntry& t : r.trace) {
      const LossBreakdown& b = t.losses;
      write_csv_row(csv, t.step,
                    {b.content_l, b.content_r, b.style_l, b.style_r, b.disp_l, b.disp_r, b.total});
    }
  }
  const LossBreakdown& last = r.trace.back().losses;
  out << "total " << format_decimal(last.total) << " disp " << format_decimal(last.disp_l + last.disp_r)
      << '\n';
  return kExitOk;
}

int cmd_stylize(const std::string& input, const std::string& view, const std::string& output,
                SolveFlags& f, std::ostream& out) {
  finish_solve_flags(f);
  const Tensor3 content = as_rgb(load_image(input));
  const Tensor3 style = as_rgb(load_style(f.style, content));
  const FeatureExtractor e = load_or_default(f.extractor);
  const MonoResult r =
      stylize_mono(content, style, e, f.weights, f.cfg, view == "right" ? View::right : View::left);
  save_image(r.image, output);
  if (!f.trace.empty()) {
    std::ofstream csv = open_text(f.trace);
    csv << "step,content,style,total\n";
    for (const MonoTraceEntry& t : r.trace) write_csv_row(csv, t.step, {t.content, t.style, t.total});
  }
  out << "total " << format_decimal(r.trace.back().total) << '\n';
  return kExitOk;
}

int cmd_warp(const std::string& mode, const std::string& input, const std::string& disp,
             const std::string& occ, const std::string& output, const std::string& hole_out) {
  const Tensor3 img = load_image(input);
  const DisparityMap d = load_float_map(disp);
  if (mode == "backward") {
    save_image(backward_warp(img, d), output);
    return kExitOk;
  }
  const OcclusionMask m = occ.empty() ? OcclusionMask(d.height(), d.width()) : load_mask(occ);
  const SplatResult r = forward_warp(img, d, m);
  save_image(r.image, output);
  save_float_map(r.holes, hole_out.empty() ? sibling(output, ".holes.pfm") : fs::path(hole_out));
  return kExitOk;
}

struct EvalFlags {
  std::string metric;
  std::string disp, disp_gt, occ, occ_gt;
  std::string left, right, disp_left, disp_right, occ_left, occ_right;
};

void require_flag(const std::string& value, const char* name, const std::string& metric) {
  if (value.empty()) throw ConfigError("metric '" + metric + "' needs " + name);
}

int cmd_eval(const EvalFlags& f, std::ostream& out) {
  double value = 0.0;
  if (f.metric == "epe") {
    require_flag(f.disp, "--disp", f.metric);
    require_flag(f.disp_gt, "--disp-gt", f.metric);
    const DisparityMap d = load_float_map(f.disp);
    const DisparityMap gt = load_float_map(f.disp_gt);
    const OcclusionMask m = f.occ_gt.empty() ? OcclusionMask(gt.height(), gt.width()) : load_mask(f.occ_gt);
    value = epe_nonoccluded(d, gt, m);
  } else if (f.metric == "fscore") {
    require_flag(f.occ, "--occ", f.metric);
    require_flag(f.occ_gt, "--occ-gt", f.metric);
    value = occlusion_fscore(load_mask(f.occ), load_mask(f.occ_gt));
  } else {
    for (const auto& [v, n] : {std::pair{&f.left, "--left"}, {&f.right, "--right"},
                               {&f.disp_left, "--disp-left"}, {&f.disp_right, "--disp-right"},
                               {&f.occ_left, "--occ-left"}, {&f.occ_right, "--occ-right"}})
      require_flag(*v, n, f.metric);
    const Tensor3 l = load_image(f.left), r = load_image(f.right);
    value = consistency_metric(l, r, load_float_map(f.disp_left), load_float_map(f.disp_right),
                               load_mask(f.occ_left), load_mask(f.occ_right));
  }
  out << format_decimal(value) << '\n';
  return kExitOk;
}

int cmd_synth(const std::string& spec, const std::string& out_dir) {
  const StereoPair p = render_stereo(load_scene(spec));
  const fs::path dir(out_dir);
  fs::create_directories(dir);
  save_image(p.left, dir / "left.png");
  save_image(p.right, dir / "right.png");
  save_float_map(p.d_left, dir / "disp_left.pfm");
  save_float_map(p.d_right, dir / "disp_right.pfm");
  save_float_map(p.m_left, dir / "occ_left.pfm");
  save_float_map(p.m_right, dir / "occ_right.pfm");
  return kExitOk;
}

}  // namespace

std::string format_decimal(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  std::string s(buf, res.ptr);
  if (s.find_first_of(".eEn") == std::string::npos) s += ".0";
  return s;
}

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Disparity-consistent stereoscopic style transfer", "stereostyle"};
  app.require_subcommand(1);

  // stylize-stereo
  SolveFlags stereo;
  std::string left, right, disp_left, disp_right, occ_left, occ_right, out_left, out_right;
  double tau = kDefaultConsistencyTau;
  auto* ss = app.add_subcommand("stylize-stereo", "Jointly stylize a stereo pair");
  ss->add_option("--left", left, "Left view (PNG)")->required();
  ss->add_option("--right", right, "Right view (PNG)")->required();
  ss->add_option("--disp-left", disp_left, "Left disparity (PFM)")->required();
  ss->add_option("--disp-right", disp_right, "Right disparity (PFM)")->required();
  ss->add_option("--occ-left", occ_left, "Left occlusion mask (PFM); computed when omitted");
  ss->add_option("--occ-right", occ_right, "Right occlusion mask (PFM); computed when omitted");
  ss->add_option("--tau", tau, "Consistency-check threshold in pixels")->capture_default_str();
  ss->add_option("--out-left", out_left, "Stylized left view (PNG)")->required();
  ss->add_option("--out-right", out_right, "Stylized right view (PNG)")->required();
  add_solve_flags(ss, stereo, true);

  // stylize (single view)
  SolveFlags mono;
  std::string input, output, view = "left";
  auto* sm = app.add_subcommand("stylize", "Stylize a single image");
  sm->add_option("--input", input, "Content image (PNG)")->required();
  sm->add_option("--out", output, "Stylized image (PNG)")->required();
  sm->add_option("--view", view, "Noise stream to use: left or right")
      ->check(CLI::IsMember({"left", "right"}))
      ->capture_default_str();
  add_solve_flags(sm, mono, false);

  // warp
  std::string mode, w_input, w_disp, w_occ, w_out, w_hole;
  auto* wc = app.add_subcommand("warp", "Backward or forward warp an image along a disparity");
  wc->add_option("--mode", mode, "forward or backward")
      ->check(CLI::IsMember({"forward", "backward"}))
      ->required();
  wc->add_option("--input", w_input, "Image (PNG)")->required();
  wc->add_option("--disp", w_disp, "Disparity (PFM)")->required();
  wc->add_option("--occ", w_occ, "Occlusion mask excluded from splatting (PFM, forward only)");
  wc->add_option("--out", w_out, "Warped image (PNG)")->required();
  wc->add_option("--hole-out", w_hole, "Hole mask (PFM, forward only); default <out>.holes.pfm");

  // eval
  EvalFlags ev;
  auto* ec = app.add_subcommand("eval", "Print an evaluation metric");
  ec->add_option("--metric", ev.metric, "epe, fscore or consistency")
      ->check(CLI::IsMember({"epe", "fscore", "consistency"}))
      ->required();
  ec->add_option("--disp", ev.disp, "Estimated disparity (epe)");
  ec->add_option("--disp-gt", ev.disp_gt, "Ground-truth disparity (epe)");
  ec->add_option("--occ", ev.occ, "Predicted occlusion mask (fscore)");
  ec->add_option("--occ-gt", ev.occ_gt, "Ground-truth occlusion mask (epe, fscore)");
  ec->add_option("--left", ev.left, "Left image (consistency)");
  ec->add_option("--right", ev.right, "Right image (consistency)");
  ec->add_option("--disp-left", ev.disp_left, "Left disparity (consistency)");
  ec->add_option("--disp-right", ev.disp_right, "Right disparity (consistency)");
  ec->add_option("--occ-left", ev.occ_left, "Left occlusion mask (consistency)");
  ec->add_option("--occ-right", ev.occ_right, "Right occlusion mask (consistency)");

  // synth
  std::string spec, out_dir;
  auto* sy = app.add_subcommand("synth", "Render a synthetic stereo scene with ground truth");
  sy->add_option("--spec", spec, "Scene description file")->required();
  sy->add_option("--out-dir", out_dir, "Output directory")->required();

  // init-extractor
  std::string ex_out;
  std::uint64_t ex_seed = 20180615;
  auto* ie = app.add_subcommand("init-extractor", "Write the built-in random feature extractor");
  ie->add_option("--out", ex_out, "Weight file")->required();
  ie->add_option("--seed", ex_seed, "Weight seed")->capture_default_str();

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*ss)
      return cmd_stylize_stereo(left, right, disp_left, disp_right, occ_left, occ_right, tau,
                                out_left, out_right, stereo, out);
    if (*sm) return cmd_stylize(input, view, output, mono, out);
    if (*wc) return cmd_warp(mode, w_input, w_disp, w_occ, w_out, w_hole);
    if (*ec) return cmd_eval(ev, out);
    if (*sy) return cmd_synth(spec, out_dir);
    if (*ie) {
      save_extractor(make_default_extractor(ex_seed), ex_out);
      return kExitOk;
    }
  } catch (const DivergenceError& e) {
    err << "error: " << e.what() << '\n';
    return kExitDivergence;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const fs::filesystem_error& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  }
  return kExitUsage;
}

}  // namespace stereostyle
