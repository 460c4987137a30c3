// stereodm: dense stereo matching on rectified pairs with census or learned
// convolutional matching costs, semi-global aggregation, disparity
// post-processing, synthetic scene generation and evaluation reports.

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "stereo/census.hpp"
#include "stereo/cnn.hpp"
#include "stereo/disparity.hpp"
#include "stereo/errors.hpp"
#include "stereo/evaluation.hpp"
#include "stereo/image_io.hpp"
#include "stereo/sgm.hpp"
#include "stereo/synth.hpp"

namespace fs = std::filesystem;
using namespace stereo;

namespace {

struct MatchOptions {
  std::string left, right, out;
  std::string cost = "census";
  std::string weights;
  int d_max = 64;
  int radius = 4;
  float p1 = 0.03f;
  float p2 = 0.3f;
  int paths = 8;
  bool no_sgm = false;
  bool subpixel = false;
  float lr_tol = 1.0f;
};

int run_synth(const std::string& config, const std::string& outdir) {
  const SceneSpec spec = load_scene_spec(config);
  const Scene scene = generate(spec);
  fs::create_directories(outdir);
  save_pgm(scene.left, fs::path(outdir) / "left.pgm");
  save_pgm(scene.right, fs::path(outdir) / "right.pgm");
  save_pfm(scene.truth, fs::path(outdir) / "truth.pfm");
  std::cout << "wrote " << outdir << "/{left.pgm,right.pgm,truth.pfm} ("
            << spec.width << "x" << spec.height << ", d_max " << spec.d_max
            << ")\n";
  return 0;
}

int run_match(const MatchOptions& opt) {
  const GrayImage left = load_pgm(opt.left);
  const GrayImage right = load_pgm(opt.right);
  if (left.width() != right.width() || left.height() != right.height()) {
    throw DimensionError("match: left and right images differ in size");
  }

  CostVolume cv;
  if (opt.cost == "census") {
    const CensusGrid gl = census_transform(left, opt.radius);
    const CensusGrid gr = census_transform(right, opt.radius);
    cv = census_cost_volume(gl, gr, opt.d_max);
  } else if (opt.cost == "cnn") {
    if (opt.weights.empty()) {
      throw ConfigError("--cost cnn requires --weights");
    }
    const FeatureNetwork net = load_weights(opt.weights);
    const FeatureGrid fl = forward_features(net, left);
    const FeatureGrid fr = forward_features(net, right);
    cv = cnn_cost_volume(fl, fr, opt.d_max);
  } else {
    throw ConfigError("unknown cost metric '" + opt.cost + "'");
  }

  if (!opt.no_sgm) {
    SgmParams params;
    params.p1 = opt.p1;
    params.p2 = opt.p2;
    params.num_paths = opt.paths;
    params.normalize = true;
    cv = aggregate(cv, params);
  }

  DisparityMap dl = wta(cv);
  const CostVolume cvr = right_cost_volume(cv);
  DisparityMap dr = wta(cvr);
  if (opt.subpixel) {
    dl = subpixel_refine(cv, dl);
    dr = subpixel_refine(cvr, dr);
  }
  dl = lr_check(dl, dr, opt.lr_tol);
  save_pfm(dl, opt.out);

  const double valid_frac =
      static_cast<double>(dl.valid_count()) / static_cast<double>(dl.size());
  std::printf("wrote %s (%.1f%% valid after left-right check)\n",
              opt.out.c_str(), 100.0 * valid_frac);
  return 0;
}

int run_train(const std::string& data_dir, const std::string& out,
              int triples_per_scene, const TrainParams& params) {
  // A scene is a directory holding left.pgm / right.pgm / truth.pfm; the
  // data directory is either one scene or a directory of scenes.
  std::vector<fs::path> scenes;
  if (fs::exists(fs::path(data_dir) / "left.pgm")) {
    scenes.push_back(data_dir);
  } else {
    for (const auto& entry : fs::directory_iterator(data_dir)) {
      if (entry.is_directory() && fs::exists(entry.path() / "left.pgm")) {
        scenes.push_back(entry.path());
      }
    }
    std::sort(scenes.begin(), scenes.end());
  }
  if (scenes.empty()) {
    throw DataError("no scene with left.pgm/right.pgm/truth.pfm under " +
                    data_dir);
  }

  std::vector<PatchTriple> data;
  for (std::size_t i = 0; i < scenes.size(); ++i) {
    const GrayImage left = load_pgm(scenes[i] / "left.pgm");
    const GrayImage right = load_pgm(scenes[i] / "right.pgm");
    const DisparityMap truth = load_pfm(scenes[i] / "truth.pfm");
    auto triples = extract_triples(left, right, truth, triples_per_scene,
                                   params.seed + static_cast<std::uint32_t>(i),
                                   params.augment);
    data.insert(data.end(), triples.begin(), triples.end());
  }
  std::printf("training on %zu triples from %zu scene(s)\n", data.size(),
              scenes.size());

  FeatureNetwork net = make_network(params.seed);
  const TrainStats stats = train(net, data, params);
  for (std::size_t e = 0; e < stats.epoch_mean_loss.size(); ++e) {
    std::printf("epoch %2zu  mean hinge loss %.6f\n", e + 1,
                stats.epoch_mean_loss[e]);
  }
  save_weights(net, out);
  std::printf("wrote %s\n", out.c_str());
  return 0;
}

int run_eval(const std::string& disp_path, const std::string& truth_path,
             const std::string& report_path, const EvalConfig& cfg,
             const std::string& error_map) {
  const DisparityMap d = load_pfm(disp_path);
  const DisparityMap truth = load_pfm(truth_path);
  const EvalReport report = evaluate(d, truth, cfg);

  fs::path csv = report_path;
  csv.replace_extension(".csv");
  write_report(report, report_path, csv);
  if (!error_map.empty()) {
    save_pgm(error_magnitude_image(d, truth, cfg), error_map);
  }

  std::printf("M_ab  %.6f\nM_sys %+.6f\nM_cpl %.6f\n", report.m_ab,
              report.m_sys, report.m_cpl);
  std::printf("compared %llu px, estimate valid/invalid %llu/%llu\n",
              static_cast<unsigned long long>(report.n_compared),
              static_cast<unsigned long long>(report.n_valid),
              static_cast<unsigned long long>(report.n_invalid));
  std::printf("wrote %s, %s\n", report_path.c_str(), csv.string().c_str());
  return 0;
}

int run_fuse(const std::vector<std::string>& inputs, const std::string& out) {
  std::vector<DisparityMap> maps;
  maps.reserve(inputs.size());
  for (const auto& p : inputs) maps.push_back(load_pfm(p));
  const DisparityMap fused = median_fuse(maps);
  save_pfm(fused, out);
  std::printf("wrote %s (median of %zu maps)\n", out.c_str(), maps.size());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "stereodm: dense stereo matching with census and learned "
      "convolutional matching costs"};
  app.require_subcommand(1);

  // synth
  std::string synth_config, synth_out;
  auto* synth = app.add_subcommand(
      "synth", "generate a synthetic rectified pair with ground truth");
  synth->add_option("config", synth_config, "flat key=value scene config")
      ->required()
      ->check(CLI::ExistingFile);
  synth->add_option("outdir", synth_out,
                    "output directory for left.pgm/right.pgm/truth.pfm")
      ->required();

  // match
  MatchOptions m;
  auto* match = app.add_subcommand(
      "match", "compute a disparity map from a rectified pair");
  match->add_option("left", m.left, "left (base) image, binary PGM")
      ->required();
  match->add_option("right", m.right, "right (matched) image, binary PGM")
      ->required();
  match->add_option("out", m.out, "output disparity map, PFM")->required();
  match->add_option("--cost", m.cost, "matching cost: census or cnn")
      ->capture_default_str();
  match->add_option("--weights", m.weights,
                    "feature network weights (required with --cost cnn)");
  match->add_option("--dmax", m.d_max, "largest disparity candidate")
      ->capture_default_str();
  match->add_option("--radius", m.radius, "census window radius")
      ->capture_default_str();
  match->add_option("--p1", m.p1, "SGM penalty for |delta d| == 1")
      ->capture_default_str();
  match->add_option("--p2", m.p2, "SGM penalty for |delta d| > 1")
      ->capture_default_str();
  match->add_option("--paths", m.paths, "SGM path count (4 or 8)")
      ->capture_default_str();
  match->add_flag("--no-sgm", m.no_sgm,
                  "winner-take-all on the raw cost volume");
  match->add_flag("--subpixel", m.subpixel, "parabolic subpixel refinement");
  match->add_option("--lr-tol", m.lr_tol,
                    "left-right consistency tolerance, pixels")
      ->capture_default_str();

  // train
  std::string train_data, train_out;
  int train_triples = 5000;
  TrainParams tp;
  bool no_augment = false;
  auto* train_cmd = app.add_subcommand(
      "train", "train feature-network weights on synthetic scenes");
  train_cmd
      ->add_option("--data", train_data,
                   "scene directory (left.pgm/right.pgm/truth.pfm) or a "
                   "directory of such scenes")
      ->required()
      ->check(CLI::ExistingDirectory);
  train_cmd->add_option("out", train_out, "output weight file")->required();
  train_cmd->add_option("--triples", train_triples, "triples per scene")
      ->capture_default_str();
  train_cmd->add_option("--margin", tp.margin, "hinge margin")
      ->capture_default_str();
  train_cmd->add_option("--lr", tp.learning_rate, "SGD learning rate")
      ->capture_default_str();
  train_cmd->add_option("--epochs", tp.epochs, "training epochs")
      ->capture_default_str();
  train_cmd->add_option("--batch", tp.batch_size, "mini-batch size")
      ->capture_default_str();
  train_cmd->add_option("--seed", tp.seed, "RNG seed")->capture_default_str();
  train_cmd->add_flag("--no-augment", no_augment,
                      "disable radiometric jitter augmentation");

  // eval
  std::string eval_disp, eval_truth, eval_report, eval_error_map;
  EvalConfig ec;
  auto* eval_cmd = app.add_subcommand(
      "eval", "compare a disparity map against ground truth");
  eval_cmd->add_option("disparity", eval_disp, "estimated disparities, PFM")
      ->required();
  eval_cmd->add_option("truth", eval_truth, "ground-truth disparities, PFM")
      ->required();
  eval_cmd
      ->add_option("report", eval_report,
                   "output JSON report (histogram CSV written alongside)")
      ->required();
  eval_cmd->add_option("--sigma", ec.sigma, "error cap, disparity units")
      ->capture_default_str();
  eval_cmd->add_option("--bin", ec.bin_width, "histogram bin width")
      ->capture_default_str();
  eval_cmd->add_option("--error-map", eval_error_map,
                       "optional error-magnitude PGM dump");

  // fuse
  std::vector<std::string> fuse_inputs;
  std::string fuse_out;
  auto* fuse_cmd =
      app.add_subcommand("fuse", "per-pixel median of disparity maps");
  fuse_cmd->add_option("-o,--out", fuse_out, "output PFM")->required();
  fuse_cmd->add_option("maps", fuse_inputs, "input PFM maps")
      ->required()
      ->expected(-1);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*synth) return run_synth(synth_config, synth_out);
    if (*match) return run_match(m);
    if (*train_cmd) {
      tp.augment = !no_augment;
      return run_train(train_data, train_out, train_triples, tp);
    }
    if (*eval_cmd) {
      return run_eval(eval_disp, eval_truth, eval_report, ec, eval_error_map);
    }
    if (*fuse_cmd) return run_fuse(fuse_inputs, fuse_out);
  } catch (const ConfigError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 2;
  } catch (const NumericError& e) {
    std::cerr << "numeric failure: " << e.what() << "\n";
    return 4;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
  return 0;
}
