#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "oto/rng.hpp"
#include "oto/codecs.hpp"
#include "oto/config.hpp"
#include "oto/image.hpp"
#include "oto/kernels.hpp"
#include "oto/metrics.hpp"
#include "oto/model.hpp"
#include "oto/trainer.hpp"
#include "oto/weights.hpp"

namespace fs = std::filesystem;
using namespace oto;

namespace {

struct Degrade {
  std::string kind;
  double param = 0.0;
};

Degrade parse_degrade(const std::string& s) {
  const auto colon = s.find(':');
  if (colon == std::string::npos)
    throw std::runtime_error("degrade spec must look like jpeg:10 or spiht:32, got '" + s + "'");
  Degrade d;
  d.kind = s.substr(0, colon);
  d.param = std::stod(s.substr(colon + 1));
  if (d.kind != "jpeg" && d.kind != "spiht")
    throw std::runtime_error("unknown degrade kind '" + d.kind + "'");
  return d;
}

std::vector<fs::path> list_images(const std::string& dir) {
  std::vector<fs::path> out;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (!e.is_regular_file()) continue;
    const std::string ext = e.path().extension().string();
    if (ext == ".pgm" || ext == ".ppm") out.push_back(e.path());
  }
  std::sort(out.begin(), out.end());
  if (out.empty()) throw std::runtime_error("no .pgm/.ppm images in " + dir);
  return out;
}

// spiht tiling wants multiples of 32; that also covers every network stride
ImagePlane load_cropped(const fs::path& p, int multiple) {
  return crop_to_multiple(load_and_prepare(p.string()), multiple);
}

void print_eval(const std::string& name, const ImagePlane& clean,
                const ImagePlane& test) {
  std::cout << report_csv_string({evaluate_pair(name, clean, test)});
}

int cmd_synth(const std::string& kind, int count, int size, unsigned seed,
              const std::string& out_dir) {
  fs::create_directories(out_dir);
  std::vector<ImagePlane> corpus;
  if (kind == "mixed") {
    for (const char* k : {"gradient", "checker", "texture"}) {
      const int share = count / 3 + (std::string(k) == "texture" ? count % 3 : 0);
      std::vector<ImagePlane> part =
          make_synthetic_corpus(synth_kind_from_string(k), share, size, seed++);
      corpus.insert(corpus.end(), part.begin(), part.end());
    }
  } else {
    corpus = make_synthetic_corpus(synth_kind_from_string(kind), count, size, seed);
  }
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    char name[32];
    std::snprintf(name, sizeof name, "synth_%03zu.pgm", i);
    save_pgm(corpus[i], (fs::path(out_dir) / name).string());
  }
  std::cout << "wrote " << corpus.size() << " images to " << out_dir << "\n";
  return 0;
}

int cmd_compress(const std::string& in, const std::string& out,
                 const std::string& spec, const std::string& dump_bits) {
  const Degrade d = parse_degrade(spec);
  if (d.kind == "jpeg") {
    const ImagePlane img = load_cropped(in, 2);
    const ImagePlane deg = jpeg_roundtrip(img, static_cast<int>(d.param));
    if (!out.empty()) save_pgm(deg, out);
    print_eval(in, img, deg);
    return 0;
  }
  const ImagePlane img = load_cropped(in, 32);
  const SpihtImageResult res = spiht_roundtrip_image(img, d.param);
  if (!out.empty()) save_pgm(res.restored, out);
  std::cout << "tiles " << res.tiles.size() << " total_bits " << res.total_bits
            << " bpp " << res.bits_per_pixel << "\n";
  if (!dump_bits.empty()) {
    for (std::size_t i = 0; i < res.tiles.size(); ++i) {
      char name[32];
      std::snprintf(name, sizeof name, "_tile%04zu.bits", i);
      std::ofstream bf(dump_bits + name, std::ios::binary);
      bf.write(reinterpret_cast<const char*>(res.tiles[i].bytes.data()),
               static_cast<std::streamsize>(res.tiles[i].bytes.size()));
    }
    std::cout << "tile streams written with prefix " << dump_bits << "\n";
  }
  print_eval(in, img, res.restored);
  return 0;
}

int cmd_train(const std::string& config_path, const std::string& data_dir,
              const std::string& val_dir, const std::string& degrade_spec,
              int patch, int stride, bool rotations, bool desk,
              const std::string& weights_out) {
  OtoConfig mcfg;
  TrainConfig tcfg;
  if (!config_path.empty()) load_config_file(config_path, mcfg, tcfg);
  if (desk) tcfg.desk_scale = true;
  if (tcfg.desk_scale) {
    tcfg.apply_desk_scale();
    if (config_path.empty()) mcfg.channels = 16;
  }
  mcfg.validate();
  tcfg.validate();
  const Degrade d = parse_degrade(degrade_spec);

  PatchSpec spec;
  spec.patch_size = patch;
  spec.stride = stride > 0 ? stride : patch;
  if (rotations) spec.rotations = {90, 180, 270};

  std::vector<PatchPair> dataset;
  unsigned pseed = tcfg.seed;
  for (const fs::path& p : list_images(data_dir)) {
    const ImagePlane clean = load_cropped(p, 32);
    const ImagePlane deg = degrade_plane(clean, d.kind, d.param);
    std::vector<PatchPair> part = extract_patches(clean, deg, spec, ++pseed);
    dataset.insert(dataset.end(), part.begin(), part.end());
  }
  std::cout << "dataset: " << dataset.size() << " patch pairs\n";

  std::vector<EvalPair> val;
  if (!val_dir.empty())
    for (const fs::path& p : list_images(val_dir)) {
      EvalPair e;
      e.name = p.filename().string();
      e.clean = load_cropped(p, 32);
      e.degraded = degrade_plane(e.clean, d.kind, d.param);
      val.push_back(std::move(e));
    }

  Model model(mcfg, tcfg.seed);
  std::cout << "model: " << model.parameter_count() << " parameters, kernels "
            << kernels::ops().name << "\n";
  const TrainResult r = train(model, dataset, val, tcfg, &std::cout);
  std::cout << "final loss " << r.final_loss;
  if (r.best_iter >= 0 && !val.empty())
    std::cout << ", best validation " << display_db(r.best_val_psnr) << " dB at iteration "
              << r.best_iter;
  std::cout << "\n";

  save_weights(model, weights_out);
  save_config_file(weights_out + ".config", mcfg, tcfg);
  std::cout << "weights " << weights_out << "\n";

  if (!val.empty()) {
    const EvalSummary s = evaluate(model, val);
    std::cout << "baseline mean psnr " << display_db(s.baseline_mean.psnr)
              << " restored mean psnr " << display_db(s.restored_mean.psnr) << "\n";
  }
  return 0;
}

std::unique_ptr<Model> load_model(const std::string& weights,
                                  std::string config_path) {
  if (config_path.empty()) config_path = weights + ".config";
  OtoConfig mcfg;
  TrainConfig tcfg;
  load_config_file(config_path, mcfg, tcfg);
  auto model = std::make_unique<Model>(mcfg, 1);
  load_weights(*model, weights);
  return model;
}

int cmd_restore(const std::string& in, const std::string& weights,
                const std::string& config_path, const std::string& out,
                const std::string& clean_path) {
  std::unique_ptr<Model> model = load_model(weights, config_path);
  const int mult = 1 << (model->config().scales() - 1);
  const ImagePlane degraded = load_cropped(in, mult);
  const ImagePlane restored = restore_plane(*model, degraded);
  if (!out.empty()) save_pgm(restored, out);
  if (!clean_path.empty()) {
    const ImagePlane clean = crop_to_multiple(load_and_prepare(clean_path), mult);
    std::cout << "baseline:\n";
    print_eval("degraded", clean, degraded);
    std::cout << "restored:\n";
    print_eval("restored", clean, restored);
  }
  return 0;
}

int cmd_eval(const std::string& clean, const std::string& test, int block,
             const std::string& out_csv) {
  const ImagePlane a = load_and_prepare(clean);
  const ImagePlane b = load_and_prepare(test);
  MetricsConfig cfg;
  cfg.block_size = block;
  const std::vector<MetricsReport> rows = {evaluate_pair(test, a, b, cfg)};
  if (!out_csv.empty()) write_report_csv(rows, out_csv);
  std::cout << report_csv_string(rows);
  return 0;
}

int cmd_selftest() {
  // kernel backends agree on a conv-sized workload
  Rng rng(1);
  const int h = 17, w = 23;
  std::vector<float> src((h + 2) * (w + 2) + 8, 0.0f), taps(9);
  for (float& v : src) v = static_cast<float>(rng.uniform(-1.0, 1.0));
  for (float& v : taps) v = static_cast<float>(rng.uniform(-1.0, 1.0));
  std::vector<float> ref(h * w, 0.0f), got(h * w, 0.0f);
  kernels::scalar_ops().conv3x3_accum(h, w, src.data(), w + 2, taps.data(), ref.data());
  kernels::ops().conv3x3_accum(h, w, src.data(), w + 2, taps.data(), got.data());
  if (ref != got) {
    std::cout << "kernel backends disagree (" << kernels::ops().name << ")\n";
    return 1;
  }
  std::cout << "kernels ok (" << kernels::ops().name << ")\n";

  // a fresh model is the identity map
  OtoConfig mcfg;
  mcfg.channels = 8;
  mcfg.units_per_branch = 1;
  mcfg.tail_resunits = 1;
  Model model(mcfg, 7);
  const std::vector<ImagePlane> probe = make_synthetic_corpus(SynthKind::texture, 1, 32, 3);
  if (mean_abs_diff(restore_plane(model, probe[0]), probe[0]) != 0.0) {
    std::cout << "fresh model is not the identity\n";
    return 1;
  }
  std::cout << "identity ok\n";

  // the codec chain reproduces a tile nearly losslessly on a huge budget
  const ImagePlane tight = spiht_roundtrip_image(probe[0], 1.0).restored;
  if (display_db(psnr(probe[0], tight)) < 45.0) {
    std::cout << "codec round trip too lossy\n";
    return 1;
  }
  std::cout << "codec ok\nall self tests passed\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"compression artifact reduction toolkit"};
  app.require_subcommand(1);

  auto* synth = app.add_subcommand("synth", "write a synthetic image corpus");
  std::string s_kind = "mixed", s_out = "corpus";
  int s_count = 12, s_size = 64;
  unsigned s_seed = 1;
  synth->add_option("--kind", s_kind, "gradient | checker | texture | mixed");
  synth->add_option("--count", s_count);
  synth->add_option("--size", s_size);
  synth->add_option("--seed", s_seed);
  synth->add_option("--out-dir", s_out);

  auto* comp = app.add_subcommand("compress", "degrade an image through a codec");
  std::string c_in, c_out, c_spec = "jpeg:10", c_bits;
  comp->add_option("--in", c_in)->required();
  comp->add_option("--out", c_out, "degraded image path");
  comp->add_option("--codec", c_spec, "jpeg:QUALITY or spiht:RATIO");
  comp->add_option("--dump-bits", c_bits, "prefix for per-tile bitstream dumps");

  auto* tr = app.add_subcommand("train", "fit a restoration model");
  std::string t_cfg, t_data, t_val, t_spec = "jpeg:10", t_weights = "model.weights";
  int t_patch = 32, t_stride = 0;
  bool t_rot = false, t_desk = false;
  tr->add_option("--config", t_cfg, "key=value config file");
  tr->add_option("--data-dir", t_data)->required();
  tr->add_option("--val-dir", t_val);
  tr->add_option("--degrade", t_spec);
  tr->add_option("--patch", t_patch);
  tr->add_option("--stride", t_stride, "0 means non-overlapping");
  tr->add_flag("--rotations", t_rot, "augment with quarter turns");
  tr->add_flag("--desk-scale", t_desk, "shrink the schedule for quick runs");
  tr->add_option("--weights-out", t_weights);

  auto* rest = app.add_subcommand("restore", "run a trained model on an image");
  std::string r_in, r_weights, r_cfg, r_out, r_clean;
  rest->add_option("--in", r_in)->required();
  rest->add_option("--weights", r_weights)->required();
  rest->add_option("--config", r_cfg, "defaults to <weights>.config");
  rest->add_option("--out", r_out);
  rest->add_option("--clean", r_clean, "reference for metric reports");

  auto* ev = app.add_subcommand("eval", "compare two images");
  std::string e_clean, e_test, e_out;
  int e_block = 8;
  ev->add_option("--clean", e_clean)->required();
  ev->add_option("--test", e_test)->required();
  ev->add_option("--block-size", e_block);
  ev->add_option("--out", e_out, "also write the report as csv");

  auto* st = app.add_subcommand("selftest", "quick wiring checks");

  CLI11_PARSE(app, argc, argv);

  try {
    if (synth->parsed()) return cmd_synth(s_kind, s_count, s_size, s_seed, s_out);
    if (comp->parsed()) return cmd_compress(c_in, c_out, c_spec, c_bits);
    if (tr->parsed())
      return cmd_train(t_cfg, t_data, t_val, t_spec, t_patch, t_stride, t_rot,
                       t_desk, t_weights);
    if (rest->parsed()) return cmd_restore(r_in, r_weights, r_cfg, r_out, r_clean);
    if (ev->parsed()) return cmd_eval(e_clean, e_test, e_block, e_out);
    if (st->parsed()) return cmd_selftest();
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
