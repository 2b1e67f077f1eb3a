// ecnd: train, denoise, evaluate, benchmark and inspect ECNDNet-style
// denoising models.
//
// Exit codes: 0 success, 1 usage error, 2 data/I-O error, 3 numeric
// divergence. Progress goes to stderr; machine-readable results to stdout.

#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "ecnd/evaluation.hpp"
#include "ecnd/network.hpp"
#include "ecnd/parallel.hpp"
#include "ecnd/training.hpp"

namespace {

using namespace ecnd;

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitDiverged = 3;

Variant parse_variant(const std::string &name) {
  auto v = variant_from_name(name);
  if (!v) {
    throw ConfigError("unknown variant '" + name +
                      "' (expected crnet|crrnet|crrbnet|ecndnet)");
  }
  return *v;
}

std::vector<float> parse_float_list(const std::string &s) {
  std::vector<float> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    out.push_back(std::stof(item));
  }
  if (out.empty()) throw ConfigError("empty list: '" + s + "'");
  return out;
}

int cmd_train(const std::string &data_dir, float sigma, int epochs, int batch,
              int patch, int stride, const std::string &variant_name_,
              int depth, int width, std::uint64_t seed,
              const std::string &out_path, const std::string &resume,
              bool augment_flag) {
  if (epochs < 1) {
    std::cerr << "error: --epochs must be >= 1\n";
    return kExitUsage;
  }
  TrainConfig config;
  config.sigma = sigma;
  config.epochs = epochs;
  config.batch_size = batch;
  config.patch_size = patch;
  config.stride = stride;
  config.seed = seed;
  config.augment = augment_flag;
  config.validate();

  Model model;
  AdamState state;
  int start_epoch = 0;
  if (!resume.empty()) {
    Checkpoint ckpt = load_checkpoint(resume);
    model = std::move(ckpt.model);
    if (!ckpt.has_adam) {
      throw ConfigError("cannot resume: checkpoint has no optimizer state");
    }
    state = std::move(ckpt.adam);
    config = ckpt.config;
    config.epochs = epochs;
    // one Adam step per batch; recover the epoch count from the step counter
    std::cerr << "resuming from " << resume << " at optimizer step "
              << state.step << "\n";
  } else {
    model = build_variant(parse_variant(variant_name_), depth, width, seed);
    model.sigma = sigma;
    state = AdamState::for_model(model);
  }

  std::cerr << "loading training images from " << data_dir << "\n";
  std::vector<GrayImage> images;
  for (const std::string &path : list_pngs(data_dir)) {
    images.push_back(load_image(path));
  }
  if (images.empty()) throw IoError("no PNG files found in: " + data_dir);

  NoiseConfig noise;
  noise.sigma = config.sigma;
  noise.seed = config.seed;
  PatchSet patches = build_patch_set(images, config.patch_size, config.stride,
                                     noise, config.augment);
  std::cerr << "extracted " << patches.count() << " patches from "
            << images.size() << " images\n";

  const std::int64_t batches_per_epoch =
      (static_cast<std::int64_t>(patches.count()) + config.batch_size - 1) /
      config.batch_size;
  if (!resume.empty()) {
    start_epoch = static_cast<int>(state.step / batches_per_epoch);
  }

  for (int epoch = start_epoch; epoch < config.epochs; ++epoch) {
    EpochStats stats = train_epoch(model, patches, state, config, epoch);
    std::fprintf(stderr, "epoch %d/%d  lr %.3e  mean loss %.6f\n", epoch + 1,
                 config.epochs, lr_at_epoch(config, epoch), stats.mean_loss);
    save_checkpoint(model, &state, config, out_path);
  }
  std::cerr << "wrote " << out_path << "\n";
  return kExitOk;
}

int cmd_denoise(const std::string &model_path, const std::string &in_path,
                const std::string &out_path) {
  Checkpoint ckpt = load_checkpoint(model_path);
  GrayImage noisy = load_image(in_path);
  Tensor4 clean = denoise(ckpt.model, noisy.to_tensor());
  save_image(GrayImage::from_tensor(clean), out_path);
  std::cerr << "wrote " << out_path << "\n";
  return kExitOk;
}

int cmd_eval(const std::string &model_path, const std::string &data_dir,
             const std::string &sigma_list, std::uint64_t seed,
             const std::string &csv_path) {
  Checkpoint ckpt = load_checkpoint(model_path);
  auto reports =
      evaluate_set(ckpt.model, data_dir, parse_float_list(sigma_list), seed);
  std::cout << format_report_table(reports);
  if (!csv_path.empty()) {
    std::ofstream csv(csv_path, std::ios::trunc);
    if (!csv) throw IoError("cannot write CSV: " + csv_path);
    csv << format_report_csv(reports);
    std::cerr << "wrote " << csv_path << "\n";
  }
  return kExitOk;
}

int cmd_bench(const std::string &model_path, const std::string &size_list,
              int reps) {
  Checkpoint ckpt = load_checkpoint(model_path);
  std::vector<std::pair<int, int>> sizes;
  for (float s : parse_float_list(size_list)) {
    sizes.emplace_back(static_cast<int>(s), static_cast<int>(s));
  }
  auto results = benchmark_runtime(ckpt.model, sizes, reps);
  std::cerr << "hardware: " << hardware_description() << "\n";
  std::cout << "size      median_s\n";
  for (const BenchResult &r : results) {
    std::printf("%dx%-6d %.4f\n", r.h, r.w, r.median_seconds);
  }
  return kExitOk;
}

int cmd_inspect(const std::string &variant_name_, int depth, int width) {
  ArchitectureSpec spec = make_spec(parse_variant(variant_name_), depth, width);
  std::cout << "variant: " << variant_name(spec.variant) << "\n";
  std::cout << "depth: " << spec.depth << "  width: " << spec.width << "\n";
  std::cout << "layers:\n";
  const auto rf = receptive_fields(spec);
  for (int pos = 1; pos <= spec.depth; ++pos) {
    const LayerDesc &d = spec.layers[pos - 1];
    std::printf("  %2d  %-20s dilation %d  rf %d\n", pos,
                layer_kind_name(d.kind).c_str(), d.dilation, rf[pos - 1]);
  }
  std::cout << "receptive fields:";
  for (int v : rf) std::cout << " " << v;
  std::cout << "\n";
  std::cout << "parameters: " << param_count(spec) << "\n";
  return kExitOk;
}

} // namespace

int main(int argc, char **argv) {
  CLI::App app{"ECNDNet-style grayscale image denoiser"};
  app.require_subcommand(1);

  int threads = default_num_threads();
  app.add_option("--threads", threads,
                 "worker threads (1 guarantees bit-determinism)")
      ->capture_default_str();

  // train
  auto *train = app.add_subcommand("train", "train a model");
  std::string tr_data, tr_out, tr_resume, tr_variant = "ecndnet";
  float tr_sigma = 25.0f;
  int tr_epochs = 180, tr_batch = 128, tr_patch = 40, tr_stride = 10;
  int tr_depth = 17, tr_width = 64;
  std::uint64_t tr_seed = 0;
  bool tr_augment = false;
  train->add_option("--data", tr_data, "directory of clean training PNGs")
      ->required();
  train->add_option("--sigma", tr_sigma, "noise std dev, 0-255 scale")
      ->capture_default_str();
  train->add_option("--epochs", tr_epochs)->capture_default_str();
  train->add_option("--batch", tr_batch)->capture_default_str();
  train->add_option("--patch", tr_patch)->capture_default_str();
  train->add_option("--stride", tr_stride)->capture_default_str();
  train->add_option("--variant", tr_variant, "crnet|crrnet|crrbnet|ecndnet")
      ->capture_default_str();
  train->add_option("--depth", tr_depth)->capture_default_str();
  train->add_option("--width", tr_width)->capture_default_str();
  train->add_option("--seed", tr_seed)->capture_default_str();
  train->add_option("--out", tr_out, "checkpoint output path")->required();
  train->add_option("--resume", tr_resume, "checkpoint to resume from");
  train->add_flag("--augment", tr_augment, "dihedral patch augmentation");

  // denoise
  auto *dn = app.add_subcommand("denoise", "denoise one PNG");
  std::string dn_model, dn_in, dn_out;
  dn->add_option("--model", dn_model)->required();
  dn->add_option("--in", dn_in)->required();
  dn->add_option("--out", dn_out)->required();

  // eval
  auto *ev = app.add_subcommand("eval", "evaluate PSNR over a directory");
  std::string ev_model, ev_data, ev_sigmas = "15,25,50", ev_csv;
  std::uint64_t ev_seed = 0;
  ev->add_option("--model", ev_model)->required();
  ev->add_option("--data", ev_data)->required();
  ev->add_option("--sigma", ev_sigmas, "comma-separated noise levels")
      ->capture_default_str();
  ev->add_option("--seed", ev_seed)->capture_default_str();
  ev->add_option("--csv", ev_csv, "also write per-image CSV");

  // bench
  auto *bench = app.add_subcommand("bench", "runtime benchmark");
  std::string bn_model, bn_sizes = "256,512,1024";
  int bn_reps = 10;
  bench->add_option("--model", bn_model)->required();
  bench->add_option("--sizes", bn_sizes, "comma-separated square sizes")
      ->capture_default_str();
  bench->add_option("--reps", bn_reps)->capture_default_str();

  // inspect
  auto *ins = app.add_subcommand("inspect", "print a layer schedule");
  std::string in_variant = "ecndnet";
  int in_depth = 17, in_width = 64;
  ins->add_option("--variant", in_variant)->capture_default_str();
  ins->add_option("--depth", in_depth)->capture_default_str();
  ins->add_option("--width", in_width)->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp &e) {
    app.exit(e);
    return kExitOk;
  } catch (const CLI::ParseError &e) {
    app.exit(e);
    return kExitUsage;
  }

  set_num_threads(threads);

  try {
    if (*train) {
      return cmd_train(tr_data, tr_sigma, tr_epochs, tr_batch, tr_patch,
                       tr_stride, tr_variant, tr_depth, tr_width, tr_seed,
                       tr_out, tr_resume, tr_augment);
    }
    if (*dn) return cmd_denoise(dn_model, dn_in, dn_out);
    if (*ev) return cmd_eval(ev_model, ev_data, ev_sigmas, ev_seed, ev_csv);
    if (*bench) return cmd_bench(bn_model, bn_sizes, bn_reps);
    if (*ins) return cmd_inspect(in_variant, in_depth, in_width);
  } catch (const DivergedError &e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitDiverged;
  } catch (const ConfigError &e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const IoError &e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitData;
  } catch (const FormatError &e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitData;
  } catch (const std::exception &e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitData;
  }
  return kExitUsage;
}
