#include "cli.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <iomanip>
#include <iostream>
#include <fstream>
#include <random>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "psnis/errors.hpp"
#include "psnis/image_io.hpp"
#include "psnis/image_pipeline.hpp"
#include "psnis/model_io.hpp"
#include "psnis/poisson.hpp"
#include "psnis/prior_learning.hpp"
#include "psnis/rng.hpp"

namespace psnis::cli {

namespace {

std::vector<fs::path> list_files(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw DataError(dir.string() + " is not a directory");
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_regular_file()) files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  return files;
}

std::string num(double v) {
  std::ostringstream os;
  os << std::setprecision(17) << v;
  return os.str();
}

std::string fixed(double v, int decimals) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(decimals) << v;
  return os.str();
}

void check_config(const DenoiseConfig& cfg) {
  try {
    cfg.validate();
  } catch (const InvalidArgument& e) {
    throw UsageError(e.what());
  }
}

TrainingSet collect_training_patches(const std::vector<ImageGrid>& images,
                                     int patch_size, int stride) {
  std::vector<Patch> patches;
  int used = 0;
  for (const auto& img : images) {
    if (img.width() < patch_size || img.height() < patch_size) continue;
    auto p = extract_patches(img, patch_size, stride);
    patches.insert(patches.end(), std::make_move_iterator(p.begin()),
                   std::make_move_iterator(p.end()));
    ++used;
  }
  if (patches.empty()) throw DataError("no usable training patches");
  return TrainingSet::from_patches(patches, patch_size, used);
}

/// Keeps every image that decodes and is not all zero, scaled to `peak`.
std::vector<ImageGrid> load_class_images(const std::vector<fs::path>& files,
                                         double peak, int patch_size,
                                         std::ostream& log) {
  std::vector<ImageGrid> out;
  for (const auto& f : files) {
    try {
      ImageGrid img = read_image(f);
      if (img.width() < patch_size || img.height() < patch_size) {
        log << "warning: skipping " << f.string() << " (smaller than patch)\n";
        continue;
      }
      out.push_back(scale_to_peak(img, peak));
    } catch (const DataError& e) {
      log << "warning: skipping " << f.string() << ": " << e.what() << "\n";
    } catch (const InvalidArgument& e) {
      log << "warning: skipping " << f.string() << ": " << e.what() << "\n";
    }
  }
  return out;
}

std::vector<double> parse_peaks(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      out.push_back(std::stod(item));
    } catch (const std::exception&) {
      throw UsageError("bad peak list '" + text + "'");
    }
  }
  if (out.empty()) throw UsageError("empty peak list");
  return out;
}

nlohmann::json psnr_json(const std::optional<double>& v) {
  if (!v) return nullptr;
  if (std::isinf(*v)) return "inf";
  return *v;
}

std::string render_report(const RunReport& r, bool include_env) {
  std::vector<std::pair<std::string, std::string>> kv = {
      {"command", "denoise"},
      {"noisy", r.noisy_path},
      {"model", r.model_path},
      {"output", r.output_path},
      {"reference", r.reference_path},
      {"width", std::to_string(r.width)},
      {"height", std::to_string(r.height)},
      {"k", std::to_string(r.cfg.k_count)},
      {"n1", std::to_string(r.cfg.n1)},
      {"n2", std::to_string(r.cfg.n2)},
      {"iters", std::to_string(r.cfg.outer_iters)},
      {"patch_size", std::to_string(r.cfg.patch_size)},
      {"stride", std::to_string(r.cfg.stride)},
      {"peak", num(r.cfg.peak)},
      {"seed", std::to_string(r.cfg.seed)},
      {"epsilon_floor", num(r.cfg.epsilon_floor)},
      {"patches", std::to_string(r.patch_count)},
      {"fallback_patches", std::to_string(r.fallback_patches)},
      {"mean_ess", fixed(r.mean_ess, 6)},
      {"psnr_noisy", r.psnr_noisy ? format_psnr(*r.psnr_noisy, 4) : "n/a"},
      {"psnr_denoised", r.psnr_denoised ? format_psnr(*r.psnr_denoised, 4) : "n/a"},
  };
  nlohmann::ordered_json j;
  j["command"] = "denoise";
  j["noisy"] = r.noisy_path;
  j["model"] = r.model_path;
  j["output"] = r.output_path;
  j["reference"] = r.reference_path;
  j["width"] = r.width;
  j["height"] = r.height;
  j["config"] = {{"k", r.cfg.k_count},        {"n1", r.cfg.n1},
                 {"n2", r.cfg.n2},            {"iters", r.cfg.outer_iters},
                 {"patch_size", r.cfg.patch_size}, {"stride", r.cfg.stride},
                 {"peak", r.cfg.peak},        {"seed", r.cfg.seed},
                 {"epsilon_floor", r.cfg.epsilon_floor}};
  j["patches"] = r.patch_count;
  j["fallback_patches"] = r.fallback_patches;
  j["mean_ess"] = r.mean_ess;
  j["psnr_noisy"] = psnr_json(r.psnr_noisy);
  j["psnr_denoised"] = psnr_json(r.psnr_denoised);
  if (include_env) {
    kv.emplace_back("workers", std::to_string(r.cfg.workers));
    kv.emplace_back("wall_seconds", fixed(r.wall_seconds, 3));
    j["workers"] = r.cfg.workers;
    j["wall_seconds"] = r.wall_seconds;
  }

  std::ostringstream os;
  for (const auto& [k, v] : kv) os << k << ": " << v << "\n";
  os << "--- json\n" << j.dump(2) << "\n--- end\n";
  return os.str();
}

}  // namespace

std::string format_psnr(double value, int decimals) {
  if (std::isinf(value) && value > 0) return "inf";
  return fixed(value, decimals);
}

std::string format_report(const RunReport& report) {
  return render_report(report, true);
}

std::string canonical_report(const RunReport& report) {
  return render_report(report, false);
}

PriorModel cmd_train(const TrainOptions& opts, std::ostream& log,
                     std::ostream& warn) {
  if (opts.patch_size < 1 || opts.k < 1 || !(opts.peak > 0.0) ||
      opts.cem_iters < 1 || opts.train_stride < 1 ||
      opts.train_stride > opts.patch_size || !(opts.ridge >= 0.0)) {
    throw UsageError("invalid training parameters");
  }
  const auto images =
      load_class_images(list_files(opts.data_dir), opts.peak, opts.patch_size, warn);
  const TrainingSet train =
      collect_training_patches(images, opts.patch_size, opts.train_stride);
  if (train.size() < opts.k) {
    throw DataError("only " + std::to_string(train.size()) +
                    " training patches for k = " + std::to_string(opts.k));
  }
  LearnOptions lo;
  lo.k = opts.k;
  lo.cem_iters = opts.cem_iters;
  lo.seed = opts.seed;
  lo.epsilon_ridge = opts.ridge;
  lo.workers = opts.workers;
  CemTrace trace;
  PriorModel model = learn_prior(train, lo, &trace);
  if (!opts.out.empty()) save_model(opts.out, model);

  log << "trained on " << train.size() << " patches from " << train.source_count
      << " images; " << trace.objective.size() << " CEM rounds"
      << (trace.fixed_point ? " (fixed point)" : "") << "\n";
  log << "cluster  members\n";
  for (int k = 0; k < model.k_count(); ++k) {
    log << std::setw(7) << k << "  " << model.cluster(k).size() << "\n";
  }
  return model;
}

void cmd_synth(const fs::path& clean, double peak, std::uint64_t seed,
               const fs::path& out) {
  if (!(peak > 0.0)) throw UsageError("peak must be > 0");
  const ImageGrid img = read_image(clean);
  if (!(img.max_value() > 0.0)) throw DataError(clean.string() + " is all zero");
  const ImageGrid noisy = sample_poisson_image(scale_to_peak(img, peak), seed);
  write_counts(out, noisy);
}

RunReport cmd_denoise(const DenoiseOptions& opts, std::ostream& log) {
  const auto start = std::chrono::steady_clock::now();
  PriorModel model = load_model(opts.model);
  DenoiseConfig cfg = opts.cfg;
  if (opts.patch_size_given && cfg.patch_size != model.patch_size()) {
    throw ModelFormatError("model patch size " + std::to_string(model.patch_size()) +
                           " does not match --patch-size " +
                           std::to_string(cfg.patch_size));
  }
  if (opts.k_given && cfg.k_count != model.k_count()) {
    throw ModelFormatError("model has " + std::to_string(model.k_count()) +
                           " clusters but --k is " + std::to_string(cfg.k_count));
  }
  cfg.patch_size = model.patch_size();
  cfg.k_count = model.k_count();
  if (!opts.patch_size_given) cfg.stride = std::min(cfg.stride, cfg.patch_size);
  check_config(cfg);

  const ImageGrid noisy = read_image(opts.noisy);
  for (double v : noisy.pixels()) {
    if (v != std::floor(v)) throw DataError(opts.noisy.string() + " does not hold integer counts");
  }
  if (noisy.width() < cfg.patch_size || noisy.height() < cfg.patch_size) {
    throw DataError("noisy image is smaller than the patch size");
  }

  const DenoiseResult result = denoise_image_detailed(noisy, model, cfg);
  const ImageGrid display = quantize_8bit(to_display_range(result.image, cfg.peak));
  if (!opts.out.empty()) write_image_8bit(opts.out, display);

  RunReport report;
  report.noisy_path = opts.noisy.string();
  report.model_path = opts.model.string();
  report.output_path = opts.out.string();
  report.cfg = cfg;
  report.width = noisy.width();
  report.height = noisy.height();
  report.patch_count = result.patches.size();
  report.fallback_patches = result.fallback_count;
  report.mean_ess = result.mean_ess;
  if (opts.reference) {
    report.reference_path = opts.reference->string();
    const ImageGrid ref = scale_to_peak(read_image(*opts.reference), 255.0);
    report.psnr_noisy = psnr(to_display_range(noisy, cfg.peak), ref, 255.0);
    report.psnr_denoised = psnr(display, ref, 255.0);
  }
  report.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  log << "denoised " << report.patch_count << " patches (" << report.fallback_patches
      << " fallback) in " << fixed(report.wall_seconds, 2) << " s\n";
  return report;
}

double cmd_evaluate(const fs::path& estimate, const fs::path& reference,
                    double peak, bool estimate_in_counts) {
  if (!(peak > 0.0)) throw UsageError("peak must be > 0");
  ImageGrid est = read_image(estimate);
  if (estimate_in_counts) est = to_display_range(est, peak);
  const ImageGrid ref = read_image(reference);
  if (!(ref.max_value() > 0.0)) throw DataError(reference.string() + " is all zero");
  if (est.width() != ref.width() || est.height() != ref.height()) {
    throw DataError("estimate and reference dimensions differ");
  }
  return psnr(est, scale_to_peak(ref, 255.0), 255.0);
}

std::vector<BenchmarkRow> cmd_benchmark(const BenchmarkOptions& opts,
                                        std::ostream& log) {
  check_config(opts.cfg);
  auto files = list_files(opts.data_dir);
  std::vector<ImageGrid> images;
  for (const auto& f : files) {
    try {
      ImageGrid img = read_image(f);
      if (img.max_value() > 0.0 && img.width() >= opts.cfg.patch_size &&
          img.height() >= opts.cfg.patch_size) {
        images.push_back(std::move(img));
      }
    } catch (const DataError& e) {
      log << "warning: skipping " << f.string() << ": " << e.what() << "\n";
    }
  }
  if (opts.test_count < 1 ||
      static_cast<std::size_t>(opts.test_count) >= images.size()) {
    throw DataError("need more than --test-count usable images, found " +
                    std::to_string(images.size()));
  }
  std::mt19937_64 split_gen(opts.seed);
  std::shuffle(images.begin(), images.end(), split_gen);
  const std::vector<ImageGrid> test(images.begin(), images.begin() + opts.test_count);
  const std::vector<ImageGrid> train_imgs(images.begin() + opts.test_count, images.end());

  std::vector<BenchmarkRow> rows;
  for (std::size_t pi = 0; pi < opts.peaks.size(); ++pi) {
    const double peak = opts.peaks[pi];
    DenoiseConfig cfg = opts.cfg;
    cfg.peak = peak;
    check_config(cfg);

    std::vector<ImageGrid> scaled_train;
    for (const auto& img : train_imgs) scaled_train.push_back(scale_to_peak(img, peak));
    TrainingSet train = collect_training_patches(scaled_train, cfg.patch_size, 1);
    if (opts.max_train_patches && train.size() > static_cast<Eigen::Index>(*opts.max_train_patches)) {
      std::vector<Eigen::Index> idx(static_cast<std::size_t>(train.size()));
      for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = static_cast<Eigen::Index>(i);
      std::mt19937_64 sub_gen(derive_seed({opts.seed, 0x7375627361ULL}));
      std::shuffle(idx.begin(), idx.end(), sub_gen);
      idx.resize(*opts.max_train_patches);
      std::sort(idx.begin(), idx.end());
      Matrix kept(train.patches.rows(), static_cast<Eigen::Index>(idx.size()));
      for (std::size_t i = 0; i < idx.size(); ++i) {
        kept.col(static_cast<Eigen::Index>(i)) = train.patches.col(idx[i]);
      }
      train.patches = std::move(kept);
    }
    LearnOptions lo;
    lo.k = cfg.k_count;
    lo.cem_iters = cfg.cem_iters;
    lo.seed = opts.seed;
    lo.epsilon_ridge = cfg.epsilon_ridge_scale;
    lo.workers = cfg.workers;
    const PriorModel model = learn_prior(train, lo);

    BenchmarkRow row;
    row.peak = peak;
    for (std::size_t t = 0; t < test.size(); ++t) {
      const ImageGrid clean = scale_to_peak(test[t], peak);
      const ImageGrid noisy = sample_poisson_image(
          clean, derive_seed({opts.seed, static_cast<std::uint64_t>(pi), t}));
      const ImageGrid ref = to_display_range(clean, peak);
      const ImageGrid est =
          quantize_8bit(to_display_range(denoise_image(noisy, model, cfg), peak));
      row.mean_psnr_noisy += psnr(to_display_range(noisy, peak), ref, 255.0);
      row.mean_psnr_denoised += psnr(est, ref, 255.0);
    }
    row.mean_psnr_noisy /= static_cast<double>(test.size());
    row.mean_psnr_denoised /= static_cast<double>(test.size());
    log << "peak " << peak << ": noisy " << fixed(row.mean_psnr_noisy, 2)
        << " dB, denoised " << fixed(row.mean_psnr_denoised, 2) << " dB\n";
    rows.push_back(row);
  }
  return rows;
}

namespace {

void add_denoise_flags(CLI::App* cmd, DenoiseConfig& cfg) {
  cmd->add_option("--n1", cfg.n1, "Samples for the patch estimate")->capture_default_str();
  cmd->add_option("--n2", cfg.n2, "Samples per cluster for cluster selection")->capture_default_str();
  cmd->add_option("--iters", cfg.outer_iters, "Alternating rounds")->capture_default_str();
  cmd->add_option("--stride", cfg.stride, "Patch extraction stride")->capture_default_str();
  cmd->add_option("--seed", cfg.seed, "Sampling seed")->capture_default_str();
  cmd->add_option("--workers", cfg.workers, "Threads (0 = all cores)")->capture_default_str();
  cmd->add_option("--epsilon-floor", cfg.epsilon_floor,
                  "Intensity floor inside the likelihood")->capture_default_str();
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Class-specific Poisson denoising with importance-sampled patch estimates"};
  app.require_subcommand(1);

  TrainOptions train;
  auto* train_cmd = app.add_subcommand("train", "Learn a clustered patch prior from clean class images");
  train_cmd->add_option("--data-dir", train.data_dir, "Directory of clean class images")->required();
  train_cmd->add_option("--out,--model", train.out, "Model file to write")->required();
  train_cmd->add_option("--patch-size", train.patch_size)->capture_default_str();
  train_cmd->add_option("--k", train.k, "Number of clusters")->capture_default_str();
  train_cmd->add_option("--peak", train.peak, "Peak intensity of the training images")->capture_default_str();
  train_cmd->add_option("--seed", train.seed)->capture_default_str();
  train_cmd->add_option("--cem-iters", train.cem_iters)->capture_default_str();
  train_cmd->add_option("--stride", train.train_stride, "Training extraction stride")->capture_default_str();
  train_cmd->add_option("--ridge", train.ridge, "Covariance ridge scale")->capture_default_str();
  train_cmd->add_option("--workers", train.workers)->capture_default_str();

  fs::path synth_in, synth_out;
  double synth_peak = 10.0;
  std::uint64_t synth_seed = 0;
  auto* synth_cmd = app.add_subcommand("synth", "Scale a clean image to a peak and apply Poisson noise");
  synth_cmd->add_option("input", synth_in, "Clean image")->required();
  synth_cmd->add_option("--peak", synth_peak)->required();
  synth_cmd->add_option("--seed", synth_seed)->capture_default_str();
  synth_cmd->add_option("--out", synth_out, "Count image (.png 16-bit, .pgm, .txt)")->required();

  DenoiseOptions den;
  std::string den_reference, den_report;
  auto* den_cmd = app.add_subcommand("denoise", "Denoise a Poisson count image");
  den_cmd->add_option("input", den.noisy, "Noisy count image")->required();
  den_cmd->add_option("--model", den.model)->required();
  den_cmd->add_option("--peak", den.cfg.peak, "Peak the clean image was scaled to")->required();
  den_cmd->add_option("--out", den.out, "Denoised 8-bit image")->required();
  auto* ps_opt = den_cmd->add_option("--patch-size", den.cfg.patch_size);
  auto* k_opt = den_cmd->add_option("--k", den.cfg.k_count);
  den_cmd->add_option("--reference", den_reference, "Clean image for PSNR reporting");
  den_cmd->add_option("--report", den_report, "Write the run report here instead of stdout");
  add_denoise_flags(den_cmd, den.cfg);

  fs::path eval_est, eval_ref;
  double eval_peak = 10.0;
  bool eval_counts = false;
  auto* eval_cmd = app.add_subcommand("evaluate", "PSNR of an estimate against a clean reference");
  eval_cmd->add_option("estimate", eval_est)->required();
  eval_cmd->add_option("reference", eval_ref)->required();
  eval_cmd->add_option("--peak", eval_peak)->required();
  eval_cmd->add_flag("--counts", eval_counts, "Estimate holds peak-scale counts, not 0-255 data");

  BenchmarkOptions bench;
  std::string bench_peaks = "2,5,10,15";
  std::size_t bench_max_patches = 0;
  auto* bench_cmd = app.add_subcommand("benchmark", "Train/test protocol over a directory of class images");
  bench_cmd->add_option("--data-dir", bench.data_dir)->required();
  bench_cmd->add_option("--peaks", bench_peaks)->capture_default_str();
  bench_cmd->add_option("--test-count", bench.test_count)->capture_default_str();
  bench_cmd->add_option("--k", bench.cfg.k_count)->capture_default_str();
  bench_cmd->add_option("--patch-size", bench.cfg.patch_size)->capture_default_str();
  bench_cmd->add_option("--cem-iters", bench.cfg.cem_iters)->capture_default_str();
  bench_cmd->add_option("--max-train-patches", bench_max_patches, "Subsample the training pool (0 = all)");
  add_denoise_flags(bench_cmd, bench.cfg);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*train_cmd) {
      cmd_train(train, out, err);
    } else if (*synth_cmd) {
      cmd_synth(synth_in, synth_peak, synth_seed, synth_out);
    } else if (*den_cmd) {
      den.patch_size_given = ps_opt->count() > 0;
      den.k_given = k_opt->count() > 0;
      if (!den_reference.empty()) den.reference = den_reference;
      if (!den_report.empty()) den.report = den_report;
      const RunReport report = cmd_denoise(den, err);
      if (den.report) {
        std::ofstream rep(*den.report);
        if (!rep) throw DataError("cannot write report " + den.report->string());
        rep << format_report(report);
      } else {
        out << format_report(report);
      }
    } else if (*eval_cmd) {
      out << format_psnr(cmd_evaluate(eval_est, eval_ref, eval_peak, eval_counts), 2) << "\n";
    } else if (*bench_cmd) {
      bench.seed = bench.cfg.seed;
      bench.peaks = parse_peaks(bench_peaks);
      if (bench_max_patches > 0) bench.max_train_patches = bench_max_patches;
      const auto rows = cmd_benchmark(bench, err);
      out << "peak  psnr_noisy  psnr_denoised\n";
      for (const auto& r : rows) {
        out << num(r.peak) << "  " << fixed(r.mean_psnr_noisy, 2) << "  "
            << fixed(r.mean_psnr_denoised, 2) << "\n";
      }
    }
  } catch (const UsageError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const ModelFormatError& e) {
    err << "error: " << e.what() << "\n";
    return kExitModel;
  } catch (const ModelDegenerate& e) {
    err << "error: " << e.what() << "\n";
    return kExitModel;
  } catch (const DataError& e) {
    err << "error: " << e.what() << "\n";
    return kExitData;
  } catch (const InvalidArgument& e) {
    err << "error: " << e.what() << "\n";
    return kExitData;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitData;
  }
  return kExitOk;
}

}  // namespace psnis::cli
