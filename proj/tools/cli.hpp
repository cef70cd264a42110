#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "psnis/config.hpp"
#include "psnis/patch_model.hpp"

namespace psnis::cli {

namespace fs = std::filesystem;

enum ExitCode : int {
  kExitOk = 0,
  kExitUsage = 1,
  kExitData = 2,
  kExitModel = 3,
};

/// Bad flag values detected after parsing (exit code 1).
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct TrainOptions {
  fs::path data_dir;
  fs::path out;
  int patch_size = 8;
  int k = 20;
  double peak = 10.0;
  std::uint64_t seed = 0;
  int cem_iters = 10;
  int train_stride = 1;
  double ridge = kDefaultRidgeScale;
  int workers = 1;
};

struct DenoiseOptions {
  fs::path noisy;
  fs::path model;
  fs::path out;
  std::optional<fs::path> reference;
  std::optional<fs::path> report;
  DenoiseConfig cfg;
  /// Whether --patch-size / --k were given explicitly; when they were they
  /// must agree with the model, otherwise the model's values are used.
  bool patch_size_given = false;
  bool k_given = false;
};

/// Summary of one denoise run. Everything except `wall_seconds` and
/// `workers` is a pure function of the inputs and the seed.
struct RunReport {
  std::string noisy_path;
  std::string model_path;
  std::string output_path;
  std::string reference_path;
  DenoiseConfig cfg;
  int width = 0;
  int height = 0;
  std::size_t patch_count = 0;
  std::size_t fallback_patches = 0;
  double mean_ess = 0.0;
  std::optional<double> psnr_noisy;
  std::optional<double> psnr_denoised;
  double wall_seconds = 0.0;
};

/// "key: value" lines followed by a JSON block between "--- json" and
/// "--- end" markers.
std::string format_report(const RunReport& report);

/// format_report without the run-environment lines (wall_seconds, workers),
/// for comparing runs.
std::string canonical_report(const RunReport& report);

/// "inf" for +inf, otherwise fixed with `decimals` digits.
std::string format_psnr(double value, int decimals = 2);

/// Progress and the cluster histogram go to `log`, skipped-file warnings to
/// `warn`.
PriorModel cmd_train(const TrainOptions& opts, std::ostream& log,
                     std::ostream& warn);
void cmd_synth(const fs::path& clean, double peak, std::uint64_t seed,
               const fs::path& out);
RunReport cmd_denoise(const DenoiseOptions& opts, std::ostream& log);
/// Estimate is at display scale [0, 255] unless `estimate_in_counts`, in
/// which case it is rescaled by 255 / peak. The reference is rescaled so its
/// maximum is 255.
double cmd_evaluate(const fs::path& estimate, const fs::path& reference,
                    double peak, bool estimate_in_counts);

struct BenchmarkOptions {
  fs::path data_dir;
  std::vector<double> peaks{2.0, 5.0, 10.0, 15.0};
  int test_count = 5;
  std::uint64_t seed = 0;
  std::optional<std::size_t> max_train_patches;
  DenoiseConfig cfg;
};

struct BenchmarkRow {
  double peak = 0.0;
  double mean_psnr_noisy = 0.0;
  double mean_psnr_denoised = 0.0;
};

/// Random train/test split of a directory of clean class images, then for
/// each peak: train on the training split, corrupt and denoise every test
/// image, and average the PSNRs.
std::vector<BenchmarkRow> cmd_benchmark(const BenchmarkOptions& opts,
                                        std::ostream& log);

/// Full command-line entry point; returns the process exit code.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace psnis::cli
