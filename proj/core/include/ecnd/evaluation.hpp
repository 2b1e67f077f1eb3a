#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ecnd/data.hpp"
#include "ecnd/network.hpp"

namespace ecnd {

// 10*log10(peak^2 / MSE) in dB; identical images give +infinity.
double psnr(const GrayImage &a, const GrayImage &b, double peak = 1.0);

struct ImageResult {
  std::string name;
  double psnr_noisy_db = 0.0;
  double psnr_denoised_db = 0.0;
  double seconds = 0.0;
};

struct EvalReport {
  float sigma = 0.0f;
  std::vector<ImageResult> images;
  double avg_noisy_db = 0.0;
  double avg_denoised_db = 0.0;
  double avg_seconds = 0.0;
};

// Noises each PNG in the directory (seeded per image), denoises the full
// image (the schedule is size-preserving, no tiling) and scores the
// clipped output against the clean original. Noisy baselines are scored
// unclipped.
std::vector<EvalReport> evaluate_set(Model &model, const std::string &image_dir,
                                     const std::vector<float> &sigmas,
                                     std::uint64_t seed);

// Aligned plain-text table, one row per sigma.
std::string format_report_table(const std::vector<EvalReport> &reports);

// CSV with columns: sigma, image, psnr_noisy_db, psnr_denoised_db, seconds.
std::string format_report_csv(const std::vector<EvalReport> &reports);

struct BenchResult {
  int h = 0, w = 0;
  double median_seconds = 0.0;
};

// Median wall-clock of denoise over `repetitions` runs per size, after
// one warm-up pass, on random [0,1] inputs.
std::vector<BenchResult> benchmark_runtime(
    Model &model, const std::vector<std::pair<int, int>> &sizes,
    int repetitions);

// One-line description of the executing hardware for benchmark reports.
std::string hardware_description();

} // namespace ecnd
