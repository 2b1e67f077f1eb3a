#include "ecnd/evaluation.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>
#include <thread>

#include "ecnd/rng.hpp"

namespace ecnd {

double psnr(const GrayImage &a, const GrayImage &b, double peak) {
  if (a.h != b.h || a.w != b.w) {
    throw ShapeError("psnr: image shapes differ");
  }
  if (!(peak > 0.0)) throw ConfigError("psnr: peak must be positive");
  double acc = 0.0;
  for (std::size_t i = 0; i < a.pixels.size(); ++i) {
    const double d = static_cast<double>(a.pixels[i]) - b.pixels[i];
    acc += d * d;
  }
  const double mse = acc / static_cast<double>(a.pixels.size());
  if (mse == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(peak * peak / mse);
}

std::vector<EvalReport> evaluate_set(Model &model, const std::string &image_dir,
                                     const std::vector<float> &sigmas,
                                     std::uint64_t seed) {
  const auto paths = list_pngs(image_dir);
  if (paths.empty()) {
    throw IoError("no PNG files found in: " + image_dir);
  }

  std::vector<EvalReport> reports;
  for (float sigma : sigmas) {
    EvalReport report;
    report.sigma = sigma;
    double sum_noisy = 0.0, sum_denoised = 0.0, sum_seconds = 0.0;
    for (std::size_t i = 0; i < paths.size(); ++i) {
      const GrayImage clean = load_image(paths[i]);
      NoiseConfig cfg;
      cfg.sigma = sigma;
      cfg.seed = mix_seed(seed, static_cast<std::uint64_t>(sigma * 1000));
      const Tensor4 noisy_t =
          add_gaussian_noise(clean.to_tensor(), cfg, i);

      const auto t0 = std::chrono::steady_clock::now();
      const Tensor4 denoised_t = denoise(model, noisy_t);
      const auto t1 = std::chrono::steady_clock::now();

      ImageResult res;
      res.name = std::filesystem::path(paths[i]).filename().string();
      res.psnr_noisy_db = psnr(GrayImage::from_tensor(noisy_t), clean);
      res.psnr_denoised_db = psnr(GrayImage::from_tensor(denoised_t), clean);
      res.seconds = std::chrono::duration<double>(t1 - t0).count();
      sum_noisy += res.psnr_noisy_db;
      sum_denoised += res.psnr_denoised_db;
      sum_seconds += res.seconds;
      report.images.push_back(std::move(res));
    }
    const double count = static_cast<double>(report.images.size());
    report.avg_noisy_db = sum_noisy / count;
    report.avg_denoised_db = sum_denoised / count;
    report.avg_seconds = sum_seconds / count;
    reports.push_back(std::move(report));
  }
  return reports;
}

namespace {

std::string format_db(double v) {
  if (std::isinf(v)) return "inf";
  std::ostringstream os;
  os.setf(std::ios::fixed);
  os.precision(2);
  os << v;
  return os.str();
}

} // namespace

std::string format_report_table(const std::vector<EvalReport> &reports) {
  std::ostringstream os;
  os << "sigma   images  noisy(dB)  denoised(dB)  s/image\n";
  for (const EvalReport &r : reports) {
    char line[128];
    std::snprintf(line, sizeof(line), "%-7g %-7zu %-10s %-13s %.3f\n",
                  static_cast<double>(r.sigma), r.images.size(),
                  format_db(r.avg_noisy_db).c_str(),
                  format_db(r.avg_denoised_db).c_str(), r.avg_seconds);
    os << line;
  }
  return os.str();
}

std::string format_report_csv(const std::vector<EvalReport> &reports) {
  std::ostringstream os;
  os << "sigma,image,psnr_noisy_db,psnr_denoised_db,seconds\n";
  for (const EvalReport &r : reports) {
    for (const ImageResult &img : r.images) {
      char seconds[32];
      std::snprintf(seconds, sizeof(seconds), "%.6f", img.seconds);
      os << static_cast<double>(r.sigma) << "," << img.name << ","
         << format_db(img.psnr_noisy_db) << ","
         << format_db(img.psnr_denoised_db) << "," << seconds << "\n";
    }
  }
  return os.str();
}

std::vector<BenchResult> benchmark_runtime(
    Model &model, const std::vector<std::pair<int, int>> &sizes,
    int repetitions) {
  if (repetitions < 3) {
    throw ConfigError("benchmark: repetitions must be >= 3");
  }
  std::vector<BenchResult> results;
  for (const auto &[h, w] : sizes) {
    Tensor4 input(1, 1, h, w);
    GaussianStream gs(mix_seed(0xbe4cULL, static_cast<std::uint64_t>(h)));
    for (float &v : input.data) {
      v = static_cast<float>(gs.uniform01());
    }
    denoise(model, input); // warm-up

    std::vector<double> times;
    times.reserve(repetitions);
    for (int rep = 0; rep < repetitions; ++rep) {
      const auto t0 = std::chrono::steady_clock::now();
      denoise(model, input);
      const auto t1 = std::chrono::steady_clock::now();
      times.push_back(std::chrono::duration<double>(t1 - t0).count());
    }
    std::sort(times.begin(), times.end());
    BenchResult res;
    res.h = h;
    res.w = w;
    const std::size_t mid = times.size() / 2;
    res.median_seconds = times.size() % 2 == 1
                             ? times[mid]
                             : 0.5 * (times[mid - 1] + times[mid]);
    results.push_back(res);
  }
  return results;
}

std::string hardware_description() {
  std::string cpu = "unknown CPU";
  std::ifstream cpuinfo("/proc/cpuinfo");
  std::string line;
  while (std::getline(cpuinfo, line)) {
    if (line.rfind("model name", 0) == 0) {
      const auto colon = line.find(':');
      if (colon != std::string::npos) {
        cpu = line.substr(colon + 2);
      }
      break;
    }
  }
  return cpu + ", " + std::to_string(std::thread::hardware_concurrency()) +
         " hardware threads";
}

} // namespace ecnd
