#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "ecnd/tensor.hpp"

namespace ecnd {

// Grayscale image with pixels in [0,1], row-major.
struct GrayImage {
  int h = 0, w = 0;
  std::vector<float> pixels;

  GrayImage() = default;
  GrayImage(int h_, int w_, float fill = 0.0f);

  float &at(int r, int c) { return pixels[static_cast<std::size_t>(r) * w + c]; }
  float at(int r, int c) const {
    return pixels[static_cast<std::size_t>(r) * w + c];
  }

  // 1 x 1 x h x w tensor view (copy).
  Tensor4 to_tensor() const;
  static GrayImage from_tensor(const Tensor4 &t);
};

// 8-bit grayscale PNG decode, mapped to [0,1] by v/255. RGB inputs are
// converted by luminance 0.299R + 0.587G + 0.114B; 16-bit inputs scale
// by 65535. Alpha is dropped.
GrayImage load_image(const std::string &path);

// Rounds to the nearest 8-bit level (half up) and writes grayscale PNG.
void save_image(const GrayImage &img, const std::string &path);

// Non-recursive *.png scan, sorted lexicographically.
std::vector<std::string> list_pngs(const std::string &dir);

// All fully contained patch_size x patch_size windows at stride offsets,
// row-major over the placement grid.
std::vector<GrayImage> extract_patches(const GrayImage &img, int patch_size,
                                       int stride);

// One of the 8 dihedral symmetries of a square patch; mode 0 is the
// identity, 1-3 rotate by 90/180/270 degrees, 4-7 are the same after a
// horizontal flip.
GrayImage augment(const GrayImage &patch, int mode);

struct NoiseConfig {
  float sigma = 25.0f; // 0-255 scale, applied as sigma/255
  std::uint64_t seed = 0;
};

// clean + i.i.d. Gaussian(0, (sigma/255)^2), unclipped. The stream is
// derived from (seed, stream_id) so distinct ids give independent noise.
Tensor4 add_gaussian_noise(const Tensor4 &clean, const NoiseConfig &cfg,
                           std::uint64_t stream_id = 0);

struct PatchMeta {
  int image_id = 0;
  int row = 0, col = 0; // top-left offset in the source image
  int aug = 0;
};

// Paired clean/noisy training patches. Noise is drawn exactly once at
// construction; pairs are never re-noised.
struct PatchSet {
  int patch_size = 0;
  std::vector<std::vector<float>> clean;
  std::vector<std::vector<float>> noisy;
  std::vector<PatchMeta> meta;

  std::size_t count() const { return clean.size(); }
};

PatchSet build_patch_set(const std::vector<GrayImage> &images, int patch_size,
                         int stride, const NoiseConfig &cfg,
                         bool augment_patches);

// Seeded shuffle, then consecutive chunks stacked into (clean, noisy)
// batch tensors; the last chunk may be short.
std::vector<std::pair<Tensor4, Tensor4>> make_batches(const PatchSet &patches,
                                                      int batch_size,
                                                      std::uint64_t seed,
                                                      int epoch);

} // namespace ecnd
