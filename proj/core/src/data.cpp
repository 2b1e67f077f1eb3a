#include "ecnd/data.hpp"

#include <algorithm>
#include <string>

#include "ecnd/rng.hpp"

namespace ecnd {

GrayImage::GrayImage(int h_, int w_, float fill) : h(h_), w(w_) {
  if (h < 1 || w < 1) {
    throw ShapeError("image dimensions must be >= 1");
  }
  pixels.assign(static_cast<std::size_t>(h) * w, fill);
}

Tensor4 GrayImage::to_tensor() const {
  Tensor4 t(1, 1, h, w);
  t.data = pixels;
  return t;
}

GrayImage GrayImage::from_tensor(const Tensor4 &t) {
  if (t.n != 1 || t.c != 1) {
    throw ShapeError("from_tensor: expected a 1x1xHxW tensor");
  }
  GrayImage img(t.h, t.w);
  img.pixels = t.data;
  return img;
}

std::vector<GrayImage> extract_patches(const GrayImage &img, int patch_size,
                                       int stride) {
  if (patch_size < 1 || patch_size > std::min(img.h, img.w)) {
    throw ConfigError("patch size " + std::to_string(patch_size) +
                      " does not fit a " + std::to_string(img.h) + "x" +
                      std::to_string(img.w) + " image");
  }
  if (stride < 1) throw ConfigError("stride must be >= 1");

  std::vector<GrayImage> patches;
  for (int r = 0; r + patch_size <= img.h; r += stride) {
    for (int c = 0; c + patch_size <= img.w; c += stride) {
      GrayImage p(patch_size, patch_size);
      for (int u = 0; u < patch_size; ++u) {
        for (int v = 0; v < patch_size; ++v) {
          p.at(u, v) = img.at(r + u, c + v);
        }
      }
      patches.push_back(std::move(p));
    }
  }
  return patches;
}

GrayImage augment(const GrayImage &patch, int mode) {
  if (patch.h != patch.w) {
    throw ShapeError("augment: patch must be square");
  }
  if (mode < 0 || mode > 7) {
    throw ConfigError("augment: mode must be in 0..7");
  }
  const int s = patch.h;
  GrayImage out(s, s);
  const int rot = mode & 3;
  const bool flip = (mode & 4) != 0;
  for (int r = 0; r < s; ++r) {
    for (int c = 0; c < s; ++c) {
      int sr = r, sc = flip ? s - 1 - c : c;
      // inverse rotation by 90*rot degrees
      for (int k = 0; k < rot; ++k) {
        const int t = sr;
        sr = s - 1 - sc;
        sc = t;
      }
      out.at(r, c) = patch.at(sr, sc);
    }
  }
  return out;
}

Tensor4 add_gaussian_noise(const Tensor4 &clean, const NoiseConfig &cfg,
                           std::uint64_t stream_id) {
  Tensor4 noisy = clean;
  if (cfg.sigma <= 0.0f) return noisy;
  const double std_dev = cfg.sigma / 255.0;
  GaussianStream gs(mix_seed(cfg.seed, stream_id));
  for (float &v : noisy.data) {
    v = static_cast<float>(v + std_dev * gs.next());
  }
  return noisy;
}

PatchSet build_patch_set(const std::vector<GrayImage> &images, int patch_size,
                         int stride, const NoiseConfig &cfg,
                         bool augment_patches) {
  PatchSet set;
  set.patch_size = patch_size;
  const double std_dev = cfg.sigma / 255.0;
  std::uint64_t patch_index = 0;
  for (std::size_t img_id = 0; img_id < images.size(); ++img_id) {
    const GrayImage &img = images[img_id];
    int row = 0;
    for (int r = 0; r + patch_size <= img.h; r += stride, ++row) {
      int col = 0;
      for (int c = 0; c + patch_size <= img.w; c += stride, ++col) {
        GrayImage p(patch_size, patch_size);
        for (int u = 0; u < patch_size; ++u) {
          for (int v = 0; v < patch_size; ++v) {
            p.at(u, v) = img.at(r + u, c + v);
          }
        }
        int aug = 0;
        if (augment_patches) {
          // deterministic per-patch symmetry pick
          aug = static_cast<int>(mix_seed(cfg.seed ^ 0xa5a5a5a5ULL,
                                          patch_index) & 7);
          p = augment(p, aug);
        }
        // noise stream partitioned per patch index: parallel construction
        // would produce the same pairs
        std::vector<float> noisy = p.pixels;
        if (cfg.sigma > 0.0f) {
          GaussianStream gs(mix_seed(cfg.seed, patch_index));
          for (float &v : noisy) {
            v = static_cast<float>(v + std_dev * gs.next());
          }
        }
        set.clean.push_back(std::move(p.pixels));
        set.noisy.push_back(std::move(noisy));
        set.meta.push_back(PatchMeta{static_cast<int>(img_id), r, c, aug});
        ++patch_index;
      }
    }
  }
  return set;
}

std::vector<std::pair<Tensor4, Tensor4>> make_batches(const PatchSet &patches,
                                                      int batch_size,
                                                      std::uint64_t seed,
                                                      int epoch) {
  if (batch_size < 1) throw ConfigError("batch size must be >= 1");
  if (patches.count() == 0) throw ConfigError("empty patch set");

  const auto perm = seeded_permutation(
      patches.count(), mix_seed(seed, 0xbac000ULL + epoch));
  const int p = patches.patch_size;

  std::vector<std::pair<Tensor4, Tensor4>> batches;
  for (std::size_t start = 0; start < perm.size(); start += batch_size) {
    const std::size_t n =
        std::min<std::size_t>(batch_size, perm.size() - start);
    Tensor4 clean(static_cast<int>(n), 1, p, p);
    Tensor4 noisy(static_cast<int>(n), 1, p, p);
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t src = perm[start + i];
      std::copy(patches.clean[src].begin(), patches.clean[src].end(),
                clean.data.begin() + i * p * p);
      std::copy(patches.noisy[src].begin(), patches.noisy[src].end(),
                noisy.data.begin() + i * p * p);
    }
    batches.emplace_back(std::move(clean), std::move(noisy));
  }
  return batches;
}

} // namespace ecnd
