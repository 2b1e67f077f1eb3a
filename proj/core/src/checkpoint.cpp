#include <zlib.h>

#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include "ecnd/training.hpp"

// Checkpoint byte layout (all fields little-endian):
//   magic "ECND"
//   u16  format version (currently 1)
//   u8   variant id
//   u16  depth
//   u16  width
//   f32  sigma
//   per layer, in schedule order:
//     u8 layer-kind tag, u8 dilation,
//     then each tensor as four u32 dims + raw IEEE-754 f32 payload:
//     conv weights, bias?, gamma?, beta?, running_mean?, running_var?
//     (presence determined by the kind tag; vectors are stored 1xCx1x1)
//   u8   training-state flag
//   if set: remaining TrainConfig fields (epochs u32, batch u32,
//     lr_start/lr_end/beta1/beta2/eps f64, patch u32, stride u32,
//     seed u64, augment u8), Adam t as i64, then m and v payloads per
//     parameter block in collect_params order
//   u32  CRC-32 of all preceding bytes

namespace ecnd {

namespace {

constexpr char kMagic[4] = {'E', 'C', 'N', 'D'};
constexpr std::uint16_t kVersion = 1;

class Writer {
public:
  template <typename T> void put(T v) {
    static_assert(std::is_trivially_copyable_v<T>);
    const std::size_t off = buf_.size();
    buf_.resize(off + sizeof(T));
    std::memcpy(buf_.data() + off, &v, sizeof(T));
  }
  void put_floats(const float *p, std::size_t n) {
    const std::size_t off = buf_.size();
    buf_.resize(off + n * sizeof(float));
    std::memcpy(buf_.data() + off, p, n * sizeof(float));
  }
  void put_tensor_dims(std::uint32_t a, std::uint32_t b, std::uint32_t c,
                       std::uint32_t d) {
    put(a); put(b); put(c); put(d);
  }
  std::vector<char> &bytes() { return buf_; }

private:
  std::vector<char> buf_;
};

class Reader {
public:
  Reader(std::vector<char> buf, std::string path)
      : buf_(std::move(buf)), path_(std::move(path)) {}

  template <typename T> T get(const std::string &what) {
    static_assert(std::is_trivially_copyable_v<T>);
    need(sizeof(T), what);
    T v;
    std::memcpy(&v, buf_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return v;
  }
  void get_floats(float *p, std::size_t n, const std::string &what) {
    need(n * sizeof(float), what);
    std::memcpy(p, buf_.data() + pos_, n * sizeof(float));
    pos_ += n * sizeof(float);
  }
  bool at_end() const { return pos_ == buf_.size(); }
  std::size_t pos() const { return pos_; }
  const std::vector<char> &bytes() const { return buf_; }

private:
  void need(std::size_t n, const std::string &what) {
    if (pos_ + n > buf_.size()) {
      throw FormatError("checkpoint truncated while reading " + what +
                        " in " + path_);
    }
  }
  std::vector<char> buf_;
  std::size_t pos_ = 0;
  std::string path_;
};

void write_tensor(Writer &w, const Tensor4 &t) {
  w.put_tensor_dims(t.n, t.c, t.h, t.w);
  w.put_floats(t.data.data(), t.data.size());
}

void write_vector(Writer &w, const std::vector<float> &v) {
  w.put_tensor_dims(1, static_cast<std::uint32_t>(v.size()), 1, 1);
  w.put_floats(v.data(), v.size());
}

Tensor4 read_tensor(Reader &r, const std::string &what) {
  const auto n = r.get<std::uint32_t>(what);
  const auto c = r.get<std::uint32_t>(what);
  const auto h = r.get<std::uint32_t>(what);
  const auto w = r.get<std::uint32_t>(what);
  if (n == 0 || c == 0 || h == 0 || w == 0) {
    throw FormatError("checkpoint has zero dimension in " + what);
  }
  Tensor4 t(static_cast<int>(n), static_cast<int>(c), static_cast<int>(h),
            static_cast<int>(w));
  r.get_floats(t.data.data(), t.data.size(), what);
  return t;
}

std::vector<float> read_vector(Reader &r, std::size_t expect,
                               const std::string &what) {
  Tensor4 t = read_tensor(r, what);
  if (t.data.size() != expect) {
    throw FormatError("checkpoint " + what + " has " +
                      std::to_string(t.data.size()) + " elements, expected " +
                      std::to_string(expect));
  }
  return std::move(t.data);
}

std::uint32_t crc_of(const char *p, std::size_t n) {
  return static_cast<std::uint32_t>(
      crc32(0L, reinterpret_cast<const Bytef *>(p),
            static_cast<uInt>(n)));
}

} // namespace

void save_checkpoint(const Model &model, const AdamState *state,
                     const TrainConfig &config, const std::string &path) {
  Writer w;
  w.bytes().insert(w.bytes().end(), kMagic, kMagic + 4);
  w.put(kVersion);
  w.put(static_cast<std::uint8_t>(model.spec.variant));
  w.put(static_cast<std::uint16_t>(model.spec.depth));
  w.put(static_cast<std::uint16_t>(model.spec.width));
  w.put(model.sigma);

  for (const Layer &layer : model.layers) {
    w.put(static_cast<std::uint8_t>(layer.desc.kind));
    w.put(static_cast<std::uint8_t>(layer.desc.dilation));
    write_tensor(w, layer.conv.weights);
    if (layer.conv.bias) write_vector(w, *layer.conv.bias);
    if (layer.bn) {
      write_vector(w, layer.bn->gamma);
      write_vector(w, layer.bn->beta);
      write_vector(w, layer.bn->running_mean);
      write_vector(w, layer.bn->running_var);
    }
  }

  w.put(static_cast<std::uint8_t>(state ? 1 : 0));
  if (state) {
    w.put(static_cast<std::uint32_t>(config.epochs));
    w.put(static_cast<std::uint32_t>(config.batch_size));
    w.put(config.lr_start);
    w.put(config.lr_end);
    w.put(config.beta1);
    w.put(config.beta2);
    w.put(config.eps);
    w.put(static_cast<std::uint32_t>(config.patch_size));
    w.put(static_cast<std::uint32_t>(config.stride));
    w.put(config.seed);
    w.put(static_cast<std::uint8_t>(config.augment ? 1 : 0));
    w.put(static_cast<std::int64_t>(state->step));
    for (std::size_t i = 0; i < state->m.size(); ++i) {
      w.put_floats(state->m[i].data(), state->m[i].size());
      w.put_floats(state->v[i].data(), state->v[i].size());
    }
  }

  w.put(crc_of(w.bytes().data(), w.bytes().size()));

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open checkpoint for writing: " + path);
  out.write(w.bytes().data(), static_cast<std::streamsize>(w.bytes().size()));
  if (!out) throw IoError("failed writing checkpoint: " + path);
}

Checkpoint load_checkpoint(const std::string &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open checkpoint: " + path);
  std::vector<char> buf((std::istreambuf_iterator<char>(in)),
                        std::istreambuf_iterator<char>());

  if (buf.size() < 4 + sizeof(std::uint32_t)) {
    throw FormatError("checkpoint truncated (no header): " + path);
  }
  if (std::memcmp(buf.data(), kMagic, 4) != 0) {
    throw FormatError("bad magic bytes, not an ECND checkpoint: " + path);
  }
  std::uint32_t stored_crc;
  std::memcpy(&stored_crc, buf.data() + buf.size() - 4, 4);
  if (crc_of(buf.data(), buf.size() - 4) != stored_crc) {
    throw FormatError("checkpoint checksum mismatch (corrupt file): " + path);
  }

  Reader r(std::move(buf), path);
  r.get<std::uint32_t>("magic"); // already validated

  const auto version = r.get<std::uint16_t>("version");
  if (version != kVersion) {
    throw FormatError("unsupported checkpoint version " +
                      std::to_string(version) + " in " + path);
  }
  const auto variant_id = r.get<std::uint8_t>("variant");
  if (variant_id > 3) {
    throw FormatError("unknown variant id " + std::to_string(variant_id) +
                      " in " + path);
  }
  const int depth = r.get<std::uint16_t>("depth");
  const int width = r.get<std::uint16_t>("width");
  const float sigma = r.get<float>("sigma");

  Checkpoint ckpt;
  ckpt.model.spec.variant = static_cast<Variant>(variant_id);
  ckpt.model.spec.depth = depth;
  ckpt.model.spec.width = width;
  ckpt.model.sigma = sigma;
  ckpt.config.sigma = sigma;

  for (int pos = 1; pos <= depth; ++pos) {
    const std::string where = "layer " + std::to_string(pos);
    Layer layer;
    const auto tag = r.get<std::uint8_t>(where + " kind");
    if (tag > 3) {
      throw FormatError("unknown layer kind tag in " + where + " of " + path);
    }
    layer.desc.kind = static_cast<LayerKind>(tag);
    layer.desc.dilation = r.get<std::uint8_t>(where + " dilation");
    if (layer.desc.dilation < 1) {
      throw FormatError("zero dilation in " + where + " of " + path);
    }

    layer.conv.weights = read_tensor(r, where + " conv weights");
    layer.conv.out_channels = layer.conv.weights.n;
    layer.conv.in_channels = layer.conv.weights.c;
    layer.conv.dilation = layer.desc.dilation;
    if (layer.conv.weights.h != 3 || layer.conv.weights.w != 3) {
      throw FormatError("non-3x3 kernel in " + where + " of " + path);
    }
    const std::size_t oc = layer.conv.out_channels;
    if (layer.desc.has_bias()) {
      layer.conv.bias = read_vector(r, oc, where + " bias");
    }
    if (layer.desc.has_bn()) {
      BatchNormParams bn;
      bn.channels = static_cast<int>(oc);
      bn.gamma = read_vector(r, oc, where + " gamma");
      bn.beta = read_vector(r, oc, where + " beta");
      bn.running_mean = read_vector(r, oc, where + " running_mean");
      bn.running_var = read_vector(r, oc, where + " running_var");
      layer.bn = std::move(bn);
    }
    ckpt.model.spec.layers.push_back(layer.desc);
    ckpt.model.layers.push_back(std::move(layer));
  }

  const auto has_state = r.get<std::uint8_t>("training-state flag");
  if (has_state == 1) {
    ckpt.has_adam = true;
    ckpt.config.epochs = static_cast<int>(r.get<std::uint32_t>("epochs"));
    ckpt.config.batch_size = static_cast<int>(r.get<std::uint32_t>("batch"));
    ckpt.config.lr_start = r.get<double>("lr_start");
    ckpt.config.lr_end = r.get<double>("lr_end");
    ckpt.config.beta1 = r.get<double>("beta1");
    ckpt.config.beta2 = r.get<double>("beta2");
    ckpt.config.eps = r.get<double>("eps");
    ckpt.config.patch_size = static_cast<int>(r.get<std::uint32_t>("patch"));
    ckpt.config.stride = static_cast<int>(r.get<std::uint32_t>("stride"));
    ckpt.config.seed = r.get<std::uint64_t>("seed");
    ckpt.config.augment = r.get<std::uint8_t>("augment flag") != 0;
    ckpt.adam.step = r.get<std::int64_t>("adam step");
    auto params = collect_params(ckpt.model);
    for (std::size_t i = 0; i < params.size(); ++i) {
      const std::string what = "adam moments block " + std::to_string(i);
      std::vector<float> m(params[i].len), v(params[i].len);
      r.get_floats(m.data(), m.size(), what);
      r.get_floats(v.data(), v.size(), what);
      ckpt.adam.m.push_back(std::move(m));
      ckpt.adam.v.push_back(std::move(v));
    }
  } else if (has_state != 0) {
    throw FormatError("bad training-state flag in " + path);
  }

  if (r.pos() + 4 != r.bytes().size()) {
    throw FormatError("trailing bytes after checkpoint payload in " + path);
  }
  return ckpt;
}

} // namespace ecnd
