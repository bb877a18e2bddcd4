#include "inb/model_io.hpp"

#include <zlib.h>

#include <algorithm>
#include <bit>
#include <cstring>
#include <fstream>
#include <string>

#include "inb/errors.hpp"

namespace inb {

namespace {

enum class LayerKind : std::uint8_t {
  kDensePlain = 0,
  kDenseGrouped = 1,
  kConvPlain = 2,
  kConvGrouped = 3,
  kMaxPool = 4,
  kGlobalAvgPool = 5,
};

constexpr std::uint32_t section_tag(const char (&s)[5]) {
  return static_cast<std::uint32_t>(static_cast<unsigned char>(s[0])) |
         static_cast<std::uint32_t>(static_cast<unsigned char>(s[1])) << 8 |
         static_cast<std::uint32_t>(static_cast<unsigned char>(s[2])) << 16 |
         static_cast<std::uint32_t>(static_cast<unsigned char>(s[3])) << 24;
}

constexpr std::uint32_t kTagModel = section_tag("MODL");
constexpr std::uint32_t kTagConfig = section_tag("CONF");
constexpr std::uint32_t kTagLayer = section_tag("LAYR");
constexpr std::size_t kHeaderSize = 8 + 4 + 8;
constexpr std::size_t kTrailerSize = 4;

class Writer {
 public:
  void u8(std::uint8_t v) { bytes_.push_back(v); }
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) bytes_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void u64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) bytes_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void f32(float v) { u32(std::bit_cast<std::uint32_t>(v)); }
  void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
  void string(const std::string& s) {
    u32(static_cast<std::uint32_t>(s.size()));
    bytes_.insert(bytes_.end(), s.begin(), s.end());
  }
  void bytes(std::span<const std::uint8_t> b) { bytes_.insert(bytes_.end(), b.begin(), b.end()); }
  void section(std::uint32_t tag, const Writer& body) {
    u32(tag);
    u64(body.bytes_.size());
    bytes(body.bytes_);
  }
  std::vector<std::uint8_t>& data() { return bytes_; }

 private:
  std::vector<std::uint8_t> bytes_;
};

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

  bool done() const { return pos_ == bytes_.size(); }
  std::uint8_t u8() { return take(1)[0]; }
  std::uint32_t u32() {
    const auto b = take(4);
    std::uint32_t v = 0;
    for (int i = 3; i >= 0; --i) v = (v << 8) | b[static_cast<std::size_t>(i)];
    return v;
  }
  std::uint64_t u64() {
    const auto b = take(8);
    std::uint64_t v = 0;
    for (int i = 7; i >= 0; --i) v = (v << 8) | b[static_cast<std::size_t>(i)];
    return v;
  }
  float f32() { return std::bit_cast<float>(u32()); }
  double f64() { return std::bit_cast<double>(u64()); }
  std::string string() {
    const auto b = take(u32());
    return std::string(b.begin(), b.end());
  }
  std::span<const std::uint8_t> take(std::uint64_t n) {
    if (n > bytes_.size() - pos_) throw ModelFileError("model file: section ends early");
    const auto out = bytes_.subspan(pos_, static_cast<std::size_t>(n));
    pos_ += static_cast<std::size_t>(n);
    return out;
  }
  /// Returns the body of the next section, which must carry `tag`.
  Reader section(std::uint32_t tag) {
    if (u32() != tag) throw ModelFileError("model file: unexpected section");
    return Reader(take(u64()));
  }
  std::uint32_t peek_tag() const {
    if (bytes_.size() - pos_ < 4) return 0;
    Reader copy(bytes_.subspan(pos_, 4));
    return copy.u32();
  }

 private:
  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

template <typename T>
void put_tensor(Writer& w, const Tensor<T>& t) {
  w.u32(static_cast<std::uint32_t>(t.rank()));
  for (const auto d : t.shape()) w.u64(d);
  for (const T v : t.data()) w.f32(static_cast<float>(v));
}

template <typename T>
Tensor<T> get_tensor(Reader& r) {
  const std::uint32_t rank = r.u32();
  if (rank > 8) throw ModelFileError("model file: tensor rank " + std::to_string(rank) + " is not supported");
  Shape shape(rank);
  std::uint64_t count = 1;
  for (auto& d : shape) {
    d = r.u64();
    if (d != 0 && count > (std::uint64_t{1} << 40) / d) throw ModelFileError("model file: tensor too large");
    count *= d;
  }
  const auto raw = r.take(count * 4);
  std::vector<T> values(count);
  for (std::size_t i = 0; i < count; ++i) {
    std::uint32_t bits = 0;
    for (int b = 3; b >= 0; --b) bits = (bits << 8) | raw[i * 4 + static_cast<std::size_t>(b)];
    values[i] = static_cast<T>(std::bit_cast<float>(bits));
  }
  return Tensor<T>(std::move(shape), std::move(values));
}

void put_spec(Writer& w, const GroupSpec& spec) {
  w.u64(spec.group_count);
  w.u64(spec.group_size);
  w.u8(static_cast<std::uint8_t>(spec.method));
  w.f64(spec.keep_prob);
}

template <typename E>
E get_enum(Reader& r, std::uint8_t max, const char* what) {
  const std::uint8_t v = r.u8();
  if (v > max) throw ModelFileError(std::string("model file: invalid ") + what + " code " + std::to_string(v));
  return static_cast<E>(v);
}

GroupSpec get_spec(Reader& r) {
  GroupSpec spec;
  spec.group_count = r.u64();
  spec.group_size = r.u64();
  spec.method = get_enum<Method>(r, 1, "method");
  spec.keep_prob = r.f64();
  return spec;
}

template <typename T>
void put_layer(Writer& w, const Layer<T>& layer) {
  std::visit(
      [&w](const auto& l) {
        using L = std::decay_t<decltype(l)>;
        if constexpr (std::is_same_v<L, DensePlain<T>>) {
          w.u8(static_cast<std::uint8_t>(LayerKind::kDensePlain));
          w.u8(static_cast<std::uint8_t>(l.activation()));
          put_tensor(w, l.weights());
          put_tensor(w, l.biases());
        } else if constexpr (std::is_same_v<L, DenseGrouped<T>>) {
          w.u8(static_cast<std::uint8_t>(LayerKind::kDenseGrouped));
          w.u8(static_cast<std::uint8_t>(l.activation()));
          put_spec(w, l.spec());
          put_tensor(w, l.weights());
          put_tensor(w, l.biases());
        } else if constexpr (std::is_same_v<L, ConvPlain<T>>) {
          w.u8(static_cast<std::uint8_t>(LayerKind::kConvPlain));
          w.u8(static_cast<std::uint8_t>(l.activation()));
          w.u64(l.stride());
          w.u8(static_cast<std::uint8_t>(l.padding()));
          put_tensor(w, l.filters());
          put_tensor(w, l.biases());
        } else if constexpr (std::is_same_v<L, ConvGrouped<T>>) {
          w.u8(static_cast<std::uint8_t>(LayerKind::kConvGrouped));
          w.u8(static_cast<std::uint8_t>(l.activation()));
          w.u64(l.members().stride());
          w.u8(static_cast<std::uint8_t>(l.members().padding()));
          put_spec(w, l.spec());
          put_tensor(w, l.filters());
          put_tensor(w, l.biases());
        } else if constexpr (std::is_same_v<L, MaxPool<T>>) {
          w.u8(static_cast<std::uint8_t>(LayerKind::kMaxPool));
          w.u64(l.window());
          w.u64(l.stride());
        } else {
          w.u8(static_cast<std::uint8_t>(LayerKind::kGlobalAvgPool));
        }
      },
      layer);
}

template <typename T>
Layer<T> get_layer(Reader& r) {
  const auto kind = get_enum<LayerKind>(r, 5, "layer kind");
  switch (kind) {
    case LayerKind::kDensePlain: {
      const auto act = get_enum<Activation>(r, 3, "activation");
      auto w = get_tensor<T>(r);
      auto b = get_tensor<T>(r);
      return DensePlain<T>(std::move(w), std::move(b), act);
    }
    case LayerKind::kDenseGrouped: {
      const auto act = get_enum<Activation>(r, 3, "activation");
      const auto spec = get_spec(r);
      auto w = get_tensor<T>(r);
      auto b = get_tensor<T>(r);
      return DenseGrouped<T>(spec, std::move(w), std::move(b), act);
    }
    case LayerKind::kConvPlain: {
      const auto act = get_enum<Activation>(r, 3, "activation");
      const auto stride = static_cast<std::size_t>(r.u64());
      const auto padding = get_enum<Padding>(r, 1, "padding");
      auto f = get_tensor<T>(r);
      auto b = get_tensor<T>(r);
      return ConvPlain<T>(std::move(f), std::move(b), stride, padding, act);
    }
    case LayerKind::kConvGrouped: {
      const auto act = get_enum<Activation>(r, 3, "activation");
      const auto stride = static_cast<std::size_t>(r.u64());
      const auto padding = get_enum<Padding>(r, 1, "padding");
      const auto spec = get_spec(r);
      auto f = get_tensor<T>(r);
      auto b = get_tensor<T>(r);
      return ConvGrouped<T>(spec, std::move(f), std::move(b), stride, padding, act);
    }
    case LayerKind::kMaxPool: {
      const auto window = static_cast<std::size_t>(r.u64());
      const auto stride = static_cast<std::size_t>(r.u64());
      return MaxPool<T>(window, stride);
    }
    case LayerKind::kGlobalAvgPool: return GlobalAvgPool<T>();
  }
  throw ModelFileError("model file: invalid layer kind");
}

std::uint32_t crc32_of(std::span<const std::uint8_t> bytes) {
  uLong crc = crc32(0L, Z_NULL, 0);
  std::size_t offset = 0;
  while (offset < bytes.size()) {
    const auto chunk = static_cast<uInt>(std::min<std::size_t>(bytes.size() - offset, 1u << 30));
    crc = crc32(crc, bytes.data() + offset, chunk);
    offset += chunk;
  }
  return static_cast<std::uint32_t>(crc);
}

// Checks magic, version, length and checksum; returns the payload.
std::span<const std::uint8_t> open_container(std::span<const std::uint8_t> bytes) {
  const std::size_t magic_len = std::min<std::size_t>(bytes.size(), 8);
  if (std::memcmp(bytes.data(), kModelMagic, magic_len) != 0 || bytes.empty()) {
    throw ModelMagicError("not a model file (bad magic)");
  }
  if (bytes.size() < kHeaderSize) throw ChecksumError("model file truncated inside the header");
  Reader header(bytes.subspan(8, 12));
  const std::uint32_t version = header.u32();
  if (version != kModelFormatVersion) {
    throw ModelVersionError("model file version " + std::to_string(version) + " is not supported (this build reads version " +
                            std::to_string(kModelFormatVersion) + ")");
  }
  const std::uint64_t length = header.u64();
  const std::size_t available = bytes.size() - kHeaderSize;
  if (available < kTrailerSize || length > available - kTrailerSize) {
    throw ChecksumError("model file truncated: payload declares " + std::to_string(length) + " bytes, " +
                        std::to_string(available < kTrailerSize ? 0 : available - kTrailerSize) + " present");
  }
  if (length != available - kTrailerSize) throw ChecksumError("model file has trailing bytes after the checksum");
  const auto payload = bytes.subspan(kHeaderSize, static_cast<std::size_t>(length));
  Reader trailer(bytes.subspan(kHeaderSize + payload.size(), kTrailerSize));
  const std::uint32_t stored = trailer.u32();
  const std::uint32_t actual = crc32_of(payload);
  if (stored != actual) throw ChecksumError("model file checksum mismatch");
  return payload;
}

}  // namespace

template <typename T>
std::vector<std::uint8_t> encode_model(const Model<T>& model, const KeyValues& config) {
  Writer payload;
  Writer head;
  head.string(model.architecture);
  head.u32(static_cast<std::uint32_t>(model.input_shape.size()));
  for (const auto d : model.input_shape) head.u64(d);
  head.u32(static_cast<std::uint32_t>(model.layers.size()));
  payload.section(kTagModel, head);

  Writer conf;
  conf.u32(static_cast<std::uint32_t>(config.size()));
  for (const auto& [key, value] : config) {
    conf.string(key);
    conf.string(value);
  }
  payload.section(kTagConfig, conf);

  for (const auto& layer : model.layers) {
    Writer body;
    put_layer(body, layer);
    payload.section(kTagLayer, body);
  }

  Writer file;
  for (const char c : kModelMagic) file.u8(static_cast<std::uint8_t>(c));
  file.u32(kModelFormatVersion);
  file.u64(payload.data().size());
  file.bytes(payload.data());
  file.u32(crc32_of(payload.data()));
  return std::move(file.data());
}

template <typename T>
Model<T> decode_model(std::span<const std::uint8_t> bytes) {
  Reader r(open_container(bytes));
  Model<T> model;
  Reader head = r.section(kTagModel);
  model.architecture = head.string();
  model.input_shape.resize(head.u32());
  for (auto& d : model.input_shape) d = head.u64();
  const std::uint32_t layer_count = head.u32();
  r.section(kTagConfig);
  for (std::uint32_t i = 0; i < layer_count; ++i) {
    Reader body = r.section(kTagLayer);
    try {
      model.layers.push_back(get_layer<T>(body));
    } catch (const ShapeError& e) {
      throw ModelFileError("model file: layer " + std::to_string(i) + ": " + e.what());
    } catch (const ConfigError& e) {
      throw ModelFileError("model file: layer " + std::to_string(i) + ": " + e.what());
    }
    if (!body.done()) throw ModelFileError("model file: layer " + std::to_string(i) + " has extra bytes");
  }
  if (!r.done()) throw ModelFileError("model file: unexpected data after the last layer");
  return model;
}

KeyValues decode_model_config(std::span<const std::uint8_t> bytes) {
  Reader r(open_container(bytes));
  r.section(kTagModel);
  Reader conf = r.section(kTagConfig);
  KeyValues out(conf.u32());
  for (auto& [key, value] : out) {
    key = conf.string();
    value = conf.string();
  }
  return out;
}

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw MissingFileError("cannot open " + path.string());
  return std::vector<std::uint8_t>(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

template <typename T>
void save_model(const Model<T>& model, const std::filesystem::path& path, const KeyValues& config) {
  const auto bytes = encode_model(model, config);
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write " + tmp.string());
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    out.flush();
    if (!out) throw Error("write failed for " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp);
    throw Error("cannot rename " + tmp.string() + " to " + path.string() + ": " + ec.message());
  }
}

template <typename T>
Model<T> load_model(const std::filesystem::path& path) {
  return decode_model<T>(read_file_bytes(path));
}

KeyValues load_model_config(const std::filesystem::path& path) { return decode_model_config(read_file_bytes(path)); }

template std::vector<std::uint8_t> encode_model(const Model<float>&, const KeyValues&);
template std::vector<std::uint8_t> encode_model(const Model<double>&, const KeyValues&);
template Model<float> decode_model<float>(std::span<const std::uint8_t>);
template Model<double> decode_model<double>(std::span<const std::uint8_t>);
template void save_model(const Model<float>&, const std::filesystem::path&, const KeyValues&);
template void save_model(const Model<double>&, const std::filesystem::path&, const KeyValues&);
template Model<float> load_model<float>(const std::filesystem::path&);
template Model<double> load_model<double>(const std::filesystem::path&);

}  // namespace inb
