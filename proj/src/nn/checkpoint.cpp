#include "nn/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>

namespace gaitfuse::nn {

static_assert(std::endian::native == std::endian::little,
              "checkpoint I/O assumes a little-endian host");

namespace {

class Writer {
 public:
  template <typename T>
  void put(T v) {
    const auto* p = reinterpret_cast<const std::uint8_t*>(&v);
    out_.insert(out_.end(), p, p + sizeof(T));
  }
  void put_doubles(const Tensor& t) {
    put<std::uint64_t>(t.size());
    const auto* p = reinterpret_cast<const std::uint8_t*>(t.data());
    out_.insert(out_.end(), p, p + t.size() * sizeof(double));
  }
  void put_bytes(const char* p, std::size_t n) { out_.insert(out_.end(), p, p + n); }
  std::vector<std::uint8_t> take() { return std::move(out_); }

 private:
  std::vector<std::uint8_t> out_;
};

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> in) : in_(in) {}

  template <typename T>
  T get() {
    need(sizeof(T));
    T v;
    std::memcpy(&v, in_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return v;
  }
  std::vector<double> get_doubles() {
    const auto n = get<std::uint64_t>();
    if (n > (in_.size() - pos_) / sizeof(double))
      fail(ErrorCode::CheckpointTruncated, "checkpoint ends inside a parameter array");
    std::vector<double> v(n);
    std::memcpy(v.data(), in_.data() + pos_, n * sizeof(double));
    pos_ += n * sizeof(double);
    return v;
  }
  void need(std::size_t n) const {
    if (in_.size() - pos_ < n)
      fail(ErrorCode::CheckpointTruncated,
           "checkpoint truncated at byte " + std::to_string(pos_));
  }
  bool at_end() const { return pos_ == in_.size(); }

 private:
  std::span<const std::uint8_t> in_;
  std::size_t pos_ = 0;
};

void write_model(Writer& w, const Model& m) {
  w.put<std::uint32_t>(static_cast<std::uint32_t>(m.layers().size()));
  w.put<std::uint64_t>(m.seed());
  w.put<std::uint8_t>(static_cast<std::uint8_t>(m.input_shape().size()));
  for (std::size_t d : m.input_shape()) w.put<std::uint32_t>(static_cast<std::uint32_t>(d));
  for (const Layer& l : m.layers()) {
    w.put<std::uint8_t>(static_cast<std::uint8_t>(l.spec.kind));
    w.put<std::uint8_t>(l.spec.trainable ? 1 : 0);
    for (std::size_t v : {l.spec.out_channels, l.spec.kernel_h, l.spec.kernel_w,
                          l.spec.stride, l.spec.pad, l.spec.units})
      w.put<std::uint32_t>(static_cast<std::uint32_t>(v));
    w.put_doubles(l.weight);
    w.put_doubles(l.bias);
  }
}

Model read_model(Reader& r) {
  const auto count = r.get<std::uint32_t>();
  const auto seed = r.get<std::uint64_t>();
  const auto rank = r.get<std::uint8_t>();
  Shape input(rank);
  for (auto& d : input) d = r.get<std::uint32_t>();

  std::vector<LayerSpec> specs;
  std::vector<std::vector<double>> weights, biases;
  for (std::uint32_t i = 0; i < count; ++i) {
    const auto kind = r.get<std::uint8_t>();
    if (kind < 1 || kind > 6)
      fail(ErrorCode::CheckpointFormat, "unknown layer kind tag " + std::to_string(kind));
    LayerSpec s{static_cast<LayerKind>(kind)};
    s.trainable = r.get<std::uint8_t>() != 0;
    s.out_channels = r.get<std::uint32_t>();
    s.kernel_h = r.get<std::uint32_t>();
    s.kernel_w = r.get<std::uint32_t>();
    s.stride = r.get<std::uint32_t>();
    s.pad = r.get<std::uint32_t>();
    s.units = r.get<std::uint32_t>();
    specs.push_back(s);
    weights.push_back(r.get_doubles());
    biases.push_back(r.get_doubles());
  }

  Model m;
  try {
    m = Model(input, specs, seed);
  } catch (const Error& e) {
    fail(ErrorCode::CheckpointFormat, std::string("checkpoint layers do not compose: ") + e.what());
  }
  for (std::size_t i = 0; i < specs.size(); ++i) {
    Layer& l = m.layers()[i];
    if (weights[i].size() != l.weight.size() || biases[i].size() != l.bias.size())
      fail(ErrorCode::CheckpointFormat,
           "parameter count mismatch at layer " + std::to_string(i));
    if (!l.spec.has_weights()) continue;
    l.weight = Tensor(l.weight.shape(), std::move(weights[i]));
    l.bias = Tensor(l.bias.shape(), std::move(biases[i]));
  }
  return m;
}

}  // namespace

std::vector<std::uint8_t> save_checkpoint(const Model& trunk, const Model* head) {
  Writer w;
  w.put_bytes(kCheckpointMagic, 4);
  w.put<std::uint16_t>(kCheckpointVersion);
  write_model(w, trunk);
  w.put<std::uint8_t>(head ? 1 : 0);
  if (head) write_model(w, *head);
  return w.take();
}

Checkpoint load_checkpoint(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 4)
    fail(ErrorCode::CheckpointTruncated, "checkpoint shorter than its magic");
  if (std::memcmp(bytes.data(), kCheckpointMagic, 4) != 0)
    fail(ErrorCode::CheckpointMagic, "not a GFCK checkpoint");
  Reader r(bytes.subspan(4));
  const auto version = r.get<std::uint16_t>();
  if (version != kCheckpointVersion)
    fail(ErrorCode::CheckpointVersion,
         "checkpoint version " + std::to_string(version) + ", expected " +
             std::to_string(kCheckpointVersion));
  Checkpoint ck;
  ck.trunk = read_model(r);
  const auto has_head = r.get<std::uint8_t>();
  if (has_head > 1) fail(ErrorCode::CheckpointFormat, "bad head flag");
  if (has_head) ck.head = read_model(r);
  if (!r.at_end()) fail(ErrorCode::CheckpointFormat, "trailing bytes after checkpoint");
  return ck;
}

void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorCode::Io, "cannot open " + path.string() + " for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) fail(ErrorCode::Io, "write failed for " + path.string());
}

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::Io, "cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace gaitfuse::nn
