#include "boocap/captioner/checkpoint.hpp"

#include <cstring>

#include "boocap/corpus/corpus.hpp"
#include "boocap/error.hpp"

namespace boocap::captioner {

namespace {

constexpr char kMagic[4] = {'B', 'O', 'O', 'C'};

class Writer {
 public:
  void bytes(const void* p, std::size_t n) { out_.append(static_cast<const char*>(p), n); }
  void u32(std::uint32_t v) {
    unsigned char b[4];
    for (int k = 0; k < 4; ++k) b[k] = static_cast<unsigned char>(v >> (8 * k));
    bytes(b, 4);
  }
  void u64(std::uint64_t v) {
    unsigned char b[8];
    for (int k = 0; k < 8; ++k) b[k] = static_cast<unsigned char>(v >> (8 * k));
    bytes(b, 8);
  }
  void f64(double d) {
    std::uint64_t v;
    std::memcpy(&v, &d, 8);
    u64(v);
  }
  void blob(std::string_view s) {
    u64(s.size());
    bytes(s.data(), s.size());
  }
  void tensor(const std::string& name, const Matrix& m) {
    blob(name);
    u64(static_cast<std::uint64_t>(m.rows()));
    u64(static_cast<std::uint64_t>(m.cols()));
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
      for (Eigen::Index c = 0; c < m.cols(); ++c) f64(m(r, c));
    }
  }
  std::string take() { return std::move(out_); }

 private:
  std::string out_;
};

class Reader {
 public:
  explicit Reader(std::string_view in) : in_(in) {}

  const char* need(std::size_t n) {
    if (in_.size() - pos_ < n) throw ParseError("truncated checkpoint", pos_);
    const char* p = in_.data() + pos_;
    pos_ += n;
    return p;
  }
  std::uint32_t u32() {
    const auto* p = reinterpret_cast<const unsigned char*>(need(4));
    std::uint32_t v = 0;
    for (int k = 0; k < 4; ++k) v |= static_cast<std::uint32_t>(p[k]) << (8 * k);
    return v;
  }
  std::uint64_t u64() {
    const auto* p = reinterpret_cast<const unsigned char*>(need(8));
    std::uint64_t v = 0;
    for (int k = 0; k < 8; ++k) v |= static_cast<std::uint64_t>(p[k]) << (8 * k);
    return v;
  }
  double f64() {
    const std::uint64_t v = u64();
    double d;
    std::memcpy(&d, &v, 8);
    return d;
  }
  std::string blob() {
    const auto n = u64();
    if (n > in_.size()) throw ParseError("truncated checkpoint", pos_);
    return std::string(need(static_cast<std::size_t>(n)), static_cast<std::size_t>(n));
  }
  void tensor(const std::string& expected, Matrix& m) {
    const auto at = pos_;
    const auto name = blob();
    if (name != expected) throw ParseError("checkpoint tensor '" + name + "' where '" + expected + "' was expected", at);
    const auto rows = u64();
    const auto cols = u64();
    if (rows > in_.size() || cols > in_.size() || rows * cols * 8 > in_.size() - pos_) {
      throw ParseError("truncated checkpoint", pos_);
    }
    m.resize(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
      for (Eigen::Index c = 0; c < m.cols(); ++c) m(r, c) = f64();
    }
  }
  std::size_t pos() const { return pos_; }
  bool done() const { return pos_ == in_.size(); }

 private:
  std::string_view in_;
  std::size_t pos_ = 0;
};

/// Empty tensors laid out for `layers` LSTM layers.
Params skeleton(int layers) {
  Params p;
  p.w_in.resize(static_cast<std::size_t>(layers));
  p.w_rec.resize(static_cast<std::size_t>(layers));
  p.bias.resize(static_cast<std::size_t>(layers));
  return p;
}

void write_params(Writer& w, const Params& p) {
  for (const auto& [name, m] : p.tensors()) w.tensor(name, *m);
}

void read_params(Reader& r, Params& p) {
  for (auto& [name, m] : p.tensors()) r.tensor(name, *m);
  p.touch();
}

}  // namespace

std::string serialize_checkpoint(const Checkpoint& ck) {
  Writer w;
  w.bytes(kMagic, 4);
  w.u32(kCheckpointVersion);
  w.blob(ck.hp.to_json());
  w.blob(ck.vocab.to_json());
  w.blob(ck.schema ? ck.schema->to_json() : std::string());
  write_params(w, ck.params);
  w.u64(static_cast<std::uint64_t>(ck.adam.step));
  write_params(w, ck.adam.m);
  write_params(w, ck.adam.v);
  w.blob(ck.log.to_json());
  return w.take();
}

Checkpoint deserialize_checkpoint(std::string_view bytes) {
  Reader r(bytes);
  if (std::memcmp(r.need(4), kMagic, 4) != 0) throw ParseError("not a checkpoint (bad magic)", 0);
  const auto version = r.u32();
  if (version != kCheckpointVersion) {
    throw ParseError("unsupported version " + std::to_string(version) + " (expected " +
                     std::to_string(kCheckpointVersion) + ")", 4);
  }
  Checkpoint ck;
  ck.hp = HyperParams::from_json(r.blob());
  ck.vocab = corpus::Vocabulary::from_json(r.blob());
  const auto schema = r.blob();
  if (!schema.empty()) ck.schema = repr::ReprSchema::from_json(schema);
  ck.params = skeleton(ck.hp.layers);
  read_params(r, ck.params);
  ck.adam.step = static_cast<long>(r.u64());
  ck.adam.m = skeleton(ck.hp.layers);
  ck.adam.v = skeleton(ck.hp.layers);
  read_params(r, ck.adam.m);
  read_params(r, ck.adam.v);
  ck.log = TrainLog::from_json(r.blob());
  if (!r.done()) throw ParseError("trailing bytes after checkpoint", r.pos());
  if (ck.params.vocab_size() != ck.vocab.size()) throw ValidationError("checkpoint vocabulary does not match the model");
  if (ck.schema && static_cast<std::size_t>(ck.params.repr_dim()) != ck.schema->dim()) {
    throw ValidationError("checkpoint schema does not match the model");
  }
  return ck;
}

void save_checkpoint(const Checkpoint& ckpt, const std::string& path) {
  corpus::write_file(path, serialize_checkpoint(ckpt));
}

Checkpoint load_checkpoint(const std::string& path) { return deserialize_checkpoint(corpus::read_file(path)); }

}  // namespace boocap::captioner
