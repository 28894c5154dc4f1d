#include "sdil/checkpoint.hpp"

#include <cstdint>
#include <cstring>
#include <fstream>
#include <limits>
#include <unordered_map>

#include "sdil/error.hpp"

namespace sdil {

namespace {

void put_u32(std::string& out, std::uint32_t v) {
  out.push_back(char(v & 0xff));
  out.push_back(char((v >> 8) & 0xff));
  out.push_back(char((v >> 16) & 0xff));
  out.push_back(char((v >> 24) & 0xff));
}

void put_f32(std::string& out, float v) {
  std::uint32_t bits;
  std::memcpy(&bits, &v, sizeof bits);
  put_u32(out, bits);
}

class Reader {
 public:
  Reader(const std::string& buf, const std::string& path) : buf_(buf), path_(path) {}

  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 3; i >= 0; --i) v = (v << 8) | std::uint8_t(buf_[pos_ + i]);
    pos_ += 4;
    return v;
  }

  float f32() {
    std::uint32_t bits = u32();
    float v;
    std::memcpy(&v, &bits, sizeof v);
    return v;
  }

  std::string bytes(std::size_t n) {
    need(n);
    std::string s = buf_.substr(pos_, n);
    pos_ += n;
    return s;
  }

  bool done() const { return pos_ == buf_.size(); }

 private:
  void need(std::size_t n) {
    if (buf_.size() - pos_ < n)
      throw CheckpointError(path_ + ": truncated checkpoint");
  }

  const std::string& buf_;
  std::string path_;
  std::size_t pos_ = 0;
};

}  // namespace

void save_checkpoint(const std::string& path,
                     const std::vector<std::pair<std::string, TensorPtr>>& tensors,
                     const std::string& meta_json) {
  std::string out;
  out += "SDIL";
  put_u32(out, kCheckpointVersion);
  put_u32(out, std::uint32_t(tensors.size()));
  for (const auto& [name, t] : tensors) {
    if (!t) throw UsageError("save_checkpoint: null tensor '" + name + "'");
    put_u32(out, std::uint32_t(name.size()));
    out += name;
    put_u32(out, std::uint32_t(t->shape.size()));
    for (int e : t->shape) put_u32(out, std::uint32_t(e));
    for (double v : t->data) put_f32(out, float(v));
  }
  put_u32(out, std::uint32_t(meta_json.size()));
  out += meta_json;

  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw CheckpointError(path + ": cannot open for writing");
  f.write(out.data(), std::streamsize(out.size()));
  if (!f) throw CheckpointError(path + ": write failed");
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw CheckpointError(path + ": cannot open");
  std::string buf((std::istreambuf_iterator<char>(f)),
                  std::istreambuf_iterator<char>());
  Reader r(buf, path);

  if (r.bytes(4) != "SDIL") throw CheckpointError(path + ": bad magic");
  const std::uint32_t version = r.u32();
  if (version != kCheckpointVersion)
    throw CheckpointError(path + ": unsupported format version " +
                          std::to_string(version));

  Checkpoint ckpt;
  const std::uint32_t count = r.u32();
  for (std::uint32_t i = 0; i < count; ++i) {
    std::string name = r.bytes(r.u32());
    const std::uint32_t rank = r.u32();
    if (rank == 0 || rank > 8)
      throw CheckpointError(path + ": implausible tensor rank for '" + name + "'");
    std::vector<int> shape;
    std::size_t n = 1;
    for (std::uint32_t k = 0; k < rank; ++k) {
      const std::uint32_t e = r.u32();
      if (e == 0 || e > std::uint32_t(std::numeric_limits<int>::max()))
        throw CheckpointError(path + ": bad extent for '" + name + "'");
      shape.push_back(int(e));
      n *= e;
    }
    auto t = tensor(shape, 0.0);
    for (std::size_t k = 0; k < n; ++k) t->data[k] = double(r.f32());
    ckpt.tensors.emplace_back(std::move(name), std::move(t));
  }
  ckpt.meta_json = r.bytes(r.u32());
  if (!r.done()) throw CheckpointError(path + ": trailing bytes after metadata");
  return ckpt;
}

void restore_params(const std::vector<std::pair<std::string, TensorPtr>>& params,
                    const Checkpoint& ckpt) {
  std::unordered_map<std::string, TensorPtr> by_name;
  for (const auto& [name, t] : ckpt.tensors)
    if (!by_name.emplace(name, t).second)
      throw CheckpointError("duplicate tensor '" + name + "' in checkpoint");

  if (by_name.size() != params.size())
    throw CheckpointError("checkpoint holds " + std::to_string(by_name.size()) +
                          " tensors, model expects " + std::to_string(params.size()));
  for (const auto& [name, dst] : params) {
    auto it = by_name.find(name);
    if (it == by_name.end())
      throw CheckpointError("checkpoint is missing tensor '" + name + "'");
    const TensorPtr& src = it->second;
    if (src->shape != dst->shape)
      throw CheckpointError("tensor '" + name +
                            "' shape differs from the model (vocabulary mismatch?)");
    dst->data = src->data;
  }
}

}  // namespace sdil
