#include "dmn/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

namespace dmn {

namespace {

void put_u32(std::string& out, std::uint32_t v) {
  for (int k = 0; k < 4; ++k) out.push_back(static_cast<char>((v >> (8 * k)) & 0xFF));
}

void put_u64(std::string& out, std::uint64_t v) {
  for (int k = 0; k < 8; ++k) out.push_back(static_cast<char>((v >> (8 * k)) & 0xFF));
}

void put_text(std::string& out, const std::string& s) {
  put_u32(out, static_cast<std::uint32_t>(s.size()));
  out += s;
}

class Reader {
 public:
  Reader(std::string_view bytes, const std::string& source) : bytes_(bytes), source_(source) {}

  [[noreturn]] void fail(const std::string& what) const {
    throw CheckpointError(source_ + ": " + what);
  }

  void need(std::size_t n, const char* what) const {
    if (bytes_.size() - pos_ < n) fail(std::string("truncated checkpoint while reading ") + what);
  }

  std::uint64_t uint(std::size_t width, const char* what) {
    need(width, what);
    std::uint64_t v = 0;
    for (std::size_t k = 0; k < width; ++k) {
      v |= static_cast<std::uint64_t>(static_cast<unsigned char>(bytes_[pos_ + k])) << (8 * k);
    }
    pos_ += width;
    return v;
  }

  std::string text(const char* what) {
    const auto n = uint(4, what);
    need(n, what);
    std::string s(bytes_.substr(pos_, n));
    pos_ += n;
    return s;
  }

  std::string_view raw(std::size_t n, const char* what) {
    need(n, what);
    auto s = bytes_.substr(pos_, n);
    pos_ += n;
    return s;
  }

  bool done() const { return pos_ == bytes_.size(); }

 private:
  std::string_view bytes_;
  std::size_t pos_ = 0;
  const std::string& source_;
};

}  // namespace

std::string encode_checkpoint(const Checkpoint& ckpt) {
  std::string out(kCheckpointMagic, sizeof kCheckpointMagic);
  put_u32(out, ckpt.version);
  put_text(out, ckpt.model);
  put_text(out, ckpt.config);
  put_u32(out, static_cast<std::uint32_t>(ckpt.blobs.size()));
  for (const auto& b : ckpt.blobs) {
    put_text(out, b.name);
    put_u32(out, static_cast<std::uint32_t>(b.dims.size()));
    for (auto d : b.dims) put_u64(out, d);
    put_u64(out, b.values.size());
    for (double v : b.values) put_u64(out, std::bit_cast<std::uint64_t>(v));
  }
  return out;
}

Checkpoint decode_checkpoint(std::string_view bytes, const std::string& source) {
  Reader rd(bytes, source);
  if (rd.raw(sizeof kCheckpointMagic, "magic") !=
      std::string_view(kCheckpointMagic, sizeof kCheckpointMagic)) {
    rd.fail("not a checkpoint (bad magic)");
  }
  Checkpoint ckpt;
  ckpt.version = static_cast<std::uint32_t>(rd.uint(4, "version"));
  if (ckpt.version != kCheckpointVersion) {
    rd.fail("unsupported checkpoint version " + std::to_string(ckpt.version));
  }
  ckpt.model = rd.text("model description");
  ckpt.config = rd.text("config echo");
  const auto count = rd.uint(4, "blob count");
  for (std::uint64_t b = 0; b < count; ++b) {
    CheckpointBlob blob;
    blob.name = rd.text("blob name");
    const auto ndims = rd.uint(4, "blob rank");
    std::uint64_t expected = 1;
    for (std::uint64_t d = 0; d < ndims; ++d) {
      blob.dims.push_back(rd.uint(8, "blob dims"));
      expected *= blob.dims.back();
    }
    const auto n = rd.uint(8, "blob size");
    if (n != expected) rd.fail("blob " + blob.name + " size does not match its dims");
    rd.need(n * 8, "blob values");
    blob.values.resize(n);
    for (auto& v : blob.values) v = std::bit_cast<double>(rd.uint(8, "blob values"));
    ckpt.blobs.push_back(std::move(blob));
  }
  if (!rd.done()) rd.fail("trailing bytes after the last blob");
  return ckpt;
}

void write_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  const std::string bytes = encode_checkpoint(ckpt);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw CheckpointError(path.string() + ": cannot open for writing");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw CheckpointError(path.string() + ": write failed");
}

Checkpoint read_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError(path.string() + ": cannot open");
  const std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return decode_checkpoint(bytes, path.string());
}

std::vector<CheckpointBlob> snapshot_parameters(Network& net) {
  std::vector<CheckpointBlob> blobs;
  for (auto* p : net.parameters()) blobs.push_back(CheckpointBlob{p->name, p->dims, p->value});
  return blobs;
}

void restore_parameters(Network& net, const std::vector<CheckpointBlob>& blobs) {
  const auto params = net.parameters();
  if (params.size() != blobs.size()) {
    throw CheckpointError("checkpoint holds " + std::to_string(blobs.size()) +
                          " parameters but the network has " + std::to_string(params.size()));
  }
  for (std::size_t k = 0; k < params.size(); ++k) {
    if (params[k]->name != blobs[k].name || params[k]->dims != blobs[k].dims) {
      throw CheckpointError("checkpoint parameter " + blobs[k].name +
                            " does not match network parameter " + params[k]->name);
    }
  }
  for (std::size_t k = 0; k < params.size(); ++k) {
    params[k]->value = blobs[k].values;
    params[k]->zero_grad();
    std::fill(params[k]->velocity.begin(), params[k]->velocity.end(), 0.0);
  }
}

}  // namespace dmn
