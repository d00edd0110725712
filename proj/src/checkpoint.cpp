#include "hebbdqn/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

#include "hebbdqn/error.hpp"

namespace hebbdqn {

namespace {

template <typename T>
void PutLittle(std::string& out, T value) {
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    out.push_back(static_cast<char>((value >> (8 * i)) & 0xFF));
  }
}

class Reader {
 public:
  explicit Reader(const std::string& bytes) : bytes_(bytes) {}

  template <typename T>
  T Little() {
    Need(sizeof(T));
    T value = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i) {
      value |= static_cast<T>(static_cast<unsigned char>(bytes_[pos_ + i])) << (8 * i);
    }
    pos_ += sizeof(T);
    return value;
  }

  std::string Bytes(std::size_t n) {
    Need(n);
    std::string out = bytes_.substr(pos_, n);
    pos_ += n;
    return out;
  }

  bool done() const { return pos_ == bytes_.size(); }

 private:
  void Need(std::size_t n) const {
    if (bytes_.size() - pos_ < n) Fail(ErrorKind::kParse, "checkpoint truncated");
  }

  const std::string& bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

const Tensor* Checkpoint::Find(const std::string& name) const {
  for (const auto& t : tensors) {
    if (t.name == name) return &t.value;
  }
  return nullptr;
}

std::string EncodeCheckpoint(const Checkpoint& checkpoint) {
  std::string out(kCheckpointMagic, sizeof(kCheckpointMagic));
  PutLittle<std::uint32_t>(out, kCheckpointVersion);
  PutLittle<std::uint32_t>(out, static_cast<std::uint32_t>(checkpoint.metadata.size()));
  out += checkpoint.metadata;
  PutLittle<std::uint32_t>(out, static_cast<std::uint32_t>(checkpoint.tensors.size()));
  for (const auto& [name, value] : checkpoint.tensors) {
    PutLittle<std::uint32_t>(out, static_cast<std::uint32_t>(name.size()));
    out += name;
    PutLittle<std::uint32_t>(out, static_cast<std::uint32_t>(value.rank()));
    for (std::size_t d : value.shape()) PutLittle<std::uint64_t>(out, d);
    for (double x : value.data()) PutLittle<std::uint64_t>(out, std::bit_cast<std::uint64_t>(x));
  }
  return out;
}

Checkpoint DecodeCheckpoint(const std::string& bytes) {
  Reader in(bytes);
  if (in.Bytes(sizeof(kCheckpointMagic)) != std::string(kCheckpointMagic, sizeof(kCheckpointMagic))) {
    Fail(ErrorKind::kParse, "not a checkpoint file (bad magic)");
  }
  const auto version = in.Little<std::uint32_t>();
  if (version != kCheckpointVersion) {
    Fail(ErrorKind::kParse, "unsupported checkpoint version " + std::to_string(version));
  }
  Checkpoint checkpoint;
  checkpoint.metadata = in.Bytes(in.Little<std::uint32_t>());
  const auto count = in.Little<std::uint32_t>();
  for (std::uint32_t i = 0; i < count; ++i) {
    NamedTensor entry;
    entry.name = in.Bytes(in.Little<std::uint32_t>());
    const auto rank = in.Little<std::uint32_t>();
    Shape shape(rank);
    for (auto& d : shape) d = static_cast<std::size_t>(in.Little<std::uint64_t>());
    std::vector<double> data(ShapeProduct(shape));
    for (double& x : data) x = std::bit_cast<double>(in.Little<std::uint64_t>());
    entry.value = Tensor(std::move(shape), std::move(data));
    checkpoint.tensors.push_back(std::move(entry));
  }
  if (!in.done()) Fail(ErrorKind::kParse, "trailing bytes after checkpoint payload");
  return checkpoint;
}

void SaveCheckpoint(const std::string& path, const Checkpoint& checkpoint) {
  const std::string bytes = EncodeCheckpoint(checkpoint);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) Fail(ErrorKind::kIo, "cannot write checkpoint '" + path + "'");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) Fail(ErrorKind::kIo, "short write to checkpoint '" + path + "'");
}

Checkpoint LoadCheckpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) Fail(ErrorKind::kIo, "cannot open checkpoint '" + path + "'");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return DecodeCheckpoint(buffer.str());
}

}  // namespace hebbdqn
