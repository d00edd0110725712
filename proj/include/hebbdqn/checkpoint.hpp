#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "hebbdqn/tensor.hpp"

namespace hebbdqn {

// Binary parameter file, all integers little-endian:
//
//   8 bytes   magic "HDQNCKPT"
//   u32       format version (1)
//   u32       metadata length L, then L bytes of UTF-8 metadata (JSON text)
//   u32       parameter count P
//   P times:
//     u32     name length, then name bytes
//     u32     rank R, then R x u64 dims
//     prod(dims) x f64 raw IEEE-754 values
struct NamedTensor {
  std::string name;
  Tensor value;
};

struct Checkpoint {
  std::string metadata;
  std::vector<NamedTensor> tensors;

  const Tensor* Find(const std::string& name) const;
};

inline constexpr char kCheckpointMagic[8] = {'H', 'D', 'Q', 'N', 'C', 'K', 'P', 'T'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

void SaveCheckpoint(const std::string& path, const Checkpoint& checkpoint);
Checkpoint LoadCheckpoint(const std::string& path);

std::string EncodeCheckpoint(const Checkpoint& checkpoint);
Checkpoint DecodeCheckpoint(const std::string& bytes);

}  // namespace hebbdqn
