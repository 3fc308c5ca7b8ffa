#pragma once

#include <map>
#include <string>
#include <vector>

#include "common.hpp"

namespace adec {

struct NamedTensor {
  std::string name;
  Shape shape;
  std::vector<double> data;
};

// On-disk layout (little-endian):
//   "ADEC" | u32 version | u32 tensor_count
//   per tensor: u32 name_len | name | u32 rank | u64 extents[rank] | f64 data
//   u64 text_len | text (key=value lines, sorted)
//   u32 crc32 of everything above
struct Checkpoint {
  std::vector<NamedTensor> tensors;
  std::map<std::string, std::string> meta;

  void add(std::string name, Shape shape, std::vector<double> data);
  const NamedTensor* find(const std::string& name) const;
  const NamedTensor& require(const std::string& name) const;
};

inline constexpr std::uint32_t kCheckpointVersion = 1;

void save_checkpoint(const std::string& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::string& path);

}  // namespace adec
