#pragma once

// Checkpoint file layout (little-endian):
//   "SMCK", u32 version (=1), u32 tensor count, then per tensor
//   u32 name length, name bytes, u32 rank, u64 dims[rank], f64 values.

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "specmix/tensor.hpp"

namespace specmix {

inline constexpr std::uint32_t kCheckpointVersion = 1;

using NamedTensors = std::vector<std::pair<std::string, ad::Tensor>>;

std::vector<std::uint8_t> encode_checkpoint(const NamedTensors& tensors);
std::map<std::string, ad::Tensor> decode_checkpoint(const std::vector<std::uint8_t>& bytes);

void save_checkpoint(const NamedTensors& tensors, const std::filesystem::path& path);
std::map<std::string, ad::Tensor> load_checkpoint(const std::filesystem::path& path);

}  // namespace specmix
