#pragma once

// Model checkpoint format: "BFSM" | version u32 | repeated
// { name_len u16 | name | rank u8 | dims u32[rank] | f64[numel] }, all
// little-endian, read until end of file.

#include <span>
#include <string>
#include <vector>

#include "bfscl/optim.hpp"

namespace bfscl {

inline constexpr std::uint32_t kCheckpointVersion = 1;

struct NamedTensor {
  std::string name;
  Tensor tensor;
};

std::string encode_checkpoint(std::span<const NamedTensor> entries);
std::vector<NamedTensor> decode_checkpoint(std::string_view bytes);

void save_checkpoint(const std::string& path, std::span<const Parameter* const> params);
std::vector<NamedTensor> load_checkpoint(const std::string& path);

// Copies values into `params` by name; shapes must match exactly.
void restore_parameters(std::span<Parameter* const> params, std::span<const NamedTensor> entries);

}  // namespace bfscl
