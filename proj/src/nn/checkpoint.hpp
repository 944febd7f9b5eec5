#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <vector>

#include "nn/model.hpp"

namespace gaitfuse::nn {

inline constexpr char kCheckpointMagic[4] = {'G', 'F', 'C', 'K'};
inline constexpr std::uint16_t kCheckpointVersion = 1;

// Little-endian layout:
//   "GFCK" | u16 version | u32 layer_count | u64 seed | u8 rank | u32 dims[rank]
//   | layer records | u8 has_head | [head model, same layout minus magic/version]
// Layer record: u8 kind | u8 trainable | u32 out_channels kernel_h kernel_w
//   stride pad units | u64 n | f64 weight[n] | u64 m | f64 bias[m]
struct Checkpoint {
  Model trunk;
  std::optional<Model> head;
};

std::vector<std::uint8_t> save_checkpoint(const Model& trunk, const Model* head = nullptr);

// Distinct errors: CheckpointMagic, CheckpointVersion, CheckpointTruncated,
// CheckpointFormat (inconsistent contents or trailing bytes).
Checkpoint load_checkpoint(std::span<const std::uint8_t> bytes);

void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);
std::vector<std::uint8_t> read_file(const std::filesystem::path& path);

}  // namespace gaitfuse::nn
