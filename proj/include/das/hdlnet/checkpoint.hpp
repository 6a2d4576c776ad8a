#pragma once

#include "das/hdlnet/network.hpp"

#include <filesystem>
#include <string>
#include <string_view>

namespace das::hdl {

inline constexpr char kCheckpointMagic[4] = {'H', 'D', 'L', 'N'};
inline constexpr std::uint16_t kCheckpointVersion = 1;

struct Checkpoint {
    NetConfig config;
    ModelParams params;
};

/// Layout (all little-endian):
///   "HDLN", u16 version,
///   u32 x 10: input_channels input_time base_channels depth conv_h conv_w
///             pool_h pool_w lstm_units dense_width, u8 lstm_axis,
///   u32 tensor count, then per tensor:
///   u16 name length, name bytes, u8 rank, u32 dims[rank], f32 values.
/// Values are stored at 32-bit precision.
std::string encode_checkpoint(const NetConfig& config, const ModelParams& params);
Checkpoint decode_checkpoint(std::string_view bytes);

void write_checkpoint(const std::filesystem::path& path, const NetConfig& config,
                      const ModelParams& params);
Checkpoint read_checkpoint(const std::filesystem::path& path);

} // namespace das::hdl
