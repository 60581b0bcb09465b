#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "dsn/model/config.hpp"
#include "dsn/model/params.hpp"

namespace dsn::model {

// Little-endian layout:
//   "DSNP" | u32 version | u64 config digest | u32 record count
//   per record: u32 name length | name | u32 rank | rank x u64 dims | f64 payload
inline constexpr std::uint32_t kCheckpointVersion = 1;

std::vector<std::uint8_t> encode_checkpoint(const ModelConfig& config, const DsnParams& params);

// Copies stored values into `params`, which must have been created from a
// config with the same digest. Throws FormatError for malformed bytes and
// ConfigError for a digest, name or shape mismatch.
void decode_checkpoint(std::span<const std::uint8_t> bytes, const ModelConfig& config,
                       DsnParams& params);

void save_checkpoint(const std::filesystem::path& path, const ModelConfig& config,
                     const DsnParams& params);
void load_checkpoint(const std::filesystem::path& path, const ModelConfig& config,
                     DsnParams& params);

}  // namespace dsn::model
