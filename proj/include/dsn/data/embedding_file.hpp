#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <vector>

namespace dsn::data {

// On-disk layout (little-endian):
//   offset  0: magic "DSNE"
//   offset  4: u32 version (= 1)
//   offset  8: u64 row count
//   offset 16: u32 dim
//   offset 20: u8  dtype (1 = f32)
//   offset 21: count * dim f32 values, row-major
inline constexpr std::uint32_t kEmbeddingVersion = 1;
inline constexpr std::uint8_t kDtypeF32 = 1;
inline constexpr std::size_t kEmbeddingHeaderBytes = 21;

struct EmbeddingMatrix {
  std::uint64_t count = 0;
  std::uint32_t dim = 0;
  std::vector<float> values;

  std::span<const float> row(std::size_t i) const {
    return std::span<const float>(values).subspan(i * dim, dim);
  }
};

std::vector<std::uint8_t> encode_embedding_file(const EmbeddingMatrix& m);

// Throws FormatError (with byte offset) for bad magic, version, dtype or a
// truncated payload; DataError when `expected_dim` is given and differs.
EmbeddingMatrix decode_embedding_file(std::span<const std::uint8_t> bytes,
                                      std::optional<std::uint32_t> expected_dim = std::nullopt);

void write_embedding_file(const std::filesystem::path& path, const EmbeddingMatrix& m);
EmbeddingMatrix read_embedding_file(const std::filesystem::path& path,
                                    std::optional<std::uint32_t> expected_dim = std::nullopt);

}  // namespace dsn::data
