#include "dsn/data/embedding_file.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <string>

#include "dsn/errors.hpp"

namespace dsn::data {
namespace {

template <typename T>
void put_le(std::vector<std::uint8_t>& out, T value) {
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    out.push_back(static_cast<std::uint8_t>((value >> (8 * i)) & 0xFF));
  }
}

template <typename T>
T get_le(std::span<const std::uint8_t> bytes, std::size_t offset) {
  T value = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    value |= static_cast<T>(bytes[offset + i]) << (8 * i);
  }
  return value;
}

}  // namespace

std::vector<std::uint8_t> encode_embedding_file(const EmbeddingMatrix& m) {
  if (m.values.size() != m.count * m.dim) {
    throw DataError("embedding matrix holds " + std::to_string(m.values.size()) +
                    " values, expected " + std::to_string(m.count * m.dim));
  }
  std::vector<std::uint8_t> out;
  out.reserve(kEmbeddingHeaderBytes + m.values.size() * 4);
  for (char c : {'D', 'S', 'N', 'E'}) out.push_back(static_cast<std::uint8_t>(c));
  put_le<std::uint32_t>(out, kEmbeddingVersion);
  put_le<std::uint64_t>(out, m.count);
  put_le<std::uint32_t>(out, m.dim);
  out.push_back(kDtypeF32);
  for (float v : m.values) put_le<std::uint32_t>(out, std::bit_cast<std::uint32_t>(v));
  return out;
}

EmbeddingMatrix decode_embedding_file(std::span<const std::uint8_t> bytes,
                                      std::optional<std::uint32_t> expected_dim) {
  if (bytes.size() < kEmbeddingHeaderBytes) {
    throw FormatError("embedding file header truncated", bytes.size());
  }
  if (std::memcmp(bytes.data(), "DSNE", 4) != 0) {
    throw FormatError("embedding file has bad magic", 0);
  }
  const auto version = get_le<std::uint32_t>(bytes, 4);
  if (version != kEmbeddingVersion) {
    throw FormatError("unsupported embedding file version " + std::to_string(version), 4);
  }
  EmbeddingMatrix m;
  m.count = get_le<std::uint64_t>(bytes, 8);
  m.dim = get_le<std::uint32_t>(bytes, 16);
  if (bytes[20] != kDtypeF32) {
    throw FormatError("unsupported embedding dtype " + std::to_string(bytes[20]), 20);
  }
  if (m.dim != 0 && m.count > (UINT64_MAX / 4) / m.dim) {
    throw FormatError("embedding file declares an impossible payload size", 8);
  }
  const std::uint64_t payload = bytes.size() - kEmbeddingHeaderBytes;
  const std::uint64_t elements = m.count * m.dim;
  if (payload < elements * 4) {
    throw FormatError("embedding payload truncated: expected " + std::to_string(elements * 4) +
                          " bytes, file ends early",
                      bytes.size());
  }
  if (payload > elements * 4) {
    throw FormatError("embedding file has trailing bytes", kEmbeddingHeaderBytes + elements * 4);
  }
  if (expected_dim && *expected_dim != m.dim) {
    throw DataError("embedding dim " + std::to_string(m.dim) + " does not match configured " +
                    std::to_string(*expected_dim));
  }
  m.values.resize(elements);
  for (std::uint64_t i = 0; i < elements; ++i) {
    m.values[i] = std::bit_cast<float>(get_le<std::uint32_t>(bytes, kEmbeddingHeaderBytes + 4 * i));
  }
  return m;
}

void write_embedding_file(const std::filesystem::path& path, const EmbeddingMatrix& m) {
  const auto bytes = encode_embedding_file(m);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot open " + path.string() + " for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw DataError("failed writing " + path.string());
}

EmbeddingMatrix read_embedding_file(const std::filesystem::path& path,
                                    std::optional<std::uint32_t> expected_dim) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  try {
    return decode_embedding_file(bytes, expected_dim);
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.detail(), e.offset());
  }
}

}  // namespace dsn::data
