#include "dsn/model/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <sstream>
#include <string>

#include "dsn/errors.hpp"

namespace dsn::model {
namespace {

constexpr char kMagic[4] = {'D', 'S', 'N', 'P'};

template <typename T>
void put(std::vector<std::uint8_t>& out, T value) {
  static_assert(std::endian::native == std::endian::little, "little-endian host required");
  std::uint8_t raw[sizeof(T)];
  std::memcpy(raw, &value, sizeof(T));
  out.insert(out.end(), raw, raw + sizeof(T));
}

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

  template <typename T>
  T get(const char* what) {
    need(sizeof(T), what);
    T value;
    std::memcpy(&value, bytes_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return value;
  }

  std::string get_string(std::size_t n, const char* what) {
    need(n, what);
    std::string s(reinterpret_cast<const char*>(bytes_.data() + pos_), n);
    pos_ += n;
    return s;
  }

  std::size_t pos() const { return pos_; }
  bool at_end() const { return pos_ == bytes_.size(); }

 private:
  void need(std::size_t n, const char* what) {
    if (bytes_.size() - pos_ < n) {
      throw FormatError(std::string("checkpoint truncated while reading ") + what, bytes_.size());
    }
  }

  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

std::vector<std::uint8_t> encode_checkpoint(const ModelConfig& config, const DsnParams& params) {
  std::vector<std::uint8_t> out(std::begin(kMagic), std::end(kMagic));
  put<std::uint32_t>(out, kCheckpointVersion);
  put<std::uint64_t>(out, config.digest());
  put<std::uint32_t>(out, static_cast<std::uint32_t>(params.named.size()));
  for (const auto& [name, t] : params.named) {
    put<std::uint32_t>(out, static_cast<std::uint32_t>(name.size()));
    out.insert(out.end(), name.begin(), name.end());
    put<std::uint32_t>(out, static_cast<std::uint32_t>(t.rank()));
    for (auto dim : t.shape()) put<std::uint64_t>(out, dim);
    for (double v : t.values()) put<double>(out, v);
  }
  return out;
}

void decode_checkpoint(std::span<const std::uint8_t> bytes, const ModelConfig& config,
                       DsnParams& params) {
  Reader in(bytes);
  if (in.get_string(4, "magic") != std::string(kMagic, 4)) {
    throw FormatError("not a checkpoint file (bad magic)", 0);
  }
  const auto version = in.get<std::uint32_t>("version");
  if (version != kCheckpointVersion) {
    throw FormatError("unsupported checkpoint version " + std::to_string(version), 4);
  }
  const auto digest = in.get<std::uint64_t>("config digest");
  if (digest != config.digest()) {
    throw ConfigError("checkpoint was written for a different model configuration (digest " +
                      std::to_string(digest) + ", expected " + std::to_string(config.digest()) +
                      ")");
  }
  const auto count = in.get<std::uint32_t>("record count");
  if (count != params.named.size()) {
    throw ConfigError("checkpoint holds " + std::to_string(count) + " tensors, model has " +
                      std::to_string(params.named.size()));
  }
  // Decode everything before touching params so a bad file leaves them intact.
  std::vector<std::vector<double>> values(count);
  for (std::uint32_t i = 0; i < count; ++i) {
    const auto& [name, t] = params.named[i];
    const auto name_len = in.get<std::uint32_t>("name length");
    const auto stored = in.get_string(name_len, "name");
    if (stored != name) {
      throw ConfigError("checkpoint record " + std::to_string(i) + " is '" + stored +
                        "', expected '" + name + "'");
    }
    const auto rank = in.get<std::uint32_t>("rank");
    ad::Shape shape(rank);
    for (auto& dim : shape) dim = in.get<std::uint64_t>("dims");
    if (shape != t.shape()) {
      throw ConfigError("checkpoint tensor " + name + " has shape " + ad::shape_to_string(shape) +
                        ", model expects " + ad::shape_to_string(t.shape()));
    }
    values[i].resize(t.numel());
    for (auto& v : values[i]) v = in.get<double>("payload");
  }
  if (!in.at_end()) throw FormatError("trailing bytes after the last checkpoint record", in.pos());
  params.restore(values);
}

void save_checkpoint(const std::filesystem::path& path, const ModelConfig& config,
                     const DsnParams& params) {
  const auto bytes = encode_checkpoint(config, params);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot open " + path.string() + " for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw DataError("failed writing " + path.string());
}

void load_checkpoint(const std::filesystem::path& path, const ModelConfig& config,
                     DsnParams& params) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open checkpoint " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  decode_checkpoint(bytes, config, params);
}

}  // namespace dsn::model
