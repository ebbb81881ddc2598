#include "specmix/checkpoint.hpp"

#include <bit>
#include <cstring>

#include "specmix/io.hpp"

namespace specmix {
namespace {

constexpr char kMagic[4] = {'S', 'M', 'C', 'K'};

template <typename T>
void put(std::vector<std::uint8_t>& out, T v) {
  for (std::size_t i = 0; i < sizeof(T); ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

class Reader {
 public:
  explicit Reader(const std::vector<std::uint8_t>& bytes) : bytes_(bytes) {}

  template <typename T>
  T get() {
    need(sizeof(T));
    T v = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i) v |= static_cast<T>(static_cast<T>(bytes_[pos_ + i]) << (8 * i));
    pos_ += sizeof(T);
    return v;
  }

  std::string str(std::size_t n) {
    need(n);
    std::string s(reinterpret_cast<const char*>(bytes_.data() + pos_), n);
    pos_ += n;
    return s;
  }

  bool done() const { return pos_ == bytes_.size(); }

 private:
  void need(std::size_t n) const {
    if (bytes_.size() - pos_ < n) throw IoError("checkpoint: truncated file");
  }
  const std::vector<std::uint8_t>& bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

std::vector<std::uint8_t> encode_checkpoint(const NamedTensors& tensors) {
  std::vector<std::uint8_t> out(kMagic, kMagic + 4);
  put<std::uint32_t>(out, kCheckpointVersion);
  put<std::uint32_t>(out, static_cast<std::uint32_t>(tensors.size()));
  for (const auto& [name, t] : tensors) {
    put<std::uint32_t>(out, static_cast<std::uint32_t>(name.size()));
    out.insert(out.end(), name.begin(), name.end());
    put<std::uint32_t>(out, static_cast<std::uint32_t>(t.rank()));
    for (auto d : t.shape()) put<std::uint64_t>(out, d);
    for (double v : t.data()) put<std::uint64_t>(out, std::bit_cast<std::uint64_t>(v));
  }
  return out;
}

std::map<std::string, ad::Tensor> decode_checkpoint(const std::vector<std::uint8_t>& bytes) {
  if (bytes.size() < 4 || std::memcmp(bytes.data(), kMagic, 4) != 0) throw IoError("checkpoint: bad magic");
  Reader in(bytes);
  in.str(4);
  const auto version = in.get<std::uint32_t>();
  if (version != kCheckpointVersion) throw IoError("checkpoint: unsupported version " + std::to_string(version));
  const auto count = in.get<std::uint32_t>();
  std::map<std::string, ad::Tensor> out;
  for (std::uint32_t i = 0; i < count; ++i) {
    std::string name = in.str(in.get<std::uint32_t>());
    const auto rank = in.get<std::uint32_t>();
    if (rank > 8) throw IoError("checkpoint: implausible rank for " + name);
    ad::Shape shape(rank);
    for (auto& d : shape) d = in.get<std::uint64_t>();
    std::vector<double> data(ad::numel_of(shape));
    for (auto& v : data) v = std::bit_cast<double>(in.get<std::uint64_t>());
    if (!out.emplace(name, ad::Tensor::from(std::move(shape), std::move(data))).second) {
      throw IoError("checkpoint: duplicate tensor " + name);
    }
  }
  if (!in.done()) throw IoError("checkpoint: trailing bytes");
  return out;
}

void save_checkpoint(const NamedTensors& tensors, const std::filesystem::path& path) {
  write_file(path, encode_checkpoint(tensors));
}

std::map<std::string, ad::Tensor> load_checkpoint(const std::filesystem::path& path) {
  return decode_checkpoint(read_file(path));
}

}  // namespace specmix
