#include "spectral/checkpoint.hpp"

#include "spectral/error.hpp"

#include <algorithm>
#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

namespace spectral {

namespace {

constexpr char kMagic[8] = {'S', 'P', 'B', 'C', 'K', 'P', 'T', '\n'};

template <typename T>
void put_le(std::string& out, T value) {
  static_assert(std::is_trivially_copyable_v<T>);
  unsigned char bytes[sizeof(T)];
  std::memcpy(bytes, &value, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes, bytes + sizeof(T));
  out.append(reinterpret_cast<const char*>(bytes), sizeof(T));
}

template <typename T>
T get_le(const std::string& in, std::size_t offset) {
  if (offset + sizeof(T) > in.size()) throw FormatError("checkpoint truncated");
  unsigned char bytes[sizeof(T)];
  std::memcpy(bytes, in.data() + offset, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes, bytes + sizeof(T));
  T value;
  std::memcpy(&value, bytes, sizeof(T));
  return value;
}

}  // namespace

void Checkpoint::add(std::string name, std::vector<std::int64_t> shape,
                     const Eigen::VectorXd& values) {
  std::int64_t count = 1;
  for (auto d : shape) count *= d;
  if (count != values.size()) throw ShapeError("checkpoint tensor " + name + ": shape/size mismatch");
  if (contains(name)) throw ArgumentError("checkpoint tensor " + name + " added twice");
  tensors.push_back({std::move(name), std::move(shape), values});
}

void Checkpoint::add_matrix(std::string name, const Eigen::MatrixXd& m) {
  add(std::move(name), {m.rows(), m.cols()}, m.reshaped());
}

bool Checkpoint::contains(const std::string& name) const {
  for (const auto& t : tensors) {
    if (t.name == name) return true;
  }
  return false;
}

const Checkpoint::Tensor& Checkpoint::get(const std::string& name) const {
  for (const auto& t : tensors) {
    if (t.name == name) return t;
  }
  throw FormatError("checkpoint has no tensor `" + name + "`");
}

Eigen::MatrixXd Checkpoint::matrix(const std::string& name) const {
  const auto& t = get(name);
  if (t.shape.size() != 2) throw FormatError("checkpoint tensor `" + name + "` is not a matrix");
  return t.values.reshaped(t.shape[0], t.shape[1]);
}

std::string Checkpoint::to_bytes() const {
  nlohmann::json header;
  header["algorithm"] = algorithm;
  header["meta"] = meta;
  header["tensors"] = nlohmann::json::array();
  std::int64_t offset = 0;
  for (const auto& t : tensors) {
    header["tensors"].push_back(
        {{"name", t.name}, {"shape", t.shape}, {"offset", offset}, {"count", t.values.size()}});
    offset += t.values.size();
  }
  const std::string text = header.dump();
  std::string out(kMagic, sizeof kMagic);
  put_le<std::uint32_t>(out, kFormatVersion);
  put_le<std::uint64_t>(out, text.size());
  out += text;
  out.reserve(out.size() + static_cast<std::size_t>(offset) * 8);
  for (const auto& t : tensors) {
    for (Eigen::Index i = 0; i < t.values.size(); ++i) put_le<double>(out, t.values[i]);
  }
  return out;
}

Checkpoint Checkpoint::from_bytes(const std::string& bytes) {
  if (bytes.size() < 20 || std::memcmp(bytes.data(), kMagic, sizeof kMagic) != 0) {
    throw FormatError("not a model checkpoint (bad magic)");
  }
  const auto version = get_le<std::uint32_t>(bytes, 8);
  if (version != kFormatVersion) {
    throw FormatError("checkpoint format version " + std::to_string(version) +
                      " is not supported (expected " + std::to_string(kFormatVersion) + ")");
  }
  const auto header_len = get_le<std::uint64_t>(bytes, 12);
  if (20 + header_len > bytes.size()) throw FormatError("checkpoint header truncated");
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(bytes.substr(20, header_len));
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("checkpoint header is not valid JSON: ") + e.what());
  }
  const std::size_t payload = 20 + header_len;
  Checkpoint ckpt;
  try {
    ckpt.algorithm = header.at("algorithm").get<std::string>();
    ckpt.meta = header.at("meta");
    for (const auto& entry : header.at("tensors")) {
      Tensor t;
      t.name = entry.at("name").get<std::string>();
      t.shape = entry.at("shape").get<std::vector<std::int64_t>>();
      const auto off = entry.at("offset").get<std::int64_t>();
      const auto count = entry.at("count").get<std::int64_t>();
      if (off < 0 || count < 0) throw FormatError("checkpoint tensor with negative extent");
      t.values.resize(count);
      for (std::int64_t i = 0; i < count; ++i) {
        t.values[i] = get_le<double>(bytes, payload + static_cast<std::size_t>(off + i) * 8);
      }
      ckpt.tensors.push_back(std::move(t));
    }
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("malformed checkpoint header: ") + e.what());
  }
  return ckpt;
}

void Checkpoint::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot write " + path.string());
  const std::string bytes = to_bytes();
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw FormatError("write failed for " + path.string());
}

Checkpoint Checkpoint::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return from_bytes(buf.str());
}

}  // namespace spectral
