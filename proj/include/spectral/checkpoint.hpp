#pragma once

#include <Eigen/Dense>
#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace spectral {

/// Versioned model container shared by every algorithm.
///
/// Layout (all integers little-endian):
///
///     offset 0   8 bytes   magic "SPBCKPT\n"
///     offset 8   u32       format version (currently 1)
///     offset 12  u64       header length H
///     offset 20  H bytes   UTF-8 JSON header
///     offset 20+H          tensor payload, IEEE-754 binary64 little-endian
///
/// The header holds `algorithm` (cnn, knn, plsda), `meta` (algorithm
/// specific, including the resolved config) and `tensors`: a list of
/// {name, shape, offset, count} where offset/count are in doubles from the
/// start of the payload. Matrices are stored column-major.
class Checkpoint {
public:
  static constexpr std::uint32_t kFormatVersion = 1;

  struct Tensor {
    std::string name;
    std::vector<std::int64_t> shape;
    Eigen::VectorXd values;
  };

  std::string algorithm;
  nlohmann::json meta = nlohmann::json::object();
  std::vector<Tensor> tensors;

  void add(std::string name, std::vector<std::int64_t> shape, const Eigen::VectorXd& values);
  void add_matrix(std::string name, const Eigen::MatrixXd& m);
  const Tensor& get(const std::string& name) const;
  Eigen::MatrixXd matrix(const std::string& name) const;
  bool contains(const std::string& name) const;

  std::string to_bytes() const;
  static Checkpoint from_bytes(const std::string& bytes);

  void save(const std::filesystem::path& path) const;
  static Checkpoint load(const std::filesystem::path& path);
};

}  // namespace spectral
