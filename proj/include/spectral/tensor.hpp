#pragma once

#include "spectral/error.hpp"

#include <Eigen/Dense>

#include <string>
#include <vector>

namespace spectral {

/// Dense (batch, channels, length) array, length fastest. One sample is a
/// contiguous channels x length row-major block, so flattening a sample is a
/// no-op and a (out, in, k) weight tensor is an out x (in*k) row-major matrix.
template <typename Scalar>
class Tensor3 {
public:
  using RowMajorMatrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  using MatrixMap = Eigen::Map<RowMajorMatrix>;
  using ConstMatrixMap = Eigen::Map<const RowMajorMatrix>;

  Tensor3() = default;
  Tensor3(Eigen::Index batch, Eigen::Index channels, Eigen::Index length, Scalar fill = Scalar(0))
      : batch_(batch), channels_(channels), length_(length),
        data_(static_cast<std::size_t>(batch * channels * length), fill) {
    if (batch < 0 || channels < 0 || length < 0) throw ShapeError("negative tensor dimension");
  }

  Eigen::Index batch() const { return batch_; }
  Eigen::Index channels() const { return channels_; }
  Eigen::Index length() const { return length_; }
  Eigen::Index size() const { return static_cast<Eigen::Index>(data_.size()); }

  Scalar& operator()(Eigen::Index b, Eigen::Index c, Eigen::Index t) {
    return data_[static_cast<std::size_t>((b * channels_ + c) * length_ + t)];
  }
  const Scalar& operator()(Eigen::Index b, Eigen::Index c, Eigen::Index t) const {
    return data_[static_cast<std::size_t>((b * channels_ + c) * length_ + t)];
  }

  Scalar* data() { return data_.data(); }
  const Scalar* data() const { return data_.data(); }

  /// channels x length view of one sample.
  MatrixMap sample(Eigen::Index b) { return MatrixMap(data() + b * channels_ * length_, channels_, length_); }
  ConstMatrixMap sample(Eigen::Index b) const {
    return ConstMatrixMap(data() + b * channels_ * length_, channels_, length_);
  }

  /// batch x (channels*length) view; row b is sample b flattened channel-major.
  MatrixMap flat() { return MatrixMap(data(), batch_, channels_ * length_); }
  ConstMatrixMap flat() const { return ConstMatrixMap(data(), batch_, channels_ * length_); }

  Eigen::Map<Eigen::Matrix<Scalar, Eigen::Dynamic, 1>> values() {
    return Eigen::Map<Eigen::Matrix<Scalar, Eigen::Dynamic, 1>>(data(), size());
  }
  Eigen::Map<const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>> values() const {
    return Eigen::Map<const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>>(data(), size());
  }

  bool all_finite() const { return values().allFinite(); }

  std::string shape_string() const {
    return "(" + std::to_string(batch_) + ", " + std::to_string(channels_) + ", " +
           std::to_string(length_) + ")";
  }

  /// Wraps a batch x features matrix as (batch, 1, features).
  template <typename Derived>
  static Tensor3 from_rows(const Eigen::MatrixBase<Derived>& rows) {
    Tensor3 out(rows.rows(), 1, rows.cols());
    out.flat() = rows;
    return out;
  }

private:
  Eigen::Index batch_ = 0;
  Eigen::Index channels_ = 0;
  Eigen::Index length_ = 0;
  std::vector<Scalar> data_;
};

using Tensor3d = Tensor3<double>;

}  // namespace spectral
