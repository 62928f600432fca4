#pragma once

#include "spectral/tensor.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

namespace spectral {

// Stateless building blocks of the 1D-CNN. Every forward function has a
// matching backward that takes what the forward produced; the model wires
// them together and owns the caches.

namespace detail {

/// Columns t of the result hold x[b, :, t .. t+k-1] flattened channel-major,
/// i.e. row i*k + tau is x[b, i, t + tau].
template <typename Scalar>
Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> im2col(const Tensor3<Scalar>& x,
                                                             Eigen::Index b,
                                                             Eigen::Index kernel) {
  const Eigen::Index out_len = x.length() - kernel + 1;
  Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> cols(x.channels() * kernel, out_len);
  const auto sample = x.sample(b);
  for (Eigen::Index i = 0; i < x.channels(); ++i) {
    for (Eigen::Index tau = 0; tau < kernel; ++tau) {
      cols.row(i * kernel + tau) = sample.row(i).segment(tau, out_len);
    }
  }
  return cols;
}

}  // namespace detail

/// Valid (unpadded) stride-1 cross-correlation.
/// out[b,o,t] = bias[o] + sum_{i,tau} w[o,i,tau] * x[b,i,t+tau].
template <typename Scalar>
Tensor3<Scalar> conv1d_forward(const Tensor3<Scalar>& x, const Tensor3<Scalar>& weights,
                               const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>& bias) {
  const Eigen::Index kernel = weights.length();
  if (weights.channels() != x.channels()) {
    throw ShapeError("conv1d: input has " + std::to_string(x.channels()) +
                     " channels, weights expect " + std::to_string(weights.channels()));
  }
  if (bias.size() != weights.batch()) throw ShapeError("conv1d: bias size mismatch");
  if (kernel < 1 || x.length() < kernel) {
    throw ShapeError("conv1d: length " + std::to_string(x.length()) + " shorter than kernel " +
                     std::to_string(kernel));
  }
  const Eigen::Index out_len = x.length() - kernel + 1;
  Tensor3<Scalar> out(x.batch(), weights.batch(), out_len);
  const auto w = typename Tensor3<Scalar>::ConstMatrixMap(weights.data(), weights.batch(),
                                                          weights.channels() * kernel);
  for (Eigen::Index b = 0; b < x.batch(); ++b) {
    out.sample(b).noalias() = w * detail::im2col(x, b, kernel);
    out.sample(b).colwise() += bias;
  }
  return out;
}

template <typename Scalar>
struct Conv1dGradients {
  Tensor3<Scalar> input;
  Tensor3<Scalar> weights;
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> bias;
};

template <typename Scalar>
Conv1dGradients<Scalar> conv1d_backward(const Tensor3<Scalar>& x, const Tensor3<Scalar>& weights,
                                        const Tensor3<Scalar>& grad_out) {
  const Eigen::Index kernel = weights.length();
  const Eigen::Index out_len = x.length() - kernel + 1;
  if (grad_out.batch() != x.batch() || grad_out.channels() != weights.batch() ||
      grad_out.length() != out_len) {
    throw ShapeError("conv1d_backward: gradient shape " + grad_out.shape_string() +
                     " does not match forward output");
  }
  Conv1dGradients<Scalar> g{Tensor3<Scalar>(x.batch(), x.channels(), x.length()),
                            Tensor3<Scalar>(weights.batch(), weights.channels(), kernel),
                            Eigen::Matrix<Scalar, Eigen::Dynamic, 1>::Zero(weights.batch())};
  const auto w = typename Tensor3<Scalar>::ConstMatrixMap(weights.data(), weights.batch(),
                                                          weights.channels() * kernel);
  auto gw = typename Tensor3<Scalar>::MatrixMap(g.weights.data(), weights.batch(),
                                                weights.channels() * kernel);
  for (Eigen::Index b = 0; b < x.batch(); ++b) {
    const auto dy = grad_out.sample(b);
    gw.noalias() += dy * detail::im2col(x, b, kernel).transpose();
    g.bias += dy.rowwise().sum();
    const Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> dcols = w.transpose() * dy;
    auto dx = g.input.sample(b);
    for (Eigen::Index i = 0; i < x.channels(); ++i) {
      for (Eigen::Index tau = 0; tau < kernel; ++tau) {
        dx.row(i).segment(tau, out_len) += dcols.row(i * kernel + tau);
      }
    }
  }
  return g;
}

template <typename Scalar>
struct PoolResult {
  Tensor3<Scalar> output;
  /// Position (within the input length) of each window's maximum, laid out
  /// like `output`.
  std::vector<Eigen::Index> argmax;
};

/// Non-overlapping max pooling, stride = pool_size, trailing remainder
/// dropped. Ties pick the first position in the window.
template <typename Scalar>
PoolResult<Scalar> maxpool1d(const Tensor3<Scalar>& x, Eigen::Index pool_size) {
  if (pool_size < 1) throw ShapeError("maxpool1d: pool size must be >= 1");
  const Eigen::Index out_len = x.length() / pool_size;
  if (out_len < 1) {
    throw ShapeError("maxpool1d: length " + std::to_string(x.length()) + " shorter than pool " +
                     std::to_string(pool_size));
  }
  PoolResult<Scalar> r{Tensor3<Scalar>(x.batch(), x.channels(), out_len), {}};
  r.argmax.resize(static_cast<std::size_t>(r.output.size()));
  std::size_t k = 0;
  for (Eigen::Index b = 0; b < x.batch(); ++b) {
    for (Eigen::Index c = 0; c < x.channels(); ++c) {
      for (Eigen::Index t = 0; t < out_len; ++t, ++k) {
        Eigen::Index best = t * pool_size;
        for (Eigen::Index s = best + 1; s < (t + 1) * pool_size; ++s) {
          if (x(b, c, s) > x(b, c, best)) best = s;
        }
        r.output(b, c, t) = x(b, c, best);
        r.argmax[k] = best;
      }
    }
  }
  return r;
}

template <typename Scalar>
Tensor3<Scalar> maxpool1d_backward(const Tensor3<Scalar>& grad_out,
                                   const std::vector<Eigen::Index>& argmax,
                                   Eigen::Index input_length) {
  if (argmax.size() != static_cast<std::size_t>(grad_out.size())) {
    throw ShapeError("maxpool1d_backward: argmax does not match gradient shape");
  }
  Tensor3<Scalar> grad_in(grad_out.batch(), grad_out.channels(), input_length);
  std::size_t k = 0;
  for (Eigen::Index b = 0; b < grad_out.batch(); ++b) {
    for (Eigen::Index c = 0; c < grad_out.channels(); ++c) {
      for (Eigen::Index t = 0; t < grad_out.length(); ++t, ++k) {
        grad_in(b, c, argmax[k]) += grad_out(b, c, t);
      }
    }
  }
  return grad_in;
}

template <typename Derived>
auto relu(const Eigen::MatrixBase<Derived>& x) {
  return x.cwiseMax(typename Derived::Scalar(0));
}

template <typename Scalar>
Tensor3<Scalar> relu(Tensor3<Scalar> x) {
  x.values() = x.values().cwiseMax(Scalar(0));
  return x;
}

/// Gradient through ReLU given the layer's output (or input; same sign).
template <typename Scalar>
Tensor3<Scalar> relu_backward(Tensor3<Scalar> grad, const Tensor3<Scalar>& activation) {
  grad.values() = (activation.values().array() > Scalar(0)).select(grad.values(), Scalar(0));
  return grad;
}

/// Fully connected layer over a batch: rows of `x` are samples, W is
/// out x in. Returns x W^T + b.
template <typename DerivedX, typename DerivedW, typename DerivedB>
Eigen::Matrix<typename DerivedX::Scalar, Eigen::Dynamic, Eigen::Dynamic> dense_forward(
    const Eigen::MatrixBase<DerivedX>& x, const Eigen::MatrixBase<DerivedW>& weights,
    const Eigen::MatrixBase<DerivedB>& bias) {
  if (x.cols() != weights.cols() || bias.size() != weights.rows()) {
    throw ShapeError("dense: input width " + std::to_string(x.cols()) + ", weights " +
                     std::to_string(weights.rows()) + "x" + std::to_string(weights.cols()) +
                     ", bias " + std::to_string(bias.size()));
  }
  Eigen::Matrix<typename DerivedX::Scalar, Eigen::Dynamic, Eigen::Dynamic> out =
      x * weights.transpose();
  out.rowwise() += bias.reshaped().transpose();
  return out;
}

/// Stable softmax of one logit vector (max subtracted first).
template <typename Derived>
Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, 1> softmax(
    const Eigen::MatrixBase<Derived>& logits) {
  using Scalar = typename Derived::Scalar;
  if (logits.size() == 0) throw ShapeError("softmax of an empty vector");
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> e =
      (logits.reshaped().array() - logits.maxCoeff()).exp().matrix();
  return e / e.sum();
}

/// Row-wise softmax of a batch x classes logit matrix.
template <typename Derived>
Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, Eigen::Dynamic> softmax_rows(
    const Eigen::MatrixBase<Derived>& logits) {
  Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, Eigen::Dynamic> out(logits.rows(),
                                                                              logits.cols());
  for (Eigen::Index i = 0; i < logits.rows(); ++i) out.row(i) = softmax(logits.row(i)).transpose();
  return out;
}

/// -sum_i target_i * log(predicted_i), predicted clamped below at 1e-12.
/// `target` is one-hot, or one-hot scaled by a class weight.
template <typename DerivedA, typename DerivedB>
typename DerivedA::Scalar cross_entropy(const Eigen::MatrixBase<DerivedA>& target,
                                        const Eigen::MatrixBase<DerivedB>& predicted) {
  using Scalar = typename DerivedA::Scalar;
  if (target.size() != predicted.size()) {
    throw ShapeError("cross_entropy: " + std::to_string(target.size()) + " targets vs " +
                     std::to_string(predicted.size()) + " probabilities");
  }
  const auto clamped = predicted.reshaped().array().max(Scalar(1e-12));
  return -(target.reshaped().array() * clamped.log()).sum();
}

/// Index of the largest entry; ties go to the lowest index.
template <typename Derived>
int argmax(const Eigen::MatrixBase<Derived>& v) {
  Eigen::Index best = 0;
  for (Eigen::Index i = 1; i < v.size(); ++i) {
    if (v.reshaped()(i) > v.reshaped()(best)) best = i;
  }
  return static_cast<int>(best);
}

}  // namespace spectral
