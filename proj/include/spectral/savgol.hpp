#pragma once

#include "spectral/dataset.hpp"
#include "spectral/error.hpp"

#include <Eigen/Dense>

#include <string>

namespace spectral {

/// Savitzky-Golay filter parameters. `delta` is the sample spacing that the
/// derivative is taken with respect to; 1 means index units.
struct SgFilterSpec {
  int window = 11;
  int degree = 3;
  int deriv_order = 2;
  double delta = 1.0;

  int half_width() const { return (window - 1) / 2; }

  void validate() const {
    if (window < 3 || window % 2 == 0) {
      throw ArgumentError("SG window must be odd and >= 3, got " + std::to_string(window));
    }
    if (degree < 0 || degree >= window) {
      throw ArgumentError("SG degree must be in [0, window), got " + std::to_string(degree));
    }
    if (deriv_order < 0 || deriv_order > degree) {
      throw ArgumentError("SG derivative order must be in [0, degree], got " +
                          std::to_string(deriv_order));
    }
    if (!(delta > 0.0)) throw ArgumentError("SG delta must be positive");
  }
};

namespace detail {

/// Least-squares projector of the window onto polynomial coefficients:
/// (degree+1) x window matrix whose row m maps samples to the fitted t^m
/// coefficient, with t the offset from the window centre. Solved through a
/// Householder QR of the Vandermonde design matrix.
template <typename Scalar>
Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> sg_projector(const SgFilterSpec& spec) {
  using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  const int h = spec.half_width();
  Mat design(spec.window, spec.degree + 1);
  for (int j = 0; j < spec.window; ++j) {
    Scalar power(1);
    for (int m = 0; m <= spec.degree; ++m) {
      design(j, m) = power;
      power *= Scalar(j - h);
    }
  }
  return design.householderQr().solve(Mat::Identity(spec.window, spec.window));
}

/// Row vector r with r * coeffs = d^k/dt^k (sum_m coeffs_m t^m) at `offset`,
/// already divided by delta^k.
template <typename Scalar>
Eigen::Matrix<Scalar, 1, Eigen::Dynamic> sg_derivative_row(const SgFilterSpec& spec,
                                                           Scalar offset) {
  Eigen::Matrix<Scalar, 1, Eigen::Dynamic> row =
      Eigen::Matrix<Scalar, 1, Eigen::Dynamic>::Zero(spec.degree + 1);
  const int k = spec.deriv_order;
  for (int m = k; m <= spec.degree; ++m) {
    Scalar falling(1);
    for (int q = 0; q < k; ++q) falling *= Scalar(m - q);
    Scalar power(1);
    for (int q = 0; q < m - k; ++q) power *= offset;
    row(m) = falling * power;
  }
  Scalar scale(1);
  for (int q = 0; q < k; ++q) scale *= Scalar(spec.delta);
  return row / scale;
}

}  // namespace detail

/// Convolution weights of length `window`: applied to samples x[i-h..i+h]
/// they give the deriv_order-th derivative of the local least-squares
/// polynomial at the window centre.
template <typename Scalar = double>
Eigen::Matrix<Scalar, Eigen::Dynamic, 1> sg_coefficients(const SgFilterSpec& spec) {
  spec.validate();
  const auto projector = detail::sg_projector<Scalar>(spec);
  return (detail::sg_derivative_row<Scalar>(spec, Scalar(0)) * projector).transpose();
}

/// Weights that evaluate the fitted polynomial (or its derivative) at an
/// arbitrary offset from the window centre. Used for the edge samples.
template <typename Scalar = double>
Eigen::Matrix<Scalar, Eigen::Dynamic, 1> sg_offset_coefficients(const SgFilterSpec& spec,
                                                                int offset) {
  spec.validate();
  const auto projector = detail::sg_projector<Scalar>(spec);
  return (detail::sg_derivative_row<Scalar>(spec, Scalar(offset)) * projector).transpose();
}

/// Length-preserving filter of one signal. Interior samples are the
/// convolution with sg_coefficients; the first and last h samples come from
/// the polynomial fitted to the first and last `window` samples.
template <typename Derived>
Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, 1> apply_sg(
    const Eigen::MatrixBase<Derived>& signal, const SgFilterSpec& spec) {
  using Scalar = typename Derived::Scalar;
  using Vec = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  spec.validate();
  const Eigen::Index n = signal.size();
  const Eigen::Index w = spec.window;
  if (n < w) {
    throw ValidationError("signal of length " + std::to_string(n) +
                          " is shorter than the SG window " + std::to_string(w));
  }
  const int h = spec.half_width();
  const auto projector = detail::sg_projector<Scalar>(spec);
  const Vec centre = (detail::sg_derivative_row<Scalar>(spec, Scalar(0)) * projector).transpose();

  Vec x = signal.derived().reshaped();
  Vec out(n);
  for (Eigen::Index i = h; i < n - h; ++i) out[i] = centre.dot(x.segment(i - h, w));

  // Edge fits: polynomial through the first / last window, evaluated off-centre.
  const Vec head_fit = x.head(w);
  const Vec tail_fit = x.tail(w);
  for (int i = 0; i < h; ++i) {
    const Vec head_row = (detail::sg_derivative_row<Scalar>(spec, Scalar(i - h)) * projector).transpose();
    out[i] = head_row.dot(head_fit);
    const Vec tail_row = (detail::sg_derivative_row<Scalar>(spec, Scalar(i + 1)) * projector).transpose();
    out[n - h + i] = tail_row.dot(tail_fit);
  }
  return out;
}

Spectrum apply_sg(const Spectrum& spectrum, const SgFilterSpec& spec);

/// Filters every row; labels and grid are untouched. Errors name the row.
LabeledDataset apply_sg(const LabeledDataset& data, const SgFilterSpec& spec);

}  // namespace spectral
