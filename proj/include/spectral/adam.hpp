#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>

namespace spectral {

struct AdamHyper {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

/// One bias-corrected Adam update of `param` in place. `step` is the
/// 1-based step number after incrementing.
template <typename DerivedP, typename DerivedG, typename DerivedM, typename DerivedV>
void adam_update(Eigen::MatrixBase<DerivedP>& param, const Eigen::MatrixBase<DerivedG>& grad,
                 Eigen::MatrixBase<DerivedM>& m, Eigen::MatrixBase<DerivedV>& v,
                 std::int64_t step, const AdamHyper& hyper) {
  using Scalar = typename DerivedP::Scalar;
  const Scalar b1 = Scalar(hyper.beta1);
  const Scalar b2 = Scalar(hyper.beta2);
  m = b1 * m + (Scalar(1) - b1) * grad;
  v = b2 * v + (Scalar(1) - b2) * grad.cwiseAbs2();
  const Scalar c1 = Scalar(1) - std::pow(b1, Scalar(step));
  const Scalar c2 = Scalar(1) - std::pow(b2, Scalar(step));
  param.array() -= Scalar(hyper.learning_rate) * (m.array() / c1) /
                   ((v.array() / c2).sqrt() + Scalar(hyper.epsilon));
}

}  // namespace spectral
