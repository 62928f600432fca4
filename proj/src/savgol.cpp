#include "spectral/savgol.hpp"

namespace spectral {

Spectrum apply_sg(const Spectrum& spectrum, const SgFilterSpec& spec) {
  Spectrum out = spectrum;
  out.absorbances = apply_sg(spectrum.absorbances, spec);
  return out;
}

LabeledDataset apply_sg(const LabeledDataset& data, const SgFilterSpec& spec) {
  spec.validate();
  if (data.rows.cols() < spec.window) {
    throw ValidationError("row 0 has length " + std::to_string(data.rows.cols()) +
                          ", shorter than the SG window " + std::to_string(spec.window));
  }
  LabeledDataset out = data;
  for (Eigen::Index i = 0; i < data.rows.rows(); ++i) {
    try {
      out.rows.row(i) = apply_sg(data.rows.row(i).transpose(), spec).transpose();
    } catch (const ValidationError& e) {
      throw ValidationError("row " + std::to_string(i) + ": " + e.what());
    }
  }
  return out;
}

}  // namespace spectral
