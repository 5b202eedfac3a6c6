#include "gyrocal/error_model.hpp"

#include <cmath>
#include <string>

#include "gyrocal/errors.hpp"

namespace gyrocal {

namespace {

constexpr double kMaxDistortion = 0.5;

void require_finite(double v, const char* what) {
  if (!std::isfinite(v)) {
    throw InvalidParameterError(std::string("non-finite ") + what);
  }
}

}  // namespace

DistortionMatrix DistortionMatrix::from_matrix(const Mat3& m) {
  for (int i = 0; i < 9; ++i) require_finite(m.data()[i], "distortion entry");
  const double det = m.determinant();
  if (!(std::abs(det) > kMinAbsDeterminant)) {
    throw InvalidParameterError("distortion matrix is singular (|det| = " +
                                std::to_string(std::abs(det)) + ")");
  }
  return DistortionMatrix(m);
}

Vec3 DistortionMatrix::scale_factors() const { return m_.diagonal() - Vec3::Ones(); }

Misalignment DistortionMatrix::misalignment() const {
  return {m_(0, 1), m_(0, 2), m_(1, 0), m_(1, 2), m_(2, 0), m_(2, 1)};
}

void NoiseCoefficients::validate() const {
  for (double v : {q, n, b_inst, b_corr_time, k, r}) {
    require_finite(v, "noise coefficient");
    if (v < 0.0) throw InvalidParameterError("noise coefficients must be >= 0");
  }
  if (b_inst > 0.0 && b_corr_time <= 0.0) {
    throw InvalidParameterError("bias instability needs a positive correlation time");
  }
}

void ErrorModelParams::validate() const {
  for (int i = 0; i < 3; ++i) require_finite(bias[i], "bias");
  noise.validate();
}

DistortionMatrix compose_distortion(const Vec3& sf, const Misalignment& ma) {
  for (int i = 0; i < 3; ++i) {
    require_finite(sf[i], "scale factor");
    if (std::abs(sf[i]) >= kMaxDistortion) throw InvalidParameterError("|sf| must be < 0.5");
  }
  for (double v : ma) {
    require_finite(v, "misalignment");
    if (std::abs(v) >= kMaxDistortion) throw InvalidParameterError("|ma| must be < 0.5");
  }
  Mat3 m = Mat3::Identity();
  m.diagonal() += sf;
  m(0, 1) = ma[0];
  m(0, 2) = ma[1];
  m(1, 0) = ma[2];
  m(1, 2) = ma[3];
  m(2, 0) = ma[4];
  m(2, 1) = ma[5];
  return DistortionMatrix::from_matrix(m);
}

std::vector<Vec3> apply_error_model(std::span<const Vec3> true_rates,
                                    const ErrorModelParams& params,
                                    std::span<const Vec3> noise_realization) {
  if (true_rates.size() != noise_realization.size()) {
    throw DimensionError("apply_error_model: " + std::to_string(true_rates.size()) +
                         " rates vs " + std::to_string(noise_realization.size()) +
                         " noise samples");
  }
  const Mat3& m = params.distortion.matrix();
  std::vector<Vec3> out(true_rates.size());
  for (std::size_t i = 0; i < true_rates.size(); ++i) {
    out[i] = m * true_rates[i] + params.bias + noise_realization[i];
  }
  return out;
}

BiasResidual bias_residual(const Vec3& estimated, const Vec3& true_bias) {
  return {estimated - true_bias};
}

}  // namespace gyrocal
