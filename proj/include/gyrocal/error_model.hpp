#pragma once

// Deterministic gyro model: output = M * omega + b + w.

#include <array>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace gyrocal {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

// Off-diagonal misalignment entries in row-major order: xy, xz, yx, yz, zx, zy.
using Misalignment = std::array<double, 6>;

class DistortionMatrix {
 public:
  static constexpr double kMinAbsDeterminant = 1e-6;

  DistortionMatrix() : m_(Mat3::Identity()) {}

  // Rejects non-finite entries and |det| <= kMinAbsDeterminant.
  static DistortionMatrix from_matrix(const Mat3& m);

  const Mat3& matrix() const noexcept { return m_; }
  Vec3 scale_factors() const;
  Misalignment misalignment() const;

 private:
  explicit DistortionMatrix(const Mat3& m) : m_(m) {}
  Mat3 m_;
};

// Stochastic coefficients of the five IEEE-952 sources. All >= 0.
struct NoiseCoefficients {
  double q = 0.0;            // quantization step of the rate output [rad/s]
  double n = 0.0;            // angle random walk [rad/s/sqrt(Hz)]
  double b_inst = 0.0;       // bias instability level [rad/s]
  double b_corr_time = 100;  // Gauss-Markov correlation time [s]
  double k = 0.0;            // rate random walk [rad/s*sqrt(Hz)]
  double r = 0.0;            // rate ramp [rad/s^2]

  void validate() const;
};

struct ErrorModelParams {
  DistortionMatrix distortion;
  Vec3 bias = Vec3::Zero();  // [rad/s]
  NoiseCoefficients noise;

  void validate() const;
};

struct BiasResidual {
  Vec3 delta_b;
};

// I + diag(sf) + off-diagonal(ma). Requires |sf_i| < 0.5 and |ma_ij| < 0.5.
DistortionMatrix compose_distortion(const Vec3& sf, const Misalignment& ma);

std::vector<Vec3> apply_error_model(std::span<const Vec3> true_rates,
                                    const ErrorModelParams& params,
                                    std::span<const Vec3> noise_realization);

BiasResidual bias_residual(const Vec3& estimated, const Vec3& true_bias);

}  // namespace gyrocal
