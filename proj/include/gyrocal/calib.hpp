#pragma once

// Twelve-parameter least-squares calibration: y = [M | b] [omega; 1].

#include <array>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "gyrocal/error_model.hpp"
#include "gyrocal/errors.hpp"

namespace gyrocal {

struct CalibrationMeasurement {
  Vec3 known_rate = Vec3::Zero();     // turntable reference [rad/s]
  Vec3 measured_mean = Vec3::Zero();  // time-averaged sensor output [rad/s]
  double averaging_time = 1.0;        // [s], > 0
};

struct LinearSystem {
  Eigen::MatrixXd a;  // (3k) x 12
  Eigen::VectorXd y;  // 3k
};

inline constexpr int kCalibrationParams = 12;
inline constexpr double kConditionWarning = 1e6;

// Parameter names in solution order: m_xx ... m_zz, b_x, b_y, b_z.
const std::array<std::string, kCalibrationParams>& calibration_param_names();

struct CalibrationParams {
  std::array<double, 9> m_vec{};  // rows of M stacked
  Vec3 bias = Vec3::Zero();

  Mat3 matrix() const;
  Eigen::Matrix<double, kCalibrationParams, 1> as_vector() const;
  static CalibrationParams from_vector(const Eigen::Ref<const Eigen::VectorXd>& x);
};

struct CalibrationResult {
  CalibrationParams params;
  double residual_norm = 0.0;
  double condition = 0.0;  // ratio of extreme singular values of A
  int rank = 0;
  bool ill_conditioned() const noexcept { return condition > kConditionWarning; }
};

// Rank < 12. `partial` holds the minimum-norm solution; entries named in
// unobservable() are not determined by the data.
class CalibrationRankError : public RankDeficientError {
 public:
  CalibrationRankError(const std::string& what, std::vector<std::string> unobservable,
                       CalibrationResult partial)
      : RankDeficientError(what, std::move(unobservable)), partial_(std::move(partial)) {}
  const CalibrationResult& partial() const noexcept { return partial_; }

 private:
  CalibrationResult partial_;
};

LinearSystem assemble_system(std::span<const CalibrationMeasurement> measurements);

CalibrationResult solve_calibration(const LinearSystem& system);

// The six signed axis rates +-w0 e_i followed by one zero-rate point.
std::vector<Vec3> six_point_protocol(double rate_magnitude);

}  // namespace gyrocal
