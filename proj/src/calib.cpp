#include "gyrocal/calib.hpp"

#include <cmath>
#include <sstream>

namespace gyrocal {

namespace {

// Relative singular-value threshold for numerical rank.
constexpr double kRankTolerance = 1e-10;
// Null-space weight above which a parameter counts as unobservable.
constexpr double kNullWeight = 1e-8;

}  // namespace

const std::array<std::string, kCalibrationParams>& calibration_param_names() {
  static const std::array<std::string, kCalibrationParams> names = {
      "m_xx", "m_xy", "m_xz", "m_yx", "m_yy", "m_yz",
      "m_zx", "m_zy", "m_zz", "b_x",  "b_y",  "b_z"};
  return names;
}

Mat3 CalibrationParams::matrix() const {
  Mat3 m;
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 3; ++c) m(r, c) = m_vec[3 * r + c];
  return m;
}

Eigen::Matrix<double, kCalibrationParams, 1> CalibrationParams::as_vector() const {
  Eigen::Matrix<double, kCalibrationParams, 1> x;
  for (int i = 0; i < 9; ++i) x[i] = m_vec[i];
  x.tail<3>() = bias;
  return x;
}

CalibrationParams CalibrationParams::from_vector(const Eigen::Ref<const Eigen::VectorXd>& x) {
  if (x.size() != kCalibrationParams) throw DimensionError("calibration vector must have 12 entries");
  CalibrationParams p;
  for (int i = 0; i < 9; ++i) p.m_vec[i] = x[i];
  p.bias = x.tail<3>();
  return p;
}

LinearSystem assemble_system(std::span<const CalibrationMeasurement> measurements) {
  if (measurements.empty()) throw InvalidParameterError("calibration needs at least one measurement");
  const auto k = static_cast<Eigen::Index>(measurements.size());
  LinearSystem sys{Eigen::MatrixXd::Zero(3 * k, kCalibrationParams), Eigen::VectorXd(3 * k)};
  for (Eigen::Index j = 0; j < k; ++j) {
    const CalibrationMeasurement& m = measurements[static_cast<std::size_t>(j)];
    if (!(m.averaging_time > 0.0)) throw InvalidParameterError("averaging_time must be > 0");
    for (int axis = 0; axis < 3; ++axis) {
      const Eigen::Index row = 3 * j + axis;
      sys.a.block<1, 3>(row, 3 * axis) = m.known_rate.transpose();
      sys.a(row, 9 + axis) = 1.0;
      sys.y[row] = m.measured_mean[axis];
    }
  }
  return sys;
}

CalibrationResult solve_calibration(const LinearSystem& system) {
  const Eigen::MatrixXd& a = system.a;
  if (a.cols() != kCalibrationParams || a.rows() != system.y.size() || a.rows() == 0) {
    throw DimensionError("calibration system must be (3k x 12) with a matching right-hand side");
  }

  Eigen::JacobiSVD<Eigen::MatrixXd> svd(a, Eigen::ComputeFullV);
  const Eigen::VectorXd& sv = svd.singularValues();
  const double smax = sv[0];
  int rank = 0;
  for (Eigen::Index i = 0; i < sv.size(); ++i) {
    if (sv[i] > kRankTolerance * smax) ++rank;
  }

  CalibrationResult result;
  result.rank = rank;
  const double smin = sv.size() == kCalibrationParams ? sv[kCalibrationParams - 1] : 0.0;
  result.condition = smin > 0.0 ? smax / smin : std::numeric_limits<double>::infinity();

  if (rank == kCalibrationParams) {
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(a);
    const Eigen::VectorXd x = qr.solve(system.y);
    result.params = CalibrationParams::from_vector(x);
    result.residual_norm = (a * x - system.y).norm();
    return result;
  }

  // Rank deficient: report which parameters have weight in the null space.
  const Eigen::MatrixXd null = svd.matrixV().rightCols(kCalibrationParams - rank);
  std::vector<std::string> unobservable;
  for (int i = 0; i < kCalibrationParams; ++i) {
    if (null.row(i).norm() > kNullWeight) unobservable.push_back(calibration_param_names()[i]);
  }

  const bool all_stationary = a.leftCols(9).isZero(0.0);
  Eigen::VectorXd x;
  if (all_stationary) {
    // Only the biases are observable; their estimate is the mean measured output.
    x = Eigen::VectorXd::Zero(kCalibrationParams);
    const Eigen::Index k = a.rows() / 3;
    for (int axis = 0; axis < 3; ++axis) {
      double s = 0.0;
      for (Eigen::Index j = 0; j < k; ++j) s += system.y[3 * j + axis];
      x[9 + axis] = s / static_cast<double>(k);
    }
  } else {
    x = a.completeOrthogonalDecomposition().solve(system.y);
  }
  result.params = CalibrationParams::from_vector(x);
  result.residual_norm = (a * x - system.y).norm();

  std::ostringstream os;
  os << "calibration system has rank " << rank << " < 12; unobservable:";
  for (const auto& name : unobservable) os << ' ' << name;
  throw CalibrationRankError(os.str(), std::move(unobservable), result);
}

std::vector<Vec3> six_point_protocol(double rate_magnitude) {
  if (!(rate_magnitude > 0.0) || !std::isfinite(rate_magnitude)) {
    throw InvalidParameterError("protocol rate magnitude must be > 0");
  }
  std::vector<Vec3> rates;
  for (int axis = 0; axis < 3; ++axis) {
    for (double sign : {1.0, -1.0}) {
      Vec3 w = Vec3::Zero();
      w[axis] = sign * rate_magnitude;
      rates.push_back(w);
    }
  }
  rates.push_back(Vec3::Zero());
  return rates;
}

}  // namespace gyrocal
