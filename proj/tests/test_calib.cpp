#include <cmath>
#include <random>

#include "doctest.h"
#include "gyrocal/calib.hpp"
#include "gyrocal/noise_sim.hpp"

using namespace gyrocal;

namespace {

ErrorModelParams truth() {
  ErrorModelParams p;
  p.distortion = compose_distortion(Vec3(0.02, -0.015, 0.01), Misalignment{3e-3, -2e-3, 1e-3, -3e-3, 2.5e-3, -1.5e-3});
  p.bias = Vec3(0.01, -0.005, 0.0075);
  return p;
}

std::vector<CalibrationMeasurement> exact_measurements(const ErrorModelParams& p, double w0) {
  std::vector<CalibrationMeasurement> ms;
  for (const Vec3& w : six_point_protocol(w0)) ms.push_back({w, p.distortion.matrix() * w + p.bias, 60.0});
  return ms;
}

Vec3 record_mean(const SignalRecord& r) {
  Vec3 acc = Vec3::Zero();
  for (const Vec3& v : r.samples) acc += v;
  return acc / static_cast<double>(r.size());
}

std::vector<CalibrationMeasurement> noisy_measurements(const ErrorModelParams& p, double seconds, std::uint64_t seed) {
  std::vector<CalibrationMeasurement> ms;
  std::uint64_t s = seed;
  for (const Vec3& w : six_point_protocol(1.0)) {
    const SignalRecord r = synthesize_constant_rate(p, w, {}, seconds, 200.0, s++);
    ms.push_back({w, record_mean(r), seconds});
  }
  return ms;
}

}  // namespace

TEST_CASE("system structure") {
  const std::vector<CalibrationMeasurement> stationary{{Vec3::Zero(), Vec3(1, 2, 3), 1.0}};
  const LinearSystem s0 = assemble_system(stationary);
  REQUIRE(s0.a.rows() == 3);
  REQUIRE(s0.a.cols() == 12);
  CHECK(s0.a.leftCols(9).isZero(0.0));
  CHECK(s0.a.rightCols(3) == Eigen::Matrix3d::Identity());
  CHECK(s0.y == Eigen::Vector3d(1, 2, 3));

  const std::vector<CalibrationMeasurement> one{{Vec3(1, 0, 0), Vec3::Zero(), 1.0}};
  const LinearSystem s1 = assemble_system(one);
  for (int c = 0; c < 12; ++c) CHECK(s1.a(0, c) == ((c == 0 || c == 9) ? 1.0 : 0.0));

  const LinearSystem six = assemble_system(exact_measurements(truth(), 1.0));
  CHECK(six.a.rows() == 21);
  CHECK(Eigen::FullPivLU<Eigen::MatrixXd>(six.a).rank() == 12);

  CHECK_THROWS_AS(assemble_system(std::vector<CalibrationMeasurement>{}), InvalidParameterError);
  const std::vector<CalibrationMeasurement> bad{{Vec3::Zero(), Vec3::Zero(), 0.0}};
  CHECK_THROWS_AS(assemble_system(bad), InvalidParameterError);
}

TEST_CASE("protocol") {
  const auto pts = six_point_protocol(1.0);
  REQUIRE(pts.size() == 7);
  CHECK(pts.back() == Vec3::Zero());
  for (int i = 0; i < 6; ++i) CHECK(pts[i].norm() == 1.0);
  for (double w0 : {0.01, 0.5, 3.0}) {
    std::vector<CalibrationMeasurement> ms;
    for (const Vec3& w : six_point_protocol(w0)) ms.push_back({w, Vec3::Zero(), 1.0});
    CHECK(Eigen::FullPivLU<Eigen::MatrixXd>(assemble_system(ms).a).rank() == 12);
  }
  CHECK_THROWS_AS(six_point_protocol(0.0), InvalidParameterError);
}

TEST_CASE("noise-free recovery is exact") {
  const ErrorModelParams p = truth();
  const CalibrationResult r = solve_calibration(assemble_system(exact_measurements(p, 1.0)));
  CHECK(r.rank == 12);
  CHECK(!r.ill_conditioned());
  CHECK(r.residual_norm < 1e-12);
  const Mat3 m = p.distortion.matrix();
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) CHECK(std::abs(r.params.matrix()(i, j) - m(i, j)) <= 1e-10 * std::abs(m(i, j)));
    CHECK(std::abs(r.params.bias[i] - p.bias[i]) <= 1e-10 * std::abs(p.bias[i]));
  }
  // pseudo-inverse oracle
  const LinearSystem s = assemble_system(exact_measurements(p, 1.0));
  const Eigen::VectorXd x = s.a.completeOrthogonalDecomposition().pseudoInverse() * s.y;
  CHECK((x - r.params.as_vector()).norm() < 1e-12);
}

TEST_CASE("stationary-only data fixes the bias and flags M") {
  std::vector<CalibrationMeasurement> ms{{Vec3::Zero(), Vec3(0.01, -0.02, 0.03), 10.0},
                                         {Vec3::Zero(), Vec3(0.012, -0.018, 0.031), 10.0}};
  try {
    solve_calibration(assemble_system(ms));
    FAIL("expected a rank error");
  } catch (const CalibrationRankError& e) {
    CHECK(e.unobservable().size() == 9);
    CHECK(e.unobservable().front() == "m_xx");
    CHECK(e.partial().rank == 3);
    CHECK((e.partial().params.bias - Vec3(0.011, -0.019, 0.0305)).norm() < 1e-15);
  }

  const std::vector<CalibrationMeasurement> single{{Vec3::Zero(), Vec3(1e-3, 2e-3, 3e-3), 1.0}};
  try {
    solve_calibration(assemble_system(single));
    FAIL("expected a rank error");
  } catch (const CalibrationRankError& e) {
    CHECK((e.partial().params.bias - Vec3(1e-3, 2e-3, 3e-3)).norm() < 1e-17);
  }
}

TEST_CASE("noisy recovery within one percent") {
  ErrorModelParams p = truth();
  p.noise.n = 1e-3 / std::sqrt(200.0);
  const CalibrationResult r = solve_calibration(assemble_system(noisy_measurements(p, 60.0, 100)));
  const auto x = r.params.as_vector();
  CalibrationParams t;
  const Mat3 m = p.distortion.matrix();
  for (int i = 0; i < 9; ++i) t.m_vec[i] = m(i / 3, i % 3);
  t.bias = p.bias;
  const auto xt = t.as_vector();
  for (int i = 0; i < 12; ++i) CHECK(std::abs(x[i] - xt[i]) < 0.01 * std::abs(xt[i]));
}

TEST_CASE("estimate spread scales with one over root n") {
  ErrorModelParams p = truth();
  p.noise.n = 1e-3 / std::sqrt(200.0);
  auto spread = [&](double seconds) {
    std::vector<double> bx;
    for (std::uint64_t t = 0; t < 200; ++t) {
      bx.push_back(solve_calibration(assemble_system(noisy_measurements(p, seconds, 1000 * t + 1))).params.bias[0]);
    }
    double m = 0.0;
    for (double v : bx) m += v;
    m /= bx.size();
    double s = 0.0;
    for (double v : bx) s += (v - m) * (v - m);
    return std::sqrt(s / (bx.size() - 1));
  };
  const double ratio = spread(0.5) / spread(2.0);
  CHECK(ratio == doctest::Approx(2.0).epsilon(0.15));
}

TEST_CASE("parameter vector round trip and names") {
  Eigen::VectorXd x(12);
  for (int i = 0; i < 12; ++i) x[i] = 0.1 * i + 1.0;
  const CalibrationParams c = CalibrationParams::from_vector(x);
  CHECK(c.as_vector() == x);
  CHECK(c.matrix()(1, 2) == x[5]);
  CHECK(calibration_param_names()[9] == "b_x");
  CHECK_THROWS_AS(CalibrationParams::from_vector(Eigen::VectorXd::Zero(5)), DimensionError);
}
