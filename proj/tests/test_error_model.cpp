#include <cmath>
#include <limits>

#include "doctest.h"
#include "gyrocal/error_model.hpp"
#include "gyrocal/errors.hpp"

using namespace gyrocal;

TEST_CASE("compose_distortion identity and single scale factor") {
  const DistortionMatrix id = compose_distortion(Vec3::Zero(), Misalignment{});
  CHECK(id.matrix() == Mat3::Identity());

  const DistortionMatrix m = compose_distortion(Vec3(0.01, 0, 0), Misalignment{});
  CHECK(m.matrix()(0, 0) == 1.0 + 0.01);
  CHECK(m.matrix()(1, 1) == 1.0);
  CHECK(m.matrix()(2, 2) == 1.0);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      if (i != j) CHECK(m.matrix()(i, j) == 0.0);
}

TEST_CASE("compose_distortion matches element-wise assembly") {
  const Vec3 sf(0.01, -0.02, 0.015);
  const Misalignment ma{1e-3, -2e-3, 3e-3, -1e-3, 2e-3, -3e-3};
  const Mat3 m = compose_distortion(sf, ma).matrix();
  const double expect[3][3] = {{1.0 + 0.01, 1e-3, -2e-3}, {3e-3, 1.0 - 0.02, -1e-3}, {2e-3, -3e-3, 1.0 + 0.015}};
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) CHECK(m(i, j) == expect[i][j]);

  // decomposition returns the inputs; the diagonal round trip through 1 + sf
  // costs at most one rounding of 1.0
  const DistortionMatrix d = compose_distortion(sf, ma);
  CHECK((d.scale_factors() - sf).cwiseAbs().maxCoeff() <= std::numeric_limits<double>::epsilon());
  CHECK(d.misalignment() == ma);
}

TEST_CASE("compose_distortion rejects bad input") {
  const double nan = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(compose_distortion(Vec3(nan, 0, 0), Misalignment{}), InvalidParameterError);
  CHECK_THROWS_AS(compose_distortion(Vec3(0.6, 0, 0), Misalignment{}), InvalidParameterError);
  CHECK_THROWS_AS(compose_distortion(Vec3::Zero(), Misalignment{0, 0, 0.5, 0, 0, 0}), InvalidParameterError);
  Mat3 singular = Mat3::Identity();
  singular(2, 2) = 0.0;
  CHECK_THROWS_AS(DistortionMatrix::from_matrix(singular), InvalidParameterError);
}

TEST_CASE("apply_error_model basic cases") {
  ErrorModelParams p;
  p.bias = Vec3(1e-3, 2e-3, 3e-3);
  std::vector<Vec3> zero(10, Vec3::Zero());
  auto out = apply_error_model(zero, p, zero);
  for (const Vec3& v : out) CHECK(v == p.bias);

  ErrorModelParams ident;
  std::vector<Vec3> w{Vec3(0.1, -0.2, 0.3), Vec3(1, 2, 3)};
  std::vector<Vec3> nz(2, Vec3::Zero());
  auto same = apply_error_model(w, ident, nz);
  CHECK(same[0] == w[0]);
  CHECK(same[1] == w[1]);

  std::vector<Vec3> short_noise(1, Vec3::Zero());
  CHECK_THROWS_AS(apply_error_model(w, ident, short_noise), DimensionError);
}

TEST_CASE("apply_error_model equals a direct matrix-vector product") {
  ErrorModelParams p;
  p.distortion = compose_distortion(Vec3(0.01, -0.02, 0.015), Misalignment{1e-3, -2e-3, 3e-3, -1e-3, 2e-3, -3e-3});
  p.bias = Vec3(1e-3, 2e-3, 3e-3);
  std::vector<Vec3> w(5, Vec3(1, 0, 0));
  std::vector<Vec3> noise(5, Vec3::Zero());
  noise[3] = Vec3(1e-4, -1e-4, 5e-5);
  auto out = apply_error_model(w, p, noise);
  const Mat3& m = p.distortion.matrix();
  for (std::size_t t = 0; t < w.size(); ++t) {
    for (int i = 0; i < 3; ++i) {
      double acc = p.bias[i] + noise[t][i];
      for (int j = 0; j < 3; ++j) acc += m(i, j) * w[t][j];
      CHECK(out[t][i] == doctest::Approx(acc).epsilon(1e-15));
    }
  }
}

TEST_CASE("apply_error_model linearity and inverse round trip") {
  ErrorModelParams p;
  p.distortion = compose_distortion(Vec3(0.02, -0.01, 0.005), Misalignment{3e-3, -1e-3, 2e-3, 1e-3, -2e-3, 2.5e-3});
  std::vector<Vec3> a{Vec3(0.3, -1, 2), Vec3(-0.5, 0.25, 0.1)};
  std::vector<Vec3> b{Vec3(1, 1, -1), Vec3(0.2, -0.7, 0.9)};
  std::vector<Vec3> z(2, Vec3::Zero());
  const double alpha = 1.7, beta = -0.4;
  std::vector<Vec3> comb{alpha * a[0] + beta * b[0], alpha * a[1] + beta * b[1]};
  auto oa = apply_error_model(a, p, z), ob = apply_error_model(b, p, z), oc = apply_error_model(comb, p, z);
  for (int t = 0; t < 2; ++t) CHECK((oc[t] - (alpha * oa[t] + beta * ob[t])).norm() < 1e-14);

  p.bias = Vec3(0.01, -0.02, 0.005);
  auto out = apply_error_model(a, p, z);
  const Mat3 inv = p.distortion.matrix().inverse();
  for (int t = 0; t < 2; ++t) {
    const Vec3 back = inv * (out[t] - p.bias);
    CHECK((back - a[t]).norm() / a[t].norm() < 1e-12);
  }
}

TEST_CASE("bias_residual is a plain difference") {
  const Vec3 b(0.1, 0.2, 0.3);
  CHECK(bias_residual(b, b).delta_b == Vec3::Zero());
  CHECK(bias_residual(Vec3(2, 0, 0), Vec3(1, 0, 0)).delta_b == Vec3(1, 0, 0));
}

TEST_CASE("noise coefficients must be non-negative") {
  NoiseCoefficients n;
  n.k = -1e-6;
  CHECK_THROWS_AS(n.validate(), InvalidParameterError);
}

TEST_CASE("exit codes follow the error class") {
  CHECK(exit_code(ConfigError("x")) == 2);
  CHECK(exit_code(FormatError("x")) == 3);
  CHECK(exit_code(DivisionError("x")) == 4);
}
