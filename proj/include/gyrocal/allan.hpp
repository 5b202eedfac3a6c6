#pragma once

// Time-domain noise identification with the overlapping Allan deviation.

#include <cstddef>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "gyrocal/noise_sim.hpp"

namespace gyrocal {

enum class Axis { X = 0, Y = 1, Z = 2 };

Axis parse_axis(std::string_view s);

struct AllanCurve {
  std::vector<double> taus;         // [s], strictly increasing
  std::vector<double> sigma;        // Allan deviation [rad/s]
  std::vector<std::size_t> n_clusters;  // independent (non-overlapping) clusters per tau
};

// Minimum number of independent clusters for a tau to be kept.
inline constexpr std::size_t kMinClusters = 9;

// Logarithmic grid of cluster sizes, ~points_per_decade per decade, from
// 1/fs up to the largest tau that still has kMinClusters clusters.
std::vector<double> log_tau_grid(double fs, std::size_t n_samples, int points_per_decade = 20);

// Overlapping estimator. Every tau must be a whole number of samples and leave
// at least kMinClusters clusters, otherwise InsufficientDataError.
AllanCurve allan_deviation(std::span<const double> signal, double fs, std::span<const double> taus);
AllanCurve allan_deviation(const SignalRecord& record, Axis axis, std::span<const double> taus);
AllanCurve allan_deviation(const SignalRecord& record, Axis axis);

std::vector<double> axis_signal(const SignalRecord& record, Axis axis);

struct CoefficientEstimate {
  double value = 0.0;
  double tau_min = 0.0;  // tau range the estimate was read from [s]
  double tau_max = 0.0;
};

struct NoiseFit {
  std::optional<CoefficientEstimate> n;  // [rad/s/sqrt(Hz)]
  std::optional<CoefficientEstimate> b;  // [rad/s]
  std::optional<CoefficientEstimate> k;  // [rad/s*sqrt(Hz)]
};

// Flat-region scale factor between the Allan minimum and the bias-instability level.
inline constexpr double kBiasInstabilityFactor = 0.664;

// N from the -1/2 slope region at tau = 1 s, K from the +1/2 region at tau = 3 s,
// B from an interior curve minimum. Unidentifiable coefficients stay empty.
NoiseFit fit_noise_coefficients(const AllanCurve& curve);

}  // namespace gyrocal
