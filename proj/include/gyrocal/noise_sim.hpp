#pragma once

// Synthetic stationary gyro recordings built from the five IEEE-952 noise
// sources plus optional non-stationary disturbances.

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "gyrocal/error_model.hpp"

namespace gyrocal {

enum class NoiseKind { Q, N, B, K, R };

NoiseKind parse_noise_kind(std::string_view s);
std::string_view to_string(NoiseKind k);

// Disturbances are not part of the sensor model. They exist to exercise
// estimator robustness against non-stationary inputs.
struct DisturbanceSpec {
  enum class Kind { None, Sinusoid, Spikes };

  Kind kind = Kind::None;
  double amplitude = 0.0;         // sinusoid amplitude [rad/s]
  double frequency_hz = 0.0;      // sinusoid frequency, or lower bound of a range
  double frequency_max_hz = 0.0;  // > frequency_hz draws f uniformly per realization
  double spike_rate = 0.0;        // [events/s]
  double spike_magnitude = 0.0;   // [rad/s], random sign
  std::optional<double> phase;    // [rad]; uniform random when empty

  void validate(double fs) const;
};

DisturbanceSpec::Kind parse_disturbance_kind(std::string_view s);
std::string_view to_string(DisturbanceSpec::Kind k);

struct SignalRecord {
  double fs = 0.0;        // [Hz]
  double duration = 0.0;  // [s]
  std::vector<Vec3> samples;
  std::optional<Vec3> true_bias;
  std::string source_id;
  std::uint64_t seed = 0;

  std::size_t size() const noexcept { return samples.size(); }
};

// Sample count for a duration; throws unless fs * duration is integral.
std::size_t sample_count(double duration, double fs);

// One scalar realization of a single noise source.
//   Q: quantization error of an integrated angle, differenced back to rate
//   N: white, per-sample sigma = n * sqrt(fs)
//   B: first-order Gauss-Markov, stationary sigma = b_inst
//   K: random walk with per-step sigma = k / sqrt(fs)
//   R: deterministic ramp r * t
std::vector<double> gen_noise(NoiseKind kind, const NoiseCoefficients& coeffs,
                              std::size_t n_samples, double fs, std::uint64_t seed);

std::vector<double> gen_disturbance(const DisturbanceSpec& spec, std::size_t n_samples,
                                    double fs, std::uint64_t seed);

// Rounds the running angle of `rate` onto a grid of step q/fs and differences
// it back to rate. `angle_offset` is the initial angle in units of the grid.
void quantize_rate(std::vector<double>& rate, double q, double fs, double angle_offset);

// Zero-rate recording: b + sum of enabled noise sources + disturbance, with the
// composite quantized when q > 0. Axes use independent streams derived from seed.
SignalRecord synthesize_stationary(const ErrorModelParams& params,
                                   const DisturbanceSpec& disturbance, double duration,
                                   double fs, std::uint64_t seed, std::string source_id = {});

// Same as above for a constant true rate: M * omega + b + noise.
SignalRecord synthesize_constant_rate(const ErrorModelParams& params, const Vec3& true_rate,
                                      const DisturbanceSpec& disturbance, double duration,
                                      double fs, std::uint64_t seed, std::string source_id = {});

}  // namespace gyrocal
