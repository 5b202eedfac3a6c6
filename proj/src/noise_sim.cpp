#include "gyrocal/noise_sim.hpp"

#include <cmath>
#include <numbers>

#include "gyrocal/errors.hpp"
#include "gyrocal/random.hpp"

namespace gyrocal {

namespace {

constexpr std::uint64_t kDisturbanceStream = 100;
constexpr std::uint64_t kQuantizerStream = 200;

std::uint64_t kind_index(NoiseKind k) { return static_cast<std::uint64_t>(k); }

void require_rate(double fs) {
  if (!(fs > 0.0) || !std::isfinite(fs)) throw InvalidParameterError("sample rate must be > 0");
}

SignalRecord synthesize(const ErrorModelParams& params, const Vec3& true_rate,
                        const DisturbanceSpec& disturbance, double duration, double fs,
                        std::uint64_t seed, std::string source_id) {
  params.validate();
  disturbance.validate(fs);
  const std::size_t n = sample_count(duration, fs);
  const NoiseCoefficients& c = params.noise;
  const Vec3 deterministic = params.distortion.matrix() * true_rate + params.bias;

  SignalRecord rec;
  rec.fs = fs;
  rec.duration = duration;
  rec.samples.assign(n, Vec3::Zero());
  rec.true_bias = params.bias;
  rec.source_id = std::move(source_id);
  rec.seed = seed;

  const std::pair<NoiseKind, double> sources[] = {
      {NoiseKind::N, c.n}, {NoiseKind::B, c.b_inst}, {NoiseKind::K, c.k}, {NoiseKind::R, c.r}};

  for (int axis = 0; axis < 3; ++axis) {
    std::vector<double> channel(n, deterministic[axis]);
    for (const auto& [kind, level] : sources) {
      if (level == 0.0) continue;
      const auto stream = derive_seed(seed, {static_cast<std::uint64_t>(axis), kind_index(kind)});
      const std::vector<double> w = gen_noise(kind, c, n, fs, stream);
      for (std::size_t i = 0; i < n; ++i) channel[i] += w[i];
    }
    if (disturbance.kind != DisturbanceSpec::Kind::None) {
      const auto stream = derive_seed(seed, {static_cast<std::uint64_t>(axis), kDisturbanceStream});
      const std::vector<double> d = gen_disturbance(disturbance, n, fs, stream);
      for (std::size_t i = 0; i < n; ++i) channel[i] += d[i];
    }
    if (c.q > 0.0) {
      Rng rng(derive_seed(seed, {static_cast<std::uint64_t>(axis), kQuantizerStream}));
      quantize_rate(channel, c.q, fs, std::uniform_real_distribution<double>(0.0, 1.0)(rng));
    }
    for (std::size_t i = 0; i < n; ++i) rec.samples[i][axis] = channel[i];
  }
  return rec;
}

}  // namespace

NoiseKind parse_noise_kind(std::string_view s) {
  if (s == "Q") return NoiseKind::Q;
  if (s == "N") return NoiseKind::N;
  if (s == "B") return NoiseKind::B;
  if (s == "K") return NoiseKind::K;
  if (s == "R") return NoiseKind::R;
  throw InvalidParameterError("unknown noise kind '" + std::string(s) + "'");
}

std::string_view to_string(NoiseKind k) {
  switch (k) {
    case NoiseKind::Q: return "Q";
    case NoiseKind::N: return "N";
    case NoiseKind::B: return "B";
    case NoiseKind::K: return "K";
    case NoiseKind::R: return "R";
  }
  return "?";
}

DisturbanceSpec::Kind parse_disturbance_kind(std::string_view s) {
  if (s == "none") return DisturbanceSpec::Kind::None;
  if (s == "sinusoid") return DisturbanceSpec::Kind::Sinusoid;
  if (s == "spikes") return DisturbanceSpec::Kind::Spikes;
  throw InvalidParameterError("unknown disturbance kind '" + std::string(s) + "'");
}

std::string_view to_string(DisturbanceSpec::Kind k) {
  switch (k) {
    case DisturbanceSpec::Kind::None: return "none";
    case DisturbanceSpec::Kind::Sinusoid: return "sinusoid";
    case DisturbanceSpec::Kind::Spikes: return "spikes";
  }
  return "?";
}

void DisturbanceSpec::validate(double fs) const {
  if (kind == Kind::None) return;
  if (!(amplitude >= 0.0) || !(spike_magnitude >= 0.0) || !(spike_rate >= 0.0)) {
    throw InvalidParameterError("disturbance amplitudes and rates must be >= 0");
  }
  if (kind == Kind::Sinusoid) {
    const double f_hi = std::max(frequency_hz, frequency_max_hz);
    if (!(frequency_hz >= 0.0) || !(f_hi < fs / 2.0)) {
      throw InvalidParameterError("sinusoid frequency must lie in [0, fs/2)");
    }
  }
  if (kind == Kind::Spikes && spike_rate > fs) {
    throw InvalidParameterError("spike rate exceeds the sample rate");
  }
}

std::size_t sample_count(double duration, double fs) {
  require_rate(fs);
  if (!(duration > 0.0) || !std::isfinite(duration)) {
    throw InvalidParameterError("duration must be > 0");
  }
  const double n = std::round(fs * duration);
  if (n < 1.0) throw InvalidParameterError("record would contain no samples");
  if (std::abs(fs * duration - n) > 1e-9 * n) {
    throw InvalidParameterError("duration " + std::to_string(duration) + " s is not a whole number of samples at " +
                                std::to_string(fs) + " Hz");
  }
  return static_cast<std::size_t>(n);
}

std::vector<double> gen_noise(NoiseKind kind, const NoiseCoefficients& coeffs,
                              std::size_t n_samples, double fs, std::uint64_t seed) {
  require_rate(fs);
  if (n_samples == 0) throw InvalidParameterError("gen_noise: n_samples must be > 0");
  coeffs.validate();

  std::vector<double> out(n_samples, 0.0);
  Rng rng(seed);
  std::normal_distribution<double> unit(0.0, 1.0);

  switch (kind) {
    case NoiseKind::N: {
      const double sigma = coeffs.n * std::sqrt(fs);
      if (sigma == 0.0) break;
      for (double& v : out) v = sigma * unit(rng);
      break;
    }
    case NoiseKind::B: {
      if (coeffs.b_inst == 0.0) break;
      const double a = std::exp(-1.0 / (fs * coeffs.b_corr_time));
      const double drive = coeffs.b_inst * std::sqrt(1.0 - a * a);
      double x = coeffs.b_inst * unit(rng);
      for (double& v : out) {
        v = x;
        x = a * x + drive * unit(rng);
      }
      break;
    }
    case NoiseKind::K: {
      const double step = coeffs.k / std::sqrt(fs);
      if (step == 0.0) break;
      double x = 0.0;
      for (double& v : out) {
        x += step * unit(rng);
        v = x;
      }
      break;
    }
    case NoiseKind::R: {
      for (std::size_t i = 0; i < n_samples; ++i) out[i] = coeffs.r * (static_cast<double>(i) / fs);
      break;
    }
    case NoiseKind::Q: {
      if (coeffs.q == 0.0) break;
      // Underlying rate wanders over many grid cells per step, so the rounding
      // error of the angle is close to uniform and independent between samples.
      std::vector<double> rate(n_samples);
      for (double& v : rate) v = 10.0 * coeffs.q * unit(rng);
      out = rate;
      quantize_rate(out, coeffs.q, fs, std::uniform_real_distribution<double>(0.0, 1.0)(rng));
      for (std::size_t i = 0; i < n_samples; ++i) out[i] -= rate[i];
      break;
    }
  }
  return out;
}

std::vector<double> gen_disturbance(const DisturbanceSpec& spec, std::size_t n_samples,
                                    double fs, std::uint64_t seed) {
  spec.validate(fs);
  std::vector<double> out(n_samples, 0.0);
  Rng rng(seed);
  switch (spec.kind) {
    case DisturbanceSpec::Kind::None:
      break;
    case DisturbanceSpec::Kind::Sinusoid: {
      double f = spec.frequency_hz;
      if (spec.frequency_max_hz > spec.frequency_hz) {
        f = std::uniform_real_distribution<double>(spec.frequency_hz, spec.frequency_max_hz)(rng);
      }
      const double phase = spec.phase ? *spec.phase
                                      : std::uniform_real_distribution<double>(
                                            0.0, 2.0 * std::numbers::pi)(rng);
      const double w = 2.0 * std::numbers::pi * f;
      for (std::size_t i = 0; i < n_samples; ++i) {
        out[i] = spec.amplitude * std::sin(w * (static_cast<double>(i) / fs) + phase);
      }
      break;
    }
    case DisturbanceSpec::Kind::Spikes: {
      std::bernoulli_distribution fire(spec.spike_rate / fs);
      std::bernoulli_distribution sign(0.5);
      for (double& v : out) {
        if (fire(rng)) v = sign(rng) ? spec.spike_magnitude : -spec.spike_magnitude;
      }
      break;
    }
  }
  return out;
}

void quantize_rate(std::vector<double>& rate, double q, double fs, double angle_offset) {
  if (!(q > 0.0)) throw InvalidParameterError("quantization step must be > 0");
  require_rate(fs);
  // Angle in grid units: theta / (q / fs) accumulates rate / q per sample.
  double angle = angle_offset;
  double prev_level = std::round(angle);
  for (double& v : rate) {
    angle += v / q;
    const double level = std::round(angle);
    v = (level - prev_level) * q;
    prev_level = level;
  }
}

SignalRecord synthesize_stationary(const ErrorModelParams& params,
                                   const DisturbanceSpec& disturbance, double duration,
                                   double fs, std::uint64_t seed, std::string source_id) {
  return synthesize(params, Vec3::Zero(), disturbance, duration, fs, seed, std::move(source_id));
}

SignalRecord synthesize_constant_rate(const ErrorModelParams& params, const Vec3& true_rate,
                                      const DisturbanceSpec& disturbance, double duration,
                                      double fs, std::uint64_t seed, std::string source_id) {
  return synthesize(params, true_rate, disturbance, duration, fs, seed, std::move(source_id));
}

}  // namespace gyrocal
