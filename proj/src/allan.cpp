#include "gyrocal/allan.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "gyrocal/errors.hpp"

namespace gyrocal {

namespace {

// Half-width of the local-slope tolerance used to classify curve regions.
constexpr double kSlopeTolerance = 0.2;
// Points on each side of the local log-log slope fit.
constexpr std::size_t kSlopeHalfWindow = 2;

std::size_t cluster_size(double tau, double fs) {
  const double m = tau * fs;
  const double rounded = std::round(m);
  if (rounded < 1.0 || std::abs(m - rounded) > 1e-6 * std::max(1.0, rounded)) {
    std::ostringstream os;
    os << "tau " << tau << " s is not a whole number of samples at " << fs << " Hz";
    throw InvalidParameterError(os.str());
  }
  return static_cast<std::size_t>(rounded);
}

std::vector<double> local_slopes(const AllanCurve& c, const std::vector<std::size_t>& idx) {
  std::vector<double> slopes(idx.size(), 0.0);
  for (std::size_t p = 0; p < idx.size(); ++p) {
    const std::size_t lo = p >= kSlopeHalfWindow ? p - kSlopeHalfWindow : 0;
    const std::size_t hi = std::min(idx.size() - 1, p + kSlopeHalfWindow);
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    const double cnt = static_cast<double>(hi - lo + 1);
    for (std::size_t q = lo; q <= hi; ++q) {
      const double x = std::log10(c.taus[idx[q]]);
      const double y = std::log10(c.sigma[idx[q]]);
      sx += x;
      sy += y;
      sxx += x * x;
      sxy += x * y;
    }
    const double den = cnt * sxx - sx * sx;
    slopes[p] = den > 0.0 ? (cnt * sxy - sx * sy) / den : 0.0;
  }
  return slopes;
}

// Fits log sigma = slope * log tau + c with the slope fixed, weighting each
// point by its cluster count, and evaluates the line at tau_eval.
std::optional<CoefficientEstimate> fixed_slope_fit(const AllanCurve& c,
                                                   const std::vector<std::size_t>& idx,
                                                   const std::vector<double>& slopes,
                                                   double slope, double tau_eval) {
  double wsum = 0.0, acc = 0.0;
  double tmin = 0.0, tmax = 0.0;
  bool any = false;
  for (std::size_t p = 0; p < idx.size(); ++p) {
    if (std::abs(slopes[p] - slope) > kSlopeTolerance) continue;
    const std::size_t i = idx[p];
    const double w = static_cast<double>(c.n_clusters[i]);
    acc += w * (std::log(c.sigma[i]) - slope * std::log(c.taus[i] / tau_eval));
    wsum += w;
    if (!any) tmin = c.taus[i];
    tmax = c.taus[i];
    any = true;
  }
  if (!any) return std::nullopt;
  return CoefficientEstimate{std::exp(acc / wsum), tmin, tmax};
}

}  // namespace

Axis parse_axis(std::string_view s) {
  if (s == "x") return Axis::X;
  if (s == "y") return Axis::Y;
  if (s == "z") return Axis::Z;
  throw InvalidParameterError("axis must be x, y or z");
}

std::vector<double> log_tau_grid(double fs, std::size_t n_samples, int points_per_decade) {
  if (!(fs > 0.0)) throw InvalidParameterError("sample rate must be > 0");
  if (points_per_decade < 1) throw InvalidParameterError("points_per_decade must be >= 1");
  std::vector<double> taus;
  const std::size_t m_max = n_samples / kMinClusters;
  std::size_t last = 0;
  for (int j = 0;; ++j) {
    const double m_real = std::pow(10.0, static_cast<double>(j) / points_per_decade);
    const auto m = static_cast<std::size_t>(std::floor(m_real));
    if (m > m_max) break;
    if (m != last) {
      taus.push_back(static_cast<double>(m) / fs);
      last = m;
    }
  }
  return taus;
}

AllanCurve allan_deviation(std::span<const double> signal, double fs, std::span<const double> taus) {
  if (!(fs > 0.0)) throw InvalidParameterError("sample rate must be > 0");
  const std::size_t n = signal.size();

  std::vector<std::size_t> sizes(taus.size());
  for (std::size_t t = 0; t < taus.size(); ++t) {
    sizes[t] = cluster_size(taus[t], fs);
    if (t > 0 && !(taus[t] > taus[t - 1])) throw InvalidParameterError("taus must be strictly increasing");
    if (n / sizes[t] < kMinClusters) {
      std::ostringstream os;
      os << "tau " << taus[t] << " s leaves " << n / sizes[t] << " clusters in a "
         << n << "-sample record (need " << kMinClusters << ")";
      throw InsufficientDataError(os.str());
    }
  }

  // Prefix sums of the signal relative to its first sample; a constant input
  // then yields exact zeros.
  std::vector<double> prefix(n + 1, 0.0);
  const double ref = n > 0 ? signal[0] : 0.0;
  for (std::size_t i = 0; i < n; ++i) prefix[i + 1] = prefix[i] + (signal[i] - ref);

  AllanCurve curve;
  curve.taus.assign(taus.begin(), taus.end());
  curve.sigma.assign(taus.size(), 0.0);
  curve.n_clusters.resize(taus.size());

  const auto n_taus = static_cast<std::ptrdiff_t>(taus.size());
#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t t = 0; t < n_taus; ++t) {
    const std::size_t m = sizes[t];
    const std::size_t terms = n - 2 * m + 1;
    double acc = 0.0;
    for (std::size_t k = 0; k < terms; ++k) {
      const double d = prefix[k + 2 * m] - 2.0 * prefix[k + m] + prefix[k];
      acc += d * d;
    }
    const double md = static_cast<double>(m);
    curve.sigma[t] = std::sqrt(acc / (2.0 * md * md * static_cast<double>(terms)));
    curve.n_clusters[t] = n / m;
  }
  return curve;
}

std::vector<double> axis_signal(const SignalRecord& record, Axis axis) {
  std::vector<double> s(record.size());
  const int a = static_cast<int>(axis);
  for (std::size_t i = 0; i < s.size(); ++i) s[i] = record.samples[i][a];
  return s;
}

AllanCurve allan_deviation(const SignalRecord& record, Axis axis, std::span<const double> taus) {
  const std::vector<double> s = axis_signal(record, axis);
  return allan_deviation(s, record.fs, taus);
}

AllanCurve allan_deviation(const SignalRecord& record, Axis axis) {
  const std::vector<double> taus = log_tau_grid(record.fs, record.size());
  return allan_deviation(record, axis, taus);
}

NoiseFit fit_noise_coefficients(const AllanCurve& curve) {
  if (curve.taus.size() != curve.sigma.size() || curve.taus.size() != curve.n_clusters.size()) {
    throw DimensionError("Allan curve fields have different lengths");
  }
  std::vector<std::size_t> idx;
  for (std::size_t i = 0; i < curve.taus.size(); ++i) {
    if (curve.sigma[i] > 0.0 && std::isfinite(curve.sigma[i])) idx.push_back(i);
  }
  NoiseFit fit;
  if (idx.size() < 2 * kSlopeHalfWindow + 1) return fit;
  if (curve.taus[idx.back()] / curve.taus[idx.front()] < 100.0) {
    throw InsufficientDataError("Allan curve spans less than two decades of tau");
  }

  const std::vector<double> slopes = local_slopes(curve, idx);
  fit.n = fixed_slope_fit(curve, idx, slopes, -0.5, 1.0);
  fit.k = fixed_slope_fit(curve, idx, slopes, 0.5, 3.0);

  // Bias instability: a minimum strictly inside the curve with a flat
  // neighbourhood.
  std::size_t pmin = 0;
  for (std::size_t p = 1; p < idx.size(); ++p) {
    if (curve.sigma[idx[p]] < curve.sigma[idx[pmin]]) pmin = p;
  }
  if (pmin > 0 && pmin + 1 < idx.size() && std::abs(slopes[pmin]) <= kSlopeTolerance) {
    std::size_t lo = pmin, hi = pmin;
    while (lo > 0 && std::abs(slopes[lo - 1]) <= kSlopeTolerance) --lo;
    while (hi + 1 < idx.size() && std::abs(slopes[hi + 1]) <= kSlopeTolerance) ++hi;
    fit.b = CoefficientEstimate{curve.sigma[idx[pmin]] / kBiasInstabilityFactor,
                                curve.taus[idx[lo]], curve.taus[idx[hi]]};
  }
  return fit;
}

}  // namespace gyrocal
