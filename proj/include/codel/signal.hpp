#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "codel/error.hpp"

namespace codel {

/// Single-channel sampled signal.
class Signal {
 public:
  Signal(std::vector<double> samples, double fs) : samples_(std::move(samples)), fs_(fs) {
    if (!(fs_ > 0.0) || !std::isfinite(fs_)) throw ParameterError("sampling rate must be positive");
    if (samples_.empty()) throw InsufficientDataError("signal must contain at least one sample");
    for (double v : samples_)
      if (!std::isfinite(v)) throw ParameterError("signal contains a non-finite sample");
  }

  [[nodiscard]] std::span<const double> samples() const { return samples_; }
  [[nodiscard]] double fs() const { return fs_; }
  [[nodiscard]] std::size_t size() const { return samples_.size(); }
  [[nodiscard]] double operator[](std::size_t i) const { return samples_[i]; }

 private:
  std::vector<double> samples_;
  double fs_;
};

/// Inter-beat intervals in milliseconds.
class RrSeries {
 public:
  explicit RrSeries(std::vector<double> intervals_ms) : rr_(std::move(intervals_ms)) {
    for (double v : rr_)
      if (!(v > 0.0) || !std::isfinite(v))
        throw ParameterError("RR intervals must be positive and finite");
  }

  [[nodiscard]] std::span<const double> intervals() const { return rr_; }
  [[nodiscard]] std::size_t size() const { return rr_.size(); }
  [[nodiscard]] double operator[](std::size_t i) const { return rr_[i]; }

  /// Total duration in milliseconds.
  [[nodiscard]] double duration_ms() const {
    double t = 0.0;
    for (double v : rr_) t += v;
    return t;
  }

 private:
  std::vector<double> rr_;
};

namespace detail {

inline double median_of(std::vector<double> v) {
  const std::size_t n = v.size();
  const auto mid = v.begin() + static_cast<std::ptrdiff_t>(n / 2);
  std::nth_element(v.begin(), mid, v.end());
  double hi = *mid;
  if (n % 2 == 1) return hi;
  double lo = *std::max_element(v.begin(), mid);
  return 0.5 * (lo + hi);
}

}  // namespace detail

/// Zero mean, unit population variance. A constant signal maps to zeros.
inline Signal standardize(const Signal& signal) {
  const auto x = signal.samples();
  const double n = static_cast<double>(x.size());
  double mean = 0.0;
  for (double v : x) mean += v;
  mean /= n;
  double var = 0.0;
  for (double v : x) var += (v - mean) * (v - mean);
  const double sd = std::sqrt(var / n);

  std::vector<double> out(x.size(), 0.0);
  if (sd >= 1e-12)
    for (std::size_t i = 0; i < x.size(); ++i) out[i] = (x[i] - mean) / sd;
  return Signal(std::move(out), signal.fs());
}

struct HampelOptions {
  std::size_t half_window = 0;  // 0 selects round(fs / 2)
  double n_sigmas = 3.0;
};

/// Replaces outliers by their windowed median. Windows shrink at the edges.
inline Signal hampel_filter(const Signal& signal, std::size_t half_window, double n_sigmas) {
  if (half_window < 1) throw ParameterError("hampel half_window must be >= 1");
  if (!(n_sigmas > 0.0)) throw ParameterError("hampel n_sigmas must be > 0");
  constexpr double kMadScale = 1.4826;

  const auto x = signal.samples();
  const std::size_t n = x.size();
  std::vector<double> out(x.begin(), x.end());
  std::vector<double> window;
  std::vector<double> dev;
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t lo = i >= half_window ? i - half_window : 0;
    const std::size_t hi = std::min(n - 1, i + half_window);
    window.assign(x.begin() + static_cast<std::ptrdiff_t>(lo),
                  x.begin() + static_cast<std::ptrdiff_t>(hi + 1));
    const double med = detail::median_of(window);
    dev.resize(window.size());
    for (std::size_t j = 0; j < window.size(); ++j) dev[j] = std::abs(window[j] - med);
    const double mad = detail::median_of(dev);
    if (std::abs(x[i] - med) > n_sigmas * kMadScale * mad) out[i] = med;
  }
  return Signal(std::move(out), signal.fs());
}

inline Signal hampel_filter(const Signal& signal, const HampelOptions& opts = {}) {
  std::size_t hw = opts.half_window;
  if (hw == 0) hw = std::max<std::size_t>(1, static_cast<std::size_t>(std::lround(signal.fs() / 2.0)));
  return hampel_filter(signal, hw, opts.n_sigmas);
}

/// One biquad in normalized form (a0 = 1).
struct Biquad {
  double b0, b1, b2, a1, a2;
};

/// Digital Butterworth low-pass as cascaded second-order sections (bilinear
/// transform with frequency prewarping). `order` must be even.
inline std::vector<Biquad> butterworth_lowpass_sections(double cutoff_hz, double fs, int order) {
  if (!(fs > 0.0)) throw ParameterError("sampling rate must be positive");
  if (!(cutoff_hz > 0.0) || !(cutoff_hz < fs / 2.0))
    throw ParameterError("butterworth cutoff must lie strictly between 0 and fs/2");
  if (order != 2 && order != 4 && order != 6)
    throw ParameterError("butterworth order must be 2, 4 or 6");

  const double k = std::tan(std::numbers::pi * cutoff_hz / fs);
  const double k2 = k * k;
  std::vector<Biquad> sections;
  for (int s = 0; s < order / 2; ++s) {
    // Pole pair quality factor of the analog prototype.
    const double q = 1.0 / (2.0 * std::sin(std::numbers::pi * (2.0 * s + 1.0) / (2.0 * order)));
    const double norm = 1.0 / (1.0 + k / q + k2);
    Biquad bq{};
    bq.b0 = k2 * norm;
    bq.b1 = 2.0 * bq.b0;
    bq.b2 = bq.b0;
    bq.a1 = 2.0 * (k2 - 1.0) * norm;
    bq.a2 = (1.0 - k / q + k2) * norm;
    sections.push_back(bq);
  }
  return sections;
}

/// |H(e^{j 2 pi f / fs})| of a cascade.
inline double sections_magnitude(std::span<const Biquad> sections, double freq_hz, double fs) {
  const double w = 2.0 * std::numbers::pi * freq_hz / fs;
  const double c1 = std::cos(w), s1 = std::sin(w);
  const double c2 = std::cos(2 * w), s2 = std::sin(2 * w);
  double mag = 1.0;
  for (const auto& q : sections) {
    const double nr = q.b0 + q.b1 * c1 + q.b2 * c2, ni = -(q.b1 * s1 + q.b2 * s2);
    const double dr = 1.0 + q.a1 * c1 + q.a2 * c2, di = -(q.a1 * s1 + q.a2 * s2);
    mag *= std::sqrt((nr * nr + ni * ni) / (dr * dr + di * di));
  }
  return mag;
}

inline Signal butterworth_lowpass(const Signal& signal, double cutoff_hz = 25.0, int order = 4) {
  const auto sections = butterworth_lowpass_sections(cutoff_hz, signal.fs(), order);
  std::vector<double> y(signal.samples().begin(), signal.samples().end());
  for (const auto& q : sections) {
    // Transposed direct form II, zero initial state.
    double z1 = 0.0, z2 = 0.0;
    for (double& v : y) {
      const double in = v;
      const double out = q.b0 * in + z1;
      z1 = q.b1 * in - q.a1 * out + z2;
      z2 = q.b2 * in - q.a2 * out;
      v = out;
    }
  }
  return Signal(std::move(y), signal.fs());
}

struct PeakDetectorOptions {
  double window_s = 1.0;       // half-width of the rolling statistics window
  double amplitude_frac = 0.5; // threshold = rolling mean + frac * (rolling max - rolling mean)
  double refractory_s = 0.3;
};

/// Adaptive-threshold local-maximum R-peak detector. Returned indices are
/// strictly increasing and at least refractory_s * fs apart.
inline std::vector<std::size_t> detect_r_peaks(const Signal& signal,
                                               const PeakDetectorOptions& opts = {}) {
  const auto x = signal.samples();
  const std::size_t n = x.size();
  std::vector<std::size_t> peaks;
  if (n < 3) return peaks;

  const auto half = static_cast<std::size_t>(std::max(1.0, std::round(opts.window_s * signal.fs())));
  const auto refractory = static_cast<std::size_t>(std::ceil(opts.refractory_s * signal.fs()));

  std::vector<double> prefix(n + 1, 0.0);
  for (std::size_t i = 0; i < n; ++i) prefix[i + 1] = prefix[i] + x[i];

  for (std::size_t i = 1; i + 1 < n; ++i) {
    if (!(x[i] >= x[i - 1] && x[i] > x[i + 1])) continue;
    const std::size_t lo = i >= half ? i - half : 0;
    const std::size_t hi = std::min(n - 1, i + half);
    const double mean = (prefix[hi + 1] - prefix[lo]) / static_cast<double>(hi - lo + 1);
    double mx = x[lo];
    for (std::size_t j = lo + 1; j <= hi; ++j) mx = std::max(mx, x[j]);
    const double threshold = mean + opts.amplitude_frac * (mx - mean);
    if (!(x[i] > mean) || !(x[i] >= threshold)) continue;

    if (!peaks.empty() && i - peaks.back() < refractory) {
      if (x[i] > x[peaks.back()]) peaks.back() = i;
      continue;
    }
    peaks.push_back(i);
  }
  return peaks;
}

/// Converts beat sample indices to RR intervals in milliseconds.
inline RrSeries rr_from_peaks(std::span<const std::size_t> peaks, double fs) {
  if (!(fs > 0.0)) throw ParameterError("sampling rate must be positive");
  if (peaks.size() < 3)
    throw InsufficientDataError("at least 3 beats are required, found " + std::to_string(peaks.size()));
  std::vector<double> rr;
  rr.reserve(peaks.size() - 1);
  for (std::size_t i = 0; i + 1 < peaks.size(); ++i) {
    if (peaks[i + 1] <= peaks[i]) throw ContractError("peak indices must be strictly increasing");
    rr.push_back(static_cast<double>(peaks[i + 1] - peaks[i]) / fs * 1000.0);
  }
  return RrSeries(std::move(rr));
}

struct PreprocessOptions {
  double cutoff_hz = 25.0;
  int butterworth_order = 4;
  PeakDetectorOptions peaks{};
  // Outlier rejection on the RR tachogram; the window is counted in beats.
  std::size_t rr_hampel_half_window = 5;
  double hampel_sigmas = 3.0;
};

/// standardize -> butterworth -> detect -> RR -> hampel on the intervals.
/// A sample-domain Hampel pass would treat the narrow R peaks as outliers.
inline RrSeries signal_to_rr(const Signal& raw, const PreprocessOptions& opts = {}) {
  // Cutoff is clipped below Nyquist so low-rate inputs still run.
  const double cutoff = std::min(opts.cutoff_hz, 0.45 * raw.fs());
  const Signal s = butterworth_lowpass(standardize(raw), cutoff, opts.butterworth_order);
  const auto rr = rr_from_peaks(detect_r_peaks(s, opts.peaks), raw.fs());
  const auto iv = rr.intervals();
  const Signal cleaned = hampel_filter(Signal(std::vector<double>(iv.begin(), iv.end()), 1.0),
                                       opts.rr_hampel_half_window, opts.hampel_sigmas);
  const auto out = cleaned.samples();
  return RrSeries(std::vector<double>(out.begin(), out.end()));
}

}  // namespace codel
