#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <numbers>
#include <optional>
#include <string_view>
#include <vector>

#include "codel/error.hpp"
#include "codel/signal.hpp"

namespace codel {

struct TimeDomainFeatures {
  double bpm = 0.0;
  double ibi = 0.0;
  double sdnn = 0.0;
  double sdsd = 0.0;
  double rmssd = 0.0;
  double pnn20 = 0.0;
  double pnn50 = 0.0;
  double hr_mad = 0.0;
};

struct PoincareFeatures {
  double sd1 = 0.0;
  double sd2 = 0.0;
  double s = 0.0;
  std::optional<double> ratio;  // empty when sd2 == 0
};

struct BreathingEstimate {
  double breaths_per_min = 0.0;
  double dominant_hz = 0.0;
  /// Share of the tachogram variance carried by the dominant tone.
  double explained = 0.0;
  bool low_confidence = false;
};

/// The 13-feature input vector of the classifier.
struct FeatureRecord {
  static constexpr std::size_t kSize = 13;
  static constexpr std::array<std::string_view, kSize> kNames = {
      "bpm", "ibi", "sdnn", "sdsd", "rmssd", "pnn20", "pnn50",
      "hr_mad", "sd1", "sd2", "s", "ratio", "breathing_rate"};

  double bpm = 0.0;
  double ibi = 0.0;
  double sdnn = 0.0;
  double sdsd = 0.0;
  double rmssd = 0.0;
  double pnn20 = 0.0;
  double pnn50 = 0.0;
  double hr_mad = 0.0;
  double sd1 = 0.0;
  double sd2 = 0.0;
  double s = 0.0;
  double ratio = 0.0;  // imputed 0 when undefined, see ratio_defined
  double breathing_rate = 0.0;

  bool ratio_defined = true;
  bool breathing_low_confidence = false;

  [[nodiscard]] std::array<double, kSize> values() const {
    return {bpm, ibi, sdnn, sdsd, rmssd, pnn20, pnn50, hr_mad, sd1, sd2, s, ratio, breathing_rate};
  }
};

namespace detail {

inline void require_beats(const RrSeries& rr, std::size_t min_n) {
  if (rr.size() < min_n)
    throw InsufficientDataError("need at least " + std::to_string(min_n) + " RR intervals, got " +
                                std::to_string(rr.size()));
}

inline double mean_of(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

inline double population_sd(std::span<const double> v) {
  if (std::adjacent_find(v.begin(), v.end(), std::not_equal_to<>()) == v.end()) return 0.0;
  const double m = mean_of(v);
  double ss = 0.0;
  for (double x : v) ss += (x - m) * (x - m);
  return std::sqrt(ss / static_cast<double>(v.size()));
}

}  // namespace detail

inline TimeDomainFeatures time_domain_features(const RrSeries& rr) {
  detail::require_beats(rr, 3);
  const auto x = rr.intervals();
  const std::size_t n = x.size();
  const double nd = static_cast<double>(n);

  TimeDomainFeatures f;
  const double mean = detail::mean_of(x);
  f.ibi = mean;
  f.bpm = 60000.0 / mean;
  f.sdnn = detail::population_sd(x);

  std::vector<double> abs_diff(n - 1);
  double sq = 0.0;
  std::size_t nn20 = 0, nn50 = 0;
  for (std::size_t i = 0; i + 1 < n; ++i) {
    const double d = x[i + 1] - x[i];
    abs_diff[i] = std::abs(d);
    sq += d * d;
    if (abs_diff[i] > 20.0) ++nn20;
    if (abs_diff[i] > 50.0) ++nn50;
  }
  f.sdsd = detail::population_sd(abs_diff);
  f.rmssd = std::sqrt(sq / static_cast<double>(n - 1));
  f.pnn20 = static_cast<double>(nn20) / nd * 100.0;
  f.pnn50 = static_cast<double>(nn50) / nd * 100.0;

  const double med = detail::median_of(std::vector<double>(x.begin(), x.end()));
  double mad = 0.0;
  for (double v : x) mad += std::abs(v - med);
  f.hr_mad = mad / nd;
  return f;
}

inline PoincareFeatures poincare_features(const RrSeries& rr) {
  detail::require_beats(rr, 3);
  const auto x = rr.intervals();
  const std::size_t m = x.size() - 1;
  std::vector<double> d1(m), d2(m);
  for (std::size_t i = 0; i < m; ++i) {
    d1[i] = x[i] - x[i + 1];
    d2[i] = x[i] + x[i + 1];
  }
  // The 1/sqrt(2) factor is applied after the spread so constant sums give exactly 0.
  PoincareFeatures p;
  p.sd1 = detail::population_sd(d1) / std::numbers::sqrt2;
  p.sd2 = detail::population_sd(d2) / std::numbers::sqrt2;
  p.s = std::numbers::pi * p.sd1 * p.sd2;
  if (p.sd2 > 0.0) p.ratio = p.sd1 / p.sd2;
  return p;
}

struct BreathingOptions {
  double resample_hz = 4.0;
  double band_lo_hz = 0.1;
  double band_hi_hz = 0.4;
  double grid_step_hz = 0.0005;
  double min_duration_s = 10.0;
  double confidence_threshold = 0.3;
};

/// Dominant respiratory-band frequency of the interpolated RR tachogram.
inline BreathingEstimate breathing_rate_estimate(const RrSeries& rr, const BreathingOptions& opts = {}) {
  detail::require_beats(rr, 2);
  const double duration_s = rr.duration_ms() / 1000.0;
  if (duration_s < opts.min_duration_s)
    throw InsufficientDataError("breathing rate needs >= " + std::to_string(opts.min_duration_s) +
                                " s of RR data, got " + std::to_string(duration_s) + " s");

  const auto x = rr.intervals();
  std::vector<double> t(x.size());
  double acc = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    acc += x[i] / 1000.0;
    t[i] = acc;
  }

  // Linear interpolation onto a uniform grid spanning the beat times.
  const double dt = 1.0 / opts.resample_hz;
  std::vector<double> u;
  std::size_t seg = 0;
  for (double tt = t.front(); tt <= t.back() + 1e-12; tt += dt) {
    while (seg + 2 < t.size() && t[seg + 1] < tt) ++seg;
    const double span = t[seg + 1] - t[seg];
    const double w = std::clamp((tt - t[seg]) / span, 0.0, 1.0);
    u.push_back(x[seg] + w * (x[seg + 1] - x[seg]));
  }
  // A flat tachogram has an all-zero spectrum; keep it exactly zero so the
  // band's lowest frequency wins instead of rounding noise in the mean.
  const bool flat = std::adjacent_find(u.begin(), u.end(), std::not_equal_to<>()) == u.end();
  const double mean = flat ? u.front() : detail::mean_of(u);
  double var = 0.0;
  for (double& v : u) {
    v -= mean;
    var += v * v;
  }
  const double m = static_cast<double>(u.size());
  var /= m;

  BreathingEstimate best;
  double best_power = -1.0;
  const auto steps = static_cast<std::size_t>(
      std::llround((opts.band_hi_hz - opts.band_lo_hz) / opts.grid_step_hz));
  for (std::size_t s = 0; s <= steps; ++s) {
    const double f = opts.band_lo_hz + static_cast<double>(s) * opts.grid_step_hz;
    const double w = 2.0 * std::numbers::pi * f * dt;
    double re = 0.0, im = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i) {
      re += u[i] * std::cos(w * static_cast<double>(i));
      im -= u[i] * std::sin(w * static_cast<double>(i));
    }
    const double power = re * re + im * im;
    if (power > best_power) {
      best_power = power;
      best.dominant_hz = f;
    }
  }
  best.breaths_per_min = 60.0 * best.dominant_hz;
  best.explained = var > 0.0 ? 2.0 * best_power / (m * m * var) : 0.0;
  best.low_confidence = best.explained < opts.confidence_threshold;
  return best;
}

inline double breathing_rate(const RrSeries& rr, const BreathingOptions& opts = {}) {
  return breathing_rate_estimate(rr, opts).breaths_per_min;
}

inline FeatureRecord extract_features(const RrSeries& rr, const BreathingOptions& opts = {}) {
  const auto td = time_domain_features(rr);
  const auto pc = poincare_features(rr);
  const auto br = breathing_rate_estimate(rr, opts);

  FeatureRecord r;
  r.bpm = td.bpm;
  r.ibi = td.ibi;
  r.sdnn = td.sdnn;
  r.sdsd = td.sdsd;
  r.rmssd = td.rmssd;
  r.pnn20 = td.pnn20;
  r.pnn50 = td.pnn50;
  r.hr_mad = td.hr_mad;
  r.sd1 = pc.sd1;
  r.sd2 = pc.sd2;
  r.s = pc.s;
  r.ratio_defined = pc.ratio.has_value();
  r.ratio = pc.ratio.value_or(0.0);
  r.breathing_rate = br.breaths_per_min;
  r.breathing_low_confidence = br.low_confidence;
  return r;
}

}  // namespace codel
