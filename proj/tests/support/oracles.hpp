#pragma once

// Reference implementations written directly from the formulas, kept
// independent of the library code they check.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numbers>
#include <random>
#include <span>
#include <vector>

#include "codel/mlp.hpp"

namespace oracle {

// ---------------------------------------------------------------------------
// Objectives and datasets

inline double sphere(std::span<const double> x) {
  double s = 0.0;
  for (double v : x) s += v * v;
  return s;
}

inline codel::Dataset xor_dataset() {
  return codel::Dataset(2, {0, 0, 0, 1, 1, 0, 1, 1}, {0, 1, 1, 0});
}

/// Seeds used by the XOR learnability checks. 20 consecutive values; the
/// threshold (18 of 20) was confirmed by a sweep before it was pinned.
inline constexpr std::array<std::uint64_t, 20> kXorSeeds = {1,  2,  3,  4,  5,  6,  7,  8,  9,  10,
                                                            11, 12, 13, 14, 15, 16, 17, 18, 19, 20};

/// Two isotropic unit-variance Gaussians whose means are 2 (one standard
/// deviation times two) apart in Euclidean distance.
inline codel::Dataset two_gaussians(std::size_t per_class, std::size_t dim, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> noise(0.0, 1.0);
  const double shift = 2.0 / std::sqrt(static_cast<double>(dim));
  std::vector<double> flat;
  std::vector<int> labels;
  for (int label : {0, 1}) {
    for (std::size_t i = 0; i < per_class; ++i) {
      for (std::size_t j = 0; j < dim; ++j) flat.push_back(noise(gen) + (label == 1 ? shift : 0.0));
      labels.push_back(label);
    }
  }
  return codel::Dataset(dim, std::move(flat), std::move(labels));
}

/// ECG-like template train: narrow R wave plus a broad T wave, additive white
/// noise at the requested SNR. Returns samples and true R-peak indices.
struct SyntheticEcg {
  std::vector<double> samples;
  std::vector<std::size_t> peaks;
};

inline SyntheticEcg synthetic_ecg(double fs, double seconds, std::span<const double> rr_s, double snr_db,
                                  std::uint64_t seed) {
  const auto n = static_cast<std::size_t>(seconds * fs);
  SyntheticEcg out;
  out.samples.assign(n, 0.0);
  std::vector<double> beats;
  double t = 0.3;
  for (std::size_t b = 0; t < seconds - 0.3; ++b) {
    beats.push_back(t);
    t += rr_s[b % rr_s.size()];
  }
  for (std::size_t i = 0; i < n; ++i) {
    const double ti = static_cast<double>(i) / fs;
    double v = 0.0;
    for (double tb : beats) {
      v += 1.2 * std::exp(-0.5 * std::pow((ti - tb) / 0.012, 2));
      v += 0.3 * std::exp(-0.5 * std::pow((ti - tb - 0.25) / 0.05, 2));
    }
    out.samples[i] = v;
  }
  for (double tb : beats) out.peaks.push_back(static_cast<std::size_t>(std::llround(tb * fs)));

  double power = 0.0;
  for (double v : out.samples) power += v * v;
  power /= static_cast<double>(n);
  const double sigma = std::sqrt(power / std::pow(10.0, snr_db / 10.0));
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> noise(0.0, sigma);
  for (double& v : out.samples) v += noise(gen);
  return out;
}

// ---------------------------------------------------------------------------
// Plain DE/rand/1/bin: no clustering, no opposition. Same bounds handling
// (clamping) and budget semantics as the optimizer under test.

struct PlainDeResult {
  double best = 0.0;
  std::size_t nfe = 0;
};

inline PlainDeResult plain_de(const std::function<double(std::span<const double>)>& f, std::size_t dim,
                              std::size_t np, std::size_t nfe_max, double F, double CR, double lo, double hi,
                              std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::uniform_real_distribution<double> u01(0.0, 1.0), box(lo, hi);
  std::uniform_int_distribution<std::size_t> pick(0, np - 1), pick_dim(0, dim - 1);

  std::vector<std::vector<double>> pop(np, std::vector<double>(dim));
  std::vector<double> fit(np);
  std::size_t nfe = 0;
  for (std::size_t i = 0; i < np; ++i) {
    for (auto& v : pop[i]) v = box(gen);
    fit[i] = f(pop[i]);
    ++nfe;
  }
  while (nfe < nfe_max) {
    auto next = pop;
    auto next_fit = fit;
    for (std::size_t i = 0; i < np && nfe < nfe_max; ++i) {
      std::size_t a, b, c;
      do a = pick(gen); while (a == i);
      do b = pick(gen); while (b == i || b == a);
      do c = pick(gen); while (c == i || c == a || c == b);
      const std::size_t jr = pick_dim(gen);
      std::vector<double> trial = pop[i];
      for (std::size_t j = 0; j < dim; ++j)
        if (u01(gen) <= CR || j == jr) trial[j] = std::clamp(pop[a][j] + F * (pop[b][j] - pop[c][j]), lo, hi);
      const double ft = f(trial);
      ++nfe;
      if (ft <= fit[i]) {
        next[i] = std::move(trial);
        next_fit[i] = ft;
      }
    }
    pop = std::move(next);
    fit = std::move(next_fit);
  }
  return {*std::min_element(fit.begin(), fit.end()), nfe};
}

// ---------------------------------------------------------------------------
// HRV formulas, transcribed one by one.

struct HrvValues {
  double bpm, ibi, sdnn, sdsd, rmssd, pnn20, pnn50, hr_mad, sd1, sd2, s, ratio;
};

inline HrvValues hrv(const std::vector<double>& rr) {
  const std::size_t N = rr.size();
  long double sum = 0;
  for (double v : rr) sum += v;
  const long double mean = sum / N;

  long double dev2 = 0;
  for (double v : rr) dev2 += (v - mean) * (v - mean);
  const long double sdnn = std::sqrt(dev2 / N);

  std::vector<long double> absdiff;
  for (std::size_t i = 0; i + 1 < N; ++i) absdiff.push_back(std::fabs(static_cast<long double>(rr[i + 1]) - rr[i]));
  long double dm = 0;
  for (auto d : absdiff) dm += d;
  dm /= absdiff.size();
  long double dd = 0;
  for (auto d : absdiff) dd += (d - dm) * (d - dm);
  const long double sdsd = std::sqrt(dd / absdiff.size());

  long double sq = 0;
  for (auto d : absdiff) sq += d * d;
  const long double rmssd = std::sqrt(sq / (N - 1));

  double c20 = 0, c50 = 0;
  for (auto d : absdiff) {
    if (d > 20) c20 += 1;
    if (d > 50) c50 += 1;
  }

  std::vector<double> sorted = rr;
  std::sort(sorted.begin(), sorted.end());
  const long double med =
      N % 2 ? sorted[N / 2] : (static_cast<long double>(sorted[N / 2 - 1]) + sorted[N / 2]) / 2;
  long double mad = 0;
  for (double v : rr) mad += std::fabs(v - med);

  // Poincare: x = rr[0..N-2], y = rr[1..N-1]. var(d / sqrt 2) = var(d) / 2;
  // scaling after the variance keeps constant series at exactly zero.
  const std::size_t M = N - 1;
  std::vector<long double> d1(M), d2(M);
  for (std::size_t i = 0; i < M; ++i) {
    d1[i] = static_cast<long double>(rr[i]) - rr[i + 1];
    d2[i] = static_cast<long double>(rr[i]) + rr[i + 1];
  }
  auto pvar = [](const std::vector<long double>& v) {
    long double m = 0;
    for (auto x : v) m += x;
    m /= v.size();
    long double s = 0;
    for (auto x : v) s += (x - m) * (x - m);
    return s / v.size();
  };
  const long double sd1 = std::sqrt(pvar(d1) / 2), sd2 = std::sqrt(pvar(d2) / 2);

  HrvValues h{};
  h.bpm = static_cast<double>(60000.0L / mean);
  h.ibi = static_cast<double>(mean);
  h.sdnn = static_cast<double>(sdnn);
  h.sdsd = static_cast<double>(sdsd);
  h.rmssd = static_cast<double>(rmssd);
  h.pnn20 = c20 / static_cast<double>(N) * 100.0;
  h.pnn50 = c50 / static_cast<double>(N) * 100.0;
  h.hr_mad = static_cast<double>(mad / N);
  h.sd1 = static_cast<double>(sd1);
  h.sd2 = static_cast<double>(sd2);
  h.s = static_cast<double>(std::numbers::pi_v<long double> * sd1 * sd2);
  h.ratio = sd2 > 0 ? static_cast<double>(sd1 / sd2) : 0.0;
  return h;
}

/// Tachogram interpolated at 4 Hz from the first to the last beat time,
/// mean removed, periodogram scanned over 0.1..0.4 Hz in 0.0005 Hz steps.
/// Returns 60 times the frequency of the largest bin.
inline double breathing_rate(const std::vector<double>& rr) {
  std::vector<long double> beat_t;
  long double t = 0;
  for (double v : rr) beat_t.push_back(t += v / 1000.0L);
  std::vector<long double> u;
  for (std::size_t s = 0;; ++s) {
    const long double ts = beat_t.front() + s * 0.25L;
    if (ts > beat_t.back() + 1e-12L) break;
    // last beat interval starting at or before ts
    std::size_t i = std::upper_bound(beat_t.begin(), beat_t.end(), ts) - beat_t.begin();
    i = std::clamp<std::size_t>(i, 1, beat_t.size() - 1) - 1;
    const long double frac = std::clamp((ts - beat_t[i]) / (beat_t[i + 1] - beat_t[i]), 0.0L, 1.0L);
    u.push_back(rr[i] + frac * (rr[i + 1] - rr[i]));
  }
  // Flat tachogram: zero spectrum, the first bin is reported.
  if (std::adjacent_find(u.begin(), u.end(), std::not_equal_to<>()) == u.end()) return 6.0;
  long double mean = 0;
  for (auto v : u) mean += v;
  mean /= u.size();
  for (auto& v : u) v -= mean;
  long double best_power = -1, best_f = 0;
  for (int s = 0; s <= 600; ++s) {
    const long double f = 0.1L + s * 0.0005L;
    long double re = 0, im = 0;
    for (std::size_t i = 0; i < u.size(); ++i) {
      const long double ph = 2 * std::numbers::pi_v<long double> * f * i * 0.25L;
      re += u[i] * std::cos(ph);
      im += u[i] * std::sin(ph);
    }
    const long double power = re * re + im * im;
    if (power > best_power) {
      best_power = power;
      best_f = f;
    }
  }
  return static_cast<double>(60 * best_f);
}

// ---------------------------------------------------------------------------
// Confusion-matrix metrics in exact rational form.

struct Rational {
  std::uint64_t num = 0, den = 1;
  [[nodiscard]] bool defined() const { return den != 0; }
  /// Correctly rounded double value (num, den < 2^53 keeps both exact).
  [[nodiscard]] double value() const { return den ? static_cast<double>(num) / static_cast<double>(den) : 0.0; }
};

struct RationalMetrics {
  Rational accuracy, sensitivity, specificity, precision, fscore;
  /// gmean^2 = sensitivity * specificity, kept exact.
  Rational gmean_squared;
};

inline RationalMetrics rational_metrics(std::uint64_t tp, std::uint64_t tn, std::uint64_t fp, std::uint64_t fn) {
  RationalMetrics m;
  m.accuracy = {tp + tn, tp + tn + fp + fn};
  m.sensitivity = {tp, tp + fn};
  m.specificity = {tn, tn + fp};
  m.precision = {tp, tp + fp};
  m.fscore = {2 * tp, 2 * tp + fp + fn};
  if (m.sensitivity.defined() && m.specificity.defined())
    m.gmean_squared = {tp * tn, (tp + fn) * (tn + fp)};
  else
    m.gmean_squared = {0, 1};
  return m;
}

// ---------------------------------------------------------------------------
// Central finite differences on an independent long-double forward pass, so
// the oracle's own rounding stays far below the tolerance it checks.

/// Mean over samples and outputs of (o - d)^2; flat layout per layer is
/// destination-major weights followed by biases.
inline long double mse_long_double(const std::vector<long double>& p, const codel::MlpTopology& topo,
                                   const codel::Dataset& data) {
  const auto& sizes = topo.sizes();
  long double total = 0;
  for (std::size_t s = 0; s < data.size(); ++s) {
    std::vector<long double> a(data.row(s).begin(), data.row(s).end());
    std::size_t off = 0;
    for (std::size_t l = 0; l + 1 < sizes.size(); ++l) {
      const std::size_t in = sizes[l], out = sizes[l + 1];
      std::vector<long double> z(out);
      for (std::size_t j = 0; j < out; ++j) {
        long double acc = p[off + in * out + j];
        for (std::size_t i = 0; i < in; ++i) acc += p[off + j * in + i] * a[i];
        z[j] = 1 / (1 + std::exp(-acc));
      }
      off += in * out + out;
      a = std::move(z);
    }
    for (std::size_t k = 0; k < a.size(); ++k) {
      const long double target = topo.outputs() == 1 ? data.label(s) : (static_cast<int>(k) == data.label(s));
      total += (a[k] - target) * (a[k] - target);
    }
  }
  return total / static_cast<long double>(data.size() * topo.outputs());
}

inline std::vector<double> finite_difference_gradient(const std::vector<double>& params,
                                                      const codel::MlpTopology& topo, const codel::Dataset& data,
                                                      long double h = 1e-5L) {
  std::vector<long double> x(params.begin(), params.end());
  std::vector<double> g(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const long double keep = x[i];
    x[i] = keep + h;
    const long double up = mse_long_double(x, topo, data);
    x[i] = keep - h;
    const long double down = mse_long_double(x, topo, data);
    x[i] = keep;
    g[i] = static_cast<double>((up - down) / (2 * h));
  }
  return g;
}

/// max_i |a_i - b_i| / max(|a_i|, |b_i|); components that are both zero match.
inline double max_relative_error(std::span<const double> a, std::span<const double> b) {
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double denom = std::max(std::abs(a[i]), std::abs(b[i]));
    if (denom > 0.0) worst = std::max(worst, std::abs(a[i] - b[i]) / denom);
  }
  return worst;
}

}  // namespace oracle
