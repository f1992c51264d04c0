#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <numeric>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "codel/error.hpp"
#include "codel/mlp.hpp"
#include "codel/rng.hpp"

namespace codel {

struct ConfusionMatrix {
  std::uint64_t tp = 0, tn = 0, fp = 0, fn = 0;

  [[nodiscard]] std::uint64_t total() const { return tp + tn + fp + fn; }

  void add(int truth, int predicted) {
    if (truth == 1)
      predicted == 1 ? ++tp : ++fn;
    else
      predicted == 1 ? ++fp : ++tn;
  }
};

enum MetricId : std::size_t { kAccuracy, kSensitivity, kSpecificity, kPrecision, kFscore, kGmean, kMetricCount };

inline constexpr std::array<std::string_view, kMetricCount> kMetricNames = {
    "accuracy", "sensitivity", "specificity", "precision", "fscore", "gmean"};

/// Six classifier metrics, each in [0, 1]. A metric whose denominator is zero
/// is reported as 0 and flagged.
struct MetricReport {
  std::array<double, kMetricCount> value{};
  std::array<bool, kMetricCount> degenerate{};

  [[nodiscard]] double accuracy() const { return value[kAccuracy]; }
  [[nodiscard]] double sensitivity() const { return value[kSensitivity]; }
  [[nodiscard]] double specificity() const { return value[kSpecificity]; }
  [[nodiscard]] double precision() const { return value[kPrecision]; }
  [[nodiscard]] double fscore() const { return value[kFscore]; }
  [[nodiscard]] double gmean() const { return value[kGmean]; }
};

inline MetricReport metrics(const ConfusionMatrix& cm) {
  if (cm.total() == 0) throw ParameterError("confusion matrix is empty");
  const auto tp = static_cast<double>(cm.tp), tn = static_cast<double>(cm.tn);
  const auto fp = static_cast<double>(cm.fp), fn = static_cast<double>(cm.fn);

  MetricReport r;
  auto ratio = [&r](MetricId id, double num, double den) {
    if (den == 0.0) {
      r.value[id] = 0.0;
      r.degenerate[id] = true;
    } else {
      r.value[id] = num / den;
    }
  };
  ratio(kAccuracy, tp + tn, tp + tn + fp + fn);
  ratio(kSensitivity, tp, tp + fn);
  ratio(kSpecificity, tn, tn + fp);
  ratio(kPrecision, tp, tp + fp);
  ratio(kFscore, 2.0 * tp, 2.0 * tp + fp + fn);
  r.value[kGmean] = std::sqrt(r.value[kSensitivity] * r.value[kSpecificity]);
  r.degenerate[kGmean] = r.degenerate[kSensitivity] || r.degenerate[kSpecificity];
  return r;
}

/// Relative reduction of the error rate (100 - metric) achieved by the boosted
/// variant, in percent. Negative when the boosted variant is worse.
inline double error_enhancement(double base_pct, double boosted_pct) {
  if (!(base_pct >= 0.0 && base_pct < 100.0))
    throw ParameterError("error enhancement is undefined for a base metric of 100 (or out of [0, 100))");
  if (!(boosted_pct >= 0.0 && boosted_pct <= 100.0)) throw ParameterError("boosted metric must lie in [0, 100]");
  const double base_err = 100.0 - base_pct;
  const double boosted_err = 100.0 - boosted_pct;
  return (base_err - boosted_err) / base_err * 100.0;
}

/// Stratified k-fold partition of 0..n-1: each class is shuffled and dealt
/// round-robin, continuing the deal across classes, so fold sizes and per-fold
/// class counts each differ by at most one.
inline std::vector<std::vector<std::size_t>> kfold_split(std::size_t n, std::size_t k, std::span<const int> labels,
                                                         std::uint64_t seed) {
  if (k < 2) throw ParameterError("k-fold needs k >= 2");
  if (k > n) throw ParameterError("k = " + std::to_string(k) + " exceeds the " + std::to_string(n) + " available rows");
  if (!labels.empty() && labels.size() != n) throw ShapeError("label count differs from n");

  Rng rng = Rng::stream(seed, "folds");
  std::vector<std::size_t> order;
  order.reserve(n);
  auto deal_class = [&](auto keep) {
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < n; ++i)
      if (keep(i)) idx.push_back(i);
    for (std::size_t i = idx.size(); i > 1; --i) std::swap(idx[i - 1], idx[rng.uniform_index(0, i - 1)]);
    order.insert(order.end(), idx.begin(), idx.end());
  };
  if (labels.empty()) {
    deal_class([](std::size_t) { return true; });
  } else {
    deal_class([&](std::size_t i) { return labels[i] == 0; });
    deal_class([&](std::size_t i) { return labels[i] != 0; });
  }

  std::vector<std::vector<std::size_t>> folds(k);
  for (std::size_t p = 0; p < order.size(); ++p) folds[p % k].push_back(order[p]);
  for (auto& f : folds) std::sort(f.begin(), f.end());
  return folds;
}

/// Per-feature affine scaling fitted on one dataset and applied to others.
struct Standardizer {
  std::vector<double> mean;
  std::vector<double> scale;

  static Standardizer fit(const Dataset& data) {
    const std::size_t d = data.features();
    Standardizer s{std::vector<double>(d, 0.0), std::vector<double>(d, 1.0)};
    if (data.empty()) return s;
    const double n = static_cast<double>(data.size());
    for (std::size_t i = 0; i < data.size(); ++i)
      for (std::size_t j = 0; j < d; ++j) s.mean[j] += data.row(i)[j];
    for (auto& m : s.mean) m /= n;
    std::vector<double> var(d, 0.0);
    for (std::size_t i = 0; i < data.size(); ++i)
      for (std::size_t j = 0; j < d; ++j) {
        const double e = data.row(i)[j] - s.mean[j];
        var[j] += e * e;
      }
    for (std::size_t j = 0; j < d; ++j) {
      const double sd = std::sqrt(var[j] / n);
      s.scale[j] = sd > 1e-12 ? sd : 1.0;
    }
    return s;
  }

  void apply(std::span<double> row) const {
    for (std::size_t j = 0; j < row.size(); ++j) row[j] = (row[j] - mean[j]) / scale[j];
  }

  [[nodiscard]] Dataset transform(Dataset data) const {
    for (std::size_t i = 0; i < data.size(); ++i) apply(data.row(i));
    return data;
  }
};

struct FoldSummary {
  double mean = 0.0, std = 0.0, min = 0.0, max = 0.0, median = 0.0;
};

/// Mean, sample standard deviation (divisor k - 1), min, max and median.
inline FoldSummary summarize(std::span<const double> values) {
  if (values.empty()) throw InsufficientDataError("cannot summarize an empty sample");
  FoldSummary s;
  const double n = static_cast<double>(values.size());
  const bool constant = std::adjacent_find(values.begin(), values.end(), std::not_equal_to<>()) == values.end();
  s.mean = constant ? values.front() : std::accumulate(values.begin(), values.end(), 0.0) / n;
  double ss = 0.0;
  for (double v : values) ss += (v - s.mean) * (v - s.mean);
  s.std = values.size() > 1 && !constant ? std::sqrt(ss / (n - 1.0)) : 0.0;
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  s.min = sorted.front();
  s.max = sorted.back();
  const std::size_t m = sorted.size() / 2;
  s.median = sorted.size() % 2 ? sorted[m] : 0.5 * (sorted[m - 1] + sorted[m]);
  return s;
}

/// Train/test pair for one fold, standardized with training-fold statistics.
struct FoldData {
  Dataset train;
  Dataset test;
  std::vector<std::size_t> test_indices;
};

inline void require_both_classes(const Dataset& data) {
  if (data.count_label(0) == 0 || data.count_label(1) == 0)
    throw ParameterError("dataset must contain both classes");
}

inline std::vector<FoldData> make_folds(const Dataset& data, std::size_t k, std::uint64_t seed) {
  require_both_classes(data);
  const auto folds = kfold_split(data.size(), k, data.labels(), seed);
  std::vector<FoldData> out;
  for (std::size_t f = 0; f < k; ++f) {
    std::vector<std::size_t> train_idx;
    for (std::size_t g = 0; g < k; ++g)
      if (g != f) train_idx.insert(train_idx.end(), folds[g].begin(), folds[g].end());
    std::sort(train_idx.begin(), train_idx.end());
    Dataset train = data.subset(train_idx);
    const auto scaler = Standardizer::fit(train);
    out.push_back({scaler.transform(std::move(train)), scaler.transform(data.subset(folds[f])), folds[f]});
  }
  return out;
}

template <class Predictor>
ConfusionMatrix confusion_on(const Predictor& predictor, const Dataset& test) {
  ConfusionMatrix cm;
  for (std::size_t i = 0; i < test.size(); ++i) cm.add(test.label(i), predictor(test.row(i)));
  return cm;
}

struct CrossValidationResult {
  std::vector<ConfusionMatrix> confusion;
  std::vector<MetricReport> folds;
  std::array<FoldSummary, kMetricCount> summary{};
};

inline std::array<FoldSummary, kMetricCount> summarize_folds(std::span<const MetricReport> folds) {
  std::array<FoldSummary, kMetricCount> out{};
  std::vector<double> col(folds.size());
  for (std::size_t m = 0; m < kMetricCount; ++m) {
    for (std::size_t f = 0; f < folds.size(); ++f) col[f] = folds[f].value[m];
    out[m] = summarize(col);
  }
  return out;
}

/// k-fold cross-validation. `trainer(train, fold)` sees only the training
/// split and returns a predictor mapping a feature row to a label.
template <class Trainer>
CrossValidationResult cross_validate(Trainer&& trainer, const Dataset& data, std::size_t k, std::uint64_t seed) {
  CrossValidationResult r;
  auto folds = make_folds(data, k, seed);
  for (std::size_t f = 0; f < folds.size(); ++f) {
    auto predictor = trainer(static_cast<const Dataset&>(folds[f].train), f);
    r.confusion.push_back(confusion_on(predictor, folds[f].test));
    r.folds.push_back(metrics(r.confusion.back()));
  }
  r.summary = summarize_folds(r.folds);
  return r;
}

struct WinTieLoss {
  std::size_t wins = 0, ties = 0, losses = 0;
  [[nodiscard]] std::string str() const {
    return std::to_string(wins) + "/" + std::to_string(ties) + "/" + std::to_string(losses);
  }
  friend bool operator==(const WinTieLoss&, const WinTieLoss&) = default;
};

/// Pairwise tally of boosted vs base; equality within 1e-9 is a tie.
inline WinTieLoss wtl(std::span<const double> base, std::span<const double> boosted) {
  if (base.size() != boosted.size()) throw ShapeError("win/tie/loss needs paired sequences");
  WinTieLoss r;
  for (std::size_t i = 0; i < base.size(); ++i) {
    if (std::abs(boosted[i] - base[i]) <= 1e-9)
      ++r.ties;
    else if (boosted[i] > base[i])
      ++r.wins;
    else
      ++r.losses;
  }
  return r;
}

/// Rank 1 for the largest value; tied values share their average rank.
inline std::vector<double> average_ranks(std::span<const double> values) {
  const std::size_t n = values.size();
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return values[a] > values[b]; });
  std::vector<double> ranks(n);
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j + 1 < n && values[idx[j + 1]] == values[idx[i]]) ++j;
    const double r = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t t = i; t <= j; ++t) ranks[idx[t]] = r;
    i = j + 1;
  }
  return ranks;
}

inline double mean_rank(std::span<const double> ranks) {
  if (ranks.empty()) throw InsufficientDataError("no ranks to average");
  return std::accumulate(ranks.begin(), ranks.end(), 0.0) / static_cast<double>(ranks.size());
}

struct RankTable {
  std::vector<std::vector<double>> ranks;  // [algorithm][metric]
  std::vector<double> mean_rank;           // per algorithm
};

/// `table[a][m]` is algorithm a's mean value of metric m (higher is better).
inline RankTable rank_and_mean_rank(const std::vector<std::vector<double>>& table) {
  RankTable r;
  if (table.empty()) return r;
  const std::size_t n_alg = table.size(), n_met = table.front().size();
  r.ranks.assign(n_alg, std::vector<double>(n_met, 0.0));
  std::vector<double> col(n_alg);
  for (std::size_t m = 0; m < n_met; ++m) {
    for (std::size_t a = 0; a < n_alg; ++a) {
      if (table[a].size() != n_met) throw ShapeError("ragged metric table");
      col[a] = table[a][m];
    }
    const auto rk = average_ranks(col);
    for (std::size_t a = 0; a < n_alg; ++a) r.ranks[a][m] = rk[a];
  }
  for (const auto& row : r.ranks) r.mean_rank.push_back(mean_rank(row));
  return r;
}

}  // namespace codel
