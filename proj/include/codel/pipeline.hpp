#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "codel/codel.hpp"
#include "codel/evaluation.hpp"
#include "codel/io.hpp"
#include "codel/local_search.hpp"
#include "codel/mlp.hpp"
#include "codel/parallel.hpp"
#include "codel/rng.hpp"

namespace codel {

struct TrainedModel {
  MlpTopology topology;
  Standardizer scaler;
  std::vector<double> params;
  CodelResult codel;
  RefineResult refined;
};

/// Global CODEL search on the classification error, then local refinement of
/// the best weights. Features are standardized with `train`'s statistics.
inline TrainedModel train_model(const Dataset& train, std::span<const std::size_t> hidden, const CodelConfig& codel_cfg,
                                const LocalSearchConfig& local_cfg) {
  if (train.empty()) throw InsufficientDataError("training set is empty");
  auto topo = MlpTopology::with_hidden(train.features(), hidden);
  auto scaler = Standardizer::fit(train);
  const Dataset scaled = scaler.transform(train);
  auto codel_result = run_codel(ClassificationErrorObjective(topo, scaled), topo.param_count(), codel_cfg);
  auto refined = refine(codel_result.best.x, topo, scaled, local_cfg);
  auto params = refined.params;
  return {std::move(topo), std::move(scaler), std::move(params), std::move(codel_result), std::move(refined)};
}

// ---------------------------------------------------------------------------
// Base-vs-boosted cross-validated comparison

struct EvaluationOptions {
  std::vector<std::size_t> hidden{10};
  CodelConfig codel{};
  LocalSearchConfig local{};  // method is ignored: all six are run
  std::size_t k = 10;
  std::uint64_t seed = 0;
  double base_init_scale = 1.0;
  std::size_t threads = 0;
};

struct AlgorithmResult {
  std::string name;
  std::vector<ConfusionMatrix> confusion;
  std::vector<MetricReport> folds;
  std::array<FoldSummary, kMetricCount> summary{};
};

inline std::string boosted_name(Method m) { return "CODEL-" + std::string(method_name(m)); }

/// Runs every method from a random start (base) and from the fold's CODEL
/// optimum (boosted) under stratified k-fold CV. Output order is base/boosted
/// pairs in kAllMethods order. Results do not depend on `threads`.
inline std::vector<AlgorithmResult> evaluate_methods(const Dataset& data, const EvaluationOptions& opt) {
  const auto folds = make_folds(data, opt.k, opt.seed);
  const std::size_t k = folds.size();
  const auto topo = MlpTopology::with_hidden(data.features(), opt.hidden);

  std::vector<CodelResult> optima(k);
  parallel_for(k, opt.threads, [&](std::size_t f) {
    CodelConfig cfg = opt.codel;
    cfg.seed = derive_seed(opt.seed, "codel", f);
    optima[f] = run_codel(ClassificationErrorObjective(topo, folds[f].train), topo.param_count(), cfg);
  });

  std::vector<std::vector<double>> base_init(k);
  for (std::size_t f = 0; f < k; ++f) {
    Rng rng = Rng::stream(opt.seed, "base-init", f);
    base_init[f].resize(topo.param_count());
    for (auto& w : base_init[f]) w = rng.uniform(-opt.base_init_scale, opt.base_init_scale);
  }

  const std::size_t n_alg = 2 * kAllMethods.size();
  std::vector<AlgorithmResult> results(n_alg);
  for (std::size_t m = 0; m < kAllMethods.size(); ++m) {
    results[2 * m].name = std::string(method_name(kAllMethods[m]));
    results[2 * m + 1].name = boosted_name(kAllMethods[m]);
  }
  for (auto& r : results) {
    r.confusion.resize(k);
    r.folds.resize(k);
  }

  parallel_for(n_alg * k, opt.threads, [&](std::size_t task) {
    const std::size_t alg = task / k, f = task % k;
    LocalSearchConfig lc = opt.local;
    lc.method = kAllMethods[alg / 2];
    const bool boosted = alg % 2 == 1;
    const auto& start = boosted ? optima[f].best.x : base_init[f];
    const auto refined = refine(start, topo, folds[f].train, lc);
    const auto cm = confusion_on(
        [&](std::span<const double> row) { return predict(refined.params, topo, row); }, folds[f].test);
    results[alg].confusion[f] = cm;
    results[alg].folds[f] = metrics(cm);
  });

  for (auto& r : results) r.summary = summarize_folds(r.folds);
  return results;
}

// ---------------------------------------------------------------------------
// Report tables

/// One algorithm's per-metric summary, in percent. Spread columns are optional
/// (a means-only table has none).
struct AlgorithmSummary {
  std::string name;
  std::array<FoldSummary, kMetricCount> summary{};
  bool has_spread = true;
};

inline AlgorithmSummary as_percent(const AlgorithmResult& r) {
  AlgorithmSummary s{r.name, r.summary, true};
  for (auto& m : s.summary) {
    m.mean *= 100.0;
    m.std *= 100.0;
    m.min *= 100.0;
    m.max *= 100.0;
    m.median *= 100.0;
  }
  return s;
}

struct MethodPair {
  std::size_t base;
  std::size_t boosted;
};

/// Pairs every algorithm X with "CODEL-X" when both are present.
inline std::vector<MethodPair> find_pairs(const std::vector<AlgorithmSummary>& algs) {
  std::vector<MethodPair> pairs;
  for (std::size_t i = 0; i < algs.size(); ++i) {
    if (algs[i].name.rfind("CODEL-", 0) == 0) continue;
    for (std::size_t j = 0; j < algs.size(); ++j)
      if (algs[j].name == "CODEL-" + algs[i].name) pairs.push_back({i, j});
  }
  return pairs;
}

struct ReportTables {
  std::array<std::string, kMetricCount> metric_csv;
  std::string ee_csv;
  std::string mean_rank_csv;
  std::array<WinTieLoss, kMetricCount> totals{};
  RankTable ranks;
  /// ee[pair][metric]
  std::vector<std::array<double, kMetricCount>> ee;
};

inline ReportTables build_reports(const std::vector<AlgorithmSummary>& algs) {
  using io::format_double;
  ReportTables out;
  const auto pairs = find_pairs(algs);

  std::vector<std::vector<double>> means(algs.size(), std::vector<double>(kMetricCount));
  for (std::size_t a = 0; a < algs.size(); ++a)
    for (std::size_t m = 0; m < kMetricCount; ++m) means[a][m] = algs[a].summary[m].mean;
  out.ranks = rank_and_mean_rank(means);

  for (std::size_t m = 0; m < kMetricCount; ++m) {
    std::vector<double> base, boosted;
    std::vector<std::string> mark(algs.size());
    for (const auto& p : pairs) {
      base.push_back(means[p.base][m]);
      boosted.push_back(means[p.boosted][m]);
      const auto one = wtl(std::span<const double>(&base.back(), 1), std::span<const double>(&boosted.back(), 1));
      mark[p.base] = one.wins ? "W" : one.ties ? "T" : "L";
    }
    out.totals[m] = wtl(base, boosted);

    std::string csv = "algorithm,mean,std,min,max,median,rank,wtl\n";
    for (std::size_t a = 0; a < algs.size(); ++a) {
      const auto& s = algs[a].summary[m];
      csv += algs[a].name + "," + format_double(s.mean) + ",";
      if (algs[a].has_spread)
        csv += format_double(s.std) + "," + format_double(s.min) + "," + format_double(s.max) + "," +
               format_double(s.median);
      else
        csv += ",,,";
      csv += "," + format_double(out.ranks.ranks[a][m]) + "," + mark[a] + "\n";
    }
    csv += "Total W/T/L,,,,,,," + out.totals[m].str() + "\n";
    out.metric_csv[m] = std::move(csv);
  }

  // Error enhancement per pair, ranked across pairs (largest EE is rank 1).
  out.ee.resize(pairs.size());
  std::vector<std::vector<double>> ee_table(pairs.size(), std::vector<double>(kMetricCount));
  for (std::size_t p = 0; p < pairs.size(); ++p)
    for (std::size_t m = 0; m < kMetricCount; ++m)
      ee_table[p][m] = out.ee[p][m] = error_enhancement(means[pairs[p].base][m], means[pairs[p].boosted][m]);
  const auto ee_ranks = rank_and_mean_rank(ee_table);

  std::string ee = "comparison,row";
  for (auto n : kMetricNames) ee += "," + std::string(n);
  ee += "\n";
  for (std::size_t p = 0; p < pairs.size(); ++p) {
    const std::string label = algs[pairs[p].boosted].name + " vs " + algs[pairs[p].base].name;
    ee += label + ",ee";
    for (double v : out.ee[p]) ee += "," + format_double(v);
    ee += "\n" + label + ",rank";
    for (double v : ee_ranks.ranks[p]) ee += "," + format_double(v);
    ee += "\n";
  }
  out.ee_csv = std::move(ee);

  std::string mr = "algorithm";
  for (auto n : kMetricNames) mr += "," + std::string(n) + "_rank";
  mr += ",mean_rank\n";
  for (std::size_t a = 0; a < algs.size(); ++a) {
    mr += algs[a].name;
    for (double r : out.ranks.ranks[a]) mr += "," + format_double(r);
    mr += "," + format_double(out.ranks.mean_rank[a]) + "\n";
  }
  out.mean_rank_csv = std::move(mr);
  return out;
}

/// Reads `algorithm,accuracy,...,gmean` rows of mean percentages.
inline std::vector<AlgorithmSummary> read_means_table(const std::string& path) {
  const auto t = io::read_csv(path);
  const std::size_t name_col = t.column("algorithm");
  if (name_col == t.header.size()) throw FormatError("'" + path + "' has no 'algorithm' column");
  std::array<std::size_t, kMetricCount> cols{};
  for (std::size_t m = 0; m < kMetricCount; ++m) {
    cols[m] = t.column(kMetricNames[m]);
    if (cols[m] == t.header.size())
      throw FormatError("'" + path + "' has no '" + std::string(kMetricNames[m]) + "' column");
  }
  std::vector<AlgorithmSummary> out;
  for (const auto& row : t.rows) {
    AlgorithmSummary s;
    s.name = row[name_col];
    s.has_spread = false;
    for (std::size_t m = 0; m < kMetricCount; ++m) s.summary[m].mean = io::parse_double(row[cols[m]], path);
    out.push_back(std::move(s));
  }
  return out;
}

}  // namespace codel
