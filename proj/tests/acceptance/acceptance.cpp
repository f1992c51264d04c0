// Acceptance checks. Prints one PASS/FAIL line per criterion and exits
// non-zero if any fails. Pass criterion numbers as arguments to run a subset.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <map>
#include <numbers>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "cli_runner.hpp"
#include "codel/codel.hpp"
#include "codel/evaluation.hpp"
#include "codel/hrv.hpp"
#include "codel/kmeans.hpp"
#include "codel/mlp.hpp"
#include "codel/opposition.hpp"
#include "codel/pipeline.hpp"
#include "oracles.hpp"

using namespace codel;

namespace {

const std::string kData = CODEL_DATA_DIR;

struct Verdict {
  bool pass = false;
  std::string detail;
};

template <class... Args>
std::string fmt(const char* f, Args... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

std::vector<AlgorithmSummary> reference_table() { return read_means_table(kData + "/reference_means.csv"); }

std::size_t row_of(const std::vector<AlgorithmSummary>& t, const std::string& name) {
  for (std::size_t i = 0; i < t.size(); ++i)
    if (t[i].name == name) return i;
  throw std::runtime_error("no row " + name);
}

// 1 -------------------------------------------------------------------------
Verdict error_enhancement_from_tables() {
  const auto t = reference_table();
  const auto acc = [&](const char* n) { return t[row_of(t, n)].summary[kAccuracy].mean; };
  const double rp = error_enhancement(acc("RP"), acc("CODEL-RP"));
  const double cg = error_enhancement(acc("CG-PR"), acc("CODEL-CG-PR"));
  const auto reports = build_reports(t);
  const bool csv_ok = reports.ee_csv.find("CODEL-RP vs RP,ee,2.268") != std::string::npos;
  return {std::abs(rp - 2.27) <= 0.01 && std::abs(cg - 0.90) <= 0.01 && csv_ok,
          fmt("EE(RP)=%.4f EE(CG-PR)=%.4f", rp, cg)};
}

// 2 -------------------------------------------------------------------------
Verdict mean_ranks_from_tables() {
  const std::vector<double> cg{1, 12, 1, 1, 2, 1}, oss{3, 11, 3, 3, 3, 3};
  const double m_cg = mean_rank(cg), m_oss = mean_rank(oss);

  // The same rank vectors must fall out of ranking the means table.
  const auto t = reference_table();
  const auto reports = build_reports(t);
  const auto& r_cg = reports.ranks.ranks[row_of(t, "CODEL-CG-PR")];
  const auto& r_oss = reports.ranks.ranks[row_of(t, "CODEL-OSS")];
  const bool table_ok = std::equal(cg.begin(), cg.end(), r_cg.begin()) && std::equal(oss.begin(), oss.end(), r_oss.begin());
  return {std::abs(m_cg - 3.0) <= 0.05 && std::abs(m_oss - 4.3) <= 0.05 && table_ok,
          fmt("CODEL-CG-PR=%.4f CODEL-OSS=%.4f ranks-from-table=%s", m_cg, m_oss, table_ok ? "match" : "differ")};
}

// 3 -------------------------------------------------------------------------
Verdict win_tie_loss_from_tables() {
  const auto t = reference_table();
  const auto totals = build_reports(t).totals;
  const auto& a = totals[kAccuracy];
  const auto& se = totals[kSensitivity];
  const auto& sp = totals[kSpecificity];
  const bool ok = a.wins == 6 && a.ties == 0 && a.losses == 0 && se.wins == 4 && se.ties == 0 && se.losses == 2 &&
                  sp.wins == 6 && sp.ties == 0 && sp.losses == 0;
  return {ok, "accuracy " + a.str() + ", sensitivity " + se.str() + ", specificity " + sp.str()};
}

// 4 -------------------------------------------------------------------------
Verdict metric_oracle() {
  std::mt19937_64 gen(404);
  std::uniform_int_distribution<std::uint64_t> count(0, 1000);
  std::uniform_int_distribution<int> zero(0, 9);
  std::size_t mismatches = 0, checked = 0;
  while (checked < 1000) {
    ConfusionMatrix cm;
    // Force zero cells now and then so degenerate denominators occur.
    for (auto* c : {&cm.tp, &cm.tn, &cm.fp, &cm.fn}) *c = zero(gen) == 0 ? 0 : count(gen);
    if (cm.total() == 0) continue;
    ++checked;
    const auto r = metrics(cm);
    const auto o = oracle::rational_metrics(cm.tp, cm.tn, cm.fp, cm.fn);
    const std::array<oracle::Rational, 5> exact{o.accuracy, o.sensitivity, o.specificity, o.precision, o.fscore};
    for (std::size_t m = 0; m < exact.size(); ++m) {
      if (r.degenerate[m] != !exact[m].defined() || r.value[m] != exact[m].value()) ++mismatches;
    }
    const double g2 = r.gmean() * r.gmean();
    if (std::abs(g2 - o.gmean_squared.value()) > 1e-12) ++mismatches;
  }
  return {mismatches == 0, fmt("%zu matrices, %zu mismatches", checked, mismatches)};
}

// 5 -------------------------------------------------------------------------
Verdict gradient_oracle() {
  std::mt19937_64 gen(55);
  std::uniform_real_distribution<double> w(-1.5, 1.5), x(-2.0, 2.0);
  std::bernoulli_distribution y(0.5);
  double worst = 0.0;
  for (int net = 0; net < 100; ++net) {
    const MlpTopology topo(net % 2 == 0 ? std::vector<std::size_t>{2, 3, 1} : std::vector<std::size_t>{13, 10, 1});
    const std::size_t rows = 8;
    std::vector<double> flat(rows * topo.inputs());
    std::vector<int> labels(rows);
    for (auto& v : flat) v = x(gen);
    for (auto& l : labels) l = y(gen);
    const Dataset data(topo.inputs(), std::move(flat), std::move(labels));
    std::vector<double> p(topo.param_count());
    for (auto& v : p) v = w(gen);
    const auto g = mse_loss_and_gradient(p, topo, data).gradient;
    worst = std::max(worst, oracle::max_relative_error(g, oracle::finite_difference_gradient(p, topo, data)));
  }
  return {worst < 1e-5, fmt("max relative error %.3e over 100 nets", worst)};
}

// 6 -------------------------------------------------------------------------
Verdict opposition_properties() {
  Rng rng(66);
  std::size_t outside = 0;
  double worst_involution = 0.0;
  for (int i = 0; i < 100000; ++i) {
    const double a = rng.uniform(-100, 100), b = a + rng.uniform(1e-3, 100);
    const double xv = rng.uniform(a, b);
    const double mid = 0.5 * (a + b), opp = opposite(xv, a, b);
    const double q = quasi_opposite(xv, a, b, rng);
    if (q < std::min(mid, opp) || q > std::max(mid, opp)) ++outside;
    const double scale = std::max(std::abs(a), std::abs(b));
    worst_involution = std::max(worst_involution, std::abs(opposite(opp, a, b) - xv) / scale);
  }
  // Exactly representable grid: every sum is exact, so the involution must be too.
  std::size_t grid_failures = 0;
  for (int ia = -64; ia <= 64; ia += 7)
    for (int ib = ia + 1; ib <= 64; ib += 5)
      for (int ix = ia; ix <= ib; ++ix) {
        const double a = ia / 1024.0, b = ib / 1024.0, xv = ix / 1024.0;
        if (opposite(opposite(xv, a, b), a, b) != xv) ++grid_failures;
      }

  // Population jump: size kept and output is the best np of the union.
  std::size_t jump_failures = 0;
  std::mt19937_64 gen(67);
  const auto fn = &oracle::sphere;
  for (int rep = 0; rep < 100; ++rep) {
    const std::size_t np = 4 + gen() % 40, dim = 1 + gen() % 6;
    const Bounds bounds = Bounds::uniform(dim, -5.0, 5.0);
    BudgetedEvaluator<decltype(fn)> eval(fn, 1000000);
    Population pop;
    Rng init(rep);
    pop.members.resize(np);
    for (auto& m : pop.members) {
      m.x.resize(dim);
      for (auto& v : m.x) v = init.uniform(-5.0, 5.0);
      eval.force(m, pop);
    }
    pop.refresh_best();
    const auto before = pop.members;

    Rng jump(1000 + rep);
    Rng replay = jump;
    qobl_population(pop, bounds, eval, jump);

    std::vector<double> union_fit;
    for (const auto& m : before) {
      union_fit.push_back(m.f());
      std::vector<double> o(dim);
      for (std::size_t j = 0; j < dim; ++j) o[j] = quasi_opposite(m.x[j], -5.0, 5.0, replay);
      union_fit.push_back(oracle::sphere(o));
    }
    std::sort(union_fit.begin(), union_fit.end());
    std::vector<double> out_fit;
    for (const auto& m : pop.members) out_fit.push_back(m.f());
    std::sort(out_fit.begin(), out_fit.end());
    const bool ok = pop.members.size() == np && pop.nfe == 2 * np &&
                    std::equal(out_fit.begin(), out_fit.end(), union_fit.begin());
    if (!ok) ++jump_failures;
  }
  return {outside == 0 && grid_failures == 0 && worst_involution <= 4 * std::numeric_limits<double>::epsilon() &&
              jump_failures == 0,
          fmt("qo outside=%zu, involution grid failures=%zu, random rel err=%.2e, jump failures=%zu/100", outside,
              grid_failures, worst_involution, jump_failures)};
}

// 7 -------------------------------------------------------------------------
Verdict sphere_sanity() {
  const CodelConfig defaults;
  std::vector<double> codel_best, de_best;
  bool monotone = true, constant_size = true, budget_ok = true;
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    CodelConfig cfg = defaults;
    cfg.seed = seed;
    const auto r = run_codel(oracle::sphere, 5, cfg, [&](const Population& p) {
      if (p.members.size() != cfg.np) constant_size = false;
    });
    for (std::size_t i = 1; i < r.history.size(); ++i)
      if (r.history[i].best_fitness > r.history[i - 1].best_fitness) monotone = false;
    if (r.nfe > cfg.nfe_max + cfg.np) budget_ok = false;
    codel_best.push_back(r.best.f());
    de_best.push_back(oracle::plain_de(oracle::sphere, 5, cfg.np, cfg.nfe_max, cfg.f, cfg.cr, cfg.lower, cfg.upper,
                                       seed)
                          .best);
  }
  const double mc = median(codel_best), md = median(de_best);
  return {mc < 1e-3 && mc <= md && monotone && constant_size && budget_ok,
          fmt("median CODEL %.3e, plain DE %.3e, monotone=%d, constant size=%d, budget=%d", mc, md, monotone,
              constant_size, budget_ok)};
}

// 8 -------------------------------------------------------------------------
Verdict kmeans_properties() {
  std::mt19937_64 gen(88);
  std::normal_distribution<double> n01;
  std::size_t sse_up = 0, not_nearest = 0, unconverged = 0;
  for (int rep = 0; rep < 200; ++rep) {
    const std::size_t n = 5 + gen() % 96, dim = 1 + gen() % 5, k = 2 + gen() % std::min<std::size_t>(7, n - 1);
    std::vector<std::vector<double>> pts(n, std::vector<double>(dim));
    for (auto& p : pts)
      for (auto& v : p) v = n01(gen) * 3.0 + static_cast<double>(gen() % 4) * 5.0;
    Rng rng(rep);
    const auto r = kmeans(pts, k, rng);
    for (std::size_t i = 1; i < r.sse_history.size(); ++i)
      if (r.sse_history[i] > r.sse_history[i - 1] * (1 + 1e-12)) ++sse_up;
    if (r.iterations == KMeansOptions{}.max_iterations) ++unconverged;
    for (std::size_t i = 0; i < n; ++i) {
      auto d2 = [&](std::size_t c) {
        double s = 0;
        for (std::size_t j = 0; j < dim; ++j) s += (pts[i][j] - r.centers[c][j]) * (pts[i][j] - r.centers[c][j]);
        return s;
      };
      for (std::size_t c = 0; c < k; ++c)
        if (d2(c) < d2(r.assignment[i])) {
          ++not_nearest;
          break;
        }
    }
  }
  std::size_t example_failures = 0;
  const std::vector<std::vector<double>> four{{0}, {1}, {10}, {11}};
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    Rng rng(seed);
    auto r = kmeans(four, 2, rng);
    std::vector<double> c{r.centers[0][0], r.centers[1][0]};
    std::sort(c.begin(), c.end());
    if (c[0] != 0.5 || c[1] != 10.5) ++example_failures;
  }
  return {sse_up == 0 && not_nearest == 0 && unconverged == 0 && example_failures == 0,
          fmt("SSE increases=%zu, non-nearest points=%zu, unconverged=%zu, {0,1,10,11} failures=%zu/50", sse_up,
              not_nearest, unconverged, example_failures)};
}

// 9 -------------------------------------------------------------------------
Verdict xor_learnability() {
  const auto data = oracle::xor_dataset();
  const std::vector<std::size_t> hidden{4};
  std::string detail;
  bool ok = true;
  for (Method m : kAllMethods) {
    std::size_t solved = 0;
    for (auto seed : oracle::kXorSeeds) {
      CodelConfig cc;
      cc.nfe_max = 10000;
      cc.seed = seed;
      LocalSearchConfig lc;
      lc.method = m;
      lc.epochs = 500;
      const auto model = train_model(data, hidden, cc, lc);
      if (classification_error(model.params, model.topology, model.scaler.transform(data)) == 0.0) ++solved;
    }
    ok = ok && solved >= 18;
    detail += std::string(method_name(m)) + " " + std::to_string(solved) + "/20 ";
  }
  return {ok, detail};
}

// 10 ------------------------------------------------------------------------
Verdict boosting_direction() {
  std::map<std::string, std::vector<double>> acc;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    EvaluationOptions opt;
    opt.seed = seed;
    const auto results = evaluate_methods(oracle::two_gaussians(500, 13, seed), opt);
    for (const auto& r : results) acc[r.name].push_back(r.summary[kAccuracy].mean);
  }
  std::size_t holds = 0;
  std::string detail;
  for (Method m : kAllMethods) {
    const double base = median(acc[std::string(method_name(m))]);
    const double boosted = median(acc[boosted_name(m)]);
    if (boosted >= base) ++holds;
    detail += fmt("%s %.4f>=%.4f%s ", std::string(method_name(m)).c_str(), boosted, base, boosted >= base ? "" : "(no)");
  }
  return {holds >= 5, fmt("%zu/6 hold: ", holds) + detail};
}

// 11 ------------------------------------------------------------------------
bool close_rel(double a, double b, double tol) {
  return a == b || std::abs(a - b) <= tol * std::max(std::abs(a), std::abs(b));
}

Verdict hrv_oracle() {
  std::mt19937_64 gen(1111);
  std::uniform_int_distribution<int> len(25, 110), kind(0, 9);
  std::uniform_real_distribution<double> base(450, 1300), amp(0, 80), freq(0.08, 0.45), jitter(0, 60);
  std::size_t mismatches = 0;
  for (int rep = 0; rep < 1000; ++rep) {
    const double b = base(gen), a = amp(gen), f = freq(gen);
    const int k = kind(gen);
    std::normal_distribution<double> noise(0, jitter(gen));
    std::vector<double> rr;
    double t = 0;
    for (int i = 0, n = len(gen); i < n || t < 10.5; ++i) {
      // A tenth of the series are exactly constant, exercising the undefined-ratio path.
      const double v = k == 0 ? b : std::max(250.0, b + a * std::sin(2 * std::numbers::pi * f * t) + noise(gen));
      rr.push_back(v);
      t += v / 1000.0;
    }
    const auto got = extract_features(RrSeries(rr)).values();
    const auto o = oracle::hrv(rr);
    const std::array<double, FeatureRecord::kSize> want{o.bpm, o.ibi,    o.sdnn, o.sdsd, o.rmssd, o.pnn20, o.pnn50,
                                                        o.hr_mad, o.sd1, o.sd2,  o.s,    o.ratio, oracle::breathing_rate(rr)};
    for (std::size_t i = 0; i < got.size(); ++i)
      if (!close_rel(got[i], want[i], 1e-9)) ++mismatches;
  }

  std::vector<double> rr;
  for (double t = 0; t < 60.0;) {
    rr.push_back(1000.0 + 50.0 * std::sin(2 * std::numbers::pi * 0.25 * t));
    t += rr.back() / 1000.0;
  }
  const double br = breathing_rate(RrSeries(rr));
  return {mismatches == 0 && std::abs(br - 15.0) <= 0.5,
          fmt("%zu feature mismatches over 1000 series; 0.25 Hz -> %.3f breaths/min", mismatches, br)};
}

// 12 ------------------------------------------------------------------------
namespace fs = std::filesystem;

/// Every file under `dir` (relative path -> bytes).
std::map<std::string, std::string> snapshot(const fs::path& dir) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::recursive_directory_iterator(dir))
    if (e.is_regular_file()) out[fs::relative(e.path(), dir).string()] = cli::slurp(e.path());
  return out;
}

Verdict determinism() {
  const auto inputs = cli::scratch("accept-inputs");
  cli::write_dataset(inputs / "gauss.csv", oracle::two_gaussians(30, 4, 12));
  {
    const std::vector<double> rr{0.8, 0.75, 0.85, 0.9};
    const auto ecg = oracle::synthetic_ecg(250.0, 40.0, rr, 20.0, 12);
    std::ofstream out(inputs / "ecg.csv");
    out.precision(17);
    out << "sample\n";
    for (double s : ecg.samples) out << s << "\n";
  }
  const std::string many = std::to_string(std::max(2u, std::thread::hardware_concurrency()) * 8);
  const std::string gauss = (inputs / "gauss.csv").string();

  struct Case {
    std::string name;
    std::vector<std::string> a, b;
  };
  const std::vector<std::string> eval{"evaluate", "--seed",  "21", "--features", gauss, "--k", "4", "--hidden", "3",
                                      "--np",     "12",      "--nfe", "600",       "--epochs", "30"};
  auto with = [](std::vector<std::string> v, std::initializer_list<std::string> extra) {
    v.insert(v.end(), extra);
    return v;
  };
  const std::vector<Case> cases{
      {"extract-rr",
       {"extract", "--seed", "4", "--input", kData + "/constant_rr.csv"},
       {"extract", "--seed", "4", "--input", kData + "/constant_rr.csv"}},
      {"extract-ecg",
       {"extract", "--seed", "4", "--fs", "250", "--input", (inputs / "ecg.csv").string()},
       {"extract", "--seed", "4", "--fs", "250", "--input", (inputs / "ecg.csv").string()}},
      {"train",
       {"train", "--seed", "9", "--features", gauss, "--hidden", "3", "--nfe", "800", "--epochs", "40"},
       {"train", "--seed", "9", "--features", gauss, "--hidden", "3", "--nfe", "800", "--epochs", "40"}},
      {"evaluate", with(eval, {"--threads", "1"}), with(eval, {"--threads", many})},
      {"compare-tables",
       {"compare-tables", "--seed", "1", "--means", kData + "/reference_means.csv"},
       {"compare-tables", "--seed", "1", "--means", kData + "/reference_means.csv"}},
  };

  std::string detail;
  bool ok = true;
  for (const auto& c : cases) {
    std::map<std::string, std::string> snaps[2];
    bool ran = true;
    // Same output path both times: it is recorded in the manifest.
    const auto work = cli::scratch("accept-" + c.name);
    const auto out = work / "out";
    for (int side = 0; side < 2; ++side) {
      fs::remove_all(out);
      auto args = side == 0 ? c.a : c.b;
      args.insert(args.end(), {"--out-dir", out.string()});
      const auto o = cli::run(args, work);
      if (o.exit_code != 0) {
        ran = false;
        detail += c.name + " exit " + std::to_string(o.exit_code) + ": " + o.err + " ";
        break;
      }
      snaps[side] = snapshot(out);
    }
    const bool same = ran && !snaps[0].empty() && snaps[0] == snaps[1];
    ok = ok && same;
    detail += c.name + (same ? " identical(" + std::to_string(snaps[0].size()) + " files) " : " DIFFERS ");
  }

  // Library level: fold/method parallelism leaves every confusion matrix unchanged.
  EvaluationOptions opt;
  opt.seed = 5;
  opt.k = 5;
  opt.hidden = {4};
  opt.codel.np = 12;
  opt.codel.nfe_max = 600;
  opt.local.epochs = 40;
  const auto data = oracle::two_gaussians(25, 5, 5);
  opt.threads = 1;
  const auto serial = evaluate_methods(data, opt);
  opt.threads = 64;
  const auto parallel = evaluate_methods(data, opt);
  bool lib_same = serial.size() == parallel.size();
  for (std::size_t a = 0; lib_same && a < serial.size(); ++a)
    for (std::size_t f = 0; f < serial[a].confusion.size(); ++f) {
      const auto &x = serial[a].confusion[f], &y = parallel[a].confusion[f];
      lib_same = lib_same && x.tp == y.tp && x.tn == y.tn && x.fp == y.fp && x.fn == y.fn;
    }
  detail += lib_same ? "library threads 1 vs 64 identical" : "library threads 1 vs 64 DIFFER";
  return {ok && lib_same, detail};
}

struct Criterion {
  const char* name;
  double max_seconds;  // 0 means no runtime bound
  std::function<Verdict()> run;
};

}  // namespace

int main(int argc, char** argv) {
  const std::vector<Criterion> criteria{
      {"error enhancement from reference means", 1, error_enhancement_from_tables},
      {"mean ranks from reference means", 0, mean_ranks_from_tables},
      {"win/tie/loss from reference means", 0, win_tie_loss_from_tables},
      {"metrics match rational oracle", 5, metric_oracle},
      {"backprop matches finite differences", 30, gradient_oracle},
      {"opposition and population jump properties", 0, opposition_properties},
      {"optimizer sanity on 5-D sphere", 120, sphere_sanity},
      {"k-means properties", 0, kmeans_properties},
      {"XOR learnability for all refiners", 300, xor_learnability},
      {"boosting direction on two Gaussians", 900, boosting_direction},
      {"HRV features match formula oracle", 0, hrv_oracle},
      {"determinism across reruns and threads", 0, determinism},
  };

  std::set<std::size_t> selected;
  for (int i = 1; i < argc; ++i) selected.insert(static_cast<std::size_t>(std::atoi(argv[i])));

  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    if (!selected.empty() && !selected.count(i + 1)) continue;
    const auto& c = criteria[i];
    const auto t0 = std::chrono::steady_clock::now();
    Verdict v;
    try {
      v = c.run();
    } catch (const std::exception& e) {
      v = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    bool pass = v.pass;
    if (c.max_seconds > 0 && secs >= c.max_seconds) {
      pass = false;
      v.detail += fmt(" [runtime limit %.0f s exceeded]", c.max_seconds);
    }
    std::printf("%s %2zu %s: %s (%.2f s)\n", pass ? "PASS" : "FAIL", i + 1, c.name, v.detail.c_str(), secs);
    std::fflush(stdout);
    if (!pass) ++failures;
  }
  return failures == 0 ? 0 : 1;
}
