#pragma once

#include <algorithm>
#include <cmath>
#include <concepts>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "codel/error.hpp"
#include "codel/kmeans.hpp"
#include "codel/opposition.hpp"
#include "codel/rng.hpp"

namespace codel {

template <class F>
concept Objective = std::invocable<const F&, std::span<const double>> &&
                    std::convertible_to<std::invoke_result_t<const F&, std::span<const double>>, double>;

/// Flat parameter vector with its cached objective value.
struct Candidate {
  std::vector<double> x;
  std::optional<double> fitness;

  [[nodiscard]] double f() const {
    if (!fitness) throw ContractError("candidate has not been evaluated");
    return *fitness;
  }
};

/// Axis-aligned search box.
struct Bounds {
  std::vector<double> lower;
  std::vector<double> upper;

  static Bounds uniform(std::size_t dim, double lo, double hi) {
    return Bounds{std::vector<double>(dim, lo), std::vector<double>(dim, hi)};
  }
  [[nodiscard]] std::size_t dim() const { return lower.size(); }

  void validate() const {
    if (lower.size() != upper.size() || lower.empty()) throw ParameterError("bounds must be non-empty and paired");
    for (std::size_t i = 0; i < lower.size(); ++i)
      if (!(lower[i] < upper[i])) throw ParameterError("lower bound must be below upper bound");
  }
};

struct CodelConfig {
  std::size_t np = 50;
  std::size_t nfe_max = 25000;
  double f = 0.5;
  double cr = 0.9;
  double jr = 0.3;
  std::size_t cp = 10;
  double lower = -10.0;
  double upper = 10.0;
  std::uint64_t seed = 0;

  void validate() const {
    if (np < 4) throw ParameterError("population size must be at least 4");
    if (!(f > 0.0 && f <= 2.0)) throw ParameterError("scale factor F must lie in (0, 2]");
    if (!(cr >= 0.0 && cr <= 1.0)) throw ParameterError("crossover rate must lie in [0, 1]");
    if (!(jr >= 0.0 && jr <= 0.4)) throw ParameterError("jumping rate must lie in [0, 0.4]");
    if (cp < 1) throw ParameterError("clustering period must be >= 1");
    if (!(lower < upper)) throw ParameterError("lower bound must be below upper bound");
    if (nfe_max < 2 * np) throw ParameterError("evaluation budget must cover the initial 2*np evaluations");
  }
};

struct Population {
  std::vector<Candidate> members;
  std::size_t nfe = 0;
  std::size_t iter = 1;
  Candidate best;

  [[nodiscard]] std::size_t best_index() const {
    std::size_t b = 0;
    for (std::size_t i = 1; i < members.size(); ++i)
      if (members[i].f() < members[b].f()) b = i;
    return b;
  }
  void refresh_best() {
    const auto& m = members[best_index()];
    if (!best.fitness || m.f() <= *best.fitness) best = m;
  }
};

/// Objective calls metered against the evaluation budget.
template <Objective Fn>
class BudgetedEvaluator {
 public:
  BudgetedEvaluator(const Fn& fn, std::size_t nfe_max) : fn_(&fn), nfe_max_(nfe_max) {}

  /// Evaluates `c` unless the budget is spent; returns whether it did.
  bool operator()(Candidate& c, Population& pop) const {
    if (pop.nfe >= nfe_max_) return false;
    c.fitness = static_cast<double>((*fn_)(std::span<const double>(c.x)));
    ++pop.nfe;
    return true;
  }
  /// Evaluates regardless of the budget.
  void force(Candidate& c, Population& pop) const {
    c.fitness = static_cast<double>((*fn_)(std::span<const double>(c.x)));
    ++pop.nfe;
  }
  [[nodiscard]] std::size_t budget() const { return nfe_max_; }

 private:
  const Fn* fn_;
  std::size_t nfe_max_;
};

namespace detail {

/// Keeps the `count` lowest-fitness candidates; earlier entries win ties.
inline std::vector<Candidate> best_of(std::vector<Candidate> pool, std::size_t count) {
  std::vector<std::size_t> idx(pool.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return pool[a].f() < pool[b].f(); });
  std::vector<Candidate> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count && i < idx.size(); ++i) out.push_back(std::move(pool[idx[i]]));
  return out;
}

}  // namespace detail

/// DE/rand/1 mutant x_r1 + f (x_r2 - x_r3), clamped to the box.
inline std::vector<double> mutate(const Population& pop, std::size_t target, double f, const Bounds& bounds,
                                  Rng& rng) {
  const std::size_t n = pop.members.size();
  if (n < 4) throw ParameterError("mutation needs at least 4 members");
  std::size_t r1, r2, r3;
  do r1 = rng.uniform_index(0, n - 1); while (r1 == target);
  do r2 = rng.uniform_index(0, n - 1); while (r2 == target || r2 == r1);
  do r3 = rng.uniform_index(0, n - 1); while (r3 == target || r3 == r1 || r3 == r2);

  const auto& a = pop.members[r1].x;
  const auto& b = pop.members[r2].x;
  const auto& c = pop.members[r3].x;
  std::vector<double> v(a.size());
  for (std::size_t j = 0; j < v.size(); ++j)
    v[j] = std::clamp(a[j] + f * (b[j] - c[j]), bounds.lower[j], bounds.upper[j]);
  return v;
}

/// Binomial crossover; component j_rand always comes from the mutant.
inline std::vector<double> binomial_crossover(std::span<const double> target, std::span<const double> mutant,
                                              double cr, Rng& rng) {
  if (target.size() != mutant.size() || target.empty()) throw ShapeError("crossover parents differ in dimension");
  const std::size_t j_rand = rng.uniform_index(0, target.size() - 1);
  std::vector<double> u(target.begin(), target.end());
  for (std::size_t j = 0; j < u.size(); ++j)
    if (rng.uniform() <= cr || j == j_rand) u[j] = mutant[j];
  return u;
}

/// Greedy one-to-one selection; ties go to the trial.
inline const Candidate& select(const Candidate& target, const Candidate& trial) {
  return trial.f() <= target.f() ? trial : target;
}

/// Replaces the population with the best np of itself and its quasi-opposite.
template <Objective Fn>
void qobl_population(Population& pop, const Bounds& bounds, const BudgetedEvaluator<Fn>& eval, Rng& rng) {
  const std::size_t np = pop.members.size();
  std::vector<Candidate> pool = pop.members;
  for (const auto& m : pop.members) {
    Candidate o;
    o.x.resize(m.x.size());
    for (std::size_t j = 0; j < m.x.size(); ++j) o.x[j] = quasi_opposite(m.x[j], bounds.lower[j], bounds.upper[j], rng);
    if (!eval(o, pop)) break;
    pool.push_back(std::move(o));
  }
  pop.members = detail::best_of(std::move(pool), np);
  pop.refresh_best();
}

/// Cluster-crossover step with a given cluster count: k-means centers compete
/// with k random non-best members for their slots.
template <Objective Fn>
void cluster_update(Population& pop, std::size_t k, const BudgetedEvaluator<Fn>& eval, Rng& rng) {
  const std::size_t np = pop.members.size();
  if (k < 2 || k >= np) throw ParameterError("cluster count must lie in [2, np - 1]");

  std::vector<std::vector<double>> points;
  points.reserve(np);
  for (const auto& m : pop.members) points.push_back(m.x);
  auto km = kmeans(points, k, rng);

  std::vector<Candidate> pool;
  for (auto& c : km.centers) {
    Candidate cand{std::move(c), std::nullopt};
    if (!eval(cand, pop)) break;
    pool.push_back(std::move(cand));
  }
  if (pool.empty()) return;

  const std::size_t best = pop.best_index();
  std::vector<std::size_t> others;
  for (std::size_t i = 0; i < np; ++i)
    if (i != best) others.push_back(i);
  for (std::size_t i = 0; i < k; ++i) std::swap(others[i], others[rng.uniform_index(i, others.size() - 1)]);
  std::vector<std::size_t> replaced(others.begin(), others.begin() + static_cast<std::ptrdiff_t>(k));

  for (std::size_t i : replaced) pool.push_back(pop.members[i]);
  auto winners = detail::best_of(std::move(pool), k);
  for (std::size_t i = 0; i < k; ++i) pop.members[replaced[i]] = std::move(winners[i]);
  pop.refresh_best();
}

/// Cluster-crossover step with k drawn uniformly from [2, floor(sqrt(np))].
template <Objective Fn>
void cluster_update(Population& pop, const BudgetedEvaluator<Fn>& eval, Rng& rng) {
  const auto k_max = static_cast<std::size_t>(std::floor(std::sqrt(static_cast<double>(pop.members.size()))));
  const std::size_t k = rng.uniform_index(2, std::max<std::size_t>(2, k_max));
  cluster_update(pop, k, eval, rng);
}

struct IterationRecord {
  std::size_t iteration = 0;
  std::size_t nfe = 0;
  double best_fitness = 0.0;
};

struct CodelResult {
  Candidate best;
  std::vector<IterationRecord> history;  // entry 0 is the initial population
  std::size_t nfe = 0;
};

/// Called with the population after initialization and after every iteration.
using PopulationObserver = std::function<void(const Population&)>;

/// Cluster-based opposition differential evolution.
template <Objective Fn>
CodelResult run_codel(const Fn& objective, const Bounds& bounds, const CodelConfig& cfg,
                      const PopulationObserver& observe = {}) {
  cfg.validate();
  bounds.validate();
  const std::size_t dim = bounds.dim();
  const Rng root(cfg.seed);
  Rng init_rng = root.substream("init");
  Rng de_rng = root.substream("de");
  Rng kmeans_rng = root.substream("kmeans");
  Rng qobl_rng = root.substream("qobl");
  Rng jump_rng = root.substream("jrand");

  BudgetedEvaluator<Fn> eval(objective, cfg.nfe_max);
  Population pop;
  pop.members.resize(cfg.np);
  for (auto& m : pop.members) {
    m.x.resize(dim);
    for (std::size_t j = 0; j < dim; ++j) m.x[j] = init_rng.uniform(bounds.lower[j], bounds.upper[j]);
    eval.force(m, pop);
  }
  pop.refresh_best();
  qobl_population(pop, bounds, eval, qobl_rng);

  CodelResult result;
  result.history.push_back({0, pop.nfe, pop.best.f()});
  if (observe) observe(pop);

  while (pop.nfe < cfg.nfe_max) {
    std::vector<Candidate> next = pop.members;
    for (std::size_t i = 0; i < cfg.np; ++i) {
      const auto v = mutate(pop, i, cfg.f, bounds, de_rng);
      Candidate trial{binomial_crossover(pop.members[i].x, v, cfg.cr, de_rng), std::nullopt};
      if (!eval(trial, pop)) break;
      next[i] = select(pop.members[i], trial);
    }
    pop.members = std::move(next);
    pop.refresh_best();

    if (pop.iter % cfg.cp == 0) cluster_update(pop, eval, kmeans_rng);
    if (jump_rng.uniform() < cfg.jr) qobl_population(pop, bounds, eval, qobl_rng);

    result.history.push_back({pop.iter, pop.nfe, pop.best.f()});
    if (observe) observe(pop);
    ++pop.iter;
  }
  result.best = pop.best;
  result.nfe = pop.nfe;
  return result;
}

template <Objective Fn>
CodelResult run_codel(const Fn& objective, std::size_t dim, const CodelConfig& cfg,
                      const PopulationObserver& observe = {}) {
  if (dim < 1) throw ParameterError("dimension must be >= 1");
  return run_codel(objective, Bounds::uniform(dim, cfg.lower, cfg.upper), cfg, observe);
}

}  // namespace codel
