#pragma once

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <cstddef>
#include <functional>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "codel/error.hpp"
#include "codel/mlp.hpp"

namespace codel {

enum class Method { RP, OSS, GD, GDM, GDA, CGPR };

inline constexpr std::array<Method, 6> kAllMethods = {Method::RP,  Method::OSS, Method::GDM,
                                                      Method::GDA, Method::GD,  Method::CGPR};

inline std::string_view method_name(Method m) {
  switch (m) {
    case Method::RP: return "RP";
    case Method::OSS: return "OSS";
    case Method::GD: return "GD";
    case Method::GDM: return "GDM";
    case Method::GDA: return "GDA";
    case Method::CGPR: return "CG-PR";
  }
  return "?";
}

inline Method parse_method(std::string_view s) {
  std::string u;
  for (char c : s)
    if (c != '-' && c != '_') u += static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  if (u == "RP") return Method::RP;
  if (u == "OSS") return Method::OSS;
  if (u == "GD") return Method::GD;
  if (u == "GDM") return Method::GDM;
  if (u == "GDA") return Method::GDA;
  if (u == "CGPR") return Method::CGPR;
  throw ParameterError("unknown local search method '" + std::string(s) + "'");
}

struct RpParams {
  double eta_plus = 1.2;
  double eta_minus = 0.5;
  double delta0 = 0.1;
  double delta_min = 1e-6;
  double delta_max = 50.0;
};

struct GdaParams {
  double inc = 1.05;
  double dec = 0.7;
  double max_perf_inc = 1.04;
};

struct LineSearchParams {
  double c1 = 1e-4;
  double shrink = 0.5;
  std::size_t max_backtracks = 30;
};

struct LocalSearchConfig {
  Method method = Method::CGPR;
  std::size_t epochs = 500;
  double lr = 0.1;
  double momentum = 0.9;
  RpParams rp{};
  GdaParams gda{};
  LineSearchParams line_search{};
  std::size_t patience = 50;

  void validate() const {
    if (!(lr > 0.0)) throw ParameterError("learning rate must be > 0");
    if (!(momentum >= 0.0 && momentum < 1.0)) throw ParameterError("momentum must lie in [0, 1)");
    if (!(rp.eta_minus > 0.0 && rp.eta_minus < 1.0 && rp.eta_plus > 1.0))
      throw ParameterError("RP factors must satisfy 0 < eta- < 1 < eta+");
    if (!(rp.delta_min > 0.0 && rp.delta_min <= rp.delta0 && rp.delta0 <= rp.delta_max))
      throw ParameterError("RP step sizes must satisfy 0 < delta_min <= delta0 <= delta_max");
    if (!(gda.inc > 1.0 && gda.dec > 0.0 && gda.dec < 1.0 && gda.max_perf_inc >= 1.0))
      throw ParameterError("GDA constants out of range");
    if (!(line_search.c1 > 0.0 && line_search.c1 < 1.0 && line_search.shrink > 0.0 && line_search.shrink < 1.0))
      throw ParameterError("line search constants out of range");
  }
};

struct RefineResult {
  std::vector<double> params;
  double final_train_error = 0.0;
  double final_mse = 0.0;
  std::vector<double> loss_history;   // MSE after each epoch
  std::vector<double> error_history;  // classification error after each epoch
};

// ---------------------------------------------------------------------------
// Update rules

struct RpState {
  std::vector<double> delta;
  std::vector<double> prev_grad;

  RpState(std::size_t n, const RpParams& p) : delta(n, p.delta0), prev_grad(n, 0.0) {}
};

/// Sign-based resilient step (no weight backtracking on sign change).
inline void step_rp(RpState& st, std::span<double> w, std::span<const double> g, const RpParams& p) {
  for (std::size_t i = 0; i < w.size(); ++i) {
    const double prod = g[i] * st.prev_grad[i];
    if (prod > 0.0)
      st.delta[i] = std::min(st.delta[i] * p.eta_plus, p.delta_max);
    else if (prod < 0.0)
      st.delta[i] = std::max(st.delta[i] * p.eta_minus, p.delta_min);
    if (g[i] < 0.0)
      w[i] += st.delta[i];
    else if (g[i] > 0.0)
      w[i] -= st.delta[i];
    st.prev_grad[i] = g[i];
  }
}

inline void step_gd(std::span<double> w, std::span<const double> g, double lr) {
  for (std::size_t i = 0; i < w.size(); ++i) w[i] -= lr * g[i];
}

struct GdmState {
  std::vector<double> dm;
  explicit GdmState(std::size_t n) : dm(n, 0.0) {}
};

inline void step_gdm(GdmState& st, std::span<double> w, std::span<const double> g, double lr, double momentum) {
  for (std::size_t i = 0; i < w.size(); ++i) {
    st.dm[i] = momentum * st.dm[i] + lr * (1.0 - momentum) * g[i];
    w[i] -= st.dm[i];
  }
}

struct GdaDecision {
  double lr;
  bool accept;
};

/// Adaptive learning-rate rule applied after a trial step.
inline GdaDecision step_gda(double lr, double loss_now, double loss_prev, const GdaParams& p = {}) {
  if (loss_now > loss_prev * p.max_perf_inc) return {lr * p.dec, false};
  if (loss_now < loss_prev) return {lr * p.inc, true};
  return {lr, true};
}

namespace detail {

inline double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

inline std::vector<double> negated(std::span<const double> g) {
  std::vector<double> d(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) d[i] = -g[i];
  return d;
}

}  // namespace detail

/// Previous step and gradient change kept by the one-step secant method.
struct OssState {
  std::vector<double> step;
  std::vector<double> grad_change;
  bool has_history = false;
};

inline std::vector<double> step_oss(const OssState& st, std::span<const double> g) {
  auto d = detail::negated(g);
  if (!st.has_history) return d;
  const double sy = detail::dot(st.step, st.grad_change);
  if (std::abs(sy) < 1e-12) return d;
  const double yy = detail::dot(st.grad_change, st.grad_change);
  const double sg = detail::dot(st.step, g);
  const double yg = detail::dot(st.grad_change, g);
  const double b = sg / sy;
  const double a = -(1.0 + yy / sy) * b + yg / sy;
  for (std::size_t i = 0; i < d.size(); ++i) d[i] += a * st.step[i] + b * st.grad_change[i];
  return d;
}

struct CgState {
  std::vector<double> prev_grad;
  std::vector<double> prev_dir;
  std::size_t since_restart = 0;
  bool has_history = false;
};

/// Polak-Ribiere direction; beta is clipped at 0 and the method restarts
/// every `restart_period` iterations.
inline std::vector<double> step_cgpr(const CgState& st, std::span<const double> g, std::size_t restart_period) {
  auto p = detail::negated(g);
  if (!st.has_history || (restart_period > 0 && st.since_restart >= restart_period)) return p;
  const double denom = detail::dot(st.prev_grad, st.prev_grad);
  if (denom == 0.0) return std::vector<double>(g.size(), 0.0);
  double num = 0.0;
  for (std::size_t i = 0; i < g.size(); ++i) num += (g[i] - st.prev_grad[i]) * g[i];
  const double beta = std::max(0.0, num / denom);
  for (std::size_t i = 0; i < p.size(); ++i) p[i] += beta * st.prev_dir[i];
  return p;
}

/// Armijo backtracking from a unit step. Returns 0 when no tried step is acceptable.
template <class LossFn>
double backtracking_line_search(const LossFn& loss, std::span<const double> x, std::span<const double> d,
                                std::span<const double> g, double f0, const LineSearchParams& p = {}) {
  const double slope = detail::dot(g, d);
  if (!(slope < 0.0)) throw ContractError("line search needs a descent direction");
  std::vector<double> trial(x.size());
  double a = 1.0;
  for (std::size_t k = 0; k <= p.max_backtracks; ++k) {
    for (std::size_t i = 0; i < x.size(); ++i) trial[i] = x[i] + a * d[i];
    const double f = loss(std::span<const double>(trial));
    if (f <= f0 + p.c1 * a * slope) return a;
    a *= p.shrink;
  }
  return 0.0;
}

// ---------------------------------------------------------------------------
// Driver

/// Anything with a differentiable loss and a score used to pick the returned iterate.
template <class P>
concept RefineProblem = requires(const P& p, std::span<const double> x) {
  { p.loss_and_gradient(x) } -> std::convertible_to<LossAndGradient>;
  { p.loss(x) } -> std::convertible_to<double>;
  { p.score(x) } -> std::convertible_to<double>;
};

/// MSE for the gradient methods, classification error for iterate selection.
class MlpProblem {
 public:
  MlpProblem(MlpTopology topo, const Dataset& data) : topo_(std::move(topo)), data_(&data) {}
  [[nodiscard]] LossAndGradient loss_and_gradient(std::span<const double> x) const {
    return mse_loss_and_gradient(x, topo_, *data_);
  }
  [[nodiscard]] double loss(std::span<const double> x) const { return mse_loss(x, topo_, *data_); }
  [[nodiscard]] double score(std::span<const double> x) const { return classification_error(x, topo_, *data_); }

 private:
  MlpTopology topo_;
  const Dataset* data_;
};

using LineSearchFn = std::function<double(std::span<const double> x, std::span<const double> d,
                                           std::span<const double> g, double f0)>;

namespace detail {

struct Iterate {
  std::vector<double> x;
  double score;
  double loss;
};

}  // namespace detail

/// Runs the configured refiner from `initial`. The returned iterate is the one
/// with the lowest score among iterates whose loss does not exceed the initial
/// loss; loss breaks score ties.
template <RefineProblem P>
RefineResult refine_problem(const P& problem, std::span<const double> initial, const LocalSearchConfig& cfg,
                            LineSearchFn line_search = {}) {
  cfg.validate();
  if (!line_search) {
    line_search = [&problem, &cfg](std::span<const double> x, std::span<const double> d, std::span<const double> g,
                                   double f0) {
      return backtracking_line_search([&problem](std::span<const double> t) { return problem.loss(t); }, x, d, g,
                                      f0, cfg.line_search);
    };
  }

  const std::size_t n = initial.size();
  std::vector<double> x(initial.begin(), initial.end());
  LossAndGradient cur = problem.loss_and_gradient(x);
  if (cur.gradient.size() != n) throw ShapeError("gradient length does not match parameter count");
  double score = problem.score(x);
  const double initial_loss = cur.loss;

  detail::Iterate best{x, score, cur.loss};
  double best_score_seen = score;
  std::size_t stale = 0;

  RpState rp(n, cfg.rp);
  GdmState gdm(n);
  OssState oss;
  CgState cg;
  double lr = cfg.lr;

  RefineResult r;
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    if (std::all_of(cur.gradient.begin(), cur.gradient.end(), [](double v) { return v == 0.0; })) break;

    bool moved = true;
    switch (cfg.method) {
      case Method::RP:
        step_rp(rp, x, cur.gradient, cfg.rp);
        break;
      case Method::GD:
        step_gd(x, cur.gradient, lr);
        break;
      case Method::GDM:
        step_gdm(gdm, x, cur.gradient, lr, cfg.momentum);
        break;
      case Method::GDA: {
        std::vector<double> trial = x;
        step_gd(trial, cur.gradient, lr);
        const double trial_loss = problem.loss(trial);
        const auto dec = step_gda(lr, trial_loss, cur.loss, cfg.gda);
        lr = dec.lr;
        if (dec.accept)
          x = std::move(trial);
        else
          moved = false;
        break;
      }
      case Method::OSS:
      case Method::CGPR: {
        const bool is_cg = cfg.method == Method::CGPR;
        auto d = is_cg ? step_cgpr(cg, cur.gradient, n) : step_oss(oss, cur.gradient);
        bool steepest = false;
        if (!(detail::dot(cur.gradient, d) < 0.0)) {
          d = detail::negated(cur.gradient);
          steepest = true;
        }
        double a = line_search(x, d, cur.gradient, cur.loss);
        if (a == 0.0 && !steepest) {
          d = detail::negated(cur.gradient);
          steepest = true;
          a = line_search(x, d, cur.gradient, cur.loss);
        }
        if (a == 0.0) {
          moved = false;
          break;
        }
        std::vector<double> step(n);
        for (std::size_t i = 0; i < n; ++i) {
          step[i] = a * d[i];
          x[i] += step[i];
        }
        auto next = problem.loss_and_gradient(x);
        if (is_cg) {
          cg.since_restart = steepest ? 1 : cg.since_restart + 1;
          cg.prev_grad = cur.gradient;
          cg.prev_dir = std::move(d);
          cg.has_history = true;
        } else {
          oss.grad_change.resize(n);
          for (std::size_t i = 0; i < n; ++i) oss.grad_change[i] = next.gradient[i] - cur.gradient[i];
          oss.step = std::move(step);
          oss.has_history = true;
        }
        cur = std::move(next);
        score = problem.score(x);
        break;
      }
    }

    if (cfg.method != Method::OSS && cfg.method != Method::CGPR && moved) {
      cur = problem.loss_and_gradient(x);
      score = problem.score(x);
    }
    r.loss_history.push_back(cur.loss);
    r.error_history.push_back(score);

    if (cur.loss <= initial_loss && (score < best.score || (score == best.score && cur.loss < best.loss)))
      best = {x, score, cur.loss};
    if (score < best_score_seen) {
      best_score_seen = score;
      stale = 0;
    } else if (++stale >= cfg.patience) {
      break;
    }
    if (!moved && cfg.method != Method::GDA) break;
  }

  r.params = std::move(best.x);
  r.final_train_error = best.score;
  r.final_mse = best.loss;
  return r;
}

inline RefineResult refine(std::span<const double> initial, const MlpTopology& topo, const Dataset& data,
                           const LocalSearchConfig& cfg) {
  if (initial.size() != topo.param_count()) throw ShapeError("initial weights do not match topology");
  return refine_problem(MlpProblem(topo, data), initial, cfg);
}

}  // namespace codel
