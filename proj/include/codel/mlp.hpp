#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "codel/error.hpp"

namespace codel {

/// Layer widths [n_in, h_1, ..., h_L, n_out].
class MlpTopology {
 public:
  explicit MlpTopology(std::vector<std::size_t> layer_sizes) : sizes_(std::move(layer_sizes)) {
    if (sizes_.size() < 2) throw ShapeError("topology needs an input and an output layer");
    for (std::size_t s : sizes_)
      if (s < 1) throw ShapeError("every layer needs at least one neuron");
    offsets_.push_back(0);
    for (std::size_t l = 0; l + 1 < sizes_.size(); ++l)
      offsets_.push_back(offsets_.back() + sizes_[l] * sizes_[l + 1] + sizes_[l + 1]);
  }

  /// Input width, one hidden layer per entry of `hidden`, single output.
  static MlpTopology with_hidden(std::size_t n_in, std::span<const std::size_t> hidden,
                                 std::size_t n_out = 1) {
    std::vector<std::size_t> s{n_in};
    s.insert(s.end(), hidden.begin(), hidden.end());
    s.push_back(n_out);
    return MlpTopology(std::move(s));
  }

  [[nodiscard]] const std::vector<std::size_t>& sizes() const { return sizes_; }
  [[nodiscard]] std::size_t layers() const { return sizes_.size() - 1; }  // weight layers
  [[nodiscard]] std::size_t inputs() const { return sizes_.front(); }
  [[nodiscard]] std::size_t outputs() const { return sizes_.back(); }
  [[nodiscard]] std::size_t param_count() const { return offsets_.back(); }
  [[nodiscard]] std::size_t max_width() const { return *std::max_element(sizes_.begin(), sizes_.end()); }

  /// Flat offset where weight layer `l` starts.
  [[nodiscard]] std::size_t layer_offset(std::size_t l) const { return offsets_[l]; }

  /// Position of the weight from source `src` into destination neuron `dst` of layer `l`.
  [[nodiscard]] std::size_t weight_index(std::size_t l, std::size_t dst, std::size_t src) const {
    return offsets_[l] + dst * sizes_[l] + src;
  }
  [[nodiscard]] std::size_t bias_index(std::size_t l, std::size_t dst) const {
    return offsets_[l] + sizes_[l + 1] * sizes_[l] + dst;
  }

  [[nodiscard]] std::string describe() const {
    std::string out;
    for (std::size_t i = 0; i < sizes_.size(); ++i) {
      if (i) out += ',';
      out += std::to_string(sizes_[i]);
    }
    return out;
  }

  friend bool operator==(const MlpTopology& a, const MlpTopology& b) { return a.sizes_ == b.sizes_; }

 private:
  std::vector<std::size_t> sizes_;
  std::vector<std::size_t> offsets_;
};

/// Feature rows with binary labels.
class Dataset {
 public:
  Dataset() = default;
  Dataset(std::size_t n_features, std::vector<double> rows_flat, std::vector<int> labels)
      : n_features_(n_features), x_(std::move(rows_flat)), y_(std::move(labels)) {
    if (n_features_ == 0) throw ShapeError("dataset needs at least one feature");
    if (x_.size() != n_features_ * y_.size()) throw ShapeError("row storage does not match label count");
    for (int v : y_)
      if (v != 0 && v != 1) throw ParameterError("labels must be 0 or 1");
  }

  [[nodiscard]] std::size_t size() const { return y_.size(); }
  [[nodiscard]] bool empty() const { return y_.empty(); }
  [[nodiscard]] std::size_t features() const { return n_features_; }
  [[nodiscard]] std::span<const double> row(std::size_t i) const {
    return {x_.data() + i * n_features_, n_features_};
  }
  [[nodiscard]] std::span<double> row(std::size_t i) { return {x_.data() + i * n_features_, n_features_}; }
  [[nodiscard]] int label(std::size_t i) const { return y_[i]; }
  [[nodiscard]] const std::vector<int>& labels() const { return y_; }
  [[nodiscard]] const std::vector<double>& flat() const { return x_; }

  void push_back(std::span<const double> row, int label) {
    if (n_features_ == 0) n_features_ = row.size();
    if (row.size() != n_features_) throw ShapeError("row width mismatch");
    if (label != 0 && label != 1) throw ParameterError("labels must be 0 or 1");
    x_.insert(x_.end(), row.begin(), row.end());
    y_.push_back(label);
  }

  [[nodiscard]] Dataset subset(std::span<const std::size_t> indices) const {
    Dataset out;
    out.n_features_ = n_features_;
    out.x_.reserve(indices.size() * n_features_);
    out.y_.reserve(indices.size());
    for (std::size_t i : indices) {
      auto r = row(i);
      out.x_.insert(out.x_.end(), r.begin(), r.end());
      out.y_.push_back(y_[i]);
    }
    return out;
  }

  [[nodiscard]] std::size_t count_label(int label) const {
    return static_cast<std::size_t>(std::count(y_.begin(), y_.end(), label));
  }

 private:
  std::size_t n_features_ = 0;
  std::vector<double> x_;
  std::vector<int> y_;
};

/// One decoded weight layer: W is rows=out, cols=in, row-major.
struct DenseLayer {
  std::size_t in = 0, out = 0;
  std::vector<double> weights;
  std::vector<double> biases;

  double& w(std::size_t dst, std::size_t src) { return weights[dst * in + src]; }
  [[nodiscard]] double w(std::size_t dst, std::size_t src) const { return weights[dst * in + src]; }
};

/// Splits a flat parameter vector into layers. Per layer: each destination
/// neuron's incoming weights in order, then the layer's biases.
inline std::vector<DenseLayer> decode(std::span<const double> params, const MlpTopology& topo) {
  if (params.size() != topo.param_count())
    throw ShapeError("parameter vector has length " + std::to_string(params.size()) + ", topology [" +
                     topo.describe() + "] needs " + std::to_string(topo.param_count()));
  std::vector<DenseLayer> layers;
  for (std::size_t l = 0; l < topo.layers(); ++l) {
    DenseLayer d;
    d.in = topo.sizes()[l];
    d.out = topo.sizes()[l + 1];
    const auto w0 = params.begin() + static_cast<std::ptrdiff_t>(topo.layer_offset(l));
    const auto b0 = w0 + static_cast<std::ptrdiff_t>(d.in * d.out);
    d.weights.assign(w0, b0);
    d.biases.assign(b0, b0 + static_cast<std::ptrdiff_t>(d.out));
    layers.push_back(std::move(d));
  }
  return layers;
}

inline std::vector<double> encode(std::span<const DenseLayer> layers) {
  std::vector<double> flat;
  for (const auto& d : layers) {
    if (d.weights.size() != d.in * d.out || d.biases.size() != d.out) throw ShapeError("malformed layer");
    flat.insert(flat.end(), d.weights.begin(), d.weights.end());
    flat.insert(flat.end(), d.biases.begin(), d.biases.end());
  }
  return flat;
}

/// Logistic activation kept strictly inside (0, 1).
inline double sigmoid(double x) {
  constexpr double kHi = 1.0 - 0x1.0p-53;
  constexpr double kLo = std::numeric_limits<double>::min();
  const double s = 1.0 / (1.0 + std::exp(-x));
  return std::clamp(s, kLo, kHi);
}

namespace detail {

inline void check_params(std::span<const double> params, const MlpTopology& topo) {
  if (params.size() != topo.param_count())
    throw ShapeError("parameter vector has length " + std::to_string(params.size()) + ", expected " +
                     std::to_string(topo.param_count()));
}

/// Forward pass writing every layer's activations into `acts` (acts[0] = input).
inline void forward_all(std::span<const double> params, const MlpTopology& topo,
                        std::span<const double> input, std::vector<std::vector<double>>& acts) {
  const auto& sz = topo.sizes();
  acts.resize(sz.size());
  acts[0].assign(input.begin(), input.end());
  for (std::size_t l = 0; l < topo.layers(); ++l) {
    const std::size_t in = sz[l], out = sz[l + 1];
    const double* w = params.data() + topo.layer_offset(l);
    const double* b = w + in * out;
    const auto& a = acts[l];
    auto& z = acts[l + 1];
    z.resize(out);
    for (std::size_t j = 0; j < out; ++j) {
      double s = b[j];
      const double* wj = w + j * in;
      for (std::size_t i = 0; i < in; ++i) s += wj[i] * a[i];
      z[j] = sigmoid(s);
    }
  }
}

inline int decide(std::span<const double> out) {
  if (out.size() == 1) return out[0] >= 0.5 ? 1 : 0;
  return static_cast<int>(std::max_element(out.begin(), out.end()) - out.begin());
}

inline double target(int label, std::size_t unit, std::size_t n_out) {
  if (n_out == 1) return static_cast<double>(label);
  return static_cast<std::size_t>(label) == unit ? 1.0 : 0.0;
}

}  // namespace detail

/// Output activations for one input vector.
inline std::vector<double> forward(std::span<const double> params, const MlpTopology& topo,
                                   std::span<const double> input) {
  detail::check_params(params, topo);
  if (input.size() != topo.inputs())
    throw ShapeError("input has " + std::to_string(input.size()) + " features, network expects " +
                     std::to_string(topo.inputs()));
  std::vector<std::vector<double>> acts;
  detail::forward_all(params, topo, input, acts);
  return acts.back();
}

/// Predicted class: a single output unit thresholds at 0.5 (ties go to 1).
inline int predict(std::span<const double> params, const MlpTopology& topo, std::span<const double> input) {
  return detail::decide(forward(params, topo, input));
}

/// Percentage of misclassified rows, in [0, 100].
inline double classification_error(std::span<const double> params, const MlpTopology& topo,
                                   const Dataset& data) {
  detail::check_params(params, topo);
  if (data.empty()) throw InsufficientDataError("classification error on an empty dataset");
  if (data.features() != topo.inputs()) throw ShapeError("dataset width does not match topology input");
  std::vector<std::vector<double>> acts;
  std::size_t wrong = 0;
  for (std::size_t p = 0; p < data.size(); ++p) {
    detail::forward_all(params, topo, data.row(p), acts);
    if (detail::decide(acts.back()) != data.label(p)) ++wrong;
  }
  return 100.0 * static_cast<double>(wrong) / static_cast<double>(data.size());
}

struct LossAndGradient {
  double loss = 0.0;
  std::vector<double> gradient;
};

/// Mean squared error over samples and output units, with its backprop gradient.
inline LossAndGradient mse_loss_and_gradient(std::span<const double> params, const MlpTopology& topo,
                                             const Dataset& data) {
  detail::check_params(params, topo);
  if (data.empty()) throw InsufficientDataError("loss on an empty dataset");
  if (data.features() != topo.inputs()) throw ShapeError("dataset width does not match topology input");

  const auto& sz = topo.sizes();
  const std::size_t n_out = topo.outputs();
  const double scale = 1.0 / (static_cast<double>(data.size()) * static_cast<double>(n_out));

  LossAndGradient r;
  r.gradient.assign(topo.param_count(), 0.0);
  std::vector<std::vector<double>> acts;
  std::vector<double> delta, prev_delta;

  for (std::size_t p = 0; p < data.size(); ++p) {
    detail::forward_all(params, topo, data.row(p), acts);
    const auto& o = acts.back();
    delta.resize(n_out);
    for (std::size_t k = 0; k < n_out; ++k) {
      const double e = o[k] - detail::target(data.label(p), k, n_out);
      r.loss += e * e;
      delta[k] = 2.0 * e * scale * o[k] * (1.0 - o[k]);
    }
    for (std::size_t l = topo.layers(); l-- > 0;) {
      const std::size_t in = sz[l], out = sz[l + 1];
      const std::size_t w_off = topo.layer_offset(l);
      const std::size_t b_off = w_off + in * out;
      const auto& a = acts[l];
      for (std::size_t j = 0; j < out; ++j) {
        double* gw = r.gradient.data() + w_off + j * in;
        for (std::size_t i = 0; i < in; ++i) gw[i] += delta[j] * a[i];
        r.gradient[b_off + j] += delta[j];
      }
      if (l == 0) break;
      prev_delta.assign(in, 0.0);
      const double* w = params.data() + w_off;
      for (std::size_t j = 0; j < out; ++j)
        for (std::size_t i = 0; i < in; ++i) prev_delta[i] += w[j * in + i] * delta[j];
      for (std::size_t i = 0; i < in; ++i) prev_delta[i] *= a[i] * (1.0 - a[i]);
      std::swap(delta, prev_delta);
    }
  }
  r.loss *= scale;
  return r;
}

inline double mse_loss(std::span<const double> params, const MlpTopology& topo, const Dataset& data) {
  detail::check_params(params, topo);
  if (data.empty()) throw InsufficientDataError("loss on an empty dataset");
  std::vector<std::vector<double>> acts;
  double loss = 0.0;
  const std::size_t n_out = topo.outputs();
  for (std::size_t p = 0; p < data.size(); ++p) {
    detail::forward_all(params, topo, data.row(p), acts);
    for (std::size_t k = 0; k < n_out; ++k) {
      const double e = acts.back()[k] - detail::target(data.label(p), k, n_out);
      loss += e * e;
    }
  }
  return loss / (static_cast<double>(data.size()) * static_cast<double>(n_out));
}

/// Fitness functor handed to the global optimizer.
class ClassificationErrorObjective {
 public:
  ClassificationErrorObjective(MlpTopology topo, const Dataset& data) : topo_(std::move(topo)), data_(&data) {}
  double operator()(std::span<const double> params) const { return classification_error(params, topo_, *data_); }
  [[nodiscard]] const MlpTopology& topology() const { return topo_; }

 private:
  MlpTopology topo_;
  const Dataset* data_;
};

}  // namespace codel
