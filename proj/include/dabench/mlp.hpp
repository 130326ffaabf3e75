#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "dabench/common.hpp"

namespace dabench {

enum class Activation { Identity, ReLU, Sigmoid, LeakyReLU };
enum class Head { Identity, Softmax };

inline std::string_view to_string(Activation a) {
  switch (a) {
    case Activation::Identity: return "identity";
    case Activation::ReLU: return "relu";
    case Activation::Sigmoid: return "sigmoid";
    case Activation::LeakyReLU: return "leaky_relu";
  }
  return "?";
}

inline Activation parse_activation(std::string_view s) {
  if (s == "identity" || s == "linear") return Activation::Identity;
  if (s == "relu" || s == "ReLU") return Activation::ReLU;
  if (s == "sigmoid" || s == "Sigmoid") return Activation::Sigmoid;
  if (s == "leaky_relu" || s == "LeakyReLU" || s == "leakyrelu") return Activation::LeakyReLU;
  throw ConfigError("unknown activation '" + std::string(s) + "'");
}

inline constexpr int kMaxHiddenLayers = 3;

/// Dense network layout. Layer l maps layer_sizes[l] -> layer_sizes[l+1] and
/// applies activations[l]; the head is applied after the last layer.
struct MlpSpec {
  std::vector<int> layer_sizes;
  std::vector<Activation> activations;
  double leaky_slope = 0.01;
  Head head = Head::Identity;

  /// Hidden layers use `hidden`, the last layer uses `last`.
  static MlpSpec make(std::vector<int> sizes, Activation hidden, Activation last, Head head,
                      double leaky_slope = 0.01) {
    MlpSpec s;
    s.layer_sizes = std::move(sizes);
    const std::size_t n_layers = s.layer_sizes.empty() ? 0 : s.layer_sizes.size() - 1;
    for (std::size_t l = 0; l < n_layers; ++l) s.activations.push_back(l + 1 == n_layers ? last : hidden);
    s.head = head;
    s.leaky_slope = leaky_slope;
    s.validate();
    return s;
  }

  std::size_t num_layers() const { return layer_sizes.size() - 1; }
  int input_size() const { return layer_sizes.front(); }
  int output_size() const { return layer_sizes.back(); }

  void validate() const {
    if (layer_sizes.size() < 2) throw ConfigError("mlp: need at least one layer");
    for (int s : layer_sizes) {
      if (s < 1) throw ConfigError("mlp: layer sizes must be >= 1");
    }
    if (static_cast<int>(layer_sizes.size()) - 2 > kMaxHiddenLayers) {
      throw ConfigError("mlp: at most " + std::to_string(kMaxHiddenLayers) + " hidden layers");
    }
    if (activations.size() != num_layers()) throw ConfigError("mlp: one activation per layer is required");
  }
};

/// Weights are (fan_in x fan_out); a batch X (rows = samples) maps to X W + b.
struct MlpParams {
  std::vector<Matrix> weights;
  std::vector<RowVector> biases;

  std::uint64_t fingerprint() const {
    std::uint64_t h = 1469598103934665603ULL;
    for (std::size_t l = 0; l < weights.size(); ++l) {
      h = dabench::fingerprint(weights[l], h);
      h = dabench::fingerprint(Matrix(biases[l]), h);
    }
    return h;
  }

  bool operator==(const MlpParams& o) const {
    if (weights.size() != o.weights.size()) return false;
    for (std::size_t l = 0; l < weights.size(); ++l) {
      if (weights[l] != o.weights[l] || biases[l] != o.biases[l]) return false;
    }
    return true;
  }
};

/// Glorot-uniform weights, zero biases.
inline MlpParams init_params(const MlpSpec& spec, std::uint64_t seed) {
  spec.validate();
  Rng rng(seed);
  MlpParams p;
  for (std::size_t l = 0; l < spec.num_layers(); ++l) {
    const int fan_in = spec.layer_sizes[l];
    const int fan_out = spec.layer_sizes[l + 1];
    const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    Matrix w(fan_in, fan_out);
    for (Eigen::Index j = 0; j < w.cols(); ++j) {
      for (Eigen::Index i = 0; i < w.rows(); ++i) w(i, j) = uniform(rng, -limit, limit);
    }
    p.weights.push_back(std::move(w));
    p.biases.push_back(RowVector::Zero(fan_out));
  }
  return p;
}

/// A network layout together with its parameters.
struct Mlp {
  MlpSpec spec;
  MlpParams params;

  static Mlp create(MlpSpec spec, std::uint64_t seed) {
    auto params = init_params(spec, seed);
    return {std::move(spec), std::move(params)};
  }
};

struct ForwardCache {
  std::vector<Matrix> inputs;  // input of each layer
  std::vector<Matrix> pre;     // pre-activation of each layer
};

struct ForwardResult {
  Matrix output;  // probabilities for a softmax head
  ForwardCache cache;
};

namespace detail {

inline Matrix activate(const Matrix& z, Activation a, double slope) {
  switch (a) {
    case Activation::Identity: return z;
    case Activation::ReLU: return z.cwiseMax(0.0);
    case Activation::Sigmoid: return (1.0 / (1.0 + (-z.array()).exp())).matrix();
    case Activation::LeakyReLU: return z.unaryExpr([slope](double v) { return v > 0.0 ? v : slope * v; });
  }
  return z;
}

/// d activation / dz, evaluated elementwise and multiplied into `upstream`.
inline Matrix activation_backward(const Matrix& z, const Matrix& upstream, Activation a, double slope) {
  switch (a) {
    case Activation::Identity: return upstream;
    case Activation::ReLU: return upstream.cwiseProduct(z.unaryExpr([](double v) { return v > 0.0 ? 1.0 : 0.0; }));
    case Activation::Sigmoid: {
      const Eigen::ArrayXXd s = 1.0 / (1.0 + (-z.array()).exp());
      return (upstream.array() * s * (1.0 - s)).matrix();
    }
    case Activation::LeakyReLU:
      return upstream.cwiseProduct(z.unaryExpr([slope](double v) { return v > 0.0 ? 1.0 : slope; }));
  }
  return upstream;
}

}  // namespace detail

/// Row-wise softmax with max subtraction.
inline Matrix softmax(const Matrix& logits) {
  Matrix out = logits.colwise() - logits.rowwise().maxCoeff();
  out = out.array().exp().matrix();
  const Vector sums = out.rowwise().sum();
  for (Eigen::Index i = 0; i < out.rows(); ++i) out.row(i) /= sums[i];
  return out;
}

inline void check_shapes(const MlpSpec& spec, const MlpParams& params) {
  if (params.weights.size() != spec.num_layers() || params.biases.size() != spec.num_layers()) {
    throw ShapeError("mlp: parameter count does not match the layout");
  }
  for (std::size_t l = 0; l < spec.num_layers(); ++l) {
    if (params.weights[l].rows() != spec.layer_sizes[l] || params.weights[l].cols() != spec.layer_sizes[l + 1] ||
        params.biases[l].size() != spec.layer_sizes[l + 1]) {
      throw ShapeError("mlp: layer " + std::to_string(l) + " has the wrong shape");
    }
  }
}

inline ForwardResult forward(const MlpSpec& spec, const MlpParams& params, const Matrix& x) {
  check_shapes(spec, params);
  if (x.cols() != spec.input_size()) {
    throw ShapeError("mlp forward: input has " + std::to_string(x.cols()) + " columns, expected " +
                     std::to_string(spec.input_size()));
  }
  ForwardResult r;
  Matrix a = x;
  for (std::size_t l = 0; l < spec.num_layers(); ++l) {
    Matrix z = a * params.weights[l];
    z.rowwise() += params.biases[l];
    r.cache.inputs.push_back(std::move(a));
    a = detail::activate(z, spec.activations[l], spec.leaky_slope);
    r.cache.pre.push_back(std::move(z));
  }
  r.output = spec.head == Head::Softmax ? softmax(a) : std::move(a);
  if (!r.output.allFinite()) throw NumericError("mlp forward: non-finite output");
  return r;
}

inline ForwardResult forward(const Mlp& net, const Matrix& x) { return forward(net.spec, net.params, x); }

struct MlpGrads {
  std::vector<Matrix> weights;
  std::vector<RowVector> biases;
  Matrix input;  // gradient with respect to the network input

  MlpGrads& operator+=(const MlpGrads& o) {
    for (std::size_t l = 0; l < weights.size(); ++l) {
      weights[l] += o.weights[l];
      biases[l] += o.biases[l];
    }
    return *this;
  }
};

/// Reverse-mode pass. `upstream` is dLoss/d(last layer output): for a softmax
/// head that is the gradient with respect to the logits, which
/// `softmax_cross_entropy` returns.
inline MlpGrads backward(const MlpSpec& spec, const MlpParams& params, const ForwardCache& cache,
                         const Matrix& upstream) {
  check_shapes(spec, params);
  const std::size_t n_layers = spec.num_layers();
  if (cache.inputs.size() != n_layers || cache.pre.size() != n_layers) {
    throw ShapeError("mlp backward: cache does not match the layout");
  }
  const Eigen::Index batch = cache.inputs.front().rows();
  for (std::size_t l = 0; l < n_layers; ++l) {
    if (cache.pre[l].rows() != batch || cache.pre[l].cols() != spec.layer_sizes[l + 1] ||
        cache.inputs[l].cols() != spec.layer_sizes[l]) {
      throw ShapeError("mlp backward: stale cache");
    }
  }
  if (upstream.rows() != batch || upstream.cols() != spec.output_size()) {
    throw ShapeError("mlp backward: upstream gradient has the wrong shape");
  }
  MlpGrads g;
  g.weights.resize(n_layers);
  g.biases.resize(n_layers);
  Matrix delta = upstream;
  for (std::size_t l = n_layers; l-- > 0;) {
    delta = detail::activation_backward(cache.pre[l], delta, spec.activations[l], spec.leaky_slope);
    g.weights[l] = cache.inputs[l].transpose() * delta;
    g.biases[l] = delta.colwise().sum();
    delta = delta * params.weights[l].transpose();
  }
  g.input = std::move(delta);
  return g;
}

inline MlpGrads backward(const Mlp& net, const ForwardCache& cache, const Matrix& upstream) {
  return backward(net.spec, net.params, cache, upstream);
}

struct LossAndGrad {
  double loss = 0.0;  // summed over rows
  Matrix grad;        // d loss / d logits
};

/// Summed cross-entropy of softmax probabilities against integer labels.
inline LossAndGrad softmax_cross_entropy(const Matrix& probs, std::span<const int> labels) {
  if (static_cast<std::size_t>(probs.rows()) != labels.size()) throw ShapeError("cross entropy: label count mismatch");
  LossAndGrad r;
  r.grad = probs;
  for (Eigen::Index i = 0; i < probs.rows(); ++i) {
    const int c = labels[static_cast<std::size_t>(i)];
    if (c < 0 || c >= probs.cols()) throw RangeError("cross entropy: label outside the output range");
    r.loss -= std::log(std::max(probs(i, c), 1e-300));
    r.grad(i, c) -= 1.0;
  }
  return r;
}

/// Identity forward; backward scales the upstream gradient by -lambda.
inline Matrix grl_backward(const Matrix& upstream, double lambda) {
  if (lambda < 0.0) throw RangeError("gradient reversal: lambda must be >= 0");
  return -lambda * upstream;
}

// ---------------------------------------------------------------------------
// Adam

struct AdamHyper {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct AdamState {
  std::vector<Matrix> m_w, v_w;
  std::vector<RowVector> m_b, v_b;
  long step = 0;

  static AdamState zeros_like(const MlpParams& p) {
    AdamState s;
    for (std::size_t l = 0; l < p.weights.size(); ++l) {
      s.m_w.push_back(Matrix::Zero(p.weights[l].rows(), p.weights[l].cols()));
      s.v_w.push_back(s.m_w.back());
      s.m_b.push_back(RowVector::Zero(p.biases[l].size()));
      s.v_b.push_back(s.m_b.back());
    }
    return s;
  }
};

namespace detail {

template <class Param>
void adam_update(Param& p, const Param& g, Param& m, Param& v, double lr, double c1, double c2,
                 const AdamHyper& h) {
  m = h.beta1 * m + (1.0 - h.beta1) * g;
  v = h.beta2 * v + (1.0 - h.beta2) * g.cwiseProduct(g);
  p.array() -= lr * (m.array() / c1) / ((v.array() / c2).sqrt() + h.eps);
}

}  // namespace detail

/// One bias-corrected Adam update of every layer.
inline void adam_step(MlpParams& params, const MlpGrads& grads, AdamState& state, double lr,
                      const AdamHyper& h = {}) {
  if (grads.weights.size() != params.weights.size() || state.m_w.size() != params.weights.size()) {
    throw ShapeError("adam_step: parameter, gradient and state layouts differ");
  }
  for (std::size_t l = 0; l < params.weights.size(); ++l) {
    if (grads.weights[l].rows() != params.weights[l].rows() || grads.weights[l].cols() != params.weights[l].cols() ||
        grads.biases[l].size() != params.biases[l].size()) {
      throw ShapeError("adam_step: gradient shape mismatch at layer " + std::to_string(l));
    }
  }
  ++state.step;
  const double c1 = 1.0 - std::pow(h.beta1, static_cast<double>(state.step));
  const double c2 = 1.0 - std::pow(h.beta2, static_cast<double>(state.step));
  for (std::size_t l = 0; l < params.weights.size(); ++l) {
    detail::adam_update(params.weights[l], grads.weights[l], state.m_w[l], state.v_w[l], lr, c1, c2, h);
    detail::adam_update(params.biases[l], grads.biases[l], state.m_b[l], state.v_b[l], lr, c1, c2, h);
    if (!params.weights[l].allFinite() || !params.biases[l].allFinite()) {
      throw NumericError("adam_step: non-finite parameters after update");
    }
  }
}

}  // namespace dabench
