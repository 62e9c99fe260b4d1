#pragma once

#include <cmath>
#include <cstdint>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "vlv/common.hpp"

namespace vlv {

// ---------------------------------------------------------------------------
// Minimal dense network: affine layers with ReLU on hidden layers and a
// linear output, doubles throughout. Weights are row-major (out x in).
// ---------------------------------------------------------------------------

namespace detail {

// Dot product with four independent accumulators; fixed summation order keeps
// runs bit-reproducible while still vectorizing.
inline double dot(const double* a, const double* b, int n) {
  double s0 = 0, s1 = 0, s2 = 0, s3 = 0;
  int k = 0;
  for (; k + 4 <= n; k += 4) {
    s0 += a[k] * b[k];
    s1 += a[k + 1] * b[k + 1];
    s2 += a[k + 2] * b[k + 2];
    s3 += a[k + 3] * b[k + 3];
  }
  for (; k < n; ++k) s0 += a[k] * b[k];
  return (s0 + s1) + (s2 + s3);
}

}  // namespace detail

struct Mlp {
  std::vector<int> sizes;                      // e.g. {105, 512, 256, 15}
  std::vector<std::vector<double>> weights;    // weights[l]: sizes[l+1] x sizes[l]
  std::vector<std::vector<double>> biases;     // biases[l]: sizes[l+1]

  Mlp() = default;
  Mlp(std::vector<int> layer_sizes, std::uint64_t seed) : sizes(std::move(layer_sizes)) {
    if (sizes.size() < 2) throw ShapeMismatch("Mlp needs at least two layer sizes");
    Rng rng(mix_seed(seed, 0x11f0));
    for (size_t l = 0; l + 1 < sizes.size(); ++l) {
      const int in = sizes[l], out = sizes[l + 1];
      const double scale = std::sqrt(2.0 / in);
      std::vector<double> w(static_cast<size_t>(in) * out);
      for (auto& v : w) v = scale * rng.gaussian();
      weights.push_back(std::move(w));
      biases.emplace_back(static_cast<size_t>(out), 0.0);
    }
  }

  int num_layers() const { return static_cast<int>(sizes.size()) - 1; }
  int input_dim() const { return sizes.front(); }
  int output_dim() const { return sizes.back(); }

  size_t num_params() const {
    size_t n = 0;
    for (size_t l = 0; l < weights.size(); ++l) n += weights[l].size() + biases[l].size();
    return n;
  }

  friend bool operator==(const Mlp& a, const Mlp& b) {
    return a.sizes == b.sizes && a.weights == b.weights && a.biases == b.biases;
  }
};

// Per-layer activations kept for the backward pass. acts[0] is the input,
// acts[L] the (linear) output; pre[l] holds pre-activation of layer l.
struct ForwardTrace {
  std::vector<std::vector<double>> acts;
};

inline void forward_trace(const Mlp& net, const double* input, ForwardTrace& trace) {
  const int layers = net.num_layers();
  trace.acts.resize(static_cast<size_t>(layers) + 1);
  trace.acts[0].assign(input, input + net.sizes[0]);
  for (int l = 0; l < layers; ++l) {
    const int in = net.sizes[static_cast<size_t>(l)];
    const int out = net.sizes[static_cast<size_t>(l) + 1];
    auto& dst = trace.acts[static_cast<size_t>(l) + 1];
    dst.resize(static_cast<size_t>(out));
    const double* src = trace.acts[static_cast<size_t>(l)].data();
    const double* w = net.weights[static_cast<size_t>(l)].data();
    const double* b = net.biases[static_cast<size_t>(l)].data();
    const bool relu = l + 1 < layers;
    for (int r = 0; r < out; ++r) {
      double v = detail::dot(w + static_cast<size_t>(r) * in, src, in) + b[r];
      if (relu && v < 0.0) v = 0.0;
      dst[static_cast<size_t>(r)] = v;
    }
  }
}

inline std::vector<double> forward(const Mlp& net, const std::vector<double>& input) {
  if (static_cast<int>(input.size()) != net.input_dim())
    throw ShapeMismatch("forward: input size mismatch");
  ForwardTrace trace;
  forward_trace(net, input.data(), trace);
  return trace.acts.back();
}

struct Grads {
  std::vector<std::vector<double>> weights;
  std::vector<std::vector<double>> biases;

  void init_like(const Mlp& net) {
    weights.resize(net.weights.size());
    biases.resize(net.biases.size());
    for (size_t l = 0; l < net.weights.size(); ++l) {
      weights[l].assign(net.weights[l].size(), 0.0);
      biases[l].assign(net.biases[l].size(), 0.0);
    }
  }
  void clear() {
    for (auto& w : weights) std::fill(w.begin(), w.end(), 0.0);
    for (auto& b : biases) std::fill(b.begin(), b.end(), 0.0);
  }
};

// Reverse-mode gradients for one sample; accumulates into `grads`.
inline void backward_accumulate(const Mlp& net, const ForwardTrace& trace,
                                const std::vector<double>& loss_grad, Grads& grads) {
  const int layers = net.num_layers();
  if (static_cast<int>(loss_grad.size()) != net.output_dim())
    throw ShapeMismatch("backward: loss gradient size mismatch");
  if (grads.weights.empty()) grads.init_like(net);
  std::vector<double> delta = loss_grad;
  for (int l = layers - 1; l >= 0; --l) {
    const int in = net.sizes[static_cast<size_t>(l)];
    const int out = net.sizes[static_cast<size_t>(l) + 1];
    const auto& a_in = trace.acts[static_cast<size_t>(l)];
    const auto& a_out = trace.acts[static_cast<size_t>(l) + 1];
    if (l + 1 < layers)  // ReLU mask of this layer's activation
      for (int r = 0; r < out; ++r)
        if (a_out[static_cast<size_t>(r)] <= 0.0) delta[static_cast<size_t>(r)] = 0.0;
    auto& gw = grads.weights[static_cast<size_t>(l)];
    auto& gb = grads.biases[static_cast<size_t>(l)];
    for (int r = 0; r < out; ++r) {
      const double d = delta[static_cast<size_t>(r)];
      if (d == 0.0) continue;
      gb[static_cast<size_t>(r)] += d;
      double* grow = gw.data() + static_cast<size_t>(r) * in;
      const double* arow = a_in.data();
      for (int k = 0; k < in; ++k) grow[k] += d * arow[k];
    }
    if (l == 0) break;
    std::vector<double> prev(static_cast<size_t>(in), 0.0);
    const double* w = net.weights[static_cast<size_t>(l)].data();
    for (int r = 0; r < out; ++r) {
      const double d = delta[static_cast<size_t>(r)];
      if (d == 0.0) continue;
      const double* wrow = w + static_cast<size_t>(r) * in;
      for (int k = 0; k < in; ++k) prev[static_cast<size_t>(k)] += d * wrow[k];
    }
    delta = std::move(prev);
  }
}

inline Grads backward(const Mlp& net, const std::vector<double>& input,
                      const std::vector<double>& loss_grad) {
  if (static_cast<int>(input.size()) != net.input_dim())
    throw ShapeMismatch("backward: input size mismatch");
  ForwardTrace trace;
  forward_trace(net, input.data(), trace);
  Grads grads;
  grads.init_like(net);
  backward_accumulate(net, trace, loss_grad, grads);
  return grads;
}

// ---------------------------------------------------------------------------
// Adam with bias correction.
// ---------------------------------------------------------------------------

struct AdamState {
  double lr = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  long t = 0;
  std::vector<std::vector<double>> m_w, v_w, m_b, v_b;

  void init_like(const Mlp& net) {
    m_w.resize(net.weights.size());
    v_w.resize(net.weights.size());
    m_b.resize(net.biases.size());
    v_b.resize(net.biases.size());
    for (size_t l = 0; l < net.weights.size(); ++l) {
      m_w[l].assign(net.weights[l].size(), 0.0);
      v_w[l].assign(net.weights[l].size(), 0.0);
      m_b[l].assign(net.biases[l].size(), 0.0);
      v_b[l].assign(net.biases[l].size(), 0.0);
    }
  }
};

inline void adam_step(Mlp& net, const Grads& grads, AdamState& state) {
  if (state.m_w.empty()) state.init_like(net);
  ++state.t;
  const double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.t));
  const double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.t));
  auto update = [&](std::vector<double>& p, const std::vector<double>& g,
                    std::vector<double>& m, std::vector<double>& v) {
    if (p.size() != g.size()) throw ShapeMismatch("adam_step: gradient shape mismatch");
    for (size_t i = 0; i < p.size(); ++i) {
      m[i] = state.beta1 * m[i] + (1.0 - state.beta1) * g[i];
      v[i] = state.beta2 * v[i] + (1.0 - state.beta2) * g[i] * g[i];
      const double mhat = m[i] / bc1;
      const double vhat = v[i] / bc2;
      p[i] -= state.lr * mhat / (std::sqrt(vhat) + state.eps);
    }
  };
  for (size_t l = 0; l < net.weights.size(); ++l) {
    update(net.weights[l], grads.weights[l], state.m_w[l], state.v_w[l]);
    update(net.biases[l], grads.biases[l], state.m_b[l], state.v_b[l]);
  }
}

// ---------------------------------------------------------------------------
// Losses. Each returns the scalar loss and the gradient w.r.t. the inputs.
// ---------------------------------------------------------------------------

struct LossResult {
  double loss = 0.0;
  std::vector<double> grad;
};

inline LossResult mse(const std::vector<double>& pred, const std::vector<double>& target) {
  if (pred.size() != target.size()) throw ShapeMismatch("mse: size mismatch");
  LossResult res;
  res.grad.resize(pred.size());
  for (size_t i = 0; i < pred.size(); ++i) {
    const double d = pred[i] - target[i];
    res.loss += d * d;
    res.grad[i] = 2.0 * d;
  }
  res.loss /= static_cast<double>(pred.size());
  for (auto& g : res.grad) g /= static_cast<double>(pred.size());
  return res;
}

inline LossResult cross_entropy(const std::vector<double>& logits, int label) {
  if (label < 0 || label >= static_cast<int>(logits.size()))
    throw ShapeMismatch("cross_entropy: label out of range");
  LossResult res;
  double mx = logits[0];
  for (double v : logits) mx = std::max(mx, v);
  double sum = 0.0;
  for (double v : logits) sum += std::exp(v - mx);
  const double log_sum = std::log(sum) + mx;
  res.loss = log_sum - logits[static_cast<size_t>(label)];
  res.grad.resize(logits.size());
  for (size_t i = 0; i < logits.size(); ++i) {
    const double p = std::exp(logits[i] - log_sum);
    res.grad[i] = p - (static_cast<int>(i) == label ? 1.0 : 0.0);
  }
  return res;
}

// ---------------------------------------------------------------------------
// Model file format.
//   VLVMODEL 1 [cfg=<hex>]
//   <size0> <size1> ...
//   one line per parameter tensor, row-major (W0, b0, W1, b1, ...)
// ---------------------------------------------------------------------------

inline std::string model_to_string(const Mlp& net, std::uint64_t cfg_hash = 0) {
  std::ostringstream os;
  os << "VLVMODEL 1";
  if (cfg_hash != 0) os << " cfg=" << hash_hex(cfg_hash);
  os << "\n";
  for (size_t i = 0; i < net.sizes.size(); ++i)
    os << (i ? " " : "") << net.sizes[i];
  os << "\n";
  auto emit = [&os](const std::vector<double>& tensor) {
    for (size_t i = 0; i < tensor.size(); ++i)
      os << (i ? " " : "") << format_double(tensor[i]);
    os << "\n";
  };
  for (size_t l = 0; l < net.weights.size(); ++l) {
    emit(net.weights[l]);
    emit(net.biases[l]);
  }
  return os.str();
}

struct LoadedModel {
  Mlp net;
  std::uint64_t cfg_hash = 0;
};

inline LoadedModel model_from_string(const std::string& text) {
  std::istringstream is(text);
  std::string line;
  long lineno = 0;
  auto next_line = [&]() {
    if (!std::getline(is, line)) throw FormatError("unexpected end of file", lineno);
    ++lineno;
  };
  next_line();
  auto head = split_ws(line);
  if (head.size() < 2 || head[0] != "VLVMODEL" || head[1] != "1")
    throw FormatError("bad magic, expected 'VLVMODEL 1'", lineno);
  LoadedModel out;
  for (size_t i = 2; i < head.size(); ++i)
    if (head[i].rfind("cfg=", 0) == 0)
      out.cfg_hash = std::strtoull(head[i].c_str() + 4, nullptr, 16);
  next_line();
  for (const auto& tok : split_ws(line))
    out.net.sizes.push_back(static_cast<int>(parse_long(tok, lineno)));
  if (out.net.sizes.size() < 2) throw FormatError("model needs at least two sizes", lineno);
  auto read_tensor = [&](size_t expect) {
    next_line();
    auto toks = split_ws(line);
    if (toks.size() != expect)
      throw FormatError("tensor length mismatch: got " + std::to_string(toks.size()) +
                            ", want " + std::to_string(expect), lineno);
    std::vector<double> tensor(expect);
    for (size_t i = 0; i < expect; ++i) tensor[i] = parse_double(toks[i], lineno);
    return tensor;
  };
  for (size_t l = 0; l + 1 < out.net.sizes.size(); ++l) {
    const size_t in = static_cast<size_t>(out.net.sizes[l]);
    const size_t outn = static_cast<size_t>(out.net.sizes[l + 1]);
    out.net.weights.push_back(read_tensor(in * outn));
    out.net.biases.push_back(read_tensor(outn));
  }
  return out;
}

inline void save_model(const Mlp& net, const std::string& path, std::uint64_t cfg_hash = 0) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open '" + path + "' for writing");
  f << model_to_string(net, cfg_hash);
  if (!f) throw IoError("write failed for '" + path + "'");
}

inline LoadedModel load_model(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << f.rdbuf();
  return model_from_string(ss.str());
}

}  // namespace vlv
