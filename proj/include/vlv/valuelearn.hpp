#pragma once

#include <cstdint>
#include <functional>
#include <unordered_map>
#include <vector>

#include "vlv/detector.hpp"
#include "vlv/inverse.hpp"
#include "vlv/nn.hpp"
#include "vlv/oracle.hpp"

namespace vlv {

// ---------------------------------------------------------------------------
// Q-function over observations: the network emits 15 values interpreted as
// 3 actions x 5 categories (index a*5 + c); f(o,c) = max_a Q(o,a,c).
// ---------------------------------------------------------------------------

struct QFunction {
  Mlp net;

  double value(const Observation& obs, Category cat) const {
    std::vector<double> x(obs.v.begin(), obs.v.end());
    const auto out = forward(net, x);
    return max_over_actions(out, cat);
  }
  static double max_over_actions(const std::vector<double>& head, Category cat) {
    double best = -kInf;
    for (int a = 0; a < kNumMoveActions; ++a)
      best = std::max(best, head[static_cast<size_t>(a) * kNumCategories +
                                 static_cast<size_t>(cat)]);
    return best;
  }
};

struct QTrainConfig {
  double gamma = 0.99;
  int minibatch = 16;
  int iterations = 50000;    // paper scale 300K; desk default
  int sync_period = 2000;    // target-network refresh interval
  double lr = 1e-4;
  std::vector<int> hidden = {512, 256};
  std::uint64_t seed = 0;
};

// Clipped Bellman backup; rewards are binary so targets live in [0,1].
inline double bellman_target(double r, double q_next_max, double gamma) {
  return clamp01(r + gamma * q_next_max);
}

struct QTrainReport {
  std::vector<double> residuals;  // held-out Bellman residual per sync period
  double final_residual = 0.0;
  size_t n_train = 0;
  size_t n_holdout = 0;
};

struct QTrainResult {
  QFunction q;
  QTrainReport report;
};

// A training sample viewed through pointers so callers can materialize
// observations lazily (the panorama variant renders inputs on demand).
struct QSampleView {
  const double* obs = nullptr;
  const double* next = nullptr;
  int action = 0;
  const std::uint8_t* reward = nullptr;
};

using QSampleProvider = std::function<QSampleView(size_t idx)>;

// Extra supervised regression samples for the joint objective: inputs of the
// Q-net shape with 15-way targets, trained alongside the Bellman loss.
struct RegressionSet {
  int input_dim = kObsDim;
  std::vector<std::vector<double>> inputs;
  std::vector<std::array<double, kNumMoveActions * kNumCategories>> targets;
};

namespace detail {

inline void dqn_loss_grad(const std::vector<double>& out, const QSampleView& s,
                          const std::vector<double>& q_on_next,
                          const std::vector<double>& q_tg_next, double gamma,
                          double inv_batch, std::vector<double>& grad, double* sq_err) {
  grad.assign(out.size(), 0.0);
  for (int c = 0; c < kNumCategories; ++c) {
    int best_a = 0;
    for (int a = 1; a < kNumMoveActions; ++a)
      if (q_on_next[static_cast<size_t>(a) * kNumCategories + c] >
          q_on_next[static_cast<size_t>(best_a) * kNumCategories + c])
        best_a = a;
    const double y = bellman_target(
        s.reward[c], q_tg_next[static_cast<size_t>(best_a) * kNumCategories + c], gamma);
    const size_t idx = static_cast<size_t>(s.action) * kNumCategories + c;
    const double d = out[idx] - y;
    if (sq_err) *sq_err += d * d;
    grad[idx] = 2.0 * d * inv_batch;
  }
}

inline QTrainResult train_q_core(size_t n_samples, int input_dim,
                                 const QSampleProvider& provider, const QTrainConfig& cfg,
                                 const RegressionSet* joint) {
  if (n_samples < static_cast<size_t>(cfg.minibatch))
    throw InsufficientData("train_q: need at least one minibatch of quadruples");
  if (!(cfg.gamma > 0.0 && cfg.gamma < 1.0))
    throw ValidationError("train_q: gamma must be in (0,1)");

  Rng rng(mix_seed(cfg.seed, 0x9b1e));
  std::vector<size_t> order(n_samples);
  for (size_t i = 0; i < n_samples; ++i) order[i] = i;
  for (size_t i = n_samples; i > 1; --i)
    std::swap(order[i - 1], order[rng.uniform_int(i)]);
  size_t n_hold = std::min<size_t>(1000, n_samples / 20);
  if (n_samples - n_hold < static_cast<size_t>(cfg.minibatch)) n_hold = 0;
  const size_t n_train = n_samples - n_hold;

  std::vector<int> arch;
  arch.push_back(input_dim);
  for (int h : cfg.hidden) arch.push_back(h);
  arch.push_back(kNumMoveActions * kNumCategories);
  QTrainResult res;
  res.q.net = Mlp(arch, mix_seed(cfg.seed, 0x9b1f));
  res.report.n_train = n_train;
  res.report.n_holdout = n_hold;
  Mlp target_net = res.q.net;
  AdamState adam;
  adam.lr = cfg.lr;

  ForwardTrace trace;
  Grads grads;
  grads.init_like(res.q.net);
  std::vector<double> q_on_next, q_tg_next, grad;

  auto holdout_residual = [&]() {
    if (n_hold == 0) return 0.0;
    double total = 0.0;
    for (size_t k = n_train; k < n_samples; ++k) {
      const QSampleView s = provider(order[k]);
      forward_trace(res.q.net, s.next, trace);
      q_on_next = trace.acts.back();
      forward_trace(target_net, s.next, trace);
      q_tg_next = trace.acts.back();
      forward_trace(res.q.net, s.obs, trace);
      double sq = 0.0;
      dqn_loss_grad(trace.acts.back(), s, q_on_next, q_tg_next, cfg.gamma, 1.0, grad, &sq);
      total += sq;
    }
    return total / static_cast<double>(n_hold);
  };

  const double inv_batch = 1.0 / cfg.minibatch;
  Rng joint_rng(mix_seed(cfg.seed, 0x9b20));
  for (int iter = 0; iter < cfg.iterations; ++iter) {
    if (iter % cfg.sync_period == 0) {
      res.report.residuals.push_back(holdout_residual());
      target_net = res.q.net;
    }
    grads.clear();
    for (int b = 0; b < cfg.minibatch; ++b) {
      const QSampleView s = provider(order[rng.uniform_int(n_train)]);
      forward_trace(res.q.net, s.next, trace);
      q_on_next = trace.acts.back();
      forward_trace(target_net, s.next, trace);
      q_tg_next = trace.acts.back();
      forward_trace(res.q.net, s.obs, trace);
      dqn_loss_grad(trace.acts.back(), s, q_on_next, q_tg_next, cfg.gamma, inv_batch, grad,
                    nullptr);
      backward_accumulate(res.q.net, trace, grad, grads);
    }
    if (joint && !joint->inputs.empty()) {
      for (int b = 0; b < cfg.minibatch; ++b) {
        const size_t k = joint_rng.uniform_int(joint->inputs.size());
        forward_trace(res.q.net, joint->inputs[k].data(), trace);
        const auto& out = trace.acts.back();
        grad.assign(out.size(), 0.0);
        for (size_t j = 0; j < out.size(); ++j)
          grad[j] = 2.0 * (out[j] - joint->targets[k][j]) * inv_batch;
        backward_accumulate(res.q.net, trace, grad, grads);
      }
    }
    adam_step(res.q.net, grads, adam);
  }
  res.report.final_residual = holdout_residual();
  res.report.residuals.push_back(res.report.final_residual);
  return res;
}

}  // namespace detail

inline QTrainResult train_q(const std::vector<TransitionQuadruple>& quads,
                            const QTrainConfig& cfg = {},
                            const RegressionSet* joint = nullptr) {
  QSampleProvider provider = [&quads](size_t idx) {
    const TransitionQuadruple& q = quads[idx];
    return QSampleView{q.obs.v.data(), q.next.v.data(), q.action, q.reward.data()};
  };
  return detail::train_q_core(quads.size(), kObsDim, provider, cfg, joint);
}

// ---------------------------------------------------------------------------
// Tabular Q-learning: full sweeps over an exhaustive transition set with unit
// learning rate, which on deterministic data is Q-iteration. States are
// integer ids.
// ---------------------------------------------------------------------------

struct TabularTransition {
  int state = 0;
  int action = 0;
  int next_state = 0;
  std::array<std::uint8_t, kNumCategories> reward{};
};

struct TabularQ {
  int n_states = 0;
  std::vector<double> q;  // [state][action][category]

  double at(int s, int a, int c) const {
    return q[(static_cast<size_t>(s) * kNumMoveActions + a) * kNumCategories + c];
  }
  double value(int s, int c) const {
    double best = at(s, 0, c);
    for (int a = 1; a < kNumMoveActions; ++a) best = std::max(best, at(s, a, c));
    return best;
  }
};

inline TabularQ train_q_tabular(const std::vector<TabularTransition>& transitions,
                                int n_states, double gamma, double tol = 1e-12,
                                int max_sweeps = 100000) {
  if (transitions.empty()) throw InsufficientData("train_q_tabular: no transitions");
  TabularQ tq;
  tq.n_states = n_states;
  tq.q.assign(static_cast<size_t>(n_states) * kNumMoveActions * kNumCategories, 0.0);
  for (int sweep = 0; sweep < max_sweeps; ++sweep) {
    double max_delta = 0.0;
    for (const auto& tr : transitions) {
      for (int c = 0; c < kNumCategories; ++c) {
        const double target = bellman_target(tr.reward[static_cast<size_t>(c)],
                                             tq.value(tr.next_state, c), gamma);
        auto& cell = tq.q[(static_cast<size_t>(tr.state) * kNumMoveActions + tr.action) *
                              kNumCategories + c];
        max_delta = std::max(max_delta, std::abs(target - cell));
        cell = target;
      }
    }
    if (max_delta < tol) break;
  }
  return tq;
}

// ---------------------------------------------------------------------------
// Action-agnostic policy evaluation baselines. The tabular form keys values
// by exact observation content; the net form trains a 5-way value head.
// ---------------------------------------------------------------------------

namespace detail {

struct ObsKey {
  std::array<double, kObsDim> v;
  bool operator==(const ObsKey& o) const { return v == o.v; }
};

struct ObsKeyHash {
  size_t operator()(const ObsKey& k) const {
    std::uint64_t h = 0xcbf29ce484222325ull;
    const unsigned char* bytes = reinterpret_cast<const unsigned char*>(k.v.data());
    for (size_t i = 0; i < sizeof(k.v); ++i) {
      h ^= bytes[i];
      h *= 0x100000001b3ull;
    }
    return static_cast<size_t>(h);
  }
};

}  // namespace detail

using FrameRewards = std::vector<std::vector<std::array<std::uint8_t, kNumCategories>>>;

struct ValueTable {
  std::unordered_map<detail::ObsKey, std::array<double, kNumCategories>, detail::ObsKeyHash>
      table;
  std::optional<Mlp> net;  // kObsDim -> hidden -> 5

  double value(const Observation& obs, Category cat) const {
    if (net) {
      std::vector<double> x(obs.v.begin(), obs.v.end());
      return forward(*net, x)[static_cast<size_t>(cat)];
    }
    detail::ObsKey key{obs.v};
    const auto it = table.find(key);
    return it == table.end() ? 0.0 : it->second[static_cast<size_t>(cat)];
  }
};

inline ValueTable policy_evaluation_td0(const VideoDataset& videos,
                                        const FrameRewards& rewards, double alpha,
                                        double gamma, int passes) {
  ValueTable vt;
  auto lookup = [&vt](const Observation& o) -> std::array<double, kNumCategories>& {
    return vt.table[detail::ObsKey{o.v}];
  };
  auto read = [&vt](const Observation& o) {
    const auto it = vt.table.find(detail::ObsKey{o.v});
    return it == vt.table.end() ? std::array<double, kNumCategories>{} : it->second;
  };
  for (int pass = 0; pass < passes; ++pass)
    for (size_t t = 0; t < videos.trajs.size(); ++t)
      for (size_t i = 0; i + 1 < videos.trajs[t].size(); ++i) {
        const auto next_v = read(videos.trajs[t][i + 1].obs);
        auto& cur = lookup(videos.trajs[t][i].obs);
        for (int c = 0; c < kNumCategories; ++c) {
          const double target =
              rewards[t][i + 1][static_cast<size_t>(c)] + gamma * next_v[static_cast<size_t>(c)];
          cur[static_cast<size_t>(c)] += alpha * (target - cur[static_cast<size_t>(c)]);
        }
      }
  return vt;
}

// Monte Carlo regression target for frame t: gamma^k with k the distance to
// the first later reward frame in the same trajectory, 0 when there is none.
inline std::vector<std::vector<std::array<double, kNumCategories>>> mc_targets(
    const VideoDataset& videos, const FrameRewards& rewards, double gamma) {
  std::vector<std::vector<std::array<double, kNumCategories>>> targets(videos.trajs.size());
  for (size_t t = 0; t < videos.trajs.size(); ++t) {
    const size_t len = videos.trajs[t].size();
    targets[t].assign(len, {});
    for (int c = 0; c < kNumCategories; ++c) {
      long next_reward = -1;
      for (long i = static_cast<long>(len) - 1; i >= 0; --i) {
        if (i + 1 < static_cast<long>(len)) {
          if (rewards[t][static_cast<size_t>(i) + 1][static_cast<size_t>(c)])
            next_reward = i + 1;
        }
        if (next_reward >= 0)
          targets[t][static_cast<size_t>(i)][static_cast<size_t>(c)] =
              std::pow(gamma, static_cast<double>(next_reward - i));
      }
    }
  }
  return targets;
}

inline ValueTable policy_evaluation_mc(const VideoDataset& videos, const FrameRewards& rewards,
                                       double gamma) {
  const auto targets = mc_targets(videos, rewards, gamma);
  ValueTable vt;
  std::unordered_map<detail::ObsKey, std::array<double, kNumCategories>, detail::ObsKeyHash> sums;
  std::unordered_map<detail::ObsKey, int, detail::ObsKeyHash> counts;
  for (size_t t = 0; t < videos.trajs.size(); ++t)
    for (size_t i = 0; i + 1 < videos.trajs[t].size(); ++i) {
      detail::ObsKey key{videos.trajs[t][i].obs.v};
      auto& sum = sums[key];
      for (int c = 0; c < kNumCategories; ++c)
        sum[static_cast<size_t>(c)] += targets[t][i][static_cast<size_t>(c)];
      counts[key] += 1;
    }
  for (auto& [key, sum] : sums) {
    auto entry = sum;
    const double inv = 1.0 / counts[key];
    for (auto& v : entry) v *= inv;
    vt.table.emplace(key, entry);
  }
  return vt;
}

struct ValueNetConfig {
  int passes = 40;
  int minibatch = 32;
  double lr = 1e-3;
  std::vector<int> hidden = {128, 64};
  std::uint64_t seed = 0;
};

inline ValueTable policy_evaluation_td0_net(const VideoDataset& videos,
                                            const FrameRewards& rewards, double gamma,
                                            const ValueNetConfig& cfg = {}) {
  std::vector<std::pair<size_t, size_t>> pairs;
  detail::for_each_transition(videos, [&](size_t t, size_t i) { pairs.emplace_back(t, i); });
  if (pairs.empty()) throw EmptyDataset("policy_evaluation_td0_net: no transitions");
  std::vector<int> arch{kObsDim};
  for (int h : cfg.hidden) arch.push_back(h);
  arch.push_back(kNumCategories);
  Mlp net(arch, mix_seed(cfg.seed, 0x7d0));
  AdamState adam;
  adam.lr = cfg.lr;
  Rng rng(mix_seed(cfg.seed, 0x7d1));
  ForwardTrace trace;
  Grads grads;
  grads.init_like(net);
  std::vector<double> xin(kObsDim), grad;
  const size_t steps_per_pass = (pairs.size() + cfg.minibatch - 1) / cfg.minibatch;
  for (int pass = 0; pass < cfg.passes; ++pass) {
    for (size_t s = 0; s < steps_per_pass; ++s) {
      grads.clear();
      for (int b = 0; b < cfg.minibatch; ++b) {
        const auto [t, i] = pairs[rng.uniform_int(pairs.size())];
        const Observation& next = videos.trajs[t][i + 1].obs;
        std::copy(next.v.begin(), next.v.end(), xin.begin());
        const auto v_next = forward(net, xin);
        std::copy(videos.trajs[t][i].obs.v.begin(), videos.trajs[t][i].obs.v.end(), xin.begin());
        forward_trace(net, xin.data(), trace);
        const auto& out = trace.acts.back();
        grad.assign(out.size(), 0.0);
        for (int c = 0; c < kNumCategories; ++c) {
          const double y = rewards[t][i + 1][static_cast<size_t>(c)] +
                           gamma * v_next[static_cast<size_t>(c)];
          grad[static_cast<size_t>(c)] =
              2.0 * (out[static_cast<size_t>(c)] - y) / cfg.minibatch;
        }
        backward_accumulate(net, trace, grad, grads);
      }
      adam_step(net, grads, adam);
    }
  }
  ValueTable vt;
  vt.net = std::move(net);
  return vt;
}

inline ValueTable policy_evaluation_mc_net(const VideoDataset& videos,
                                           const FrameRewards& rewards, double gamma,
                                           const ValueNetConfig& cfg = {}) {
  const auto targets = mc_targets(videos, rewards, gamma);
  std::vector<std::pair<size_t, size_t>> pairs;
  detail::for_each_transition(videos, [&](size_t t, size_t i) { pairs.emplace_back(t, i); });
  if (pairs.empty()) throw EmptyDataset("policy_evaluation_mc_net: no transitions");
  std::vector<int> arch{kObsDim};
  for (int h : cfg.hidden) arch.push_back(h);
  arch.push_back(kNumCategories);
  Mlp net(arch, mix_seed(cfg.seed, 0x7d2));
  AdamState adam;
  adam.lr = cfg.lr;
  Rng rng(mix_seed(cfg.seed, 0x7d3));
  ForwardTrace trace;
  Grads grads;
  grads.init_like(net);
  std::vector<double> grad;
  const size_t steps_per_pass = (pairs.size() + cfg.minibatch - 1) / cfg.minibatch;
  for (int pass = 0; pass < cfg.passes; ++pass) {
    for (size_t s = 0; s < steps_per_pass; ++s) {
      grads.clear();
      for (int b = 0; b < cfg.minibatch; ++b) {
        const auto [t, i] = pairs[rng.uniform_int(pairs.size())];
        forward_trace(net, videos.trajs[t][i].obs.v.data(), trace);
        const auto& out = trace.acts.back();
        grad.assign(out.size(), 0.0);
        for (int c = 0; c < kNumCategories; ++c)
          grad[static_cast<size_t>(c)] =
              2.0 * (out[static_cast<size_t>(c)] - targets[t][i][static_cast<size_t>(c)]) /
              cfg.minibatch;
        backward_accumulate(net, trace, grad, grads);
      }
      adam_step(net, grads, adam);
    }
  }
  ValueTable vt;
  vt.net = std::move(net);
  return vt;
}

// ---------------------------------------------------------------------------
// Strong supervision: regress the Q head toward ground-truth values derived
// from pose-graph step counts on semantically labeled worlds.
// ---------------------------------------------------------------------------

inline RegressionSet build_strong_samples(const std::vector<GridWorld>& worlds, double gamma,
                                          int n_samples, std::uint64_t seed) {
  if (worlds.empty()) throw ValidationError("build_strong_samples: no worlds");
  RegressionSet set;
  std::vector<OracleFields> fields;
  fields.reserve(worlds.size());
  for (const auto& w : worlds) fields.emplace_back(w);
  Rng rng(mix_seed(seed, 0x57a0));
  for (int i = 0; i < n_samples; ++i) {
    const size_t wi = static_cast<size_t>(i) % worlds.size();
    const GridWorld& w = worlds[wi];
    const PoseNode pose{detail::random_free_cell(w, rng), rng.uniform_index(kNumHeadings)};
    const Observation obs = render(w, pose_of(w, pose));
    std::array<double, kNumMoveActions * kNumCategories> target{};
    for (int a = 0; a < kNumMoveActions; ++a) {
      const PoseNode succ = pose_step(w, pose, static_cast<Action>(a));
      for (int c = 0; c < kNumCategories; ++c) {
        const std::int32_t s = fields[wi].at(succ, static_cast<Category>(c));
        target[static_cast<size_t>(a) * kNumCategories + c] =
            s < 0 ? 0.0 : std::pow(gamma, static_cast<double>(s));
      }
    }
    set.inputs.emplace_back(obs.v.begin(), obs.v.end());
    set.targets.push_back(target);
  }
  return set;
}

struct StrongTrainConfig {
  int iterations = 30000;
  int minibatch = 16;
  double lr = 1e-4;
  std::vector<int> hidden = {512, 256};
  std::uint64_t seed = 0;
};

inline QFunction train_strong_supervision(const RegressionSet& samples,
                                          const StrongTrainConfig& cfg = {}) {
  if (samples.inputs.empty()) throw InsufficientData("train_strong_supervision: no samples");
  std::vector<int> arch{samples.input_dim};
  for (int h : cfg.hidden) arch.push_back(h);
  arch.push_back(kNumMoveActions * kNumCategories);
  QFunction qf;
  qf.net = Mlp(arch, mix_seed(cfg.seed, 0x57a1));
  AdamState adam;
  adam.lr = cfg.lr;
  Rng rng(mix_seed(cfg.seed, 0x57a2));
  ForwardTrace trace;
  Grads grads;
  grads.init_like(qf.net);
  std::vector<double> grad;
  for (int iter = 0; iter < cfg.iterations; ++iter) {
    grads.clear();
    for (int b = 0; b < cfg.minibatch; ++b) {
      const size_t k = rng.uniform_int(samples.inputs.size());
      forward_trace(qf.net, samples.inputs[k].data(), trace);
      const auto& out = trace.acts.back();
      grad.assign(out.size(), 0.0);
      for (size_t j = 0; j < out.size(); ++j)
        grad[j] = 2.0 * (out[j] - samples.targets[k][j]) / cfg.minibatch;
      backward_accumulate(qf.net, trace, grad, grads);
    }
    adam_step(qf.net, grads, adam);
  }
  return qf;
}

// ---------------------------------------------------------------------------
// Behavior cloning from observation: clone pseudo-labeled actions on
// subtrajectory suffixes that end at reward frames.
// ---------------------------------------------------------------------------

struct BcTrainConfig {
  int epochs = 8;
  int minibatch = 64;
  double lr = 1e-3;
  std::vector<int> hidden = {128, 64};
  int suffix_window = 40;
  std::uint64_t seed = 0;
};

constexpr int kBcInputDim = kObsDim + kNumCategories;

inline std::vector<double> bc_input(const Observation& obs, Category cat) {
  std::vector<double> x(kBcInputDim, 0.0);
  std::copy(obs.v.begin(), obs.v.end(), x.begin());
  x[static_cast<size_t>(kObsDim) + static_cast<size_t>(cat)] = 1.0;
  return x;
}

inline Mlp train_behavior_cloning(const VideoDataset& labeled, const FrameRewards& rewards,
                                  const BcTrainConfig& cfg = {}) {
  struct Sample { size_t t, i; Category cat; };
  std::vector<Sample> samples;
  for (size_t t = 0; t < labeled.trajs.size(); ++t) {
    const size_t len = labeled.trajs[t].size();
    for (int c = 0; c < kNumCategories; ++c) {
      std::vector<char> used(len, 0);
      for (size_t j = 0; j < len; ++j) {
        if (!rewards[t][j][static_cast<size_t>(c)]) continue;
        const size_t lo = j > static_cast<size_t>(cfg.suffix_window)
                              ? j - static_cast<size_t>(cfg.suffix_window) : 0;
        for (size_t i = lo; i < j; ++i)
          if (!used[i] && labeled.trajs[t][i].has_label()) {
            used[i] = 1;
            samples.push_back({t, i, static_cast<Category>(c)});
          }
      }
    }
  }
  if (samples.empty())
    throw InsufficientData("train_behavior_cloning: no reward-reaching subtrajectories");

  std::vector<int> arch{kBcInputDim};
  for (int h : cfg.hidden) arch.push_back(h);
  arch.push_back(kNumMoveActions);
  Mlp net(arch, mix_seed(cfg.seed, 0xbc0));
  AdamState adam;
  adam.lr = cfg.lr;
  Rng rng(mix_seed(cfg.seed, 0xbc1));
  for (size_t i = samples.size(); i > 1; --i)
    std::swap(samples[i - 1], samples[rng.uniform_int(i)]);
  ForwardTrace trace;
  Grads grads;
  grads.init_like(net);
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    for (size_t start = 0; start < samples.size(); start += static_cast<size_t>(cfg.minibatch)) {
      const size_t end = std::min(samples.size(), start + static_cast<size_t>(cfg.minibatch));
      grads.clear();
      for (size_t k = start; k < end; ++k) {
        const auto& s = samples[k];
        const auto x = bc_input(labeled.trajs[s.t][s.i].obs, s.cat);
        forward_trace(net, x.data(), trace);
        auto loss = cross_entropy(trace.acts.back(), labeled.trajs[s.t][s.i].label);
        for (auto& g : loss.grad) g /= static_cast<double>(end - start);
        backward_accumulate(net, trace, loss.grad, grads);
      }
      adam_step(net, grads, adam);
    }
  }
  return net;
}

inline Action bc_action(const Mlp& net, const Observation& obs, Category cat) {
  const auto logits = forward(net, bc_input(obs, cat));
  int arg = 0;
  for (int a = 1; a < kNumMoveActions; ++a)
    if (logits[static_cast<size_t>(a)] > logits[static_cast<size_t>(arg)]) arg = a;
  return static_cast<Action>(arg);
}

}  // namespace vlv
