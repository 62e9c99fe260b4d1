#pragma once

#include <cstdint>
#include <vector>

#include "vlv/nn.hpp"
#include "vlv/videodata.hpp"

namespace vlv {

// ---------------------------------------------------------------------------
// One-step inverse model: classify the action that turned o_t into o_{t+1}
// from the concatenated pair. Stop is excluded; consecutive frames always
// differ by a movement action.
// ---------------------------------------------------------------------------

struct InverseModel {
  Mlp net;  // 2*kObsDim inputs -> 3 action logits
  double val_accuracy = 0.0;
};

struct InverseTrainConfig {
  int epochs = 5;
  int minibatch = 64;
  double lr = 1e-3;
  std::vector<int> hidden = {128, 64};
  std::uint64_t seed = 0;
};

namespace detail {

inline std::vector<double> pair_input(const Observation& a, const Observation& b) {
  std::vector<double> x(2 * kObsDim);
  std::copy(a.v.begin(), a.v.end(), x.begin());
  std::copy(b.v.begin(), b.v.end(), x.begin() + kObsDim);
  return x;
}

template <typename Fn>
void for_each_transition(const VideoDataset& ds, Fn&& fn) {
  for (size_t t = 0; t < ds.trajs.size(); ++t)
    for (size_t i = 0; i + 1 < ds.trajs[t].size(); ++i) fn(t, i);
}

}  // namespace detail

inline InverseModel train_inverse(const VideoDataset& interaction,
                                  const InverseTrainConfig& cfg = {}) {
  std::vector<std::pair<size_t, size_t>> pairs;
  detail::for_each_transition(interaction, [&](size_t t, size_t i) {
    if (interaction.trajs[t][i].has_label()) pairs.emplace_back(t, i);
  });
  if (pairs.size() < 1000)
    throw InsufficientData("train_inverse: need at least 1000 labeled transitions, have " +
                           std::to_string(pairs.size()));

  Rng rng(mix_seed(cfg.seed, 0x1f5e));
  for (size_t i = pairs.size(); i > 1; --i)
    std::swap(pairs[i - 1], pairs[rng.uniform_int(i)]);
  const size_t n_val = pairs.size() / 10;
  const size_t n_train = pairs.size() - n_val;

  std::vector<int> arch;
  arch.push_back(2 * kObsDim);
  for (int h : cfg.hidden) arch.push_back(h);
  arch.push_back(kNumMoveActions);
  InverseModel model;
  model.net = Mlp(arch, mix_seed(cfg.seed, 0x1f5f));
  AdamState adam;
  adam.lr = cfg.lr;

  Grads grads;
  grads.init_like(model.net);
  ForwardTrace trace;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    for (size_t start = 0; start < n_train; start += static_cast<size_t>(cfg.minibatch)) {
      const size_t end = std::min(n_train, start + static_cast<size_t>(cfg.minibatch));
      grads.clear();
      for (size_t k = start; k < end; ++k) {
        const auto [t, i] = pairs[k];
        const auto x = detail::pair_input(interaction.trajs[t][i].obs,
                                          interaction.trajs[t][i + 1].obs);
        forward_trace(model.net, x.data(), trace);
        auto loss = cross_entropy(trace.acts.back(), interaction.trajs[t][i].label);
        for (auto& g : loss.grad) g /= static_cast<double>(end - start);
        backward_accumulate(model.net, trace, loss.grad, grads);
      }
      adam_step(model.net, grads, adam);
    }
  }

  size_t correct = 0;
  for (size_t k = n_train; k < pairs.size(); ++k) {
    const auto [t, i] = pairs[k];
    const auto x = detail::pair_input(interaction.trajs[t][i].obs,
                                      interaction.trajs[t][i + 1].obs);
    const auto logits = forward(model.net, x);
    int arg = 0;
    for (int a = 1; a < kNumMoveActions; ++a)
      if (logits[static_cast<size_t>(a)] > logits[static_cast<size_t>(arg)]) arg = a;
    if (arg == interaction.trajs[t][i].label) ++correct;
  }
  model.val_accuracy = n_val ? static_cast<double>(correct) / static_cast<double>(n_val) : 1.0;
  return model;
}

// Pseudo-label every consecutive frame pair with the argmax action; ties
// break toward the lowest action code. Reads observations only.
inline VideoDataset pseudo_label(const InverseModel& model, const VideoDataset& videos) {
  VideoDataset out = videos;
  out.kind = "pseudo";
  for (auto& traj : out.trajs) {
    for (size_t i = 0; i + 1 < traj.size(); ++i) {
      const auto x = detail::pair_input(traj[i].obs, traj[i + 1].obs);
      const auto logits = forward(model.net, x);
      int arg = 0;
      for (int a = 1; a < kNumMoveActions; ++a)
        if (logits[static_cast<size_t>(a)] > logits[static_cast<size_t>(arg)]) arg = a;
      traj[i].label = arg;
    }
    traj.back().label = -1;
  }
  return out;
}

// Fraction of pseudo labels that match the held-back true actions. Requires
// an explicitly unlocked handle; logged per run to support the true-actions
// ablation delta.
inline double measure_agreement(const VideoDataset& labeled) {
  if (!labeled.hidden_readable())
    throw ValidationError("measure_agreement: dataset handle is locked");
  size_t total = 0, match = 0;
  for (size_t t = 0; t < labeled.trajs.size(); ++t)
    for (size_t i = 0; i + 1 < labeled.trajs[t].size(); ++i) {
      const int truth = labeled.hidden(t, i).action;
      if (truth < 0 || !labeled.trajs[t][i].has_label()) continue;
      ++total;
      if (labeled.trajs[t][i].label == truth) ++match;
    }
  if (total == 0) throw EmptyDataset("measure_agreement: no labeled pairs");
  return static_cast<double>(match) / static_cast<double>(total);
}

}  // namespace vlv
