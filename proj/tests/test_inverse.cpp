#include "catch_amalgamated.hpp"

#include "support/oracles.hpp"
#include "vlv/inverse.hpp"

using namespace vlv;

namespace {

// Interaction set of pure rotations from random poses.
VideoDataset rotation_dataset(const GridWorld& w, int n_transitions, std::uint64_t seed) {
  VideoDataset ds;
  ds.kind = "interaction";
  ds.seed = seed;
  Rng rng(seed);
  int remaining = n_transitions;
  while (remaining > 0) {
    PoseNode pose{detail::random_free_cell(w, rng), rng.uniform_index(kNumHeadings)};
    std::vector<Frame> traj;
    const int steps = std::min(10, remaining);
    for (int i = 0; i < steps; ++i) {
      const Action act = rng.bernoulli(0.5) ? Action::Left : Action::Right;
      traj.push_back({render(w, pose_of(w, pose)), static_cast<int>(act)});
      pose = pose_step(w, pose, act);
    }
    traj.push_back({render(w, pose_of(w, pose)), -1});
    ds.world_ids.push_back(0);
    ds.targets.push_back({-1, -1});
    ds.trajs.push_back(std::move(traj));
    remaining -= steps;
  }
  return ds;
}

}  // namespace

TEST_CASE("rotation-only data is classified almost perfectly") {
  const GridWorld w = generate_world(61, {28, 28, 4, 4, 8, 1.2});
  const VideoDataset ds = rotation_dataset(w, 3000, 17);
  InverseTrainConfig cfg;
  cfg.epochs = 8;
  cfg.seed = 3;
  const InverseModel model = train_inverse(ds, cfg);
  CHECK(model.val_accuracy >= 0.99);
}

TEST_CASE("training rejects tiny datasets and is seed reproducible") {
  const GridWorld w = generate_world(62, {24, 24, 3, 4, 8, 1.0});
  SECTION("fewer than 1000 transitions") {
    const VideoDataset ds = rotation_dataset(w, 500, 1);
    CHECK_THROWS_AS(train_inverse(ds, {}), InsufficientData);
  }
  SECTION("same seed, same weights") {
    const VideoDataset ds = rotation_dataset(w, 1200, 2);
    InverseTrainConfig cfg;
    cfg.epochs = 1;
    cfg.hidden = {32};
    cfg.seed = 9;
    const InverseModel a = train_inverse(ds, cfg);
    const InverseModel b = train_inverse(ds, cfg);
    CHECK(a.net == b.net);
    CHECK(a.val_accuracy == b.val_accuracy);
  }
}

TEST_CASE("pseudo labels are the model argmax on every consecutive pair") {
  const GridWorld w = generate_world(63, {24, 24, 3, 4, 8, 1.0});
  const VideoDataset videos = generate_videos({w}, 3, 0.2, 5);
  InverseModel model;
  model.net = Mlp({2 * kObsDim, 16, kNumMoveActions}, 123);  // arbitrary weights
  const VideoDataset labeled = pseudo_label(model, videos);
  REQUIRE(labeled.kind == "pseudo");
  for (size_t t = 0; t < labeled.trajs.size(); ++t) {
    const size_t len = labeled.trajs[t].size();
    for (size_t i = 0; i + 1 < len; ++i) {
      REQUIRE(labeled.trajs[t][i].has_label());
      std::vector<double> x(2 * kObsDim);
      std::copy(videos.trajs[t][i].obs.v.begin(), videos.trajs[t][i].obs.v.end(), x.begin());
      std::copy(videos.trajs[t][i + 1].obs.v.begin(), videos.trajs[t][i + 1].obs.v.end(),
                x.begin() + kObsDim);
      const auto logits = oracles::naive_forward(model.net, x);
      int want = 0;
      for (int a = 1; a < kNumMoveActions; ++a)
        if (logits[static_cast<size_t>(a)] > logits[static_cast<size_t>(want)]) want = a;
      CHECK(labeled.trajs[t][i].label == want);
    }
    CHECK_FALSE(labeled.trajs[t].back().has_label());  // L frames, L-1 labels
  }
}

TEST_CASE("agreement against hidden truth tracks validation accuracy") {
  const GridWorld w = generate_world(64, {28, 28, 4, 4, 8, 1.2});
  const VideoDataset interaction = collect_interaction({w}, 6000, 11);
  InverseTrainConfig cfg;
  cfg.epochs = 6;
  cfg.seed = 12;
  const InverseModel model = train_inverse(interaction, cfg);
  const VideoDataset videos = generate_videos({w}, 10, 0.2, 13);
  const VideoDataset labeled = pseudo_label(model, videos);
  const double agreement = measure_agreement(labeled.unlocked_for_ablation());
  CHECK(agreement >= model.val_accuracy - 0.05);
  CHECK_THROWS_AS(measure_agreement(labeled), ValidationError);  // locked handle
}
