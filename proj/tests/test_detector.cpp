#include "catch_amalgamated.hpp"

#include "support/oracles.hpp"
#include "vlv/detector.hpp"

using namespace vlv;

namespace {

const DetectorConfig kNoiseFree{0.0, 0.0, 0.0, 0};

// Observation with the first `rays` rays hitting `cat` at depth_m and the
// rest seeing nothing.
Observation synthetic_obs(int rays, Category cat, double depth_m) {
  Observation obs;
  for (int i = 0; i < kNumRays; ++i) {
    const size_t base = static_cast<size_t>(i) * kRayStride;
    if (i < rays) {
      obs.v[base] = depth_m / kDepthCap;
      obs.v[base + 1 + static_cast<size_t>(cat)] = 1.0;
    } else {
      obs.v[base] = 1.0;
      obs.v[base + 1 + kNumCategories] = 1.0;
    }
  }
  return obs;
}

VideoDataset wrap_frames(const std::vector<Observation>& frames) {
  VideoDataset ds;
  ds.kind = "pseudo";
  ds.world_ids.push_back(0);
  ds.targets.push_back({-1, -1});
  std::vector<Frame> traj;
  for (const auto& obs : frames) traj.push_back({obs, 0});
  traj.back().label = -1;
  ds.trajs.push_back(std::move(traj));
  return ds;
}

}  // namespace

TEST_CASE("confidence formula") {
  CHECK(detection_confidence(0.5, 1.0) == 0.4);
  CHECK(detection_confidence(1.0, 0.0) == 1.0);
  CHECK(detection_confidence(1.0, 5.0) == 0.0);
}

TEST_CASE("noise-free detection fires exactly on visible categories") {
  SECTION("empty view yields no detections") {
    CHECK(detect(synthetic_obs(0, Category::Bed, 1.0), kNoiseFree, 1).empty());
  }
  SECTION("full-coverage bed at one meter") {
    const auto dets = detect(synthetic_obs(kNumRays, Category::Bed, 1.0), kNoiseFree, 2);
    REQUIRE(dets.size() == 1);
    CHECK(dets[0].category == Category::Bed);
    CHECK(dets[0].confidence == Catch::Approx(0.8).epsilon(1e-12));
    CHECK(dets[0].est_distance == Catch::Approx(1.0).epsilon(1e-12));
  }
  SECTION("matches the visibility predicate on world renders") {
    GridWorld w = oracles::empty_room(26, 26);
    oracles::place_object(w, Category::Couch, {{13, 18}, {14, 18}});
    oracles::place_object(w, Category::Toilet, {{4, 4}});
    Rng rng(7);
    for (int k = 0; k < 30; ++k) {
      const int r = rng.uniform_index(w.height);
      const int c = rng.uniform_index(w.width);
      if (!w.is_free(r, c)) continue;
      const Pose pose = cell_pose(w, {r, c}, rng.uniform_index(kNumHeadings) * kTurnDeg);
      const auto dets = detect(render(w, pose), kNoiseFree, static_cast<std::uint64_t>(k));
      for (int cat = 0; cat < kNumCategories; ++cat) {
        const bool detected =
            max_confidence(dets, static_cast<Category>(cat)) > 0.0 ||
            std::any_of(dets.begin(), dets.end(), [&](const Detection& d) {
              return d.category == static_cast<Category>(cat);
            });
        CHECK(detected == visible(w, pose, static_cast<Category>(cat)).visible);
      }
    }
  }
}

TEST_CASE("false positive rate matches the configured probability") {
  DetectorConfig cfg;
  cfg.p_false_neg = 0.0;
  cfg.p_false_pos = 0.02;
  cfg.confidence_noise_sigma = 0.0;
  cfg.seed = 99;
  const Observation empty = synthetic_obs(0, Category::Bed, 1.0);
  std::array<int, kNumCategories> fired{};
  const int n = 10000;
  for (int i = 0; i < n; ++i)
    for (const auto& d : detect(empty, cfg, static_cast<std::uint64_t>(i))) {
      fired[static_cast<size_t>(d.category)] += 1;
      CHECK(d.confidence >= 0.3);
      CHECK(d.confidence <= 0.7);
      CHECK(d.est_distance > 0.0);
    }
  for (int cat = 0; cat < kNumCategories; ++cat) {
    const double rate = fired[static_cast<size_t>(cat)] / static_cast<double>(n);
    CHECK(rate == Catch::Approx(0.02).margin(0.005));
  }
}

TEST_CASE("top-decile reward labeling") {
  SECTION("hundred distinct confidences give exactly ten reward frames") {
    std::vector<Observation> frames;
    for (int i = 0; i < 100; ++i)
      frames.push_back(synthetic_obs(kNumRays, Category::Chair, 0.02 + 0.04 * i));
    const auto labeling = label_rewards(wrap_frames(frames), kNoiseFree);
    int rewards = 0;
    for (const auto& row : labeling.frame_rewards[0])
      rewards += row[static_cast<size_t>(Category::Chair)];
    CHECK(rewards == 10);
  }
  SECTION("absent categories never earn reward") {
    std::vector<Observation> frames;
    for (int i = 0; i < 20; ++i)
      frames.push_back(synthetic_obs(kNumRays, Category::Chair, 0.5 + 0.1 * i));
    const auto labeling = label_rewards(wrap_frames(frames), kNoiseFree);
    for (const auto& row : labeling.frame_rewards[0]) {
      CHECK(row[static_cast<size_t>(Category::Bed)] == 0);
      CHECK(row[static_cast<size_t>(Category::Toilet)] == 0);
    }
  }
  SECTION("duplicating the dataset keeps each copy's reward set") {
    std::vector<Observation> frames;
    for (int i = 0; i < 40; ++i)
      frames.push_back(synthetic_obs(kNumRays, Category::Couch, 0.1 + 0.1 * i));
    VideoDataset once = wrap_frames(frames);
    VideoDataset twice = once;
    twice.world_ids.push_back(0);
    twice.targets.push_back({-1, -1});
    twice.trajs.push_back(once.trajs[0]);
    const auto a = label_rewards(once, kNoiseFree);
    const auto b = label_rewards(twice, kNoiseFree);
    CHECK(a.frame_rewards[0] == b.frame_rewards[0]);
    CHECK(b.frame_rewards[0] == b.frame_rewards[1]);
  }
  SECTION("quadruple rewards come from the successor frame") {
    std::vector<Observation> frames;
    for (int i = 0; i < 10; ++i) frames.push_back(synthetic_obs(0, Category::Bed, 1.0));
    frames[3] = synthetic_obs(kNumRays, Category::Bed, 0.5);  // lone reward frame
    const auto labeling = label_rewards(wrap_frames(frames), kNoiseFree);
    REQUIRE(labeling.quads.size() == 9);
    for (size_t i = 0; i < labeling.quads.size(); ++i)
      CHECK(static_cast<int>(labeling.quads[i].reward[0]) == (i == 2 ? 1 : 0));
  }
  SECTION("empty dataset is rejected") {
    CHECK_THROWS_AS(label_rewards(VideoDataset{}, kNoiseFree), EmptyDataset);
  }
}

TEST_CASE("true reward labeling uses held-back poses") {
  GridWorld w = oracles::corridor(30);
  oracles::place_object(w, Category::Bed, {{1, 30}});
  VideoDataset ds;
  ds.kind = "pseudo";
  ds.world_ids.push_back(0);
  ds.targets.push_back({-1, -1});
  std::vector<Frame> traj;
  std::vector<HiddenFrame> hidden;
  for (int c = 20; c <= 29; ++c) {
    traj.push_back({render(w, cell_pose(w, {1, c}, 0)), 0});
    hidden.push_back({0, cell_pose(w, {1, c}, 0), true});
  }
  traj.back().label = -1;
  hidden.back().action = -1;
  ds.trajs.push_back(traj);
  ds.set_hidden({hidden}, false);

  SECTION("locked handle is rejected") {
    CHECK_THROWS_AS(true_reward_label(ds, {w}), ValidationError);
  }
  SECTION("reward iff within one meter of the instance") {
    const auto labeling = true_reward_label(ds.unlocked_for_ablation(), {w});
    for (size_t i = 0; i < labeling.frame_rewards[0].size(); ++i) {
      const Pose pose = cell_pose(w, {1, 20 + static_cast<int>(i)}, 0);
      const bool want = true_distance(w, pose.x, pose.y, Category::Bed) <= 1.0;
      CHECK(static_cast<bool>(labeling.frame_rewards[0][i][0]) == want);
      // Agrees with the geodesic predicate along the corridor.
      const double d = oracles::relaxation_distance(w, {1, 20 + static_cast<int>(i)},
                                                    {{1, 30}}, 1.0);
      CHECK((d == 0.0) == want);
    }
  }
}

TEST_CASE("quadruple files round-trip") {
  std::vector<Observation> frames;
  for (int i = 0; i < 6; ++i) frames.push_back(synthetic_obs(i, Category::Bed, 1.0 + i));
  const auto labeling = label_rewards(wrap_frames(frames), kNoiseFree);
  const std::string text = quads_to_string(labeling.quads, 0x77);
  const LoadedQuads loaded = quads_from_string(text);
  REQUIRE(loaded.quads.size() == labeling.quads.size());
  CHECK(loaded.cfg_hash == 0x77);
  CHECK(quads_to_string(loaded.quads, loaded.cfg_hash) == text);
  CHECK_THROWS_AS(quads_from_string("VLVQUAD 2\n"), FormatError);
  CHECK_THROWS_AS(quads_from_string("VLVQUAD 1\n1 2 3\n"), FormatError);
}
