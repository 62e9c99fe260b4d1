#include "catch_amalgamated.hpp"

#include "support/oracles.hpp"
#include "vlv/videodata.hpp"

using namespace vlv;

namespace {
std::vector<GridWorld> small_worlds() {
  return {generate_world(31, {28, 28, 4, 4, 8, 1.0}),
          generate_world(32, {28, 28, 4, 4, 8, 1.0})};
}
}  // namespace

TEST_CASE("noise-free tours replay shortest paths to their targets") {
  const auto worlds = small_worlds();
  const VideoDataset ds = generate_videos(worlds, 4, 0.0, 900);
  const VideoDataset open = ds.unlocked_for_ablation();
  REQUIRE(ds.trajs.size() == 8);
  for (size_t t = 0; t < ds.trajs.size(); ++t) {
    REQUIRE(ds.trajs[t].size() >= 2);
    const GridWorld& w = worlds[static_cast<size_t>(ds.world_ids[t])];
    // Endpoint within the success radius of the sampled target.
    const HiddenFrame& last = open.hidden(t, ds.trajs[t].size() - 1);
    const GridPos target = ds.targets[t];
    const double dx = last.pose.x - w.center_x(target.c);
    const double dy = last.pose.y - w.center_y(target.r);
    CHECK(std::hypot(dx, dy) <= 1.0 + w.cell_size);
    // Hidden actions replay a pose-graph walk ending at the goal set.
    PoseNode pose{w.cell_of(open.hidden(t, 0).pose.x, open.hidden(t, 0).pose.y),
                  open.hidden(t, 0).pose.heading / kTurnDeg};
    for (size_t i = 0; i + 1 < ds.trajs[t].size(); ++i) {
      pose = pose_step(w, pose, static_cast<Action>(open.hidden(t, i).action));
      const Pose expect = open.hidden(t, i + 1).pose;
      CHECK(pose_of(w, pose) == expect);
    }
    // Optimality: the walk length equals the initial pose-graph distance.
    const auto goal = within_radius_mask(w, {target}, 1.0);
    const auto field = pose_distance_field(w, goal);
    const PoseNode start{w.cell_of(open.hidden(t, 0).pose.x, open.hidden(t, 0).pose.y),
                         open.hidden(t, 0).pose.heading / kTurnDeg};
    CHECK(static_cast<std::int32_t>(ds.trajs[t].size() - 1) ==
          field[static_cast<size_t>(pose_id(w, start.cell, start.hi))]);
  }
}

TEST_CASE("video generation is deterministic per seed") {
  const auto worlds = small_worlds();
  const VideoDataset a = generate_videos(worlds, 3, 0.2, 41);
  const VideoDataset b = generate_videos(worlds, 3, 0.2, 41);
  CHECK(datasets_equal(a, b));
  CHECK(dataset_to_string(a) == dataset_to_string(b));
  const VideoDataset c = generate_videos(worlds, 3, 0.2, 42);
  CHECK_FALSE(datasets_equal(a, c));
}

TEST_CASE("hidden fields are locked until explicitly unlocked") {
  const auto worlds = small_worlds();
  const VideoDataset ds = generate_videos(worlds, 1, 0.2, 5);
  REQUIRE(ds.has_hidden());
  CHECK_THROWS_AS(ds.hidden(0, 0), ValidationError);
  const VideoDataset open = ds.unlocked_for_ablation();
  CHECK(open.hidden(0, 0).action >= 0);
  CHECK_THROWS_AS(ds.hidden(0, 0), ValidationError);  // original stays locked
}

TEST_CASE("interaction collection") {
  const auto worlds = small_worlds();
  SECTION("n=1 gives exactly one transition") {
    const VideoDataset ds = collect_interaction(worlds, 1, 3);
    CHECK(ds.num_transitions() == 1);
    CHECK(ds.trajs[0].size() == 2);
  }
  SECTION("labels are movement actions, never stop") {
    const VideoDataset ds = collect_interaction(worlds, 500, 4);
    CHECK(ds.num_transitions() == 500);
    for (const auto& traj : ds.trajs)
      for (size_t i = 0; i + 1 < traj.size(); ++i) {
        REQUIRE(traj[i].has_label());
        CHECK(traj[i].label >= 0);
        CHECK(traj[i].label < kNumMoveActions);
      }
  }
  SECTION("action marginals are uniform at 40K by a chi-square check") {
    const VideoDataset ds = collect_interaction(worlds, 40000, 5);
    std::array<double, kNumMoveActions> counts{};
    for (const auto& traj : ds.trajs)
      for (size_t i = 0; i + 1 < traj.size(); ++i)
        counts[static_cast<size_t>(traj[i].label)] += 1.0;
    const double expect = 40000.0 / kNumMoveActions;
    double chi2 = 0.0;
    for (double n : counts) chi2 += (n - expect) * (n - expect) / expect;
    CHECK(chi2 < 13.8);  // p ~ 0.001 at 2 dof
  }
}

TEST_CASE("dataset files round-trip") {
  const auto worlds = small_worlds();
  for (const VideoDataset& ds :
       {generate_videos(worlds, 2, 0.2, 6), collect_interaction(worlds, 60, 7)}) {
    const std::string text = dataset_to_string(ds, 0xbeef);
    const LoadedDataset loaded = dataset_from_string(text);
    CHECK(loaded.cfg_hash == 0xbeef);
    CHECK(datasets_equal(loaded.dataset, ds));
    CHECK(dataset_to_string(loaded.dataset, loaded.cfg_hash) == text);
    // Video hidden fields load locked; interaction labels stay public.
    if (ds.kind == "video") {
      CHECK(loaded.dataset.has_hidden());
      CHECK_FALSE(loaded.dataset.hidden_readable());
    } else {
      CHECK(loaded.dataset.hidden_readable());
    }
  }
}

TEST_CASE("dataset format errors") {
  const auto worlds = small_worlds();
  const std::string text = dataset_to_string(generate_videos(worlds, 1, 0.2, 8));
  SECTION("wrong magic") {
    CHECK_THROWS_AS(dataset_from_string("VLVDANA 1 video\n"), FormatError);
  }
  SECTION("unknown kind") {
    CHECK_THROWS_AS(dataset_from_string("VLVDATA 1 cinema\n"), FormatError);
  }
  SECTION("truncated frame line") {
    const std::string cut = text.substr(0, text.size() * 2 / 3);
    CHECK_THROWS_AS(dataset_from_string(cut.substr(0, cut.rfind('\n') - 5)), FormatError);
  }
}
