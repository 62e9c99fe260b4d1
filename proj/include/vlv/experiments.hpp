#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "vlv/eval.hpp"

namespace vlv {

// ---------------------------------------------------------------------------
// Ablation suite: each row toggles exactly one pipeline stage relative to the
// base setting (pseudo actions, noisy detector rewards, noisy videos, no
// detector term in goal sampling, single-view training).
// ---------------------------------------------------------------------------

struct AblationToggle {
  bool true_actions = false;
  bool true_detections = false;
  bool true_rewards = false;
  bool no_noise = false;
  bool detector_in_sampling = false;
  bool pano_training = false;

  int count() const {
    return static_cast<int>(true_actions) + static_cast<int>(true_detections) +
           static_cast<int>(true_rewards) + static_cast<int>(no_noise) +
           static_cast<int>(detector_in_sampling) + static_cast<int>(pano_training);
  }
};

inline std::vector<std::pair<std::string, AblationToggle>> ablation_rows() {
  std::vector<std::pair<std::string, AblationToggle>> rows;
  AblationToggle t;
  t.true_actions = true;
  rows.emplace_back("true_actions", t);
  t = {};
  t.true_detections = true;
  rows.emplace_back("true_detections", t);
  t = {};
  t.true_rewards = true;
  rows.emplace_back("true_rewards", t);
  t = {};
  t.no_noise = true;
  rows.emplace_back("no_noise_videos", t);
  t = {};
  t.detector_in_sampling = true;
  rows.emplace_back("detector_score_in_sampling", t);
  t = {};
  t.pano_training = true;
  rows.emplace_back("train_on_360", t);
  return rows;
}

struct AblationContext {
  std::vector<GridWorld> video_worlds;
  std::vector<GridWorld> eval_worlds;
  VideoDataset videos;  // noisy base videos, hidden fields locked
  int n_traj_per_world = 0;
  double video_noise_p = 0.2;
  InverseModel inverse;
  DetectorConfig detector;
  QTrainConfig qcfg;
  std::vector<Episode> episodes;
  SuiteConfig suite_cfg;
  std::uint64_t seed = 0;
};

struct AblationRow {
  std::string name;
  AblationToggle toggle;
  Metrics oracle;
};

struct AblationReport {
  std::vector<AblationRow> rows;  // base first, then the six toggles
};

namespace detail {

// Q training on 12-view concatenated inputs, rendering panoramas on demand
// from the held-back poses (the 360-degree training ablation is explicitly
// allowed to read them).
inline QTrainResult train_q_pano(const std::vector<GridWorld>& worlds,
                                 const VideoDataset& unlocked, const FrameRewards& rewards,
                                 const QTrainConfig& cfg) {
  struct Pair { size_t t, i; };
  std::vector<Pair> index;
  for (size_t t = 0; t < unlocked.trajs.size(); ++t)
    for (size_t i = 0; i + 1 < unlocked.trajs[t].size(); ++i)
      if (unlocked.trajs[t][i].has_label()) index.push_back({t, i});
  const int pano_dim = kNumHeadings * kObsDim;
  auto obs_buf = std::make_shared<std::vector<double>>(static_cast<size_t>(pano_dim));
  auto next_buf = std::make_shared<std::vector<double>>(static_cast<size_t>(pano_dim));
  auto reward_buf = std::make_shared<std::array<std::uint8_t, kNumCategories>>();
  auto render_pano = [&worlds, &unlocked](size_t t, size_t i, std::vector<double>& out) {
    const GridWorld& w = worlds[static_cast<size_t>(unlocked.world_ids[t])];
    const Pose base = unlocked.hidden(t, i).pose;
    const Panorama pano = panorama(w, base);
    for (int j = 0; j < kNumHeadings; ++j) {
      const auto& view = pano.views[static_cast<size_t>(j)];
      std::copy(view.v.begin(), view.v.end(),
                out.begin() + static_cast<long>(j) * kObsDim);
    }
  };
  QSampleProvider provider = [&, obs_buf, next_buf, reward_buf](size_t idx) {
    const auto [t, i] = index[idx];
    render_pano(t, i, *obs_buf);
    render_pano(t, i + 1, *next_buf);
    *reward_buf = rewards[t][i + 1];
    return QSampleView{obs_buf->data(), next_buf->data(), unlocked.trajs[t][i].label,
                       reward_buf->data()};
  };
  return detail::train_q_core(index.size(), pano_dim, provider, cfg, nullptr);
}

}  // namespace detail

// Runs the base row plus every toggle (or the named subset), evaluating all
// rows on the same episodes so deltas are paired.
inline AblationReport run_ablations(const AblationContext& ctx,
                                    const std::vector<std::string>& only = {}) {
  AblationReport report;
  auto rows = ablation_rows();
  if (!only.empty()) {
    std::vector<std::pair<std::string, AblationToggle>> kept;
    for (const auto& row : rows)
      if (std::find(only.begin(), only.end(), row.first) != only.end()) kept.push_back(row);
    rows = std::move(kept);
  }
  rows.insert(rows.begin(), {"base", AblationToggle{}});

  for (size_t ri = 0; ri < rows.size(); ++ri) {
    const auto& [name, tog] = rows[ri];
    // Stage 1: videos.
    VideoDataset videos = tog.no_noise
        ? generate_videos(ctx.video_worlds, ctx.n_traj_per_world, 0.0,
                          mix_seed(ctx.seed, 0xab1))
        : ctx.videos;
    // Stage 2: action labels.
    VideoDataset labeled;
    if (tog.true_actions) {
      labeled = videos.unlocked_for_ablation();
      labeled.kind = "pseudo";
      for (size_t t = 0; t < labeled.trajs.size(); ++t)
        for (size_t i = 0; i + 1 < labeled.trajs[t].size(); ++i)
          labeled.trajs[t][i].label = labeled.hidden(t, i).action;
    } else {
      labeled = pseudo_label(ctx.inverse, videos);
    }
    // Stage 3: detector noise.
    DetectorConfig det = ctx.detector;
    if (tog.true_detections) {
      det.p_false_neg = 0.0;
      det.p_false_pos = 0.0;
      det.confidence_noise_sigma = 0.0;
    }
    // Stage 4: rewards.
    RewardLabeling labeling = tog.true_rewards
        ? true_reward_label(labeled.unlocked_for_ablation(), ctx.video_worlds)
        : label_rewards(labeled, det);
    // Stage 5: Q training.
    QTrainConfig qcfg = ctx.qcfg;
    qcfg.seed = mix_seed(ctx.seed, 0xab2, ri);
    DirectionScorer scorer;
    QTrainResult trained;
    if (tog.pano_training) {
      trained = detail::train_q_pano(ctx.video_worlds, labeled.unlocked_for_ablation(),
                                     labeling.frame_rewards, qcfg);
    } else {
      trained = train_q(labeling.quads, qcfg);
    }
    // Stage 6: evaluation weights (base samples goals without the detector
    // term; the detector-score row switches it on).
    MethodSpec spec;
    spec.name = name;
    spec.weights = tog.detector_in_sampling ? PolicyWeights{1.0, 1.0, 1.0}
                                            : PolicyWeights{1.0, 0.0, 1.0};
    spec.scorer = tog.pano_training ? make_pano_scorer(&trained.q.net)
                                    : make_q_scorer(&trained.q.net);
    SuiteConfig scfg = ctx.suite_cfg;
    scfg.detector = det;
    scfg.policy_stop = false;
    const SuiteResult sr = run_suite({spec}, ctx.eval_worlds, ctx.episodes, scfg);
    report.rows.push_back({name, tog, sr.methods[0].oracle});
  }
  return report;
}

inline std::string format_ablation_report(const AblationReport& report,
                                          std::uint64_t cfg_hash = 0) {
  std::ostringstream os;
  os << "VLVREPORT 1";
  if (cfg_hash != 0) os << " cfg=" << hash_hex(cfg_hash);
  os << "\n";
  for (const auto& row : report.rows) {
    os << "ablation." << row.name << ".os.spl = " << format_double(row.oracle.spl) << "\n";
    os << "ablation." << row.name << ".os.sr = " << format_double(row.oracle.sr) << "\n";
  }
  return os.str();
}

// ---------------------------------------------------------------------------
// Branching experiment: videos in a Y-shaped world mix a meandering route to
// the near goal (T1), a direct route to the far goal (T2), and a rare direct
// route to the near goal (T3). Q-learning should recover the optimal
// direction at the branch while policy evaluation follows the depicted
// behavior.
// ---------------------------------------------------------------------------

struct BranchingConfig {
  double mix_t1 = 0.50;
  double mix_t2 = 0.495;
  double mix_t3 = 0.005;
  int n_videos = 200;
  int n_rollouts = 50;
  int rollout_budget = 150;
  int interaction_frames = 8000;
  double follow_noise = 0.10;
  int corridor_len = 15;
  int branch_offset = 10;
  std::uint64_t seed = 0;
  QTrainConfig qcfg;
  ValueNetConfig vcfg;

  BranchingConfig() {
    qcfg.hidden = {128, 64};
    qcfg.iterations = 25000;
    qcfg.sync_period = 1000;
    vcfg.passes = 60;
  }
};

struct BranchingReport {
  double frac_near_vlv = 0.0;
  double frac_near_td0 = 0.0;
  double frac_near_mc = 0.0;
  double v_near_vlv = 0.0, v_far_vlv = 0.0;
  double v_near_td0 = 0.0, v_far_td0 = 0.0;
  double v_near_mc = 0.0, v_far_mc = 0.0;
  double inverse_accuracy = 0.0;
};

namespace detail {

// Follow waypoints on the pose graph with occasional random actions,
// recording frames, poses and executed actions.
inline void follow_waypoints(const GridWorld& w, PoseNode pose,
                             const std::vector<std::vector<GridPos>>& waypoints,
                             double noise_p, Rng& rng, std::vector<Frame>& frames,
                             std::vector<HiddenFrame>& hidden) {
  for (const auto& wp : waypoints) {
    std::vector<std::uint8_t> goal(static_cast<size_t>(w.width) * w.height, 0);
    for (const auto& p : wp) goal[static_cast<size_t>(p.r) * w.width + p.c] = 1;
    const auto field = pose_distance_field(w, goal);
    const std::int32_t d0 = field[static_cast<size_t>(pose_id(w, pose.cell, pose.hi))];
    const int cap = 4 * std::max<std::int32_t>(d0, 1) + 24;
    for (int t = 0; t < cap; ++t) {
      if (field[static_cast<size_t>(pose_id(w, pose.cell, pose.hi))] == 0) break;
      Action act = greedy_action(w, field, pose);
      if (noise_p > 0.0 && rng.bernoulli(noise_p))
        act = static_cast<Action>(rng.uniform_index(kNumMoveActions));
      frames.push_back({render(w, pose_of(w, pose)), -1});
      hidden.push_back({static_cast<int>(act), pose_of(w, pose), true});
      pose = pose_step(w, pose, act);
    }
  }
  frames.push_back({render(w, pose_of(w, pose)), -1});
  hidden.push_back({-1, pose_of(w, pose), true});
}

inline double min_cell_distance(const GridWorld& w, double x, double y,
                                const std::vector<GridPos>& cells) {
  double best = kInf;
  for (const auto& p : cells)
    best = std::min(best, std::hypot(x - w.center_x(p.c), y - w.center_y(p.r)));
  return best;
}

}  // namespace detail

inline BranchingReport branching_experiment(const BranchingConfig& cfg = {}) {
  const BranchingWorld bw = generate_branching_world(cfg.corridor_len, cfg.branch_offset);
  const GridWorld& w = bw.world;
  const int stem_c = bw.branch.c;
  const int arm_r = bw.branch.r - 1;
  auto near_col = [&](int k) {
    return std::vector<GridPos>{{arm_r, stem_c - k}, {arm_r + 1, stem_c - k}};
  };

  // Inverse model from interaction in the same environment.
  const auto interaction =
      collect_interaction({w}, cfg.interaction_frames, mix_seed(cfg.seed, 0xb0));
  InverseTrainConfig icfg;
  icfg.epochs = 4;
  icfg.seed = mix_seed(cfg.seed, 0xb1);
  const InverseModel inverse = train_inverse(interaction, icfg);

  // Scripted video mix.
  const int n1 = static_cast<int>(std::lround(cfg.mix_t1 * cfg.n_videos));
  const int n3 = std::max(cfg.mix_t3 > 0.0 ? 1 : 0,
                          static_cast<int>(std::lround(cfg.mix_t3 * cfg.n_videos)));
  const int n2 = cfg.n_videos - n1 - n3;
  VideoDataset videos;
  videos.kind = "video";
  videos.noise_p = cfg.follow_noise;
  videos.seed = cfg.seed;
  std::vector<std::vector<HiddenFrame>> hidden_all;
  for (int k = 0; k < cfg.n_videos; ++k) {
    Rng rng(mix_seed(cfg.seed, 0xb2, static_cast<std::uint64_t>(k)));
    const GridPos start_cell =
        bw.start_disc[rng.uniform_int(bw.start_disc.size())];
    PoseNode pose{start_cell, rng.uniform_index(kNumHeadings)};
    std::vector<std::vector<GridPos>> waypoints;
    if (k < n1) {
      waypoints = {near_col(4), near_col(1), near_col(5), near_col(2), bw.g_near};
    } else if (k < n1 + n2) {
      waypoints = {bw.g_far};
    } else {
      waypoints = {bw.g_near};
    }
    std::vector<Frame> frames;
    std::vector<HiddenFrame> hidden;
    detail::follow_waypoints(w, pose, waypoints, cfg.follow_noise, rng, frames, hidden);
    videos.world_ids.push_back(0);
    videos.trajs.push_back(std::move(frames));
    hidden_all.push_back(std::move(hidden));
  }
  videos.set_hidden(std::move(hidden_all), false);

  // Goal rewards at the labeled locations (category slot 0), attached while
  // the poses are still in hand.
  std::vector<GridPos> goal_cells = bw.g_near;
  goal_cells.insert(goal_cells.end(), bw.g_far.begin(), bw.g_far.end());
  const auto unlocked = videos.unlocked_for_ablation();
  FrameRewards rewards(videos.trajs.size());
  for (size_t t = 0; t < videos.trajs.size(); ++t) {
    rewards[t].resize(videos.trajs[t].size());
    for (size_t i = 0; i < videos.trajs[t].size(); ++i) {
      const Pose p = unlocked.hidden(t, i).pose;
      rewards[t][i][0] = detail::min_cell_distance(w, p.x, p.y, goal_cells) <= 1.0 ? 1 : 0;
    }
  }

  // Pseudo-label and assemble quadruples.
  VideoDataset labeled = pseudo_label(inverse, videos);
  std::vector<TransitionQuadruple> quads;
  for (size_t t = 0; t < labeled.trajs.size(); ++t)
    for (size_t i = 0; i + 1 < labeled.trajs[t].size(); ++i) {
      TransitionQuadruple q;
      q.obs = labeled.trajs[t][i].obs;
      q.action = labeled.trajs[t][i].label;
      q.next = labeled.trajs[t][i + 1].obs;
      q.reward = rewards[t][i + 1];
      quads.push_back(std::move(q));
    }

  QTrainConfig qcfg = cfg.qcfg;
  qcfg.seed = mix_seed(cfg.seed, 0xb3);
  const QTrainResult vlv = train_q(quads, qcfg);
  ValueNetConfig vcfg = cfg.vcfg;
  vcfg.seed = mix_seed(cfg.seed, 0xb4);
  const ValueTable td0 = policy_evaluation_td0_net(labeled, rewards, qcfg.gamma, vcfg);
  vcfg.seed = mix_seed(cfg.seed, 0xb5);
  const ValueTable mc = policy_evaluation_mc_net(labeled, rewards, qcfg.gamma, vcfg);

  BranchingReport report;
  report.inverse_accuracy = inverse.val_accuracy;
  const Observation at_branch_near = render(w, cell_pose(w, bw.branch, 180));
  const Observation at_branch_far = render(w, cell_pose(w, bw.branch, 0));
  report.v_near_vlv = vlv.q.value(at_branch_near, Category::Bed);
  report.v_far_vlv = vlv.q.value(at_branch_far, Category::Bed);
  report.v_near_td0 = td0.value(at_branch_near, Category::Bed);
  report.v_far_td0 = td0.value(at_branch_far, Category::Bed);
  report.v_near_mc = mc.value(at_branch_near, Category::Bed);
  report.v_far_mc = mc.value(at_branch_far, Category::Bed);

  // Greedy rollouts from the start disc.
  auto rollout = [&](auto&& act_fn, std::uint64_t roll_seed) {
    int near = 0;
    for (int k = 0; k < cfg.n_rollouts; ++k) {
      Rng rng(mix_seed(roll_seed, static_cast<std::uint64_t>(k)));
      PoseNode pose{bw.start_disc[rng.uniform_int(bw.start_disc.size())],
                    rng.uniform_index(kNumHeadings)};
      for (int t = 0; t < cfg.rollout_budget; ++t) {
        const Pose p = pose_of(w, pose);
        if (detail::min_cell_distance(w, p.x, p.y, bw.g_near) <= 1.0) {
          ++near;
          break;
        }
        if (detail::min_cell_distance(w, p.x, p.y, bw.g_far) <= 1.0) break;
        pose = pose_step(w, pose, act_fn(pose));
      }
    }
    return static_cast<double>(near) / cfg.n_rollouts;
  };
  auto q_policy = [&](PoseNode pose) {
    const Observation obs = render(w, pose_of(w, pose));
    std::vector<double> x(obs.v.begin(), obs.v.end());
    const auto out = forward(vlv.q.net, x);
    int best = 0;
    for (int a = 1; a < kNumMoveActions; ++a)
      if (out[static_cast<size_t>(a) * kNumCategories] >
          out[static_cast<size_t>(best) * kNumCategories])
        best = a;
    return static_cast<Action>(best);
  };
  auto value_policy = [&](const ValueTable& vt) {
    return [&w, &vt](PoseNode pose) {
      int best = 0;
      double best_v = -kInf;
      for (int a = 0; a < kNumMoveActions; ++a) {
        const PoseNode nxt = pose_step(w, pose, static_cast<Action>(a));
        const double v = vt.value(render(w, pose_of(w, nxt)), Category::Bed);
        if (v > best_v) {
          best_v = v;
          best = a;
        }
      }
      return static_cast<Action>(best);
    };
  };
  report.frac_near_vlv = rollout(q_policy, mix_seed(cfg.seed, 0xb6));
  report.frac_near_td0 = rollout(value_policy(td0), mix_seed(cfg.seed, 0xb7));
  report.frac_near_mc = rollout(value_policy(mc), mix_seed(cfg.seed, 0xb8));
  return report;
}

inline std::string format_branching_report(const BranchingReport& r,
                                           std::uint64_t cfg_hash = 0) {
  std::ostringstream os;
  os << "VLVREPORT 1";
  if (cfg_hash != 0) os << " cfg=" << hash_hex(cfg_hash);
  os << "\n";
  auto kv = [&os](const std::string& k, double v) {
    os << "branching." << k << " = " << format_double(v) << "\n";
  };
  kv("inverse_accuracy", r.inverse_accuracy);
  kv("vlv.frac_near", r.frac_near_vlv);
  kv("td0.frac_near", r.frac_near_td0);
  kv("mc.frac_near", r.frac_near_mc);
  kv("vlv.value_near_dir", r.v_near_vlv);
  kv("vlv.value_far_dir", r.v_far_vlv);
  kv("td0.value_near_dir", r.v_near_td0);
  kv("td0.value_far_dir", r.v_far_td0);
  kv("mc.value_near_dir", r.v_near_mc);
  kv("mc.value_far_dir", r.v_far_mc);
  return os.str();
}

}  // namespace vlv
