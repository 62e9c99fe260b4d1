// End-to-end acceptance suite. Each criterion prints one PASS/FAIL line with
// its wall time; the process exits nonzero if any criterion fails.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "support/oracles.hpp"
#include "vlv/cli.hpp"
#include "vlv/experiments.hpp"

using namespace vlv;

namespace {

struct Harness {
  int failures = 0;

  template <typename Fn>
  void criterion(int id, const std::string& name, Fn&& fn) {
    const auto t0 = std::chrono::steady_clock::now();
    bool ok = false;
    std::string detail;
    try {
      detail = fn(ok);
    } catch (const std::exception& e) {
      ok = false;
      detail = std::string("exception: ") + e.what();
    }
    const double sec = std::chrono::duration<double>(
        std::chrono::steady_clock::now() - t0).count();
    std::printf("[%s] %2d. %-28s (%7.1fs)  %s\n", ok ? "PASS" : "FAIL", id, name.c_str(),
                sec, detail.c_str());
    std::fflush(stdout);
    if (!ok) ++failures;
  }
};

std::string fmt(double v) {
  char buf[48];
  std::snprintf(buf, sizeof(buf), "%.4g", v);
  return buf;
}

double elapsed_since(const std::chrono::steady_clock::time_point& t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// Shared pipeline artifacts built once and reused across criteria.
struct Fixtures {
  std::vector<GridWorld> train_worlds, video_worlds, test_worlds;
  VideoDataset interaction;
  InverseModel inverse;
  VideoDataset videos, labeled;
  DetectorConfig detector;
  RewardLabeling labeling;
  QTrainResult vlv;
  std::uint64_t seed = 7;
};

std::string file_bytes(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

}  // namespace

int main() {
  Harness h;
  Fixtures fx;
  const WorldGenParams params;  // 48x48, 7 rooms

  // ---- 1. Oracle equivalence: tabular Q-learning vs value iteration. ----
  h.criterion(1, "oracle equivalence (gamma^s)", [&](bool& ok) {
    const auto t0 = std::chrono::steady_clock::now();
    GridWorld w = oracles::empty_room(15, 15);
    oracles::place_object(w, Category::Bed, {{7, 11}, {8, 11}});
    const auto mdp = oracles::enumerate_pose_mdp(w);
    std::vector<TabularTransition> transitions;
    for (size_t s = 0; s < mdp.states.size(); ++s)
      for (int a = 0; a < kNumMoveActions; ++a)
        transitions.push_back({static_cast<int>(s), a, mdp.next[s][static_cast<size_t>(a)],
                               mdp.reward[s][static_cast<size_t>(a)]});
    const double gamma = 0.99;
    const TabularQ learned =
        train_q_tabular(transitions, static_cast<int>(mdp.states.size()), gamma);
    const auto vi = oracles::value_iteration(mdp, gamma);
    double worst_vi = 0.0;
    for (size_t i = 0; i < vi.size(); ++i)
      worst_vi = std::max(worst_vi, std::abs(vi[i] - learned.q[i]));
    // gamma^s law: one bootstrap step above the steps-to-view count.
    const auto steps = oracle_steps_field(w, Category::Bed);
    double worst_law = 0.0;
    for (size_t s = 0; s < mdp.states.size(); ++s) {
      const auto k = steps[static_cast<size_t>(
          pose_id(w, mdp.states[s].cell, mdp.states[s].hi))];
      if (k < 1) continue;
      worst_law = std::max(worst_law, std::abs(learned.value(static_cast<int>(s), 0) -
                                               std::pow(gamma, k - 1)));
    }
    const double sec = elapsed_since(t0);
    ok = worst_vi <= 1e-3 && worst_vi <= 1e-6 && worst_law <= 1e-3 && sec <= 120.0;
    return "max|Q-VI|=" + fmt(worst_vi) + " max|f-g^s|=" + fmt(worst_law) +
           " over " + std::to_string(mdp.states.size()) + " poses";
  });

  // ---- 5. Inverse model accuracy on 40K interaction frames. ----
  h.criterion(5, "inverse model accuracy", [&](bool& ok) {
    for (int i = 0; i < 4; ++i)
      fx.train_worlds.push_back(generate_world(mix_seed(fx.seed, 0x90d, 0, i), params));
    fx.interaction = collect_interaction(fx.train_worlds, 40000, mix_seed(fx.seed, 0x1a));
    InverseTrainConfig icfg;
    icfg.epochs = 5;
    icfg.seed = mix_seed(fx.seed, 0x1f);
    fx.inverse = train_inverse(fx.interaction, icfg);
    ok = fx.inverse.val_accuracy >= 0.90;
    return "held-out accuracy " + fmt(fx.inverse.val_accuracy) + " on 40K transitions";
  });

  // ---- 2. Function-approximation fidelity (Spearman vs oracle). ----
  h.criterion(2, "value ranking fidelity", [&](bool& ok) {
    const auto t0 = std::chrono::steady_clock::now();
    for (int i = 0; i < 20; ++i)
      fx.video_worlds.push_back(generate_world(mix_seed(fx.seed, 0x90d, 1, i), params));
    fx.videos = generate_videos(fx.video_worlds, 50, 0.2, mix_seed(fx.seed, 0x71d));
    fx.labeled = pseudo_label(fx.inverse, fx.videos);
    fx.detector.seed = mix_seed(fx.seed, 0xdead);
    fx.labeling = label_rewards(fx.labeled, fx.detector);
    QTrainConfig qcfg;
    qcfg.seed = mix_seed(fx.seed, 0x9000);
    fx.vlv = train_q(fx.labeling.quads, qcfg);

    // Held-out poses in the training-distribution worlds, categories cycled.
    std::vector<double> f_vals, oracle_vals;
    Rng rng(mix_seed(fx.seed, 0x5e2));
    size_t sampled = 0;
    std::array<std::unique_ptr<OracleFields>, 20> fields;
    while (sampled < 500) {
      const size_t wi = rng.uniform_int(fx.video_worlds.size());
      const GridWorld& w = fx.video_worlds[wi];
      const int r = rng.uniform_index(w.height);
      const int c = rng.uniform_index(w.width);
      if (!w.is_free(r, c)) continue;
      const int hi = rng.uniform_index(kNumHeadings);
      const Category cat = static_cast<Category>(sampled % kNumCategories);
      if (!fields[wi]) fields[wi] = std::make_unique<OracleFields>(w);
      const auto s = fields[wi]->at({{r, c}, hi}, cat);
      const double oracle = s < 0 ? 0.0 : std::pow(0.99, s);
      f_vals.push_back(fx.vlv.q.value(render(w, cell_pose(w, {r, c}, hi * kTurnDeg)), cat));
      oracle_vals.push_back(oracle);
      ++sampled;
    }
    const double rho = oracles::spearman(f_vals, oracle_vals);
    const double sec = elapsed_since(t0);
    ok = rho >= 0.9 && sec <= 600.0;
    return "spearman " + fmt(rho) + " over 500 held-out poses, residual " +
           fmt(fx.vlv.report.final_residual);
  });

  // ---- 3. Gradient correctness for every architecture in use. ----
  h.criterion(3, "gradient checks", [&](bool& ok) {
    const std::vector<std::vector<int>> archs = {
        {2 * kObsDim, 128, 64, kNumMoveActions},                  // inverse
        {kObsDim, 512, 256, kNumMoveActions * kNumCategories},    // Q head
        {kBcInputDim, 128, 64, kNumMoveActions},                  // behavior cloning
        {kObsDim, 128, 64, kNumCategories},                       // value baselines
        {kNumHeadings * kObsDim, 512, 256, kNumMoveActions * kNumCategories},  // pano Q
    };
    double worst = 0.0;
    Rng rng(17);
    for (size_t ai = 0; ai < archs.size(); ++ai) {
      Mlp net(archs[ai], 100 + ai);
      std::vector<double> x(static_cast<size_t>(net.input_dim()));
      for (auto& v : x) v = rng.uniform();
      std::vector<double> target(static_cast<size_t>(net.output_dim()));
      for (auto& v : target) v = rng.uniform();
      auto loss = [&](const Mlp& m) { return mse(forward(m, x), target).loss; };
      const Grads grads = backward(net, x, mse(forward(net, x), target).grad);
      // Sampled parameters plus every output bias.
      for (int probe = 0; probe < 400; ++probe) {
        const size_t l = rng.uniform_int(net.weights.size());
        const size_t i = rng.uniform_int(net.weights[l].size());
        const double fd = oracles::central_difference(net, &net.weights[l][i], 1e-5, loss);
        const double a = grads.weights[l][i];
        worst = std::max(worst, std::abs(a - fd) / std::max({1e-4, std::abs(a), std::abs(fd)}));
      }
      for (size_t i = 0; i < net.biases.back().size(); ++i) {
        const double fd =
            oracles::central_difference(net, &net.biases.back()[i], 1e-5, loss);
        const double a = grads.biases.back()[i];
        worst = std::max(worst, std::abs(a - fd) / std::max({1e-4, std::abs(a), std::abs(fd)}));
      }
    }
    ok = worst <= 1e-4;
    return "max relative error " + fmt(worst) + " across 5 architectures";
  });

  // ---- 4. FMM correctness and planner reach rate. ----
  h.criterion(4, "fast marching and planner", [&](bool& ok) {
    double worst_low = 0.0, worst_high = 0.0, worst_axis = 0.0;
    const WorldGenParams small{36, 36, 5, 4, 9, 1.2};
    int reached = 0, feasible = 0;
    for (int k = 0; k < 20; ++k) {
      const GridWorld w = generate_world(mix_seed(0xf33, k), small);
      const OccupancyGrid known = OccupancyGrid::from_world(w);
      const auto blocked = blocked_mask(known);
      Rng rng(mix_seed(0xf34, k));
      GridPos goal{-1, -1};
      while (goal.r < 0) {
        const int r = rng.uniform_index(w.height);
        const int c = rng.uniform_index(w.width);
        if (!blocked[static_cast<size_t>(r) * w.width + c]) goal = {r, c};
      }
      const FmmField field = fmm_distance_field(known, goal, blocked);
      const auto d8 =
          oracles::diag_distance_field(blocked, w.width, w.height, w.cell_size, goal);
      const auto d4 =
          oracles::axis_distance_field(blocked, w.width, w.height, w.cell_size, goal);
      for (int r = 0; r < w.height; ++r)
        for (int c = 0; c < w.width; ++c) {
          const size_t i = static_cast<size_t>(r) * w.width + c;
          if (blocked[i] || !std::isfinite(d8[i])) continue;
          worst_low = std::max(worst_low, d8[i] - field.at(r, c));
          worst_high = std::max(worst_high, field.at(r, c) - d8[i]);
          worst_axis = std::max(worst_axis, field.at(r, c) - d4[i]);
        }
      // Short-term goal tasks: primed with one panorama, then navigate.
      for (int task = 0; task < 10; ++task) {
        GridPos start{-1, -1};
        while (start.r < 0) {
          const int r = rng.uniform_index(w.height);
          const int c = rng.uniform_index(w.width);
          if (w.is_free(r, c)) start = {r, c};
        }
        const Pose pose = cell_pose(w, start, rng.uniform_index(kNumHeadings) * kTurnDeg);
        const double ang = rng.uniform(0.0, 2.0 * M_PI);
        const double radius = rng.uniform(1.0, 2.0);
        const std::pair<double, double> goal_pt{pose.x + radius * std::cos(ang),
                                                pose.y + radius * std::sin(ang)};
        const GridPos gcell = w.cell_of(goal_pt.first, goal_pt.second);
        if (!w.in_bounds(gcell.r, gcell.c) ||
            blocked[static_cast<size_t>(gcell.r) * w.width + gcell.c])
          continue;
        const FmmField true_field = fmm_distance_field(known, gcell, blocked);
        if (!std::isfinite(true_field.interp(pose.x, pose.y))) continue;
        ++feasible;
        OccupancyGrid grid = OccupancyGrid::unknown_like(w);
        const Panorama pano = panorama(w, pose);
        for (int j = 0; j < kNumHeadings; ++j)
          grid.observe({pose.x, pose.y, wrap_heading(pose.heading + j * kTurnDeg)},
                       pano.views[static_cast<size_t>(j)]);
        const NavResult nav = low_level_navigate(w, pose, {goal_pt}, grid,
                                                 [](const Pose&, Action) { return true; });
        if (nav.outcome == NavOutcome::Success) ++reached;
      }
    }
    const double diag = M_SQRT2 * 0.25;
    const double rate = feasible ? static_cast<double>(reached) / feasible : 0.0;
    ok = worst_low <= diag && worst_high <= diag && worst_axis <= 1e-9 && rate >= 0.95 &&
         feasible >= 100;
    return "bracket slack [" + fmt(worst_low) + "," + fmt(worst_high) + "] vs " + fmt(diag) +
           ", planner " + std::to_string(reached) + "/" + std::to_string(feasible);
  });

  // ---- 6. Combined-score formula cases. ----
  h.criterion(6, "direction score formula", [&](bool& ok) {
    const PolicyWeights w{1, 1, 1};
    const double a = score_direction(0.5, 0.9, 2.0, w);
    const double b = score_direction(0.5, 0.4, 2.0, w);
    const double c = score_direction(0.5, 0.9, 12.0, w);
    ok = std::abs(a - 2.8) <= 1e-12 && std::abs(b - 0.9) <= 1e-12 &&
         std::abs(c - 2.4) <= 1e-12;
    return "2.8 -> " + fmt(a) + ", 0.9 -> " + fmt(b) + ", clamp -> " + fmt(c);
  });

  // ---- 7. Oracle-Stop SPL ordering across methods. ----
  SuiteResult suite;
  h.criterion(7, "method ordering at desk scale", [&](bool& ok) {
    const auto t0 = std::chrono::steady_clock::now();
    for (int i = 0; i < 5; ++i)
      fx.test_worlds.push_back(generate_world(mix_seed(fx.seed, 0x90d, 2, i), params));

    BcTrainConfig bcfg;
    bcfg.seed = mix_seed(fx.seed, 0xbc);
    const Mlp bc_net = train_behavior_cloning(fx.labeled, fx.labeling.frame_rewards, bcfg);
    const RegressionSet strong_samples =
        build_strong_samples(fx.video_worlds, 0.99, 20000, mix_seed(fx.seed, 0x57));
    StrongTrainConfig scfg;
    scfg.seed = mix_seed(fx.seed, 0x58);
    const QFunction strong = train_strong_supervision(strong_samples, scfg);
    QTrainConfig jcfg;
    jcfg.iterations = 30000;
    jcfg.seed = mix_seed(fx.seed, 0x59);
    const QTrainResult joint = train_q(fx.labeling.quads, jcfg, &strong_samples);

    std::vector<MethodSpec> methods;
    methods.push_back(topological_exploration_method());
    methods.push_back(detection_seeker_method());
    MethodSpec vlv;
    vlv.name = "vlv";
    vlv.weights = {1, 1, 1};
    vlv.scorer = make_q_scorer(&fx.vlv.q.net);
    methods.push_back(vlv);
    MethodSpec bc;
    bc.name = "bc";
    bc.kind = MethodKind::BehaviorCloning;
    bc.bc_net = &bc_net;
    methods.push_back(bc);
    MethodSpec strong_m;
    strong_m.name = "strong_supervision";
    strong_m.weights = {1, 1, 1};
    strong_m.scorer = make_q_scorer(&strong.net);
    methods.push_back(strong_m);
    MethodSpec joint_m;
    joint_m.name = "strong_plus_vlv";
    joint_m.weights = {1, 1, 1};
    joint_m.scorer = make_q_scorer(&joint.q.net);
    methods.push_back(joint_m);

    const auto episodes = sample_episodes(fx.test_worlds, 20, mix_seed(fx.seed, 0xe0));
    SuiteConfig scfg2;
    scfg2.detector = fx.detector;
    scfg2.seed = mix_seed(fx.seed, 0xe1);
    scfg2.policy_stop = false;
    suite = run_suite(methods, fx.test_worlds, episodes, scfg2);

    auto find = [&](const std::string& name) -> const MethodResult& {
      for (const auto& m : suite.methods)
        if (m.name == name) return m;
      throw ValidationError("missing method " + name);
    };
    const auto& topo = find("topo_explore");
    const auto& seeker = find("detection_seeker");
    const auto& vlv_r = find("vlv");
    const auto& bc_r = find("bc");
    auto beats = [&](const MethodResult& a, const MethodResult& b, std::string& note) {
      const bool gap = a.oracle.spl > b.oracle.spl;
      const bool ci_disjoint = a.oracle.spl_lo > b.oracle.spl_hi;
      const double p = paired_bootstrap_pvalue(a.oracle.spl_terms, b.oracle.spl_terms, 2000,
                                               mix_seed(fx.seed, 0x917));
      note += a.name + " " + fmt(a.oracle.spl) + " vs " + b.name + " " + fmt(b.oracle.spl) +
              (ci_disjoint ? " [ci]" : " [p=" + fmt(p) + "]") + "; ";
      return gap && (ci_disjoint || p < 0.1);
    };
    std::string note;
    const bool o1 = beats(vlv_r, seeker, note);
    const bool o2 = beats(seeker, topo, note);
    const bool o3 = beats(vlv_r, bc_r, note);
    const double sec = elapsed_since(t0);
    ok = o1 && o2 && o3 && sec <= 1800.0;
    return note;
  });

  // ---- 8. Branching environment contrast. ----
  h.criterion(8, "branching experiment", [&](bool& ok) {
    const auto t0 = std::chrono::steady_clock::now();
    BranchingConfig bcfg;
    bcfg.seed = mix_seed(fx.seed, 0xbb);
    const BranchingReport rep = branching_experiment(bcfg);
    const double sec = elapsed_since(t0);
    ok = rep.frac_near_vlv >= 0.9 && rep.v_far_td0 > rep.v_near_td0 &&
         rep.v_far_mc > rep.v_near_mc && sec <= 300.0;
    return "vlv near " + fmt(rep.frac_near_vlv) + ", td0 far/near " + fmt(rep.v_far_td0) +
           "/" + fmt(rep.v_near_td0) + ", mc far/near " + fmt(rep.v_far_mc) + "/" +
           fmt(rep.v_near_mc);
  });

  // ---- 9. Metric unit fixtures. ----
  h.criterion(9, "metric fixtures", [&](bool& ok) {
    bool good = spl_term(true, 2.0, 2.0) == 1.0 && spl_term(true, 4.0, 2.0) == 0.5 &&
                spl_term(false, 1.0, 2.0) == 0.0 && spl_term(true, 0.0, 0.0) == 1.0;
    good = good && difficulty_bucket(2.9) == 0 && difficulty_bucket(3.0) == 0 &&
           difficulty_bucket(4.9) == 1 && difficulty_bucket(5.0) == 1 &&
           difficulty_bucket(14.9) == 2 && difficulty_bucket(15.0) == 2 &&
           difficulty_bucket(15.1) == -1;
    const auto flat = bootstrap_ci(std::vector<double>(10, 0.3), 400, 0.90, 1);
    good = good && flat.first == 0.3 && flat.second == 0.3;
    std::vector<double> vals;
    Rng rng(2);
    for (int i = 0; i < 40; ++i) vals.push_back(rng.uniform());
    good = good && bootstrap_ci(vals, 500, 0.90, 9) ==
                       oracles::naive_bootstrap_ci(vals, 500, 0.90, 9);
    // SPL <= SR on every method and bucket of the emitted suite.
    for (const auto& m : suite.methods) {
      good = good && m.oracle.spl <= m.oracle.sr + 1e-12;
      for (int c = 0; c < kNumCategories; ++c)
        good = good && m.oracle.spl_by_cat[static_cast<size_t>(c)] <=
                           m.oracle.sr_by_cat[static_cast<size_t>(c)] + 1e-12;
      for (int d = 0; d < 3; ++d)
        good = good && m.oracle.spl_by_diff[static_cast<size_t>(d)] <=
                           m.oracle.sr_by_diff[static_cast<size_t>(d)] + 1e-12;
    }
    ok = good && !suite.methods.empty();
    return std::string("fixtures exact, spl<=sr on ") +
           std::to_string(suite.methods.size()) + " suite rows";
  });

  // ---- 10. Pipeline determinism. ----
  h.criterion(10, "pipeline determinism", [&](bool& ok) {
    namespace fs = std::filesystem;
    auto run_once = [&](const std::string& out) {
      cli::Driver drv;
      std::ostringstream sink;
      drv.log = &sink;
      drv.out = out;
      drv.cfg.set("seed", "7");
      drv.cfg.set("worlds.train", "2");
      drv.cfg.set("worlds.video", "3");
      drv.cfg.set("worlds.test", "2");
      drv.cfg.set("world.width", "32");
      drv.cfg.set("world.height", "32");
      drv.cfg.set("world.rooms", "4");
      drv.cfg.set("videos.per_world", "4");
      drv.cfg.set("interaction.frames", "3000");
      drv.cfg.set("inverse.epochs", "2");
      drv.cfg.set("q.iterations", "1200");
      drv.cfg.set("q.sync_period", "300");
      drv.cfg.set("value.passes", "6");
      drv.cfg.set("bc.epochs", "3");
      drv.cfg.set("strong.samples", "1200");
      drv.cfg.set("strong.iterations", "1200");
      drv.cfg.set("joint.iterations", "800");
      drv.cfg.set("calibrate.per_class", "2");
      drv.cfg.set("eval.per_class", "2");
      drv.cfg.set("eval.budget", "250");
      drv.cfg.set("eval.bootstrap", "200");
      drv.cfg.set("branching.videos", "60");
      drv.cfg.set("branching.rollouts", "8");
      drv.cfg.set("branching.iterations", "1500");
      fs::remove_all(out);
      cli::cmd_pipeline(drv, false);
    };
    run_once("acc_run_a");
    run_once("acc_run_b");
    bool identical = true;
    for (const char* rel : {"reports/metrics.txt", "reports/branching.txt", "models/q.txt",
                            "data/quads.txt"}) {
      const std::string a = file_bytes(std::string("acc_run_a/") + rel);
      const std::string b = file_bytes(std::string("acc_run_b/") + rel);
      if (a.empty() || a != b) identical = false;
    }
    fs::remove_all("acc_run_a");
    fs::remove_all("acc_run_b");
    ok = identical;
    return std::string(identical ? "reports and models byte-identical across reruns"
                                 : "byte mismatch between reruns");
  });

  std::printf("%s: %d/10 criteria passed\n", h.failures == 0 ? "ACCEPTANCE PASS" : "ACCEPTANCE FAIL",
              10 - h.failures);
  return h.failures == 0 ? 0 : 1;
}
