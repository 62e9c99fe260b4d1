#pragma once

#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "vlv/experiments.hpp"

namespace vlv::cli {

// ---------------------------------------------------------------------------
// Flat key=value configuration with defaults, file overrides and --set
// overrides. Every stage records a hash of its effective settings (plus the
// hashes of its inputs) into its output header; the pipeline refuses inputs
// whose recorded hash differs from what the producing stage just wrote.
// ---------------------------------------------------------------------------

class Config {
 public:
  Config() {
    // Desk-scale defaults.
    set("seed", "7");
    set("worlds.train", "4");
    set("worlds.video", "20");
    set("worlds.test", "5");
    set("world.width", "48");
    set("world.height", "48");
    set("world.rooms", "7");
    set("world.min_room", "5");
    set("world.max_room", "11");
    set("world.object_density", "1.6");
    set("videos.per_world", "50");
    set("videos.noise_p", "0.2");
    set("interaction.frames", "40000");
    set("inverse.epochs", "5");
    set("inverse.lr", "0.001");
    set("detector.p_false_neg", "0.10");
    set("detector.p_false_pos", "0.02");
    set("detector.sigma", "0.05");
    set("q.gamma", "0.99");
    set("q.minibatch", "16");
    set("q.iterations", "50000");
    set("q.sync_period", "2000");
    set("q.lr", "0.0001");
    set("value.passes", "40");
    set("bc.epochs", "8");
    set("strong.samples", "20000");
    set("strong.iterations", "30000");
    set("joint.iterations", "30000");
    set("calibrate.per_class", "20");
    set("calibrate.candidates", "0.5,0.75,1.0,1.5,2.0,3.0,5.0");
    set("eval.per_class", "20");
    set("eval.budget", "500");
    set("eval.bootstrap", "1000");
    set("eval.jobs", "1");
    set("ablate.per_class", "10");
    set("ablate.iterations", "20000");
    set("branching.videos", "200");
    set("branching.rollouts", "50");
    set("branching.iterations", "25000");
  }

  void set(const std::string& key, const std::string& value) { kv_[key] = value; }
  bool has(const std::string& key) const { return kv_.count(key) != 0; }

  const std::string& get(const std::string& key) const {
    const auto it = kv_.find(key);
    if (it == kv_.end()) throw ValidationError("unknown config key '" + key + "'");
    return it->second;
  }
  long get_long(const std::string& key) const { return parse_long(get(key), 0); }
  int get_int(const std::string& key) const { return static_cast<int>(get_long(key)); }
  double get_double(const std::string& key) const { return parse_double(get(key), 0); }
  std::uint64_t get_u64(const std::string& key) const {
    return std::strtoull(get(key).c_str(), nullptr, 10);
  }
  std::uint64_t seed() const { return get_u64("seed"); }

  void load_file(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw IoError("cannot open config '" + path + "'");
    std::string line;
    long lineno = 0;
    while (std::getline(f, line)) {
      ++lineno;
      const auto hash_pos = line.find('#');
      if (hash_pos != std::string::npos) line = line.substr(0, hash_pos);
      const auto eq = line.find('=');
      if (eq == std::string::npos) {
        if (!split_ws(line).empty())
          throw FormatError("expected 'key = value'", lineno);
        continue;
      }
      auto trim = [](std::string s) {
        const auto b = s.find_first_not_of(" \t\r");
        const auto e = s.find_last_not_of(" \t\r");
        return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
      };
      set(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    }
  }

  // Hash of the stage's relevant settings plus input hashes, chained.
  std::uint64_t stage_hash(const std::string& stage,
                           const std::vector<std::string>& key_prefixes,
                           const std::vector<std::uint64_t>& inputs = {}) const {
    std::ostringstream os;
    os << "stage=" << stage << "\nseed=" << get("seed") << "\n";
    for (const auto& [k, v] : kv_)
      for (const auto& prefix : key_prefixes)
        if (k.rfind(prefix, 0) == 0) {
          os << k << "=" << v << "\n";
          break;
        }
    for (std::uint64_t h : inputs) os << "in=" << hash_hex(h) << "\n";
    return fnv1a64(os.str());
  }

  std::vector<double> get_double_list(const std::string& key) const {
    std::vector<double> out;
    std::stringstream ss(get(key));
    std::string tok;
    while (std::getline(ss, tok, ',')) out.push_back(parse_double(tok, 0));
    return out;
  }

 private:
  std::map<std::string, std::string> kv_;
};

// ---------------------------------------------------------------------------
// Stage driver. Holds the output directory, the configuration, and the hash
// ledger used by `pipeline` to verify artifacts across stage boundaries.
// ---------------------------------------------------------------------------

struct Driver {
  Config cfg;
  std::filesystem::path out = "out";
  bool verify = false;
  std::map<std::string, std::uint64_t> produced;
  std::ostream* log = &std::cout;

  std::string path(const std::string& rel) const { return (out / rel).string(); }

  void ensure_dirs() const {
    for (const char* d : {"worlds", "data", "models", "reports"})
      std::filesystem::create_directories(out / d);
  }

  void note_output(const std::string& p, std::uint64_t h) { produced[p] = h; }

  void check_input(const std::string& p, std::uint64_t embedded) const {
    if (!verify) return;
    const auto it = produced.find(p);
    if (it == produced.end()) return;
    if (it->second != embedded)
      throw ValidationError("config hash mismatch for '" + p + "': expected " +
                            hash_hex(it->second) + ", found " + hash_hex(embedded));
  }

  WorldGenParams world_params() const {
    WorldGenParams p;
    p.width = cfg.get_int("world.width");
    p.height = cfg.get_int("world.height");
    p.rooms = cfg.get_int("world.rooms");
    p.min_room = cfg.get_int("world.min_room");
    p.max_room = cfg.get_int("world.max_room");
    p.object_density = cfg.get_double("world.object_density");
    return p;
  }

  DetectorConfig detector_config() const {
    DetectorConfig d;
    d.p_false_neg = cfg.get_double("detector.p_false_neg");
    d.p_false_pos = cfg.get_double("detector.p_false_pos");
    d.confidence_noise_sigma = cfg.get_double("detector.sigma");
    d.seed = mix_seed(cfg.seed(), 0xdead);
    return d;
  }

  QTrainConfig q_config() const {
    QTrainConfig q;
    q.gamma = cfg.get_double("q.gamma");
    q.minibatch = cfg.get_int("q.minibatch");
    q.iterations = cfg.get_int("q.iterations");
    q.sync_period = cfg.get_int("q.sync_period");
    q.lr = cfg.get_double("q.lr");
    q.seed = mix_seed(cfg.seed(), 0x9000);
    return q;
  }

  std::vector<GridWorld> load_world_split(const std::string& split, int n) const {
    std::vector<GridWorld> worlds;
    for (int i = 0; i < n; ++i) {
      char name[64];
      std::snprintf(name, sizeof(name), "worlds/%s_%02d.txt", split.c_str(), i);
      auto loaded = load_world(path(name));
      check_input(path(name), loaded.cfg_hash);
      worlds.push_back(std::move(loaded.world));
    }
    return worlds;
  }
};

// ---------------------------------------------------------------------------
// Stages.
// ---------------------------------------------------------------------------

inline void cmd_gen_worlds(Driver& drv) {
  drv.ensure_dirs();
  const auto h = drv.cfg.stage_hash("gen-worlds", {"world", "worlds."});
  const WorldGenParams params = drv.world_params();
  const char* splits[3] = {"train", "video", "test"};
  const int counts[3] = {drv.cfg.get_int("worlds.train"), drv.cfg.get_int("worlds.video"),
                         drv.cfg.get_int("worlds.test")};
  for (int s = 0; s < 3; ++s) {
    for (int i = 0; i < counts[s]; ++i) {
      const GridWorld w = generate_world(
          mix_seed(drv.cfg.seed(), 0x90d, static_cast<std::uint64_t>(s),
                   static_cast<std::uint64_t>(i)),
          params);
      char name[64];
      std::snprintf(name, sizeof(name), "worlds/%s_%02d.txt", splits[s], i);
      save_world(w, drv.path(name), h);
      drv.note_output(drv.path(name), h);
    }
    *drv.log << "gen-worlds: " << counts[s] << " " << splits[s] << " worlds\n";
  }
}

inline void cmd_collect_interaction(Driver& drv) {
  drv.ensure_dirs();
  const auto worlds = drv.load_world_split("train", drv.cfg.get_int("worlds.train"));
  std::uint64_t in_hash = 0;
  if (!worlds.empty()) in_hash = drv.cfg.stage_hash("gen-worlds", {"world", "worlds."});
  const auto h = drv.cfg.stage_hash("collect-interaction", {"interaction."}, {in_hash});
  const auto ds = collect_interaction(worlds, drv.cfg.get_int("interaction.frames"),
                                      mix_seed(drv.cfg.seed(), 0x1a));
  save_dataset(ds, drv.path("data/interaction.txt"), h);
  drv.note_output(drv.path("data/interaction.txt"), h);
  *drv.log << "collect-interaction: " << ds.num_transitions() << " transitions\n";
}

inline void cmd_gen_videos(Driver& drv) {
  drv.ensure_dirs();
  const auto worlds = drv.load_world_split("video", drv.cfg.get_int("worlds.video"));
  const auto in_hash = drv.cfg.stage_hash("gen-worlds", {"world", "worlds."});
  const auto h = drv.cfg.stage_hash("gen-videos", {"videos."}, {in_hash});
  const auto ds = generate_videos(worlds, drv.cfg.get_int("videos.per_world"),
                                  drv.cfg.get_double("videos.noise_p"),
                                  mix_seed(drv.cfg.seed(), 0x71d));
  save_dataset(ds, drv.path("data/videos.txt"), h);
  drv.note_output(drv.path("data/videos.txt"), h);
  double frames = 0;
  for (const auto& t : ds.trajs) frames += static_cast<double>(t.size());
  *drv.log << "gen-videos: " << ds.trajs.size() << " trajectories, mean length "
           << format_double(frames / static_cast<double>(ds.trajs.size()) - 1.0) << "\n";
}

inline void cmd_train_inverse(Driver& drv) {
  drv.ensure_dirs();
  auto loaded = load_dataset(drv.path("data/interaction.txt"));
  drv.check_input(drv.path("data/interaction.txt"), loaded.cfg_hash);
  const auto h =
      drv.cfg.stage_hash("train-inverse", {"inverse."}, {loaded.cfg_hash});
  InverseTrainConfig icfg;
  icfg.epochs = drv.cfg.get_int("inverse.epochs");
  icfg.lr = drv.cfg.get_double("inverse.lr");
  icfg.seed = mix_seed(drv.cfg.seed(), 0x1f);
  const InverseModel model = train_inverse(loaded.dataset, icfg);
  save_model(model.net, drv.path("models/inverse.txt"), h);
  drv.note_output(drv.path("models/inverse.txt"), h);
  std::ofstream rep(drv.path("reports/inverse.txt"));
  rep << "VLVREPORT 1 cfg=" << hash_hex(h) << "\n"
      << "inverse.val_accuracy = " << format_double(model.val_accuracy) << "\n";
  *drv.log << "train-inverse: val accuracy " << format_double(model.val_accuracy) << "\n";
}

inline void cmd_pseudo_label(Driver& drv) {
  drv.ensure_dirs();
  auto videos = load_dataset(drv.path("data/videos.txt"));
  drv.check_input(drv.path("data/videos.txt"), videos.cfg_hash);
  auto model = load_model(drv.path("models/inverse.txt"));
  drv.check_input(drv.path("models/inverse.txt"), model.cfg_hash);
  const auto h = drv.cfg.stage_hash("pseudo-label", {},
                                    {videos.cfg_hash, model.cfg_hash});
  InverseModel inverse;
  inverse.net = std::move(model.net);
  const VideoDataset labeled = pseudo_label(inverse, videos.dataset);
  save_dataset(labeled, drv.path("data/pseudo.txt"), h);
  drv.note_output(drv.path("data/pseudo.txt"), h);
  // Agreement with the held-back truth, logged for the ablation delta.
  double agreement = -1.0;
  if (labeled.has_hidden()) agreement = measure_agreement(labeled.unlocked_for_ablation());
  std::ofstream rep(drv.path("reports/pseudo_label.txt"));
  rep << "VLVREPORT 1 cfg=" << hash_hex(h) << "\n"
      << "pseudo_label.agreement = " << format_double(agreement) << "\n";
  *drv.log << "pseudo-label: agreement with hidden actions "
           << format_double(agreement) << "\n";
}

inline void cmd_label_rewards(Driver& drv) {
  drv.ensure_dirs();
  auto labeled = load_dataset(drv.path("data/pseudo.txt"));
  drv.check_input(drv.path("data/pseudo.txt"), labeled.cfg_hash);
  const auto h = drv.cfg.stage_hash("label-rewards", {"detector."}, {labeled.cfg_hash});
  const RewardLabeling labeling = label_rewards(labeled.dataset, drv.detector_config());
  save_quads(labeling.quads, drv.path("data/quads.txt"), h);
  drv.note_output(drv.path("data/quads.txt"), h);
  size_t reward_frames = 0, frames = 0;
  for (const auto& traj : labeling.frame_rewards)
    for (const auto& row : traj) {
      ++frames;
      for (int c = 0; c < kNumCategories; ++c) reward_frames += row[static_cast<size_t>(c)];
    }
  *drv.log << "label-rewards: " << labeling.quads.size() << " quadruples, "
           << reward_frames << " reward bits over " << frames << " frames\n";
}

inline void cmd_train_q(Driver& drv) {
  drv.ensure_dirs();
  auto quads = load_quads(drv.path("data/quads.txt"));
  drv.check_input(drv.path("data/quads.txt"), quads.cfg_hash);
  const auto h = drv.cfg.stage_hash("train-q", {"q."}, {quads.cfg_hash});
  const QTrainResult trained = train_q(quads.quads, drv.q_config());
  save_model(trained.q.net, drv.path("models/q.txt"), h);
  drv.note_output(drv.path("models/q.txt"), h);
  std::ofstream rep(drv.path("reports/qtrain.txt"));
  rep << "VLVREPORT 1 cfg=" << hash_hex(h) << "\n";
  for (size_t i = 0; i < trained.report.residuals.size(); ++i)
    rep << "q.residual." << i << " = " << format_double(trained.report.residuals[i]) << "\n";
  rep << "q.final_residual = " << format_double(trained.report.final_residual) << "\n"
      << "q.n_train = " << trained.report.n_train << "\n"
      << "q.n_holdout = " << trained.report.n_holdout << "\n";
  *drv.log << "train-q: final holdout residual "
           << format_double(trained.report.final_residual) << "\n";
}

inline void cmd_train_baseline(Driver& drv, const std::string& which) {
  drv.ensure_dirs();
  const double gamma = drv.cfg.get_double("q.gamma");
  if (which == "td0" || which == "mc") {
    auto labeled = load_dataset(drv.path("data/pseudo.txt"));
    drv.check_input(drv.path("data/pseudo.txt"), labeled.cfg_hash);
    const auto h = drv.cfg.stage_hash("train-baseline-" + which, {"value.", "detector."},
                                      {labeled.cfg_hash});
    const RewardLabeling labeling = label_rewards(labeled.dataset, drv.detector_config());
    ValueNetConfig vcfg;
    vcfg.passes = drv.cfg.get_int("value.passes");
    vcfg.seed = mix_seed(drv.cfg.seed(), which == "td0" ? 0x7d0 : 0x7d1);
    const ValueTable vt =
        which == "td0"
            ? policy_evaluation_td0_net(labeled.dataset, labeling.frame_rewards, gamma, vcfg)
            : policy_evaluation_mc_net(labeled.dataset, labeling.frame_rewards, gamma, vcfg);
    save_model(*vt.net, drv.path("models/" + which + ".txt"), h);
    drv.note_output(drv.path("models/" + which + ".txt"), h);
  } else if (which == "bc") {
    auto labeled = load_dataset(drv.path("data/pseudo.txt"));
    drv.check_input(drv.path("data/pseudo.txt"), labeled.cfg_hash);
    const auto h = drv.cfg.stage_hash("train-baseline-bc", {"bc.", "detector."},
                                      {labeled.cfg_hash});
    const RewardLabeling labeling = label_rewards(labeled.dataset, drv.detector_config());
    BcTrainConfig bcfg;
    bcfg.epochs = drv.cfg.get_int("bc.epochs");
    bcfg.seed = mix_seed(drv.cfg.seed(), 0xbc);
    const Mlp net = train_behavior_cloning(labeled.dataset, labeling.frame_rewards, bcfg);
    save_model(net, drv.path("models/bc.txt"), h);
    drv.note_output(drv.path("models/bc.txt"), h);
  } else if (which == "strong" || which == "joint") {
    const auto worlds = drv.load_world_split("video", drv.cfg.get_int("worlds.video"));
    const auto worlds_hash = drv.cfg.stage_hash("gen-worlds", {"world", "worlds."});
    const RegressionSet samples = build_strong_samples(
        worlds, gamma, drv.cfg.get_int("strong.samples"), mix_seed(drv.cfg.seed(), 0x57));
    if (which == "strong") {
      const auto h = drv.cfg.stage_hash("train-baseline-strong", {"strong."}, {worlds_hash});
      StrongTrainConfig scfg;
      scfg.iterations = drv.cfg.get_int("strong.iterations");
      scfg.seed = mix_seed(drv.cfg.seed(), 0x58);
      const QFunction qf = train_strong_supervision(samples, scfg);
      save_model(qf.net, drv.path("models/strong.txt"), h);
      drv.note_output(drv.path("models/strong.txt"), h);
    } else {
      auto quads = load_quads(drv.path("data/quads.txt"));
      drv.check_input(drv.path("data/quads.txt"), quads.cfg_hash);
      const auto h = drv.cfg.stage_hash("train-baseline-joint", {"joint.", "q."},
                                        {worlds_hash, quads.cfg_hash});
      QTrainConfig qcfg = drv.q_config();
      qcfg.iterations = drv.cfg.get_int("joint.iterations");
      qcfg.seed = mix_seed(drv.cfg.seed(), 0x59);
      const QTrainResult trained = train_q(quads.quads, qcfg, &samples);
      save_model(trained.q.net, drv.path("models/joint.txt"), h);
      drv.note_output(drv.path("models/joint.txt"), h);
    }
  } else {
    throw ValidationError("train-baseline: unknown baseline '" + which +
                          "' (want td0|mc|bc|strong|joint)");
  }
  *drv.log << "train-baseline " << which << ": done\n";
}

// Suite method construction shared by calibrate-stop and eval. Models are
// owned by the returned holder; specs point into it.
struct MethodSet {
  Mlp q, bc, strong, joint;
  std::vector<MethodSpec> specs;
};

inline MethodSet load_methods(Driver& drv) {
  MethodSet set;
  auto grab = [&drv](const char* rel) {
    auto loaded = load_model(drv.path(rel));
    drv.check_input(drv.path(rel), loaded.cfg_hash);
    return std::move(loaded.net);
  };
  set.q = grab("models/q.txt");
  set.bc = grab("models/bc.txt");
  set.strong = grab("models/strong.txt");
  set.joint = grab("models/joint.txt");
  set.specs.push_back(topological_exploration_method());
  set.specs.push_back(detection_seeker_method());
  MethodSpec vlv;
  vlv.name = "vlv";
  vlv.weights = {1.0, 1.0, 1.0};
  vlv.scorer = make_q_scorer(&set.q);
  set.specs.push_back(vlv);
  MethodSpec bc;
  bc.name = "bc";
  bc.kind = MethodKind::BehaviorCloning;
  bc.bc_net = &set.bc;
  set.specs.push_back(bc);
  MethodSpec strong;
  strong.name = "strong_supervision";
  strong.weights = {1.0, 1.0, 1.0};
  strong.scorer = make_q_scorer(&set.strong);
  set.specs.push_back(strong);
  MethodSpec joint;
  joint.name = "strong_plus_vlv";
  joint.weights = {1.0, 1.0, 1.0};
  joint.scorer = make_q_scorer(&set.joint);
  set.specs.push_back(joint);
  return set;
}

// Stop-config file: one line per method, tau then the five d_c values.
inline void save_stop_configs(const std::map<std::string, StopConfig>& stops,
                              const std::string& path, std::uint64_t h) {
  std::ofstream f(path);
  if (!f) throw IoError("cannot open '" + path + "' for writing");
  f << "VLVSTOP 1 cfg=" << hash_hex(h) << "\n";
  for (const auto& [name, stop] : stops) {
    f << name << " " << format_double(stop.tau);
    for (double d : stop.d_c) f << " " << format_double(d);
    f << "\n";
  }
}

inline std::pair<std::map<std::string, StopConfig>, std::uint64_t> load_stop_configs(
    const std::string& path) {
  std::ifstream f(path);
  if (!f) throw IoError("cannot open '" + path + "'");
  std::string line;
  long lineno = 1;
  if (!std::getline(f, line)) throw FormatError("empty file", 0);
  auto head = split_ws(line);
  if (head.size() < 2 || head[0] != "VLVSTOP" || head[1] != "1")
    throw FormatError("bad magic, expected 'VLVSTOP 1'", lineno);
  std::uint64_t h = 0;
  for (size_t i = 2; i < head.size(); ++i)
    if (head[i].rfind("cfg=", 0) == 0) h = std::strtoull(head[i].c_str() + 4, nullptr, 16);
  std::map<std::string, StopConfig> stops;
  while (std::getline(f, line)) {
    ++lineno;
    auto toks = split_ws(line);
    if (toks.empty()) continue;
    if (toks.size() != 2 + kNumCategories) throw FormatError("bad stop line", lineno);
    StopConfig sc;
    sc.tau = parse_double(toks[1], lineno);
    for (int c = 0; c < kNumCategories; ++c)
      sc.d_c[static_cast<size_t>(c)] = parse_double(toks[static_cast<size_t>(2 + c)], lineno);
    stops[toks[0]] = sc;
  }
  return {stops, h};
}

inline void cmd_calibrate_stop(Driver& drv) {
  drv.ensure_dirs();
  const auto worlds = drv.load_world_split("train", drv.cfg.get_int("worlds.train"));
  MethodSet methods = load_methods(drv);
  const auto h = drv.cfg.stage_hash("calibrate-stop", {"calibrate.", "detector.", "eval."});
  const auto episodes = sample_episodes(worlds, drv.cfg.get_int("calibrate.per_class"),
                                        mix_seed(drv.cfg.seed(), 0xca));
  SuiteConfig scfg;
  scfg.detector = drv.detector_config();
  scfg.budget = drv.cfg.get_int("eval.budget");
  scfg.seed = mix_seed(drv.cfg.seed(), 0xcb);
  const auto candidates = drv.cfg.get_double_list("calibrate.candidates");
  std::map<std::string, StopConfig> stops;
  for (const auto& spec : methods.specs) {
    stops[spec.name] = calibrate_method_stop(spec, worlds, episodes, scfg, candidates);
    *drv.log << "calibrate-stop " << spec.name << ":";
    for (double d : stops[spec.name].d_c) *drv.log << " " << format_double(d);
    *drv.log << "\n";
  }
  save_stop_configs(stops, drv.path("models/stop.txt"), h);
  drv.note_output(drv.path("models/stop.txt"), h);
}

inline SuiteResult cmd_eval(Driver& drv) {
  drv.ensure_dirs();
  const auto worlds = drv.load_world_split("test", drv.cfg.get_int("worlds.test"));
  MethodSet methods = load_methods(drv);
  auto [stops, stop_hash] = load_stop_configs(drv.path("models/stop.txt"));
  drv.check_input(drv.path("models/stop.txt"), stop_hash);
  for (auto& spec : methods.specs) {
    const auto it = stops.find(spec.name);
    if (it != stops.end()) spec.stop = it->second;
  }
  const auto h = drv.cfg.stage_hash("eval", {"eval.", "detector."}, {stop_hash});
  const auto episodes = sample_episodes(worlds, drv.cfg.get_int("eval.per_class"),
                                        mix_seed(drv.cfg.seed(), 0xe0));
  SuiteConfig scfg;
  scfg.detector = drv.detector_config();
  scfg.budget = drv.cfg.get_int("eval.budget");
  scfg.bootstrap_B = drv.cfg.get_int("eval.bootstrap");
  scfg.seed = mix_seed(drv.cfg.seed(), 0xe1);
  scfg.jobs = drv.cfg.get_int("eval.jobs");
  const SuiteResult suite = run_suite(methods.specs, worlds, episodes, scfg);
  std::ofstream rep(drv.path("reports/metrics.txt"));
  rep << format_metrics_report(suite, h);
  drv.note_output(drv.path("reports/metrics.txt"), h);
  for (const auto& m : suite.methods)
    *drv.log << "eval " << m.name << ": os-spl " << format_double(m.oracle.spl) << " os-sr "
             << format_double(m.oracle.sr) << "\n";
  return suite;
}

inline AblationReport cmd_ablate(Driver& drv) {
  drv.ensure_dirs();
  AblationContext ctx;
  ctx.video_worlds = drv.load_world_split("video", drv.cfg.get_int("worlds.video"));
  ctx.eval_worlds = drv.load_world_split("train", drv.cfg.get_int("worlds.train"));
  auto videos = load_dataset(drv.path("data/videos.txt"));
  drv.check_input(drv.path("data/videos.txt"), videos.cfg_hash);
  ctx.videos = std::move(videos.dataset);
  auto inverse = load_model(drv.path("models/inverse.txt"));
  drv.check_input(drv.path("models/inverse.txt"), inverse.cfg_hash);
  ctx.inverse.net = std::move(inverse.net);
  ctx.n_traj_per_world = drv.cfg.get_int("videos.per_world");
  ctx.video_noise_p = drv.cfg.get_double("videos.noise_p");
  ctx.detector = drv.detector_config();
  ctx.qcfg = drv.q_config();
  ctx.qcfg.iterations = drv.cfg.get_int("ablate.iterations");
  ctx.episodes = sample_episodes(ctx.eval_worlds, drv.cfg.get_int("ablate.per_class"),
                                 mix_seed(drv.cfg.seed(), 0xab));
  ctx.suite_cfg.detector = ctx.detector;
  ctx.suite_cfg.budget = drv.cfg.get_int("eval.budget");
  ctx.suite_cfg.bootstrap_B = drv.cfg.get_int("eval.bootstrap");
  ctx.suite_cfg.seed = mix_seed(drv.cfg.seed(), 0xac);
  ctx.suite_cfg.jobs = drv.cfg.get_int("eval.jobs");
  ctx.seed = mix_seed(drv.cfg.seed(), 0xad);
  const auto h = drv.cfg.stage_hash("ablate", {"ablate.", "videos.", "detector.", "q."});
  const AblationReport report = run_ablations(ctx);
  std::ofstream rep(drv.path("reports/ablations.txt"));
  rep << format_ablation_report(report, h);
  for (const auto& row : report.rows)
    *drv.log << "ablate " << row.name << ": os-spl " << format_double(row.oracle.spl) << "\n";
  return report;
}

inline BranchingReport cmd_branching(Driver& drv) {
  drv.ensure_dirs();
  BranchingConfig bcfg;
  bcfg.n_videos = drv.cfg.get_int("branching.videos");
  bcfg.n_rollouts = drv.cfg.get_int("branching.rollouts");
  bcfg.qcfg.iterations = drv.cfg.get_int("branching.iterations");
  bcfg.seed = mix_seed(drv.cfg.seed(), 0xbb);
  const auto h = drv.cfg.stage_hash("branching", {"branching."});
  const BranchingReport report = branching_experiment(bcfg);
  std::ofstream rep(drv.path("reports/branching.txt"));
  rep << format_branching_report(report, h);
  *drv.log << "branching: vlv reaches near goal " << format_double(report.frac_near_vlv)
           << ", td0 " << format_double(report.frac_near_td0) << ", mc "
           << format_double(report.frac_near_mc) << "\n";
  return report;
}

// ---------------------------------------------------------------------------
// Value map: per free cell the max over the 12 headings of f(render, c),
// linearly scaled to 0..255 (occupied cells 0, flat maps render mid-gray).
// ---------------------------------------------------------------------------

inline std::string value_map_pgm(const GridWorld& w, const Mlp& net, Category cat,
                                 std::uint64_t cfg_hash = 0) {
  std::vector<double> vals(static_cast<size_t>(w.width) * w.height, -1.0);
  double vmin = kInf, vmax = -kInf;
  for (int r = 0; r < w.height; ++r)
    for (int c = 0; c < w.width; ++c) {
      if (!w.is_free(r, c)) continue;
      double best = -kInf;
      for (int hi = 0; hi < kNumHeadings; ++hi) {
        const Observation obs = render(w, cell_pose(w, {r, c}, hi * kTurnDeg));
        std::vector<double> x(obs.v.begin(), obs.v.end());
        best = std::max(best, QFunction::max_over_actions(forward(net, x), cat));
      }
      vals[static_cast<size_t>(r) * w.width + c] = best;
      vmin = std::min(vmin, best);
      vmax = std::max(vmax, best);
    }
  std::ostringstream os;
  os << "P2\n# cfg=" << hash_hex(cfg_hash) << "\n" << w.width << " " << w.height << "\n255\n";
  const bool flat = !(vmax - vmin > 1e-12);
  for (int r = 0; r < w.height; ++r) {
    for (int c = 0; c < w.width; ++c) {
      const double v = vals[static_cast<size_t>(r) * w.width + c];
      int pixel = 0;
      if (v >= 0.0)
        pixel = flat ? 128
                     : static_cast<int>(std::lround(255.0 * (v - vmin) / (vmax - vmin)));
      os << (c ? " " : "") << pixel;
    }
    os << "\n";
  }
  return os.str();
}

inline void cmd_value_map(Driver& drv, const std::string& world_path,
                          const std::string& model_path, const std::string& category,
                          const std::string& out_path) {
  const auto world = load_world(world_path);
  const auto model = load_model(model_path);
  const Category cat = parse_category(category);
  const auto h = drv.cfg.stage_hash("value-map", {}, {world.cfg_hash, model.cfg_hash});
  std::ofstream f(out_path);
  if (!f) throw IoError("cannot open '" + out_path + "' for writing");
  f << value_map_pgm(world.world, model.net, cat, h);
  *drv.log << "value-map: wrote " << out_path << "\n";
}

inline void cmd_pipeline(Driver& drv, bool with_ablations) {
  drv.verify = true;
  cmd_gen_worlds(drv);
  cmd_collect_interaction(drv);
  cmd_gen_videos(drv);
  cmd_train_inverse(drv);
  cmd_pseudo_label(drv);
  cmd_label_rewards(drv);
  cmd_train_q(drv);
  cmd_train_baseline(drv, "td0");
  cmd_train_baseline(drv, "mc");
  cmd_train_baseline(drv, "bc");
  cmd_train_baseline(drv, "strong");
  cmd_train_baseline(drv, "joint");
  cmd_calibrate_stop(drv);
  cmd_eval(drv);
  cmd_branching(drv);
  if (with_ablations) cmd_ablate(drv);
  *drv.log << "pipeline: complete\n";
}

}  // namespace vlv::cli
