#pragma once

#include <algorithm>
#include <cstdint>
#include <iomanip>
#include <map>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "vlv/navpolicy.hpp"
#include "vlv/valuelearn.hpp"

namespace vlv {

// ---------------------------------------------------------------------------
// ObjectGoal episodes. Difficulty buckets by reference geodesic length:
// easy <= 3m, medium 3-5m, hard 5-15m.
// ---------------------------------------------------------------------------

struct Episode {
  int world_id = 0;
  Pose start;
  Category category = Category::Bed;
  double l = 0.0;  // min geodesic (meters) to any instance, 1m success radius
  int difficulty = 0;
};

inline int difficulty_bucket(double l) {
  if (l <= 0.0 || l > 15.0) return -1;
  if (l <= 3.0) return 0;
  if (l <= 5.0) return 1;
  return 2;
}

inline std::vector<Episode> sample_episodes(const std::vector<GridWorld>& worlds,
                                            int n_per_class, std::uint64_t seed) {
  if (worlds.empty()) throw ValidationError("sample_episodes: no worlds");
  if (n_per_class < 1) throw ValidationError("sample_episodes: n_per_class must be >= 1");
  // Per-difficulty quota within each class, earlier buckets take the remainder.
  std::array<int, 3> quota_template{};
  for (int d = 0; d < 3; ++d)
    quota_template[static_cast<size_t>(d)] = n_per_class / 3 + (d < n_per_class % 3 ? 1 : 0);
  std::array<std::array<int, 3>, kNumCategories> open{};
  for (int c = 0; c < kNumCategories; ++c) open[static_cast<size_t>(c)] = quota_template;

  // Distance fields per (world, category) once.
  std::vector<std::array<std::vector<double>, kNumCategories>> fields(worlds.size());
  for (size_t wi = 0; wi < worlds.size(); ++wi)
    for (int c = 0; c < kNumCategories; ++c) {
      const auto cells = worlds[wi].instance_cells(static_cast<Category>(c));
      fields[wi][static_cast<size_t>(c)] =
          geodesic_field(worlds[wi], within_radius_mask(worlds[wi], cells, 1.0));
    }

  std::vector<Episode> episodes;
  Rng rng(mix_seed(seed, 0xe915));
  int remaining = n_per_class * kNumCategories;
  for (long tries = 0; remaining > 0; ++tries) {
    if (tries > 400000L) throw QuotaUnsatisfiable("sample_episodes: quotas not fillable");
    const size_t wi = rng.uniform_int(worlds.size());
    const GridWorld& w = worlds[wi];
    const int r = rng.uniform_index(w.height);
    const int c = rng.uniform_index(w.width);
    const int heading = rng.uniform_index(kNumHeadings) * kTurnDeg;
    const int cat = rng.uniform_index(kNumCategories);
    if (!w.is_free(r, c)) continue;
    const double l = fields[wi][static_cast<size_t>(cat)][static_cast<size_t>(r) * w.width + c];
    const int bucket = std::isfinite(l) ? difficulty_bucket(l) : -1;
    if (bucket < 0 || open[static_cast<size_t>(cat)][static_cast<size_t>(bucket)] <= 0)
      continue;
    open[static_cast<size_t>(cat)][static_cast<size_t>(bucket)] -= 1;
    --remaining;
    episodes.push_back({static_cast<int>(wi), cell_pose(w, {r, c}, heading),
                        static_cast<Category>(cat), l, bucket});
  }
  return episodes;
}

// ---------------------------------------------------------------------------
// Metrics: SPL and success rate with percentile-bootstrap CIs.
// ---------------------------------------------------------------------------

// SPL term of one episode. Degenerate max(p,l)=0 counts the bare success.
inline double spl_term(bool success, double p, double l) {
  if (!success) return 0.0;
  const double denom = std::max(p, l);
  return denom <= 0.0 ? 1.0 : l / denom;
}

inline double mean_of(const std::vector<double>& v) {
  if (v.empty()) return 0.0;
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

// Percentile bootstrap over episode resampling. Contract (mirrored by the
// test-side reimplementation): indices come from vlv::Rng(seed) row-major,
// idx = next_u64() % n; bounds are sorted_means[floor(a*B)] and
// sorted_means[ceil((1-a)*B)-1] with a = (1-level)/2.
inline std::pair<double, double> bootstrap_ci(const std::vector<double>& values, int B = 1000,
                                              double level = 0.90, std::uint64_t seed = 0) {
  if (values.empty()) throw ValidationError("bootstrap_ci: empty sample");
  Rng rng(seed);
  const size_t n = values.size();
  std::vector<double> means(static_cast<size_t>(B));
  for (int b = 0; b < B; ++b) {
    double s = 0.0;
    for (size_t i = 0; i < n; ++i) s += values[rng.uniform_int(n)];
    means[static_cast<size_t>(b)] = s / static_cast<double>(n);
  }
  std::sort(means.begin(), means.end());
  const double a = (1.0 - level) / 2.0;
  const size_t lo = static_cast<size_t>(std::floor(a * B));
  const size_t hi = static_cast<size_t>(std::ceil((1.0 - a) * B)) - 1;
  return {means[std::min(lo, means.size() - 1)], means[std::min(hi, means.size() - 1)]};
}

// One-sided p-value for mean(a - b) <= 0 under paired episode resampling.
inline double paired_bootstrap_pvalue(const std::vector<double>& a,
                                      const std::vector<double>& b, int B = 2000,
                                      std::uint64_t seed = 0) {
  if (a.size() != b.size() || a.empty())
    throw ValidationError("paired_bootstrap_pvalue: mismatched samples");
  Rng rng(mix_seed(seed, 0x9a17));
  int leq = 0;
  for (int rep = 0; rep < B; ++rep) {
    double s = 0.0;
    for (size_t i = 0; i < a.size(); ++i) {
      const size_t k = rng.uniform_int(a.size());
      s += a[k] - b[k];
    }
    if (s <= 0.0) ++leq;
  }
  return (leq + 1.0) / (B + 1.0);
}

struct Metrics {
  double spl = 0, spl_lo = 0, spl_hi = 0;
  double sr = 0, sr_lo = 0, sr_hi = 0;
  std::array<double, kNumCategories> spl_by_cat{}, sr_by_cat{};
  std::array<double, 3> spl_by_diff{}, sr_by_diff{};
  std::vector<double> spl_terms, successes;  // per episode, episode order
};

inline double spl(const std::vector<EpisodeResult>& results,
                  const std::vector<Episode>& episodes) {
  if (results.size() != episodes.size()) throw ValidationError("spl: size mismatch");
  double s = 0.0;
  for (size_t i = 0; i < results.size(); ++i)
    s += spl_term(results[i].success, results[i].path_len, episodes[i].l);
  return results.empty() ? 0.0 : s / static_cast<double>(results.size());
}

inline Metrics compute_metrics(const std::vector<Episode>& episodes,
                               const std::vector<double>& spl_terms,
                               const std::vector<double>& successes, int B = 1000,
                               std::uint64_t seed = 0) {
  Metrics m;
  m.spl_terms = spl_terms;
  m.successes = successes;
  m.spl = mean_of(spl_terms);
  m.sr = mean_of(successes);
  std::tie(m.spl_lo, m.spl_hi) = bootstrap_ci(spl_terms, B, 0.90, mix_seed(seed, 1));
  std::tie(m.sr_lo, m.sr_hi) = bootstrap_ci(successes, B, 0.90, mix_seed(seed, 2));
  std::array<std::vector<double>, kNumCategories> cat_spl, cat_sr;
  std::array<std::vector<double>, 3> diff_spl, diff_sr;
  for (size_t i = 0; i < episodes.size(); ++i) {
    const size_t c = static_cast<size_t>(episodes[i].category);
    const size_t d = static_cast<size_t>(episodes[i].difficulty);
    cat_spl[c].push_back(spl_terms[i]);
    cat_sr[c].push_back(successes[i]);
    diff_spl[d].push_back(spl_terms[i]);
    diff_sr[d].push_back(successes[i]);
  }
  for (int c = 0; c < kNumCategories; ++c) {
    m.spl_by_cat[static_cast<size_t>(c)] = mean_of(cat_spl[static_cast<size_t>(c)]);
    m.sr_by_cat[static_cast<size_t>(c)] = mean_of(cat_sr[static_cast<size_t>(c)]);
  }
  for (int d = 0; d < 3; ++d) {
    m.spl_by_diff[static_cast<size_t>(d)] = mean_of(diff_spl[static_cast<size_t>(d)]);
    m.sr_by_diff[static_cast<size_t>(d)] = mean_of(diff_sr[static_cast<size_t>(d)]);
  }
  return m;
}

// ---------------------------------------------------------------------------
// Method suite.
// ---------------------------------------------------------------------------

enum class MethodKind { Hierarchical, BehaviorCloning };

struct MethodSpec {
  std::string name;
  MethodKind kind = MethodKind::Hierarchical;
  PolicyWeights weights;
  DirectionScorer scorer;       // hierarchical methods; empty => f = 0
  const Mlp* bc_net = nullptr;  // behavior cloning
  StopConfig stop;
};

// Single-view scorer over a trained Q head.
inline DirectionScorer make_q_scorer(const Mlp* net) {
  return [net](const Panorama& pano, int dir, Category cat) {
    std::vector<double> x(pano.views[static_cast<size_t>(dir)].v.begin(),
                          pano.views[static_cast<size_t>(dir)].v.end());
    return QFunction::max_over_actions(forward(*net, x), cat);
  };
}

// Ring scorer for panorama-trained heads: concatenates the 12 views starting
// at the queried direction.
inline DirectionScorer make_pano_scorer(const Mlp* net) {
  return [net](const Panorama& pano, int dir, Category cat) {
    std::vector<double> x;
    x.reserve(static_cast<size_t>(kNumHeadings) * kObsDim);
    for (int j = 0; j < kNumHeadings; ++j) {
      const auto& view = pano.views[static_cast<size_t>((dir + j) % kNumHeadings)];
      x.insert(x.end(), view.v.begin(), view.v.end());
    }
    return QFunction::max_over_actions(forward(*net, x), cat);
  };
}

inline MethodSpec topological_exploration_method(const StopConfig& stop = {}) {
  MethodSpec m;
  m.name = "topo_explore";
  m.weights = {0.0, 0.0, 1.0};
  m.stop = stop;
  return m;
}

inline MethodSpec detection_seeker_method(const StopConfig& stop = {}) {
  MethodSpec m;
  m.name = "detection_seeker";
  m.weights = {0.0, 1.0, 1.0};
  m.stop = stop;
  return m;
}

struct SuiteConfig {
  DetectorConfig detector;
  int budget = 500;
  int bootstrap_B = 1000;
  std::uint64_t seed = 0;
  bool policy_stop = true;  // also run the PolicyStop pass
  int jobs = 1;             // episode-level workers; results keep episode order
};

struct MethodResult {
  std::string name;
  Metrics oracle;
  Metrics policy;
  bool has_policy = false;
};

struct SuiteResult {
  std::vector<MethodResult> methods;
  std::vector<Episode> episodes;
};

// Reactive behavior-cloning episode: argmax action each step, same stopping
// machinery evaluated every step.
inline EpisodeResult run_bc_episode(const GridWorld& world, const Pose& start, Category cat,
                                    const Mlp& bc_net, const EpisodeConfig& cfg) {
  EpisodeResult res;
  res.trajectory.push_back({0, start, Action::Stop, "start"});
  const bool oracle_mode = cfg.mode == StopMode::OracleStop;
  if (oracle_mode && true_distance(world, start.x, start.y, cat) <= 1.0) {
    res.success = true;
    res.stop_event = "oracle_stop";
    return res;
  }
  Pose pose = start;
  while (res.steps < cfg.budget) {
    const Observation obs = render(world, pose);
    if (cfg.mode == StopMode::PolicyStop && !cfg.suppress_stop) {
      const auto dets = detect(obs, cfg.detector,
                               mix_seed(cfg.seed, 0xbc, static_cast<std::uint64_t>(res.steps)));
      if (stopping_check(dets, cfg.stop, cat)) {
        const bool at_goal = true_distance(world, pose.x, pose.y, cat) <= 1.0;
        res.success = at_goal;
        res.stop_event = at_goal ? "policy_stop" : "policy_stop_wrong";
        return res;
      }
    }
    const Action act = bc_action(bc_net, obs, cat);
    const Pose next = step(world, pose, act);
    res.path_len += std::hypot(next.x - pose.x, next.y - pose.y);
    pose = next;
    ++res.steps;
    res.trajectory.push_back({res.steps, pose, act, ""});
    if (oracle_mode && true_distance(world, pose.x, pose.y, cat) <= 1.0) {
      res.success = true;
      res.stop_event = "oracle_stop";
      return res;
    }
  }
  res.stop_event = "budget";
  return res;
}

inline EpisodeResult run_method_episode(const GridWorld& world, const Episode& ep,
                                        const MethodSpec& method, const SuiteConfig& cfg,
                                        StopMode mode, std::uint64_t ep_seed) {
  EpisodeConfig ecfg;
  ecfg.weights = method.weights;
  ecfg.scorer = method.scorer;
  ecfg.detector = cfg.detector;
  ecfg.stop = method.stop;
  ecfg.mode = mode;
  ecfg.budget = cfg.budget;
  ecfg.seed = ep_seed;
  if (method.kind == MethodKind::BehaviorCloning)
    return run_bc_episode(world, ep.start, ep.category, *method.bc_net, ecfg);
  return run_episode(world, ep.start, ep.category, ecfg);
}

inline SuiteResult run_suite(const std::vector<MethodSpec>& methods,
                             const std::vector<GridWorld>& worlds,
                             const std::vector<Episode>& episodes, const SuiteConfig& cfg) {
  SuiteResult suite;
  suite.episodes = episodes;
  for (size_t mi = 0; mi < methods.size(); ++mi) {
    MethodResult mr;
    mr.name = methods[mi].name;
    for (int mode_i = 0; mode_i < (cfg.policy_stop ? 2 : 1); ++mode_i) {
      const StopMode mode = mode_i == 0 ? StopMode::OracleStop : StopMode::PolicyStop;
      std::vector<double> spl_terms(episodes.size()), succ(episodes.size());
      auto run_range = [&](size_t begin, size_t end) {
        for (size_t ei = begin; ei < end; ++ei) {
          const Episode& ep = episodes[ei];
          const auto r = run_method_episode(
              worlds[static_cast<size_t>(ep.world_id)], ep, methods[mi], cfg, mode,
              mix_seed(cfg.seed, mi, static_cast<std::uint64_t>(mode_i), ei));
          spl_terms[ei] = spl_term(r.success, r.path_len, ep.l);
          succ[ei] = r.success ? 1.0 : 0.0;
        }
      };
      if (cfg.jobs <= 1) {
        run_range(0, episodes.size());
      } else {
        std::vector<std::thread> workers;
        const size_t chunk = (episodes.size() + cfg.jobs - 1) / cfg.jobs;
        for (int j = 0; j < cfg.jobs; ++j) {
          const size_t begin = std::min(episodes.size(), static_cast<size_t>(j) * chunk);
          const size_t end = std::min(episodes.size(), begin + chunk);
          if (begin < end) workers.emplace_back(run_range, begin, end);
        }
        for (auto& t : workers) t.join();
      }
      const Metrics m = compute_metrics(episodes, spl_terms, succ, cfg.bootstrap_B,
                                        mix_seed(cfg.seed, 0x3e7, mi, static_cast<std::uint64_t>(mode_i)));
      if (mode == StopMode::OracleStop)
        mr.oracle = m;
      else {
        mr.policy = m;
        mr.has_policy = true;
      }
    }
    suite.methods.push_back(std::move(mr));
  }
  return suite;
}

// Records calibration episodes for one method and returns the per-category
// stopping distances maximizing Policy-Stop SPL.
inline StopConfig calibrate_method_stop(const MethodSpec& method,
                                        const std::vector<GridWorld>& worlds,
                                        const std::vector<Episode>& episodes,
                                        const SuiteConfig& cfg,
                                        const std::vector<double>& candidates) {
  std::vector<RecordedEpisode> recordings;
  for (size_t ei = 0; ei < episodes.size(); ++ei) {
    const Episode& ep = episodes[ei];
    EpisodeConfig ecfg;
    ecfg.weights = method.weights;
    ecfg.scorer = method.scorer;
    ecfg.detector = cfg.detector;
    ecfg.mode = StopMode::PolicyStop;
    ecfg.budget = cfg.budget;
    ecfg.seed = mix_seed(cfg.seed, 0xca1, ei);
    ecfg.record_reasoning = true;
    ecfg.suppress_stop = true;
    EpisodeResult r;
    if (method.kind == MethodKind::BehaviorCloning) {
      // Reactive policies evaluate stopping every step; record via snapshots
      // the same way by replaying with per-step detections.
      r = run_bc_episode(worlds[static_cast<size_t>(ep.world_id)], ep.start, ep.category,
                         *method.bc_net, ecfg);
      // Rebuild per-step snapshots from the trajectory.
      for (const auto& tp : r.trajectory) {
        if (tp.step == 0) continue;
        const auto obs = render(worlds[static_cast<size_t>(ep.world_id)], tp.pose);
        ReasoningSnapshot snap;
        snap.detections = detect(obs, cfg.detector,
                                 mix_seed(ecfg.seed, 0xbc, static_cast<std::uint64_t>(tp.step)));
        snap.true_dist = true_distance(worlds[static_cast<size_t>(ep.world_id)], tp.pose.x,
                                       tp.pose.y, ep.category);
        snap.path_len = 0.0;  // filled below
        r.snapshots.push_back(std::move(snap));
      }
      double p = 0.0;
      for (size_t k = 1; k < r.trajectory.size(); ++k) {
        p += std::hypot(r.trajectory[k].pose.x - r.trajectory[k - 1].pose.x,
                        r.trajectory[k].pose.y - r.trajectory[k - 1].pose.y);
        r.snapshots[k - 1].path_len = p;
      }
    } else {
      r = run_episode(worlds[static_cast<size_t>(ep.world_id)], ep.start, ep.category, ecfg);
    }
    recordings.push_back({ep.category, ep.l, std::move(r.snapshots)});
  }
  StopConfig stop = calibrate_dc(recordings, candidates);
  return stop;
}

// ---------------------------------------------------------------------------
// Report format: "<method>.<mode>.<key> = <value>" lines plus an aligned
// human-readable table.
// ---------------------------------------------------------------------------

inline std::string format_metrics_report(const SuiteResult& suite, std::uint64_t cfg_hash = 0) {
  std::ostringstream os;
  os << "VLVREPORT 1";
  if (cfg_hash != 0) os << " cfg=" << hash_hex(cfg_hash);
  os << "\n";
  static const char* kDiffName[3] = {"easy", "medium", "hard"};
  auto emit = [&os](const std::string& method, const std::string& mode, const Metrics& m) {
    auto kv = [&](const std::string& key, double v) {
      os << method << "." << mode << "." << key << " = " << format_double(v) << "\n";
    };
    kv("spl", m.spl);
    kv("spl_ci_lo", m.spl_lo);
    kv("spl_ci_hi", m.spl_hi);
    kv("sr", m.sr);
    kv("sr_ci_lo", m.sr_lo);
    kv("sr_ci_hi", m.sr_hi);
    for (int c = 0; c < kNumCategories; ++c) {
      kv(std::string(category_name(static_cast<Category>(c))) + ".spl",
         m.spl_by_cat[static_cast<size_t>(c)]);
      kv(std::string(category_name(static_cast<Category>(c))) + ".sr",
         m.sr_by_cat[static_cast<size_t>(c)]);
    }
    for (int d = 0; d < 3; ++d) {
      kv(std::string(kDiffName[d]) + ".spl", m.spl_by_diff[static_cast<size_t>(d)]);
      kv(std::string(kDiffName[d]) + ".sr", m.sr_by_diff[static_cast<size_t>(d)]);
    }
  };
  for (const auto& mr : suite.methods) {
    emit(mr.name, "os", mr.oracle);
    if (mr.has_policy) emit(mr.name, "ps", mr.policy);
  }
  os << "\n# method                    os-spl   os-sr    ps-spl   ps-sr\n";
  for (const auto& mr : suite.methods) {
    std::ostringstream row;
    row << "# " << std::left << std::setw(25) << mr.name << std::right << std::fixed
        << std::setprecision(3) << std::setw(7) << mr.oracle.spl << "  " << std::setw(7)
        << mr.oracle.sr;
    if (mr.has_policy)
      row << "  " << std::setw(7) << mr.policy.spl << "  " << std::setw(7) << mr.policy.sr;
    os << row.str() << "\n";
  }
  return os.str();
}

}  // namespace vlv
