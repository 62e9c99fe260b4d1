#pragma once

#include <cstdint>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "vlv/oracle.hpp"

namespace vlv {

// ---------------------------------------------------------------------------
// Action-free "video" tours plus the labeled interaction set. Ground-truth
// actions and poses recorded during generation are held back behind a
// capability flag: ordinary consumers see observations only, ablation and
// diagnostic code asks for an unlocked view explicitly.
// ---------------------------------------------------------------------------

struct Frame {
  Observation obs;
  int label = -1;  // public action label: true action (interaction) or pseudo label
  bool has_label() const { return label >= 0; }
};

struct HiddenFrame {
  int action = -1;           // action taken after this frame, -1 on the last frame
  Pose pose{};
  bool has_pose = false;
};

class VideoDataset {
 public:
  std::string kind;  // "video", "interaction", "pseudo"
  double noise_p = 0.0;
  std::uint64_t seed = 0;
  std::vector<int> world_ids;                // per trajectory
  std::vector<GridPos> targets;              // sampled tour target, {-1,-1} if none
  std::vector<std::vector<Frame>> trajs;

  size_t num_trajectories() const { return trajs.size(); }
  size_t num_frames() const {
    size_t n = 0;
    for (const auto& t : trajs) n += t.size();
    return n;
  }
  size_t num_transitions() const {
    size_t n = 0;
    for (const auto& t : trajs) n += t.empty() ? 0 : t.size() - 1;
    return n;
  }

  bool has_hidden() const { return !hidden_.empty(); }
  bool hidden_readable() const { return hidden_readable_; }

  // Explicit capability grant; only ablations and diagnostics call this.
  VideoDataset unlocked_for_ablation() const {
    VideoDataset copy = *this;
    copy.hidden_readable_ = true;
    return copy;
  }

  const HiddenFrame& hidden(size_t traj, size_t frame) const {
    if (!hidden_readable_)
      throw ValidationError("hidden fields are locked on this dataset handle");
    return hidden_.at(traj).at(frame);
  }

  // Generation-side access; not part of the consumer surface.
  void set_hidden(std::vector<std::vector<HiddenFrame>> hidden, bool readable) {
    hidden_ = std::move(hidden);
    hidden_readable_ = readable;
  }
  const std::vector<std::vector<HiddenFrame>>& hidden_store() const { return hidden_; }

 private:
  std::vector<std::vector<HiddenFrame>> hidden_;
  bool hidden_readable_ = false;
};

inline bool datasets_equal(const VideoDataset& a, const VideoDataset& b) {
  if (a.kind != b.kind || a.noise_p != b.noise_p || a.seed != b.seed ||
      a.world_ids != b.world_ids || !(a.targets == b.targets) ||
      a.trajs.size() != b.trajs.size())
    return false;
  for (size_t t = 0; t < a.trajs.size(); ++t) {
    if (a.trajs[t].size() != b.trajs[t].size()) return false;
    for (size_t i = 0; i < a.trajs[t].size(); ++i)
      if (!(a.trajs[t][i].obs == b.trajs[t][i].obs) || a.trajs[t][i].label != b.trajs[t][i].label)
        return false;
  }
  if (a.hidden_store().size() != b.hidden_store().size()) return false;
  for (size_t t = 0; t < a.hidden_store().size(); ++t) {
    const auto& ha = a.hidden_store()[t];
    const auto& hb = b.hidden_store()[t];
    if (ha.size() != hb.size()) return false;
    for (size_t i = 0; i < ha.size(); ++i)
      if (ha[i].action != hb[i].action || ha[i].has_pose != hb[i].has_pose ||
          (ha[i].has_pose && !(ha[i].pose == hb[i].pose)))
        return false;
  }
  return true;
}

// ---------------------------------------------------------------------------
// Video generation. Each trajectory samples a random start pose and a random
// target point, then follows shortest-path actions on the pose graph; with
// probability noise_p the action is replaced by a uniform random one and the
// walk replans from wherever it lands. Frames are rendered at cell centers.
// ---------------------------------------------------------------------------

namespace detail {

inline GridPos random_free_cell(const GridWorld& w, Rng& rng) {
  for (int tries = 0; tries < 100000; ++tries) {
    const int r = rng.uniform_index(w.height);
    const int c = rng.uniform_index(w.width);
    if (w.is_free(r, c)) return {r, c};
  }
  throw GenerationFailed("no free cell found");
}

inline Action greedy_action(const GridWorld& w, const std::vector<std::int32_t>& field,
                            PoseNode pose) {
  Action best = Action::Forward;
  std::int64_t best_d = std::numeric_limits<std::int64_t>::max();
  for (int a = 0; a < kNumMoveActions; ++a) {
    const PoseNode nxt = pose_step(w, pose, static_cast<Action>(a));
    const std::int32_t s = field[static_cast<size_t>(pose_id(w, nxt.cell, nxt.hi))];
    const std::int64_t d = s < 0 ? std::numeric_limits<std::int64_t>::max() - 1 : s;
    if (d < best_d) {
      best_d = d;
      best = static_cast<Action>(a);
    }
  }
  return best;
}

}  // namespace detail

inline VideoDataset generate_videos(const std::vector<GridWorld>& worlds,
                                    int n_traj_per_world, double noise_p = 0.2,
                                    std::uint64_t seed = 0) {
  if (worlds.empty()) throw ValidationError("generate_videos: no worlds");
  if (!(noise_p >= 0.0 && noise_p < 1.0))
    throw ValidationError("generate_videos: noise_p must be in [0,1)");
  VideoDataset ds;
  ds.kind = "video";
  ds.noise_p = noise_p;
  ds.seed = seed;
  std::vector<std::vector<HiddenFrame>> hidden;
  for (size_t wi = 0; wi < worlds.size(); ++wi) {
    const GridWorld& w = worlds[wi];
    for (int k = 0; k < n_traj_per_world; ++k) {
      Rng rng(mix_seed(seed, 0x51de0, wi, static_cast<std::uint64_t>(k)));
      // Target goal set: cells within 1m of the target point.
      std::vector<std::uint8_t> goal;
      std::vector<std::int32_t> field;
      PoseNode pose{};
      GridPos target{-1, -1};
      for (int resample = 0; resample < 64; ++resample) {
        pose = {detail::random_free_cell(w, rng), rng.uniform_index(kNumHeadings)};
        target = detail::random_free_cell(w, rng);
        goal = within_radius_mask(w, {target}, 1.0);
        field = pose_distance_field(w, goal);
        const std::int32_t d0 = field[static_cast<size_t>(pose_id(w, pose.cell, pose.hi))];
        if (d0 >= 2) break;
      }
      std::vector<Frame> traj;
      std::vector<HiddenFrame> htraj;
      const std::int32_t d0 = field[static_cast<size_t>(pose_id(w, pose.cell, pose.hi))];
      const int step_cap = 4 * std::max<std::int32_t>(d0, 1) + 24;
      for (int t = 0; t < step_cap; ++t) {
        if (field[static_cast<size_t>(pose_id(w, pose.cell, pose.hi))] == 0) break;
        Action act = detail::greedy_action(w, field, pose);
        if (noise_p > 0.0 && rng.bernoulli(noise_p))
          act = static_cast<Action>(rng.uniform_index(kNumMoveActions));
        traj.push_back({render(w, pose_of(w, pose)), -1});
        htraj.push_back({static_cast<int>(act), pose_of(w, pose), true});
        pose = pose_step(w, pose, act);
      }
      traj.push_back({render(w, pose_of(w, pose)), -1});
      htraj.push_back({-1, pose_of(w, pose), true});
      ds.world_ids.push_back(static_cast<int>(wi));
      ds.targets.push_back(target);
      ds.trajs.push_back(std::move(traj));
      hidden.push_back(std::move(htraj));
    }
  }
  ds.set_hidden(std::move(hidden), false);
  return ds;
}

// Random-action interaction data with public true-action labels. Episodes of
// 20 actions from random reset poses, truncated to exactly n_frames
// transitions; Stop is never executed.
inline VideoDataset collect_interaction(const std::vector<GridWorld>& worlds,
                                        int n_frames = 40000, std::uint64_t seed = 0) {
  if (worlds.empty()) throw ValidationError("collect_interaction: no worlds");
  if (n_frames < 1) throw ValidationError("collect_interaction: n_frames must be >= 1");
  VideoDataset ds;
  ds.kind = "interaction";
  ds.seed = seed;
  std::vector<std::vector<HiddenFrame>> hidden;
  const int episode_len = 20;
  int remaining = n_frames;
  for (int ep = 0; remaining > 0; ++ep) {
    const size_t wi = static_cast<size_t>(ep) % worlds.size();
    const GridWorld& w = worlds[wi];
    Rng rng(mix_seed(seed, 0x1a7e2, static_cast<std::uint64_t>(ep)));
    PoseNode pose{detail::random_free_cell(w, rng), rng.uniform_index(kNumHeadings)};
    const int steps = std::min(episode_len, remaining);
    std::vector<Frame> traj;
    std::vector<HiddenFrame> htraj;
    for (int t = 0; t < steps; ++t) {
      const Action act = static_cast<Action>(rng.uniform_index(kNumMoveActions));
      traj.push_back({render(w, pose_of(w, pose)), static_cast<int>(act)});
      htraj.push_back({static_cast<int>(act), pose_of(w, pose), true});
      pose = pose_step(w, pose, act);
    }
    traj.push_back({render(w, pose_of(w, pose)), -1});
    htraj.push_back({-1, pose_of(w, pose), true});
    ds.world_ids.push_back(static_cast<int>(wi));
    ds.targets.push_back({-1, -1});
    ds.trajs.push_back(std::move(traj));
    hidden.push_back(std::move(htraj));
    remaining -= steps;
  }
  ds.set_hidden(std::move(hidden), true);
  return ds;
}

// ---------------------------------------------------------------------------
// Dataset file format.
//   VLVDATA 1 <kind> [cfg=<hex>]
//   # noise_p=<v> seed=<v>
//   <traj_id> <frame_idx> <105 floats> [A:<action>] [P:<x> <y> <heading>]
// For kind=video the A:/P: fields are the held-back ground truth and load
// locked; for interaction/pseudo A: is the public label.
// ---------------------------------------------------------------------------

inline std::string dataset_to_string(const VideoDataset& ds, std::uint64_t cfg_hash = 0) {
  std::ostringstream os;
  os << "VLVDATA 1 " << ds.kind;
  if (cfg_hash != 0) os << " cfg=" << hash_hex(cfg_hash);
  os << "\n# noise_p=" << format_double(ds.noise_p) << " seed=" << ds.seed << "\n";
  const bool hidden_actions = ds.kind == "video";
  for (size_t t = 0; t < ds.trajs.size(); ++t) {
    os << "# traj " << t << " world " << ds.world_ids[t];
    if (t < ds.targets.size() && ds.targets[t].r >= 0)
      os << " target " << ds.targets[t].r << "," << ds.targets[t].c;
    os << "\n";
    for (size_t i = 0; i < ds.trajs[t].size(); ++i) {
      const Frame& fr = ds.trajs[t][i];
      os << t << " " << i;
      for (double v : fr.obs.v) os << " " << format_double(v);
      int action = fr.label;
      bool has_pose = false;
      Pose pose{};
      if (t < ds.hidden_store().size() && i < ds.hidden_store()[t].size()) {
        const HiddenFrame& h = ds.hidden_store()[t][i];
        if (hidden_actions) action = h.action;
        has_pose = h.has_pose;
        pose = h.pose;
      }
      if (action >= 0) os << " A:" << action_name(static_cast<Action>(action));
      if (has_pose)
        os << " P:" << format_double(pose.x) << " " << format_double(pose.y) << " "
           << pose.heading;
      os << "\n";
    }
  }
  return os.str();
}

struct LoadedDataset {
  VideoDataset dataset;
  std::uint64_t cfg_hash = 0;
};

inline LoadedDataset dataset_from_string(const std::string& text) {
  std::istringstream is(text);
  std::string line;
  long lineno = 1;
  if (!std::getline(is, line)) throw FormatError("empty file", 0);
  auto head = split_ws(line);
  if (head.size() < 3 || head[0] != "VLVDATA" || head[1] != "1")
    throw FormatError("bad magic, expected 'VLVDATA 1 <kind>'", lineno);
  LoadedDataset out;
  VideoDataset& ds = out.dataset;
  ds.kind = head[2];
  if (ds.kind != "video" && ds.kind != "interaction" && ds.kind != "pseudo")
    throw FormatError("unknown dataset kind '" + ds.kind + "'", lineno);
  for (size_t i = 3; i < head.size(); ++i)
    if (head[i].rfind("cfg=", 0) == 0)
      out.cfg_hash = std::strtoull(head[i].c_str() + 4, nullptr, 16);
  std::vector<std::vector<HiddenFrame>> hidden;
  const bool hidden_actions = ds.kind == "video";
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') {
      if (line.rfind("# noise_p=", 0) == 0) {
        auto toks = split_ws(line.substr(2));
        for (const auto& tok : toks) {
          if (tok.rfind("noise_p=", 0) == 0) ds.noise_p = parse_double(tok.substr(8), lineno);
          if (tok.rfind("seed=", 0) == 0) ds.seed = std::strtoull(tok.c_str() + 5, nullptr, 10);
        }
      } else if (line.rfind("# traj ", 0) == 0) {
        auto toks = split_ws(line.substr(2));
        if (toks.size() >= 4 && toks[0] == "traj" && toks[2] == "world") {
          const long traj_id = parse_long(toks[1], lineno);
          if (traj_id == static_cast<long>(ds.trajs.size())) {
            ds.trajs.emplace_back();
            hidden.emplace_back();
            ds.world_ids.push_back(static_cast<int>(parse_long(toks[3], lineno)));
            GridPos target{-1, -1};
            if (toks.size() == 6 && toks[4] == "target") {
              const auto comma = toks[5].find(',');
              if (comma != std::string::npos) {
                target.r = static_cast<int>(parse_long(toks[5].substr(0, comma), lineno));
                target.c = static_cast<int>(parse_long(toks[5].substr(comma + 1), lineno));
              }
            }
            ds.targets.push_back(target);
          }
        }
      }
      continue;
    }
    auto toks = split_ws(line);
    if (toks.size() < 2 + kObsDim)
      throw FormatError("truncated frame line", lineno);
    const long traj_id = parse_long(toks[0], lineno);
    const long frame_idx = parse_long(toks[1], lineno);
    if (traj_id < 0 || traj_id > static_cast<long>(ds.trajs.size()))
      throw FormatError("trajectory ids must be contiguous", lineno);
    if (traj_id == static_cast<long>(ds.trajs.size())) {
      ds.trajs.emplace_back();
      hidden.emplace_back();
      ds.world_ids.push_back(0);
      ds.targets.push_back({-1, -1});
    }
    if (frame_idx != static_cast<long>(ds.trajs[static_cast<size_t>(traj_id)].size()))
      throw FormatError("frame indices must be contiguous", lineno);
    Frame fr;
    for (int k = 0; k < kObsDim; ++k)
      fr.obs.v[static_cast<size_t>(k)] = parse_double(toks[static_cast<size_t>(2 + k)], lineno);
    HiddenFrame hf;
    size_t pos = 2 + kObsDim;
    while (pos < toks.size()) {
      if (toks[pos].rfind("A:", 0) == 0) {
        const int action = static_cast<int>(parse_action(toks[pos].substr(2)));
        if (hidden_actions)
          hf.action = action;
        else
          fr.label = action;
        ++pos;
      } else if (toks[pos].rfind("P:", 0) == 0) {
        if (pos + 2 >= toks.size()) throw FormatError("truncated pose field", lineno);
        hf.pose.x = parse_double(toks[pos].substr(2), lineno);
        hf.pose.y = parse_double(toks[pos + 1], lineno);
        hf.pose.heading = static_cast<int>(parse_long(toks[pos + 2], lineno));
        hf.has_pose = true;
        pos += 3;
      } else {
        throw FormatError("unexpected token '" + toks[pos] + "'", lineno);
      }
    }
    ds.trajs[static_cast<size_t>(traj_id)].push_back(std::move(fr));
    hidden[static_cast<size_t>(traj_id)].push_back(hf);
  }
  for (const auto& traj : ds.trajs)
    if (traj.size() < 2) throw FormatError("trajectory shorter than 2 frames", lineno);
  bool any_hidden = false;
  for (const auto& htraj : hidden)
    for (const auto& h : htraj)
      if (h.action >= 0 || h.has_pose) any_hidden = true;
  if (any_hidden) ds.set_hidden(std::move(hidden), ds.kind == "interaction");
  return out;
}

inline void save_dataset(const VideoDataset& ds, const std::string& path,
                         std::uint64_t cfg_hash = 0) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open '" + path + "' for writing");
  f << dataset_to_string(ds, cfg_hash);
  if (!f) throw IoError("write failed for '" + path + "'");
}

inline LoadedDataset load_dataset(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << f.rdbuf();
  return dataset_from_string(ss.str());
}

}  // namespace vlv
