#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <fstream>
#include <sstream>
#include <vector>

#include "vlv/videodata.hpp"

namespace vlv {

// ---------------------------------------------------------------------------
// Simulated object detector. For every category present in the view it fires
// with probability 1 - p_false_neg; confidence grows with ray coverage and
// shrinks with distance, plus gaussian noise. Absent categories fire
// spuriously with probability p_false_pos.
// ---------------------------------------------------------------------------

struct Detection {
  Category category = Category::Bed;
  double confidence = 0.0;    // in [0, 1]
  double est_distance = 0.0;  // meters, median depth over hitting rays
};

struct DetectorConfig {
  double p_false_neg = 0.10;
  double p_false_pos = 0.02;
  double confidence_noise_sigma = 0.05;
  std::uint64_t seed = 0;

  void validate() const {
    if (!(p_false_neg >= 0.0 && p_false_neg < 1.0) ||
        !(p_false_pos >= 0.0 && p_false_pos < 1.0) || confidence_noise_sigma < 0.0)
      throw ValidationError("DetectorConfig: probabilities must be in [0,1)");
  }
};

// Noise-free confidence: coverage fraction scaled by closeness.
inline double detection_confidence(double coverage_fraction, double min_depth_m) {
  return clamp01(coverage_fraction * (1.0 - min_depth_m / kDepthCap));
}

inline std::vector<Detection> detect(const Observation& obs, const DetectorConfig& cfg,
                                     std::uint64_t rng_key) {
  cfg.validate();
  std::vector<Detection> out;
  for (int cat = 0; cat < kNumCategories; ++cat) {
    Rng rng(mix_seed(cfg.seed, 0xde7ec7, rng_key, static_cast<std::uint64_t>(cat)));
    std::vector<double> depths;
    for (int ray = 0; ray < kNumRays; ++ray)
      if (obs.semantic(ray) == cat) depths.push_back(obs.depth_m(ray));
    if (!depths.empty()) {
      const double u = rng.uniform();
      const double noise = rng.gaussian() * cfg.confidence_noise_sigma;
      if (u < 1.0 - cfg.p_false_neg) {
        std::sort(depths.begin(), depths.end());
        const size_t n = depths.size();
        const double median =
            n % 2 ? depths[n / 2] : 0.5 * (depths[n / 2 - 1] + depths[n / 2]);
        const double coverage = static_cast<double>(n) / kNumRays;
        out.push_back({static_cast<Category>(cat),
                       clamp01(detection_confidence(coverage, depths.front()) + noise),
                       median});
      }
    } else if (rng.bernoulli(cfg.p_false_pos)) {
      out.push_back({static_cast<Category>(cat), rng.uniform(0.3, 0.7), rng.uniform(0.5, 5.0)});
    }
  }
  return out;
}

// Max confidence over detections of one category; 0 when absent.
inline double max_confidence(const std::vector<Detection>& dets, Category cat) {
  double best = 0.0;
  for (const auto& d : dets)
    if (d.category == cat) best = std::max(best, d.confidence);
  return best;
}

// ---------------------------------------------------------------------------
// Transition quadruples: the Q-learning training record.
// ---------------------------------------------------------------------------

struct TransitionQuadruple {
  Observation obs;
  int action = 0;  // pseudo or true movement action
  Observation next;
  std::array<std::uint8_t, kNumCategories> reward{};
};

struct RewardLabeling {
  std::vector<TransitionQuadruple> quads;
  std::array<double, kNumCategories> thresholds{};  // top-10% confidence cutoffs
  // Per trajectory, per frame, per category reward bit.
  std::vector<std::vector<std::array<std::uint8_t, kNumCategories>>> frame_rewards;
};

// Run the detector on every frame, mark the top-10% scoring detections per
// category (dataset-wide percentile) as reward frames, and assemble
// quadruples taking the reward from the successor frame.
inline RewardLabeling label_rewards(const VideoDataset& videos, const DetectorConfig& cfg) {
  if (videos.trajs.empty()) throw EmptyDataset("label_rewards: empty dataset");
  bool any_label = false;
  for (const auto& traj : videos.trajs)
    for (size_t i = 0; i + 1 < traj.size(); ++i)
      if (traj[i].has_label()) any_label = true;
  if (!any_label) throw ValidationError("label_rewards: dataset has no action labels");

  RewardLabeling out;
  std::array<std::vector<double>, kNumCategories> confidences;
  std::vector<std::vector<std::array<double, kNumCategories>>> conf_per_frame(
      videos.trajs.size());
  for (size_t t = 0; t < videos.trajs.size(); ++t) {
    conf_per_frame[t].resize(videos.trajs[t].size());
    for (size_t i = 0; i < videos.trajs[t].size(); ++i) {
      const auto dets = detect(videos.trajs[t][i].obs, cfg, mix_seed(t, i));
      auto& row = conf_per_frame[t][i];
      row.fill(-1.0);
      for (const auto& d : dets) {
        const size_t c = static_cast<size_t>(d.category);
        if (d.confidence > row[c]) row[c] = d.confidence;
        confidences[c].push_back(d.confidence);
      }
    }
  }
  // k-th largest positive confidence with k = max(1, floor(0.1 n)); a dataset
  // with no detections for a category never rewards it.
  for (int c = 0; c < kNumCategories; ++c) {
    auto& vals = confidences[static_cast<size_t>(c)];
    if (vals.empty()) {
      out.thresholds[static_cast<size_t>(c)] = kInf;
      continue;
    }
    const size_t k = std::max<size_t>(1, vals.size() / 10);
    std::nth_element(vals.begin(), vals.begin() + static_cast<long>(k - 1), vals.end(),
                     std::greater<double>());
    out.thresholds[static_cast<size_t>(c)] = vals[k - 1];
  }
  out.frame_rewards.resize(videos.trajs.size());
  for (size_t t = 0; t < videos.trajs.size(); ++t) {
    out.frame_rewards[t].resize(videos.trajs[t].size());
    for (size_t i = 0; i < videos.trajs[t].size(); ++i)
      for (int c = 0; c < kNumCategories; ++c)
        out.frame_rewards[t][i][static_cast<size_t>(c)] =
            conf_per_frame[t][i][static_cast<size_t>(c)] >=
                    out.thresholds[static_cast<size_t>(c)]
                ? 1
                : 0;
  }
  for (size_t t = 0; t < videos.trajs.size(); ++t)
    for (size_t i = 0; i + 1 < videos.trajs[t].size(); ++i) {
      if (!videos.trajs[t][i].has_label()) continue;
      TransitionQuadruple q;
      q.obs = videos.trajs[t][i].obs;
      q.action = videos.trajs[t][i].label;
      q.next = videos.trajs[t][i + 1].obs;
      q.reward = out.frame_rewards[t][i + 1];
      out.quads.push_back(std::move(q));
    }
  return out;
}

// Ablation labeling: reward a frame when its held-back pose lies within 1m of
// an instance of the category. Needs an unlocked handle with poses.
inline RewardLabeling true_reward_label(const VideoDataset& videos,
                                        const std::vector<GridWorld>& worlds) {
  if (videos.trajs.empty()) throw EmptyDataset("true_reward_label: empty dataset");
  if (!videos.hidden_readable() || !videos.has_hidden())
    throw ValidationError("true_reward_label: dataset has no readable poses");
  RewardLabeling out;
  out.thresholds.fill(kInf);
  out.frame_rewards.resize(videos.trajs.size());
  for (size_t t = 0; t < videos.trajs.size(); ++t) {
    const GridWorld& w = worlds.at(static_cast<size_t>(videos.world_ids[t]));
    out.frame_rewards[t].resize(videos.trajs[t].size());
    for (size_t i = 0; i < videos.trajs[t].size(); ++i) {
      const HiddenFrame& h = videos.hidden(t, i);
      if (!h.has_pose) throw ValidationError("true_reward_label: frame without pose");
      for (int c = 0; c < kNumCategories; ++c)
        out.frame_rewards[t][i][static_cast<size_t>(c)] =
            true_distance(w, h.pose.x, h.pose.y, static_cast<Category>(c)) <= 1.0 ? 1 : 0;
    }
  }
  for (size_t t = 0; t < videos.trajs.size(); ++t)
    for (size_t i = 0; i + 1 < videos.trajs[t].size(); ++i) {
      if (!videos.trajs[t][i].has_label()) continue;
      TransitionQuadruple q;
      q.obs = videos.trajs[t][i].obs;
      q.action = videos.trajs[t][i].label;
      q.next = videos.trajs[t][i + 1].obs;
      q.reward = out.frame_rewards[t][i + 1];
      out.quads.push_back(std::move(q));
    }
  return out;
}

// ---------------------------------------------------------------------------
// Quadruples file format.
//   VLVQUAD 1 [cfg=<hex>]
//   <o_t floats> <action> <o_next floats> <r_bed> <r_chair> <r_couch> <r_table> <r_toilet>
// ---------------------------------------------------------------------------

inline std::string quads_to_string(const std::vector<TransitionQuadruple>& quads,
                                   std::uint64_t cfg_hash = 0) {
  std::ostringstream os;
  os << "VLVQUAD 1";
  if (cfg_hash != 0) os << " cfg=" << hash_hex(cfg_hash);
  os << "\n";
  for (const auto& q : quads) {
    for (double v : q.obs.v) os << format_double(v) << " ";
    os << action_name(static_cast<Action>(q.action));
    for (double v : q.next.v) os << " " << format_double(v);
    for (int c = 0; c < kNumCategories; ++c)
      os << " " << static_cast<int>(q.reward[static_cast<size_t>(c)]);
    os << "\n";
  }
  return os.str();
}

struct LoadedQuads {
  std::vector<TransitionQuadruple> quads;
  std::uint64_t cfg_hash = 0;
};

inline LoadedQuads quads_from_string(const std::string& text) {
  std::istringstream is(text);
  std::string line;
  long lineno = 1;
  if (!std::getline(is, line)) throw FormatError("empty file", 0);
  auto head = split_ws(line);
  if (head.size() < 2 || head[0] != "VLVQUAD" || head[1] != "1")
    throw FormatError("bad magic, expected 'VLVQUAD 1'", lineno);
  LoadedQuads out;
  for (size_t i = 2; i < head.size(); ++i)
    if (head[i].rfind("cfg=", 0) == 0)
      out.cfg_hash = std::strtoull(head[i].c_str() + 4, nullptr, 16);
  const size_t expect = 2 * kObsDim + 1 + kNumCategories;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty()) continue;
    auto toks = split_ws(line);
    if (toks.size() != expect) throw FormatError("truncated quadruple line", lineno);
    TransitionQuadruple q;
    size_t pos = 0;
    for (int k = 0; k < kObsDim; ++k)
      q.obs.v[static_cast<size_t>(k)] = parse_double(toks[pos++], lineno);
    q.action = static_cast<int>(parse_action(toks[pos++]));
    for (int k = 0; k < kObsDim; ++k)
      q.next.v[static_cast<size_t>(k)] = parse_double(toks[pos++], lineno);
    for (int c = 0; c < kNumCategories; ++c) {
      const long r = parse_long(toks[pos++], lineno);
      if (r != 0 && r != 1) throw FormatError("reward bits must be 0 or 1", lineno);
      q.reward[static_cast<size_t>(c)] = static_cast<std::uint8_t>(r);
    }
    out.quads.push_back(std::move(q));
  }
  return out;
}

inline void save_quads(const std::vector<TransitionQuadruple>& quads, const std::string& path,
                       std::uint64_t cfg_hash = 0) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open '" + path + "' for writing");
  f << quads_to_string(quads, cfg_hash);
  if (!f) throw IoError("write failed for '" + path + "'");
}

inline LoadedQuads load_quads(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << f.rdbuf();
  return quads_from_string(ss.str());
}

}  // namespace vlv
