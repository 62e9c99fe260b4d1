#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <queue>
#include <string>
#include <vector>

#include "vlv/detector.hpp"
#include "vlv/oracle.hpp"

namespace vlv {

// ---------------------------------------------------------------------------
// Occupancy grid built from depth rays, aligned with the world grid (perfect
// localization). Occupied marks are sticky; the agent's own cell is never
// left occupied.
// ---------------------------------------------------------------------------

enum class OccState : std::uint8_t { Unknown = 0, Free = 1, Occupied = 2 };

struct OccupancyGrid {
  int width = 0;
  int height = 0;
  double cell_size = 0.25;
  std::vector<OccState> cells;

  static OccupancyGrid unknown_like(const GridWorld& w) {
    OccupancyGrid g;
    g.width = w.width;
    g.height = w.height;
    g.cell_size = w.cell_size;
    g.cells.assign(static_cast<size_t>(w.width) * w.height, OccState::Unknown);
    return g;
  }
  // Fully known copy of the true map (planner tests and oracles).
  static OccupancyGrid from_world(const GridWorld& w) {
    OccupancyGrid g = unknown_like(w);
    for (size_t i = 0; i < w.cells.size(); ++i)
      g.cells[i] = w.cells[i] == CellState::Free ? OccState::Free : OccState::Occupied;
    return g;
  }

  bool in_bounds(int r, int c) const { return r >= 0 && r < height && c >= 0 && c < width; }
  OccState at(int r, int c) const { return cells[static_cast<size_t>(r) * width + c]; }
  GridPos cell_of(double x, double y) const {
    return {static_cast<int>(std::floor(y / cell_size)),
            static_cast<int>(std::floor(x / cell_size))};
  }

  // Integrates one rendered view. Cells crossed before the hit become Free
  // (unless already Occupied), the hit cell becomes Occupied. Returns whether
  // anything changed.
  bool observe(const Pose& pose, const Observation& obs) {
    bool changed = false;
    auto mark = [&](int r, int c, OccState state) {
      if (!in_bounds(r, c)) return;
      auto& cell = cells[static_cast<size_t>(r) * width + c];
      if (state == OccState::Free) {
        if (cell != OccState::Unknown) return;  // occupied is sticky
      } else if (cell == state) {
        return;
      }
      cell = state;
      changed = true;
    };
    for (int i = 0; i < kNumRays; ++i) {
      const double depth = obs.depth_m(i);
      const bool hit = depth < kDepthCap - 1e-9;
      const double rad = deg2rad(ray_angle(pose.heading, i));
      const double dx = std::cos(rad), dy = std::sin(rad);
      int c = static_cast<int>(std::floor(pose.x / cell_size));
      int r = static_cast<int>(std::floor(pose.y / cell_size));
      const int step_c = dx > 1e-15 ? 1 : (dx < -1e-15 ? -1 : 0);
      const int step_r = dy > 1e-15 ? 1 : (dy < -1e-15 ? -1 : 0);
      double t_max_x = step_c != 0
          ? ((step_c > 0 ? (c + 1) * cell_size - pose.x : c * cell_size - pose.x) / dx)
          : kInf;
      double t_max_y = step_r != 0
          ? ((step_r > 0 ? (r + 1) * cell_size - pose.y : r * cell_size - pose.y) / dy)
          : kInf;
      const double t_dx = step_c != 0 ? cell_size / std::abs(dx) : kInf;
      const double t_dy = step_r != 0 ? cell_size / std::abs(dy) : kInf;
      double t = 0.0;
      while (t < depth - 1e-9) {
        mark(r, c, OccState::Free);
        if (t_max_x < t_max_y) {
          t = t_max_x;
          t_max_x += t_dx;
          c += step_c;
        } else {
          t = t_max_y;
          t_max_y += t_dy;
          r += step_r;
        }
        if (!in_bounds(r, c)) break;
      }
      if (hit && in_bounds(r, c)) mark(r, c, OccState::Occupied);
    }
    const GridPos agent = cell_of(pose.x, pose.y);
    if (in_bounds(agent.r, agent.c)) {
      auto& cell = cells[static_cast<size_t>(agent.r) * width + agent.c];
      if (cell != OccState::Free) {
        cell = OccState::Free;
        changed = true;
      }
    }
    return changed;
  }
};

// Blocked mask after 1-cell obstacle inflation. Cells in `relax` skip the
// inflation (never true occupancy); used to keep the agent's own disc
// plannable when it stands close to a wall.
inline std::vector<std::uint8_t> blocked_mask(const OccupancyGrid& g,
                                              const std::vector<GridPos>* relax = nullptr) {
  std::vector<std::uint8_t> blocked(static_cast<size_t>(g.width) * g.height, 0);
  for (int r = 0; r < g.height; ++r)
    for (int c = 0; c < g.width; ++c) {
      if (g.at(r, c) == OccState::Occupied) {
        blocked[static_cast<size_t>(r) * g.width + c] = 1;
        continue;
      }
      for (int dr = -1; dr <= 1 && !blocked[static_cast<size_t>(r) * g.width + c]; ++dr)
        for (int dc = -1; dc <= 1; ++dc) {
          if (!g.in_bounds(r + dr, c + dc)) continue;
          if (g.at(r + dr, c + dc) == OccState::Occupied) {
            blocked[static_cast<size_t>(r) * g.width + c] = 1;
            break;
          }
        }
    }
  if (relax)
    for (const auto& p : relax[0])
      if (g.in_bounds(p.r, p.c) && g.at(p.r, p.c) != OccState::Occupied)
        blocked[static_cast<size_t>(p.r) * g.width + p.c] = 0;
  return blocked;
}

inline std::vector<GridPos> neighborhood9(GridPos p) {
  std::vector<GridPos> out;
  for (int dr = -1; dr <= 1; ++dr)
    for (int dc = -1; dc <= 1; ++dc) out.push_back({p.r + dr, p.c + dc});
  return out;
}

// ---------------------------------------------------------------------------
// Fast marching: first-order Godunov upwind solve of |grad T| = 1 over
// non-blocked cells, distances in meters. Unknown cells are traversable.
// ---------------------------------------------------------------------------

struct FmmField {
  int width = 0;
  int height = 0;
  double cell_size = 0.25;
  std::vector<double> d;

  double at(int r, int c) const { return d[static_cast<size_t>(r) * width + c]; }

  // Local extension around cell centers: min over the four surrounding
  // centers of T_i + |p - p_i|; +inf when all four are unreachable.
  double interp(double x, double y) const {
    const double fx = x / cell_size - 0.5;
    const double fy = y / cell_size - 0.5;
    const int c0 = static_cast<int>(std::floor(fx));
    const int r0 = static_cast<int>(std::floor(fy));
    double best = kInf;
    for (int dr = 0; dr <= 1; ++dr)
      for (int dc = 0; dc <= 1; ++dc) {
        const int r = r0 + dr, c = c0 + dc;
        if (r < 0 || r >= height || c < 0 || c >= width) continue;
        const double t = at(r, c);
        if (!std::isfinite(t)) continue;
        const double px = (c + 0.5) * cell_size, py = (r + 0.5) * cell_size;
        best = std::min(best, t + std::hypot(x - px, y - py));
      }
    return best;
  }
};

inline FmmField fmm_distance_field(const OccupancyGrid& grid, GridPos goal,
                                   const std::vector<std::uint8_t>& blocked) {
  if (!grid.in_bounds(goal.r, goal.c) ||
      blocked[static_cast<size_t>(goal.r) * grid.width + goal.c])
    throw GoalInObstacle("fmm_distance_field: goal cell not traversable");
  FmmField field;
  field.width = grid.width;
  field.height = grid.height;
  field.cell_size = grid.cell_size;
  const size_t n = static_cast<size_t>(grid.width) * grid.height;
  field.d.assign(n, kInf);
  std::vector<std::uint8_t> accepted(n, 0);
  const double h = grid.cell_size;

  using Entry = std::pair<double, int>;
  std::priority_queue<Entry, std::vector<Entry>, std::greater<Entry>> heap;
  const int goal_idx = goal.r * grid.width + goal.c;
  field.d[static_cast<size_t>(goal_idx)] = 0.0;
  heap.push({0.0, goal_idx});

  auto solve = [&](int r, int c) {
    auto axis_min = [&](int rr, int cc, int dr, int dc) {
      double best = kInf;
      if (rr + dr >= 0 && rr + dr < grid.height && cc + dc >= 0 && cc + dc < grid.width)
        best = std::min(best, field.d[static_cast<size_t>(rr + dr) * grid.width + cc + dc]);
      if (rr - dr >= 0 && rr - dr < grid.height && cc - dc >= 0 && cc - dc < grid.width)
        best = std::min(best, field.d[static_cast<size_t>(rr - dr) * grid.width + cc - dc]);
      return best;
    };
    const double a = axis_min(r, c, 0, 1);
    const double b = axis_min(r, c, 1, 0);
    if (!std::isfinite(a) && !std::isfinite(b)) return kInf;
    if (!std::isfinite(a)) return b + h;
    if (!std::isfinite(b)) return a + h;
    if (std::abs(a - b) >= h) return std::min(a, b) + h;
    return 0.5 * (a + b + std::sqrt(2.0 * h * h - (a - b) * (a - b)));
  };

  static const int kDr[4] = {-1, 1, 0, 0};
  static const int kDc[4] = {0, 0, -1, 1};
  while (!heap.empty()) {
    const auto [t, idx] = heap.top();
    heap.pop();
    if (accepted[static_cast<size_t>(idx)]) continue;
    accepted[static_cast<size_t>(idx)] = 1;
    const int r = idx / grid.width;
    const int c = idx % grid.width;
    for (int k = 0; k < 4; ++k) {
      const int nr = r + kDr[k], nc = c + kDc[k];
      if (nr < 0 || nr >= grid.height || nc < 0 || nc >= grid.width) continue;
      const int nidx = nr * grid.width + nc;
      if (accepted[static_cast<size_t>(nidx)] || blocked[static_cast<size_t>(nidx)]) continue;
      const double nt = solve(nr, nc);
      if (nt < field.d[static_cast<size_t>(nidx)]) {
        field.d[static_cast<size_t>(nidx)] = nt;
        heap.push({nt, nidx});
      }
    }
  }
  return field;
}

inline FmmField fmm_distance_field(const OccupancyGrid& grid, GridPos goal) {
  return fmm_distance_field(grid, goal, blocked_mask(grid));
}

// ---------------------------------------------------------------------------
// Combined direction score: semantic value, gated detector bonus, and a
// spatial-consistency term favouring nearby frontiers.
// ---------------------------------------------------------------------------

struct PolicyWeights {
  double l1 = 1.0;
  double l2 = 1.0;
  double l3 = 1.0;
};

inline double score_direction(double f_val, double det_conf, double est_geodesic_d,
                              const PolicyWeights& w) {
  const double det_term = det_conf >= 0.5 ? (1.0 + det_conf) : 0.0;
  const double dist_term = std::max(10.0 - est_geodesic_d, 0.0);
  return w.l1 * f_val + w.l2 * det_term + 0.05 * w.l3 * dist_term;
}

// ---------------------------------------------------------------------------
// Topological graph and the 12N-direction ledger. Scores are recomputed at
// every reasoning step with the current-map distance estimate; f and detector
// components are fixed at node creation. Popped directions never re-enter.
// ---------------------------------------------------------------------------

struct TopoNode {
  Pose pose;
  Panorama pano;
  std::array<double, kNumHeadings> f{};
  std::array<double, kNumHeadings> det{};
  std::array<std::vector<Detection>, kNumHeadings> detections;
};

struct DirectionEntry {
  int node = 0;
  int dir = 0;
  double angle_deg = 0.0;
  double f_val = 0.0;
  double det_conf = 0.0;
  double px = 0.0, py = 0.0;  // candidate point 1.5m out
  bool popped = false;
};

struct DirectionLedger {
  std::vector<DirectionEntry> entries;
  size_t pops = 0;

  size_t alive() const { return entries.size() - pops; }

  void push_node(int node_id, const TopoNode& node) {
    for (int j = 0; j < kNumHeadings; ++j) {
      DirectionEntry e;
      e.node = node_id;
      e.dir = j;
      e.angle_deg = wrap_heading(node.pose.heading + j * kTurnDeg);
      e.f_val = node.f[static_cast<size_t>(j)];
      e.det_conf = node.det[static_cast<size_t>(j)];
      e.px = node.pose.x + 1.5 * std::cos(deg2rad(e.angle_deg));
      e.py = node.pose.y + 1.5 * std::sin(deg2rad(e.angle_deg));
      entries.push_back(e);
    }
  }

  // Highest combined score under the given distance estimate; ties resolve
  // to the lower (node, dir). Returns entry index or nullopt when exhausted.
  std::optional<size_t> pop_best(const PolicyWeights& w,
                                 const std::function<double(double, double)>& dist_fn) {
    std::optional<size_t> best;
    double best_score = -kInf;
    for (size_t i = 0; i < entries.size(); ++i) {
      if (entries[i].popped) continue;
      const double score =
          score_direction(entries[i].f_val, entries[i].det_conf,
                          dist_fn(entries[i].px, entries[i].py), w);
      if (score > best_score) {
        best_score = score;
        best = i;
      }
    }
    if (best) {
      entries[*best].popped = true;
      ++pops;
    }
    return best;
  }
};

// Short-term goals in the popped direction: within +/-7 degrees, 1m to 2m
// from the parent node.
inline std::vector<std::pair<double, double>> sample_short_term_goals(
    const DirectionEntry& entry, const Pose& parent, int k, Rng& rng) {
  std::vector<std::pair<double, double>> goals;
  goals.reserve(static_cast<size_t>(k));
  for (int i = 0; i < k; ++i) {
    const double ang = deg2rad(entry.angle_deg + rng.uniform(-7.0, 7.0));
    const double radius = rng.uniform(1.0, 2.0);
    goals.emplace_back(parent.x + radius * std::cos(ang), parent.y + radius * std::sin(ang));
  }
  return goals;
}

// ---------------------------------------------------------------------------
// Low-level policy: FMM descent toward the first feasible short-term goal,
// re-planning as the map grows.
// ---------------------------------------------------------------------------

enum class NavOutcome { Success, Infeasible, Timeout, Aborted };

struct NavResult {
  NavOutcome outcome = NavOutcome::Infeasible;
  Pose pose;
  int steps = 0;
  double translated = 0.0;
};

// Called after every executed action; returning false aborts the episode
// (oracle stop or budget exhaustion decided by the caller).
using StepSink = std::function<bool(const Pose&, Action)>;

inline NavResult low_level_navigate(const GridWorld& world, Pose pose,
                                    const std::vector<std::pair<double, double>>& goals,
                                    OccupancyGrid& grid, const StepSink& sink) {
  if (goals.empty()) throw ValidationError("low_level_navigate: no goals");
  NavResult res;
  res.pose = pose;

  const GridPos agent_cell = grid.cell_of(pose.x, pose.y);
  auto relax = neighborhood9(agent_cell);
  auto blocked = blocked_mask(grid, &relax);

  // First goal that is plannable on the current map.
  std::optional<std::pair<double, double>> goal;
  FmmField field;
  for (const auto& g : goals) {
    const GridPos cell = grid.cell_of(g.first, g.second);
    if (!grid.in_bounds(cell.r, cell.c) ||
        blocked[static_cast<size_t>(cell.r) * grid.width + cell.c])
      continue;
    FmmField f = fmm_distance_field(grid, cell, blocked);
    if (std::isfinite(f.interp(pose.x, pose.y))) {
      goal = g;
      field = std::move(f);
      break;
    }
  }
  if (!goal) return res;  // Infeasible, nothing plannable

  const GridPos goal_cell = grid.cell_of(goal->first, goal->second);
  const double init_d = field.interp(pose.x, pose.y);
  const int step_budget =
      static_cast<int>(std::ceil(1.5 * (init_d / kForwardStep + kNumHeadings)));
  bool replan = false;
  while (true) {
    if (std::hypot(pose.x - goal->first, pose.y - goal->second) <= kForwardStep) {
      res.outcome = NavOutcome::Success;
      res.pose = pose;
      return res;
    }
    if (res.steps >= step_budget) {
      res.outcome = NavOutcome::Timeout;
      res.pose = pose;
      return res;
    }
    if (replan) {
      const GridPos cur_cell = grid.cell_of(pose.x, pose.y);
      auto relax_now = neighborhood9(cur_cell);
      blocked = blocked_mask(grid, &relax_now);
      if (blocked[static_cast<size_t>(goal_cell.r) * grid.width + goal_cell.c]) {
        res.outcome = NavOutcome::Infeasible;
        res.pose = pose;
        return res;
      }
      field = fmm_distance_field(grid, goal_cell, blocked);
      const double d_now = field.interp(pose.x, pose.y);
      if (!std::isfinite(d_now) || d_now > 2.0 * std::max(init_d, grid.cell_size)) {
        res.outcome = NavOutcome::Infeasible;
        res.pose = pose;
        return res;
      }
      replan = false;
    }
    // Descend: candidate successor positions after Forward / Left+Forward /
    // Right+Forward; strict improvement picks rotations, ties go Forward.
    const Action order[3] = {Action::Forward, Action::Left, Action::Right};
    Action best_act = Action::Forward;
    double best_val = kInf;
    for (Action a : order) {
      const int heading = a == Action::Forward
                              ? pose.heading
                              : wrap_heading(pose.heading + (a == Action::Left ? kTurnDeg : -kTurnDeg));
      const double rad = deg2rad(heading);
      const double val = field.interp(pose.x + kForwardStep * std::cos(rad),
                                      pose.y + kForwardStep * std::sin(rad));
      if (val < best_val - 1e-12) {
        best_val = val;
        best_act = a;
      }
    }
    const Pose next = step(world, pose, best_act);
    res.translated += std::hypot(next.x - pose.x, next.y - pose.y);
    pose = next;
    ++res.steps;
    if (sink && !sink(pose, best_act)) {
      res.outcome = NavOutcome::Aborted;
      res.pose = pose;
      return res;
    }
    if (grid.observe(pose, render(world, pose))) replan = true;
  }
}

// ---------------------------------------------------------------------------
// Stopping criterion.
// ---------------------------------------------------------------------------

struct StopConfig {
  double tau = 0.75;
  std::array<double, kNumCategories> d_c{1.0, 1.0, 1.0, 1.0, 1.0};
};

inline bool stopping_check(const std::vector<Detection>& detections, const StopConfig& cfg,
                           Category cat) {
  for (const auto& d : detections)
    if (d.category == cat && d.confidence >= cfg.tau &&
        d.est_distance <= cfg.d_c[static_cast<size_t>(cat)])
      return true;
  return false;
}

// ---------------------------------------------------------------------------
// Full episode loop: panorama -> score directions -> pop -> short-term goals
// -> low-level navigation, repeated. A reasoning step costs 12 rotation
// steps; a new topological node is stored whenever the agent moved since the
// previous one.
// ---------------------------------------------------------------------------

enum class StopMode { OracleStop, PolicyStop };

using DirectionScorer = std::function<double(const Panorama&, int, Category)>;

struct ReasoningSnapshot {
  std::vector<Detection> detections;  // union over the 12 views
  double true_dist = 0.0;
  double path_len = 0.0;
};

struct EpisodeConfig {
  PolicyWeights weights;
  DirectionScorer scorer;   // empty => f term identically 0
  DetectorConfig detector;
  StopConfig stop;
  StopMode mode = StopMode::OracleStop;
  int budget = 500;
  int goals_per_pop = 100;
  std::uint64_t seed = 0;
  bool record_reasoning = false;
  bool suppress_stop = false;  // calibration recording: never fire the stop
};

struct TrajPoint {
  int step = 0;
  Pose pose;
  Action action = Action::Stop;
  std::string event;
};

struct EpisodeResult {
  bool success = false;
  double path_len = 0.0;
  int steps = 0;
  int nodes = 0;
  size_t pops = 0;
  std::string stop_event;
  std::vector<TrajPoint> trajectory;
  std::vector<ReasoningSnapshot> snapshots;
};

inline EpisodeResult run_episode(const GridWorld& world, const Pose& start, Category cat,
                                 const EpisodeConfig& cfg) {
  EpisodeResult res;
  res.trajectory.push_back({0, start, Action::Stop, "start"});
  const bool oracle_mode = cfg.mode == StopMode::OracleStop;
  if (oracle_mode && true_distance(world, start.x, start.y, cat) <= 1.0) {
    res.success = true;
    res.stop_event = "oracle_stop";
    return res;
  }

  OccupancyGrid grid = OccupancyGrid::unknown_like(world);
  DirectionLedger ledger;
  std::vector<Pose> node_poses;
  Pose pose = start;
  Pose last_node_pose{-1e9, -1e9, 0};
  bool want_node = true;
  Rng goal_rng(mix_seed(cfg.seed, 0x60a1));

  bool done = false;
  auto finish = [&](bool success, const std::string& event) {
    res.success = success;
    res.stop_event = event;
    done = true;
  };

  // Executed-action hook: budget accounting, trajectory, oracle stop.
  auto sink = [&](const Pose& p, Action a) -> bool {
    ++res.steps;
    res.trajectory.push_back({res.steps, p, a, ""});
    if (oracle_mode && true_distance(world, p.x, p.y, cat) <= 1.0) {
      finish(true, "oracle_stop");
      return false;
    }
    if (res.steps >= cfg.budget) {
      finish(false, "budget");
      return false;
    }
    return true;
  };

  while (!done) {
    if (want_node &&
        std::hypot(pose.x - last_node_pose.x, pose.y - last_node_pose.y) > kForwardStep) {
      // Reasoning step: capture the panorama (12 rotation steps).
      if (res.steps + kNumHeadings > cfg.budget) {
        finish(false, "budget");
        break;
      }
      res.steps += kNumHeadings;
      TopoNode node;
      node.pose = pose;
      node.pano = panorama(world, pose);
      const int node_id = res.nodes;
      for (int j = 0; j < kNumHeadings; ++j) {
        const Pose view_pose{pose.x, pose.y, wrap_heading(pose.heading + j * kTurnDeg)};
        grid.observe(view_pose, node.pano.views[static_cast<size_t>(j)]);
        node.f[static_cast<size_t>(j)] =
            cfg.scorer ? cfg.scorer(node.pano, j, cat) : 0.0;
        const bool need_detect = cfg.weights.l2 > 0.0 || cfg.mode == StopMode::PolicyStop ||
                                 cfg.record_reasoning;
        if (need_detect) {
          node.detections[static_cast<size_t>(j)] =
              detect(node.pano.views[static_cast<size_t>(j)], cfg.detector,
                     mix_seed(cfg.seed, static_cast<std::uint64_t>(node_id),
                              static_cast<std::uint64_t>(j)));
          node.det[static_cast<size_t>(j)] =
              max_confidence(node.detections[static_cast<size_t>(j)], cat);
        }
      }
      ++res.nodes;
      last_node_pose = pose;
      node_poses.push_back(pose);
      ledger.push_node(node_id, node);
      res.trajectory.push_back({res.steps, pose, Action::Stop, "reasoning"});

      std::vector<Detection> all_dets;
      for (const auto& view_dets : node.detections)
        all_dets.insert(all_dets.end(), view_dets.begin(), view_dets.end());
      if (cfg.record_reasoning) {
        res.snapshots.push_back({all_dets, true_distance(world, pose.x, pose.y, cat),
                                 res.path_len});
      }
      if (cfg.mode == StopMode::PolicyStop && !cfg.suppress_stop &&
          stopping_check(all_dets, cfg.stop, cat)) {
        const bool at_goal = true_distance(world, pose.x, pose.y, cat) <= 1.0;
        finish(at_goal, at_goal ? "policy_stop" : "policy_stop_wrong");
        break;
      }
      if (res.steps >= cfg.budget) {
        finish(false, "budget");
        break;
      }
    }
    want_node = true;

    // Current-map distance estimates for the combined score.
    const GridPos agent_cell = grid.cell_of(pose.x, pose.y);
    auto relax = neighborhood9(agent_cell);
    const auto blocked = blocked_mask(grid, &relax);
    FmmField agent_field = fmm_distance_field(grid, agent_cell, blocked);
    auto dist_fn = [&agent_field](double x, double y) { return agent_field.interp(x, y); };

    const auto popped = ledger.pop_best(cfg.weights, dist_fn);
    if (!popped) {
      finish(false, "heap_exhausted");
      break;
    }
    const DirectionEntry& entry = ledger.entries[*popped];
    const auto goals = sample_short_term_goals(
        entry, node_poses[static_cast<size_t>(entry.node)], cfg.goals_per_pop, goal_rng);

    const Pose before = pose;
    NavResult nav = low_level_navigate(world, pose, goals, grid, sink);
    pose = nav.pose;
    res.path_len += nav.translated;
    if (done) break;  // sink aborted inside navigation
    if (nav.outcome == NavOutcome::Infeasible && nav.steps == 0 &&
        std::hypot(pose.x - before.x, pose.y - before.y) < 1e-12) {
      // Nothing plannable in that direction; pop the next one without
      // storing a duplicate node.
      want_node = false;
    }
  }
  res.pops = ledger.pops;
  if (!res.trajectory.empty()) res.trajectory.back().event += "|" + res.stop_event;
  return res;
}

// ---------------------------------------------------------------------------
// Per-category stopping-distance calibration from recorded episodes: pick the
// d_c maximizing Policy-Stop SPL, ties toward the smaller value. Recording an
// episode once suffices because stopping only truncates the trajectory.
// ---------------------------------------------------------------------------

struct RecordedEpisode {
  Category cat = Category::Bed;
  double l = 0.0;  // reference path length
  std::vector<ReasoningSnapshot> snapshots;
};

inline StopConfig calibrate_dc(const std::vector<RecordedEpisode>& recordings,
                               const std::vector<double>& candidates, double tau = 0.75) {
  if (recordings.empty()) throw ValidationError("calibrate_dc: no recordings");
  if (candidates.empty()) throw ValidationError("calibrate_dc: no candidates");
  StopConfig best;
  best.tau = tau;
  for (int c = 0; c < kNumCategories; ++c) {
    double best_spl = -1.0;
    double best_dc = candidates.front();
    for (double dc : candidates) {
      StopConfig probe;
      probe.tau = tau;
      probe.d_c.fill(dc);
      double total = 0.0;
      int count = 0;
      for (const auto& rec : recordings) {
        if (rec.cat != static_cast<Category>(c)) continue;
        ++count;
        for (const auto& snap : rec.snapshots) {
          if (!stopping_check(snap.detections, probe, rec.cat)) continue;
          if (snap.true_dist <= 1.0)
            total += rec.l / std::max(snap.path_len, rec.l);
          break;  // first firing snapshot ends the episode
        }
      }
      const double spl = count ? total / count : 0.0;
      if (spl > best_spl + 1e-12) {
        best_spl = spl;
        best_dc = dc;
      }
    }
    best.d_c[static_cast<size_t>(c)] = best_dc;
  }
  return best;
}

// Trajectory dump: "<step> <x> <y> <heading> <action> <event>" per line.
inline std::string trajectory_to_string(const EpisodeResult& res, std::uint64_t cfg_hash = 0) {
  std::ostringstream os;
  os << "VLVTRAJ 1";
  if (cfg_hash != 0) os << " cfg=" << hash_hex(cfg_hash);
  os << "\n";
  for (const auto& p : res.trajectory)
    os << p.step << " " << format_double(p.pose.x) << " " << format_double(p.pose.y) << " "
       << p.pose.heading << " " << action_name(p.action) << " "
       << (p.event.empty() ? "-" : p.event) << "\n";
  return os.str();
}

}  // namespace vlv
