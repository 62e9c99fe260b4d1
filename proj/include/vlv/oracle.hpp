#pragma once

#include <cstdint>
#include <vector>

#include "vlv/sim.hpp"

namespace vlv {

// ---------------------------------------------------------------------------
// Discrete pose graph used for ground-truth step counts and for scripting
// camera tours: states are (cell, heading index) with headings every 30deg.
// Forward moves one cell in the compass direction nearest to the heading
// (cardinal for cardinal headings, diagonal otherwise); rotations change the
// heading index by one. Every transition costs one step.
// ---------------------------------------------------------------------------

struct PoseNode {
  GridPos cell;
  int hi = 0;  // heading index, heading = hi * 30 degrees
};

inline int pose_id(const GridWorld& w, GridPos p, int hi) {
  return (p.r * w.width + p.c) * kNumHeadings + hi;
}

inline PoseNode pose_from_id(const GridWorld& w, int id) {
  const int hi = id % kNumHeadings;
  const int cell = id / kNumHeadings;
  return {{cell / w.width, cell % w.width}, hi};
}

// Offset of the compass direction nearest to heading hi*30.
inline GridPos forward_offset(int hi) {
  static const int kDr[8] = {0, 1, 1, 1, 0, -1, -1, -1};
  static const int kDc[8] = {1, 1, 0, -1, -1, -1, 0, 1};
  const int d8 = static_cast<int>(std::lround(hi * 30.0 / 45.0)) % 8;
  return {kDr[d8], kDc[d8]};
}

// Destination cell of a Forward from (cell, hi), or nullopt when blocked.
// Diagonal moves need both orthogonal neighbours free.
inline std::optional<GridPos> pose_forward_cell(const GridWorld& w, GridPos cell, int hi) {
  const GridPos off = forward_offset(hi);
  const GridPos to{cell.r + off.r, cell.c + off.c};
  if (!w.is_free(to.r, to.c)) return std::nullopt;
  if (off.r != 0 && off.c != 0 &&
      (!w.is_free(cell.r + off.r, cell.c) || !w.is_free(cell.r, cell.c + off.c)))
    return std::nullopt;
  return to;
}

inline PoseNode pose_step(const GridWorld& w, PoseNode p, Action a) {
  switch (a) {
    case Action::Forward: {
      const auto to = pose_forward_cell(w, p.cell, p.hi);
      return to ? PoseNode{*to, p.hi} : p;
    }
    case Action::Left: return {p.cell, (p.hi + 1) % kNumHeadings};
    case Action::Right: return {p.cell, (p.hi + kNumHeadings - 1) % kNumHeadings};
    case Action::Stop: return p;
  }
  return p;
}

inline Pose pose_of(const GridWorld& w, PoseNode p) {
  return cell_pose(w, p.cell, p.hi * kTurnDeg);
}

// ---------------------------------------------------------------------------
// Steps-to-view fields. s(pose) is the minimum number of pose-graph steps to
// reach any pose from which the category is visible within sensor range;
// -1 where no view pose is reachable.
// ---------------------------------------------------------------------------

inline std::vector<std::uint8_t> view_pose_mask(const GridWorld& w, Category cat) {
  std::vector<std::uint8_t> mask(static_cast<size_t>(w.width) * w.height * kNumHeadings, 0);
  for (int r = 0; r < w.height; ++r)
    for (int c = 0; c < w.width; ++c) {
      if (w.at(r, c) != CellState::Free) continue;
      for (int hi = 0; hi < kNumHeadings; ++hi)
        if (visible(w, cell_pose(w, {r, c}, hi * kTurnDeg), cat).visible)
          mask[static_cast<size_t>(pose_id(w, {r, c}, hi))] = 1;
    }
  return mask;
}

// Multi-source BFS over reversed pose-graph edges from all view poses.
inline std::vector<std::int32_t> oracle_steps_field(const GridWorld& w, Category cat) {
  const auto views = view_pose_mask(w, cat);
  const size_t n = views.size();
  std::vector<std::int32_t> steps(n, -1);
  std::vector<int> frontier, next;
  for (size_t i = 0; i < n; ++i)
    if (views[i]) {
      steps[i] = 0;
      frontier.push_back(static_cast<int>(i));
    }
  std::int32_t depth = 0;
  while (!frontier.empty()) {
    ++depth;
    next.clear();
    for (int id : frontier) {
      const PoseNode p = pose_from_id(w, id);
      // Rotation predecessors.
      const int ids[2] = {pose_id(w, p.cell, (p.hi + 1) % kNumHeadings),
                          pose_id(w, p.cell, (p.hi + kNumHeadings - 1) % kNumHeadings)};
      for (int pid : ids)
        if (steps[static_cast<size_t>(pid)] < 0) {
          steps[static_cast<size_t>(pid)] = depth;
          next.push_back(pid);
        }
      // Forward predecessor: the cell whose forward lands on p.cell.
      const GridPos off = forward_offset(p.hi);
      const GridPos from{p.cell.r - off.r, p.cell.c - off.c};
      if (w.is_free(from.r, from.c)) {
        const auto to = pose_forward_cell(w, from, p.hi);
        if (to && *to == p.cell) {
          const int pid = pose_id(w, from, p.hi);
          if (steps[static_cast<size_t>(pid)] < 0) {
            steps[static_cast<size_t>(pid)] = depth;
            next.push_back(pid);
          }
        }
      }
    }
    frontier.swap(next);
  }
  return steps;
}

// Steps from a specific pose; -1 when unreachable.
inline std::int32_t oracle_steps(const GridWorld& w, PoseNode pose, Category cat) {
  const auto field = oracle_steps_field(w, cat);
  return field[static_cast<size_t>(pose_id(w, pose.cell, pose.hi))];
}

// gamma^s with s minimized over headings at the cell; 1.0 when some heading
// at the cell already views the category, 0.0 when unreachable.
inline double oracle_value(const GridWorld& w, GridPos cell, Category cat, double gamma) {
  if (!(gamma > 0.0 && gamma < 1.0)) throw ValidationError("oracle_value: gamma not in (0,1)");
  if (!w.is_free(cell.r, cell.c)) throw ValidationError("oracle_value: cell not free");
  const auto field = oracle_steps_field(w, cat);
  std::int32_t best = -1;
  for (int hi = 0; hi < kNumHeadings; ++hi) {
    const std::int32_t s = field[static_cast<size_t>(pose_id(w, cell, hi))];
    if (s >= 0 && (best < 0 || s < best)) best = s;
  }
  return best < 0 ? 0.0 : std::pow(gamma, best);
}

// Precomputed per-category steps fields for one world.
struct OracleFields {
  const GridWorld* world = nullptr;
  std::array<std::vector<std::int32_t>, kNumCategories> steps;

  explicit OracleFields(const GridWorld& w) : world(&w) {
    for (int c = 0; c < kNumCategories; ++c)
      steps[static_cast<size_t>(c)] = oracle_steps_field(w, static_cast<Category>(c));
  }
  std::int32_t at(PoseNode p, Category cat) const {
    return steps[static_cast<size_t>(cat)][static_cast<size_t>(pose_id(*world, p.cell, p.hi))];
  }
  double value(PoseNode p, Category cat, double gamma) const {
    const std::int32_t s = at(p, cat);
    return s < 0 ? 0.0 : std::pow(gamma, s);
  }
};

// ---------------------------------------------------------------------------
// Pose-graph distance field toward a goal cell set: BFS over reversed edges,
// used to script shortest-path camera tours.
// ---------------------------------------------------------------------------

inline std::vector<std::int32_t> pose_distance_field(const GridWorld& w,
                                                     const std::vector<std::uint8_t>& goal_cells) {
  const size_t n = static_cast<size_t>(w.width) * w.height * kNumHeadings;
  std::vector<std::int32_t> steps(n, -1);
  std::vector<int> frontier, next;
  for (int r = 0; r < w.height; ++r)
    for (int c = 0; c < w.width; ++c) {
      if (w.at(r, c) != CellState::Free) continue;
      if (!goal_cells[static_cast<size_t>(r) * w.width + c]) continue;
      for (int hi = 0; hi < kNumHeadings; ++hi) {
        const int id = pose_id(w, {r, c}, hi);
        steps[static_cast<size_t>(id)] = 0;
        frontier.push_back(id);
      }
    }
  std::int32_t depth = 0;
  while (!frontier.empty()) {
    ++depth;
    next.clear();
    for (int id : frontier) {
      const PoseNode p = pose_from_id(w, id);
      const int ids[2] = {pose_id(w, p.cell, (p.hi + 1) % kNumHeadings),
                          pose_id(w, p.cell, (p.hi + kNumHeadings - 1) % kNumHeadings)};
      for (int pid : ids)
        if (steps[static_cast<size_t>(pid)] < 0) {
          steps[static_cast<size_t>(pid)] = depth;
          next.push_back(pid);
        }
      const GridPos off = forward_offset(p.hi);
      const GridPos from{p.cell.r - off.r, p.cell.c - off.c};
      if (w.is_free(from.r, from.c)) {
        const auto to = pose_forward_cell(w, from, p.hi);
        if (to && *to == p.cell) {
          const int pid = pose_id(w, from, p.hi);
          if (steps[static_cast<size_t>(pid)] < 0) {
            steps[static_cast<size_t>(pid)] = depth;
            next.push_back(pid);
          }
        }
      }
    }
    frontier.swap(next);
  }
  return steps;
}

}  // namespace vlv
