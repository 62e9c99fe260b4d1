#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <optional>

#include "vlv/world.hpp"

namespace vlv {

// ---------------------------------------------------------------------------
// Robot model: forward 0.25m, rotate +/-30deg, stop. Positions are continuous,
// headings snap to multiples of 30deg. x grows with columns, y with rows;
// heading 0 points along +x and Left increases the heading.
// ---------------------------------------------------------------------------

enum class Action : int { Forward = 0, Left = 1, Right = 2, Stop = 3 };

constexpr int kNumMoveActions = 3;  // Stop is handled by the policy layer

inline const char* action_name(Action a) {
  switch (a) {
    case Action::Forward: return "forward";
    case Action::Left: return "left";
    case Action::Right: return "right";
    case Action::Stop: return "stop";
  }
  return "?";
}

inline Action parse_action(const std::string& name) {
  for (int i = 0; i < 4; ++i)
    if (name == action_name(static_cast<Action>(i))) return static_cast<Action>(i);
  throw ValidationError("unknown action '" + name + "'");
}

constexpr double kForwardStep = 0.25;   // meters
constexpr double kAgentRadius = 0.10;   // meters
constexpr int kTurnDeg = 30;
constexpr int kNumHeadings = 12;

struct Pose {
  double x = 0.0;
  double y = 0.0;
  int heading = 0;  // degrees, multiple of 30 in [0, 330]

  int heading_index() const { return (heading / kTurnDeg) % kNumHeadings; }
  friend bool operator==(const Pose& a, const Pose& b) {
    return a.x == b.x && a.y == b.y && a.heading == b.heading;
  }
};

inline int wrap_heading(int deg) {
  deg %= 360;
  if (deg < 0) deg += 360;
  return deg;
}

inline double deg2rad(double d) { return d * M_PI / 180.0; }

// Pose at the center of a cell.
inline Pose cell_pose(const GridWorld& w, GridPos p, int heading) {
  return {w.center_x(p.c), w.center_y(p.r), wrap_heading(heading)};
}

// ---------------------------------------------------------------------------
// Collision: the agent is a disc of radius 0.10m; a placement is valid when
// no overlapped cell is occupied or out of bounds.
// ---------------------------------------------------------------------------

inline bool disc_free(const GridWorld& w, double x, double y,
                      double radius = kAgentRadius) {
  const int c0 = static_cast<int>(std::floor((x - radius) / w.cell_size));
  const int c1 = static_cast<int>(std::floor((x + radius) / w.cell_size));
  const int r0 = static_cast<int>(std::floor((y - radius) / w.cell_size));
  const int r1 = static_cast<int>(std::floor((y + radius) / w.cell_size));
  for (int r = r0; r <= r1; ++r) {
    for (int c = c0; c <= c1; ++c) {
      // Nearest point of the cell rectangle to the disc center.
      const double nx = std::clamp(x, c * w.cell_size, (c + 1) * w.cell_size);
      const double ny = std::clamp(y, r * w.cell_size, (r + 1) * w.cell_size);
      const double dx = x - nx, dy = y - ny;
      if (dx * dx + dy * dy < radius * radius - 1e-12) {
        if (!w.is_free(r, c)) return false;
      }
    }
  }
  return true;
}

inline Pose step(const GridWorld& w, const Pose& pose, Action action) {
  switch (action) {
    case Action::Forward: {
      const double rad = deg2rad(pose.heading);
      const double nx = pose.x + kForwardStep * std::cos(rad);
      const double ny = pose.y + kForwardStep * std::sin(rad);
      const double mx = pose.x + 0.5 * kForwardStep * std::cos(rad);
      const double my = pose.y + 0.5 * kForwardStep * std::sin(rad);
      if (disc_free(w, nx, ny) && disc_free(w, mx, my)) return {nx, ny, pose.heading};
      return pose;
    }
    case Action::Left:
      return {pose.x, pose.y, wrap_heading(pose.heading + kTurnDeg)};
    case Action::Right:
      return {pose.x, pose.y, wrap_heading(pose.heading - kTurnDeg)};
    case Action::Stop:
      return pose;
  }
  return pose;
}

// ---------------------------------------------------------------------------
// Raycast sensor. 15 rays over a 90deg field of view; per ray a depth
// (capped at 5m, stored normalized) and a 6-way one-hot over the category of
// the first object cell hit (walls and misses map to "none").
// ---------------------------------------------------------------------------

constexpr int kNumRays = 15;
constexpr int kRayStride = 1 + kNumCategories + 1;  // depth + 5 categories + none
constexpr int kObsDim = kNumRays * kRayStride;      // 105
constexpr double kDepthCap = 5.0;
constexpr double kFovDeg = 90.0;

struct Observation {
  std::array<double, kObsDim> v{};

  double depth_norm(int ray) const { return v[static_cast<size_t>(ray) * kRayStride]; }
  double depth_m(int ray) const { return depth_norm(ray) * kDepthCap; }
  // Category code of the ray hit, kNumCategories for none.
  int semantic(int ray) const {
    const size_t base = static_cast<size_t>(ray) * kRayStride + 1;
    for (int k = 0; k <= kNumCategories; ++k)
      if (v[base + static_cast<size_t>(k)] == 1.0) return k;
    return kNumCategories;
  }
  friend bool operator==(const Observation& a, const Observation& b) {
    return a.v == b.v;
  }
};

struct RayHit {
  double dist = kDepthCap;  // meters, capped
  int category = -1;        // -1: wall or nothing within range
};

// Grid traversal (Amanatides & Woo). Returns the distance to the boundary of
// the first occupied cell, capped at kDepthCap.
inline RayHit raycast(const GridWorld& w, double x, double y, double angle_deg) {
  const double rad = deg2rad(angle_deg);
  const double dx = std::cos(rad);
  const double dy = std::sin(rad);
  int c = static_cast<int>(std::floor(x / w.cell_size));
  int r = static_cast<int>(std::floor(y / w.cell_size));
  const int step_c = dx > 1e-15 ? 1 : (dx < -1e-15 ? -1 : 0);
  const int step_r = dy > 1e-15 ? 1 : (dy < -1e-15 ? -1 : 0);
  const double inv_dx = step_c != 0 ? 1.0 / dx : kInf;
  const double inv_dy = step_r != 0 ? 1.0 / dy : kInf;
  double t_max_x = step_c != 0
      ? ((step_c > 0 ? (c + 1) * w.cell_size - x : c * w.cell_size - x) * inv_dx)
      : kInf;
  double t_max_y = step_r != 0
      ? ((step_r > 0 ? (r + 1) * w.cell_size - y : r * w.cell_size - y) * inv_dy)
      : kInf;
  const double t_delta_x = step_c != 0 ? w.cell_size * std::abs(inv_dx) : kInf;
  const double t_delta_y = step_r != 0 ? w.cell_size * std::abs(inv_dy) : kInf;

  double t = 0.0;
  while (t <= kDepthCap + 1e-9) {
    if (!w.in_bounds(r, c)) return {kDepthCap, -1};
    if (w.at(r, c) == CellState::Occupied) {
      const int cat = w.object_at(r, c);
      return {std::min(t, kDepthCap), cat >= 0 ? cat : -1};
    }
    if (t_max_x < t_max_y) {
      t = t_max_x;
      t_max_x += t_delta_x;
      c += step_c;
    } else {
      t = t_max_y;
      t_max_y += t_delta_y;
      r += step_r;
    }
  }
  return {kDepthCap, -1};
}

inline double ray_angle(int heading, int ray) {
  return heading - kFovDeg / 2.0 + ray * (kFovDeg / (kNumRays - 1));
}

inline Observation render(const GridWorld& w, const Pose& pose) {
  Observation obs;
  for (int i = 0; i < kNumRays; ++i) {
    const RayHit hit = raycast(w, pose.x, pose.y, ray_angle(pose.heading, i));
    const size_t base = static_cast<size_t>(i) * kRayStride;
    obs.v[base] = hit.dist / kDepthCap;
    const int slot = hit.category >= 0 && hit.dist < kDepthCap + 1e-12 ? hit.category
                                                                       : kNumCategories;
    obs.v[base + 1 + static_cast<size_t>(slot)] = 1.0;
  }
  return obs;
}

// 12 views at headings h, h+30, ..., h+330.
struct Panorama {
  Pose base;
  std::array<Observation, kNumHeadings> views;
};

inline Panorama panorama(const GridWorld& w, const Pose& pose) {
  Panorama pano;
  pano.base = pose;
  for (int j = 0; j < kNumHeadings; ++j)
    pano.views[static_cast<size_t>(j)] =
        render(w, {pose.x, pose.y, wrap_heading(pose.heading + j * kTurnDeg)});
  return pano;
}

struct Visibility {
  bool visible = false;
  double distance = 0.0;  // median depth (meters) over rays hitting the category
};

inline Visibility visible(const GridWorld& w, const Pose& pose, Category cat) {
  const Observation obs = render(w, pose);
  std::vector<double> depths;
  for (int i = 0; i < kNumRays; ++i)
    if (obs.semantic(i) == static_cast<int>(cat)) depths.push_back(obs.depth_m(i));
  if (depths.empty()) return {false, 0.0};
  std::sort(depths.begin(), depths.end());
  const size_t n = depths.size();
  const double median = n % 2 ? depths[n / 2] : 0.5 * (depths[n / 2 - 1] + depths[n / 2]);
  return {true, median};
}

}  // namespace vlv
