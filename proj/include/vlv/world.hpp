#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <fstream>
#include <queue>
#include <sstream>
#include <string>
#include <vector>

#include "vlv/common.hpp"

namespace vlv {

// ---------------------------------------------------------------------------
// Semantic object categories. Codes are stable and used in file formats,
// one-hot encodings and reward vectors.
// ---------------------------------------------------------------------------

enum class Category : int { Bed = 0, Chair = 1, Couch = 2, DiningTable = 3, Toilet = 4 };

constexpr int kNumCategories = 5;

inline const char* category_name(Category c) {
  switch (c) {
    case Category::Bed: return "bed";
    case Category::Chair: return "chair";
    case Category::Couch: return "couch";
    case Category::DiningTable: return "dining_table";
    case Category::Toilet: return "toilet";
  }
  return "?";
}

inline Category parse_category(const std::string& name) {
  for (int i = 0; i < kNumCategories; ++i)
    if (name == category_name(static_cast<Category>(i))) return static_cast<Category>(i);
  throw ValidationError("unknown category '" + name + "'");
}

enum class CellState : std::uint8_t { Free = 0, Occupied = 1 };

struct GridPos {
  int r = 0;
  int c = 0;
  friend bool operator==(const GridPos& a, const GridPos& b) {
    return a.r == b.r && a.c == b.c;
  }
  friend bool operator<(const GridPos& a, const GridPos& b) {
    return a.r != b.r ? a.r < b.r : a.c < b.c;
  }
};

struct ObjectInstance {
  Category category = Category::Bed;
  std::vector<GridPos> cells;  // occupied cells the object sits on
};

// ---------------------------------------------------------------------------
// GridWorld: occupancy plus semantic object instances on a square cell grid.
// Pure value type; construction never mutates after the object map is built.
// ---------------------------------------------------------------------------

struct GridWorld {
  int width = 0;   // columns
  int height = 0;  // rows
  double cell_size = 0.25;  // meters
  std::uint64_t seed = 0;
  std::vector<CellState> cells;      // row-major [r * width + c]
  std::vector<ObjectInstance> objects;
  std::vector<std::int8_t> object_cat;  // -1 = no object; else category code

  bool in_bounds(int r, int c) const {
    return r >= 0 && r < height && c >= 0 && c < width;
  }
  CellState at(int r, int c) const { return cells[static_cast<size_t>(r) * width + c]; }
  bool is_free(int r, int c) const {
    return in_bounds(r, c) && at(r, c) == CellState::Free;
  }
  std::int8_t object_at(int r, int c) const {
    return object_cat[static_cast<size_t>(r) * width + c];
  }
  double center_x(int c) const { return (c + 0.5) * cell_size; }
  double center_y(int r) const { return (r + 0.5) * cell_size; }
  GridPos cell_of(double x, double y) const {
    return {static_cast<int>(std::floor(y / cell_size)),
            static_cast<int>(std::floor(x / cell_size))};
  }

  void rebuild_object_map() {
    object_cat.assign(static_cast<size_t>(width) * height, -1);
    for (const auto& obj : objects)
      for (const auto& p : obj.cells)
        object_cat[static_cast<size_t>(p.r) * width + p.c] =
            static_cast<std::int8_t>(obj.category);
  }

  std::vector<GridPos> instance_cells(Category cat) const {
    std::vector<GridPos> out;
    for (const auto& obj : objects)
      if (obj.category == cat)
        out.insert(out.end(), obj.cells.begin(), obj.cells.end());
    return out;
  }

  bool has_category(Category cat) const {
    for (const auto& obj : objects)
      if (obj.category == cat) return true;
    return false;
  }

  friend bool operator==(const GridWorld& a, const GridWorld& b) {
    if (a.width != b.width || a.height != b.height || a.cell_size != b.cell_size ||
        a.cells != b.cells || a.objects.size() != b.objects.size())
      return false;
    for (size_t i = 0; i < a.objects.size(); ++i)
      if (a.objects[i].category != b.objects[i].category ||
          !(a.objects[i].cells == b.objects[i].cells))
        return false;
    return true;
  }
};

// Euclidean distance (meters) from a point to the nearest cell of any
// instance of the category. This is the success predicate of the task:
// reached iff true_distance <= 1m.
inline double true_distance(const GridWorld& w, double x, double y, Category cat) {
  double best = kInf;
  for (const auto& obj : w.objects) {
    if (obj.category != cat) continue;
    for (const auto& p : obj.cells) {
      const double dx = x - w.center_x(p.c);
      const double dy = y - w.center_y(p.r);
      best = std::min(best, std::hypot(dx, dy));
    }
  }
  return best;
}

// ---------------------------------------------------------------------------
// Geodesic distances over free cells, 8-connected with sqrt(2) diagonal cost.
// Diagonal steps additionally require both orthogonal neighbours free so the
// metric never threads a gap the cylindrical robot cannot.
// ---------------------------------------------------------------------------

namespace detail {

struct HeapNode {
  double d;
  int idx;
  bool operator>(const HeapNode& o) const {
    return d != o.d ? d > o.d : idx > o.idx;
  }
};

inline bool diag_ok(const GridWorld& w, int r, int c, int dr, int dc) {
  if (dr == 0 || dc == 0) return true;
  return w.is_free(r + dr, c) && w.is_free(r, c + dc);
}

}  // namespace detail

// Dijkstra field of path lengths (meters) from a goal mask over free cells.
// Unreachable or non-free cells hold +inf.
inline std::vector<double> geodesic_field(const GridWorld& w,
                                          const std::vector<std::uint8_t>& goal_mask) {
  const int n = w.width * w.height;
  std::vector<double> dist(static_cast<size_t>(n), kInf);
  std::priority_queue<detail::HeapNode, std::vector<detail::HeapNode>,
                      std::greater<detail::HeapNode>> heap;
  for (int i = 0; i < n; ++i) {
    if (goal_mask[static_cast<size_t>(i)] && w.cells[static_cast<size_t>(i)] == CellState::Free) {
      dist[static_cast<size_t>(i)] = 0.0;
      heap.push({0.0, i});
    }
  }
  static const int kDr[8] = {-1, -1, -1, 0, 0, 1, 1, 1};
  static const int kDc[8] = {-1, 0, 1, -1, 1, -1, 0, 1};
  while (!heap.empty()) {
    auto [d, idx] = heap.top();
    heap.pop();
    if (d > dist[static_cast<size_t>(idx)]) continue;
    const int r = idx / w.width;
    const int c = idx % w.width;
    for (int k = 0; k < 8; ++k) {
      const int nr = r + kDr[k];
      const int nc = c + kDc[k];
      if (!w.is_free(nr, nc)) continue;
      if (!detail::diag_ok(w, r, c, kDr[k], kDc[k])) continue;
      const double step = (kDr[k] != 0 && kDc[k] != 0) ? M_SQRT2 : 1.0;
      const double nd = d + step * w.cell_size;
      const int nidx = nr * w.width + nc;
      if (nd < dist[static_cast<size_t>(nidx)]) {
        dist[static_cast<size_t>(nidx)] = nd;
        heap.push({nd, nidx});
      }
    }
  }
  return dist;
}

// Mask of free cells whose center lies within `radius` meters of the center
// of any target cell.
inline std::vector<std::uint8_t> within_radius_mask(const GridWorld& w,
                                                    const std::vector<GridPos>& targets,
                                                    double radius) {
  std::vector<std::uint8_t> mask(static_cast<size_t>(w.width) * w.height, 0);
  const double rad2 = radius * radius + 1e-9;
  for (int r = 0; r < w.height; ++r) {
    for (int c = 0; c < w.width; ++c) {
      if (w.at(r, c) != CellState::Free) continue;
      for (const auto& t : targets) {
        const double dx = (c - t.c) * w.cell_size;
        const double dy = (r - t.r) * w.cell_size;
        if (dx * dx + dy * dy <= rad2) {
          mask[static_cast<size_t>(r) * w.width + c] = 1;
          break;
        }
      }
    }
  }
  return mask;
}

// Shortest 8-connected free path (meters) from `from` to any free cell within
// `success_radius` of any target cell. Returns +inf when unreachable.
// success_radius = 0 restricts the goal set to the target cells themselves.
inline double geodesic_distance(const GridWorld& w, GridPos from,
                                const std::vector<GridPos>& targets,
                                double success_radius = 1.0) {
  if (targets.empty()) throw ValidationError("geodesic_distance: empty target set");
  if (!w.is_free(from.r, from.c))
    throw ValidationError("geodesic_distance: source cell not free");
  std::vector<std::uint8_t> goal;
  if (success_radius > 0.0) {
    goal = within_radius_mask(w, targets, success_radius);
  } else {
    goal.assign(static_cast<size_t>(w.width) * w.height, 0);
    for (const auto& t : targets)
      if (w.is_free(t.r, t.c)) goal[static_cast<size_t>(t.r) * w.width + t.c] = 1;
  }
  const auto dist = geodesic_field(w, goal);
  return dist[static_cast<size_t>(from.r) * w.width + from.c];
}

// ---------------------------------------------------------------------------
// Procedural world generation: axis-aligned rooms joined by 2-cell-wide
// corridors, objects hugging room walls. Object placement is biased by room
// size so category locations carry learnable regularities (dining tables in
// the largest rooms, toilets in the smallest, beds in large ones, ...).
// ---------------------------------------------------------------------------

struct WorldGenParams {
  int width = 48;
  int height = 48;
  int rooms = 7;
  int min_room = 5;
  int max_room = 11;
  double object_density = 1.6;  // extra objects per room beyond one per category
};

namespace detail {

struct Room {
  int r0, c0, h, w;
  int area() const { return h * w; }
  double cr() const { return r0 + h / 2.0; }
  double cc() const { return c0 + w / 2.0; }
};

inline void carve_rect(GridWorld& world, int r0, int c0, int h, int w) {
  for (int r = r0; r < r0 + h; ++r)
    for (int c = c0; c < c0 + w; ++c)
      if (world.in_bounds(r, c))
        world.cells[static_cast<size_t>(r) * world.width + c] = CellState::Free;
}

inline int free_component_count(const GridWorld& w) {
  const int n = w.width * w.height;
  std::vector<std::uint8_t> seen(static_cast<size_t>(n), 0);
  int comps = 0;
  std::vector<int> stack;
  for (int i = 0; i < n; ++i) {
    if (w.cells[static_cast<size_t>(i)] != CellState::Free || seen[static_cast<size_t>(i)]) continue;
    ++comps;
    if (comps > 1) return comps;
    seen[static_cast<size_t>(i)] = 1;
    stack.assign(1, i);
    while (!stack.empty()) {
      const int cur = stack.back();
      stack.pop_back();
      const int r = cur / w.width;
      const int c = cur % w.width;
      for (int dr = -1; dr <= 1; ++dr)
        for (int dc = -1; dc <= 1; ++dc) {
          if (dr == 0 && dc == 0) continue;
          const int nr = r + dr, nc = c + dc;
          if (!w.is_free(nr, nc)) continue;
          const int nidx = nr * w.width + nc;
          if (!seen[static_cast<size_t>(nidx)]) {
            seen[static_cast<size_t>(nidx)] = 1;
            stack.push_back(nidx);
          }
        }
    }
  }
  return comps;
}

inline bool has_free_neighbor(const GridWorld& w, GridPos p) {
  for (int dr = -1; dr <= 1; ++dr)
    for (int dc = -1; dc <= 1; ++dc)
      if ((dr || dc) && w.is_free(p.r + dr, p.c + dc)) return true;
  return false;
}

// Room index windows per category, over rooms sorted by ascending area.
inline std::pair<int, int> room_window(Category cat, int n_rooms) {
  const int n = n_rooms;
  switch (cat) {
    case Category::Toilet: return {0, std::max(1, n / 3)};
    case Category::Chair: return {0, n};
    case Category::Couch: return {n / 3, std::max(n / 3 + 1, 2 * n / 3 + 1)};
    case Category::Bed: return {n / 2, n};
    case Category::DiningTable: return {std::max(0, n - std::max(1, n / 3)), n};
  }
  return {0, n};
}

inline bool try_place_object(GridWorld& world, const std::vector<Room>& rooms_by_area,
                             Category cat, Rng& rng) {
  const auto [lo, hi] = room_window(cat, static_cast<int>(rooms_by_area.size()));
  for (int attempt = 0; attempt < 60; ++attempt) {
    const auto& room = rooms_by_area[static_cast<size_t>(lo + rng.uniform_index(hi - lo))];
    const int size = 1 + rng.uniform_index(4);
    const int side = rng.uniform_index(4);  // 0:N 1:S 2:W 3:E wall of the room
    std::vector<GridPos> cells;
    if (side < 2) {
      const int r = side == 0 ? room.r0 : room.r0 + room.h - 1;
      const int span = std::min(size, room.w);
      const int c0 = room.c0 + rng.uniform_index(room.w - span + 1);
      for (int k = 0; k < span; ++k) cells.push_back({r, c0 + k});
    } else {
      const int c = side == 2 ? room.c0 : room.c0 + room.w - 1;
      const int span = std::min(size, room.h);
      const int r0 = room.r0 + rng.uniform_index(room.h - span + 1);
      for (int k = 0; k < span; ++k) cells.push_back({r0 + k, c});
    }
    bool ok = true;
    for (const auto& p : cells)
      if (!world.is_free(p.r, p.c)) { ok = false; break; }
    if (!ok) continue;
    for (const auto& p : cells)
      world.cells[static_cast<size_t>(p.r) * world.width + p.c] = CellState::Occupied;
    bool keeps_invariants = free_component_count(world) == 1;
    if (keeps_invariants)
      for (const auto& p : cells)
        if (!has_free_neighbor(world, p)) { keeps_invariants = false; break; }
    if (!keeps_invariants) {
      for (const auto& p : cells)
        world.cells[static_cast<size_t>(p.r) * world.width + p.c] = CellState::Free;
      continue;
    }
    world.objects.push_back({cat, cells});
    return true;
  }
  return false;
}

}  // namespace detail

inline GridWorld generate_world(std::uint64_t seed, const WorldGenParams& params = {}) {
  if (params.width < 20 || params.height < 20)
    throw InvalidParams("generate_world: grid must be at least 20x20");
  if (params.rooms < 2 || params.min_room < 3 || params.max_room < params.min_room ||
      params.object_density < 0.0)
    throw InvalidParams("generate_world: bad parameters");

  for (int world_attempt = 0; world_attempt < 32; ++world_attempt) {
    Rng rng(mix_seed(seed, 0x77a1d, static_cast<std::uint64_t>(world_attempt)));
    GridWorld world;
    world.width = params.width;
    world.height = params.height;
    world.seed = seed;
    world.cells.assign(static_cast<size_t>(params.width) * params.height,
                       CellState::Occupied);

    // Rooms: rejection-sampled rectangles with a 1-cell wall between them.
    std::vector<detail::Room> rooms;
    for (int tries = 0; tries < 300 * params.rooms &&
                        static_cast<int>(rooms.size()) < params.rooms; ++tries) {
      const int h = params.min_room + rng.uniform_index(params.max_room - params.min_room + 1);
      const int w = params.min_room + rng.uniform_index(params.max_room - params.min_room + 1);
      if (h + 2 >= params.height || w + 2 >= params.width) continue;
      const int r0 = 1 + rng.uniform_index(params.height - h - 2);
      const int c0 = 1 + rng.uniform_index(params.width - w - 2);
      bool overlaps = false;
      for (const auto& other : rooms) {
        if (r0 - 1 < other.r0 + other.h + 1 && other.r0 - 1 < r0 + h + 1 &&
            c0 - 1 < other.c0 + other.w + 1 && other.c0 - 1 < c0 + w + 1) {
          overlaps = true;
          break;
        }
      }
      if (!overlaps) rooms.push_back({r0, c0, h, w});
    }
    if (static_cast<int>(rooms.size()) < 2) continue;
    for (const auto& room : rooms)
      detail::carve_rect(world, room.r0, room.c0, room.h, room.w);

    // Corridors: connect each room to the nearest earlier room, L-shaped,
    // two cells wide.
    for (size_t i = 1; i < rooms.size(); ++i) {
      size_t best = 0;
      double best_d = kInf;
      for (size_t j = 0; j < i; ++j) {
        const double d = std::abs(rooms[i].cr() - rooms[j].cr()) +
                         std::abs(rooms[i].cc() - rooms[j].cc());
        if (d < best_d) { best_d = d; best = j; }
      }
      const int r1 = static_cast<int>(rooms[i].cr());
      const int c1 = static_cast<int>(rooms[i].cc());
      const int r2 = static_cast<int>(rooms[best].cr());
      const int c2 = static_cast<int>(rooms[best].cc());
      detail::carve_rect(world, r1, std::min(c1, c2), 2, std::abs(c1 - c2) + 2);
      detail::carve_rect(world, std::min(r1, r2), c2, std::abs(r1 - r2) + 2, 2);
    }
    if (detail::free_component_count(world) != 1) continue;

    // Objects: one instance of every category, then density-driven extras.
    std::vector<detail::Room> by_area = rooms;
    std::sort(by_area.begin(), by_area.end(),
              [](const detail::Room& a, const detail::Room& b) {
                return a.area() != b.area() ? a.area() < b.area()
                                            : (a.r0 != b.r0 ? a.r0 < b.r0 : a.c0 < b.c0);
              });
    std::vector<Category> wanted;
    for (int c = 0; c < kNumCategories; ++c) wanted.push_back(static_cast<Category>(c));
    const int extras = static_cast<int>(std::lround(params.object_density * rooms.size()));
    for (int k = 0; k < extras; ++k)
      wanted.push_back(static_cast<Category>(rng.uniform_index(kNumCategories)));

    bool placed_all = true;
    for (Category cat : wanted) {
      if (!detail::try_place_object(world, by_area, cat, rng)) {
        placed_all = false;
        break;
      }
    }
    if (!placed_all) continue;

    world.rebuild_object_map();
    bool all_categories = true;
    for (int c = 0; c < kNumCategories; ++c)
      if (!world.has_category(static_cast<Category>(c))) all_categories = false;
    if (!all_categories || detail::free_component_count(world) != 1) continue;
    return world;
  }
  throw GenerationFailed("generate_world: could not satisfy invariants after retries");
}

// ---------------------------------------------------------------------------
// Branching environment: a stem corridor splitting into a short arm toward
// g_near and a longer arm toward g_far.
// ---------------------------------------------------------------------------

struct BranchingWorld {
  GridWorld world;
  std::vector<GridPos> g_near;
  std::vector<GridPos> g_far;
  GridPos branch{};
  std::vector<GridPos> start_disc;
};

inline BranchingWorld generate_branching_world(int corridor_len = 15,
                                               int branch_offset = 10) {
  if (corridor_len < 10)
    throw InvalidParams("generate_branching_world: corridor_len must be >= 10");
  if (branch_offset < 2)
    throw InvalidParams("generate_branching_world: arms collide (branch_offset < 2)");

  const int near_len = 7;
  const int far_len = near_len + branch_offset;
  const int width = near_len + far_len + 6;
  const int height = corridor_len + 6;

  BranchingWorld bw;
  GridWorld& w = bw.world;
  w.width = width;
  w.height = height;
  w.seed = 0;
  w.cells.assign(static_cast<size_t>(width) * height, CellState::Occupied);

  const int stem_c = near_len + 2;  // left column of the 2-wide stem
  const int arm_r = 2;              // top row of the 2-wide arms
  // Stem runs from the arm junction down corridor_len cells.
  detail::carve_rect(w, arm_r, stem_c, corridor_len + 2, 2);
  // Arms: near to the left, far to the right.
  detail::carve_rect(w, arm_r, stem_c - near_len, 2, near_len);
  detail::carve_rect(w, arm_r, stem_c + 2, 2, far_len);

  bw.branch = {arm_r + 1, stem_c};
  for (int r = arm_r; r < arm_r + 2; ++r) {
    bw.g_near.push_back({r, stem_c - near_len});
    bw.g_far.push_back({r, stem_c + 1 + far_len});
  }
  const int bottom = arm_r + corridor_len;
  for (int r = bottom; r < bottom + 2; ++r)
    for (int c = stem_c; c < stem_c + 2; ++c) bw.start_disc.push_back({r, c});

  w.rebuild_object_map();

  const double d_near = geodesic_distance(w, bw.branch, bw.g_near, 0.0);
  const double d_far = geodesic_distance(w, bw.branch, bw.g_far, 0.0);
  if (!(d_near < d_far))
    throw InvalidParams("generate_branching_world: near goal not nearer");
  for (const auto& s : bw.start_disc) {
    if (!std::isfinite(geodesic_distance(w, s, bw.g_near, 0.0)) ||
        !std::isfinite(geodesic_distance(w, s, bw.g_far, 0.0)))
      throw InvalidParams("generate_branching_world: goals unreachable from start disc");
  }
  return bw;
}

// ---------------------------------------------------------------------------
// World file format.
//   VLVWORLD 1 [cfg=<hex>]
//   <width> <height> <cell_size>
//   height rows of width chars ('.' free, '#' occupied)
//   OBJ <category_name> <r,c>;<r,c>;...
// ---------------------------------------------------------------------------

inline std::string world_to_string(const GridWorld& w, std::uint64_t cfg_hash = 0) {
  std::ostringstream os;
  os << "VLVWORLD 1";
  if (cfg_hash != 0) os << " cfg=" << hash_hex(cfg_hash);
  os << "\n" << w.width << " " << w.height << " " << format_double(w.cell_size) << "\n";
  for (int r = 0; r < w.height; ++r) {
    for (int c = 0; c < w.width; ++c)
      os << (w.at(r, c) == CellState::Free ? '.' : '#');
    os << "\n";
  }
  for (const auto& obj : w.objects) {
    os << "OBJ " << category_name(obj.category) << " ";
    for (size_t i = 0; i < obj.cells.size(); ++i) {
      if (i) os << ";";
      os << obj.cells[i].r << "," << obj.cells[i].c;
    }
    os << "\n";
  }
  return os.str();
}

struct LoadedWorld {
  GridWorld world;
  std::uint64_t cfg_hash = 0;
};

inline LoadedWorld world_from_string(const std::string& text) {
  std::istringstream is(text);
  std::string line;
  long lineno = 0;
  auto next_line = [&]() {
    if (!std::getline(is, line)) throw FormatError("unexpected end of file", lineno);
    ++lineno;
  };
  next_line();
  auto head = split_ws(line);
  if (head.size() < 2 || head[0] != "VLVWORLD" || head[1] != "1")
    throw FormatError("bad magic, expected 'VLVWORLD 1'", lineno);
  LoadedWorld out;
  for (size_t i = 2; i < head.size(); ++i)
    if (head[i].rfind("cfg=", 0) == 0)
      out.cfg_hash = std::strtoull(head[i].c_str() + 4, nullptr, 16);
  next_line();
  auto dims = split_ws(line);
  if (dims.size() != 3) throw FormatError("expected '<width> <height> <cell_size>'", lineno);
  GridWorld& w = out.world;
  w.width = static_cast<int>(parse_long(dims[0], lineno));
  w.height = static_cast<int>(parse_long(dims[1], lineno));
  w.cell_size = parse_double(dims[2], lineno);
  if (w.width <= 0 || w.height <= 0 || w.cell_size <= 0)
    throw FormatError("bad world dimensions", lineno);
  w.cells.assign(static_cast<size_t>(w.width) * w.height, CellState::Free);
  for (int r = 0; r < w.height; ++r) {
    next_line();
    if (static_cast<int>(line.size()) < w.width)
      throw FormatError("row shorter than width", lineno);
    for (int c = 0; c < w.width; ++c) {
      if (line[static_cast<size_t>(c)] == '.')
        w.cells[static_cast<size_t>(r) * w.width + c] = CellState::Free;
      else if (line[static_cast<size_t>(c)] == '#')
        w.cells[static_cast<size_t>(r) * w.width + c] = CellState::Occupied;
      else
        throw FormatError("bad cell char", lineno);
    }
  }
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty() || line == "\r") continue;
    auto toks = split_ws(line);
    if (toks.size() != 3 || toks[0] != "OBJ")
      throw FormatError("expected 'OBJ <category> <cells>'", lineno);
    ObjectInstance obj;
    obj.category = parse_category(toks[1]);
    std::stringstream cellstream(toks[2]);
    std::string cell;
    while (std::getline(cellstream, cell, ';')) {
      const auto comma = cell.find(',');
      if (comma == std::string::npos) throw FormatError("bad cell '" + cell + "'", lineno);
      GridPos p;
      p.r = static_cast<int>(parse_long(cell.substr(0, comma), lineno));
      p.c = static_cast<int>(parse_long(cell.substr(comma + 1), lineno));
      if (!w.in_bounds(p.r, p.c)) throw FormatError("object cell out of bounds", lineno);
      if (w.at(p.r, p.c) != CellState::Occupied)
        throw FormatError("object cell not marked occupied", lineno);
      obj.cells.push_back(p);
    }
    if (obj.cells.empty()) throw FormatError("object without cells", lineno);
    w.objects.push_back(std::move(obj));
  }
  w.rebuild_object_map();
  return out;
}

inline void save_world(const GridWorld& w, const std::string& path,
                       std::uint64_t cfg_hash = 0) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open '" + path + "' for writing");
  f << world_to_string(w, cfg_hash);
  if (!f) throw IoError("write failed for '" + path + "'");
}

inline LoadedWorld load_world(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << f.rdbuf();
  return world_from_string(ss.str());
}

}  // namespace vlv
