/*
 * Copyright (c) 2026, The Lightswitch Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
*/

#pragma once

#include <algorithm>
#include <bit>
#include <cstdint>
#include <cstdlib>
#include <deque>
#include <functional>
#include <memory>
#include <numeric>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "lightswitch/semantics.hpp"

namespace lightswitch {

using node_key_t = unsigned __int128;
using node_id_t = std::uint32_t;
using perm_id_t = std::uint16_t;

constexpr node_id_t kNoNode = 0xffffffffu;

inline std::uint64_t default_node_budget() {
  if (const char* env = std::getenv("LIGHTSWITCH_NODE_BUDGET")) {
    std::uint64_t v = std::strtoull(env, nullptr, 10);
    if (v > 0) return v;
  }
  return 100'000'000ull;
}

struct ExploreOptions {
  bool room_symmetry = false;
  std::uint64_t node_budget = default_node_budget();
};

namespace detail {

struct KeyHash {
  std::size_t operator()(node_key_t k) const {
    std::uint64_t lo = static_cast<std::uint64_t>(k);
    std::uint64_t hi = static_cast<std::uint64_t>(k >> 64);
    std::uint64_t h = lo * 0x9e3779b97f4a7c15ull;
    h ^= (hi + 0x9e3779b97f4a7c15ull + (h << 6) + (h >> 2));
    h *= 0xff51afd7ed558ccdull;
    return static_cast<std::size_t>(h ^ (h >> 33));
  }
};

/*
 * The room permutation group used by the symmetry quotient, with lookup
 * tables for composition and inversion. Permutations are listed in
 * lexicographic order; index 0 is the identity.
 */
struct PermTable {
  int r;
  std::vector<std::vector<int>> perms;
  std::vector<perm_id_t> inverse;
  std::vector<perm_id_t> compose;  // compose[a * size + b] = a after b

  explicit PermTable(int rooms) : r(rooms) {
    std::vector<int> p(rooms);
    std::iota(p.begin(), p.end(), 0);
    do {
      perms.push_back(p);
    } while (std::next_permutation(p.begin(), p.end()));
    std::size_t size = perms.size();
    inverse.resize(size);
    compose.resize(size * size);
    for (std::size_t a = 0; a < size; ++a) {
      std::vector<int> inv(rooms);
      for (int t = 0; t < rooms; ++t) inv[perms[a][t]] = t;
      inverse[a] = static_cast<perm_id_t>(rank(inv));
      for (std::size_t b = 0; b < size; ++b) {
        std::vector<int> c(rooms);
        for (int t = 0; t < rooms; ++t) c[t] = perms[a][perms[b][t]];
        compose[a * size + b] = static_cast<perm_id_t>(rank(c));
      }
    }
  }

  std::size_t size() const { return perms.size(); }

  // Lehmer rank; permutations are in lexicographic order.
  std::size_t rank(const std::vector<int>& p) const {
    std::size_t idx = 0;
    for (int i = 0; i < r; ++i) {
      int smaller = 0;
      for (int j = i + 1; j < r; ++j)
        if (p[j] < p[i]) ++smaller;
      std::size_t fact = 1;
      for (int f = 2; f <= r - 1 - i; ++f) fact *= f;
      idx += smaller * fact;
    }
    return idx;
  }
};

}  // namespace detail

/*
 * Fixed-width packed encoding of a configuration: rooms, then controller
 * states, then the visited matrix, then the declarer. Total width must
 * fit 128 bits, which covers every desk-scale instance.
 */
class PackedCodec {
 public:
  PackedCodec() = default;

  PackedCodec(const World& w, const std::vector<Controller>& controllers) : w_(w) {
    room_bits_ = width(w.q - 1);
    for (const Controller& c : controllers)
      ctrl_bits_.push_back(width(static_cast<int>(c.num_states()) - 1));
    declared_bits_ = width(w.n);
    int total = w.r * room_bits_ + w.n * w.r + declared_bits_;
    for (int b : ctrl_bits_) total += b;
    if (total > 128)
      throw error("packed configuration exceeds 128 bits; instance too large");
  }

  node_key_t encode(const Configuration& cfg) const {
    node_key_t key = 0;
    int shift = 0;
    for (int j = 0; j < w_.r; ++j) {
      key |= static_cast<node_key_t>(cfg.rooms[j]) << shift;
      shift += room_bits_;
    }
    for (int p = 0; p < w_.n; ++p) {
      key |= static_cast<node_key_t>(cfg.ctrls[p]) << shift;
      shift += ctrl_bits_[p];
    }
    key |= static_cast<node_key_t>(cfg.visited) << shift;
    shift += w_.n * w_.r;
    key |= static_cast<node_key_t>(cfg.declared_by + 1) << shift;
    return key;
  }

  Configuration decode(node_key_t key) const {
    Configuration cfg;
    cfg.rooms.resize(w_.r);
    cfg.ctrls.resize(w_.n);
    for (int j = 0; j < w_.r; ++j) {
      cfg.rooms[j] = static_cast<state_t>(key & mask(room_bits_));
      key >>= room_bits_;
    }
    for (int p = 0; p < w_.n; ++p) {
      cfg.ctrls[p] = static_cast<ctrl_t>(key & mask(ctrl_bits_[p]));
      key >>= ctrl_bits_[p];
    }
    cfg.visited = static_cast<std::uint64_t>(key & mask(w_.n * w_.r));
    key >>= w_.n * w_.r;
    cfg.declared_by = static_cast<int>(key & mask(declared_bits_)) - 1;
    return cfg;
  }

 private:
  static int width(int max_value) {
    return max_value <= 0 ? 1 : std::bit_width(static_cast<unsigned>(max_value));
  }
  static node_key_t mask(int bits) {
    return bits >= 128 ? ~node_key_t{0} : (node_key_t{1} << bits) - 1;
  }

  World w_{0, 0, 0};
  int room_bits_ = 0;
  std::vector<int> ctrl_bits_;
  int declared_bits_ = 0;
};

namespace detail {

/// Sorts rooms by (state, visited column); returns the permutation pi with
/// canonical.rooms[t] == cfg.rooms[pi[t]]. Ties are broken by room index,
/// which keeps the representative deterministic; tied rooms are
/// interchangeable, so the canonical configuration is orbit-unique.
inline std::vector<int> canonical_room_order(const World& w, const Configuration& cfg) {
  std::vector<std::uint64_t> column(w.r, 0);
  for (int p = 0; p < w.n; ++p)
    for (int j = 0; j < w.r; ++j)
      if ((cfg.visited >> (p * w.r + j)) & 1u) column[j] |= std::uint64_t{1} << p;
  std::vector<int> order(w.r);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    if (cfg.rooms[a] != cfg.rooms[b]) return cfg.rooms[a] < cfg.rooms[b];
    if (column[a] != column[b]) return column[a] < column[b];
    return a < b;
  });
  return order;
}

inline Configuration permute_rooms(const World& w, const Configuration& cfg,
                                   const std::vector<int>& pi) {
  Configuration out = cfg;
  std::uint64_t visited = 0;
  for (int t = 0; t < w.r; ++t) {
    out.rooms[t] = cfg.rooms[pi[t]];
    for (int p = 0; p < w.n; ++p)
      if ((cfg.visited >> (p * w.r + pi[t])) & 1u)
        visited |= std::uint64_t{1} << (p * w.r + t);
  }
  out.visited = visited;
  return out;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Reachability graph
// ---------------------------------------------------------------------------

enum : std::uint8_t {
  kNodeDeclared = 1,
  kNodeUnsafe = 2,
};

/*
 * All configurations reachable from the initial one under arbitrary
 * scheduling, with expansion stopped at declared configurations. With
 * room symmetry enabled, nodes are canonical representatives and each
 * edge records the permutation folded away by canonicalization, so both
 * counterexample traces and the fairness analysis recover concrete play.
 */
struct ReachGraph {
  World world;
  std::vector<Controller> controllers;
  PackedCodec codec;
  std::vector<node_key_t> keys;
  std::vector<std::uint8_t> flags;
  std::vector<node_id_t> succ;       // node * L + label, kNoNode for declared rows
  std::vector<perm_id_t> succ_perm;  // canonicalization perm per edge
  std::shared_ptr<detail::PermTable> perms;  // null when symmetry is off
  perm_id_t root_perm = 0;
  bool symmetry = false;

  int labels() const { return world.n * world.r; }
  std::size_t size() const { return keys.size(); }

  Configuration config(node_id_t id) const { return codec.decode(keys[id]); }
  bool declared(node_id_t id) const { return flags[id] & kNodeDeclared; }
};

inline ReachGraph explore(const std::vector<Controller>& controllers, const World& w,
                          const std::vector<state_t>& init,
                          const ExploreOptions& opts = {}) {
  w.validate();
  if (opts.room_symmetry && w.r > 6)
    throw error("room symmetry reduction supports r <= 6");

  ReachGraph g;
  g.world = w;
  g.controllers = controllers;
  g.codec = PackedCodec(w, controllers);
  g.symmetry = opts.room_symmetry;
  if (g.symmetry) g.perms = std::make_shared<detail::PermTable>(w.r);

  const int L = w.n * w.r;
  std::unordered_map<node_key_t, node_id_t, detail::KeyHash> ids;

  auto canonicalize = [&](const Configuration& cfg) -> std::pair<node_key_t, perm_id_t> {
    if (!g.symmetry) return {g.codec.encode(cfg), 0};
    std::vector<int> pi = detail::canonical_room_order(w, cfg);
    Configuration canon = detail::permute_rooms(w, cfg, pi);
    return {g.codec.encode(canon), static_cast<perm_id_t>(g.perms->rank(pi))};
  };

  auto intern = [&](node_key_t key) -> node_id_t {
    auto it = ids.find(key);
    if (it != ids.end()) return it->second;
    if (g.keys.size() >= opts.node_budget)
      throw budget_error("node budget exceeded after " +
                             std::to_string(g.keys.size()) + " nodes",
                         g.keys.size());
    node_id_t id = static_cast<node_id_t>(g.keys.size());
    ids.emplace(key, id);
    g.keys.push_back(key);
    Configuration cfg = g.codec.decode(key);
    std::uint8_t f = 0;
    if (cfg.declared()) {
      f |= kNodeDeclared;
      if (!is_safe_declare(w, cfg)) f |= kNodeUnsafe;
    }
    g.flags.push_back(f);
    return id;
  };

  Configuration init_cfg = initial_configuration(w, init, controllers);
  auto [root_key, root_perm] = canonicalize(init_cfg);
  g.root_perm = root_perm;
  intern(root_key);

  for (node_id_t id = 0; id < g.keys.size(); ++id) {
    g.succ.resize(static_cast<std::size_t>(id + 1) * L, kNoNode);
    g.succ_perm.resize(static_cast<std::size_t>(id + 1) * L, 0);
    if (g.flags[id] & kNodeDeclared) continue;
    Configuration cfg = g.codec.decode(g.keys[id]);
    for (int label = 0; label < L; ++label) {
      Configuration next = apply_event(w, controllers, cfg, label / w.r, label % w.r);
      auto [key, perm] = canonicalize(next);
      g.succ[static_cast<std::size_t>(id) * L + label] = intern(key);
      g.succ_perm[static_cast<std::size_t>(id) * L + label] = perm;
    }
  }
  return g;
}

// ---------------------------------------------------------------------------
// Concrete lifting of quotient paths
// ---------------------------------------------------------------------------

namespace detail {

/*
 * Walking a stored path through the quotient, this tracks the permutation
 * rho with concrete = permute_rooms(canonical, rho), and translates each
 * stored edge label into the concrete room the warden opens.
 */
struct ConcreteCursor {
  const ReachGraph* g;
  perm_id_t rho;

  explicit ConcreteCursor(const ReachGraph& graph)
      : g(&graph), rho(graph.symmetry ? graph.perms->inverse[graph.root_perm] : 0) {}

  int concrete_room(int stored_room) const {
    if (!g->symmetry) return stored_room;
    return g->perms->perms[g->perms->inverse[rho]][stored_room];
  }

  void advance(perm_id_t edge_perm) {
    if (!g->symmetry) return;
    const auto& pt = *g->perms;
    rho = pt.compose[static_cast<std::size_t>(pt.inverse[edge_perm]) * pt.size() + rho];
  }
};

}  // namespace detail

namespace detail {

inline Configuration root_concrete(const ReachGraph& g) {
  Configuration canon = g.config(0);
  if (!g.symmetry) return canon;
  ConcreteCursor cur(g);
  return permute_rooms(g.world, canon, g.perms->perms[cur.rho]);
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Safety
// ---------------------------------------------------------------------------

/// Shortest trace to a declared configuration with an incomplete visited
/// matrix, if one is reachable.
inline std::optional<Trace> check_safety(const ReachGraph& g) {
  const int L = g.labels();
  node_id_t target = kNoNode;
  std::vector<std::int64_t> parent(g.size(), -2);  // -2 unseen, -1 root
  parent[0] = -1;
  std::deque<node_id_t> queue{0};
  if (g.flags[0] & kNodeUnsafe) target = 0;
  while (!queue.empty() && target == kNoNode) {
    node_id_t u = queue.front();
    queue.pop_front();
    if (g.declared(u)) continue;
    for (int label = 0; label < L; ++label) {
      node_id_t v = g.succ[static_cast<std::size_t>(u) * L + label];
      if (parent[v] != -2) continue;
      parent[v] = static_cast<std::int64_t>(u) * L + label;
      if (g.flags[v] & kNodeUnsafe) {
        target = v;
        break;
      }
      queue.push_back(v);
    }
  }
  if (target == kNoNode) return std::nullopt;

  std::vector<int> labels;
  std::vector<perm_id_t> perms;
  for (node_id_t v = target; parent[v] != -1;) {
    std::int64_t enc = parent[v];
    node_id_t u = static_cast<node_id_t>(enc / L);
    int label = static_cast<int>(enc % L);
    labels.push_back(label);
    perms.push_back(g.succ_perm[static_cast<std::size_t>(u) * L + label]);
    v = u;
  }
  std::reverse(labels.begin(), labels.end());
  std::reverse(perms.begin(), perms.end());

  Trace t;
  t.world = g.world;
  t.initial = detail::root_concrete(g);
  detail::ConcreteCursor cur(g);
  Configuration cfg = t.initial;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    int prisoner = labels[i] / g.world.r;
    int room = cur.concrete_room(labels[i] % g.world.r);
    Configuration next = apply_event(g.world, g.controllers, cfg, prisoner, room);
    t.steps.push_back({{i, prisoner, room}, cfg.rooms[room], next.rooms[room],
                       next.declared()});
    cfg = std::move(next);
    cur.advance(perms[i]);
  }
  if (!cfg.declared() || is_safe_declare(g.world, cfg))
    throw error("internal: lifted unsafe trace failed validation");
  return t;
}

// ---------------------------------------------------------------------------
// Fair liveness
// ---------------------------------------------------------------------------

struct FairLoop {
  Trace prefix;                       // from the initial configuration
  std::vector<ScheduleEvent> cycle;   // repeatable, covers every (p, j) pair
  Configuration cycle_start;
};

/*
 * Searches for a fair schedule that stays forever inside `region`.
 * Such a schedule exists iff some strongly connected component of the
 * region (in concrete play) has internal edges for every (prisoner, room)
 * label: an infinite fair run eventually stays inside one component and
 * must keep using every label there, and conversely such a component
 * yields a fair lasso. With symmetry on, SCCs run over the permutation-
 * annotated product, which is concrete play with deduplicated storage;
 * the plain quotient would be unsound here because distinct concrete
 * rooms can collapse onto one stored label.
 */
inline std::optional<FairLoop> find_fair_lasso(
    const ReachGraph& g, const std::function<bool(const Configuration&)>& region,
    std::uint64_t product_budget = default_node_budget()) {
  const int L = g.labels();
  const std::size_t P = g.symmetry ? g.perms->size() : 1;
  if (g.size() == 0) return std::nullopt;

  // Region is invariant under room permutations, so evaluate it once per
  // stored node.
  std::vector<char> in_region(g.size());
  for (node_id_t u = 0; u < g.size(); ++u)
    in_region[u] = region(g.config(u)) ? 1 : 0;

  auto product_of = [&](node_id_t u, perm_id_t rho) -> std::uint64_t {
    return static_cast<std::uint64_t>(u) * P + rho;
  };
  auto node_of = [&](std::uint64_t pn) { return static_cast<node_id_t>(pn / P); };
  auto perm_of = [&](std::uint64_t pn) { return static_cast<perm_id_t>(pn % P); };

  auto product_succ = [&](std::uint64_t pn, int label) -> std::uint64_t {
    node_id_t u = node_of(pn);
    node_id_t v = g.succ[static_cast<std::size_t>(u) * L + label];
    if (!g.symmetry) return v;
    perm_id_t sigma = g.succ_perm[static_cast<std::size_t>(u) * L + label];
    const auto& pt = *g.perms;
    perm_id_t rho = pt.compose[static_cast<std::size_t>(pt.inverse[sigma]) * pt.size() +
                               perm_of(pn)];
    return product_of(v, rho);
  };
  // Concrete (prisoner, room) pair used by a product edge with stored label.
  auto concrete_label = [&](std::uint64_t pn, int label) -> int {
    if (!g.symmetry) return label;
    const auto& pt = *g.perms;
    int room = pt.perms[pt.inverse[perm_of(pn)]][label % g.world.r];
    return (label / g.world.r) * g.world.r + room;
  };

  std::uint64_t root = product_of(0, g.symmetry ? g.perms->inverse[g.root_perm] : 0);

  // Iterative Tarjan over the product restricted to region nodes.
  std::unordered_map<std::uint64_t, std::uint32_t> index;
  std::vector<std::uint64_t> by_index;
  std::vector<std::uint32_t> lowlink;
  std::vector<char> on_stack;
  std::vector<std::uint32_t> component;  // by discovery index
  std::vector<std::uint64_t> scc_stack;
  std::uint32_t comp_count = 0;

  struct Frame {
    std::uint64_t pn;
    std::uint32_t idx;
    int next_label;
  };

  std::optional<FairLoop> result;
  const std::uint64_t full_mask =
      L == 64 ? ~std::uint64_t{0} : (std::uint64_t{1} << L) - 1;

  std::vector<std::vector<std::uint64_t>> scc_members_by_comp;

  auto run_root = [&](std::uint64_t start) {
    if (index.count(start) || !in_region[node_of(start)]) return;
    std::vector<Frame> frames;
    auto discover = [&](std::uint64_t pn) -> std::uint32_t {
      std::uint32_t idx = static_cast<std::uint32_t>(by_index.size());
      if (by_index.size() >= product_budget)
        throw budget_error("fairness product budget exceeded", by_index.size());
      index.emplace(pn, idx);
      by_index.push_back(pn);
      lowlink.push_back(idx);
      on_stack.push_back(1);
      component.push_back(0xffffffffu);
      scc_stack.push_back(pn);
      return idx;
    };
    frames.push_back({start, discover(start), 0});
    while (!frames.empty()) {
      Frame& f = frames.back();
      if (g.declared(node_of(f.pn)) || f.next_label >= L) {
        // all children done: close SCC if root of one
        std::uint32_t my_low = lowlink[f.idx];
        if (my_low == f.idx) {
          std::vector<std::uint64_t> members;
          for (;;) {
            std::uint64_t w = scc_stack.back();
            scc_stack.pop_back();
            std::uint32_t wi = index[w];
            on_stack[wi] = 0;
            component[wi] = comp_count;
            members.push_back(w);
            if (w == f.pn) break;
          }
          scc_members_by_comp.push_back(std::move(members));
          ++comp_count;
        }
        std::uint64_t done = f.pn;
        frames.pop_back();
        if (!frames.empty()) {
          Frame& parent = frames.back();
          lowlink[parent.idx] = std::min(lowlink[parent.idx], my_low);
          (void)done;
        }
        continue;
      }
      int label = f.next_label++;
      std::uint64_t child = product_succ(f.pn, label);
      if (!in_region[node_of(child)]) continue;
      auto it = index.find(child);
      if (it == index.end()) {
        frames.push_back({child, discover(child), 0});
      } else if (on_stack[it->second]) {
        lowlink[f.idx] = std::min(lowlink[f.idx], it->second);
      }
    }
  };

  // Leaving the region must be irreversible (declared configurations are
  // absorbing; label flags only ever accumulate), so every region SCC that
  // matters is reachable from the root through region nodes alone.
  run_root(root);

  // Look for a component whose internal concrete labels cover all pairs.
  for (std::uint32_t comp = 0; comp < comp_count && !result; ++comp) {
    const auto& members = scc_members_by_comp[comp];
    std::uint64_t cover = 0;
    for (std::uint64_t pn : members) {
      if (g.declared(node_of(pn))) continue;
      for (int label = 0; label < L; ++label) {
        std::uint64_t child = product_succ(pn, label);
        auto it = index.find(child);
        if (it != index.end() && component[it->second] == comp)
          cover |= std::uint64_t{1} << concrete_label(pn, label);
      }
    }
    if (cover != full_mask) continue;

    // Witness cycle: hop between sources of still-uncovered labels inside
    // the component, then close back to the anchor.
    auto in_comp = [&](std::uint64_t pn) {
      auto it = index.find(pn);
      return it != index.end() && component[it->second] == comp;
    };
    auto bfs_inside = [&](std::uint64_t from,
                          const std::function<bool(std::uint64_t)>& goal)
        -> std::vector<std::pair<std::uint64_t, int>> {
      // returns path as (node, label-taken) ending at a goal node
      std::unordered_map<std::uint64_t, std::pair<std::uint64_t, int>> par;
      std::deque<std::uint64_t> bq{from};
      par[from] = {from, -1};
      while (!bq.empty()) {
        std::uint64_t u = bq.front();
        bq.pop_front();
        if (goal(u)) {
          std::vector<std::pair<std::uint64_t, int>> path;
          for (std::uint64_t v = u; par[v].second != -1; v = par[v].first)
            path.push_back({par[v].first, par[v].second});
          std::reverse(path.begin(), path.end());
          return path;
        }
        for (int label = 0; label < L; ++label) {
          std::uint64_t child = product_succ(u, label);
          if (!in_comp(child) || par.count(child)) continue;
          par[child] = {u, label};
          bq.push_back(child);
        }
      }
      throw error("internal: SCC witness search failed");
    };

    std::uint64_t anchor = members.front();
    std::uint64_t cur = anchor;
    std::uint64_t missing = full_mask;
    std::vector<std::pair<std::uint64_t, int>> cycle_edges;
    while (missing) {
      auto has_missing_edge = [&](std::uint64_t u) {
        if (g.declared(node_of(u))) return false;
        for (int label = 0; label < L; ++label)
          if (in_comp(product_succ(u, label)) &&
              (missing >> concrete_label(u, label)) & 1u)
            return true;
        return false;
      };
      auto path = bfs_inside(cur, has_missing_edge);
      for (auto& e : path) cycle_edges.push_back(e);
      cur = path.empty() ? cur : product_succ(path.back().first, path.back().second);
      std::uint64_t before = missing;
      for (int label = 0; label < L; ++label) {
        std::uint64_t child = product_succ(cur, label);
        if (in_comp(child) && ((missing >> concrete_label(cur, label)) & 1u)) {
          cycle_edges.push_back({cur, label});
          missing &= ~(std::uint64_t{1} << concrete_label(cur, label));
          cur = child;
          break;
        }
      }
      if (missing == before) throw error("internal: witness construction stalled");
    }
    if (cur != anchor) {
      auto path = bfs_inside(cur, [&](std::uint64_t u) { return u == anchor; });
      for (auto& e : path) cycle_edges.push_back(e);
    }

    // Prefix: shortest product path from the root to the anchor.
    std::vector<std::pair<std::uint64_t, int>> prefix_edges;
    {
      std::unordered_map<std::uint64_t, std::pair<std::uint64_t, int>> par;
      std::deque<std::uint64_t> bq{root};
      par[root] = {root, -1};
      bool found = root == anchor;
      while (!bq.empty() && !found) {
        std::uint64_t u = bq.front();
        bq.pop_front();
        if (g.declared(node_of(u))) continue;
        for (int label = 0; label < L; ++label) {
          std::uint64_t child = product_succ(u, label);
          if (par.count(child)) continue;
          par[child] = {u, label};
          if (child == anchor) {
            found = true;
            break;
          }
          bq.push_back(child);
        }
      }
      if (!found) throw error("internal: SCC not reachable from root");
      for (std::uint64_t v = anchor; par[v].second != -1; v = par[v].first)
        prefix_edges.push_back({par[v].first, par[v].second});
      std::reverse(prefix_edges.begin(), prefix_edges.end());
    }

    // Materialize and validate against concrete semantics.
    FairLoop loop;
    loop.prefix.world = g.world;
    loop.prefix.initial = detail::root_concrete(g);
    Configuration cfg = loop.prefix.initial;
    std::uint64_t time = 0;
    for (auto& [pn, label] : prefix_edges) {
      int cl = concrete_label(pn, label);
      int prisoner = cl / g.world.r, room = cl % g.world.r;
      Configuration next = apply_event(g.world, g.controllers, cfg, prisoner, room);
      loop.prefix.steps.push_back(
          {{time++, prisoner, room}, cfg.rooms[room], next.rooms[room], next.declared()});
      cfg = std::move(next);
    }
    loop.cycle_start = cfg;
    std::uint64_t seen_labels = 0;
    for (auto& [pn, label] : cycle_edges) {
      int cl = concrete_label(pn, label);
      seen_labels |= std::uint64_t{1} << cl;
      int prisoner = cl / g.world.r, room = cl % g.world.r;
      Configuration next = apply_event(g.world, g.controllers, cfg, prisoner, room);
      if (next.declared()) throw error("internal: fair cycle declared");
      if (!region(next)) throw error("internal: fair cycle left the region");
      loop.cycle.push_back({time++, prisoner, room});
      cfg = std::move(next);
    }
    if (!(cfg == loop.cycle_start))
      throw error("internal: fair cycle does not close");
    if (seen_labels != full_mask)
      throw error("internal: fair cycle misses labels");
    result = std::move(loop);
  }
  return result;
}

/// Fair warden schedule never reaching a declaration, if one exists.
inline std::optional<FairLoop> check_fair_liveness(
    const ReachGraph& g, std::uint64_t product_budget = default_node_budget()) {
  return find_fair_lasso(
      g, [](const Configuration& cfg) { return !cfg.declared(); }, product_budget);
}

// ---------------------------------------------------------------------------
// Verdict
// ---------------------------------------------------------------------------

struct Verdict {
  enum class Kind { win, unsafe, fair_loop };
  Kind kind;
  std::uint64_t nodes = 0;
  std::optional<Trace> counterexample;  // unsafe
  std::optional<FairLoop> loop;         // fair_loop
};

inline Verdict verdict(const std::vector<Controller>& controllers, const World& w,
                       const std::vector<state_t>& init, const ExploreOptions& opts = {}) {
  ReachGraph g = explore(controllers, w, init, opts);
  Verdict v;
  v.nodes = g.size();
  if (auto unsafe = check_safety(g)) {
    v.kind = Verdict::Kind::unsafe;
    v.counterexample = std::move(unsafe);
    return v;
  }
  if (auto loop = check_fair_liveness(g, opts.node_budget)) {
    v.kind = Verdict::Kind::fair_loop;
    v.loop = std::move(loop);
    return v;
  }
  v.kind = Verdict::Kind::win;
  return v;
}

inline Verdict verdict(const std::vector<Controller>& controllers, const World& w,
                       const ExploreOptions& opts = {}) {
  return verdict(controllers, w, std::vector<state_t>(w.r, 0), opts);
}

inline const char* verdict_name(Verdict::Kind k) {
  switch (k) {
    case Verdict::Kind::win: return "win";
    case Verdict::Kind::unsafe: return "unsafe";
    case Verdict::Kind::fair_loop: return "fairloop";
  }
  return "?";
}

inline nlohmann::ordered_json trace_to_json(const Trace& t) {
  nlohmann::ordered_json steps = nlohmann::ordered_json::array();
  for (const TraceStep& s : t.steps) {
    steps.push_back({{"t", s.event.time},
                     {"prisoner", s.event.prisoner},
                     {"room", s.event.room},
                     {"observed", s.observed},
                     {"written", s.written},
                     {"declared", s.declared}});
  }
  return {{"init", t.initial.rooms}, {"steps", std::move(steps)}};
}

inline nlohmann::ordered_json verdict_to_json(const Verdict& v) {
  nlohmann::ordered_json j;
  j["verdict"] = verdict_name(v.kind);
  j["nodes"] = v.nodes;
  if (v.counterexample) {
    j["counterexample"] = trace_to_json(*v.counterexample);
  } else if (v.loop) {
    nlohmann::ordered_json cyc = nlohmann::ordered_json::array();
    for (const ScheduleEvent& e : v.loop->cycle)
      cyc.push_back({{"prisoner", e.prisoner}, {"room", e.room}});
    j["counterexample"] = {{"prefix", trace_to_json(v.loop->prefix)},
                           {"cycle", std::move(cyc)}};
  }
  return j;
}

}  // namespace lightswitch
