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

#include <numeric>
#include <string>
#include <tuple>
#include <vector>

#include "lightswitch/dsl.hpp"

namespace lightswitch {

// ---------------------------------------------------------------------------
// Built-in protocols (three switch states per room)
// ---------------------------------------------------------------------------

inline std::string builtin_protocol_text(const std::string& name) {
  if (name == "alice")
    return "repeat(r-1) { flip(0,1) }\n"
           "flip(0,2)\n";
  if (name == "bob")
    return "see(2)\n"
           "repeat(r-2) { flip(1,2) }\n"
           "flip(1,0)\n";
  if (name == "charles")
    return "see(2)\n"
           "see(0)\n"
           "repeat(r-1) { flip(2,0) }\n"
           "flip(0,2)\n"
           "flip(0,1)\n";
  if (name == "deborah")
    return "see(2)\n"
           "see(0)\n"
           "see(1)\n"
           "repeat(r-1) { flip(*,1) }\n"
           "declare\n";
  if (name == "deborah_eve")
    return "see(2)\n"
           "see(0)\n"
           "flip(1,0)\n"
           "without_seeing(1) {\n"
           "  see(2)\n"
           "  repeat(r-1) { flip(0,2) }\n"
           "  repeat(r-3) { flip(2,0) }\n"
           "} otherwise {\n"
           "  repeat(r-1) { flip(*,1) }\n"
           "  declare\n"
           "}\n"
           "flip(2,1)\n"
           "flip(2,1)\n";
  throw error("unknown built-in protocol '" + name + "'");
}

namespace detail {

inline Controller compile_builtin(const std::string& name, int r, int n,
                                  bool append_declare = false) {
  Bindings b{r, n, 3};
  std::string text = builtin_protocol_text(name);
  if (append_declare) text += "declare\n";
  return compile_text(text, b, name);
}

}  // namespace detail

/// The four-prisoner staged suite for q = 3. Declaration comes from the
/// last prisoner once the earlier stages have forced every visit.
inline std::vector<Controller> four_prisoner_suite(int r) {
  if (r < 3)
    throw infeasible_error(
        "four_prisoner_suite needs r >= 3; one- and two-room instances have "
        "their own known strategies");
  return {detail::compile_builtin("alice", r, 4),
          detail::compile_builtin("bob", r, 4),
          detail::compile_builtin("charles", r, 4),
          detail::compile_builtin("deborah", r, 4)};
}

/// Five prisoners, q = 3. Deborah and Eve share one protocol. Three rooms
/// are rejected: no construction is known either way for that instance.
inline std::vector<Controller> five_prisoner_suite(int r) {
  if (r == 3)
    throw infeasible_error(
        "five prisoners with exactly three rooms is an open problem");
  if (r < 3)
    throw infeasible_error("five_prisoner_suite needs r >= 4");
  return {detail::compile_builtin("alice", r, 5),
          detail::compile_builtin("bob", r, 5),
          detail::compile_builtin("charles", r, 5),
          detail::compile_builtin("deborah_eve", r, 5),
          detail::compile_builtin("deborah_eve", r, 5)};
}

/*
 * Staged suite adapted to the prisoner count: for n < 4 the tail of the
 * four-prisoner suite is dropped and the last remaining prisoner appends
 * a declare; n = 5 selects the five-prisoner suite.
 */
inline std::vector<Controller> staged_suite(int n, int r) {
  switch (n) {
    case 2:
      if (r < 3) throw infeasible_error("staged_suite needs r >= 3");
      return {detail::compile_builtin("alice", r, n),
              detail::compile_builtin("bob", r, n, true)};
    case 3:
      if (r < 3) throw infeasible_error("staged_suite needs r >= 3");
      return {detail::compile_builtin("alice", r, n),
              detail::compile_builtin("bob", r, n),
              detail::compile_builtin("charles", r, n, true)};
    case 4:
      return four_prisoner_suite(r);
    case 5:
      return five_prisoner_suite(r);
    default:
      throw infeasible_error("staged suites cover 2 <= n <= 5");
  }
}

// ---------------------------------------------------------------------------
// Sequential composition
// ---------------------------------------------------------------------------

/*
 * One controller that plays a's move and then b's move within a single
 * visit: b observes what a wrote. The composite declares as soon as
 * either component does.
 */
inline Controller sequential_compose(const Controller& a, const Controller& b) {
  if (a.q() != b.q()) throw error("sequential_compose: q mismatch");
  using State = std::pair<ctrl_t, ctrl_t>;
  return build_controller(
      a.q(), State{a.initial(), b.initial()},
      [&](const State& s, state_t obs) {
        const ControllerStep& first = a.step(s.first, obs);
        const ControllerStep& second = b.step(s.second, first.write);
        return std::tuple<state_t, State, bool>(
            second.write, State{first.next, second.next},
            first.declares || second.declares);
      });
}

// ---------------------------------------------------------------------------
// Switch layouts
// ---------------------------------------------------------------------------

/// Named sub-switches mapped onto one flat state range; the first named
/// switch varies fastest.
struct SwitchLayout {
  struct Sub {
    std::string name;
    int size;
  };
  std::vector<Sub> subs;

  int flat_size() const {
    int p = 1;
    for (const Sub& s : subs) p *= s.size;
    return p;
  }

  int get(int flat, int idx) const {
    for (int i = 0; i < idx; ++i) flat /= subs[i].size;
    return flat % subs[idx].size;
  }

  int encode(const std::vector<int>& values) const {
    int flat = 0;
    for (int i = static_cast<int>(subs.size()) - 1; i >= 0; --i) {
      if (values[i] < 0 || values[i] >= subs[i].size)
        throw error("switch value out of range");
      flat = flat * subs[i].size + values[i];
    }
    return flat;
  }

  std::vector<int> decode(int flat) const {
    std::vector<int> values;
    values.reserve(subs.size());
    for (const Sub& s : subs) {
      values.push_back(flat % s.size);
      flat /= s.size;
    }
    return values;
  }
};

struct SymmetricStrategy {
  Controller controller;  // shared by every prisoner
  SwitchLayout layout;
};

// ---------------------------------------------------------------------------
// Race leader election (fewer prisoners than rooms)
// ---------------------------------------------------------------------------

namespace detail {

/*
 * Per-prisoner race logic over a binary mark switch S and a level switch
 * T taking values 0..n. A prisoner on level i raises T from at most
 * n - i to n - i + 1 in a prescribed number of rooms: ceil(r/i) arbitrary
 * rooms when i does not divide r, otherwise ceil(n/i) marked rooms.
 * Completing level 1 makes the prisoner the unique leader. Marking
 * happens at the first S = 0 sighting regardless of level.
 */
struct RaceCore {
  int n;
  int r;

  struct State {
    bool marked = false;
    int level;       // n down to 1; 0 once leader
    int progress = 0;

    auto tie() const { return std::tie(marked, level, progress); }
    bool operator<(const State& o) const { return tie() < o.tie(); }
    bool operator==(const State& o) const { return tie() == o.tie(); }
  };

  State initial() const { return State{false, n, 0}; }

  int target(int level) const {
    return r % level != 0 ? (r + level - 1) / level : (n + level - 1) / level;
  }

  // returns (S', T', next state)
  std::tuple<int, int, State> step(const State& s, int S, int T) const {
    State next = s;
    int S_out = S;
    if (!s.marked && S == 0) {
      S_out = 1;
      next.marked = true;
    }
    int T_out = T;
    if (s.level >= 1) {
      bool eligible = T <= n - s.level &&
                      (r % s.level != 0 ? true : S_out == 1);
      if (eligible) {
        T_out = n - s.level + 1;
        if (++next.progress == target(s.level)) {
          --next.level;  // level 0 marks the leader
          next.progress = 0;
        }
      }
    }
    return {S_out, T_out, next};
  }
};

inline SwitchLayout race_layout(int n) {
  return SwitchLayout{{{"S", 2}, {"T", n + 1}}};
}

/// Race controller without precondition checks; adversarial tests run it
/// outside the coprime regime on purpose.
inline Controller race_machine(int n, int r) {
  RaceCore core{n, r};
  SwitchLayout lay = race_layout(n);
  return build_controller(
      static_cast<unsigned>(lay.flat_size()), core.initial(),
      [&](const RaceCore::State& s, state_t obs) {
        if (s.level == 0)
          return std::tuple<state_t, RaceCore::State, bool>(obs, s, false);
        auto [S, T, next] = core.step(s, lay.get(obs, 0), lay.get(obs, 1));
        return std::tuple<state_t, RaceCore::State, bool>(
            static_cast<state_t>(lay.encode({S, T})), next, false);
      },
      [&](const RaceCore::State& s) {
        std::vector<std::string> names;
        if (s.level == 0) names.push_back("leader");
        return names;
      });
}

}  // namespace detail

inline int race_target(int n, int r, int level) {
  return detail::RaceCore{n, r}.target(level);
}

inline SymmetricStrategy race_leader_election(int n, int r) {
  if (std::gcd(n, r) != 1)
    throw infeasible_error("race election needs hcf(n, r) = 1");
  if (!(r > n && n >= 2))
    throw infeasible_error("race election needs r > n >= 2");
  return {detail::race_machine(n, r), detail::race_layout(n)};
}

// ---------------------------------------------------------------------------
// Candidate election (fewer rooms than prisoners)
// ---------------------------------------------------------------------------

/// Minimal positive (k, m) with k*n = m*r - 1.
inline std::pair<int, int> compute_km(int n, int r) {
  if (std::gcd(n, r) != 1)
    throw infeasible_error("compute_km: no solution when hcf(n, r) > 1");
  for (int k = 1;; ++k) {
    if ((static_cast<long long>(k) * n + 1) % r == 0)
      return {k, static_cast<int>((static_cast<long long>(k) * n + 1) / r)};
  }
}

namespace detail {

/*
 * Candidate logic over two binary switches. A prisoner marks one S switch
 * (becoming Type I), raises T from 0 to 1 on its first k opportunities
 * regardless of type, and as Type I lowers T from 1 to 0 up to m times;
 * finishing all m lowerings makes it Type II. A visit needing moves in
 * both directions alternates until one budget is exhausted and writes the
 * net result.
 */
struct CandidateCore {
  int k;
  int m;

  struct State {
    bool type1 = false;
    int raises = 0;
    int lowers = 0;

    auto tie() const { return std::tie(type1, raises, lowers); }
    bool operator<(const State& o) const { return tie() < o.tie(); }
    bool operator==(const State& o) const { return tie() == o.tie(); }
  };

  State initial() const { return State{}; }

  std::tuple<int, int, State> step(const State& s, int S, int T) const {
    State next = s;
    int S_out = S;
    if (!s.type1 && S == 0) {
      S_out = 1;
      next.type1 = true;
    }
    int cur = T;
    for (;;) {
      if (next.raises < k && cur == 0) {
        cur = 1;
        ++next.raises;
        continue;
      }
      if (next.type1 && next.lowers < m && cur == 1) {
        cur = 0;
        ++next.lowers;
        continue;
      }
      break;
    }
    return {S_out, cur, next};
  }

  bool type2(const State& s) const { return s.lowers == m; }
};

inline SwitchLayout candidate_layout() {
  return SwitchLayout{{{"S", 2}, {"T", 2}}};
}

inline Controller candidate_machine(int n, int r, int k, int m) {
  (void)n;
  (void)r;
  CandidateCore core{k, m};
  SwitchLayout lay = candidate_layout();
  return build_controller(
      static_cast<unsigned>(lay.flat_size()), core.initial(),
      [&](const CandidateCore::State& s, state_t obs) {
        auto [S, T, next] = core.step(s, lay.get(obs, 0), lay.get(obs, 1));
        return std::tuple<state_t, CandidateCore::State, bool>(
            static_cast<state_t>(lay.encode({S, T})), next, false);
      },
      [&](const CandidateCore::State& s) {
        std::vector<std::string> names;
        if (s.type1) names.push_back("type1");
        if (core.type2(s)) names.push_back("type2");
        return names;
      });
}

}  // namespace detail

inline SymmetricStrategy candidate_leader(int n, int r) {
  if (std::gcd(n, r) != 1)
    throw infeasible_error("candidate election needs hcf(n, r) = 1");
  if (!(n > r && r >= 2))
    throw infeasible_error("candidate election needs n > r >= 2");
  auto [k, m] = compute_km(n, r);
  return {detail::candidate_machine(n, r, k, m), detail::candidate_layout()};
}

// ---------------------------------------------------------------------------
// Leader phase
// ---------------------------------------------------------------------------

/*
 * Four-state endgame played once a unique leader exists, on switch values
 * relative to the election alphabet. The leader certifies the other
 * prisoners one round each: it deposits a token (1); exactly one
 * uncertified prisoner claims it (1 -> 2) and then marks every room it
 * finds clean (0 -> 2), which forces a full tour; the tourist converts one
 * mark to a done flag (2 -> 3); seeing the flag, the leader sweeps all r
 * marked rooms back to 0, visiting every room itself. After n - 1 rounds
 * each prisoner, leader included, has provably entered every room inside
 * this phase, and the leader declares.
 */
struct LeaderPhasePlugin {
  int n;
  int r;

  static constexpr unsigned kStates = 4;

  Controller leader_controller() const {
    struct State {
      int rounds = 0;
      int phase = 0;  // 0 deposit token, 1 wait for done flag, 2 sweep
      int swept = 0;

      auto tie() const { return std::tie(rounds, phase, swept); }
      bool operator<(const State& o) const { return tie() < o.tie(); }
    };
    int rounds_needed = n - 1;
    int rr = r;
    return build_controller(
        kStates, State{},
        [rounds_needed, rr](const State& s, state_t obs) {
          using R = std::tuple<state_t, State, bool>;
          if (s.rounds == rounds_needed) return R(obs, s, true);
          State next = s;
          switch (s.phase) {
            case 0:
              if (obs == 0) {
                next.phase = 1;
                return R(1, next, false);
              }
              break;
            case 1:
              if (obs == 3) {
                next.phase = 2;
                next.swept = 1;
                if (next.swept == rr) {
                  next = State{s.rounds + 1, 0, 0};
                }
                return R(0, next, false);
              }
              break;
            case 2:
              if (obs == 2) {
                ++next.swept;
                if (next.swept == rr) next = State{s.rounds + 1, 0, 0};
                return R(0, next, false);
              }
              break;
          }
          return R(obs, next, false);
        },
        [](const State&) { return std::vector<std::string>{"leader_phase"}; });
  }

  Controller non_leader_controller() const {
    struct State {
      int phase = 0;  // 0 uncertified, 1 touring, 2 flag pending, 3 certified
      int marks_left = 0;

      auto tie() const { return std::tie(phase, marks_left); }
      bool operator<(const State& o) const { return tie() < o.tie(); }
    };
    int rr = r;
    return build_controller(
        kStates, State{},
        [rr](const State& s, state_t obs) {
          using R = std::tuple<state_t, State, bool>;
          State next = s;
          switch (s.phase) {
            case 0:
              if (obs == 1) {  // claim the token; the claim room counts as a mark
                next.phase = rr - 1 > 0 ? 1 : 2;
                next.marks_left = rr - 1;
                return R(2, next, false);
              }
              break;
            case 1:
              if (obs == 0) {
                if (--next.marks_left == 0) next.phase = 2;
                return R(2, next, false);
              }
              break;
            case 2:
              if (obs == 2) {
                next = State{3, 0};
                return R(3, next, false);
              }
              break;
            case 3:
              break;
          }
          return R(obs, next, false);
        });
  }
};

// ---------------------------------------------------------------------------
// Election + leader phase composition
// ---------------------------------------------------------------------------

/*
 * Stacks the leader phase on top of an election. Election play happens in
 * states below q_base. The prisoner whose election controller reaches a
 * "leader"-labeled state promotes r rooms to q_base and then runs the
 * leader role; everyone else permanently becomes a plugin non-leader upon
 * first seeing a state >= q_base, ignoring election states afterwards.
 */
inline Controller leader_wins_compose(const Controller& election, int q_base,
                                      const LeaderPhasePlugin& plugin, int r) {
  if (static_cast<int>(election.q()) != q_base)
    throw error("leader_wins_compose: election alphabet must equal q_base");
  Controller lead = plugin.leader_controller();
  Controller follow = plugin.non_leader_controller();
  if (election.has_label("leader", election.initial()))
    throw error("leader_wins_compose: election starts as leader");

  struct State {
    int mode;  // 0 election, 1 non-leader, 2 promoting, 3 leader phase
    ctrl_t inner;
    int promoted;

    auto tie() const { return std::tie(mode, inner, promoted); }
    bool operator<(const State& o) const { return tie() < o.tie(); }
  };
  unsigned q_total = static_cast<unsigned>(q_base) + LeaderPhasePlugin::kStates;

  return build_controller(
      q_total, State{0, election.initial(), 0},
      [&, q_base, r](const State& s, state_t obs) {
        using R = std::tuple<state_t, State, bool>;
        switch (s.mode) {
          case 0: {
            if (obs >= q_base) {
              const ControllerStep& st = follow.step(follow.initial(),
                                                     static_cast<state_t>(obs - q_base));
              return R(static_cast<state_t>(st.write + q_base), State{1, st.next, 0},
                       st.declares);
            }
            const ControllerStep& st = election.step(s.inner, obs);
            if (election.has_label("leader", st.next))
              return R(st.write, State{2, 0, 0}, st.declares);
            return R(st.write, State{0, st.next, 0}, st.declares);
          }
          case 1: {
            if (obs < q_base) return R(obs, s, false);
            const ControllerStep& st = follow.step(s.inner,
                                                   static_cast<state_t>(obs - q_base));
            return R(static_cast<state_t>(st.write + q_base), State{1, st.next, 0},
                     st.declares);
          }
          case 2: {
            if (obs >= q_base) return R(obs, s, false);
            if (s.promoted + 1 == r)
              return R(static_cast<state_t>(q_base), State{3, lead.initial(), 0}, false);
            return R(static_cast<state_t>(q_base), State{2, 0, s.promoted + 1}, false);
          }
          default: {
            if (obs < q_base) return R(obs, s, false);
            const ControllerStep& st = lead.step(s.inner,
                                                 static_cast<state_t>(obs - q_base));
            return R(static_cast<state_t>(st.write + q_base), State{3, st.next, 0},
                     st.declares);
          }
        }
      },
      [&](const State& s) {
        std::vector<std::string> names;
        if (s.mode >= 2) names.push_back("leader");
        return names;
      });
}

// ---------------------------------------------------------------------------
// Full symmetric strategy
// ---------------------------------------------------------------------------

inline bool symmetric_feasible(int n, int r) { return std::gcd(n, r) == 1; }

namespace detail {

/*
 * Election for n > r >= 3: candidates run over (S, T); the r - 1 Type II
 * prisoners race among themselves on an extra pair of switches that
 * everyone else writes back untouched. Candidate raises continue after
 * Type II, so both games overlap in a visit; the controller emits the net
 * room state.
 */
inline Controller candidate_race_machine(int r, int k, int m) {
  CandidateCore cand{k, m};
  RaceCore race{r - 1, r};
  SwitchLayout lay{{{"S", 2}, {"T", 2}, {"RS", 2}, {"RT", r}}};

  struct State {
    CandidateCore::State cand;
    RaceCore::State race;

    auto tie() const { return std::tie(cand, race); }
    bool operator<(const State& o) const { return tie() < o.tie(); }
  };

  return build_controller(
      static_cast<unsigned>(lay.flat_size()), State{cand.initial(), race.initial()},
      [&](const State& s, state_t obs) {
        std::vector<int> sw = lay.decode(obs);
        auto [S, T, cand_next] = cand.step(s.cand, sw[0], sw[1]);
        int RS = sw[2], RT = sw[3];
        RaceCore::State race_next = s.race;
        if (cand.type2(cand_next) && s.race.level > 0)
          std::tie(RS, RT, race_next) = race.step(s.race, sw[2], sw[3]);
        return std::tuple<state_t, State, bool>(
            static_cast<state_t>(lay.encode({S, T, RS, RT})),
            State{cand_next, race_next}, false);
      },
      [&](const State& s) {
        std::vector<std::string> names;
        if (cand.type2(s.cand)) names.push_back("type2");
        if (s.race.level == 0) names.push_back("leader");
        return names;
      });
}

}  // namespace detail

/*
 * The general symmetric construction: a leader election suited to the
 * shape of (n, r), then the four-state leader phase. Feasible exactly
 * when hcf(n, r) = 1.
 */
inline SymmetricStrategy full_symmetric_strategy(int n, int r) {
  if (!symmetric_feasible(n, r))
    throw infeasible_error("no symmetric strategy exists when hcf(n, r) > 1");
  if (n < 2 || r < 2)
    throw infeasible_error("full_symmetric_strategy needs n >= 2 and r >= 2");

  LeaderPhasePlugin plugin{n, r};
  if (r > n) {
    SymmetricStrategy race = race_leader_election(n, r);
    int q_base = race.layout.flat_size();
    return {leader_wins_compose(race.controller, q_base, plugin, r), race.layout};
  }

  auto [k, m] = compute_km(n, r);
  if (r == 2) {
    // A single Type II candidate is the leader outright.
    Controller cand = detail::candidate_machine(n, r, k, m);
    Controller election(cand);
    for (ctrl_t s = 0; s < cand.num_states(); ++s)
      if (cand.has_label("type2", s)) election.add_label("leader", s);
    SwitchLayout lay = detail::candidate_layout();
    return {leader_wins_compose(election, lay.flat_size(), plugin, r), lay};
  }

  Controller election = detail::candidate_race_machine(r, k, m);
  SwitchLayout lay{{{"S", 2}, {"T", 2}, {"RS", 2}, {"RT", r}}};
  return {leader_wins_compose(election, lay.flat_size(), plugin, r), lay};
}

}  // namespace lightswitch
