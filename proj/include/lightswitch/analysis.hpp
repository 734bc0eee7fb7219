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

#include <map>
#include <optional>
#include <set>
#include <utility>
#include <vector>

#include "lightswitch/controller.hpp"

namespace lightswitch {

/*
 * Limiting behavior of one prisoner led into a single two-state room over
 * and over. The room-state sequence of a finite controller is eventually
 * periodic, so it is either eventually constant or takes both values
 * infinitely often; a controller may also declare during the probe, which
 * is reported as its own outcome.
 */
struct LimitClassification {
  enum class Kind { eventually_constant, both_infinitely_often, declared_during_probe };
  Kind kind;
  state_t constant_state = 0;  // eventually_constant
  std::uint64_t onset = 0;     // first time the room stays at constant_state
  std::uint64_t declare_time = 0;
};

namespace detail {

struct ProbeCycle {
  std::vector<state_t> room_history;  // room state before each visit; index 0 initial
  std::vector<ctrl_t> ctrl_history;
  std::uint64_t cycle_start;  // visit index where the lasso cycle begins
  bool declared = false;
  std::uint64_t declare_time = 0;
};

/// Repeatedly leads the controller into one room until a (control, room)
/// pair repeats. The pigeonhole bound states * q caps the probe length.
inline ProbeCycle probe_single_room(const Controller& c, ctrl_t start_ctrl,
                                    state_t start_room) {
  ProbeCycle out;
  std::map<std::pair<ctrl_t, state_t>, std::uint64_t> seen;
  ctrl_t ctrl = start_ctrl;
  state_t room = start_room;
  for (std::uint64_t t = 0;; ++t) {
    auto [it, fresh] = seen.emplace(std::make_pair(ctrl, room), t);
    out.room_history.push_back(room);
    out.ctrl_history.push_back(ctrl);
    if (!fresh) {
      out.cycle_start = it->second;
      out.room_history.pop_back();  // the repeated pair is not a new visit
      out.ctrl_history.pop_back();
      return out;
    }
    const ControllerStep& step = c.step(ctrl, room);
    if (step.declares) {
      out.declared = true;
      out.declare_time = t;
      out.cycle_start = t;
      return out;
    }
    room = step.write;
    ctrl = step.next;
    if (t > static_cast<std::uint64_t>(c.num_states()) * c.q() + 1)
      throw error("internal: probe exceeded the pigeonhole bound");
  }
}

}  // namespace detail

inline LimitClassification classify_single_room(const Controller& c, state_t start_state) {
  if (c.q() != 2) throw error("single-room classification expects q = 2 machines");
  if (start_state >= c.q()) throw error("start state out of range");
  detail::ProbeCycle probe = detail::probe_single_room(c, c.initial(), start_state);
  if (probe.declared)
    return {LimitClassification::Kind::declared_during_probe, 0, 0, probe.declare_time};

  bool seen[2] = {false, false};
  for (std::uint64_t t = probe.cycle_start; t < probe.room_history.size(); ++t)
    seen[probe.room_history[t]] = true;
  if (seen[0] && seen[1])
    return {LimitClassification::Kind::both_infinitely_often, 0, 0, 0};

  state_t constant = probe.room_history[probe.cycle_start];
  std::uint64_t onset = 0;
  for (std::uint64_t t = probe.room_history.size(); t-- > 0;) {
    if (probe.room_history[t] != constant) {
      onset = t + 1;
      break;
    }
  }
  return {LimitClassification::Kind::eventually_constant, constant, onset, 0};
}

/// Probes from an arbitrary (control state, room state) start; if the room
/// eventually freezes, returns the frozen value and the first time from
/// which it never changes.
inline std::optional<std::pair<state_t, std::uint64_t>> stuck_state(const Controller& c,
                                                                    ctrl_t ctrl,
                                                                    state_t room_state) {
  if (c.q() != 2) throw error("stuck_state expects q = 2 machines");
  detail::ProbeCycle probe = detail::probe_single_room(c, ctrl, room_state);
  if (probe.declared) return std::nullopt;
  state_t constant = probe.room_history[probe.cycle_start];
  for (std::uint64_t t = probe.cycle_start; t < probe.room_history.size(); ++t)
    if (probe.room_history[t] != constant) return std::nullopt;
  std::uint64_t onset = 0;
  for (std::uint64_t t = probe.room_history.size(); t-- > 0;) {
    if (probe.room_history[t] != constant) {
      onset = t + 1;
      break;
    }
  }
  return std::make_pair(constant, onset);
}

/*
 * The reset procedure: run the prisoner until stuck, then flip the room to
 * the opposite value and run again, repeatedly. Returns the number of
 * resets after which the prisoner keeps returning the room to the reset
 * value, or infinity when it re-sticks at the original value forever.
 * The control state at each reset instant determines all later behavior,
 * so a repeat there proves the infinite case.
 */
struct ResetIndex {
  bool infinite;
  std::uint64_t k;  // valid when not infinite

  static ResetIndex finite(std::uint64_t k) { return {false, k}; }
  static ResetIndex inf() { return {true, 0}; }

  bool operator==(const ResetIndex&) const = default;
};

inline ResetIndex reset_index(const Controller& c, state_t stuck_in) {
  if (c.q() != 2) throw error("reset_index expects q = 2 machines");
  auto initial = stuck_state(c, c.initial(), 0);
  if (!initial || initial->first != stuck_in)
    throw error("reset_index: prisoner does not get stuck in the given state "
                "from the initial probe");
  state_t reset_value = stuck_in == 0 ? 1 : 0;

  // Control state once the initial probe has settled into its cycle.
  detail::ProbeCycle probe = detail::probe_single_room(c, c.initial(), 0);
  ctrl_t at_reset = probe.ctrl_history[probe.cycle_start];

  std::set<ctrl_t> seen_at_reset;
  for (std::uint64_t k = 1;; ++k) {
    if (!seen_at_reset.insert(at_reset).second) return ResetIndex::inf();
    detail::ProbeCycle run = detail::probe_single_room(c, at_reset, reset_value);
    if (run.declared)
      throw error("reset_index: controller declared during the reset probe");
    bool returns = false;
    for (std::uint64_t t = run.cycle_start; t < run.room_history.size(); ++t)
      if (run.room_history[t] == reset_value) returns = true;
    if (returns) return ResetIndex::finite(k);
    at_reset = run.ctrl_history[run.cycle_start];
  }
}

}  // namespace lightswitch
