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

#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

namespace lightswitch {

struct error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Instance is outside the solvable regime (hcf > 1, open problem, unsupported size).
struct infeasible_error : error {
  using error::error;
};

/// Exploration exceeded its node budget. Never downgraded to a verdict.
struct budget_error : error {
  budget_error(const std::string& what, std::uint64_t node_count)
      : error(what), nodes(node_count) {}
  std::uint64_t nodes;
};

using state_t = std::uint16_t;  // room switch value, < q
using ctrl_t = std::uint32_t;   // controller memory state

struct ControllerStep {
  state_t write;
  ctrl_t next;
  bool declares;

  auto operator<=>(const ControllerStep&) const = default;
};

/*
 * A deterministic finite-state transducer driven by room observations.
 * One transition fires per room entry: the prisoner observes the switch,
 * writes a value back (possibly unchanged), moves to the next memory
 * state and may declare. The transition table is total over
 * (state, observation) and any state entered through a declaring
 * transition is an absorbing no-op.
 */
class Controller {
 public:
  Controller() = default;

  Controller(unsigned q, ctrl_t num_states, ctrl_t initial,
             std::vector<ControllerStep> table)
      : q_(q), num_states_(num_states), initial_(initial),
        table_(std::move(table)) {
    if (q_ == 0 || num_states_ == 0)
      throw error("controller needs at least one state and one switch value");
    if (initial_ >= num_states_) throw error("initial state out of range");
    if (table_.size() != static_cast<std::size_t>(num_states_) * q_)
      throw error("transition table is not total");
  }

  unsigned q() const { return q_; }
  ctrl_t num_states() const { return num_states_; }
  ctrl_t initial() const { return initial_; }

  const ControllerStep& step(ctrl_t state, state_t observed) const {
    return table_[static_cast<std::size_t>(state) * q_ + observed];
  }

  const std::vector<ControllerStep>& table() const { return table_; }

  void add_label(const std::string& name, ctrl_t state) {
    auto& bits = labels_[name];
    if (bits.size() < num_states_) bits.resize(num_states_, 0);
    bits[state] = 1;
  }

  bool has_label(const std::string& name, ctrl_t state) const {
    auto it = labels_.find(name);
    return it != labels_.end() && state < it->second.size() &&
           it->second[state] != 0;
  }

  const std::unordered_map<std::string, std::vector<char>>& labels() const {
    return labels_;
  }

  bool operator==(const Controller& o) const {
    return q_ == o.q_ && num_states_ == o.num_states_ &&
           initial_ == o.initial_ && table_ == o.table_;
  }

  /// Checks totality, index bounds and declare-absorption; throws on violation.
  void validate() const {
    for (ctrl_t s = 0; s < num_states_; ++s) {
      for (unsigned v = 0; v < q_; ++v) {
        const ControllerStep& t = step(s, static_cast<state_t>(v));
        if (t.write >= q_) throw error("write out of range");
        if (t.next >= num_states_) throw error("next state out of range");
        if (t.declares && !absorbing_no_op(t.next))
          throw error("declaring transition must lead to an absorbing state");
      }
    }
  }

 private:
  bool absorbing_no_op(ctrl_t s) const {
    for (unsigned v = 0; v < q_; ++v) {
      const ControllerStep& t = step(s, static_cast<state_t>(v));
      if (t.write != v || t.next != s || t.declares) return false;
    }
    return true;
  }

  unsigned q_ = 0;
  ctrl_t num_states_ = 0;
  ctrl_t initial_ = 0;
  std::vector<ControllerStep> table_;
  std::unordered_map<std::string, std::vector<char>> labels_;
};

/// Absorbing controller that never changes a room and never declares.
inline Controller make_no_op_controller(unsigned q) {
  std::vector<ControllerStep> table;
  table.reserve(q);
  for (unsigned v = 0; v < q; ++v)
    table.push_back({static_cast<state_t>(v), 0, false});
  return Controller(q, 1, 0, std::move(table));
}

/// Declares on the very first room entry, then goes silent.
inline Controller make_declare_controller(unsigned q) {
  std::vector<ControllerStep> table;
  for (unsigned v = 0; v < q; ++v)
    table.push_back({static_cast<state_t>(v), 1, true});
  for (unsigned v = 0; v < q; ++v)
    table.push_back({static_cast<state_t>(v), 1, false});
  return Controller(q, 2, 0, std::move(table));
}

/*
 * Builds a controller by exploring an abstract state machine from its
 * initial state. `StepFn` maps (state, observation) to
 * (write, next state, declares); `LabelFn` (optional) returns label names
 * for a state. Declaring transitions are redirected to a shared absorbing
 * sink so the resulting table always satisfies declare-absorption.
 */
template <typename State, typename StepFn, typename LabelFn>
Controller build_controller(unsigned q, const State& initial, StepFn&& step_fn,
                            LabelFn&& label_fn) {
  std::map<State, ctrl_t> ids;
  std::vector<State> states;
  auto intern = [&](const State& s) {
    auto [it, fresh] = ids.emplace(s, static_cast<ctrl_t>(states.size()));
    if (fresh) states.push_back(s);
    return it->second;
  };
  intern(initial);

  struct Row {
    state_t write;
    ctrl_t next;
    bool declares;
  };
  std::vector<Row> rows;
  bool any_declare = false;
  for (std::size_t i = 0; i < states.size(); ++i) {
    State cur = states[i];  // copy: `states` may reallocate below
    for (unsigned v = 0; v < q; ++v) {
      auto [write, next, declares] = step_fn(cur, static_cast<state_t>(v));
      if (write >= q) throw error("build_controller: write out of range");
      ctrl_t next_id = 0;
      if (!declares) next_id = intern(next);
      any_declare |= declares;
      rows.push_back({static_cast<state_t>(write), next_id, declares});
    }
  }

  ctrl_t n = static_cast<ctrl_t>(states.size());
  ctrl_t sink = n;  // appended only if some transition declares
  std::vector<ControllerStep> table;
  table.reserve(static_cast<std::size_t>(n + (any_declare ? 1 : 0)) * q);
  for (const Row& rw : rows)
    table.push_back({rw.write, rw.declares ? sink : rw.next, rw.declares});
  if (any_declare) {
    for (unsigned v = 0; v < q; ++v)
      table.push_back({static_cast<state_t>(v), sink, false});
    ++n;
  }

  Controller c(q, n, 0, std::move(table));
  for (ctrl_t i = 0; i < static_cast<ctrl_t>(states.size()); ++i)
    for (const std::string& name : label_fn(states[i])) c.add_label(name, i);
  return c;
}

template <typename State, typename StepFn>
Controller build_controller(unsigned q, const State& initial, StepFn&& step_fn) {
  return build_controller(q, initial, std::forward<StepFn>(step_fn),
                          [](const State&) { return std::vector<std::string>{}; });
}

}  // namespace lightswitch
