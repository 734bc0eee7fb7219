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
#include <istream>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "lightswitch/controller.hpp"

namespace lightswitch {

struct World {
  int n;  // prisoners
  int r;  // rooms
  int q;  // switch states per room

  void validate() const {
    if (n < 1 || r < 1 || q < 1) throw error("n, r, q must be positive");
    if (n * r > 64) throw error("instances beyond 64 (prisoner, room) pairs are unsupported");
  }
};

struct ScheduleEvent {
  std::uint64_t time;
  int prisoner;
  int room;
};

/*
 * One game configuration: per-room switch values, per-prisoner controller
 * states, the warden's ground-truth visited matrix (bit p*r+j), and the
 * identity of the declarer once somebody has declared.
 */
struct Configuration {
  std::vector<state_t> rooms;
  std::vector<ctrl_t> ctrls;
  std::uint64_t visited = 0;
  int declared_by = -1;

  bool declared() const { return declared_by >= 0; }

  bool visited_bit(int prisoner, int room, int r) const {
    return (visited >> (prisoner * r + room)) & 1u;
  }

  bool operator==(const Configuration&) const = default;
};

inline Configuration initial_configuration(const World& w,
                                           const std::vector<state_t>& init_states,
                                           const std::vector<Controller>& controllers) {
  w.validate();
  if (static_cast<int>(init_states.size()) != w.r)
    throw error("init vector length must equal r");
  for (state_t s : init_states)
    if (s >= w.q) throw error("initial room state out of range");
  if (static_cast<int>(controllers.size()) != w.n)
    throw error("need one controller per prisoner");
  Configuration cfg;
  cfg.rooms = init_states;
  cfg.ctrls.reserve(w.n);
  for (const Controller& c : controllers) {
    if (static_cast<int>(c.q()) != w.q) throw error("controller q mismatch");
    cfg.ctrls.push_back(c.initial());
  }
  return cfg;
}

inline Configuration initial_configuration(const World& w,
                                           const std::vector<Controller>& controllers) {
  return initial_configuration(w, std::vector<state_t>(w.r, 0), controllers);
}

/// Pure one-step semantics. The game ends at the first declaration, so
/// applying an event to a declared configuration is an error.
inline Configuration apply_event(const World& w, const std::vector<Controller>& controllers,
                                 const Configuration& cfg, int prisoner, int room) {
  if (cfg.declared()) throw error("event applied after declaration");
  if (prisoner < 0 || prisoner >= w.n || room < 0 || room >= w.r)
    throw error("event indices out of range");
  Configuration next = cfg;
  state_t observed = cfg.rooms[room];
  const ControllerStep& step = controllers[prisoner].step(cfg.ctrls[prisoner], observed);
  next.rooms[room] = step.write;
  next.ctrls[prisoner] = step.next;
  next.visited |= std::uint64_t{1} << (prisoner * w.r + room);
  if (step.declares) next.declared_by = prisoner;
  return next;
}

inline bool is_safe_declare(const World& w, const Configuration& cfg) {
  if (!cfg.declared()) throw error("is_safe_declare needs a declared configuration");
  std::uint64_t full = (w.n * w.r == 64) ? ~std::uint64_t{0}
                                         : (std::uint64_t{1} << (w.n * w.r)) - 1;
  return cfg.visited == full;
}

// ---------------------------------------------------------------------------
// Traces
// ---------------------------------------------------------------------------

struct TraceStep {
  ScheduleEvent event;
  state_t observed;
  state_t written;
  bool declared;
};

struct Trace {
  World world;
  Configuration initial;
  std::vector<TraceStep> steps;
};

/// Replays a trace's events from its initial configuration, checking each
/// recorded observation and write. Returns the final configuration.
inline Configuration replay_trace(const Trace& t, const std::vector<Controller>& controllers) {
  Configuration cfg = t.initial;
  for (const TraceStep& s : t.steps) {
    if (cfg.rooms[s.event.room] != s.observed)
      throw error("trace replay: observation mismatch");
    Configuration next = apply_event(t.world, controllers, cfg, s.event.prisoner, s.event.room);
    if (next.rooms[s.event.room] != s.written)
      throw error("trace replay: write mismatch");
    if (next.declared() != s.declared)
      throw error("trace replay: declaration mismatch");
    cfg = std::move(next);
  }
  return cfg;
}

inline void write_trace_jsonl(const Trace& t, std::ostream& out) {
  nlohmann::ordered_json header;
  header["n"] = t.world.n;
  header["r"] = t.world.r;
  header["q"] = t.world.q;
  header["init"] = t.initial.rooms;
  out << header.dump() << "\n";
  for (const TraceStep& s : t.steps) {
    nlohmann::ordered_json line;
    line["t"] = s.event.time;
    line["prisoner"] = s.event.prisoner;
    line["room"] = s.event.room;
    line["observed"] = s.observed;
    line["written"] = s.written;
    line["declared"] = s.declared;
    out << line.dump() << "\n";
  }
}

/// Reads the JSONL trace format. Controller states in the returned trace's
/// initial configuration are not recoverable from the file; callers that
/// need them must replay against the original controllers.
inline Trace read_trace_jsonl(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw error("empty trace file");
  nlohmann::json header = nlohmann::json::parse(line);
  Trace t;
  t.world = World{header.at("n").get<int>(), header.at("r").get<int>(),
                  header.at("q").get<int>()};
  t.initial.rooms = header.at("init").get<std::vector<state_t>>();
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    nlohmann::json j = nlohmann::json::parse(line);
    TraceStep s;
    s.event.time = j.at("t").get<std::uint64_t>();
    s.event.prisoner = j.at("prisoner").get<int>();
    s.event.room = j.at("room").get<int>();
    s.observed = j.at("observed").get<state_t>();
    s.written = j.at("written").get<state_t>();
    s.declared = j.at("declared").get<bool>();
    t.steps.push_back(s);
  }
  return t;
}

// ---------------------------------------------------------------------------
// Known-initial-state wrapper
// ---------------------------------------------------------------------------

struct WrappedSetup {
  std::vector<Controller> controllers;
  int q_total;
  std::vector<state_t> init;  // relabeled initial room states
};

/*
 * Reduces a publicly known initial state to the all-zero convention.
 * The most common initial value is relabeled to 0 (ties toward the
 * smaller value); each remaining distinct value becomes a reserved
 * "dirty" state above the working alphabet. A wrapped controller treats
 * a dirty observation as 0: it acts exactly as it would on a room in
 * state 0, so the first visitor scrubs the room into the working range.
 */
inline WrappedSetup wrap_initial_state(const std::vector<Controller>& protocols,
                                       const std::vector<state_t>& known_init,
                                       int q_work) {
  std::map<state_t, int> freq;
  for (state_t v : known_init) ++freq[v];
  state_t zero_value = 0;
  int best = -1;
  for (const auto& [v, count] : freq) {
    if (count > best) {
      best = count;
      zero_value = v;
    }
  }

  std::map<state_t, state_t> relabel;
  relabel[zero_value] = 0;
  int dirty = 0;
  for (const auto& [v, count] : freq) {
    if (v == zero_value) continue;
    relabel[v] = static_cast<state_t>(q_work + dirty);
    ++dirty;
  }

  WrappedSetup out;
  out.q_total = q_work + dirty;
  for (state_t v : known_init) out.init.push_back(relabel[v]);

  for (const Controller& base : protocols) {
    if (static_cast<int>(base.q()) != q_work)
      throw error("wrap_initial_state: controller q must equal q_work");
    std::vector<ControllerStep> table;
    table.reserve(static_cast<std::size_t>(base.num_states()) * out.q_total);
    for (ctrl_t s = 0; s < base.num_states(); ++s) {
      for (int v = 0; v < out.q_total; ++v) {
        // Dirty observations are handled as observations of 0.
        table.push_back(base.step(s, static_cast<state_t>(v < q_work ? v : 0)));
      }
    }
    Controller wrapped(static_cast<unsigned>(out.q_total), base.num_states(),
                       base.initial(), std::move(table));
    for (const auto& [name, bits] : base.labels())
      for (ctrl_t s = 0; s < base.num_states(); ++s)
        if (s < bits.size() && bits[s]) wrapped.add_label(name, s);
    out.controllers.push_back(std::move(wrapped));
  }
  return out;
}

}  // namespace lightswitch
