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
#include <atomic>
#include <functional>
#include <memory>
#include <numeric>
#include <random>
#include <thread>
#include <vector>

#include "lightswitch/checker.hpp"
#include "lightswitch/semantics.hpp"

namespace lightswitch {

enum class FairnessClass { deterministic_fair, fair_almost_surely };

class Scheduler {
 public:
  virtual ~Scheduler() = default;
  virtual ScheduleEvent next(const Trace& so_far, const Configuration& current) = 0;
  virtual FairnessClass fairness() const = 0;
};

/// Cycles through all n*r (prisoner, room) pairs, prisoner-major.
class RoundRobinScheduler : public Scheduler {
 public:
  RoundRobinScheduler(int n, int r) : n_(n), r_(r) {}

  ScheduleEvent next(const Trace& so_far, const Configuration&) override {
    std::uint64_t t = so_far.steps.size();
    int idx = static_cast<int>(t % (static_cast<std::uint64_t>(n_) * r_));
    return {t, idx / r_, idx % r_};
  }

  FairnessClass fairness() const override { return FairnessClass::deterministic_fair; }

 private:
  int n_, r_;
};

/// Independent uniform choice each step; reproducible from the seed.
class RandomFairScheduler : public Scheduler {
 public:
  RandomFairScheduler(int n, int r, std::uint64_t seed)
      : n_(n), r_(r), rng_(seed) {}

  ScheduleEvent next(const Trace& so_far, const Configuration&) override {
    std::uint64_t t = so_far.steps.size();
    std::uniform_int_distribution<int> pd(0, n_ - 1), rd(0, r_ - 1);
    int p = pd(rng_);
    int j = rd(rng_);
    return {t, p, j};
  }

  FairnessClass fairness() const override { return FairnessClass::fair_almost_surely; }

 private:
  int n_, r_;
  std::mt19937_64 rng_;
};

/*
 * The adversary for hcf(n, r) = d > 1. Time is cut into blocks of d
 * steps. During block l, prisoners i*d..i*d+d-1 are led into rooms
 * j*d..j*d+d-1 (i = l mod n/d, j = l mod r/d) matched up by a permutation
 * sigma_l, so prisoners within a block stay mutually indistinguishable.
 * All residues use the 0-based convention. The default permutation source
 * cycles every permutation through every block-residue combination, which
 * makes the schedule deterministically fair.
 */
class BlockScheduler : public Scheduler {
 public:
  using PermSource = std::function<std::vector<int>(std::uint64_t ell)>;

  BlockScheduler(int n, int r)
      : BlockScheduler(n, r, default_source(n, r)) {}

  BlockScheduler(int n, int r, PermSource source)
      : n_(n), r_(r), d_(std::gcd(n, r)), source_(std::move(source)) {
    if (d_ <= 1)
      throw infeasible_error("block scheduler needs hcf(n, r) > 1");
  }

  ScheduleEvent next(const Trace& so_far, const Configuration&) override {
    std::uint64_t t = so_far.steps.size();
    std::uint64_t ell = t / d_;
    int k = static_cast<int>(t % d_);
    int i = static_cast<int>(ell % (n_ / d_));
    int j = static_cast<int>(ell % (r_ / d_));
    std::vector<int> sigma = source_(ell);
    return {t, i * d_ + k, j * d_ + sigma[k]};
  }

  FairnessClass fairness() const override { return FairnessClass::deterministic_fair; }

  int block_size() const { return d_; }

  /// All (prisoner, room) pairs occur within (n/d)(r/d) d! blocks.
  static PermSource default_source(int n, int r) {
    int d = std::gcd(n, r);
    std::uint64_t residues = static_cast<std::uint64_t>(n / d) * (r / d) /
                             std::gcd(n / d, r / d);
    std::vector<std::vector<int>> perms;
    std::vector<int> p(d);
    std::iota(p.begin(), p.end(), 0);
    do {
      perms.push_back(p);
    } while (std::next_permutation(p.begin(), p.end()));
    return [residues, perms](std::uint64_t ell) {
      return perms[(ell / residues) % perms.size()];
    };
  }

 private:
  int n_, r_, d_;
  PermSource source_;
};

// ---------------------------------------------------------------------------
// Simulation
// ---------------------------------------------------------------------------

enum class SimOutcome { declared_safe, declared_unsafe, cutoff };

struct SimResult {
  Trace trace;
  SimOutcome outcome;
  Configuration final_config;
};

inline SimResult simulate(Scheduler& scheduler, const std::vector<Controller>& controllers,
                          const World& w, const std::vector<state_t>& init,
                          std::uint64_t max_steps) {
  SimResult res;
  res.trace.world = w;
  res.trace.initial = initial_configuration(w, init, controllers);
  Configuration cfg = res.trace.initial;
  for (std::uint64_t t = 0; t < max_steps; ++t) {
    ScheduleEvent ev = scheduler.next(res.trace, cfg);
    ev.time = t;
    Configuration next = apply_event(w, controllers, cfg, ev.prisoner, ev.room);
    res.trace.steps.push_back(
        {ev, cfg.rooms[ev.room], next.rooms[ev.room], next.declared()});
    cfg = std::move(next);
    if (cfg.declared()) {
      res.outcome = is_safe_declare(w, cfg) ? SimOutcome::declared_safe
                                            : SimOutcome::declared_unsafe;
      res.final_config = std::move(cfg);
      return res;
    }
  }
  res.outcome = SimOutcome::cutoff;
  res.final_config = std::move(cfg);
  return res;
}

inline SimResult simulate(Scheduler& scheduler, const std::vector<Controller>& controllers,
                          const World& w, std::uint64_t max_steps) {
  return simulate(scheduler, controllers, w, std::vector<state_t>(w.r, 0), max_steps);
}

// ---------------------------------------------------------------------------
// Block-schedule invariants
// ---------------------------------------------------------------------------

struct BlockInvariantReport {
  bool ok = true;
  std::uint64_t first_violation_boundary = 0;  // time step of the boundary
  std::string message;
};

/*
 * Replays a block-scheduled trace of one shared symmetric controller and
 * checks, at every block boundary: equal room states within each room
 * block, equal observation histories within each prisoner block, and no
 * declaration. Histories are compared incrementally; equal prefixes stay
 * equal.
 */
inline BlockInvariantReport check_block_invariant(const Trace& trace, int n, int r,
                                                  const std::vector<Controller>& controllers) {
  if (static_cast<int>(controllers.size()) != n)
    throw error("check_block_invariant: need n controllers");
  for (const Controller& c : controllers)
    if (!(c == controllers.front()))
      throw error("check_block_invariant: controllers are not symmetric");
  int d = std::gcd(n, r);
  if (d <= 1) throw error("check_block_invariant: hcf(n, r) must exceed 1");

  std::vector<std::vector<state_t>> history(n);
  std::vector<std::size_t> checked(n, 0);
  Configuration cfg = trace.initial;

  auto boundary_check = [&](std::uint64_t t) -> BlockInvariantReport {
    for (int jb = 0; jb < r / d; ++jb)
      for (int k = 1; k < d; ++k)
        if (cfg.rooms[jb * d + k] != cfg.rooms[jb * d])
          return {false, t,
                  "room block " + std::to_string(jb) + " diverged at t=" +
                      std::to_string(t)};
    for (int ib = 0; ib < n / d; ++ib) {
      int base = ib * d;
      for (int k = 1; k < d; ++k)
        if (history[base + k].size() != history[base].size())
          return {false, t,
                  "observation counts diverged in prisoner block " +
                      std::to_string(ib)};
      for (std::size_t pos = checked[base]; pos < history[base].size(); ++pos)
        for (int k = 1; k < d; ++k)
          if (history[base + k][pos] != history[base][pos])
            return {false, t,
                    "observation histories diverged in prisoner block " +
                        std::to_string(ib)};
      for (int k = 0; k < d; ++k) checked[base + k] = history[base].size();
    }
    if (cfg.declared())
      return {false, t, "declaration under the block schedule"};
    return {};
  };

  for (std::size_t i = 0; i <= trace.steps.size(); ++i) {
    if (i % d == 0) {
      BlockInvariantReport rep = boundary_check(i);
      if (!rep.ok) return rep;
    }
    if (i == trace.steps.size()) break;
    const TraceStep& s = trace.steps[i];
    history[s.event.prisoner].push_back(s.observed);
    cfg = apply_event(trace.world, controllers, cfg, s.event.prisoner, s.event.room);
  }
  return {};
}

// ---------------------------------------------------------------------------
// Bounded-memory strategy enumeration (two prisoners, binary switches)
// ---------------------------------------------------------------------------

/*
 * Canonical machines with `memory` working states over q = 2: per
 * (state, observation) cell either a non-declaring (write, next) choice or
 * a declaring write whose successor is normalized to one shared absorbing
 * sink. Relabelings of working states that fix the initial state are the
 * identity for memory <= 2, so cell-wise decoding enumerates canonical
 * representatives exactly once.
 */
struct FiniteStrategySpace {
  int n = 2;
  int r = 2;
  int q = 2;
  int memory = 1;

  explicit FiniteStrategySpace(int m) : memory(m) {
    if (m < 1 || m > 2)
      throw error("strategy enumeration supports memory bounds 1 and 2");
  }

  int cells() const { return memory * q; }
  std::uint64_t cell_options() const {
    return static_cast<std::uint64_t>(q) * memory + q;
  }

  std::uint64_t machine_count() const {
    std::uint64_t count = 1;
    for (int i = 0; i < cells(); ++i) count *= cell_options();
    return count;
  }

  std::uint64_t pair_count() const { return machine_count() * machine_count(); }

  Controller decode_machine(std::uint64_t index) const {
    if (index >= machine_count()) throw error("machine index out of range");
    ctrl_t sink = static_cast<ctrl_t>(memory);
    std::vector<ControllerStep> table(static_cast<std::size_t>(memory + 1) * q);
    for (int cell = 0; cell < cells(); ++cell) {
      std::uint64_t v = index % cell_options();
      index /= cell_options();
      ControllerStep step;
      if (v < static_cast<std::uint64_t>(q) * memory) {
        step = {static_cast<state_t>(v % q), static_cast<ctrl_t>(v / q), false};
      } else {
        step = {static_cast<state_t>(v - static_cast<std::uint64_t>(q) * memory),
                sink, true};
      }
      table[cell] = step;
    }
    for (int v = 0; v < q; ++v)
      table[static_cast<std::size_t>(sink) * q + v] = {static_cast<state_t>(v), sink,
                                                       false};
    return Controller(static_cast<unsigned>(q), static_cast<ctrl_t>(memory + 1), 0,
                      std::move(table));
  }

  std::uint64_t encode_machine(const Controller& c) const {
    if (static_cast<int>(c.num_states()) != memory + 1 ||
        static_cast<int>(c.q()) != q || c.initial() != 0)
      throw error("controller does not have canonical enumeration shape");
    ctrl_t sink = static_cast<ctrl_t>(memory);
    std::uint64_t index = 0;
    for (int cell = cells() - 1; cell >= 0; --cell) {
      const ControllerStep& step = c.table()[cell];
      std::uint64_t v;
      if (step.declares) {
        if (step.next != sink) throw error("declaring cell must target the sink");
        v = static_cast<std::uint64_t>(q) * memory + step.write;
      } else {
        if (step.next >= static_cast<ctrl_t>(memory))
          throw error("non-declaring cell targets the sink");
        v = static_cast<std::uint64_t>(step.next) * q + step.write;
      }
      index = index * cell_options() + v;
    }
    return index;
  }

  std::pair<Controller, Controller> decode_pair(std::uint64_t pair_index) const {
    return {decode_machine(pair_index / machine_count()),
            decode_machine(pair_index % machine_count())};
  }
};

/// Streams every canonical machine pair through `fn(pair_index, a, b)`.
template <typename Fn>
void enumerate_strategies(const FiniteStrategySpace& space, Fn&& fn) {
  std::uint64_t count = space.machine_count();
  for (std::uint64_t ia = 0; ia < count; ++ia) {
    Controller a = space.decode_machine(ia);
    for (std::uint64_t ib = 0; ib < count; ++ib)
      fn(ia * count + ib, a, space.decode_machine(ib));
  }
}

struct EnumerationRow {
  std::uint8_t verdict;  // Verdict::Kind
  std::uint32_t nodes;
  std::uint32_t counterexample_length;
};

struct EnumerationSummary {
  std::uint64_t pairs = 0;
  std::uint64_t unsafe = 0;
  std::uint64_t fair_loop = 0;
  std::uint64_t wins = 0;
  std::optional<std::uint64_t> first_win;
  std::vector<EnumerationRow> rows;  // filled when keep_rows
};

/*
 * Checks every pair in the space against every fair warden. Pairs are
 * independent, so the index range is carved up across a worker pool; rows
 * come back in index order regardless of the job count.
 */
inline EnumerationSummary enumerate_and_check(const FiniteStrategySpace& space,
                                              unsigned jobs = 0, bool keep_rows = false) {
  std::uint64_t total = space.pair_count();
  EnumerationSummary summary;
  summary.pairs = total;
  summary.rows.resize(keep_rows ? total : 0);

  if (jobs == 0) jobs = std::max(1u, std::thread::hardware_concurrency());
  World w{2, 2, 2};

  std::atomic<std::uint64_t> next_chunk{0};
  constexpr std::uint64_t kChunk = 4096;
  std::vector<std::uint64_t> unsafe_counts(jobs, 0), loop_counts(jobs, 0),
      win_counts(jobs, 0), first_wins(jobs, ~std::uint64_t{0});
  std::vector<EnumerationRow>& rows = summary.rows;

  auto worker = [&](unsigned id) {
    for (;;) {
      std::uint64_t begin = next_chunk.fetch_add(kChunk);
      if (begin >= total) return;
      std::uint64_t end = std::min(begin + kChunk, total);
      for (std::uint64_t idx = begin; idx < end; ++idx) {
        auto [a, b] = space.decode_pair(idx);
        Verdict v = verdict({a, b}, w);
        std::uint32_t cex = 0;
        switch (v.kind) {
          case Verdict::Kind::unsafe:
            ++unsafe_counts[id];
            cex = static_cast<std::uint32_t>(v.counterexample->steps.size());
            break;
          case Verdict::Kind::fair_loop:
            ++loop_counts[id];
            cex = static_cast<std::uint32_t>(v.loop->prefix.steps.size() +
                                             v.loop->cycle.size());
            break;
          case Verdict::Kind::win:
            ++win_counts[id];
            first_wins[id] = std::min(first_wins[id], idx);
            break;
        }
        if (keep_rows)
          rows[idx] = {static_cast<std::uint8_t>(v.kind),
                       static_cast<std::uint32_t>(v.nodes), cex};
      }
    }
  };

  std::vector<std::thread> pool;
  for (unsigned id = 0; id < jobs; ++id) pool.emplace_back(worker, id);
  for (std::thread& t : pool) t.join();

  for (unsigned id = 0; id < jobs; ++id) {
    summary.unsafe += unsafe_counts[id];
    summary.fair_loop += loop_counts[id];
    summary.wins += win_counts[id];
    if (first_wins[id] != ~std::uint64_t{0})
      summary.first_win = summary.first_win
                              ? std::min(*summary.first_win, first_wins[id])
                              : first_wins[id];
  }
  return summary;
}

}  // namespace lightswitch
