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

#include <catch2/catch_amalgamated.hpp>

#include <map>
#include <numeric>
#include <random>
#include <set>

#include "lightswitch/strategies.hpp"
#include "lightswitch/warden.hpp"
#include "support/testutil.hpp"

using namespace lightswitch;

namespace {

Trace run_schedule(Scheduler& sched, const std::vector<Controller>& cs, const World& w,
                   std::uint64_t steps) {
  return simulate(sched, cs, w, steps).trace;
}

}  // namespace

TEST_CASE("round robin: period covers every pair exactly once") {
  World w{2, 2, 2};
  std::vector<Controller> cs(2, make_no_op_controller(2));
  RoundRobinScheduler sched(2, 2);
  Trace t = run_schedule(sched, cs, w, 8);
  std::set<std::pair<int, int>> first_period, second_period;
  for (int i = 0; i < 4; ++i) {
    first_period.insert({t.steps[i].event.prisoner, t.steps[i].event.room});
    second_period.insert({t.steps[4 + i].event.prisoner, t.steps[4 + i].event.room});
  }
  CHECK(first_period.size() == 4);
  CHECK(second_period.size() == 4);
}

TEST_CASE("round robin drives a winning suite to declaration within the bound") {
  World w{4, 3, 3};
  auto suite = four_prisoner_suite(3);
  ReachGraph g = explore(suite, w, {0, 0, 0});
  RoundRobinScheduler sched(w.n, w.r);
  SimResult res = simulate(sched, suite, w, g.size() * w.n * w.r);
  CHECK(res.outcome == SimOutcome::declared_safe);
}

TEST_CASE("random fair scheduler: seeded reproducibility") {
  World w{2, 2, 2};
  std::vector<Controller> cs(2, make_no_op_controller(2));
  RandomFairScheduler a(2, 2, 99), b(2, 2, 99), c(2, 2, 100);
  Trace ta = run_schedule(a, cs, w, 200);
  Trace tb = run_schedule(b, cs, w, 200);
  Trace tc = run_schedule(c, cs, w, 200);
  bool same = true, diff = false;
  for (int i = 0; i < 200; ++i) {
    same &= ta.steps[i].event.prisoner == tb.steps[i].event.prisoner &&
            ta.steps[i].event.room == tb.steps[i].event.room;
    diff |= ta.steps[i].event.prisoner != tc.steps[i].event.prisoner ||
            ta.steps[i].event.room != tc.steps[i].event.room;
  }
  CHECK(same);
  CHECK(diff);
}

TEST_CASE("random fair scheduler: pair frequencies within 3 sigma") {
  World w{2, 2, 2};
  std::vector<Controller> cs(2, make_no_op_controller(2));
  RandomFairScheduler sched(2, 2, 12345);
  const int kSteps = 100000;
  Trace t = run_schedule(sched, cs, w, kSteps);
  std::map<std::pair<int, int>, int> freq;
  for (const TraceStep& s : t.steps) ++freq[{s.event.prisoner, s.event.room}];
  double expect = kSteps / 4.0;
  double sigma = std::sqrt(kSteps * 0.25 * 0.75);
  for (auto& [pair, count] : freq)
    CHECK(std::abs(count - expect) <= 3 * sigma);
}

TEST_CASE("random fair scheduler drives the five-prisoner suite to safety") {
  World w{5, 4, 3};
  auto suite = five_prisoner_suite(4);
  std::mt19937_64 seeds(8);
  for (int run = 0; run < 50; ++run) {
    RandomFairScheduler sched(w.n, w.r, seeds());
    SimResult res = simulate(sched, suite, w, 1000000);
    CHECK(res.outcome == SimOutcome::declared_safe);
  }
}

TEST_CASE("block scheduler: 0-based formula at n = r = d = 2") {
  // sigma_0 = identity: t=0 -> (prisoner 0, room 0), t=1 -> (prisoner 1, room 1)
  World w{2, 2, 2};
  std::vector<Controller> cs(2, make_no_op_controller(2));
  BlockScheduler sched(2, 2);
  Trace t = run_schedule(sched, cs, w, 2);
  CHECK(t.steps[0].event.prisoner == 0);
  CHECK(t.steps[0].event.room == 0);
  CHECK(t.steps[1].event.prisoner == 1);
  CHECK(t.steps[1].event.room == 1);
}

TEST_CASE("block scheduler rejects coprime pairs") {
  CHECK_THROWS_AS(BlockScheduler(2, 3), infeasible_error);
}

TEST_CASE("block scheduler: every pair appears within the documented window") {
  for (auto [n, r] : std::vector<std::pair<int, int>>{{2, 2}, {2, 4}, {4, 6}}) {
    int d = std::gcd(n, r);
    std::uint64_t fact = 1;
    for (int i = 2; i <= d; ++i) fact *= i;
    std::uint64_t window = static_cast<std::uint64_t>(n / d) * (r / d) * fact * d;
    World w{n, r, 2};
    std::vector<Controller> cs(n, make_no_op_controller(2));
    BlockScheduler sched(n, r);
    Trace t = run_schedule(sched, cs, w, window);
    std::set<std::pair<int, int>> pairs;
    for (const TraceStep& s : t.steps) pairs.insert({s.event.prisoner, s.event.room});
    REQUIRE(pairs.size() == static_cast<std::size_t>(n * r));
  }
}

TEST_CASE("block invariant holds for built-in symmetric controllers") {
  for (auto [n, r] : std::vector<std::pair<int, int>>{{2, 2}, {2, 4}, {4, 6}}) {
    // outside their preconditions on purpose; symmetry alone suffices
    std::vector<Controller> machines{detail::race_machine(n, r),
                                     detail::candidate_machine(n, r, 1, 1)};
    for (const Controller& m : machines) {
      World w{n, r, static_cast<int>(m.q())};
      std::vector<Controller> cs(n, m);
      BlockScheduler sched(n, r);
      Trace t = run_schedule(sched, cs, w, 1000 * std::gcd(n, r));
      BlockInvariantReport rep = check_block_invariant(t, n, r, cs);
      INFO(rep.message);
      REQUIRE(rep.ok);
    }
  }
}

TEST_CASE("block invariant holds for 100 random symmetric controllers") {
  std::mt19937_64 rng(606);
  for (int trial = 0; trial < 100; ++trial) {
    int n = 2, r = (trial % 2) ? 2 : 4;
    unsigned q = 2 + rng() % 3;
    Controller m = testing::random_controller(rng, q, 1 + rng() % 4);
    World w{n, r, static_cast<int>(q)};
    std::vector<Controller> cs(n, m);
    BlockScheduler sched(n, r);
    Trace t = run_schedule(sched, cs, w, 500 * std::gcd(n, r));
    BlockInvariantReport rep = check_block_invariant(t, n, r, cs);
    INFO(rep.message);
    REQUIRE(rep.ok);
  }
}

TEST_CASE("block invariant checker rejects asymmetric controllers") {
  World w{2, 2, 2};
  std::vector<Controller> cs{make_no_op_controller(2), make_declare_controller(2)};
  BlockScheduler sched(2, 2);
  Trace t = simulate(sched, {make_no_op_controller(2), make_no_op_controller(2)}, w, 10).trace;
  CHECK_THROWS_AS(check_block_invariant(t, 2, 2, cs), error);
}

TEST_CASE("block invariant checker reports an injected violation") {
  // A hand-built trace in which one room of a block diverges.
  World w{2, 2, 2};
  std::vector<Controller> cs(2, make_no_op_controller(2));
  BlockScheduler sched(2, 2);
  Trace t = run_schedule(sched, cs, w, 6);
  t.initial.rooms = {0, 1};  // blocks start out unequal
  BlockInvariantReport rep = check_block_invariant(t, 2, 2, cs);
  CHECK_FALSE(rep.ok);
  CHECK(rep.first_violation_boundary == 0);
}

TEST_CASE("enumeration counts: memory 1 and memory 2") {
  FiniteStrategySpace m1(1);
  CHECK(m1.machine_count() == 16);
  CHECK(m1.pair_count() == 256);
  FiniteStrategySpace m2(2);
  CHECK(m2.machine_count() == 1296);  // 4096 raw cell choices, 6^4 canonical
  CHECK(m2.pair_count() == 1679616);
  CHECK_THROWS_AS(FiniteStrategySpace(3), error);
}

TEST_CASE("enumeration decode/encode is a bijection on canonical machines") {
  for (int memory : {1, 2}) {
    FiniteStrategySpace space(memory);
    std::set<std::vector<ControllerStep>> seen;
    for (std::uint64_t i = 0; i < space.machine_count(); ++i) {
      Controller c = space.decode_machine(i);
      c.validate();
      REQUIRE(space.encode_machine(c) == i);
      seen.insert(c.table());
    }
    CHECK(seen.size() == space.machine_count());
  }
}

TEST_CASE("enumerated machines are total with absorbing declares") {
  FiniteStrategySpace space(1);
  enumerate_strategies(space, [](std::uint64_t, const Controller& a, const Controller& b) {
    a.validate();
    b.validate();
  });
}

TEST_CASE("memory-1 exhaustive check: no winning pair") {
  EnumerationSummary s = enumerate_and_check(FiniteStrategySpace(1), 2, true);
  CHECK(s.pairs == 256);
  CHECK(s.wins == 0);
  CHECK_FALSE(s.first_win.has_value());
  CHECK(s.unsafe + s.fair_loop == 256);
  CHECK(s.rows.size() == 256);
  for (const EnumerationRow& row : s.rows)
    CHECK(row.verdict != static_cast<std::uint8_t>(Verdict::Kind::win));
}

TEST_CASE("simulate outcomes: safe, unsafe, cutoff") {
  World w{2, 2, 2};
  RoundRobinScheduler rr(2, 2);
  SimResult cut = simulate(rr, {make_no_op_controller(2), make_no_op_controller(2)}, w, 50);
  CHECK(cut.outcome == SimOutcome::cutoff);
  CHECK(cut.trace.steps.size() == 50);

  RoundRobinScheduler rr2(2, 2);
  SimResult bad = simulate(rr2, {make_declare_controller(2), make_no_op_controller(2)}, w, 50);
  CHECK(bad.outcome == SimOutcome::declared_unsafe);
  CHECK(bad.trace.steps.size() == 1);

  World w1{1, 1, 2};
  RoundRobinScheduler rr3(1, 1);
  SimResult good = simulate(rr3, {make_declare_controller(2)}, w1, 50);
  CHECK(good.outcome == SimOutcome::declared_safe);
}

TEST_CASE("analysis consistency: mutual both-infinitely-often forces a fair loop") {
  // Machines whose single-room probes alternate forever cannot win at
  // r = q = 2; their pair verdict must be a warden fair loop.
  FiniteStrategySpace space(1);
  World w{2, 2, 2};
  int checked = 0;
  for (std::uint64_t ia = 0; ia < space.machine_count(); ++ia) {
    Controller a = space.decode_machine(ia);
    // toggle detection: write 1-s on every observation, no declares
    bool toggles = !a.step(0, 0).declares && !a.step(0, 1).declares &&
                   a.step(0, 0).write == 1 && a.step(0, 1).write == 0;
    if (!toggles) continue;
    for (std::uint64_t ib = 0; ib < space.machine_count(); ++ib) {
      Controller b = space.decode_machine(ib);
      bool btoggles = !b.step(0, 0).declares && !b.step(0, 1).declares &&
                      b.step(0, 0).write == 1 && b.step(0, 1).write == 0;
      if (!btoggles) continue;
      Verdict v = verdict({a, b}, w);
      REQUIRE(v.kind == Verdict::Kind::fair_loop);
      ++checked;
    }
  }
  CHECK(checked > 0);
}
