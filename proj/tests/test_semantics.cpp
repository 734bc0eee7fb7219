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

#include <random>
#include <sstream>

#include "lightswitch/checker.hpp"
#include "lightswitch/semantics.hpp"
#include "lightswitch/strategies.hpp"
#include "support/testutil.hpp"

using namespace lightswitch;

TEST_CASE("initial configuration starts clean") {
  World w{2, 2, 2};
  auto cfg = initial_configuration(w, {0, 0}, {make_no_op_controller(2), make_no_op_controller(2)});
  CHECK(cfg.rooms == std::vector<state_t>{0, 0});
  CHECK(cfg.visited == 0);
  CHECK_FALSE(cfg.declared());
}

TEST_CASE("initial configuration for the four-prisoner start") {
  World w{4, 3, 3};
  auto suite = four_prisoner_suite(3);
  auto cfg = initial_configuration(w, {0, 0, 0}, suite);
  CHECK(cfg.rooms == std::vector<state_t>{0, 0, 0});
  for (int p = 0; p < 4; ++p) CHECK(cfg.ctrls[p] == suite[p].initial());
}

TEST_CASE("initial configuration rejects out-of-range states") {
  World w{2, 2, 2};
  std::vector<Controller> cs{make_no_op_controller(2), make_no_op_controller(2)};
  CHECK_THROWS_AS(initial_configuration(w, {0, 2}, cs), error);
}

TEST_CASE("apply_event: alice flips room 0 to 1 at the start") {
  World w{4, 3, 3};
  auto suite = four_prisoner_suite(3);
  auto cfg = initial_configuration(w, suite);
  auto next = apply_event(w, suite, cfg, 0, 0);
  CHECK(next.rooms == std::vector<state_t>{1, 0, 0});
  CHECK(next.visited_bit(0, 0, w.r));
  CHECK_FALSE(next.visited_bit(0, 1, w.r));
}

TEST_CASE("apply_event: no-op controller only sets the visited bit") {
  World w{2, 2, 2};
  std::vector<Controller> cs{make_no_op_controller(2), make_no_op_controller(2)};
  auto cfg = initial_configuration(w, cs);
  auto next = apply_event(w, cs, cfg, 1, 0);
  CHECK(next.rooms == cfg.rooms);
  CHECK(next.ctrls == cfg.ctrls);
  CHECK(next.visited_bit(1, 0, w.r));
  CHECK(next.visited != cfg.visited);
}

TEST_CASE("apply_event: declaration is recorded and ends the game") {
  World w{2, 2, 2};
  std::vector<Controller> cs{make_declare_controller(2), make_declare_controller(2)};
  auto cfg = initial_configuration(w, cs);
  auto next = apply_event(w, cs, cfg, 0, 1);
  CHECK(next.declared_by == 0);
  CHECK_FALSE(is_safe_declare(w, next));
  CHECK_THROWS_AS(apply_event(w, cs, next, 1, 0), error);
}

TEST_CASE("apply_event frame property: one room, one control, one bit") {
  std::mt19937_64 rng(99);
  World w{3, 3, 4};
  std::vector<Controller> cs;
  for (int p = 0; p < w.n; ++p) cs.push_back(testing::random_controller(rng, 4, 5));
  Configuration cfg = initial_configuration(w, cs);
  for (int step = 0; step < 200; ++step) {
    int p = static_cast<int>(rng() % w.n), j = static_cast<int>(rng() % w.r);
    Configuration next = apply_event(w, cs, cfg, p, j);
    int rooms_changed = 0, ctrls_changed = 0;
    for (int t = 0; t < w.r; ++t) rooms_changed += next.rooms[t] != cfg.rooms[t];
    for (int t = 0; t < w.n; ++t) ctrls_changed += next.ctrls[t] != cfg.ctrls[t];
    CHECK(rooms_changed <= 1);
    CHECK(ctrls_changed <= 1);
    std::uint64_t new_bits = next.visited & ~cfg.visited;
    CHECK((new_bits & (new_bits - 1)) == 0);  // at most one new bit
    CHECK((next.visited & cfg.visited) == cfg.visited);  // monotone
    cfg = std::move(next);
  }
}

TEST_CASE("is_safe_declare: full and missing matrices") {
  World w{2, 2, 2};
  Configuration cfg;
  cfg.rooms = {0, 0};
  cfg.ctrls = {0, 0};
  cfg.declared_by = 1;
  cfg.visited = 0b1111;
  CHECK(is_safe_declare(w, cfg));
  cfg.visited = 0b0111;
  CHECK_FALSE(is_safe_declare(w, cfg));
  cfg.declared_by = -1;
  CHECK_THROWS_AS(is_safe_declare(w, cfg), error);
}

TEST_CASE("determinism: traces replay bit-exactly") {
  std::mt19937_64 rng(123);
  World w{3, 3, 3};
  std::vector<Controller> cs;
  for (int p = 0; p < w.n; ++p) cs.push_back(testing::random_controller(rng, 3, 4, 0.02));
  Trace t;
  t.world = w;
  t.initial = initial_configuration(w, cs);
  Configuration cfg = t.initial;
  for (int step = 0; step < 500 && !cfg.declared(); ++step) {
    int p = static_cast<int>(rng() % w.n), j = static_cast<int>(rng() % w.r);
    Configuration next = apply_event(w, cs, cfg, p, j);
    t.steps.push_back({{static_cast<std::uint64_t>(step), p, j},
                       cfg.rooms[j], next.rooms[j], next.declared()});
    cfg = std::move(next);
  }
  Configuration replayed = replay_trace(t, cs);
  CHECK(replayed == cfg);
}

TEST_CASE("trace round-trips through JSONL") {
  World w{2, 2, 3};
  std::vector<Controller> cs{compile_text("flip(0,1)", Bindings{2, 2, 3}),
                             compile_text("see(1)\ndeclare", Bindings{2, 2, 3})};
  Trace t;
  t.world = w;
  t.initial = initial_configuration(w, cs);
  Configuration cfg = t.initial;
  int moves[][2] = {{0, 0}, {1, 0}, {1, 1}, {0, 1}, {1, 1}};
  for (auto [p, j] : moves) {
    if (cfg.declared()) break;
    Configuration next = apply_event(w, cs, cfg, p, j);
    t.steps.push_back({{t.steps.size(), p, j}, cfg.rooms[j], next.rooms[j], next.declared()});
    cfg = std::move(next);
  }
  std::stringstream buf;
  write_trace_jsonl(t, buf);
  std::string text = buf.str();
  CHECK(text.find("\"prisoner\"") != std::string::npos);
  Trace back = read_trace_jsonl(buf);
  REQUIRE(back.steps.size() == t.steps.size());
  CHECK(back.world.n == w.n);
  CHECK(back.initial.rooms == t.initial.rooms);
  for (std::size_t i = 0; i < t.steps.size(); ++i) {
    CHECK(back.steps[i].event.prisoner == t.steps[i].event.prisoner);
    CHECK(back.steps[i].observed == t.steps[i].observed);
    CHECK(back.steps[i].written == t.steps[i].written);
    CHECK(back.steps[i].declared == t.steps[i].declared);
  }
}

TEST_CASE("wrap_initial_state: all-zero start is the identity") {
  auto suite = four_prisoner_suite(3);
  WrappedSetup ws = wrap_initial_state(suite, {0, 0, 0}, 3);
  CHECK(ws.q_total == 3);
  CHECK(ws.init == std::vector<state_t>{0, 0, 0});
  for (std::size_t i = 0; i < suite.size(); ++i) CHECK(ws.controllers[i] == suite[i]);
}

TEST_CASE("wrap_initial_state: [0,5,5] leaves one dirty state") {
  auto suite = four_prisoner_suite(3);
  WrappedSetup ws = wrap_initial_state(suite, {0, 5, 5}, 3);
  CHECK(ws.q_total == 4);
  // 5 is the most common value and is relabeled to 0; the lone 0 becomes dirty.
  CHECK(ws.init == std::vector<state_t>{3, 0, 0});
  // A prisoner whose instruction cannot fire on 0 scrubs the dirty room to 0.
  const Controller& bob = ws.controllers[1];
  const ControllerStep& s = bob.step(bob.initial(), 3);
  CHECK(s.write == 0);
  CHECK(s.next == bob.initial());
  // Alice's flip(0,1) fires against the scrubbed value in the same visit.
  const Controller& alice = ws.controllers[0];
  const ControllerStep& a = alice.step(alice.initial(), 3);
  CHECK(a.write == 1);
}

TEST_CASE("wrap_initial_state: wrapped four-prisoner suite still wins") {
  World w{4, 3, 4};
  auto suite = four_prisoner_suite(3);
  WrappedSetup ws = wrap_initial_state(suite, {0, 5, 5}, 3);
  REQUIRE(ws.q_total == 4);
  Verdict v = verdict(ws.controllers, w, ws.init);
  CHECK(v.kind == Verdict::Kind::win);
}

TEST_CASE("wrap_initial_state: r distinct values waste at most r-1 states") {
  auto suite = four_prisoner_suite(3);
  WrappedSetup ws = wrap_initial_state(suite, {7, 4, 9}, 3);
  CHECK(ws.q_total == 5);  // d = 2 dirty states
  // Most common is a tie; the smallest value 4 becomes 0.
  CHECK(ws.init == std::vector<state_t>{3, 0, 4});
  World w{4, 3, 5};
  Verdict v = verdict(ws.controllers, w, ws.init);
  CHECK(v.kind == Verdict::Kind::win);
}
