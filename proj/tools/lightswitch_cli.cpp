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

#include <chrono>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "lightswitch/analysis.hpp"
#include "lightswitch/checker.hpp"
#include "lightswitch/strategies.hpp"
#include "lightswitch/warden.hpp"

namespace ls = lightswitch;

namespace {

// Exit codes: 0 win/success, 10 unsafe, 11 fair loop, 12 infeasible,
// 2 usage error, 3 budget exceeded.
constexpr int kExitWin = 0;
constexpr int kExitUnsafe = 10;
constexpr int kExitFairLoop = 11;
constexpr int kExitInfeasible = 12;
constexpr int kExitUsage = 2;
constexpr int kExitBudget = 3;

struct ProtocolSelection {
  std::string builtin;
  std::vector<std::string> files;
};

struct Instance {
  ls::World world;
  std::vector<ls::Controller> controllers;
};

std::vector<ls::state_t> parse_init(const std::string& text, int r) {
  if (text.empty()) return std::vector<ls::state_t>(r, 0);
  std::vector<ls::state_t> init;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ','))
    init.push_back(static_cast<ls::state_t>(std::stoi(item)));
  if (static_cast<int>(init.size()) != r)
    throw ls::error("--init needs exactly r comma-separated values");
  return init;
}

bool is_dsl_name(const std::string& name) {
  return name == "alice" || name == "bob" || name == "charles" ||
         name == "deborah" || name == "deborah_eve";
}

/*
 * Resolves --builtin / --protocol into one controller per prisoner.
 * Symmetric builtins replicate one controller n times and fix q from
 * their layout; DSL builtins and files compile against (r, n, q).
 */
Instance resolve_instance(const ProtocolSelection& sel, int n, int r, int q) {
  Instance inst;
  if (!sel.builtin.empty()) {
    const std::string& b = sel.builtin;
    if (b == "four_suite" || b == "suite") {
      if (q == 0) q = 3;
      if (q != 3) throw ls::error("staged suites use q = 3");
      if (b == "four_suite" && (n < 2 || n > 4))
        throw ls::error("four_suite adapts to n in {2, 3, 4}");
      inst.controllers = ls::staged_suite(n, r);
    } else if (b == "five_suite") {
      if (q == 0) q = 3;
      if (n != 5) throw ls::error("five_suite needs --n 5");
      if (q != 3) throw ls::error("staged suites use q = 3");
      inst.controllers = ls::five_prisoner_suite(r);
    } else if (b == "race") {
      ls::SymmetricStrategy s = ls::race_leader_election(n, r);
      if (q == 0) q = s.layout.flat_size();
      if (q != s.layout.flat_size())
        throw ls::error("race needs q = " + std::to_string(s.layout.flat_size()));
      inst.controllers.assign(n, s.controller);
    } else if (b == "candidates") {
      ls::SymmetricStrategy s = ls::candidate_leader(n, r);
      if (q == 0) q = s.layout.flat_size();
      if (q != s.layout.flat_size())
        throw ls::error("candidates needs q = " + std::to_string(s.layout.flat_size()));
      inst.controllers.assign(n, s.controller);
    } else if (b == "full_symmetric") {
      ls::SymmetricStrategy s = ls::full_symmetric_strategy(n, r);
      int q_total = static_cast<int>(s.controller.q());
      if (q == 0) q = q_total;
      if (q != q_total)
        throw ls::error("full_symmetric needs q = " + std::to_string(q_total));
      inst.controllers.assign(n, s.controller);
    } else {
      // comma-separated list of protocol names, one per prisoner
      if (q == 0) q = 3;
      std::stringstream ss(b);
      std::string name;
      while (std::getline(ss, name, ',')) {
        if (!is_dsl_name(name))
          throw ls::error("unknown built-in '" + name + "'");
        inst.controllers.push_back(ls::compile_text(
            ls::builtin_protocol_text(name), ls::Bindings{r, n, q}, name));
      }
      if (static_cast<int>(inst.controllers.size()) != n)
        throw ls::error("built-in list must name exactly n protocols");
    }
  } else {
    if (sel.files.empty())
      throw ls::error("choose protocols with --builtin or --protocol");
    if (q == 0) q = 3;
    for (const std::string& path : sel.files) {
      std::ifstream in(path);
      if (!in) throw ls::error("cannot open protocol file " + path);
      std::stringstream buf;
      buf << in.rdbuf();
      inst.controllers.push_back(
          ls::compile_text(buf.str(), ls::Bindings{r, n, q}, path));
    }
    if (static_cast<int>(inst.controllers.size()) != n)
      throw ls::error("need exactly one protocol file per prisoner");
  }
  inst.world = ls::World{n, r, q};
  return inst;
}

int verdict_exit(const ls::Verdict& v) {
  switch (v.kind) {
    case ls::Verdict::Kind::win: return kExitWin;
    case ls::Verdict::Kind::unsafe: return kExitUnsafe;
    case ls::Verdict::Kind::fair_loop: return kExitFairLoop;
  }
  return kExitUsage;
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path);
  if (!out) throw ls::error("cannot write " + path);
  out << content;
}

int run_check(const ProtocolSelection& sel, int n, int r, int q,
              const std::string& init_text, bool symmetry, bool wrap,
              std::uint64_t budget, const std::string& out_path) {
  Instance inst = resolve_instance(sel, n, r, q);
  std::vector<ls::state_t> init = parse_init(init_text, r);
  if (wrap) {
    ls::WrappedSetup ws = ls::wrap_initial_state(inst.controllers, init, inst.world.q);
    inst.controllers = std::move(ws.controllers);
    inst.world.q = ws.q_total;
    init = std::move(ws.init);
  }
  ls::ExploreOptions opts;
  opts.room_symmetry = symmetry;
  if (budget) opts.node_budget = budget;
  ls::Verdict v = ls::verdict(inst.controllers, inst.world, init, opts);
  std::cout << "verdict: " << ls::verdict_name(v.kind) << " (" << v.nodes
            << " nodes)\n";
  if (v.kind == ls::Verdict::Kind::unsafe)
    std::cout << "unsafe declaration after " << v.counterexample->steps.size()
              << " steps\n";
  if (v.kind == ls::Verdict::Kind::fair_loop)
    std::cout << "fair non-declaring loop: prefix " << v.loop->prefix.steps.size()
              << " steps, cycle " << v.loop->cycle.size() << " events\n";
  if (!out_path.empty()) write_file(out_path, ls::verdict_to_json(v).dump(2) + "\n");
  return verdict_exit(v);
}

int run_simulate(const ProtocolSelection& sel, int n, int r, int q,
                 const std::string& init_text, const std::string& scheduler,
                 std::uint64_t seed, std::uint64_t max_steps,
                 const std::string& out_path) {
  Instance inst = resolve_instance(sel, n, r, q);
  std::vector<ls::state_t> init = parse_init(init_text, r);
  std::unique_ptr<ls::Scheduler> sched;
  if (scheduler == "round_robin")
    sched = std::make_unique<ls::RoundRobinScheduler>(n, r);
  else if (scheduler == "random")
    sched = std::make_unique<ls::RandomFairScheduler>(n, r, seed);
  else if (scheduler == "block")
    sched = std::make_unique<ls::BlockScheduler>(n, r);
  else
    throw ls::error("unknown scheduler '" + scheduler + "'");

  ls::SimResult res = ls::simulate(*sched, inst.controllers, inst.world, init, max_steps);
  const char* outcome = res.outcome == ls::SimOutcome::declared_safe ? "declared-safe"
                        : res.outcome == ls::SimOutcome::declared_unsafe
                            ? "declared-unsafe"
                            : "cutoff";
  std::cout << "outcome: " << outcome << " after " << res.trace.steps.size()
            << " steps\n";
  if (!out_path.empty()) {
    std::ostringstream buf;
    ls::write_trace_jsonl(res.trace, buf);
    write_file(out_path, buf.str());
  }
  return res.outcome == ls::SimOutcome::declared_unsafe ? kExitUnsafe : kExitWin;
}

int run_enumerate(int n, int r, int q, int memory, unsigned jobs,
                  const std::string& out_path) {
  if (n != 2 || r != 2 || q != 2)
    throw ls::error("enumeration covers the n = 2, r = 2, q = 2 space");
  ls::FiniteStrategySpace space(memory);
  std::cout << "machines per prisoner: " << space.machine_count() << "\n";
  std::cout << "ordered pairs: " << space.pair_count() << "\n";
  ls::EnumerationSummary s = ls::enumerate_and_check(space, jobs, !out_path.empty());
  std::cout << "unsafe: " << s.unsafe << "\n";
  std::cout << "fairloop: " << s.fair_loop << "\n";
  if (!out_path.empty()) {
    std::ostringstream buf;
    buf << "pair\tverdict\tnodes\tcounterexample_length\n";
    for (std::uint64_t i = 0; i < s.rows.size(); ++i) {
      const ls::EnumerationRow& row = s.rows[i];
      buf << i << '\t'
          << ls::verdict_name(static_cast<ls::Verdict::Kind>(row.verdict)) << '\t'
          << row.nodes << '\t' << row.counterexample_length << '\n';
    }
    write_file(out_path, buf.str());
  }
  if (s.wins > 0) {
    std::cout << "winning pair found: " << *s.first_win << "\n";
    return 1;
  }
  std::cout << "no winning pair\n";
  return 0;
}

int run_leader(const std::string& mode, int n, int r, bool symmetry,
               std::uint64_t budget) {
  ls::SymmetricStrategy strat =
      mode == "race"         ? ls::race_leader_election(n, r)
      : mode == "candidates" ? ls::candidate_leader(n, r)
                             : ls::full_symmetric_strategy(n, r);
  ls::Controller controller = strat.controller;
  int q = static_cast<int>(controller.q());
  if (mode != "full") {
    // compose the election with the leader phase so the check can win
    int q_base = strat.layout.flat_size();
    ls::Controller election = controller;
    if (mode == "candidates" && r == 2) {
      for (ls::ctrl_t s = 0; s < election.num_states(); ++s)
        if (election.has_label("type2", s)) election.add_label("leader", s);
    }
    controller = ls::leader_wins_compose(election, q_base,
                                         ls::LeaderPhasePlugin{n, r}, r);
    q = q_base + static_cast<int>(ls::LeaderPhasePlugin::kStates);
  }
  ls::World w{n, r, q};
  ls::ExploreOptions opts;
  opts.room_symmetry = symmetry;
  if (budget) opts.node_budget = budget;
  std::cout << "symmetric strategy over q = " << q << " states, "
            << controller.num_states() << " controller states\n";
  ls::Verdict v = ls::verdict(std::vector<ls::Controller>(n, controller), w,
                              std::vector<ls::state_t>(r, 0), opts);
  std::cout << "verdict: " << ls::verdict_name(v.kind) << " (" << v.nodes
            << " nodes)\n";
  return verdict_exit(v);
}

int run_analyze(int memory, std::int64_t index, std::int64_t pair_index) {
  ls::FiniteStrategySpace space(memory);
  std::vector<std::pair<std::string, ls::Controller>> machines;
  if (pair_index >= 0) {
    auto [a, b] = space.decode_pair(static_cast<std::uint64_t>(pair_index));
    machines.emplace_back("A", a);
    machines.emplace_back("B", b);
  } else if (index >= 0) {
    machines.emplace_back("machine", space.decode_machine(static_cast<std::uint64_t>(index)));
  } else {
    throw ls::error("analyze needs --index or --pair-index");
  }
  for (auto& [name, c] : machines) {
    ls::LimitClassification cls = ls::classify_single_room(c, 0);
    std::cout << name << ": ";
    switch (cls.kind) {
      case ls::LimitClassification::Kind::eventually_constant: {
        std::cout << "eventually constant at " << cls.constant_state
                  << " from t=" << cls.onset;
        ls::ResetIndex k = ls::reset_index(c, cls.constant_state);
        if (k.infinite)
          std::cout << ", reset index k=inf";
        else
          std::cout << ", reset index k=" << k.k;
        break;
      }
      case ls::LimitClassification::Kind::both_infinitely_often:
        std::cout << "takes both values infinitely often";
        break;
      case ls::LimitClassification::Kind::declared_during_probe:
        std::cout << "declares during the probe at t=" << cls.declare_time;
        break;
    }
    std::cout << "\n";
  }
  return 0;
}

int run_table(bool stretch, std::uint64_t budget) {
  struct Row {
    std::string name;
    int n, r, q;
    bool symmetry;
  };
  std::vector<Row> rows = {
      {"suite", 2, 3, 3, false},
      {"suite", 3, 3, 3, false},
      {"suite", 4, 3, 3, false},
      {"full_symmetric", 2, 3, 0, false},
      {"full_symmetric", 3, 2, 0, false},
  };
  if (stretch) {
    rows.push_back({"suite", 4, 4, 3, true});
    rows.push_back({"suite", 4, 5, 3, true});
    rows.push_back({"suite", 5, 4, 3, true});
  }
  std::cout << "builtin\tn\tr\tq\tverdict\tnodes\tms\n";
  bool all_win = true;
  for (const Row& row : rows) {
    auto t0 = std::chrono::steady_clock::now();
    ProtocolSelection sel;
    sel.builtin = row.name;
    try {
      Instance inst = resolve_instance(sel, row.n, row.r, row.q);
      ls::ExploreOptions opts;
      opts.room_symmetry = row.symmetry;
      if (budget) opts.node_budget = budget;
      ls::Verdict v = ls::verdict(inst.controllers, inst.world, opts);
      auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                    std::chrono::steady_clock::now() - t0)
                    .count();
      std::cout << row.name << '\t' << row.n << '\t' << row.r << '\t'
                << inst.world.q << '\t' << ls::verdict_name(v.kind) << '\t'
                << v.nodes << '\t' << ms << "\n";
      all_win &= v.kind == ls::Verdict::Kind::win;
    } catch (const ls::budget_error&) {
      std::cout << row.name << '\t' << row.n << '\t' << row.r << '\t' << row.q
                << "\tbudget-exceeded\t-\t-\n";
      all_win = false;
    }
  }
  return all_win ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"multi-room light switch protocols: check, simulate, enumerate"};
  app.require_subcommand(1);

  ProtocolSelection sel;
  int n = 2, r = 2, q = 0;
  std::string init_text;
  bool symmetry = false, wrap = false;
  std::uint64_t budget = 0;
  std::string out_path;

  auto add_instance_flags = [&](CLI::App* cmd, bool with_check_flags) {
    cmd->add_option("--builtin", sel.builtin,
                    "four_suite|five_suite|suite|race|candidates|full_symmetric or "
                    "comma-separated protocol names");
    cmd->add_option("--protocol", sel.files, "protocol file (.wsp), one per prisoner");
    cmd->add_option("--n", n, "prisoners")->required();
    cmd->add_option("--r", r, "rooms")->required();
    cmd->add_option("--q", q, "switch states per room (0 = infer)");
    cmd->add_option("--init", init_text, "comma-separated initial room states");
    if (with_check_flags) {
      cmd->add_flag("--symmetry", symmetry, "canonicalize configurations up to room permutations");
      cmd->add_flag("--wrap-init", wrap, "reduce a known initial state to all-zero");
      cmd->add_option("--budget", budget, "node budget override");
    }
  };

  CLI::App* check = app.add_subcommand("check", "decide win / unsafe / fair loop");
  add_instance_flags(check, true);
  check->add_option("--out", out_path, "write the verdict as JSON");

  CLI::App* sim = app.add_subcommand("simulate", "run one schedule to declaration or cutoff");
  std::string scheduler = "random";
  std::uint64_t seed = 0, max_steps = 1000000;
  add_instance_flags(sim, false);
  sim->add_option("--scheduler", scheduler, "round_robin|random|block");
  sim->add_option("--seed", seed, "random scheduler seed");
  sim->add_option("--max-steps", max_steps, "cutoff");
  sim->add_option("--out", out_path, "write the trace as JSON lines");

  CLI::App* enumerate = app.add_subcommand("enumerate", "exhaust bounded-memory strategy pairs");
  int memory = 1;
  unsigned jobs = 0;
  int en = 2, er = 2, eq = 2;
  enumerate->add_option("--n", en, "prisoners (2)");
  enumerate->add_option("--r", er, "rooms (2)");
  enumerate->add_option("--q", eq, "switch states (2)");
  enumerate->add_option("--memory", memory, "working states per machine (1 or 2)")->required();
  enumerate->add_option("--jobs", jobs, "worker threads (0 = hardware)");
  enumerate->add_option("--out", out_path, "write the TSV summary");

  CLI::App* leader = app.add_subcommand("leader", "build a symmetric strategy and check it");
  std::string mode = "full";
  int ln = 2, lr = 3;
  leader->add_option("--mode", mode, "race|candidates|full")->required();
  leader->add_option("--n", ln, "prisoners")->required();
  leader->add_option("--r", lr, "rooms")->required();
  bool lsym = false;
  std::uint64_t lbudget = 0;
  leader->add_flag("--symmetry", lsym, "room symmetry reduction");
  leader->add_option("--budget", lbudget, "node budget override");

  CLI::App* analyze = app.add_subcommand("analyze", "single-room limiting behavior of enumerated machines");
  int amem = 1;
  std::int64_t aindex = -1, apair = -1;
  analyze->add_option("--memory", amem, "machine space (1 or 2)")->required();
  analyze->add_option("--index", aindex, "machine index");
  analyze->add_option("--pair-index", apair, "pair index (analyzes both machines)");

  CLI::App* table = app.add_subcommand("table", "verdict matrix for the built-in strategies");
  bool stretch = false;
  std::uint64_t tbudget = 0;
  table->add_flag("--stretch", stretch, "include the larger instances");
  table->add_option("--budget", tbudget, "node budget override");

  CLI11_PARSE(app, argc, argv);

  try {
    if (check->parsed())
      return run_check(sel, n, r, q, init_text, symmetry, wrap, budget, out_path);
    if (sim->parsed())
      return run_simulate(sel, n, r, q, init_text, scheduler, seed, max_steps, out_path);
    if (enumerate->parsed())
      return run_enumerate(en, er, eq, memory, jobs, out_path);
    if (leader->parsed())
      return run_leader(mode, ln, lr, lsym, lbudget);
    if (analyze->parsed())
      return run_analyze(amem, aindex, apair);
    if (table->parsed())
      return run_table(stretch, tbudget);
  } catch (const ls::infeasible_error& e) {
    std::cerr << "infeasible: " << e.what() << "\n";
    return kExitInfeasible;
  } catch (const ls::budget_error& e) {
    std::cerr << "budget exceeded: " << e.what() << "\n";
    return kExitBudget;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  }
  return kExitUsage;
}
