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

#include <cctype>
#include <memory>
#include <set>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include "lightswitch/controller.hpp"

namespace lightswitch {

/// Parse failure with a 1-based line:column position.
struct parse_error : error {
  parse_error(const std::string& msg, int line, int col)
      : error(msg + " at " + std::to_string(line) + ":" + std::to_string(col)),
        line(line), col(col) {}
  int line;
  int col;
};

/// Values the protocol grammar binds before compilation.
struct Bindings {
  int r = 0;  // rooms
  int n = 0;  // prisoners
  int q = 0;  // switch states per room
};

// ---------------------------------------------------------------------------
// Instruction tree
// ---------------------------------------------------------------------------

struct Instruction;
using InstructionList = std::vector<Instruction>;

struct FlipInstr {
  int from;
  int to;
};
struct FlipAnyInstr {
  int to;
};
struct SeeInstr {
  int target;
};
struct RepeatInstr {
  int count;  // evaluated against the bindings at parse time
  InstructionList body;
};
struct WithoutSeeingInstr {
  int guard;
  InstructionList body;
  InstructionList otherwise;
};
struct DeclareInstr {};

struct Instruction {
  std::variant<FlipInstr, FlipAnyInstr, SeeInstr, RepeatInstr,
               WithoutSeeingInstr, DeclareInstr>
      node;
};

struct ProtocolSource {
  std::string name;
  InstructionList instructions;
  std::set<std::string> parameters;  // free symbols seen in the text ("r", "n")
};

// ---------------------------------------------------------------------------
// Parser
// ---------------------------------------------------------------------------

namespace detail {

class ProtocolParser {
 public:
  ProtocolParser(const std::string& text, const Bindings& b)
      : text_(text), b_(b) {}

  ProtocolSource parse(const std::string& name) {
    if (b_.r <= 0 || b_.n <= 0 || b_.q <= 0)
      throw error("bindings r, n, q must be positive");
    ProtocolSource src;
    src.name = name;
    src.instructions = parse_list(/*stop_at_brace=*/false);
    skip_ws();
    if (!eof()) fail("unexpected trailing input");
    src.parameters = params_;
    return src;
  }

 private:
  InstructionList parse_list(bool stop_at_brace) {
    InstructionList list;
    bool saw_declare = false;
    for (;;) {
      skip_ws();
      if (eof()) {
        if (stop_at_brace) fail("expected '}'");
        return list;
      }
      if (peek() == '}') {
        if (!stop_at_brace) fail("unmatched '}'");
        return list;
      }
      if (saw_declare) fail("instruction after declare is unreachable");
      list.push_back(parse_stmt());
      saw_declare = std::holds_alternative<DeclareInstr>(list.back().node);
    }
  }

  Instruction parse_stmt() {
    int line = line_, col = col_;
    std::string word = ident();
    if (word == "flip") {
      expect('(');
      skip_blank();
      if (peek() == '*') {
        get();
        expect(',');
        int to = state_arg();
        expect(')');
        return {FlipAnyInstr{to}};
      }
      int from = state_arg();
      expect(',');
      int to = state_arg();
      expect(')');
      return {FlipInstr{from, to}};
    }
    if (word == "see") {
      expect('(');
      int target = state_arg();
      expect(')');
      return {SeeInstr{target}};
    }
    if (word == "repeat") {
      expect('(');
      int count = expr();
      expect(')');
      if (count < 0)
        throw parse_error("repeat count evaluates to " + std::to_string(count),
                          line, col);
      expect('{');
      InstructionList body = parse_list(true);
      expect('}');
      return {RepeatInstr{count, std::move(body)}};
    }
    if (word == "without_seeing") {
      expect('(');
      int guard = state_arg();
      expect(')');
      expect('{');
      InstructionList body = parse_list(true);
      expect('}');
      skip_ws();
      int kl = line_, kc = col_;
      std::string kw = ident();
      if (kw != "otherwise")
        throw parse_error("without_seeing needs an otherwise block", kl, kc);
      expect('{');
      InstructionList other = parse_list(true);
      expect('}');
      return {WithoutSeeingInstr{guard, std::move(body), std::move(other)}};
    }
    if (word == "declare") return {DeclareInstr{}};
    throw parse_error("unknown instruction '" + word + "'", line, col);
  }

  int state_arg() {
    int line = line_, col = col_;
    int v = expr();
    if (v < 0 || v >= b_.q)
      throw parse_error("state index " + std::to_string(v) +
                            " out of range for q=" + std::to_string(b_.q),
                        line, col);
    return v;
  }

  int expr() {
    int v = term();
    for (;;) {
      skip_blank();
      if (!eof() && peek() == '+') {
        get();
        v += term();
      } else if (!eof() && peek() == '-') {
        get();
        v -= term();
      } else {
        return v;
      }
    }
  }

  int term() {
    skip_blank();
    if (eof()) fail("expected expression");
    char c = peek();
    if (std::isdigit(static_cast<unsigned char>(c))) {
      int v = 0;
      while (!eof() && std::isdigit(static_cast<unsigned char>(peek())))
        v = v * 10 + (get() - '0');
      return v;
    }
    if (std::isalpha(static_cast<unsigned char>(c))) {
      int line = line_, col = col_;
      std::string word = ident();
      if (word == "r") {
        params_.insert("r");
        return b_.r;
      }
      if (word == "n") {
        params_.insert("n");
        return b_.n;
      }
      throw parse_error("unknown symbol '" + word + "'", line, col);
    }
    fail("expected integer, 'r' or 'n'");
    return 0;
  }

  std::string ident() {
    skip_ws();
    if (eof() || !std::isalpha(static_cast<unsigned char>(peek())))
      fail("expected identifier");
    std::string word;
    while (!eof() && (std::isalnum(static_cast<unsigned char>(peek())) ||
                      peek() == '_'))
      word.push_back(get());
    return word;
  }

  void expect(char c) {
    skip_ws();
    if (eof() || peek() != c)
      fail(std::string("expected '") + c + "'");
    get();
  }

  // Newlines and semicolons both separate statements; neither carries
  // structure beyond that, so the parser treats them as whitespace.
  void skip_ws() {
    for (;;) {
      while (!eof() && (std::isspace(static_cast<unsigned char>(peek())) ||
                        peek() == ';'))
        get();
      if (!eof() && peek() == '#') {
        while (!eof() && peek() != '\n') get();
        continue;
      }
      return;
    }
  }

  // Within argument lists only horizontal space is skipped.
  void skip_blank() {
    while (!eof() && (peek() == ' ' || peek() == '\t')) get();
  }

  [[noreturn]] void fail(const std::string& msg) {
    throw parse_error(msg, line_, col_);
  }

  bool eof() const { return pos_ >= text_.size(); }
  char peek() const { return text_[pos_]; }
  char get() {
    char c = text_[pos_++];
    if (c == '\n') {
      ++line_;
      col_ = 1;
    } else {
      ++col_;
    }
    return c;
  }

  const std::string& text_;
  Bindings b_;
  std::size_t pos_ = 0;
  int line_ = 1, col_ = 1;
  std::set<std::string> params_;
};

}  // namespace detail

inline ProtocolSource parse_protocol(const std::string& text,
                                     const Bindings& bindings,
                                     const std::string& name = "") {
  return detail::ProtocolParser(text, bindings).parse(name);
}

// ---------------------------------------------------------------------------
// Pretty printer (canonical form: evaluated counts, two-space indent)
// ---------------------------------------------------------------------------

namespace detail {

inline void print_list(const InstructionList& list, std::ostringstream& out,
                       int indent) {
  std::string pad(static_cast<std::size_t>(indent) * 2, ' ');
  for (const Instruction& ins : list) {
    std::visit(
        [&](const auto& node) {
          using T = std::decay_t<decltype(node)>;
          if constexpr (std::is_same_v<T, FlipInstr>) {
            out << pad << "flip(" << node.from << "," << node.to << ")\n";
          } else if constexpr (std::is_same_v<T, FlipAnyInstr>) {
            out << pad << "flip(*," << node.to << ")\n";
          } else if constexpr (std::is_same_v<T, SeeInstr>) {
            out << pad << "see(" << node.target << ")\n";
          } else if constexpr (std::is_same_v<T, RepeatInstr>) {
            out << pad << "repeat(" << node.count << ") {\n";
            print_list(node.body, out, indent + 1);
            out << pad << "}\n";
          } else if constexpr (std::is_same_v<T, WithoutSeeingInstr>) {
            out << pad << "without_seeing(" << node.guard << ") {\n";
            print_list(node.body, out, indent + 1);
            out << pad << "} otherwise {\n";
            print_list(node.otherwise, out, indent + 1);
            out << pad << "}\n";
          } else {
            out << pad << "declare\n";
          }
        },
        ins.node);
  }
}

}  // namespace detail

inline std::string pretty_print(const ProtocolSource& src) {
  std::ostringstream out;
  detail::print_list(src.instructions, out, 0);
  return out.str();
}

// ---------------------------------------------------------------------------
// Compiler
// ---------------------------------------------------------------------------

enum class PrimitiveKind { flip, flip_any, see, declare };

struct CompiledPosition {
  PrimitiveKind kind;
  int a = 0;  // flip: from, see: target
  int b = 0;  // flip/flip_any: to
  ctrl_t next;
  // Guards of enclosing without_seeing bodies, outermost first. Observing
  // `state` on entry moves control to `target` before the primitive runs.
  std::vector<std::pair<int, ctrl_t>> guards;
};

/*
 * Compiled program layout. Control states are the unrolled primitive
 * positions; `end_state` is the absorbing state reached when the program
 * runs out of instructions or declares.
 */
struct CompiledLayout {
  std::vector<CompiledPosition> positions;
  ctrl_t end_state = 0;
  ctrl_t entry = 0;
};

namespace detail {

constexpr ctrl_t kEndMark = 0xffffffffu;

struct Emitter {
  std::vector<CompiledPosition> positions;
  std::vector<std::pair<int, ctrl_t>> guard_stack;

  ctrl_t emit_list(const InstructionList& list, ctrl_t cont) {
    ctrl_t next = cont;
    for (auto it = list.rbegin(); it != list.rend(); ++it)
      next = emit_one(*it, next);
    return next;
  }

  ctrl_t emit_one(const Instruction& ins, ctrl_t cont) {
    return std::visit(
        [&](const auto& node) -> ctrl_t {
          using T = std::decay_t<decltype(node)>;
          if constexpr (std::is_same_v<T, FlipInstr>) {
            return add(PrimitiveKind::flip, node.from, node.to, cont);
          } else if constexpr (std::is_same_v<T, FlipAnyInstr>) {
            return add(PrimitiveKind::flip_any, 0, node.to, cont);
          } else if constexpr (std::is_same_v<T, SeeInstr>) {
            return add(PrimitiveKind::see, node.target, 0, cont);
          } else if constexpr (std::is_same_v<T, RepeatInstr>) {
            ctrl_t next = cont;
            for (int i = 0; i < node.count; ++i)
              next = emit_list(node.body, next);
            return next;
          } else if constexpr (std::is_same_v<T, WithoutSeeingInstr>) {
            ctrl_t other = emit_list(node.otherwise, cont);
            guard_stack.emplace_back(node.guard, other);
            ctrl_t body = emit_list(node.body, cont);
            guard_stack.pop_back();
            return body;
          } else {
            return add(PrimitiveKind::declare, 0, 0, kEndMark);
          }
        },
        ins.node);
  }

  ctrl_t add(PrimitiveKind kind, int a, int b, ctrl_t next) {
    CompiledPosition p;
    p.kind = kind;
    p.a = a;
    p.b = b;
    p.next = next;
    p.guards = guard_stack;
    positions.push_back(std::move(p));
    return static_cast<ctrl_t>(positions.size() - 1);
  }
};

// Follows guard jumps until none of the active guards matches the
// observation. Each jump leaves the body of the construct whose guard
// fired, so the chain only moves forward through the program.
inline ctrl_t resolve_guards(const CompiledLayout& lay, ctrl_t pos,
                             state_t observed) {
  std::size_t hops = 0;
  for (;;) {
    if (pos == lay.end_state) return pos;
    const CompiledPosition& p = lay.positions[pos];
    bool jumped = false;
    for (const auto& [guard, target] : p.guards) {
      if (guard == static_cast<int>(observed)) {
        pos = target;
        jumped = true;
        break;
      }
    }
    if (!jumped) return pos;
    if (++hops > lay.positions.size() + 1)
      throw error("guard jump chain does not terminate");
  }
}

}  // namespace detail

inline std::pair<Controller, CompiledLayout> compile_with_layout(
    const ProtocolSource& src, const Bindings& b) {
  detail::Emitter em;
  ctrl_t entry = em.emit_list(src.instructions, detail::kEndMark);

  CompiledLayout lay;
  lay.positions = std::move(em.positions);
  lay.end_state = static_cast<ctrl_t>(lay.positions.size());
  for (CompiledPosition& p : lay.positions) {
    if (p.next == detail::kEndMark) p.next = lay.end_state;
    for (auto& g : p.guards)
      if (g.second == detail::kEndMark) g.second = lay.end_state;
  }
  lay.entry = entry == detail::kEndMark ? lay.end_state : entry;

  unsigned q = static_cast<unsigned>(b.q);
  ctrl_t num_states = lay.end_state + 1;
  std::vector<ControllerStep> table(static_cast<std::size_t>(num_states) * q);
  for (ctrl_t s = 0; s < num_states; ++s) {
    for (unsigned v = 0; v < q; ++v) {
      state_t obs = static_cast<state_t>(v);
      ctrl_t pos = detail::resolve_guards(lay, s, obs);
      ControllerStep step{obs, pos, false};
      if (pos != lay.end_state) {
        const CompiledPosition& p = lay.positions[pos];
        switch (p.kind) {
          case PrimitiveKind::flip:
            if (static_cast<int>(v) == p.a) step = {static_cast<state_t>(p.b), p.next, false};
            break;
          case PrimitiveKind::flip_any:
            if (static_cast<int>(v) != p.b) step = {static_cast<state_t>(p.b), p.next, false};
            break;
          case PrimitiveKind::see:
            if (static_cast<int>(v) == p.a) step = {obs, p.next, false};
            break;
          case PrimitiveKind::declare:
            step = {obs, lay.end_state, true};
            break;
        }
      }
      table[static_cast<std::size_t>(s) * q + v] = step;
    }
  }

  Controller c(q, num_states, lay.entry, std::move(table));
  c.add_label("end", lay.end_state);
  return {std::move(c), std::move(lay)};
}

inline Controller compile(const ProtocolSource& src, const Bindings& b) {
  return compile_with_layout(src, b).first;
}

/// One-call convenience: parse and compile against the same bindings.
inline Controller compile_text(const std::string& text, const Bindings& b,
                               const std::string& name = "") {
  return compile(parse_protocol(text, b, name), b);
}

}  // namespace lightswitch
