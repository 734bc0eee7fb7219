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

/*
 * Test oracle: executes a protocol by walking the instruction tree with a
 * runtime frame stack. Shares no machinery with the compiler, which
 * unrolls to a static control-flow graph; agreement between the two is
 * what the semantics tests assert.
 */

#pragma once

#include <vector>

#include "lightswitch/dsl.hpp"

namespace lightswitch::testing {

class ReferenceInterpreter {
 public:
  explicit ReferenceInterpreter(const ProtocolSource& src) : program_(&src.instructions) {
    stack_.push_back(Frame{program_, 0, Frame::plain, 0, 0, nullptr});
    normalize();
  }

  struct Result {
    state_t write;
    bool declares;
  };

  Result visit(state_t observed) {
    if (declared_) return {observed, false};

    // Entry check: the outermost matching guard wins; landing in an
    // otherwise block can expose further enclosing guards, so rescan.
    for (;;) {
      bool jumped = false;
      for (std::size_t i = 0; i < stack_.size(); ++i) {
        if (stack_[i].kind == Frame::ws_body &&
            stack_[i].guard == static_cast<int>(observed)) {
          const InstructionList* other = stack_[i].otherwise;
          stack_.resize(i);
          stack_.push_back(Frame{other, 0, Frame::plain, 0, 0, nullptr});
          normalize();
          jumped = true;
          break;
        }
      }
      if (!jumped) break;
    }

    if (stack_.empty()) return {observed, false};

    const Instruction& ins = (*stack_.back().list)[stack_.back().idx];
    if (const auto* flip = std::get_if<FlipInstr>(&ins.node)) {
      if (static_cast<int>(observed) == flip->from) {
        advance();
        return {static_cast<state_t>(flip->to), false};
      }
      return {observed, false};
    }
    if (const auto* any = std::get_if<FlipAnyInstr>(&ins.node)) {
      if (static_cast<int>(observed) != any->to) {
        advance();
        return {static_cast<state_t>(any->to), false};
      }
      return {observed, false};
    }
    if (const auto* see = std::get_if<SeeInstr>(&ins.node)) {
      if (static_cast<int>(observed) == see->target) advance();
      return {observed, false};
    }
    declared_ = true;
    return {observed, true};
  }

  bool declared() const { return declared_; }

 private:
  struct Frame {
    const InstructionList* list;
    std::size_t idx;
    enum Kind { plain, repeat_body, ws_body } kind;
    int remaining;  // repeat passes left after the current one
    int guard;
    const InstructionList* otherwise;
  };

  void advance() {
    ++stack_.back().idx;
    normalize();
  }

  // Settle on the next primitive: enter structural instructions, restart
  // or pop finished frames.
  void normalize() {
    while (!stack_.empty()) {
      Frame& f = stack_.back();
      if (f.idx >= f.list->size()) {
        if (f.kind == Frame::repeat_body && f.remaining > 0) {
          --f.remaining;
          f.idx = 0;
          continue;
        }
        stack_.pop_back();
        if (!stack_.empty()) ++stack_.back().idx;
        continue;
      }
      const Instruction& ins = (*f.list)[f.idx];
      if (const auto* rep = std::get_if<RepeatInstr>(&ins.node)) {
        if (rep->count == 0 || rep->body.empty()) {
          ++f.idx;
          continue;
        }
        stack_.push_back(Frame{&rep->body, 0, Frame::repeat_body, rep->count - 1, 0, nullptr});
        continue;
      }
      if (const auto* ws = std::get_if<WithoutSeeingInstr>(&ins.node)) {
        if (ws->body.empty()) {
          ++f.idx;
          continue;
        }
        stack_.push_back(Frame{&ws->body, 0, Frame::ws_body, 0, ws->guard, &ws->otherwise});
        continue;
      }
      return;
    }
  }

  const InstructionList* program_;
  std::vector<Frame> stack_;
  bool declared_ = false;
};

}  // namespace lightswitch::testing
