// Copyright 2026 The hwloop Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstdint>
#include <deque>
#include <fstream>
#include <map>
#include <memory>
#include <ostream>
#include <string>
#include <vector>

#include "model.hpp"

namespace hwloop::sim {

struct Frame {
  const Code* code = nullptr;
  size_t pc = 0;
  const Instr* call = nullptr;  // task call that pushed this frame
  // Active repeat loops: (pc of the RepeatTest, remaining iterations).
  std::vector<std::pair<size_t, int64_t>> counters;
  BitVector temp;
  std::vector<Target> temp_targets;
};

struct Thread {
  std::vector<Frame> frames;
  uint64_t gen = 0;  // bumped on every wake; stale wakeups are ignored
  bool done = false;
  bool waiting = false;
  // Sensitivity snapshot while blocked in an event control.
  struct Armed {
    const WaitItem* item;
    BitVector last;
  };
  std::vector<Armed> armed;
  const Instr* wait_instr = nullptr;
  Thread* parent = nullptr;
  int fork_pending = 0;
  bool in_function = false;
};

/// Executes an elaborated model with Verilog stratified event scheduling.
class Machine {
 public:
  Machine(Model& model, std::ostream& out);
  ~Machine();

  // Expression evaluation. The result has exactly `width` bits.
  BitVector eval(const CExpr& e, uint32_t width, bool sign);
  BitVector eval_self(const CExpr& e) { return eval(e, e.width, e.is_signed); }

  // Runs to completion; returns the process exit status.
  int run();

  uint64_t now() const { return now_; }

 private:
  struct Event {
    enum class Kind { Thread, Driver, DriverValue } kind;
    Thread* thread = nullptr;
    uint64_t gen = 0;
    Driver* driver = nullptr;
    BitVector value;
  };
  struct Nba {
    std::vector<Target> targets;
    BitVector value;
  };
  struct Slot {
    std::vector<Event> active;
    std::vector<Nba> nba;
  };

  BitVector eval_binary(const CExpr& e, uint32_t width, bool sign);
  BitVector eval_select(const CExpr& e);
  BitVector call_function(const CExpr& e);
  BitVector system_function(const CExpr& e);
  double eval_real(const CExpr& e);
  uint64_t delay_ticks(const CExpr& e, const Scope* scope);
  uint64_t unit_scale(const Scope* scope) const;

  void resolve_lvalue(const CLValue& lv, std::vector<Target>& out);
  void write_targets(const std::vector<Target>& targets, const BitVector& value);
  void write_target(const Target& t, const BitVector& value);
  void signal_changed(Signal* sig);
  void update_net(Signal* sig);
  void evaluate_driver(Driver* d);
  void apply_driver_value(Driver* d, const BitVector& value);

  void schedule(Thread* t);
  void schedule_at(uint64_t time, Event ev);
  void run_thread(Thread* t);
  bool step_instr(Thread* t);  // false when the thread suspends or ends
  void arm_wait(Thread* t, const Instr& in);
  bool triggered(Thread* t);
  void finish_thread(Thread* t);
  void do_disable(Thread* self, const Instr& in);
  Thread* spawn(const Code* code, size_t pc);

  void system_task(Thread* t, const Instr& in);
  std::string format_args(const std::vector<CExprPtr>& args, size_t first,
                          const Scope* scope, char default_base);
  std::string monitor_key();
  std::string format_value(char spec, const BitVector& v, bool is_signed, int width,
                           bool left, const Scope* scope);
  void postponed();
  void read_mem(const Instr& in, bool hex);

  Model& m_;
  std::ostream& out_;
  uint64_t now_ = 0;
  bool finished_ = false;
  int exit_status_ = 0;
  std::deque<Event> active_;
  std::deque<Event> inactive_;
  std::vector<Nba> nba_;
  std::map<uint64_t, Slot> future_;
  std::vector<std::unique_ptr<Thread>> threads_;
  std::vector<std::pair<const Instr*, Thread*>> strobes_;
  const Instr* monitor_ = nullptr;
  std::string monitor_key_;
  bool monitor_on_ = true;
  bool monitor_fresh_ = false;
  uint32_t random_seed_ = 0;
  std::map<uint32_t, std::unique_ptr<std::ofstream>> files_;
  uint32_t next_fd_ = 3;
  int function_depth_ = 0;
};

}  // namespace hwloop::sim
