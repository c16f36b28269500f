#pragma once

#include <map>
#include <set>

#include "program.hpp"

namespace xtt {

// Deterministic single-tape machine. Tape cells hold labels; the head starts
// on cell 1. Halting in the output state yields the tape content up to
// trailing blanks. Machines generated into programs must reach the output
// state with the head back on cell 1 and must never move left off the tape.
struct TuringMachine {
  struct Action {
    std::string state;
    Label write;
    char move = 'S';  // L, R, S
  };

  std::vector<std::string> states;
  std::vector<Label> input_alphabet;
  std::vector<Label> tape_alphabet;
  Label blank = "blank";
  std::string start;
  std::vector<std::string> halting;
  std::string output_state;
  std::map<std::pair<std::string, Label>, Action> delta;

  bool is_halting(const std::string& q) const;
  void validate() const;  // throws std::invalid_argument
};

// A machine whose head stays within the input cells; enforced dynamically by
// tm_run in LBA mode.
using LbaMachine = TuringMachine;

class MachineError : public std::runtime_error {
  using std::runtime_error::runtime_error;

 public:
  explicit MachineError(const std::string& msg) : std::runtime_error(msg) {}
};

TuringMachine parse_machine(std::string_view text);
std::string machine_to_string(const TuringMachine& m);

struct TmResult {
  enum class Kind { Output, Reject, StepLimit };
  Kind kind = Kind::Output;
  std::vector<Label> output;  // Output only: tape up to trailing blanks
  std::string halted_in;
  std::uint64_t steps = 0;
};

// Reference simulation with an explicit tape; in LBA mode any move outside
// the input cells throws MachineError.
TmResult tm_run(const TuringMachine& m, std::vector<Label> input,
                std::uint64_t max_steps = 1'000'000, bool lba = false);

// From t to the flat tree spelling its brace encoding. Exactly the
// single-letter rule for |labels| = 1; larger alphabets dispatch the label
// emission over name() tests.
Program gen_tree2string(const std::vector<Label>& labels);

// Inverse of gen_tree2string on well-formed encodings.
Program gen_string2tree(const std::vector<Label>& labels);

// Simulates m on the flat-tree form of a string: tape segments live in the
// temporary trees `left` (reversed prefix) and `right` (head onward), the
// current state in one nonempty value variable per state.
Program gen_tm_program(const TuringMachine& m);

// Space-bounded simulation using only input-only expressions: per-letter
// node-set variables track cell contents, `head` the current cell, and
// state flags the control state. Emits a single accept or reject node.
Program gen_lba_program(const LbaMachine& m);

// One program running p1, p2, p3 in sequence; stage outputs are captured in
// temporary trees and re-entered through fresh modes.
Program compose(const Program& p1, const Program& p2, const Program& p3);

// k chained tree doublings: the result tree has exactly 2^k leaves.
Program gen_doubling(int k);

}  // namespace xtt
