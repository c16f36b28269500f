#pragma once

#include <cstdint>
#include <gmpxx.h>

#include "engine.hpp"

namespace xtt {

// A tree fragment with link leaves: links point either at another entry
// (rule name, interned context) or at a subtree of the input tree.
struct DagItem {
  enum class Kind { Label, Entry, Input };
  Kind kind = Kind::Label;
  Label label;
  std::vector<DagItem> children;  // Label only
  DagRef ref;                     // Entry
  std::uint32_t input_preorder = 0;  // Input
};
using DagForest = std::vector<DagItem>;

struct DagEntry {
  std::string rule;
  std::uint64_t ctx = 0;
  DagForest forest;
  std::vector<std::size_t> out_edges;  // entry indices this entry links to
};

// The completed result: entry 0 is the root tree; unfolding it under a doc
// root yields the run's final result tree.
struct Dag {
  TreeRef input;
  std::vector<DagEntry> entries;
  std::uint64_t interned_contexts = 0;
};

struct DagLimits {
  std::uint64_t max_entries = 200000;
  std::uint64_t max_steps = 20'000'000;
};

struct DagOutcome {
  enum class Kind { Completed, Nontermination, Error, Budget };
  Kind kind = Kind::Completed;
  Dag dag;                      // Completed
  std::vector<DagRef> witness;  // Nontermination: entry chain, first and last
                                // share the rule name and (env, triple) parts
  std::vector<std::string> witness_projections;  // (env, triple) keys per hop
  std::string error;
};

// Evaluates a 1.0 program by expanding configurations identified by
// (rule, context) pairs, memoizing on the pair and storing results as trees
// with link leaves. Detects nontermination as a link path between two
// configurations of the same rule whose contexts agree outside the store.
// The program is lift-normalized internally; non-1.0 programs are rejected.
DagOutcome evaluate_dag(const Program& p, TreeRef input, const DagLimits& limits = {});

class UnfoldLimit : public std::runtime_error {
 public:
  explicit UnfoldLimit(std::uint64_t limit)
      : std::runtime_error("unfolded tree exceeds " + std::to_string(limit) +
                           " nodes") {}
};

constexpr std::uint64_t kDefaultUnfoldLimit = 1'000'000;

// Materializes the result tree by splicing link targets; throws UnfoldLimit
// when the result would exceed max_nodes.
Tree unfold(const Dag& dag, std::uint64_t max_nodes = kDefaultUnfoldLimit);

struct DagStats {
  std::uint64_t entries = 0;
  std::uint64_t links = 0;
  std::uint64_t interned_contexts = 0;
  mpz_class unfolded_nodes;   // including the doc root
  mpz_class unfolded_leaves;
};

DagStats dag_stats(const Dag& dag);

std::string dag_to_string(const Dag& dag);
// Reparses a dump against the input tree its links refer to.
Dag parse_dag(std::string_view text, TreeRef input);

}  // namespace xtt
