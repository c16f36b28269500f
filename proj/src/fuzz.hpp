#pragma once

#include <random>
#include <set>

#include "engine.hpp"

namespace xtt {

// Random programs drawn from a terminating fragment: apply/foreach recurse
// only along child axes, calls only target later rules, and every expression
// is total on the contexts the program can reach. All generated programs are
// 1.0 programs.
struct FuzzOptions {
  int max_rules = 3;
  int max_stmts = 3;
  int max_depth = 3;
  std::vector<Label> labels = {"a", "b", "c"};
  // also generate reads of temporary trees (vcopy/foreach over $y/*, making
  // the program 2.0); the bodies of such reads never recurse, so programs
  // still terminate by construction
  bool tree_reads = false;
};

Program random_program(std::mt19937_64& rng, const FuzzOptions& opts = {});

Tree random_tree(std::mt19937_64& rng, int max_nodes,
                 const std::vector<Label>& labels);

// Input-only context over a random store: env and triple range over the
// input tree while the store carries extra temporary trees.
Context random_context_with_temps(std::mt19937_64& rng, TreeRef input,
                                  int extra_trees, const std::vector<Label>& labels);

// A configuration of nested if statements (about max_ifs of them), fully
// activated under ctx, with leaf cons markers telling branches apart.
Configuration random_if_config(std::mt19937_64& rng, const Context& ctx, int max_ifs);

struct EnumResult {
  std::set<std::string> outcomes;  // result strings, or canonical forms
  std::size_t states = 0;
  bool exploded = false;
  bool error = false;
  std::string error_detail;
};

// Explores every schedule of enabled statements, deduplicating states by
// canonical form; outcomes collects the brace strings of the final trees.
EnumResult enumerate_schedules(const Program& p, TreeRef input,
                               std::size_t max_states = 20000,
                               std::uint64_t max_steps = 64);

// Explores every order of resolving active ifs; outcomes collects the
// canonical forms of the reached normal forms.
EnumResult enumerate_if_orders(const Configuration& cfg, const EvalEnv& env,
                               std::size_t max_states = 20000);

}  // namespace xtt
