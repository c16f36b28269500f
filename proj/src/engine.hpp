#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <random>
#include <string>
#include <variant>
#include <vector>

#include "program.hpp"

namespace xtt {

// A statement instance inside a configuration. Instances are created fresh on
// every substitution; a statement is active exactly when it holds a context.
// Link leaves only occur in DAG-mode configurations.
struct CfgNode {
  enum class Link { None, Entry, Input };

  StKind kind{};
  std::string name;
  XExprPtr expr;
  std::optional<std::string> mode;
  std::vector<std::unique_ptr<CfgNode>> body, orelse;
  std::optional<Context> ctx;

  Link link = Link::None;
  DagRef link_entry;
  const TreeNode* link_input = nullptr;

  CfgNode* parent = nullptr;
  int branch = 0;  // 0 = body, 1 = orelse of the parent
  int index = 0;   // position in the sibling list

  bool active() const { return ctx.has_value(); }
};

using SiblingList = std::vector<std::unique_ptr<CfgNode>>;

struct Configuration {
  SiblingList top;
};

// How expressions are evaluated during rewriting. `project` replaces the
// context by its input-only projection before every evaluation (DAG mode).
struct EvalEnv {
  EvalMode mode = EvalMode::V2;
  bool project = false;
};

Value eval_in(const EvalEnv& env, const XExpr& e, const Context& c);

class RunError : public std::runtime_error {
 public:
  RunError(std::string path, const std::string& msg)
      : std::runtime_error(msg), path_(std::move(path)) {}
  const std::string& path() const { return path_; }

 private:
  std::string path_;
};

// --- configuration toolkit ---------------------------------------------

SiblingList instantiate_template(const Template& m);
SiblingList clone_nodes(const SiblingList& nodes);
Configuration clone_config(const Configuration& cfg);

// Activation discipline for substituted templates: every statement receives
// the context except cons statements (their children are activated as if the
// cons were transparent), statements in the scope of a variable definition,
// and statements strictly below a foreach.
void activate_range(SiblingList& list, std::size_t begin, std::size_t end,
                    const Context& c);

// The instantiated-and-activated form of a template.
Configuration init_config(const Template& m, const Context& c);

// The single statement `apply (/*)`, active under the initial context
// ({Input: t}, empty environment, (root, 1, 1)).
Configuration initial_configuration(TreeRef input);

SiblingList& sibling_list_of(Configuration& cfg, CfgNode* n);
void splice_replace(Configuration& cfg, CfgNode* at, std::size_t count,
                    SiblingList replacement);
std::string path_of(const CfgNode* n);

// Run of consecutive inactive right siblings of s, ending before the first
// active one: the statements re-activated when a variable definition fires.
// Returned as [begin, end) indices into s's sibling list.
std::pair<std::size_t, std::size_t> update_span(Configuration& cfg, const CfgNode* s);

// Active statements in preorder. Statements are walked through cons bodies;
// cons themselves never appear.
std::vector<CfgNode*> active_statements(Configuration& cfg);
std::vector<CfgNode*> active_ifs(Configuration& cfg);

// One if-resolution step: replaces the if by its then- or else-template
// (test nonempty / empty), activated under the if's context.
void fire_if(Configuration& cfg, CfgNode* s, const EvalEnv& env);
// Unique normal form under repeated if-resolution; leftmost-outermost order.
void if_normalize(Configuration& cfg, const EvalEnv& env);

// First rule of p (in textual order, restricted to the apply's mode) whose
// match set under C contains n; the implicit fallback template is
// `apply (child::*)`. Returns the rule name or nullopt for the fallback.
struct RuleChoice {
  const Template* body;
  std::optional<std::string> rule;
};
RuleChoice select_rule(const Program& p, const Context& c, const TreeNode* n,
                       const std::optional<std::string>& mode, const EvalEnv& env);

// True when every statement is a cons (a terminal template). With
// allow_links, link leaves are also permitted (a fully developed DAG entry).
bool is_literal(const SiblingList& list, bool allow_links = false);

// The data forest a terminal template describes (fresh node ids).
Forest denote_forest(const SiblingList& list);

// Terminal template describing the subtrees rooted at the given nodes.
SiblingList literal_template(const std::vector<const TreeNode*>& roots);

// A statement is enabled when it is active and, for tree statements, its body
// is terminal.
bool is_enabled(const CfgNode* s);

// Processes one enabled statement per the semantics of its kind, then
// normalizes ifs. Throws RunError when evaluation is undefined.
void step(Configuration& cfg, CfgNode* s, const Program& p, const EvalEnv& env);

// Schedule-invariant serialization of a configuration; nodes are named by
// (store binding slot, preorder index) so fresh-id differences vanish.
std::string canonical_config(const Configuration& cfg);

// --- driver ---------------------------------------------------------------

struct Strategy {
  enum class Kind { Leftmost, Random, Script };
  Kind kind = Kind::Leftmost;
  std::uint64_t seed = 0;
  std::vector<std::size_t> script;  // index into the enabled list per step

  static Strategy leftmost() { return {}; }
  static Strategy random(std::uint64_t seed) {
    return {Kind::Random, seed, {}};
  }
};

struct StepTrace {
  std::uint64_t index;
  StKind kind;
  std::string path;
  std::string rule;    // apply/call: selected rule names
  std::string triple;  // context summary
};
using TraceFn = std::function<void(const StepTrace&)>;

struct RunOutcome {
  enum class Kind { Final, StepLimit, Error };
  Kind kind;
  Tree tree;  // Final: doc-rooted result
  std::uint64_t steps = 0;
  std::string error, error_path;
};

constexpr std::uint64_t kDefaultStepBudget = 1'000'000;

// Rewrites `apply (/*)` under the initial context to a terminal template and
// wraps the resulting forest under a doc root. The evaluation mode follows
// classify_version(p).
RunOutcome run(const Program& p, TreeRef input, const Strategy& strategy = {},
               std::uint64_t max_steps = kDefaultStepBudget, TraceFn trace = nullptr);

struct ConfluenceReport {
  struct SeedRun {
    std::uint64_t seed;
    RunOutcome::Kind kind;
    std::string tree;  // brace string when Final
    std::uint64_t steps;
  };
  std::vector<SeedRun> runs;
  bool confluent = true;
  std::string detail;
};

// Runs p once per seed with the random strategy and checks that termination
// status agrees and all final trees are pairwise isomorphic.
ConfluenceReport fuzz_confluence(const Program& p, TreeRef input,
                                 const std::vector<std::uint64_t>& seeds,
                                 std::uint64_t max_steps = kDefaultStepBudget);

}  // namespace xtt
