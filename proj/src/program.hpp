#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "xexpr.hpp"

namespace xtt {

enum class StKind { Cons, Apply, Call, Foreach, Val, Tree, Vcopy, Tcopy, If };

struct Statement;
using Template = std::vector<Statement>;

struct Statement {
  StKind kind;
  std::string name;                 // cons: label, call: rule, val/tree/tcopy: variable
  XExprPtr expr;                    // apply, foreach, val, vcopy, if
  std::optional<std::string> mode;  // apply
  Template body;                    // cons, foreach, tree, if-then
  Template orelse;                  // if-else
};

struct Rule {
  std::string name;
  XExprPtr match;
  std::optional<std::string> mode;
  Template body;
};

struct Program {
  std::vector<Rule> rules;
  const Rule* rule_named(const std::string& name) const;
};

// Address of a statement inside a template: (branch, index) per nesting
// level. Branch 0 is the main body, branch 1 an if's else template.
struct StmtPath {
  struct Step {
    int branch;
    int index;
    bool operator==(const Step&) const = default;
  };
  std::vector<Step> steps;
  bool operator==(const StmtPath&) const = default;
};

std::string to_string(const StmtPath& p);
const Statement* statement_at(const Template& m, const StmtPath& p);

// S2 is in the scope of S1 iff S2 is a right sibling of S1 or a descendant
// of one. Throws if either path does not resolve in m.
bool in_scope(const Template& m, const StmtPath& s1, const StmtPath& s2);

Program parse_program(std::string_view text);
std::string program_to_string(const Program& p);
std::string template_to_string(const Template& m, int indent = 0);

// Lexes a program text into its token spellings; two texts denote the same
// program exactly when their token streams agree.
std::vector<std::string> program_tokens(std::string_view text);

bool program_equal(const Program& a, const Program& b);

enum class Version { V1Program, V2Program };

// V1Program iff every expression in P (match and statement positions) is
// input-only and polynomial under 1.0-mode flags.
Version classify_version(const Program& p);

inline EvalMode eval_mode_for(const Program& p) {
  return classify_version(p) == Version::V1Program ? EvalMode::V1 : EvalMode::V2;
}

// Rewrites P so that every foreach and tree body is a single call to a fresh
// rule (match //*) holding the original body. Semantics-preserving and
// idempotent.
Program lift_bodies(const Program& p);

// Walks every expression of the program (match then statement positions, in
// textual order).
void for_each_expr(const Program& p, const std::function<void(const XExpr&)>& fn);

// --- construction helpers ---------------------------------------------

inline Statement st_cons(std::string label, Template body = {}) {
  Statement s{};
  s.kind = StKind::Cons;
  s.name = std::move(label);
  s.body = std::move(body);
  return s;
}
inline Statement st_apply(XExprPtr e, std::optional<std::string> mode = {}) {
  Statement s{};
  s.kind = StKind::Apply;
  s.expr = std::move(e);
  s.mode = std::move(mode);
  return s;
}
inline Statement st_call(std::string rule) {
  Statement s{};
  s.kind = StKind::Call;
  s.name = std::move(rule);
  return s;
}
inline Statement st_foreach(XExprPtr e, Template body) {
  Statement s{};
  s.kind = StKind::Foreach;
  s.expr = std::move(e);
  s.body = std::move(body);
  return s;
}
inline Statement st_val(std::string var, XExprPtr e) {
  Statement s{};
  s.kind = StKind::Val;
  s.name = std::move(var);
  s.expr = std::move(e);
  return s;
}
inline Statement st_tree(std::string var, Template body) {
  Statement s{};
  s.kind = StKind::Tree;
  s.name = std::move(var);
  s.body = std::move(body);
  return s;
}
inline Statement st_vcopy(XExprPtr e) {
  Statement s{};
  s.kind = StKind::Vcopy;
  s.expr = std::move(e);
  return s;
}
inline Statement st_tcopy(std::string var) {
  Statement s{};
  s.kind = StKind::Tcopy;
  s.name = std::move(var);
  return s;
}
inline Statement st_if(XExprPtr e, Template then_t, Template else_t) {
  Statement s{};
  s.kind = StKind::If;
  s.expr = std::move(e);
  s.body = std::move(then_t);
  s.orelse = std::move(else_t);
  return s;
}

inline XExprPtr x_root() { return make_expr(XKind::Root); }
inline XExprPtr x_child() { return make_expr(XKind::Child); }
inline XExprPtr x_all() { return make_expr(XKind::AllNodes); }
inline XExprPtr x_first_child() { return make_expr(XKind::FirstChild); }
inline XExprPtr x_next() { return make_expr(XKind::NextSibling); }
inline XExprPtr x_prev() { return make_expr(XKind::PrevSibling); }
inline XExprPtr x_dot() { return make_expr(XKind::Dot); }
inline XExprPtr x_position() { return make_expr(XKind::Position); }
inline XExprPtr x_empty() { return make_expr(XKind::Empty); }
inline XExprPtr x_one() { return make_expr(XKind::One); }
inline XExprPtr x_var(std::string n) { return make_expr(XKind::VarValue, std::move(n)); }
inline XExprPtr x_var_tree(std::string n) { return make_expr(XKind::VarTree, std::move(n)); }
inline XExprPtr x_inc(std::string n) { return make_expr(XKind::Inc, std::move(n)); }
inline XExprPtr x_dec(std::string n) { return make_expr(XKind::Dec, std::move(n)); }
inline XExprPtr x_eq(XExprPtr a, XExprPtr b) {
  return make_expr(XKind::Eq, {}, std::move(a), std::move(b));
}
inline XExprPtr x_name_is(std::string label) {
  return make_expr(XKind::NameIs, std::move(label));
}
inline XExprPtr x_union(XExprPtr a, XExprPtr b) {
  return make_expr(XKind::Union, {}, std::move(a), std::move(b));
}
inline XExprPtr x_intersect(XExprPtr a, XExprPtr b) {
  return make_expr(XKind::Intersect, {}, std::move(a), std::move(b));
}
inline XExprPtr x_except(XExprPtr a, XExprPtr b) {
  return make_expr(XKind::Except, {}, std::move(a), std::move(b));
}

}  // namespace xtt
