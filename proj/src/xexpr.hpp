#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "tree.hpp"

namespace xtt {

using Counter = std::int64_t;

// A sequence item: a node of some store tree, or a counter in [1, n] where n
// is the node budget of the evaluation mode.
using Item = std::variant<const TreeNode*, Counter>;

inline bool is_node(const Item& it) { return std::holds_alternative<const TreeNode*>(it); }
inline const TreeNode* as_node(const Item& it) { return std::get<const TreeNode*>(it); }
inline Counter as_counter(const Item& it) { return std::get<Counter>(it); }

enum class ValueType { Nodes, Mixed };

struct Value {
  std::vector<Item> items;

  bool empty() const { return items.empty(); }
  std::size_t size() const { return items.size(); }
  // a value's type is nodes iff every item is a node (vacuously when empty)
  bool all_nodes() const;
  bool operator==(const Value&) const = default;
};

// Target of a symbolic tree binding used by the DAG evaluator: the identified
// configuration (rule name, interned context id).
struct DagRef {
  std::string rule;
  std::uint64_t ctx = 0;
  bool operator==(const DagRef&) const = default;
  auto operator<=>(const DagRef&) const = default;
};

// Tree-variable bindings. The input tree is always bound under `Input`;
// bindings keep insertion order (document order across the store). Rebinding
// replaces a variable's tree but retires the old one so values that still
// reference its nodes stay safe to inspect.
class Store {
 public:
  struct Binding {
    std::string var;
    std::variant<TreeRef, DagRef> target;
  };

  explicit Store(TreeRef input);

  const DataTree& input() const { return *input_; }
  TreeRef input_ref() const { return input_; }
  const Binding* find(const std::string& var) const;
  void bind(const std::string& var, TreeRef tree);
  void bind(const std::string& var, DagRef ref);
  const std::vector<Binding>& bindings() const { return binds_; }
  std::size_t total_nodes() const;
  // Position of the tree owning node n in binding order, npos if n belongs to
  // no live binding (e.g. a retired tree).
  std::size_t tree_index_of(const TreeNode* n) const;

 private:
  // replaced trees are kept alive through a shared chain so values created
  // under earlier contexts can still dereference their nodes
  struct Retired {
    TreeRef tree;
    std::shared_ptr<Retired> prev;
    // unlink iteratively: a long chain must not recurse on destruction
    ~Retired() {
      auto cur = std::move(prev);
      while (cur && cur.use_count() == 1) cur = std::move(cur->prev);
    }
  };

  TreeRef input_;
  std::vector<Binding> binds_;  // binds_[0] is Input
  std::shared_ptr<Retired> retired_;
};

using Env = std::map<std::string, Value>;

// The evaluation state threaded through expression evaluation: store,
// value-variable environment, and the context triple (item, position, size).
struct Context {
  Store store;
  Env env;
  Item item;
  Counter position = 1;
  Counter size = 1;
};

Context initial_context(TreeRef input);
Context with_value(const Context& c, const std::string& var, Value v);
Context with_tree(const Context& c, const std::string& var, TreeRef t);
Context with_tree(const Context& c, const std::string& var, DagRef r);
Context with_triple(const Context& c, Item item, Counter position, Counter size);

// In 1.0 mode `//*` ranges over the input tree only and counters are bounded
// by the input size; in 2.0 mode both span the whole store.
enum class EvalMode { V1, V2 };

enum class XKind {
  Root,         // /*
  Child,        // child::*
  AllNodes,     // //*
  FirstChild,   // child::*[1]
  NextSibling,  // following-sibling::*[1]
  PrevSibling,  // preceding-sibling::*[1]
  Dot,          // .
  Position,     // position()
  Empty,        // ()
  One,          // 1
  VarValue,     // $x
  VarTree,      // $y/*
  Inc,          // $x+1
  Dec,          // $x-1
  Eq,           // e1 = e2
  NameIs,       // name()='a'
  Union,        // e1 | e2
  Intersect,    // e1 intersect e2
  Except,       // e1 except e2
};

struct XExpr;
using XExprPtr = std::shared_ptr<const XExpr>;

struct XExpr {
  XKind kind;
  std::string name;  // variable (VarValue/VarTree/Inc/Dec) or label (NameIs)
  XExprPtr lhs, rhs;
};

XExprPtr make_expr(XKind kind, std::string name = {}, XExprPtr lhs = nullptr,
                   XExprPtr rhs = nullptr);

std::string expr_to_string(const XExpr& e);
XExprPtr parse_expr(std::string_view text);
bool expr_equal(const XExpr& a, const XExpr& b);

ValueType type_of(const XExpr& e);
bool is_input_only(const XExpr& e, EvalMode mode);
bool is_polynomial(const XExpr& e);

class EvalUndefined : public std::runtime_error {
 public:
  EvalUndefined(const XExpr& e, const std::string& cause);
  const std::string& expr_text() const { return expr_; }
  const std::string& cause() const { return cause_; }

 private:
  std::string expr_, cause_;
};

Value eval(const XExpr& e, const Context& c, EvalMode mode);

// True when env and context triple reference only the input tree (and
// counters within its node count).
bool is_input_only_context(const Context& c);
// Same context with all temporary trees removed; requires is_input_only_context.
Context project_input_only(const Context& c);

}  // namespace xtt
