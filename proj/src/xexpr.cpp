#include "xexpr.hpp"

#include <algorithm>
#include <cctype>

namespace xtt {

bool Value::all_nodes() const {
  return std::all_of(items.begin(), items.end(),
                     [](const Item& it) { return is_node(it); });
}

Store::Store(TreeRef input) : input_(std::move(input)) {
  binds_.push_back({"Input", input_});
}

const Store::Binding* Store::find(const std::string& var) const {
  for (const auto& b : binds_)
    if (b.var == var) return &b;
  return nullptr;
}

void Store::bind(const std::string& var, TreeRef tree) {
  for (auto it = binds_.begin(); it != binds_.end(); ++it) {
    if (it->var == var) {
      if (auto* old = std::get_if<TreeRef>(&it->target))
        retired_ = std::make_shared<Retired>(Retired{*old, std::move(retired_)});
      binds_.erase(it);
      break;
    }
  }
  binds_.push_back({var, std::move(tree)});
}

void Store::bind(const std::string& var, DagRef ref) {
  for (auto it = binds_.begin(); it != binds_.end(); ++it) {
    if (it->var == var) {
      binds_.erase(it);
      break;
    }
  }
  binds_.push_back({var, std::move(ref)});
}

std::size_t Store::total_nodes() const {
  std::size_t total = 0;
  for (const auto& b : binds_)
    if (auto* t = std::get_if<TreeRef>(&b.target)) total += (*t)->node_count();
  return total;
}

std::size_t Store::tree_index_of(const TreeNode* n) const {
  const TreeNode* r = n->root();
  for (std::size_t i = 0; i < binds_.size(); ++i) {
    if (auto* t = std::get_if<TreeRef>(&binds_[i].target))
      if ((*t)->root() == r) return i;
  }
  return static_cast<std::size_t>(-1);
}

Context initial_context(TreeRef input) {
  Store s(input);
  return Context{std::move(s), {}, Item{input->root()}, 1, 1};
}

Context with_value(const Context& c, const std::string& var, Value v) {
  Context out = c;
  out.env[var] = std::move(v);
  return out;
}

Context with_tree(const Context& c, const std::string& var, TreeRef t) {
  Context out = c;
  out.store.bind(var, std::move(t));
  return out;
}

Context with_tree(const Context& c, const std::string& var, DagRef r) {
  Context out = c;
  out.store.bind(var, std::move(r));
  return out;
}

Context with_triple(const Context& c, Item item, Counter position, Counter size) {
  Context out = c;
  out.item = item;
  out.position = position;
  out.size = size;
  return out;
}

XExprPtr make_expr(XKind kind, std::string name, XExprPtr lhs, XExprPtr rhs) {
  auto e = std::make_shared<XExpr>();
  e->kind = kind;
  e->name = std::move(name);
  e->lhs = std::move(lhs);
  e->rhs = std::move(rhs);
  return e;
}

namespace {

// 1: '=', 2: set operators, 3: atoms (including $x+1 / $x-1)
int precedence(XKind k) {
  switch (k) {
    case XKind::Eq:
      return 1;
    case XKind::Union:
    case XKind::Intersect:
    case XKind::Except:
      return 2;
    default:
      return 3;
  }
}

void print_expr(const XExpr& e, int parent_prec, std::string& out) {
  int prec = precedence(e.kind);
  bool parens = prec < parent_prec;
  if (parens) out += '(';
  switch (e.kind) {
    case XKind::Root: out += "/*"; break;
    case XKind::Child: out += "child::*"; break;
    case XKind::AllNodes: out += "//*"; break;
    case XKind::FirstChild: out += "child::*[1]"; break;
    case XKind::NextSibling: out += "following-sibling::*[1]"; break;
    case XKind::PrevSibling: out += "preceding-sibling::*[1]"; break;
    case XKind::Dot: out += "."; break;
    case XKind::Position: out += "position()"; break;
    case XKind::Empty: out += "()"; break;
    case XKind::One: out += "1"; break;
    case XKind::VarValue: out += "$" + e.name; break;
    case XKind::VarTree: out += "$" + e.name + "/*"; break;
    case XKind::Inc: out += "$" + e.name + "+1"; break;
    case XKind::Dec: out += "$" + e.name + "-1"; break;
    case XKind::NameIs: out += "name()='" + e.name + "'"; break;
    case XKind::Eq:
      print_expr(*e.lhs, 2, out);
      out += " = ";
      print_expr(*e.rhs, 2, out);
      break;
    case XKind::Union:
      print_expr(*e.lhs, 2, out);
      out += " | ";
      print_expr(*e.rhs, 3, out);
      break;
    case XKind::Intersect:
      print_expr(*e.lhs, 2, out);
      out += " intersect ";
      print_expr(*e.rhs, 3, out);
      break;
    case XKind::Except:
      print_expr(*e.lhs, 2, out);
      out += " except ";
      print_expr(*e.rhs, 3, out);
      break;
  }
  if (parens) out += ')';
}

}  // namespace

std::string expr_to_string(const XExpr& e) {
  std::string out;
  print_expr(e, 0, out);
  return out;
}

bool expr_equal(const XExpr& a, const XExpr& b) {
  if (a.kind != b.kind || a.name != b.name) return false;
  if (!a.lhs != !b.lhs || !a.rhs != !b.rhs) return false;
  if (a.lhs && !expr_equal(*a.lhs, *b.lhs)) return false;
  if (a.rhs && !expr_equal(*a.rhs, *b.rhs)) return false;
  return true;
}

// ---------------------------------------------------------------------------
// Expression lexing and parsing

namespace {

struct ExprToken {
  enum Kind {
    Atom,     // fixed spellings: /* //* child::* etc.
    Ident,    // intersect / except / position / name
    Var,      // $x
    VarTree,  // $x/*
    One,
    Plus,
    Minus,
    Eq,
    Pipe,
    LParen,
    RParen,
    Quoted,  // 'label'
    End,
  } kind;
  std::string text;
  std::size_t offset;
};

const char* kAtomSpellings[] = {
    "following-sibling::*[1]", "preceding-sibling::*[1]", "child::*[1]",
    "child::*", "//*", "/*", "position()",
};

struct ExprLexer {
  std::string_view text;
  std::size_t pos = 0;

  void skip_ws() {
    while (pos < text.size() && std::isspace(static_cast<unsigned char>(text[pos])))
      ++pos;
  }

  ExprToken next() {
    skip_ws();
    std::size_t at = pos;
    if (pos >= text.size()) return {ExprToken::End, "", at};
    for (const char* atom : kAtomSpellings) {
      std::string_view a(atom);
      if (text.substr(pos, a.size()) == a) {
        pos += a.size();
        return {ExprToken::Atom, std::string(a), at};
      }
    }
    char c = text[pos];
    if (c == '$') {
      ++pos;
      std::size_t start = pos;
      while (pos < text.size() && (std::isalnum(static_cast<unsigned char>(text[pos])) ||
                                   text[pos] == '_'))
        ++pos;
      std::string name(text.substr(start, pos - start));
      if (!is_identifier(name))
        throw ParseError("expected variable name after '$'", at);
      if (text.substr(pos, 2) == "/*") {
        pos += 2;
        return {ExprToken::VarTree, name, at};
      }
      return {ExprToken::Var, name, at};
    }
    if (c == '\'') {
      ++pos;
      std::size_t start = pos;
      while (pos < text.size() && text[pos] != '\'') ++pos;
      if (pos >= text.size()) throw ParseError("unterminated quoted label", at);
      std::string lbl(text.substr(start, pos - start));
      ++pos;
      if (!is_identifier(lbl)) throw ParseError("bad quoted label", at);
      return {ExprToken::Quoted, lbl, at};
    }
    if (c == '1' &&
        (pos + 1 >= text.size() ||
         !std::isalnum(static_cast<unsigned char>(text[pos + 1])))) {
      ++pos;
      return {ExprToken::One, "1", at};
    }
    switch (c) {
      case '+': ++pos; return {ExprToken::Plus, "+", at};
      case '-': ++pos; return {ExprToken::Minus, "-", at};
      case '=': ++pos; return {ExprToken::Eq, "=", at};
      case '|': ++pos; return {ExprToken::Pipe, "|", at};
      case '(': ++pos; return {ExprToken::LParen, "(", at};
      case ')': ++pos; return {ExprToken::RParen, ")", at};
      case '.': ++pos; return {ExprToken::Atom, ".", at};
      default: break;
    }
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      std::size_t start = pos;
      while (pos < text.size() && (std::isalnum(static_cast<unsigned char>(text[pos])) ||
                                   text[pos] == '_'))
        ++pos;
      return {ExprToken::Ident, std::string(text.substr(start, pos - start)), at};
    }
    throw ParseError(std::string("unexpected character '") + c + "' in expression", at);
  }
};

class ExprParser {
 public:
  explicit ExprParser(std::string_view text) : lexer_{text} { advance(); }

  XExprPtr parse() {
    XExprPtr e = expr();
    if (tok_.kind != ExprToken::End)
      throw ParseError("trailing input in expression", tok_.offset);
    return e;
  }

 private:
  void advance() { tok_ = lexer_.next(); }

  XExprPtr expr() {
    XExprPtr lhs = set_expr();
    if (tok_.kind == ExprToken::Eq) {
      advance();
      XExprPtr rhs = set_expr();
      return make_expr(XKind::Eq, {}, lhs, rhs);
    }
    return lhs;
  }

  XExprPtr set_expr() {
    XExprPtr lhs = arith();
    for (;;) {
      if (tok_.kind == ExprToken::Pipe) {
        advance();
        lhs = make_expr(XKind::Union, {}, lhs, arith());
      } else if (tok_.kind == ExprToken::Ident && tok_.text == "intersect") {
        advance();
        lhs = make_expr(XKind::Intersect, {}, lhs, arith());
      } else if (tok_.kind == ExprToken::Ident && tok_.text == "except") {
        advance();
        lhs = make_expr(XKind::Except, {}, lhs, arith());
      } else {
        return lhs;
      }
    }
  }

  XExprPtr arith() {
    if (tok_.kind == ExprToken::Var) {
      std::string name = tok_.text;
      advance();
      if (tok_.kind == ExprToken::Plus || tok_.kind == ExprToken::Minus) {
        bool inc = tok_.kind == ExprToken::Plus;
        advance();
        if (tok_.kind != ExprToken::One)
          throw ParseError("expected 1 after '+'/'-'", tok_.offset);
        advance();
        return make_expr(inc ? XKind::Inc : XKind::Dec, name);
      }
      return make_expr(XKind::VarValue, name);
    }
    return primary();
  }

  XExprPtr primary() {
    switch (tok_.kind) {
      case ExprToken::Atom: {
        std::string a = tok_.text;
        advance();
        if (a == "/*") return make_expr(XKind::Root);
        if (a == "//*") return make_expr(XKind::AllNodes);
        if (a == "child::*") return make_expr(XKind::Child);
        if (a == "child::*[1]") return make_expr(XKind::FirstChild);
        if (a == "following-sibling::*[1]") return make_expr(XKind::NextSibling);
        if (a == "preceding-sibling::*[1]") return make_expr(XKind::PrevSibling);
        if (a == ".") return make_expr(XKind::Dot);
        if (a == "position()") return make_expr(XKind::Position);
        throw ParseError("unknown expression atom " + a, tok_.offset);
      }
      case ExprToken::One:
        advance();
        return make_expr(XKind::One);
      case ExprToken::VarTree: {
        std::string name = tok_.text;
        advance();
        return make_expr(XKind::VarTree, name);
      }
      case ExprToken::LParen: {
        advance();
        if (tok_.kind == ExprToken::RParen) {
          advance();
          return make_expr(XKind::Empty);
        }
        XExprPtr inner = expr();
        if (tok_.kind != ExprToken::RParen)
          throw ParseError("expected ')'", tok_.offset);
        advance();
        return inner;
      }
      case ExprToken::Ident: {
        if (tok_.text == "name") {
          advance();
          if (tok_.kind != ExprToken::LParen) throw ParseError("expected '(' after name", tok_.offset);
          advance();
          if (tok_.kind != ExprToken::RParen) throw ParseError("expected ')' after name(", tok_.offset);
          advance();
          if (tok_.kind != ExprToken::Eq) throw ParseError("expected '=' in name() test", tok_.offset);
          advance();
          if (tok_.kind != ExprToken::Quoted)
            throw ParseError("expected quoted label in name() test", tok_.offset);
          std::string lbl = tok_.text;
          advance();
          return make_expr(XKind::NameIs, lbl);
        }
        throw ParseError("unexpected identifier '" + tok_.text + "' in expression",
                         tok_.offset);
      }
      default:
        throw ParseError("expected an expression", tok_.offset);
    }
  }

  ExprLexer lexer_;
  ExprToken tok_;
};

}  // namespace

XExprPtr parse_expr(std::string_view text) { return ExprParser(text).parse(); }

// ---------------------------------------------------------------------------
// Static typing and flags

ValueType type_of(const XExpr& e) {
  switch (e.kind) {
    case XKind::Root:
    case XKind::Child:
    case XKind::AllNodes:
    case XKind::FirstChild:
    case XKind::NextSibling:
    case XKind::PrevSibling:
    case XKind::VarTree:
    case XKind::Empty:
    case XKind::Intersect:
    case XKind::Except:
      return ValueType::Nodes;
    case XKind::Union:
      return (type_of(*e.lhs) == ValueType::Nodes && type_of(*e.rhs) == ValueType::Nodes)
                 ? ValueType::Nodes
                 : ValueType::Mixed;
    default:
      return ValueType::Mixed;
  }
}

bool is_input_only(const XExpr& e, EvalMode mode) {
  switch (e.kind) {
    case XKind::VarTree:
      return false;
    case XKind::AllNodes:
      return mode == EvalMode::V1;
    case XKind::Eq:
    case XKind::Union:
    case XKind::Intersect:
    case XKind::Except:
      return is_input_only(*e.lhs, mode) && is_input_only(*e.rhs, mode);
    default:
      return true;
  }
}

bool is_polynomial(const XExpr& e) {
  if (e.lhs && !is_polynomial(*e.lhs)) return false;
  if (e.rhs && !is_polynomial(*e.rhs)) return false;
  return true;
}

// ---------------------------------------------------------------------------
// Evaluation

EvalUndefined::EvalUndefined(const XExpr& e, const std::string& cause)
    : std::runtime_error("evaluation undefined for " + expr_to_string(e) + ": " + cause),
      expr_(expr_to_string(e)),
      cause_(cause) {}

namespace {

Counter counter_bound(const Context& c, EvalMode mode) {
  return mode == EvalMode::V1
             ? static_cast<Counter>(c.store.input().node_count())
             : static_cast<Counter>(c.store.total_nodes());
}

const TreeNode* context_node(const XExpr& e, const Context& c) {
  if (!is_node(c.item)) throw EvalUndefined(e, "context item is not a node");
  return as_node(c.item);
}

Value singleton_truth(bool b) {
  Value v;
  if (b) v.items.push_back(Item{Counter{1}});
  return v;
}

Counter singleton_counter(const XExpr& e, const Value& v, const char* side) {
  if (v.size() != 1 || is_node(v.items[0]))
    throw EvalUndefined(e, std::string(side) + " operand is not a single counter");
  return as_counter(v.items[0]);
}

// (binding index, preorder) is a total document order over store nodes.
std::pair<std::size_t, std::uint32_t> order_key(const XExpr& e, const Context& c,
                                                const TreeNode* n) {
  std::size_t ti = c.store.tree_index_of(n);
  if (ti == static_cast<std::size_t>(-1))
    throw EvalUndefined(e, "node does not belong to the store");
  return {ti, n->preorder};
}

std::vector<const TreeNode*> node_set_operand(const XExpr& e, const XExpr& op,
                                              const Context& c, EvalMode mode) {
  Value v = eval(op, c, mode);
  std::vector<const TreeNode*> out;
  out.reserve(v.size());
  for (const Item& it : v.items) {
    if (!is_node(it)) throw EvalUndefined(e, "set operand contains a counter");
    out.push_back(as_node(it));
  }
  return out;
}

Value doc_ordered(const XExpr& e, const Context& c,
                  std::vector<const TreeNode*> nodes) {
  std::sort(nodes.begin(), nodes.end(),
            [&](const TreeNode* a, const TreeNode* b) {
              return order_key(e, c, a) < order_key(e, c, b);
            });
  nodes.erase(std::unique(nodes.begin(), nodes.end()), nodes.end());
  Value out;
  out.items.reserve(nodes.size());
  for (const TreeNode* n : nodes) out.items.push_back(Item{n});
  return out;
}

}  // namespace

Value eval(const XExpr& e, const Context& c, EvalMode mode) {
  switch (e.kind) {
    case XKind::Root:
      return Value{{Item{c.store.input().root()}}};
    case XKind::Child: {
      const TreeNode* n = context_node(e, c);
      Value v;
      for (const TreeNode* ch : n->children) v.items.push_back(Item{ch});
      return v;
    }
    case XKind::AllNodes: {
      Value v;
      if (mode == EvalMode::V1) {
        for (const TreeNode* n : c.store.input().preorder()) v.items.push_back(Item{n});
      } else {
        for (const auto& b : c.store.bindings()) {
          if (auto* t = std::get_if<TreeRef>(&b.target))
            for (const TreeNode* n : (*t)->preorder()) v.items.push_back(Item{n});
        }
      }
      return v;
    }
    case XKind::FirstChild: {
      const TreeNode* n = context_node(e, c);
      Value v;
      if (!n->children.empty()) v.items.push_back(Item{n->children.front()});
      return v;
    }
    case XKind::NextSibling: {
      const TreeNode* n = context_node(e, c);
      Value v;
      if (const TreeNode* s = n->next_sibling()) v.items.push_back(Item{s});
      return v;
    }
    case XKind::PrevSibling: {
      const TreeNode* n = context_node(e, c);
      Value v;
      if (const TreeNode* s = n->prev_sibling()) v.items.push_back(Item{s});
      return v;
    }
    case XKind::Dot:
      return Value{{c.item}};
    case XKind::Position:
      return Value{{Item{c.position}}};
    case XKind::Empty:
      return Value{};
    case XKind::One:
      return Value{{Item{Counter{1}}}};
    case XKind::VarValue: {
      auto it = c.env.find(e.name);
      if (it == c.env.end()) throw EvalUndefined(e, "unbound value variable " + e.name);
      return it->second;
    }
    case XKind::VarTree: {
      const Store::Binding* b = c.store.find(e.name);
      if (!b) throw EvalUndefined(e, "unbound tree variable " + e.name);
      auto* t = std::get_if<TreeRef>(&b->target);
      if (!t) throw EvalUndefined(e, "tree variable " + e.name + " is not materialized");
      return Value{{Item{(*t)->root()}}};
    }
    case XKind::Inc:
    case XKind::Dec: {
      auto it = c.env.find(e.name);
      if (it == c.env.end()) throw EvalUndefined(e, "unbound value variable " + e.name);
      Counter v = singleton_counter(e, it->second, "counter");
      Counter r = e.kind == XKind::Inc ? v + 1 : v - 1;
      if (r < 1 || r > counter_bound(c, mode))
        throw EvalUndefined(e, "counter out of range");
      return Value{{Item{r}}};
    }
    case XKind::Eq: {
      Counter a = singleton_counter(e, eval(*e.lhs, c, mode), "left");
      Counter b = singleton_counter(e, eval(*e.rhs, c, mode), "right");
      return singleton_truth(a == b);
    }
    case XKind::NameIs: {
      const TreeNode* n = context_node(e, c);
      return singleton_truth(n->label == e.name);
    }
    case XKind::Union: {
      auto a = node_set_operand(e, *e.lhs, c, mode);
      auto b = node_set_operand(e, *e.rhs, c, mode);
      a.insert(a.end(), b.begin(), b.end());
      return doc_ordered(e, c, std::move(a));
    }
    case XKind::Intersect: {
      auto a = node_set_operand(e, *e.lhs, c, mode);
      auto b = node_set_operand(e, *e.rhs, c, mode);
      std::vector<const TreeNode*> out;
      for (const TreeNode* n : a)
        if (std::find(b.begin(), b.end(), n) != b.end()) out.push_back(n);
      return doc_ordered(e, c, std::move(out));
    }
    case XKind::Except: {
      auto a = node_set_operand(e, *e.lhs, c, mode);
      auto b = node_set_operand(e, *e.rhs, c, mode);
      std::vector<const TreeNode*> out;
      for (const TreeNode* n : a)
        if (std::find(b.begin(), b.end(), n) == b.end()) out.push_back(n);
      return doc_ordered(e, c, std::move(out));
    }
  }
  throw std::logic_error("unhandled expression kind");
}

// ---------------------------------------------------------------------------
// Input-only projection

namespace {

bool item_over_input(const Item& it, const Context& c) {
  if (is_node(it)) return c.store.input().contains(as_node(it));
  Counter k = as_counter(it);
  return k >= 1 && k <= static_cast<Counter>(c.store.input().node_count());
}

}  // namespace

bool is_input_only_context(const Context& c) {
  if (!item_over_input(c.item, c)) return false;
  if (!item_over_input(Item{c.position}, c) || !item_over_input(Item{c.size}, c))
    return false;
  for (const auto& [var, val] : c.env)
    for (const Item& it : val.items)
      if (!item_over_input(it, c)) return false;
  return true;
}

Context project_input_only(const Context& c) {
  if (!is_input_only_context(c))
    throw std::invalid_argument("context is not input-only; cannot project");
  Store s(c.store.input_ref());
  return Context{std::move(s), c.env, c.item, c.position, c.size};
}

}  // namespace xtt
