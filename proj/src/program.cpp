#include "program.hpp"

#include <algorithm>
#include <cctype>
#include <map>
#include <set>
#include <sstream>

namespace xtt {

const Rule* Program::rule_named(const std::string& name) const {
  for (const Rule& r : rules)
    if (r.name == name) return &r;
  return nullptr;
}

std::string to_string(const StmtPath& p) {
  std::string out;
  for (std::size_t i = 0; i < p.steps.size(); ++i) {
    if (i) out += '.';
    if (p.steps[i].branch == 1) out += 'e';
    out += std::to_string(p.steps[i].index);
  }
  return out.empty() ? "-" : out;
}

const Statement* statement_at(const Template& m, const StmtPath& p) {
  const Template* cur = &m;
  const Statement* found = nullptr;
  for (const auto& step : p.steps) {
    if (step.index < 0 || static_cast<std::size_t>(step.index) >= cur->size())
      throw std::out_of_range("statement path does not resolve");
    found = &(*cur)[step.index];
    cur = step.branch == 1 ? &found->orelse : &found->body;
  }
  if (!found) throw std::out_of_range("empty statement path");
  return found;
}

bool in_scope(const Template& m, const StmtPath& s1, const StmtPath& s2) {
  statement_at(m, s1);
  statement_at(m, s2);
  std::size_t k = s1.steps.size();
  if (s2.steps.size() < k) return false;
  for (std::size_t i = 0; i + 1 < k; ++i)
    if (!(s1.steps[i] == s2.steps[i])) return false;
  const auto& a = s1.steps[k - 1];
  const auto& b = s2.steps[k - 1];
  return a.branch == b.branch && b.index > a.index;
}

// ---------------------------------------------------------------------------
// Parsing

namespace {

const std::set<std::string> kKeywords = {
    "template", "match", "mode",  "cons",  "apply", "call",      "foreach",
    "val",      "tree",  "vcopy", "tcopy", "if",    "else",      "intersect",
    "except"};

struct Scanner {
  std::string_view text;
  std::size_t pos = 0;

  void skip_ws() {
    for (;;) {
      while (pos < text.size() && std::isspace(static_cast<unsigned char>(text[pos])))
        ++pos;
      if (pos < text.size() && text[pos] == '#') {
        while (pos < text.size() && text[pos] != '\n') ++pos;
        continue;
      }
      return;
    }
  }

  [[noreturn]] void fail(const std::string& msg, std::size_t at) const {
    std::size_t line = 1, col = 1;
    for (std::size_t i = 0; i < at && i < text.size(); ++i) {
      if (text[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
    throw ParseError(msg + " at line " + std::to_string(line) + ", column " +
                         std::to_string(col),
                     at);
  }

  bool at_end() {
    skip_ws();
    return pos >= text.size();
  }

  char peek_char() {
    skip_ws();
    return pos < text.size() ? text[pos] : '\0';
  }

  std::string peek_word() {
    skip_ws();
    std::size_t p = pos;
    std::string w;
    while (p < text.size() &&
           (std::isalnum(static_cast<unsigned char>(text[p])) || text[p] == '_'))
      w += text[p++];
    return w;
  }

  bool try_word(const std::string& w) {
    if (peek_word() == w && !w.empty()) {
      pos += w.size();
      return true;
    }
    return false;
  }

  std::string ident(const char* what) {
    skip_ws();
    std::size_t at = pos;
    std::string w = peek_word();
    if (w.empty() || !is_identifier(w)) fail(std::string("expected ") + what, at);
    if (kKeywords.count(w)) fail("keyword '" + w + "' cannot be used as " + what, at);
    pos += w.size();
    return w;
  }

  void expect(char c) {
    skip_ws();
    if (pos >= text.size() || text[pos] != c)
      fail(std::string("expected '") + c + "'", pos);
    ++pos;
  }

  // Extracts the text between a balanced ( ... ) pair and parses it as an
  // expression. Quoted labels are skipped when matching parens.
  XExprPtr paren_expr() {
    skip_ws();
    std::size_t at = pos;
    expect('(');
    std::size_t start = pos;
    int depth = 1;
    while (pos < text.size() && depth > 0) {
      char c = text[pos];
      if (c == '\'') {
        ++pos;
        while (pos < text.size() && text[pos] != '\'') ++pos;
        if (pos >= text.size()) fail("unterminated quoted label", start);
      } else if (c == '(') {
        ++depth;
      } else if (c == ')') {
        --depth;
      }
      ++pos;
    }
    if (depth != 0) fail("unbalanced '(' in expression", at);
    std::string inner(text.substr(start, pos - 1 - start));
    // `( )` is the empty-sequence expression when it stands alone
    try {
      std::string trimmed = inner;
      trimmed.erase(std::remove_if(trimmed.begin(), trimmed.end(),
                                   [](unsigned char c) { return std::isspace(c); }),
                    trimmed.end());
      if (trimmed.empty()) return make_expr(XKind::Empty);
      return parse_expr(inner);
    } catch (const ParseError& pe) {
      fail(std::string("bad expression: ") + pe.what(), start + pe.offset());
    }
  }
};

class ProgramParser {
 public:
  explicit ProgramParser(std::string_view text) : sc_{text} {}

  Program parse() {
    Program p;
    while (!sc_.at_end()) {
      sc_.skip_ws();
      std::size_t at = sc_.pos;
      if (!sc_.try_word("template")) sc_.fail("expected 'template'", at);
      Rule r;
      r.name = sc_.ident("rule name");
      if (!sc_.try_word("match")) sc_.fail("expected 'match'", sc_.pos);
      r.match = sc_.paren_expr();
      if (sc_.try_word("mode")) r.mode = sc_.ident("mode name");
      sc_.expect('{');
      r.body = parse_template();
      sc_.expect('}');
      p.rules.push_back(std::move(r));
    }
    check(p);
    return p;
  }

 private:
  Template parse_template() {
    Template m;
    for (;;) {
      sc_.skip_ws();
      if (sc_.peek_char() == '}' || sc_.at_end()) return m;
      m.push_back(parse_statement());
    }
  }

  Statement parse_statement() {
    sc_.skip_ws();
    std::size_t at = sc_.pos;
    std::string w = sc_.peek_word();
    Statement s{};
    if (w == "cons") {
      sc_.try_word(w);
      s.kind = StKind::Cons;
      s.name = sc_.ident("label");
      sc_.expect('{');
      s.body = parse_template();
      sc_.expect('}');
    } else if (w == "apply") {
      sc_.try_word(w);
      s.kind = StKind::Apply;
      s.expr = sc_.paren_expr();
      if (sc_.try_word("mode")) s.mode = sc_.ident("mode name");
    } else if (w == "call") {
      sc_.try_word(w);
      s.kind = StKind::Call;
      s.name = sc_.ident("rule name");
    } else if (w == "foreach") {
      sc_.try_word(w);
      s.kind = StKind::Foreach;
      s.expr = sc_.paren_expr();
      sc_.expect('{');
      s.body = parse_template();
      sc_.expect('}');
    } else if (w == "val") {
      sc_.try_word(w);
      s.kind = StKind::Val;
      s.name = sc_.ident("value variable");
      s.expr = sc_.paren_expr();
    } else if (w == "tree") {
      sc_.try_word(w);
      s.kind = StKind::Tree;
      s.name = sc_.ident("tree variable");
      sc_.expect('{');
      s.body = parse_template();
      sc_.expect('}');
    } else if (w == "vcopy") {
      sc_.try_word(w);
      s.kind = StKind::Vcopy;
      s.expr = sc_.paren_expr();
    } else if (w == "tcopy") {
      sc_.try_word(w);
      s.kind = StKind::Tcopy;
      s.name = sc_.ident("tree variable");
    } else if (w == "if") {
      sc_.try_word(w);
      s.kind = StKind::If;
      s.expr = sc_.paren_expr();
      sc_.expect('{');
      s.body = parse_template();
      sc_.expect('}');
      if (!sc_.try_word("else")) sc_.fail("expected 'else'", sc_.pos);
      sc_.expect('{');
      s.orelse = parse_template();
      sc_.expect('}');
    } else {
      sc_.fail("expected a statement", at);
    }
    return s;
  }

  void check(const Program& p) {
    std::set<std::string> names;
    for (const Rule& r : p.rules)
      if (!names.insert(r.name).second)
        throw ParseError("duplicate rule name " + r.name, 0);

    // value vs tree variables: one kind per name, usage consistent with binder
    std::map<std::string, char> binder;  // 'v' or 't'
    binder["Input"] = 't';
    auto bind_kind = [&](const std::string& n, char k) {
      auto [it, fresh] = binder.emplace(n, k);
      if (!fresh && it->second != k)
        throw ParseError("variable " + n + " is bound both as value and tree variable", 0);
    };
    std::function<void(const Template&)> scan_binders = [&](const Template& m) {
      for (const Statement& s : m) {
        if (s.kind == StKind::Val) {
          if (s.name == "Input") throw ParseError("Input cannot be rebound", 0);
          bind_kind(s.name, 'v');
        }
        if (s.kind == StKind::Tree) {
          if (s.name == "Input") throw ParseError("Input cannot be rebound", 0);
          bind_kind(s.name, 't');
        }
        scan_binders(s.body);
        scan_binders(s.orelse);
      }
    };
    for (const Rule& r : p.rules) scan_binders(r.body);

    std::function<void(const XExpr&)> check_expr_vars = [&](const XExpr& e) {
      if (e.kind == XKind::VarValue || e.kind == XKind::Inc || e.kind == XKind::Dec) {
        auto it = binder.find(e.name);
        if (it != binder.end() && it->second != 'v')
          throw ParseError("$" + e.name + " used as a value but bound as a tree", 0);
      }
      if (e.kind == XKind::VarTree) {
        auto it = binder.find(e.name);
        if (it != binder.end() && it->second != 't')
          throw ParseError("$" + e.name + "/* used as a tree but bound as a value", 0);
      }
      if (e.lhs) check_expr_vars(*e.lhs);
      if (e.rhs) check_expr_vars(*e.rhs);
    };

    std::function<void(const Template&)> scan_stmts = [&](const Template& m) {
      for (const Statement& s : m) {
        if (s.expr) check_expr_vars(*s.expr);
        if (s.kind == StKind::Call && !p.rule_named(s.name))
          throw ParseError("call target " + s.name + " names no rule", 0);
        if (s.kind == StKind::Tcopy) {
          auto it = binder.find(s.name);
          if (it != binder.end() && it->second != 't')
            throw ParseError("tcopy " + s.name + " names a value variable", 0);
        }
        if ((s.kind == StKind::Apply || s.kind == StKind::Vcopy) &&
            type_of(*s.expr) != ValueType::Nodes)
          throw ParseError((s.kind == StKind::Apply ? std::string("apply")
                                                    : std::string("vcopy")) +
                               " expression " + expr_to_string(*s.expr) +
                               " must have type nodes",
                           0);
        scan_stmts(s.body);
        scan_stmts(s.orelse);
      }
    };
    for (const Rule& r : p.rules) {
      if (type_of(*r.match) != ValueType::Nodes)
        throw ParseError("match expression of rule " + r.name + " must have type nodes", 0);
      check_expr_vars(*r.match);
      scan_stmts(r.body);
    }
  }

  Scanner sc_;
};

}  // namespace

Program parse_program(std::string_view text) { return ProgramParser(text).parse(); }

// ---------------------------------------------------------------------------
// Printing

namespace {

void print_template(const Template& m, int indent, std::string& out);

void print_block(const Template& m, int indent, std::string& out) {
  if (m.empty()) {
    out += "{ }";
    return;
  }
  out += "{\n";
  print_template(m, indent + 1, out);
  out.append(static_cast<std::size_t>(indent) * 2, ' ');
  out += "}";
}

void print_statement(const Statement& s, int indent, std::string& out) {
  out.append(static_cast<std::size_t>(indent) * 2, ' ');
  switch (s.kind) {
    case StKind::Cons:
      out += "cons " + s.name + " ";
      print_block(s.body, indent, out);
      break;
    case StKind::Apply:
      out += "apply (" + expr_to_string(*s.expr) + ")";
      if (s.mode) out += " mode " + *s.mode;
      break;
    case StKind::Call:
      out += "call " + s.name;
      break;
    case StKind::Foreach:
      out += "foreach (" + expr_to_string(*s.expr) + ") ";
      print_block(s.body, indent, out);
      break;
    case StKind::Val:
      out += "val " + s.name + " (" + expr_to_string(*s.expr) + ")";
      break;
    case StKind::Tree:
      out += "tree " + s.name + " ";
      print_block(s.body, indent, out);
      break;
    case StKind::Vcopy:
      out += "vcopy (" + expr_to_string(*s.expr) + ")";
      break;
    case StKind::Tcopy:
      out += "tcopy " + s.name;
      break;
    case StKind::If:
      out += "if (" + expr_to_string(*s.expr) + ") ";
      print_block(s.body, indent, out);
      out += " else ";
      print_block(s.orelse, indent, out);
      break;
  }
  out += "\n";
}

void print_template(const Template& m, int indent, std::string& out) {
  for (const Statement& s : m) print_statement(s, indent, out);
}

}  // namespace

std::string template_to_string(const Template& m, int indent) {
  std::string out;
  print_template(m, indent, out);
  return out;
}

std::string program_to_string(const Program& p) {
  std::string out;
  for (const Rule& r : p.rules) {
    if (!out.empty()) out += "\n";
    out += "template " + r.name + " match (" + expr_to_string(*r.match) + ")";
    if (r.mode) out += " mode " + *r.mode;
    out += " ";
    print_block(r.body, 0, out);
    out += "\n";
  }
  return out;
}

std::vector<std::string> program_tokens(std::string_view text) {
  static const char* kAtoms[] = {
      "following-sibling::*[1]", "preceding-sibling::*[1]", "child::*[1]",
      "child::*", "//*", "/*", "position()",
  };
  std::vector<std::string> out;
  std::size_t pos = 0;
  while (pos < text.size()) {
    char c = text[pos];
    if (std::isspace(static_cast<unsigned char>(c))) {
      ++pos;
      continue;
    }
    if (c == '#') {
      while (pos < text.size() && text[pos] != '\n') ++pos;
      continue;
    }
    bool atom = false;
    for (const char* a : kAtoms) {
      std::string_view sv(a);
      if (text.substr(pos, sv.size()) == sv) {
        out.emplace_back(sv);
        pos += sv.size();
        atom = true;
        break;
      }
    }
    if (atom) continue;
    if (c == '$') {
      std::size_t start = pos++;
      while (pos < text.size() && (std::isalnum(static_cast<unsigned char>(text[pos])) ||
                                   text[pos] == '_'))
        ++pos;
      out.emplace_back(text.substr(start, pos - start));
      continue;
    }
    if (c == '\'') {
      std::size_t start = pos++;
      while (pos < text.size() && text[pos] != '\'') ++pos;
      if (pos < text.size()) ++pos;
      out.emplace_back(text.substr(start, pos - start));
      continue;
    }
    if (std::isalnum(static_cast<unsigned char>(c)) || c == '_') {
      std::size_t start = pos;
      while (pos < text.size() && (std::isalnum(static_cast<unsigned char>(text[pos])) ||
                                   text[pos] == '_'))
        ++pos;
      out.emplace_back(text.substr(start, pos - start));
      continue;
    }
    out.emplace_back(1, c);
    ++pos;
  }
  return out;
}

namespace {

bool template_equal(const Template& a, const Template& b);

bool statement_equal(const Statement& a, const Statement& b) {
  if (a.kind != b.kind || a.name != b.name || a.mode != b.mode) return false;
  if (!a.expr != !b.expr) return false;
  if (a.expr && !expr_equal(*a.expr, *b.expr)) return false;
  return template_equal(a.body, b.body) && template_equal(a.orelse, b.orelse);
}

bool template_equal(const Template& a, const Template& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i)
    if (!statement_equal(a[i], b[i])) return false;
  return true;
}

}  // namespace

bool program_equal(const Program& a, const Program& b) {
  if (a.rules.size() != b.rules.size()) return false;
  for (std::size_t i = 0; i < a.rules.size(); ++i) {
    const Rule &x = a.rules[i], &y = b.rules[i];
    if (x.name != y.name || x.mode != y.mode) return false;
    if (!expr_equal(*x.match, *y.match)) return false;
    if (!template_equal(x.body, y.body)) return false;
  }
  return true;
}

void for_each_expr(const Program& p, const std::function<void(const XExpr&)>& fn) {
  std::function<void(const Template&)> walk = [&](const Template& m) {
    for (const Statement& s : m) {
      if (s.expr) fn(*s.expr);
      walk(s.body);
      walk(s.orelse);
    }
  };
  for (const Rule& r : p.rules) {
    fn(*r.match);
    walk(r.body);
  }
}

Version classify_version(const Program& p) {
  bool v1 = true;
  for_each_expr(p, [&](const XExpr& e) {
    if (!is_input_only(e, EvalMode::V1) || !is_polynomial(e)) v1 = false;
  });
  return v1 ? Version::V1Program : Version::V2Program;
}

Program lift_bodies(const Program& p) {
  Program out;
  std::set<std::string> taken;
  for (const Rule& r : p.rules) {
    taken.insert(r.name);
    if (r.mode) taken.insert(*r.mode);
  }
  std::function<void(const Template&)> collect_modes = [&](const Template& m) {
    for (const Statement& s : m) {
      if (s.mode) taken.insert(*s.mode);
      collect_modes(s.body);
      collect_modes(s.orelse);
    }
  };
  for (const Rule& r : p.rules) collect_modes(r.body);

  std::vector<Rule> fresh_rules;
  int counter = 0;

  auto fresh_name = [&]() {
    std::string n;
    do {
      n = "__lift" + std::to_string(++counter);
    } while (taken.count(n));
    taken.insert(n);
    return n;
  };

  std::function<Template(const Template&)> lift = [&](const Template& m) {
    Template out_m;
    for (const Statement& s : m) {
      Statement t = s;
      t.body = lift(s.body);
      t.orelse = lift(s.orelse);
      if ((t.kind == StKind::Foreach || t.kind == StKind::Tree) &&
          !(t.body.size() == 1 && t.body[0].kind == StKind::Call)) {
        Rule r;
        r.name = fresh_name();
        r.match = make_expr(XKind::AllNodes);
        // the fresh mode keeps the rule out of apply dispatch; only the
        // generated call can reach it
        r.mode = r.name;
        r.body = std::move(t.body);
        fresh_rules.push_back(std::move(r));
        Statement call{};
        call.kind = StKind::Call;
        call.name = fresh_rules.back().name;
        t.body = Template{std::move(call)};
      }
      out_m.push_back(std::move(t));
    }
    return out_m;
  };

  for (const Rule& r : p.rules) {
    Rule nr = r;
    nr.body = lift(r.body);
    out.rules.push_back(std::move(nr));
  }
  // fresh rule bodies were lifted bottom-up before being moved out
  for (Rule& r : fresh_rules) out.rules.push_back(std::move(r));
  return out;
}

}  // namespace xtt
