#include "engine.hpp"

#include <algorithm>
#include <cassert>
#include <sstream>

namespace xtt {

Value eval_in(const EvalEnv& env, const XExpr& e, const Context& c) {
  if (env.project) return eval(e, project_input_only(c), env.mode);
  return eval(e, c, env.mode);
}

// ---------------------------------------------------------------------------
// Instantiation and activation

namespace {

std::unique_ptr<CfgNode> instantiate(const Statement& s) {
  auto n = std::make_unique<CfgNode>();
  n->kind = s.kind;
  n->name = s.name;
  n->expr = s.expr;
  n->mode = s.mode;
  n->body = instantiate_template(s.body);
  n->orelse = instantiate_template(s.orelse);
  for (auto& c : n->body) {
    c->parent = n.get();
    c->branch = 0;
  }
  for (auto& c : n->orelse) {
    c->parent = n.get();
    c->branch = 1;
  }
  return n;
}

void reindex(SiblingList& list, CfgNode* parent, int branch) {
  for (std::size_t i = 0; i < list.size(); ++i) {
    list[i]->parent = parent;
    list[i]->branch = branch;
    list[i]->index = static_cast<int>(i);
  }
}

void deactivate_all(CfgNode* n) {
  n->ctx.reset();
  for (auto& c : n->body) deactivate_all(c.get());
  for (auto& c : n->orelse) deactivate_all(c.get());
}

}  // namespace

SiblingList instantiate_template(const Template& m) {
  SiblingList out;
  out.reserve(m.size());
  for (const Statement& s : m) out.push_back(instantiate(s));
  reindex(out, nullptr, 0);
  return out;
}

namespace {

std::unique_ptr<CfgNode> clone_node(const CfgNode& n) {
  auto out = std::make_unique<CfgNode>();
  out->kind = n.kind;
  out->name = n.name;
  out->expr = n.expr;
  out->mode = n.mode;
  out->ctx = n.ctx;
  out->link = n.link;
  out->link_entry = n.link_entry;
  out->link_input = n.link_input;
  for (const auto& c : n.body) out->body.push_back(clone_node(*c));
  for (const auto& c : n.orelse) out->orelse.push_back(clone_node(*c));
  reindex(out->body, out.get(), 0);
  reindex(out->orelse, out.get(), 1);
  return out;
}

}  // namespace

SiblingList clone_nodes(const SiblingList& nodes) {
  SiblingList out;
  out.reserve(nodes.size());
  for (const auto& n : nodes) out.push_back(clone_node(*n));
  reindex(out, nullptr, 0);
  return out;
}

Configuration clone_config(const Configuration& cfg) {
  Configuration out;
  out.top = clone_nodes(cfg.top);
  return out;
}

void activate_range(SiblingList& list, std::size_t begin, std::size_t end,
                    const Context& c) {
  bool in_definition_scope = false;
  for (std::size_t i = begin; i < end && i < list.size(); ++i) {
    CfgNode* n = list[i].get();
    if (in_definition_scope || n->link != CfgNode::Link::None) {
      deactivate_all(n);
      continue;
    }
    switch (n->kind) {
      case StKind::Cons:
        n->ctx.reset();
        activate_range(n->body, 0, n->body.size(), c);
        break;
      case StKind::Foreach:
        n->ctx = c;
        for (auto& ch : n->body) deactivate_all(ch.get());
        break;
      case StKind::If:
        n->ctx = c;
        activate_range(n->body, 0, n->body.size(), c);
        activate_range(n->orelse, 0, n->orelse.size(), c);
        break;
      case StKind::Val:
        n->ctx = c;
        in_definition_scope = true;
        break;
      case StKind::Tree:
        n->ctx = c;
        activate_range(n->body, 0, n->body.size(), c);
        in_definition_scope = true;
        break;
      default:  // apply, call, vcopy, tcopy
        n->ctx = c;
        break;
    }
  }
}

Configuration init_config(const Template& m, const Context& c) {
  Configuration cfg;
  cfg.top = instantiate_template(m);
  activate_range(cfg.top, 0, cfg.top.size(), c);
  return cfg;
}

// ---------------------------------------------------------------------------
// Splicing

namespace {

struct ListRef {
  Configuration* cfg;
  CfgNode* parent;
  int branch;
  SiblingList& list() const {
    if (!parent) return cfg->top;
    return branch == 1 ? parent->orelse : parent->body;
  }
};

ListRef list_of(Configuration& cfg, CfgNode* n) {
  return ListRef{&cfg, n->parent, n->branch};
}

}  // namespace

SiblingList& sibling_list_of(Configuration& cfg, CfgNode* n) {
  return list_of(cfg, n).list();
}

void splice_replace(Configuration& cfg, CfgNode* at, std::size_t count,
                    SiblingList replacement) {
  ListRef ref = list_of(cfg, at);
  SiblingList& list = ref.list();
  std::size_t pos = static_cast<std::size_t>(at->index);
  assert(pos < list.size() && list[pos].get() == at);
  list.erase(list.begin() + static_cast<std::ptrdiff_t>(pos),
             list.begin() + static_cast<std::ptrdiff_t>(pos + count));
  for (auto& n : replacement)
    list.insert(list.begin() + static_cast<std::ptrdiff_t>(pos++), std::move(n));
  reindex(list, ref.parent, ref.branch);
}

std::string path_of(const CfgNode* n) {
  std::vector<std::string> parts;
  for (const CfgNode* cur = n; cur; cur = cur->parent) {
    std::string part = std::to_string(cur->index);
    if (cur->branch == 1) part = "e" + part;
    parts.push_back(part);
  }
  std::string out;
  for (auto it = parts.rbegin(); it != parts.rend(); ++it) {
    if (!out.empty()) out += '.';
    out += *it;
  }
  return out;
}

namespace {

bool subtree_has_active(const CfgNode* n) {
  if (n->active()) return true;
  for (const auto& c : n->body)
    if (subtree_has_active(c.get())) return true;
  for (const auto& c : n->orelse)
    if (subtree_has_active(c.get())) return true;
  return false;
}

}  // namespace

// A sibling counts as active here when any statement in its subtree is:
// cons wrappers are never active themselves, yet a half-rewritten sibling
// hiding active statements under a cons must not be re-initialized.
std::pair<std::size_t, std::size_t> update_span(Configuration& cfg, const CfgNode* s) {
  const SiblingList& list = sibling_list_of(cfg, const_cast<CfgNode*>(s));
  std::size_t begin = static_cast<std::size_t>(s->index) + 1;
  std::size_t end = begin;
  while (end < list.size() && !subtree_has_active(list[end].get())) ++end;
  return {begin, end};
}

// ---------------------------------------------------------------------------
// Walks

namespace {

void collect_active(SiblingList& list, std::vector<CfgNode*>& out, bool ifs_only) {
  for (auto& n : list) {
    if (n->active() && (!ifs_only || n->kind == StKind::If)) out.push_back(n.get());
    collect_active(n->body, out, ifs_only);
    collect_active(n->orelse, out, ifs_only);
  }
}

}  // namespace

std::vector<CfgNode*> active_statements(Configuration& cfg) {
  std::vector<CfgNode*> out;
  collect_active(cfg.top, out, false);
  return out;
}

std::vector<CfgNode*> active_ifs(Configuration& cfg) {
  std::vector<CfgNode*> out;
  collect_active(cfg.top, out, true);
  return out;
}

// ---------------------------------------------------------------------------
// If resolution

void fire_if(Configuration& cfg, CfgNode* s, const EvalEnv& env) {
  assert(s->kind == StKind::If && s->active());
  Context c = *s->ctx;
  Value v;
  try {
    v = eval_in(env, *s->expr, c);
  } catch (const EvalUndefined& e) {
    throw RunError(path_of(s), e.what());
  }
  SiblingList branch = std::move(v.empty() ? s->orelse : s->body);
  activate_range(branch, 0, branch.size(), c);
  splice_replace(cfg, s, 1, std::move(branch));
}

void if_normalize(Configuration& cfg, const EvalEnv& env) {
  for (;;) {
    auto ifs = active_ifs(cfg);
    if (ifs.empty()) return;
    fire_if(cfg, ifs.front(), env);
  }
}

// ---------------------------------------------------------------------------
// Rule selection

namespace {

const Template& fallback_template() {
  static const Template t = [] {
    Statement s{};
    s.kind = StKind::Apply;
    s.expr = make_expr(XKind::Child);
    return Template{std::move(s)};
  }();
  return t;
}

}  // namespace

RuleChoice select_rule(const Program& p, const Context& c, const TreeNode* n,
                       const std::optional<std::string>& mode, const EvalEnv& env) {
  for (const Rule& r : p.rules) {
    if (r.mode != mode) continue;
    Value m = eval_in(env, *r.match, c);
    for (const Item& it : m.items)
      if (is_node(it) && as_node(it) == n) return {&r.body, r.name};
  }
  return {&fallback_template(), std::nullopt};
}

// ---------------------------------------------------------------------------
// Terminal templates and forests

bool is_literal(const SiblingList& list, bool allow_links) {
  for (const auto& n : list) {
    if (n->link != CfgNode::Link::None) {
      if (!allow_links) return false;
      continue;
    }
    if (n->kind != StKind::Cons) return false;
    if (!is_literal(n->body, allow_links)) return false;
  }
  return true;
}

namespace {

void denote_rec(const SiblingList& list, TreeBuilder& b, TreeNode* parent) {
  for (const auto& n : list) {
    assert(n->kind == StKind::Cons && n->link == CfgNode::Link::None);
    TreeNode* t = b.add_node(n->name, parent);
    denote_rec(n->body, b, t);
  }
}

}  // namespace

Forest denote_forest(const SiblingList& list) {
  Forest out;
  for (const auto& n : list) {
    TreeBuilder b;
    TreeNode* t = b.add_node(n->name, nullptr);
    denote_rec(n->body, b, t);
    out.push_back(b.finish());
  }
  return out;
}

namespace {

std::unique_ptr<CfgNode> literal_of(const TreeNode* t) {
  auto n = std::make_unique<CfgNode>();
  n->kind = StKind::Cons;
  n->name = t->label;
  for (const TreeNode* c : t->children) n->body.push_back(literal_of(c));
  reindex(n->body, n.get(), 0);
  return n;
}

}  // namespace

SiblingList literal_template(const std::vector<const TreeNode*>& roots) {
  SiblingList out;
  for (const TreeNode* r : roots) out.push_back(literal_of(r));
  reindex(out, nullptr, 0);
  return out;
}

bool is_enabled(const CfgNode* s) {
  if (!s->active()) return false;
  if (s->kind == StKind::Tree) return is_literal(s->body);
  return true;
}

// ---------------------------------------------------------------------------
// Stepping

namespace {

Value eval_or_rethrow(const EvalEnv& env, const XExpr& e, const Context& c,
                      const CfgNode* s) {
  try {
    return eval_in(env, e, c);
  } catch (const EvalUndefined& err) {
    throw RunError(path_of(s), err.what());
  } catch (const std::invalid_argument& err) {
    throw RunError(path_of(s), err.what());
  }
}

std::vector<const TreeNode*> node_sequence(const Value& v, const CfgNode* s,
                                           const char* what) {
  std::vector<const TreeNode*> out;
  out.reserve(v.size());
  for (const Item& it : v.items) {
    if (!is_node(it))
      throw RunError(path_of(s), std::string(what) + " selected a counter");
    out.push_back(as_node(it));
  }
  return out;
}

// Re-activates s's update span under c and removes s.
void consume_definition(Configuration& cfg, CfgNode* s, const Context& c) {
  auto [begin, end] = update_span(cfg, s);
  activate_range(sibling_list_of(cfg, s), begin, end, c);
  splice_replace(cfg, s, 1, {});
}

}  // namespace

void step(Configuration& cfg, CfgNode* s, const Program& p, const EvalEnv& env) {
  assert(s->active());
  Context c = *s->ctx;
  switch (s->kind) {
    case StKind::Apply: {
      Value v = eval_or_rethrow(env, *s->expr, c, s);
      auto nodes = node_sequence(v, s, "apply");
      Counter k = static_cast<Counter>(nodes.size());
      SiblingList out;
      for (Counter i = 0; i < k; ++i) {
        RuleChoice rc;
        try {
          rc = select_rule(p, c, nodes[static_cast<std::size_t>(i)], s->mode, env);
        } catch (const EvalUndefined& err) {
          throw RunError(path_of(s), std::string("match: ") + err.what());
        }
        SiblingList inst = instantiate_template(*rc.body);
        Context ci = with_triple(c, Item{nodes[static_cast<std::size_t>(i)]},
                                 i + 1, k);
        activate_range(inst, 0, inst.size(), ci);
        for (auto& n : inst) out.push_back(std::move(n));
      }
      splice_replace(cfg, s, 1, std::move(out));
      break;
    }
    case StKind::Foreach: {
      Value v = eval_or_rethrow(env, *s->expr, c, s);
      Counter k = static_cast<Counter>(v.size());
      SiblingList out;
      for (Counter i = 0; i < k; ++i) {
        SiblingList inst = clone_nodes(s->body);
        Context ci = with_triple(c, v.items[static_cast<std::size_t>(i)], i + 1, k);
        activate_range(inst, 0, inst.size(), ci);
        for (auto& n : inst) out.push_back(std::move(n));
      }
      splice_replace(cfg, s, 1, std::move(out));
      break;
    }
    case StKind::Call: {
      const Rule* r = p.rule_named(s->name);
      if (!r) throw RunError(path_of(s), "call target " + s->name + " names no rule");
      SiblingList inst = instantiate_template(r->body);
      activate_range(inst, 0, inst.size(), c);
      splice_replace(cfg, s, 1, std::move(inst));
      break;
    }
    case StKind::Val: {
      Value v = eval_or_rethrow(env, *s->expr, c, s);
      consume_definition(cfg, s, with_value(c, s->name, std::move(v)));
      break;
    }
    case StKind::Tree: {
      if (!is_literal(s->body))
        throw RunError(path_of(s), "tree statement fired before its body was terminal");
      Tree t = maketree(denote_forest(s->body));
      consume_definition(cfg, s, with_tree(c, s->name, TreeRef(std::move(t))));
      break;
    }
    case StKind::Vcopy: {
      Value v = eval_or_rethrow(env, *s->expr, c, s);
      auto nodes = node_sequence(v, s, "vcopy");
      splice_replace(cfg, s, 1, literal_template(nodes));
      break;
    }
    case StKind::Tcopy: {
      const Store::Binding* b = c.store.find(s->name);
      if (!b) throw RunError(path_of(s), "tree variable " + s->name + " is not defined");
      auto* t = std::get_if<TreeRef>(&b->target);
      if (!t)
        throw RunError(path_of(s), "tree variable " + s->name + " is not materialized");
      std::vector<const TreeNode*> tops((*t)->root()->children.begin(),
                                        (*t)->root()->children.end());
      splice_replace(cfg, s, 1, literal_template(tops));
      break;
    }
    case StKind::If:
    case StKind::Cons:
      throw std::logic_error("statement kind cannot be stepped");
  }
  if_normalize(cfg, env);
}

// ---------------------------------------------------------------------------
// Canonical serialization

namespace {

void canon_item(const Item& it, const Context& c, std::string& out) {
  if (is_node(it)) {
    const TreeNode* n = as_node(it);
    std::size_t ti = c.store.tree_index_of(n);
    if (ti == static_cast<std::size_t>(-1))
      out += "stale";
    else
      out += "b" + std::to_string(ti) + "#" + std::to_string(n->preorder);
  } else {
    out += "c" + std::to_string(as_counter(it));
  }
}

void canon_context(const Context& c, std::string& out) {
  out += "S[";
  for (const auto& b : c.store.bindings()) {
    out += b.var + "=";
    if (auto* t = std::get_if<TreeRef>(&b.target))
      out += tree_to_string(**t);
    else {
      const auto& r = std::get<DagRef>(b.target);
      out += "@" + r.rule + "@" + std::to_string(r.ctx);
    }
    out += ";";
  }
  out += "]E[";
  for (const auto& [var, val] : c.env) {
    out += var + "=";
    for (const Item& it : val.items) {
      canon_item(it, c, out);
      out += ",";
    }
    out += ";";
  }
  out += "]c(";
  canon_item(c.item, c, out);
  out += "," + std::to_string(c.position) + "," + std::to_string(c.size) + ")";
}

void canon_nodes(const SiblingList& list, std::string& out) {
  for (const auto& n : list) {
    out += std::to_string(static_cast<int>(n->kind));
    out += "|" + n->name;
    if (n->mode) out += "|m:" + *n->mode;
    if (n->expr) out += "|" + expr_to_string(*n->expr);
    if (n->link == CfgNode::Link::Entry)
      out += "|@" + n->link_entry.rule + "@" + std::to_string(n->link_entry.ctx);
    if (n->link == CfgNode::Link::Input)
      out += "|@input:n" + std::to_string(n->link_input->preorder);
    if (n->active()) {
      out += "|A";
      canon_context(*n->ctx, out);
    }
    out += "{";
    canon_nodes(n->body, out);
    out += "}{";
    canon_nodes(n->orelse, out);
    out += "}";
  }
}

}  // namespace

std::string canonical_config(const Configuration& cfg) {
  std::string out;
  canon_nodes(cfg.top, out);
  return out;
}

// ---------------------------------------------------------------------------
// Driver

Configuration initial_configuration(TreeRef input) {
  Statement s{};
  s.kind = StKind::Apply;
  s.expr = make_expr(XKind::Root);
  return init_config(Template{std::move(s)}, initial_context(std::move(input)));
}

namespace {

std::string triple_summary(const Context& c) {
  std::string out = "(";
  canon_item(c.item, c, out);
  if (is_node(c.item)) out += ":" + as_node(c.item)->label;
  out += "," + std::to_string(c.position) + "," + std::to_string(c.size) + ")";
  return out;
}

// names of the rules an apply statement would select, for tracing
std::string selected_rules(const Program& p, const CfgNode* s, const EvalEnv& env) {
  std::string out;
  try {
    Value v = eval_in(env, *s->expr, *s->ctx);
    for (const Item& it : v.items) {
      if (!is_node(it)) return out;
      RuleChoice rc = select_rule(p, *s->ctx, as_node(it), s->mode, env);
      if (!out.empty()) out += ',';
      out += rc.rule.value_or("(child recursion)");
    }
  } catch (const EvalUndefined&) {
  }
  return out;
}

}  // namespace

RunOutcome run(const Program& p, TreeRef input, const Strategy& strategy,
               std::uint64_t max_steps, TraceFn trace) {
  EvalEnv env{eval_mode_for(p), false};
  RunOutcome out{RunOutcome::Kind::Final, nullptr, 0, "", ""};
  Configuration cfg = initial_configuration(std::move(input));
  std::mt19937_64 rng(strategy.seed);
  try {
    if_normalize(cfg, env);
    for (;;) {
      std::vector<CfgNode*> enabled;
      for (CfgNode* s : active_statements(cfg))
        if (is_enabled(s)) enabled.push_back(s);
      if (enabled.empty()) {
        assert(is_literal(cfg.top));
        out.tree = maketree(denote_forest(cfg.top));
        return out;
      }
      if (out.steps >= max_steps) {
        out.kind = RunOutcome::Kind::StepLimit;
        return out;
      }
      std::size_t pick = 0;
      switch (strategy.kind) {
        case Strategy::Kind::Leftmost:
          pick = 0;
          break;
        case Strategy::Kind::Random:
          pick = std::uniform_int_distribution<std::size_t>(0, enabled.size() - 1)(rng);
          break;
        case Strategy::Kind::Script:
          pick = out.steps < strategy.script.size()
                     ? strategy.script[out.steps] % enabled.size()
                     : 0;
          break;
      }
      CfgNode* s = enabled[pick];
      if (trace) {
        StepTrace t{out.steps, s->kind, path_of(s), "", triple_summary(*s->ctx)};
        if (s->kind == StKind::Call) t.rule = s->name;
        if (s->kind == StKind::Apply) t.rule = selected_rules(p, s, env);
        trace(t);
      }
      step(cfg, s, p, env);
      ++out.steps;
    }
  } catch (const RunError& e) {
    out.kind = RunOutcome::Kind::Error;
    out.error = e.what();
    out.error_path = e.path();
    return out;
  } catch (const EvalUndefined& e) {
    out.kind = RunOutcome::Kind::Error;
    out.error = e.what();
    return out;
  }
}

ConfluenceReport fuzz_confluence(const Program& p, TreeRef input,
                                 const std::vector<std::uint64_t>& seeds,
                                 std::uint64_t max_steps) {
  ConfluenceReport report;
  for (std::uint64_t seed : seeds) {
    RunOutcome o = run(p, input, Strategy::random(seed), max_steps);
    ConfluenceReport::SeedRun sr{seed, o.kind,
                                 o.tree ? tree_to_string(*o.tree) : "", o.steps};
    report.runs.push_back(std::move(sr));
  }
  for (std::size_t i = 1; i < report.runs.size(); ++i) {
    const auto &a = report.runs[0], &b = report.runs[i];
    if (a.kind != b.kind) {
      report.confluent = false;
      report.detail = "termination status differs between seeds " +
                      std::to_string(a.seed) + " and " + std::to_string(b.seed);
      break;
    }
    if (a.kind == RunOutcome::Kind::Final && a.tree != b.tree) {
      report.confluent = false;
      report.detail = "results differ between seeds " + std::to_string(a.seed) +
                      " and " + std::to_string(b.seed);
      break;
    }
  }
  return report;
}

}  // namespace xtt
