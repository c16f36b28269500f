#include "dag.hpp"

#include <algorithm>
#include <cassert>
#include <deque>
#include <map>
#include <set>
#include <sstream>

namespace xtt {

namespace {

constexpr std::size_t kNone = static_cast<std::size_t>(-1);

std::string canonical_item(const Item& it) {
  if (is_node(it)) {
    const TreeNode* n = as_node(it);
    // DAG-mode values hold input nodes only; preorder is a stable name.
    return "n" + std::to_string(n->preorder);
  }
  return "c" + std::to_string(as_counter(it));
}

std::string env_triple_key(const Context& c) {
  std::string key = "E[";
  for (const auto& [var, val] : c.env) {
    key += var + "=";
    for (const Item& it : val.items) key += canonical_item(it) + ",";
    key += ";";
  }
  key += "]c(" + canonical_item(c.item) + "," + std::to_string(c.position) + "," +
         std::to_string(c.size) + ")";
  return key;
}

std::string store_key(const Context& c) {
  std::string key = "S[";
  for (const auto& b : c.store.bindings()) {
    if (b.var == "Input") continue;
    key += b.var + "=";
    if (auto* r = std::get_if<DagRef>(&b.target))
      key += "@" + r->rule + "@" + std::to_string(r->ctx);
    else
      key += "<tree>";  // materialized temporaries never occur in DAG mode
    key += ";";
  }
  return key + "]";
}

std::unique_ptr<CfgNode> make_entry_link(DagRef ref) {
  auto n = std::make_unique<CfgNode>();
  n->kind = StKind::Cons;
  n->link = CfgNode::Link::Entry;
  n->link_entry = std::move(ref);
  return n;
}

std::unique_ptr<CfgNode> make_input_link(const TreeNode* node) {
  auto n = std::make_unique<CfgNode>();
  n->kind = StKind::Cons;
  n->link = CfgNode::Link::Input;
  n->link_input = node;
  return n;
}

struct CycleFound {
  std::vector<DagRef> witness;
  std::vector<std::string> projections;
};

class DagBuilder {
 public:
  DagBuilder(const Program& lifted, TreeRef input, const DagLimits& limits)
      : p_(lifted), input_(std::move(input)), limits_(limits) {
    root_rule_ = fresh_rule_name("__root");
    default_rule_ = fresh_rule_name("__default");
  }

  DagOutcome build() {
    DagOutcome out;
    try {
      Template start;
      {
        Statement s{};
        s.kind = StKind::Apply;
        s.expr = make_expr(XKind::Root);
        start.push_back(std::move(s));
      }
      ensure_entry(root_rule_, start, initial_context(input_));
      while (!pending_.empty()) {
        std::size_t idx = pending_.front();
        pending_.pop_front();
        expand(idx);
      }
    } catch (const CycleFound& c) {
      out.kind = DagOutcome::Kind::Nontermination;
      out.witness = c.witness;
      out.witness_projections = c.projections;
      return out;
    } catch (const RunError& e) {
      out.kind = DagOutcome::Kind::Error;
      out.error = e.what();
      return out;
    } catch (const BudgetExceeded& e) {
      out.kind = DagOutcome::Kind::Budget;
      out.error = e.what();
      return out;
    }
    out.kind = DagOutcome::Kind::Completed;
    out.dag.input = input_;
    out.dag.interned_contexts = ctx_ids_.size();
    for (Working& w : entries_) {
      DagEntry e;
      e.rule = w.rule;
      e.ctx = w.ctx;
      e.forest = finalize_forest(w.cfg.top);
      e.out_edges.assign(w.out.begin(), w.out.end());
      out.dag.entries.push_back(std::move(e));
    }
    return out;
  }

 private:
  struct BudgetExceeded : std::runtime_error {
    using std::runtime_error::runtime_error;
  };

  struct Working {
    std::string rule;
    std::uint64_t ctx;
    std::string group;       // rule + (env, triple) projection
    std::string projection;  // (env, triple) part alone
    Configuration cfg;
    std::set<std::size_t> out, in;
  };

  std::string fresh_rule_name(std::string base) {
    while (p_.rule_named(base)) base += "_";
    return base;
  }

  std::uint64_t intern(const Context& c) {
    std::string key = store_key(c) + env_triple_key(c);
    auto [it, fresh] = ctx_ids_.emplace(std::move(key), ctx_ids_.size());
    return it->second;
  }

  std::size_t ensure_entry(const std::string& rule, const Template& body,
                           const Context& ctx) {
    std::uint64_t id = intern(ctx);
    auto key = std::make_pair(rule, id);
    auto it = index_.find(key);
    if (it != index_.end()) return it->second;
    if (entries_.size() >= limits_.max_entries)
      throw BudgetExceeded("entry budget exhausted (" +
                           std::to_string(limits_.max_entries) + ")");
    Working w;
    w.rule = rule;
    w.ctx = id;
    w.projection = env_triple_key(ctx);
    w.group = rule + "\x1f" + w.projection;
    w.cfg = init_config(body, ctx);
    if_normalize(w.cfg, env_);
    std::size_t idx = entries_.size();
    entries_.push_back(std::move(w));
    index_.emplace(key, idx);
    groups_[entries_[idx].group].push_back(idx);
    pending_.push_back(idx);
    return idx;
  }

  DagRef ref_of(std::size_t idx) const {
    return DagRef{entries_[idx].rule, entries_[idx].ctx};
  }

  void add_edge(std::size_t from, std::size_t to) {
    if (entries_[from].out.insert(to).second) entries_[to].in.insert(from);
    check_cycle(from, to);
  }

  // Nontermination condition: a link path between two entries of the same
  // rule whose contexts agree in their (env, triple) parts. The new edge
  // from->to is the only candidate for completing such a path.
  void check_cycle(std::size_t from, std::size_t to) {
    std::map<std::size_t, std::size_t> toward_from;  // x -> next hop towards `from`
    {
      std::deque<std::size_t> q{from};
      toward_from[from] = kNone;
      while (!q.empty()) {
        std::size_t cur = q.front();
        q.pop_front();
        for (std::size_t prev : entries_[cur].in)
          if (toward_from.emplace(prev, cur).second) q.push_back(prev);
      }
    }
    std::map<std::size_t, std::size_t> back_to;  // w -> previous hop from `to`
    {
      std::deque<std::size_t> q{to};
      back_to[to] = kNone;
      while (!q.empty()) {
        std::size_t cur = q.front();
        q.pop_front();
        for (std::size_t next : entries_[cur].out)
          if (back_to.emplace(next, cur).second) q.push_back(next);
      }
    }
    for (const auto& [x, hop] : toward_from) {
      for (std::size_t w : groups_[entries_[x].group]) {
        auto wit = back_to.find(w);
        if (wit == back_to.end()) continue;
        std::vector<std::size_t> chain;
        for (std::size_t cur = x; cur != kNone; cur = toward_from[cur])
          chain.push_back(cur);
        std::vector<std::size_t> tail;
        for (std::size_t cur = w; cur != kNone; cur = back_to[cur])
          tail.push_back(cur);
        chain.insert(chain.end(), tail.rbegin(), tail.rend());
        CycleFound found;
        for (std::size_t cur : chain) {
          found.witness.push_back(ref_of(cur));
          found.projections.push_back(entries_[cur].projection);
        }
        throw found;
      }
    }
  }

  CfgNode* leftmost_enabled(Configuration& cfg) {
    for (CfgNode* s : active_statements(cfg)) {
      if (s->kind == StKind::Tree) {
        if (s->body.size() == 1 && s->body[0]->link == CfgNode::Link::Entry)
          return s;
        continue;
      }
      return s;
    }
    return nullptr;
  }

  void expand(std::size_t idx) {
    for (;;) {
      Configuration& cfg = entries_[idx].cfg;
      CfgNode* s = leftmost_enabled(cfg);
      if (!s) {
        if (!is_literal(cfg.top, /*allow_links=*/true))
          throw RunError("-", "entry for " + entries_[idx].rule +
                                  " stalled before full development");
        return;
      }
      if (++steps_used_ > limits_.max_steps)
        throw BudgetExceeded("step budget exhausted (" +
                             std::to_string(limits_.max_steps) + ")");
      dag_step(idx, cfg, s);
      if_normalize(entries_[idx].cfg, env_);
    }
  }

  void dag_step(std::size_t idx, Configuration& cfg, CfgNode* s) {
    Context c = *s->ctx;
    switch (s->kind) {
      case StKind::Apply: {
        Value v = eval_checked(*s->expr, c, s);
        Counter k = static_cast<Counter>(v.size());
        SiblingList links;
        for (Counter i = 0; i < k; ++i) {
          const Item& it = v.items[static_cast<std::size_t>(i)];
          if (!is_node(it)) throw RunError(path_of(s), "apply selected a counter");
          const TreeNode* n = as_node(it);
          RuleChoice rc;
          try {
            rc = select_rule(p_, c, n, s->mode, env_);
          } catch (const EvalUndefined& err) {
            throw RunError(path_of(s), std::string("match: ") + err.what());
          } catch (const std::invalid_argument& err) {
            throw RunError(path_of(s), err.what());
          }
          std::string rule = rc.rule.value_or(default_rule_);
          Context ci = with_triple(c, Item{n}, i + 1, k);
          std::size_t target = ensure_entry(rule, *rc.body, ci);
          links.push_back(make_entry_link(ref_of(target)));
          add_edge(idx, target);
        }
        splice_replace(cfg, s, 1, std::move(links));
        break;
      }
      case StKind::Foreach: {
        if (s->body.size() != 1 || s->body[0]->kind != StKind::Call)
          throw RunError(path_of(s), "foreach body is not a single call");
        std::string rule = s->body[0]->name;
        const Rule* r = p_.rule_named(rule);
        if (!r) throw RunError(path_of(s), "call target " + rule + " names no rule");
        Value v = eval_checked(*s->expr, c, s);
        Counter k = static_cast<Counter>(v.size());
        SiblingList links;
        for (Counter i = 0; i < k; ++i) {
          Context ci =
              with_triple(c, v.items[static_cast<std::size_t>(i)], i + 1, k);
          std::size_t target = ensure_entry(rule, r->body, ci);
          links.push_back(make_entry_link(ref_of(target)));
          add_edge(idx, target);
        }
        splice_replace(cfg, s, 1, std::move(links));
        break;
      }
      case StKind::Call: {
        const Rule* r = p_.rule_named(s->name);
        if (!r) throw RunError(path_of(s), "call target " + s->name + " names no rule");
        std::size_t target = ensure_entry(s->name, r->body, c);
        SiblingList links;
        links.push_back(make_entry_link(ref_of(target)));
        add_edge(idx, target);
        splice_replace(cfg, s, 1, std::move(links));
        break;
      }
      case StKind::Val: {
        Value v = eval_checked(*s->expr, c, s);
        Context updated = with_value(c, s->name, std::move(v));
        auto [begin, end] = update_span(cfg, s);
        activate_range(sibling_list_of(cfg, s), begin, end, updated);
        splice_replace(cfg, s, 1, {});
        break;
      }
      case StKind::Tree: {
        DagRef bound = s->body[0]->link_entry;
        Context updated = with_tree(c, s->name, bound);
        auto [begin, end] = update_span(cfg, s);
        activate_range(sibling_list_of(cfg, s), begin, end, updated);
        splice_replace(cfg, s, 1, {});
        break;
      }
      case StKind::Vcopy: {
        Value v = eval_checked(*s->expr, c, s);
        SiblingList links;
        for (const Item& it : v.items) {
          if (!is_node(it)) throw RunError(path_of(s), "vcopy selected a counter");
          links.push_back(make_input_link(as_node(it)));
        }
        splice_replace(cfg, s, 1, std::move(links));
        break;
      }
      case StKind::Tcopy: {
        const Store::Binding* b = c.store.find(s->name);
        if (!b)
          throw RunError(path_of(s), "tree variable " + s->name + " is not defined");
        SiblingList links;
        if (auto* r = std::get_if<DagRef>(&b->target)) {
          auto it = index_.find(std::make_pair(r->rule, r->ctx));
          assert(it != index_.end());
          links.push_back(make_entry_link(*r));
          add_edge(idx, it->second);
        } else {
          // only the input tree is ever materialized here
          const TreeRef& t = std::get<TreeRef>(b->target);
          for (const TreeNode* top : t->root()->children)
            links.push_back(make_input_link(top));
        }
        splice_replace(cfg, s, 1, std::move(links));
        break;
      }
      case StKind::If:
      case StKind::Cons:
        throw std::logic_error("statement kind cannot be stepped");
    }
  }

  Value eval_checked(const XExpr& e, const Context& c, const CfgNode* s) {
    try {
      return eval_in(env_, e, c);
    } catch (const EvalUndefined& err) {
      throw RunError(path_of(s), err.what());
    } catch (const std::invalid_argument& err) {
      throw RunError(path_of(s), err.what());
    }
  }

  DagForest finalize_forest(const SiblingList& list) {
    DagForest out;
    for (const auto& n : list) {
      DagItem item;
      if (n->link == CfgNode::Link::Entry) {
        item.kind = DagItem::Kind::Entry;
        item.ref = n->link_entry;
      } else if (n->link == CfgNode::Link::Input) {
        item.kind = DagItem::Kind::Input;
        item.input_preorder = n->link_input->preorder;
      } else {
        item.kind = DagItem::Kind::Label;
        item.label = n->name;
        item.children = finalize_forest(n->body);
      }
      out.push_back(std::move(item));
    }
    return out;
  }

  const Program& p_;
  TreeRef input_;
  DagLimits limits_;
  EvalEnv env_{EvalMode::V1, true};
  std::string root_rule_, default_rule_;

  std::map<std::string, std::uint64_t> ctx_ids_;
  std::deque<Working> entries_;
  std::map<std::pair<std::string, std::uint64_t>, std::size_t> index_;
  std::map<std::string, std::vector<std::size_t>> groups_;
  std::deque<std::size_t> pending_;
  std::uint64_t steps_used_ = 0;
};

}  // namespace

DagOutcome evaluate_dag(const Program& p, TreeRef input, const DagLimits& limits) {
  if (classify_version(p) != Version::V1Program) {
    DagOutcome out;
    out.kind = DagOutcome::Kind::Error;
    out.error = "program is not a 1.0 program";
    return out;
  }
  Program lifted = lift_bodies(p);
  DagBuilder builder(lifted, std::move(input), limits);
  return builder.build();
}

// ---------------------------------------------------------------------------
// Unfolding and stats

namespace {

std::map<std::pair<std::string, std::uint64_t>, std::size_t> entry_index(const Dag& dag) {
  std::map<std::pair<std::string, std::uint64_t>, std::size_t> idx;
  for (std::size_t i = 0; i < dag.entries.size(); ++i)
    idx.emplace(std::make_pair(dag.entries[i].rule, dag.entries[i].ctx), i);
  return idx;
}

}  // namespace

Tree unfold(const Dag& dag, std::uint64_t max_nodes) {
  auto idx = entry_index(dag);
  TreeBuilder b;
  TreeNode* doc = b.add_node("doc", nullptr);
  std::uint64_t count = 1;

  struct Work {
    enum class Kind { Item, InputNode } kind;
    const DagItem* item = nullptr;
    const TreeNode* input = nullptr;
    TreeNode* parent = nullptr;
  };
  std::vector<Work> stack;
  auto push_forest = [&](const DagForest& f, TreeNode* parent) {
    for (auto it = f.rbegin(); it != f.rend(); ++it)
      stack.push_back({Work::Kind::Item, &*it, nullptr, parent});
  };
  if (!dag.entries.empty()) push_forest(dag.entries[0].forest, doc);

  while (!stack.empty()) {
    Work w = stack.back();
    stack.pop_back();
    if (w.kind == Work::Kind::InputNode) {
      if (++count > max_nodes) throw UnfoldLimit(max_nodes);
      TreeNode* n = b.add_node(w.input->label, w.parent);
      for (auto it = w.input->children.rbegin(); it != w.input->children.rend(); ++it)
        stack.push_back({Work::Kind::InputNode, nullptr, *it, n});
      continue;
    }
    const DagItem& item = *w.item;
    switch (item.kind) {
      case DagItem::Kind::Label: {
        if (++count > max_nodes) throw UnfoldLimit(max_nodes);
        TreeNode* n = b.add_node(item.label, w.parent);
        push_forest(item.children, n);
        break;
      }
      case DagItem::Kind::Entry: {
        auto it = idx.find(std::make_pair(item.ref.rule, item.ref.ctx));
        if (it == idx.end())
          throw std::runtime_error("dangling entry link @" + item.ref.rule + "@" +
                                   std::to_string(item.ref.ctx));
        push_forest(dag.entries[it->second].forest, w.parent);
        break;
      }
      case DagItem::Kind::Input: {
        stack.push_back({Work::Kind::InputNode, nullptr,
                         dag.input->node_at(item.input_preorder), w.parent});
        break;
      }
    }
  }
  return b.finish();
}

namespace {

struct SizePair {
  mpz_class nodes, leaves;
};

void add_input_sizes(const TreeNode* n, SizePair& acc) {
  acc.nodes += static_cast<unsigned long>(subtree_size(n));
  std::vector<const TreeNode*> stack{n};
  while (!stack.empty()) {
    const TreeNode* cur = stack.back();
    stack.pop_back();
    if (cur->is_leaf()) acc.leaves += 1;
    for (const TreeNode* c : cur->children) stack.push_back(c);
  }
}

}  // namespace

DagStats dag_stats(const Dag& dag) {
  DagStats stats;
  stats.entries = dag.entries.size();
  stats.interned_contexts = dag.interned_contexts;
  auto idx = entry_index(dag);

  // sizes per entry, computed in dependency order (the dag is acyclic)
  std::vector<SizePair> memo(dag.entries.size());
  std::vector<int> state(dag.entries.size(), 0);  // 0 new, 1 open, 2 done

  std::function<void(const DagForest&, SizePair&)> sum_forest;
  std::function<void(std::size_t)> visit = [&](std::size_t e) {
    if (state[e] == 2) return;
    if (state[e] == 1) throw std::runtime_error("dag has a link cycle");
    state[e] = 1;
    for (std::size_t dep : dag.entries[e].out_edges) visit(dep);
    SizePair acc;
    sum_forest(dag.entries[e].forest, acc);
    memo[e] = acc;
    state[e] = 2;
  };
  sum_forest = [&](const DagForest& f, SizePair& acc) {
    for (const DagItem& item : f) {
      switch (item.kind) {
        case DagItem::Kind::Label: {
          acc.nodes += 1;
          if (item.children.empty())
            acc.leaves += 1;
          else
            sum_forest(item.children, acc);
          break;
        }
        case DagItem::Kind::Entry: {
          stats.links += 1;
          auto it = idx.find(std::make_pair(item.ref.rule, item.ref.ctx));
          if (it == idx.end())
            throw std::runtime_error("dangling entry link in dag");
          visit(it->second);
          acc.nodes += memo[it->second].nodes;
          acc.leaves += memo[it->second].leaves;
          break;
        }
        case DagItem::Kind::Input: {
          stats.links += 1;
          add_input_sizes(dag.input->node_at(item.input_preorder), acc);
          break;
        }
      }
    }
  };

  SizePair root;
  if (!dag.entries.empty()) {
    visit(0);
    root = memo[0];
  }
  stats.unfolded_nodes = root.nodes + 1;  // the doc root
  stats.unfolded_leaves = root.nodes == 0 ? mpz_class(1) : root.leaves;
  return stats;
}

// ---------------------------------------------------------------------------
// Dump format

namespace {

void print_forest(const DagForest& f, std::string& out) {
  bool first = true;
  for (const DagItem& item : f) {
    if (!first) out += ' ';
    first = false;
    switch (item.kind) {
      case DagItem::Kind::Label:
        out += item.label + "{";
        print_forest(item.children, out);
        out += "}";
        break;
      case DagItem::Kind::Entry:
        out += "@" + item.ref.rule + "@" + std::to_string(item.ref.ctx);
        break;
      case DagItem::Kind::Input:
        out += "@input:n" + std::to_string(item.input_preorder);
        break;
    }
  }
}

}  // namespace

std::string dag_to_string(const Dag& dag) {
  std::string out = "dag-v1\n";
  out += "input-nodes " + std::to_string(dag.input ? dag.input->node_count() : 0) + "\n";
  out += "contexts " + std::to_string(dag.interned_contexts) + "\n";
  if (!dag.entries.empty())
    out += "root " + dag.entries[0].rule + "@" + std::to_string(dag.entries[0].ctx) + "\n";
  for (const DagEntry& e : dag.entries) {
    out += "entry " + e.rule + "@" + std::to_string(e.ctx) + ":";
    std::string body;
    print_forest(e.forest, body);
    if (!body.empty()) out += " " + body;
    out += "\n";
  }
  return out;
}

namespace {

struct DagScanner {
  std::string_view text;
  std::size_t pos = 0;

  void skip_blank() {
    while (pos < text.size() && (text[pos] == ' ' || text[pos] == '\t')) ++pos;
  }
  bool eat(std::string_view word) {
    skip_blank();
    if (text.substr(pos, word.size()) == word) {
      pos += word.size();
      return true;
    }
    return false;
  }
  std::string ident() {
    skip_blank();
    std::size_t start = pos;
    while (pos < text.size() && (std::isalnum(static_cast<unsigned char>(text[pos])) ||
                                 text[pos] == '_'))
      ++pos;
    if (pos == start) throw ParseError("expected identifier in dag dump", pos);
    return std::string(text.substr(start, pos - start));
  }
  std::uint64_t number() {
    skip_blank();
    std::size_t start = pos;
    while (pos < text.size() && std::isdigit(static_cast<unsigned char>(text[pos]))) ++pos;
    if (pos == start) throw ParseError("expected number in dag dump", pos);
    return std::stoull(std::string(text.substr(start, pos - start)));
  }
  bool at_line_end() {
    skip_blank();
    return pos >= text.size() || text[pos] == '\n';
  }
  void next_line() {
    while (pos < text.size() && text[pos] != '\n') ++pos;
    if (pos < text.size()) ++pos;
  }
};

DagItem parse_item(DagScanner& sc);

DagForest parse_items_until(DagScanner& sc, char stop) {
  DagForest out;
  for (;;) {
    sc.skip_blank();
    if (sc.pos >= sc.text.size() || sc.text[sc.pos] == '\n' || sc.text[sc.pos] == stop)
      return out;
    out.push_back(parse_item(sc));
  }
}

DagItem parse_item(DagScanner& sc) {
  DagItem item;
  sc.skip_blank();
  if (sc.text[sc.pos] == '@') {
    ++sc.pos;
    if (sc.eat("input:n")) {
      item.kind = DagItem::Kind::Input;
      item.input_preorder = static_cast<std::uint32_t>(sc.number());
      return item;
    }
    item.kind = DagItem::Kind::Entry;
    item.ref.rule = sc.ident();
    if (!sc.eat("@")) throw ParseError("expected '@' in entry link", sc.pos);
    item.ref.ctx = sc.number();
    return item;
  }
  item.kind = DagItem::Kind::Label;
  item.label = sc.ident();
  if (!sc.eat("{")) throw ParseError("expected '{' after label", sc.pos);
  item.children = parse_items_until(sc, '}');
  if (!sc.eat("}")) throw ParseError("expected '}'", sc.pos);
  return item;
}

void collect_edges(const DagForest& f, const std::map<std::pair<std::string, std::uint64_t>,
                                                      std::size_t>& idx,
                   std::set<std::size_t>& out) {
  for (const DagItem& item : f) {
    if (item.kind == DagItem::Kind::Entry) {
      auto it = idx.find(std::make_pair(item.ref.rule, item.ref.ctx));
      if (it == idx.end()) throw ParseError("dag dump links to an unknown entry", 0);
      out.insert(it->second);
    }
    collect_edges(item.children, idx, out);
  }
}

void check_input_links(const DagForest& f, const DataTree& input) {
  for (const DagItem& item : f) {
    if (item.kind == DagItem::Kind::Input && item.input_preorder >= input.node_count())
      throw ParseError("dag dump references a node outside the input tree", 0);
    check_input_links(item.children, input);
  }
}

}  // namespace

Dag parse_dag(std::string_view text, TreeRef input) {
  DagScanner sc{text};
  if (!sc.eat("dag-v1")) throw ParseError("missing dag-v1 header", 0);
  sc.next_line();
  if (!sc.eat("input-nodes")) throw ParseError("missing input-nodes line", sc.pos);
  std::uint64_t n = sc.number();
  if (input && n != input->node_count())
    throw ParseError("dag dump was produced for a different input tree", sc.pos);
  sc.next_line();

  Dag dag;
  dag.input = std::move(input);
  std::optional<DagRef> root;
  if (sc.eat("contexts")) {
    dag.interned_contexts = sc.number();
    sc.next_line();
  }
  while (sc.pos < sc.text.size()) {
    if (sc.eat("root")) {
      DagRef r;
      r.rule = sc.ident();
      if (!sc.eat("@")) throw ParseError("expected '@' in root line", sc.pos);
      r.ctx = sc.number();
      root = r;
      sc.next_line();
      continue;
    }
    if (sc.eat("entry")) {
      DagEntry e;
      e.rule = sc.ident();
      if (!sc.eat("@")) throw ParseError("expected '@' in entry line", sc.pos);
      e.ctx = sc.number();
      if (!sc.eat(":")) throw ParseError("expected ':' in entry line", sc.pos);
      e.forest = parse_items_until(sc, '\n');
      dag.entries.push_back(std::move(e));
      sc.next_line();
      continue;
    }
    if (sc.at_line_end()) {
      sc.next_line();
      continue;
    }
    throw ParseError("unexpected content in dag dump", sc.pos);
  }

  if (root) {
    auto idx = entry_index(dag);
    auto it = idx.find(std::make_pair(root->rule, root->ctx));
    if (it == idx.end()) throw ParseError("root entry missing from dag dump", 0);
    std::swap(dag.entries[0], dag.entries[it->second]);
  }
  auto idx = entry_index(dag);
  for (DagEntry& e : dag.entries) {
    std::set<std::size_t> out;
    collect_edges(e.forest, idx, out);
    if (dag.input) check_input_links(e.forest, *dag.input);
    e.out_edges.assign(out.begin(), out.end());
  }
  if (dag.interned_contexts == 0) dag.interned_contexts = dag.entries.size();
  return dag;
}

}  // namespace xtt
