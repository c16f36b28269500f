#include "fuzz.hpp"

#include <algorithm>

namespace xtt {

namespace {

int pick(std::mt19937_64& rng, int lo, int hi) {
  return std::uniform_int_distribution<int>(lo, hi)(rng);
}

template <typename T>
const T& pick_of(std::mt19937_64& rng, const std::vector<T>& v) {
  return v[static_cast<std::size_t>(pick(rng, 0, static_cast<int>(v.size()) - 1))];
}

bool chance(std::mt19937_64& rng, int percent) { return pick(rng, 1, 100) <= percent; }

struct GenState {
  const FuzzOptions* opts;
  std::vector<std::string> modes;  // declared rule modes
  int rule_count = 0;
  int next_var = 0;
  int stmt_budget = 0;
};

// Variables visible at the point being generated; counters holds the subset
// known to be a single counter (safe under `= 1`).
struct Scope {
  std::vector<std::string> values;
  std::vector<std::string> counters;
  std::vector<std::string> trees;
};

XExprPtr descend_expr(std::mt19937_64& rng) {
  switch (pick(rng, 0, 3)) {
    case 0:
    case 1:
      return x_child();
    case 2:
      return x_first_child();
    default:
      return x_empty();
  }
}

XExprPtr val_expr(std::mt19937_64& rng, const Scope& scope, bool* is_counter) {
  *is_counter = false;
  switch (pick(rng, 0, 5)) {
    case 0:
      *is_counter = true;
      return x_one();
    case 1:
      *is_counter = true;
      return x_position();
    case 2:
      return x_child();
    case 3:
      return x_dot();
    case 4:
      if (!scope.values.empty()) return x_var(pick_of(rng, scope.values));
      [[fallthrough]];
    default:
      return x_empty();
  }
}

XExprPtr test_expr(std::mt19937_64& rng, const Scope& scope,
                   const std::vector<Label>& labels) {
  switch (pick(rng, 0, 6)) {
    case 0:
      return x_name_is(pick_of(rng, labels));
    case 1:
      return x_first_child();
    case 2:
      return x_next();
    case 3:
      return x_empty();
    case 4:
      if (!scope.counters.empty())
        return x_eq(x_var(pick_of(rng, scope.counters)), x_one());
      return x_eq(x_position(), x_one());
    case 5:
      if (!scope.values.empty()) return x_var(pick_of(rng, scope.values));
      [[fallthrough]];
    default:
      return x_one();
  }
}

XExprPtr vcopy_expr(std::mt19937_64& rng) {
  switch (pick(rng, 0, 3)) {
    case 0:
      return x_child();
    case 1:
      return x_first_child();
    case 2:
      return x_root();
    default:
      return x_empty();
  }
}

std::optional<std::string> maybe_mode(std::mt19937_64& rng, const GenState& st) {
  if (st.modes.empty() || chance(rng, 70)) return std::nullopt;
  return pick_of(rng, st.modes);
}

Template gen_template(std::mt19937_64& rng, GenState& st, Scope scope, int depth,
                      int rule_index);

// statements that copy and test but never spawn further rule applications;
// safe inside iterations over temporary-tree nodes
Template gen_flat_template(std::mt19937_64& rng, GenState& st, Scope scope,
                           int depth) {
  Template out;
  int n = pick(rng, 1, 2);
  for (int i = 0; i < n && st.stmt_budget > 0; ++i) {
    --st.stmt_budget;
    switch (pick(rng, 0, 4)) {
      case 0:
        out.push_back(st_cons(pick_of(rng, st.opts->labels),
                              depth > 0 ? gen_flat_template(rng, st, scope, depth - 1)
                                        : Template{}));
        break;
      case 1:
        out.push_back(st_vcopy(x_intersect(x_dot(), x_all())));
        break;
      case 2:
        out.push_back(st_vcopy(x_child()));
        break;
      case 3:
        if (!scope.trees.empty()) {
          out.push_back(st_tcopy(pick_of(rng, scope.trees)));
          break;
        }
        [[fallthrough]];
      default:
        if (depth > 0) {
          out.push_back(st_if(test_expr(rng, scope, st.opts->labels),
                              gen_flat_template(rng, st, scope, depth - 1),
                              gen_flat_template(rng, st, scope, depth - 1)));
        } else {
          out.push_back(st_cons(pick_of(rng, st.opts->labels)));
        }
        break;
    }
  }
  return out;
}

Statement gen_statement(std::mt19937_64& rng, GenState& st, Scope& scope, int depth,
                        int rule_index) {
  const auto& labels = st.opts->labels;
  for (;;) {
    if (st.opts->tree_reads && !scope.trees.empty() && depth > 0 && chance(rng, 25)) {
      const std::string& y = pick_of(rng, scope.trees);
      if (chance(rng, 40)) return st_vcopy(x_var_tree(y));
      return st_foreach(x_var_tree(y), gen_flat_template(rng, st, scope, depth - 1));
    }
    switch (pick(rng, 0, 8)) {
      case 0:
        return st_cons(pick_of(rng, labels),
                       depth > 0 ? gen_template(rng, st, scope, depth - 1, rule_index)
                                 : Template{});
      case 1:
        return st_apply(descend_expr(rng), maybe_mode(rng, st));
      case 2: {
        if (rule_index + 1 >= st.rule_count) break;  // calls only go forward
        int target = pick(rng, rule_index + 1, st.rule_count - 1);
        return st_call("r" + std::to_string(target));
      }
      case 3:
        if (depth == 0) break;
        return st_foreach(descend_expr(rng),
                          gen_template(rng, st, scope, depth - 1, rule_index));
      case 4: {
        std::string v = "v" + std::to_string(st.next_var++);
        bool is_counter = false;
        XExprPtr e = val_expr(rng, scope, &is_counter);
        scope.values.push_back(v);
        if (is_counter) scope.counters.push_back(v);
        return st_val(v, e);
      }
      case 5: {
        if (depth == 0) break;
        std::string y = "y" + std::to_string(st.next_var++);
        Template body = gen_template(rng, st, scope, depth - 1, rule_index);
        scope.trees.push_back(y);
        return st_tree(y, std::move(body));
      }
      case 6:
        return st_vcopy(vcopy_expr(rng));
      case 7:
        if (scope.trees.empty()) break;
        return st_tcopy(pick_of(rng, scope.trees));
      default:
        if (depth == 0) break;
        return st_if(test_expr(rng, scope, labels),
                     gen_template(rng, st, scope, depth - 1, rule_index),
                     gen_template(rng, st, scope, depth - 1, rule_index));
    }
  }
}

Template gen_template(std::mt19937_64& rng, GenState& st, Scope scope, int depth,
                      int rule_index) {
  Template out;
  int n = pick(rng, 0, st.opts->max_stmts);
  for (int i = 0; i < n && st.stmt_budget > 0; ++i) {
    --st.stmt_budget;
    out.push_back(gen_statement(rng, st, scope, depth, rule_index));
  }
  return out;
}

}  // namespace

Program random_program(std::mt19937_64& rng, const FuzzOptions& opts) {
  GenState st;
  st.opts = &opts;
  st.rule_count = pick(rng, 1, opts.max_rules);
  if (chance(rng, 40)) st.modes.push_back("m1");
  if (chance(rng, 15)) st.modes.push_back("m2");
  st.stmt_budget = 40;

  Program p;
  for (int i = 0; i < st.rule_count; ++i) {
    Rule r;
    r.name = "r" + std::to_string(i);
    switch (pick(rng, 0, 3)) {
      case 0:
      case 1:
        r.match = x_all();
        break;
      case 2:
        r.match = x_root();
        break;
      default:
        r.match = x_child();
        break;
    }
    if (!st.modes.empty() && chance(rng, 35)) r.mode = pick_of(rng, st.modes);
    r.body = gen_template(rng, st, {}, opts.max_depth, i);
    p.rules.push_back(std::move(r));
  }
  // the generator stays inside the statically checked fragment
  return parse_program(program_to_string(p));
}

Tree random_tree(std::mt19937_64& rng, int max_nodes, const std::vector<Label>& labels) {
  int n = pick(rng, 1, std::max(1, max_nodes));
  TreeBuilder b;
  std::vector<TreeNode*> nodes;
  nodes.push_back(b.add_node(pick_of(rng, labels), nullptr));
  for (int i = 1; i < n; ++i) {
    TreeNode* parent = nodes[static_cast<std::size_t>(pick(rng, 0, i - 1))];
    nodes.push_back(b.add_node(pick_of(rng, labels), parent));
  }
  return b.finish();
}

Context random_context_with_temps(std::mt19937_64& rng, TreeRef input,
                                  int extra_trees, const std::vector<Label>& labels) {
  Context c = initial_context(input);
  for (int i = 0; i < extra_trees; ++i) {
    Tree t = random_tree(rng, 5, labels);
    c.store.bind("tmp" + std::to_string(i), TreeRef(std::move(t)));
  }
  Counter n = static_cast<Counter>(input->node_count());
  auto input_item = [&]() -> Item {
    if (chance(rng, 50))
      return Item{input->node_at(static_cast<std::uint32_t>(pick(rng, 0, static_cast<int>(n) - 1)))};
    return Item{static_cast<Counter>(pick(rng, 1, static_cast<int>(n)))};
  };
  int vars = pick(rng, 0, 3);
  for (int i = 0; i < vars; ++i) {
    Value v;
    int len = pick(rng, 0, 4);
    for (int j = 0; j < len; ++j) v.items.push_back(input_item());
    c.env["x" + std::to_string(i)] = std::move(v);
  }
  c.item = input_item();
  c.size = static_cast<Counter>(pick(rng, 1, static_cast<int>(n)));
  c.position = static_cast<Counter>(pick(rng, 1, static_cast<int>(c.size)));
  return c;
}

namespace {

Template gen_if_template(std::mt19937_64& rng, int& budget, const Context& ctx,
                         int depth) {
  Template out;
  int n = pick(rng, 1, 2);
  for (int i = 0; i < n; ++i) {
    if (budget > 0 && depth > 0 && chance(rng, 70)) {
      --budget;
      XExprPtr test;
      switch (pick(rng, 0, 3)) {
        case 0:
          test = x_empty();
          break;
        case 1:
          test = x_one();
          break;
        case 2:
          test = is_node(ctx.item) ? x_name_is(as_node(ctx.item)->label) : x_one();
          break;
        default:
          test = x_eq(x_position(), x_one());
          break;
      }
      out.push_back(st_if(std::move(test), gen_if_template(rng, budget, ctx, depth - 1),
                          gen_if_template(rng, budget, ctx, depth - 1)));
    } else {
      out.push_back(st_cons("k" + std::to_string(pick(rng, 0, 5))));
    }
  }
  return out;
}

}  // namespace

Configuration random_if_config(std::mt19937_64& rng, const Context& ctx, int max_ifs) {
  int budget = max_ifs;
  Template m = gen_if_template(rng, budget, ctx, 6);
  return init_config(m, ctx);
}

EnumResult enumerate_schedules(const Program& p, TreeRef input,
                               std::size_t max_states, std::uint64_t max_steps) {
  EnumResult res;
  EvalEnv env{eval_mode_for(p), false};
  std::set<std::string> seen;

  struct Frame {
    Configuration cfg;
    std::uint64_t depth;
  };

  std::vector<Frame> stack;
  {
    Statement s = st_apply(x_root());
    Configuration cfg = init_config(Template{std::move(s)}, initial_context(input));
    try {
      if_normalize(cfg, env);
    } catch (const RunError& e) {
      res.error = true;
      res.error_detail = e.what();
      return res;
    }
    stack.push_back({std::move(cfg), 0});
  }

  while (!stack.empty()) {
    Frame f = std::move(stack.back());
    stack.pop_back();
    std::string key = canonical_config(f.cfg);
    if (!seen.insert(key).second) continue;
    if (++res.states > max_states) {
      res.exploded = true;
      return res;
    }
    std::vector<CfgNode*> enabled;
    for (CfgNode* s : active_statements(f.cfg))
      if (is_enabled(s)) enabled.push_back(s);
    if (enabled.empty()) {
      Tree t = maketree(denote_forest(f.cfg.top));
      res.outcomes.insert(tree_to_string(*t));
      continue;
    }
    if (f.depth >= max_steps) {
      res.exploded = true;
      return res;
    }
    for (std::size_t i = 0; i < enabled.size(); ++i) {
      Configuration next = clone_config(f.cfg);
      std::vector<CfgNode*> en2;
      for (CfgNode* s : active_statements(next))
        if (is_enabled(s)) en2.push_back(s);
      try {
        step(next, en2[i], p, env);
      } catch (const RunError& e) {
        res.error = true;
        res.error_detail = e.what();
        return res;
      }
      stack.push_back({std::move(next), f.depth + 1});
    }
  }
  return res;
}

EnumResult enumerate_if_orders(const Configuration& cfg, const EvalEnv& env,
                               std::size_t max_states) {
  EnumResult res;
  std::set<std::string> seen;
  std::vector<Configuration> stack;
  stack.push_back(clone_config(cfg));

  while (!stack.empty()) {
    Configuration cur = std::move(stack.back());
    stack.pop_back();
    std::string key = canonical_config(cur);
    if (!seen.insert(key).second) continue;
    if (++res.states > max_states) {
      res.exploded = true;
      return res;
    }
    std::vector<CfgNode*> ifs = active_ifs(cur);
    if (ifs.empty()) {
      res.outcomes.insert(key);
      continue;
    }
    for (std::size_t i = 0; i < ifs.size(); ++i) {
      Configuration next = clone_config(cur);
      std::vector<CfgNode*> ifs2 = active_ifs(next);
      try {
        fire_if(next, ifs2[i], env);
      } catch (const RunError& e) {
        res.error = true;
        res.error_detail = e.what();
        return res;
      }
      stack.push_back(std::move(next));
    }
  }
  return res;
}

}  // namespace xtt
