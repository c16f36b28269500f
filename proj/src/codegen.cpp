#include "codegen.hpp"

#include <algorithm>
#include <cassert>
#include <sstream>

namespace xtt {

// ---------------------------------------------------------------------------
// Machine model

bool TuringMachine::is_halting(const std::string& q) const {
  return std::find(halting.begin(), halting.end(), q) != halting.end();
}

namespace {

template <typename T>
bool contains(const std::vector<T>& v, const T& x) {
  return std::find(v.begin(), v.end(), x) != v.end();
}

void require(bool ok, const std::string& msg) {
  if (!ok) throw std::invalid_argument(msg);
}

}  // namespace

void TuringMachine::validate() const {
  require(!states.empty(), "machine has no states");
  for (const auto& q : states) require(is_identifier(q), "bad state name " + q);
  require(std::set<std::string>(states.begin(), states.end()).size() == states.size(),
          "duplicate state");
  require(contains(states, start), "start state not declared");
  for (const auto& q : halting) require(contains(states, q), "halting state not declared");
  if (!output_state.empty())
    require(contains(halting, output_state), "output state must be a halting state");
  for (const auto& a : tape_alphabet) require(is_identifier(a), "bad tape symbol " + a);
  require(contains(tape_alphabet, blank), "blank symbol not in tape alphabet");
  for (const auto& a : input_alphabet) {
    require(contains(tape_alphabet, a), "input symbol " + a + " not in tape alphabet");
    require(a != blank, "blank cannot be an input symbol");
  }
  for (const auto& [key, act] : delta) {
    require(contains(states, key.first), "transition from unknown state " + key.first);
    require(!is_halting(key.first), "transition from halting state " + key.first);
    require(contains(tape_alphabet, key.second), "transition on unknown symbol " + key.second);
    require(contains(states, act.state), "transition to unknown state " + act.state);
    require(contains(tape_alphabet, act.write), "transition writes unknown symbol " + act.write);
    require(act.move == 'L' || act.move == 'R' || act.move == 'S',
            "transition move must be L, R or S");
  }
}

TuringMachine parse_machine(std::string_view text) {
  TuringMachine m;
  std::istringstream in{std::string(text)};
  std::string line;
  int lineno = 0;
  auto words = [](const std::string& s) {
    std::istringstream ws(s);
    std::vector<std::string> out;
    std::string w;
    while (ws >> w) out.push_back(w);
    return out;
  };
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::string trimmed = line;
    trimmed.erase(0, trimmed.find_first_not_of(" \t\r"));
    if (trimmed.empty()) continue;
    auto fail = [&](const std::string& msg) {
      throw ParseError("machine file line " + std::to_string(lineno) + ": " + msg, 0);
    };
    if (auto arrow = trimmed.find("->"); arrow != std::string::npos) {
      std::string lhs = trimmed.substr(0, arrow), rhs = trimmed.substr(arrow + 2);
      auto split = [&](const std::string& s) {
        std::vector<std::string> parts;
        std::string cur;
        for (char c : s + ",") {
          if (c == ',') {
            cur.erase(0, cur.find_first_not_of(" \t"));
            cur.erase(cur.find_last_not_of(" \t\r") + 1);
            parts.push_back(cur);
            cur.clear();
          } else {
            cur += c;
          }
        }
        return parts;
      };
      auto l = split(lhs), r = split(rhs);
      if (l.size() != 2 || r.size() != 3) fail("expected q,a -> p,b,{L|R|S}");
      if (r[2].size() != 1) fail("bad move " + r[2]);
      auto key = std::make_pair(l[0], l[1]);
      if (m.delta.count(key)) fail("duplicate transition for " + l[0] + "," + l[1]);
      m.delta[key] = {r[0], r[1], r[2][0]};
      continue;
    }
    auto colon = trimmed.find(':');
    if (colon == std::string::npos) fail("expected section or transition");
    std::string key = trimmed.substr(0, colon);
    auto vals = words(trimmed.substr(colon + 1));
    if (key == "states")
      m.states = vals;
    else if (key == "input")
      m.input_alphabet = vals;
    else if (key == "tape")
      m.tape_alphabet = vals;
    else if (key == "blank" && vals.size() == 1)
      m.blank = vals[0];
    else if (key == "start" && vals.size() == 1)
      m.start = vals[0];
    else if (key == "halt")
      m.halting = vals;
    else if (key == "output" && vals.size() == 1)
      m.output_state = vals[0];
    else
      fail("unknown section " + key);
  }
  m.validate();
  return m;
}

std::string machine_to_string(const TuringMachine& m) {
  std::string out;
  auto list = [](const std::vector<std::string>& v) {
    std::string s;
    for (const auto& x : v) s += " " + x;
    return s;
  };
  out += "states:" + list(m.states) + "\n";
  out += "input:" + list(m.input_alphabet) + "\n";
  out += "tape:" + list(m.tape_alphabet) + "\n";
  out += "blank: " + m.blank + "\n";
  out += "start: " + m.start + "\n";
  out += "halt:" + list(m.halting) + "\n";
  if (!m.output_state.empty()) out += "output: " + m.output_state + "\n";
  for (const auto& [key, act] : m.delta)
    out += key.first + "," + key.second + " -> " + act.state + "," + act.write + "," +
           std::string(1, act.move) + "\n";
  return out;
}

TmResult tm_run(const TuringMachine& m, std::vector<Label> input,
                std::uint64_t max_steps, bool lba) {
  for (const Label& a : input)
    if (!contains(m.input_alphabet, a))
      throw MachineError("input symbol " + a + " not in the input alphabet");
  if (lba && input.empty()) throw MachineError("LBA simulation requires a nonempty input");

  std::vector<Label> tape = std::move(input);
  std::size_t head = 0;
  std::string state = m.start;
  TmResult res;

  while (!m.is_halting(state)) {
    if (res.steps >= max_steps) {
      res.kind = TmResult::Kind::StepLimit;
      return res;
    }
    if (head == tape.size()) tape.push_back(m.blank);
    auto it = m.delta.find(std::make_pair(state, tape[head]));
    if (it == m.delta.end()) {
      res.kind = TmResult::Kind::Reject;  // stuck counts as an abnormal halt
      res.halted_in = state;
      return res;
    }
    tape[head] = it->second.write;
    switch (it->second.move) {
      case 'L':
        if (head == 0) throw MachineError("head moved off the left end of the tape");
        --head;
        break;
      case 'R':
        ++head;
        if (lba && head >= tape.size())
          throw MachineError("LBA head moved past the last input cell");
        break;
      default:
        break;
    }
    state = it->second.state;
    ++res.steps;
  }
  res.halted_in = state;
  if (state != m.output_state) {
    res.kind = TmResult::Kind::Reject;
    return res;
  }
  res.kind = TmResult::Kind::Output;
  std::size_t end = tape.size();
  while (end > 0 && tape[end - 1] == m.blank) --end;
  res.output.assign(tape.begin(), tape.begin() + static_cast<std::ptrdiff_t>(end));
  return res;
}

// ---------------------------------------------------------------------------
// Completeness-proof generators

namespace {

void validate_sigma(const std::vector<Label>& labels) {
  require(!labels.empty(), "alphabet is empty");
  std::set<Label> seen;
  for (const Label& l : labels) {
    require(is_identifier(l), "bad label " + l);
    require(l != "doc" && l != "lbrace" && l != "rbrace",
            "label " + l + " is reserved");
    require(seen.insert(l).second, "duplicate label " + l);
  }
}

// if (name()='l1') { arm(l1) } else { if (name()='l2') ... else { fallback } }
Template name_dispatch(const std::vector<Label>& labels,
                       const std::function<Template(const Label&)>& arm,
                       Template fallback) {
  Template out = std::move(fallback);
  for (auto it = labels.rbegin(); it != labels.rend(); ++it)
    out = Template{st_if(x_name_is(*it), arm(*it), std::move(out))};
  return out;
}

// if ($flag1) { arm1 } else { if ($flag2) ... else { fallback } }
Template flag_dispatch(const std::vector<std::pair<std::string, Template>>& arms,
                       Template fallback) {
  Template out = std::move(fallback);
  for (auto it = arms.rbegin(); it != arms.rend(); ++it)
    out = Template{st_if(x_var(it->first), it->second, std::move(out))};
  return out;
}

}  // namespace

Program gen_tree2string(const std::vector<Label>& labels) {
  validate_sigma(labels);
  Template body;
  if (labels.size() == 1) {
    body.push_back(st_cons(labels[0]));
  } else {
    Template emit = name_dispatch(
        labels, [](const Label& l) { return Template{st_cons(l)}; }, {});
    for (auto& s : emit) body.push_back(std::move(s));
  }
  body.push_back(st_cons("lbrace"));
  body.push_back(st_apply(x_child()));
  body.push_back(st_cons("rbrace"));

  Program p;
  p.rules.push_back(Rule{"tree2string", x_all(), std::nullopt, std::move(body)});
  return p;
}

Program gen_string2tree(const std::vector<Label>& labels) {
  validate_sigma(labels);
  auto next_with_mode = [](const std::string& mode) {
    return st_apply(x_next(), mode);
  };

  Program p;
  p.rules.push_back(
      Rule{"doc", x_root(), std::nullopt, Template{st_apply(x_first_child())}});

  {
    Template body;
    auto emit_arm = [&](const Label& l) {
      return Template{st_cons(l, Template{next_with_mode("dochildren")})};
    };
    if (labels.size() == 1) {
      body.push_back(st_cons(labels[0], Template{next_with_mode("dochildren")}));
    } else {
      Template emit = name_dispatch(labels, emit_arm, {});
      for (auto& s : emit) body.push_back(std::move(s));
    }
    body.push_back(st_val("counter", x_one()));
    body.push_back(st_call("searchnextsibling"));
    p.rules.push_back(Rule{"string2tree", x_all(), std::nullopt, std::move(body)});
  }

  {
    Template letters = name_dispatch(
        labels, [](const Label&) { return Template{st_call("string2tree")}; }, {});
    Template body{st_if(x_name_is("lbrace"), Template{next_with_mode("dochildren")},
                        std::move(letters))};
    p.rules.push_back(Rule{"dochildren", x_all(), "dochildren", std::move(body)});
  }

  {
    Template at_rbrace{
        st_val("counter", x_dec("counter")),
        st_if(x_eq(x_var("counter"), x_one()), Template{next_with_mode("dochildren")},
              Template{next_with_mode("search")})};
    Template letters = name_dispatch(
        labels, [&](const Label&) { return Template{next_with_mode("search")}; },
        std::move(at_rbrace));
    Template body{st_if(x_name_is("lbrace"),
                        Template{st_val("counter", x_inc("counter")),
                                 next_with_mode("search")},
                        std::move(letters))};
    p.rules.push_back(Rule{"searchnextsibling", x_all(), "search", std::move(body)});
  }
  return p;
}

// ---------------------------------------------------------------------------
// Turing machine compilation

namespace {

// nodes-typed handle on the context item, usable inside vcopy
XExprPtr x_self_nodes() { return x_intersect(x_dot(), x_all()); }

Statement copy_cells(const std::string& var) {
  return st_foreach(x_var_tree(var),
                    Template{st_foreach(x_child(), Template{st_vcopy(x_self_nodes())})});
}

// Copies var's cells with the first replaced by `head_repl` (possibly empty).
Statement rebuild_cells(const std::string& var, Template head_repl) {
  Template per_cell{st_if(x_eq(x_position(), x_one()), std::move(head_repl),
                          Template{st_vcopy(x_self_nodes())})};
  return st_foreach(x_var_tree(var),
                    Template{st_foreach(x_child(), std::move(per_cell))});
}

Statement copy_first_cell(const std::string& var) {
  return st_foreach(x_var_tree(var),
                    Template{st_foreach(x_first_child(), Template{st_vcopy(x_self_nodes())})});
}

std::string state_var(const std::string& q) { return "state_" + q; }

Template state_flips(const std::string& from, const std::string& to) {
  if (from == to) return {};
  return Template{st_val(state_var(from), x_empty()), st_val(state_var(to), x_one())};
}

}  // namespace

Program gen_tm_program(const TuringMachine& m) {
  m.validate();
  require(!m.output_state.empty(), "machine needs a designated output state");
  require(!contains(m.tape_alphabet, Label("left")) &&
              !contains(m.tape_alphabet, Label("right")),
          "tape symbols left/right collide with the simulation trees");

  Program p;

  // boot: load the tape into `right`, start with an empty `left`, raise the
  // start-state flag, and enter the transition loop
  {
    Template boot{st_tree("left", {})};
    for (const auto& q : m.states)
      if (q != m.start) boot.push_back(st_val(state_var(q), x_empty()));
    boot.push_back(st_val(state_var(m.start), x_one()));
    boot.push_back(st_call("tm_step"));

    Template load_input{st_tree(
        "right", Template{st_foreach(x_child(), Template{st_vcopy(x_self_nodes())})})};
    Template load_blank{st_tree("right", Template{st_cons(m.blank)})};
    for (const auto& s : boot) {
      load_input.push_back(s);
      load_blank.push_back(s);
    }
    p.rules.push_back(Rule{"tm_main", x_root(), std::nullopt,
                           Template{st_if(x_first_child(), std::move(load_input),
                                          std::move(load_blank))}});
  }

  // one transition: rewrite the tape trees, flip the state flags, recurse
  auto transition = [&](const std::string& q,
                        const TuringMachine::Action& act) -> Template {
    Template flips = state_flips(q, act.state);
    auto finish = [&](Template t) {
      for (const auto& s : flips) t.push_back(s);
      t.push_back(st_call("tm_step"));
      return t;
    };
    switch (act.move) {
      case 'S':
        return finish(Template{st_tree(
            "right", Template{rebuild_cells("right", Template{st_cons(act.write)})})});
      case 'R': {
        Statement new_left =
            st_tree("left", [&] {
              Template t{st_cons(act.write)};
              t.push_back(copy_cells("left"));
              return t;
            }());
        Template has_next =
            finish(Template{new_left, st_tree("right", Template{rebuild_cells("right", {})})});
        Template at_end =
            finish(Template{new_left, st_tree("right", Template{st_cons(m.blank)})});
        return Template{st_if(x_next(), std::move(has_next), std::move(at_end))};
      }
      case 'L': {
        Statement new_right = st_tree("right", [&] {
          Template t{copy_first_cell("left")};
          t.push_back(st_cons(act.write));
          t.push_back(rebuild_cells("right", {}));
          return t;
        }());
        Statement new_left = st_tree("left", Template{rebuild_cells("left", {})});
        return finish(Template{std::move(new_right), std::move(new_left)});
      }
      default:
        throw std::invalid_argument("bad move");
    }
  };

  // `tree right { ... }` above rebuilds in place: the tree body still reads
  // the old binding, the rebinding only lands when the body is terminal.
  {
    std::vector<std::pair<std::string, Template>> state_arms;
    for (const auto& q : m.states) {
      if (m.is_halting(q)) continue;
      std::vector<Label> syms;
      for (const Label& a : m.tape_alphabet)
        if (m.delta.count(std::make_pair(q, a))) syms.push_back(a);
      Template dispatch = name_dispatch(
          syms,
          [&](const Label& a) { return transition(q, m.delta.at(std::make_pair(q, a))); },
          {});
      state_arms.emplace_back(state_var(q), std::move(dispatch));
    }
    Template run{st_foreach(
        x_var_tree("right"),
        Template{st_foreach(x_first_child(), flag_dispatch(state_arms, {}))})};

    std::vector<std::pair<std::string, Template>> halt_arms;
    for (const auto& h : m.halting)
      halt_arms.emplace_back(state_var(h), h == m.output_state
                                               ? Template{st_tcopy("right")}
                                               : Template{});
    p.rules.push_back(
        Rule{"tm_step", x_all(), std::nullopt, flag_dispatch(halt_arms, std::move(run))});
  }
  return p;
}

// ---------------------------------------------------------------------------
// Linear-space simulation in 1.0

namespace {

std::string cell_var(const Label& a) { return "cell_" + a; }

}  // namespace

Program gen_lba_program(const LbaMachine& m) {
  m.validate();
  require(!m.output_state.empty(), "LBA needs a designated accept state");

  Program p;

  {
    Template body{st_val("head", x_first_child())};
    for (const Label& a : m.tape_alphabet) body.push_back(st_val(cell_var(a), x_empty()));
    for (const auto& q : m.states)
      if (q != m.start) body.push_back(st_val(state_var(q), x_empty()));
    body.push_back(st_val(state_var(m.start), x_one()));
    body.push_back(st_apply(x_first_child(), "lba_init"));
    p.rules.push_back(Rule{"lba_main", x_root(), std::nullopt, std::move(body)});
  }

  {
    Template advance{st_if(x_next(), Template{st_apply(x_next(), "lba_init")},
                           Template{st_call("lba_step")})};
    Template body = name_dispatch(
        m.input_alphabet,
        [&](const Label& a) {
          Template arm{st_val(cell_var(a), x_union(x_var(cell_var(a)), x_dot()))};
          for (const auto& s : advance) arm.push_back(s);
          return arm;
        },
        {});
    p.rules.push_back(Rule{"lba_init", x_all(), "lba_init", std::move(body)});
  }

  {
    auto transition = [&](const std::string& q, const Label& a,
                          const TuringMachine::Action& act) {
      Template t;
      if (act.write != a) {
        t.push_back(st_val(cell_var(a), x_except(x_var(cell_var(a)), x_dot())));
        t.push_back(st_val(cell_var(act.write),
                           x_union(x_var(cell_var(act.write)), x_dot())));
      }
      for (auto& s : state_flips(q, act.state)) t.push_back(std::move(s));
      if (act.move == 'R') t.push_back(st_val("head", x_next()));
      if (act.move == 'L') t.push_back(st_val("head", x_prev()));
      t.push_back(st_call("lba_step"));
      return t;
    };

    std::vector<std::pair<std::string, Template>> state_arms;
    for (const auto& q : m.states) {
      if (m.is_halting(q)) continue;
      Template dispatch;
      for (auto it = m.tape_alphabet.rbegin(); it != m.tape_alphabet.rend(); ++it) {
        auto d = m.delta.find(std::make_pair(q, *it));
        if (d == m.delta.end()) continue;
        dispatch = Template{st_if(x_intersect(x_dot(), x_var(cell_var(*it))),
                                  transition(q, *it, d->second), std::move(dispatch))};
      }
      state_arms.emplace_back(state_var(q), std::move(dispatch));
    }

    std::vector<std::pair<std::string, Template>> halt_arms;
    for (const auto& h : m.halting)
      halt_arms.emplace_back(state_var(h), h == m.output_state
                                               ? Template{st_cons("accept")}
                                               : Template{st_cons("reject")});
    Template run{st_foreach(x_var("head"), flag_dispatch(state_arms, {}))};
    p.rules.push_back(
        Rule{"lba_step", x_all(), std::nullopt, flag_dispatch(halt_arms, std::move(run))});
  }
  return p;
}

// ---------------------------------------------------------------------------
// Composition

namespace {

XExprPtr reroot_expr(const XExpr& e, const std::string& in_var) {
  if (e.kind == XKind::Root) return x_var_tree(in_var);
  XExprPtr lhs = e.lhs ? reroot_expr(*e.lhs, in_var) : nullptr;
  XExprPtr rhs = e.rhs ? reroot_expr(*e.rhs, in_var) : nullptr;
  return make_expr(e.kind, e.name, std::move(lhs), std::move(rhs));
}

void collect_names(const Program& p, std::set<std::string>& out) {
  for (const Rule& r : p.rules) {
    out.insert(r.name);
    if (r.mode) out.insert(*r.mode);
  }
  for_each_expr(p, [&](const XExpr& e) {
    std::function<void(const XExpr&)> walk = [&](const XExpr& x) {
      if (!x.name.empty()) out.insert(x.name);
      if (x.lhs) walk(*x.lhs);
      if (x.rhs) walk(*x.rhs);
    };
    walk(e);
  });
  std::function<void(const Template&)> stmts = [&](const Template& m) {
    for (const Statement& s : m) {
      if (!s.name.empty()) out.insert(s.name);
      if (s.mode) out.insert(*s.mode);
      stmts(s.body);
      stmts(s.orelse);
    }
  };
  for (const Rule& r : p.rules) stmts(r.body);
}

Program retag_stage(const Program& p, const std::string& tag,
                    const std::optional<std::string>& in_var) {
  auto rename_rule = [&](const std::string& n) { return tag + "_" + n; };
  auto rename_mode = [&](const std::optional<std::string>& m) {
    return m ? tag + "_" + *m : tag;
  };
  auto fix_expr = [&](const XExprPtr& e) {
    return in_var ? reroot_expr(*e, *in_var) : e;
  };

  Program out;
  for (const Rule& r : p.rules) {
    Rule nr;
    nr.name = rename_rule(r.name);
    nr.mode = rename_mode(r.mode);
    nr.match = fix_expr(r.match);
    std::function<Template(const Template&)> walk = [&](const Template& m) {
      Template t;
      for (const Statement& s : m) {
        Statement ns = s;
        if (ns.expr) ns.expr = fix_expr(ns.expr);
        if (ns.kind == StKind::Call) ns.name = rename_rule(ns.name);
        if (ns.kind == StKind::Apply) ns.mode = rename_mode(ns.mode);
        ns.body = walk(s.body);
        ns.orelse = walk(s.orelse);
        t.push_back(std::move(ns));
      }
      return t;
    };
    nr.body = walk(r.body);
    out.rules.push_back(std::move(nr));
  }
  return out;
}

}  // namespace

Program compose(const Program& p1, const Program& p2, const Program& p3) {
  std::set<std::string> used;
  collect_names(p1, used);
  collect_names(p2, used);
  collect_names(p3, used);
  auto fresh = [&](std::string base) {
    while (used.count(base)) base += "_";
    used.insert(base);
    return base;
  };
  std::string main_rule = fresh("main");
  std::string in2 = fresh("stage2_input");
  std::string in3 = fresh("stage3_input");

  Program out;
  {
    Template body{
        st_tree(in2, Template{st_apply(x_root(), "s1")}),
        st_tree(in3, Template{st_apply(x_var_tree(in2), "s2")}),
        st_apply(x_var_tree(in3), "s3"),
    };
    out.rules.push_back(Rule{main_rule, x_root(), std::nullopt, std::move(body)});
  }
  Program stages[] = {retag_stage(p1, "s1", std::nullopt),
                      retag_stage(p2, "s2", in2), retag_stage(p3, "s3", in3)};
  for (const Program& stage : stages)
    for (const Rule& r : stage.rules) out.rules.push_back(r);

  // bug guard: the freshened program must still pass every static check
  std::set<std::string> names;
  for (const Rule& r : out.rules)
    if (!names.insert(r.name).second)
      throw std::logic_error("rule name collision after composition: " + r.name);
  return parse_program(program_to_string(out));
}

Program gen_doubling(int k) {
  require(k >= 1, "doubling depth must be at least 1");
  auto var = [](int i) { return "y" + std::to_string(i); };
  Template body{st_tree(var(1), Template{st_cons("a")})};
  for (int i = 2; i <= k; ++i)
    body.push_back(st_tree(var(i), Template{st_tcopy(var(i - 1)), st_tcopy(var(i - 1))}));
  body.push_back(st_tcopy(var(k)));
  body.push_back(st_tcopy(var(k)));

  Program p;
  p.rules.push_back(Rule{"main", x_root(), std::nullopt, std::move(body)});
  return p;
}

}  // namespace xtt
