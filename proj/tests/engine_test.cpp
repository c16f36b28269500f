#include <doctest.h>

#include <random>

#include "engine.hpp"
#include "fuzz.hpp"

using namespace xtt;

namespace {

TreeRef tree_of(const char* s) { return TreeRef(parse_tree(s)); }

RunOutcome run_text(const std::string& prog, const char* input,
                    std::uint64_t max_steps = kDefaultStepBudget,
                    Strategy strat = {}) {
  return run(parse_program(prog), tree_of(input), strat, max_steps);
}

std::string final_of(const RunOutcome& o) {
  REQUIRE(o.kind == RunOutcome::Kind::Final);
  return tree_to_string(*o.tree);
}

// inactive non-cons statements must have wholly inactive subtrees; context
// triples must satisfy the counter bounds
void check_invariants(const SiblingList& list, bool must_be_inactive) {
  for (const auto& n : list) {
    if (must_be_inactive) CHECK_FALSE(n->active());
    if (n->kind == StKind::Cons) CHECK_FALSE(n->active());
    if (n->active()) {
      const Context& c = *n->ctx;
      Counter total = static_cast<Counter>(c.store.total_nodes());
      CHECK(c.position >= 1);
      CHECK(c.position <= c.size);
      CHECK(c.size <= total);
    }
    bool suppress_children =
        must_be_inactive || (!n->active() && n->kind != StKind::Cons);
    check_invariants(n->body, suppress_children);
    check_invariants(n->orelse, suppress_children);
  }
}

}  // namespace

TEST_CASE("initial configuration shape") {
  TreeRef input = tree_of("a{b{}}");
  Configuration cfg = initial_configuration(input);
  auto actives = active_statements(cfg);
  REQUIRE(actives.size() == 1);
  const Context& c = *actives[0]->ctx;
  CHECK(c.store.bindings().size() == 1);
  CHECK(c.env.empty());
  CHECK(is_node(c.item));
  CHECK(as_node(c.item) == input->root());
  CHECK(c.position == 1);
  CHECK(c.size == 1);
}

TEST_CASE("activation discipline") {
  Context c = initial_context(tree_of("a{b{}}"));

  SUBCASE("statements in the scope of a definition stay inactive") {
    Configuration cfg = init_config(
        Template{st_val("x", x_one()), st_vcopy(x_child())}, c);
    CHECK(cfg.top[0]->active());
    CHECK_FALSE(cfg.top[1]->active());
  }
  SUBCASE("cons is transparent to activation") {
    Configuration cfg =
        init_config(Template{st_cons("a", Template{st_apply(x_child())})}, c);
    CHECK_FALSE(cfg.top[0]->active());
    CHECK(cfg.top[0]->body[0]->active());
  }
  SUBCASE("foreach bodies stay inactive until the foreach fires") {
    Configuration cfg = init_config(
        Template{st_foreach(x_child(), Template{st_apply(x_child())})}, c);
    CHECK(cfg.top[0]->active());
    CHECK_FALSE(cfg.top[0]->body[0]->active());
  }
  SUBCASE("tree bodies are active, statements in tree scope are not") {
    Configuration cfg = init_config(
        Template{st_tree("y", Template{st_apply(x_child())}), st_tcopy("y")}, c);
    CHECK(cfg.top[0]->active());
    CHECK(cfg.top[0]->body[0]->active());
    CHECK_FALSE(cfg.top[1]->active());
  }
  SUBCASE("if branches activate with the if") {
    Configuration cfg = init_config(
        Template{st_if(x_one(), Template{st_apply(x_child())},
                       Template{st_vcopy(x_child())})},
        c);
    CHECK(cfg.top[0]->active());
    CHECK(cfg.top[0]->body[0]->active());
    CHECK(cfg.top[0]->orelse[0]->active());
  }
}

TEST_CASE("update span") {
  Context c = initial_context(tree_of("a{}"));
  Configuration cfg = init_config(
      Template{st_val("x", x_one()), st_vcopy(x_child()), st_vcopy(x_child()),
               st_vcopy(x_child()), st_vcopy(x_child())},
      c);
  // all right siblings inactive: the span runs to the end
  CHECK(update_span(cfg, cfg.top[0].get()) == std::make_pair(std::size_t{1}, std::size_t{5}));
  // first right sibling active: empty span
  cfg.top[1]->ctx = c;
  CHECK(update_span(cfg, cfg.top[0].get()) == std::make_pair(std::size_t{1}, std::size_t{1}));
  // inactive, inactive, active, inactive: span covers the first two
  cfg.top[1]->ctx.reset();
  cfg.top[3]->ctx = c;
  CHECK(update_span(cfg, cfg.top[0].get()) == std::make_pair(std::size_t{1}, std::size_t{3}));
}

TEST_CASE("if statements resolve against the empty sequence") {
  CHECK(final_of(run_text(
            "template r match (/*) { if (()) { cons then { } } else { cons else_ { } } }",
            "a{}")) == "doc{else_{}}");
  CHECK(final_of(run_text(
            "template r match (/*) { if (1) { cons then { } } else { cons else_ { } } }",
            "a{}")) == "doc{then{}}");
}

TEST_CASE("terminal templates denote forests (copy statements)") {
  // vcopy over an explicit node sequence mirrors the two-tree illustration
  CHECK(final_of(run_text(
            "template r match (/*) { vcopy (child::*) }", "a{b{c{}}d{}}")) ==
        "doc{b{c{}}d{}}");
  CHECK(final_of(run_text(
            "template r match (/*) { tree y { cons a { } cons b { } } tcopy y tcopy y }",
            "x{}")) == "doc{a{}b{}a{}b{}}");
  // tcopy of a doc-rooted temporary re-emits its top-level subtrees
  CHECK(final_of(run_text(
            "template r match (/*) { tree y { vcopy (child::*) } tcopy y }",
            "a{b{}c{}}")) == "doc{b{}c{}}");
  CHECK(final_of(run_text("template r match (/*) { tcopy Input }", "a{b{}c{}}")) ==
        "doc{b{}c{}}");
}

TEST_CASE("literal_template renders subtree sequences") {
  CHECK(literal_template({}).empty());
  Tree t1 = parse_tree("a{b{}c{a{}b{}}c{}}");
  Tree t2 = parse_tree("c{a{}b{}}");
  const TreeNode* n1 = t1->root()->children[0];
  const TreeNode* n2 = t1->root()->children[1];
  const TreeNode* n3 = n2->children[0];
  const TreeNode* n4 = t2->root();
  SiblingList tmpl = literal_template({n4, n1, n2, n3, n1});
  CHECK(is_literal(tmpl));
  Forest f = denote_forest(tmpl);
  CHECK(forest_to_string(f) == "c{a{}b{}}b{}c{a{}b{}}a{}b{}");
}

TEST_CASE("rule selection") {
  // first rule in textual order wins
  CHECK(final_of(run_text("template r1 match (//*) { cons one { } }\n"
                          "template r2 match (//*) { cons two { } }",
                          "a{}")) == "doc{one{}}");
  // modeless apply ignores moded rules
  CHECK(final_of(run_text("template m1 match (//*) mode m { cons mm { } }\n"
                          "template base match (//*) { cons base { } }",
                          "a{}")) == "doc{base{}}");
  // apply with a mode that matches no rule falls back to `apply (child::*)`
  CHECK(final_of(run_text(
            "template r match (/*) { cons top { apply (child::*[1]) mode nosuch } }",
            "a{b{}}")) == "doc{top{}}");
}

TEST_CASE("default rule recurses through children") {
  CHECK(final_of(run_text("", "a{}")) == "doc{}");
  CHECK(final_of(run_text("", "a{b{c{}}d{}}")) == "doc{}");
}

TEST_CASE("apply threads position and size") {
  CHECK(final_of(run_text(
            "template r match (/*) { apply (child::*) }\n"
            "template leaf match (//*) { if (position() = 1) { cons first { } } "
            "else { vcopy (. intersect //*) } }",
            "a{b{}c{}d{}}")) == "doc{first{}c{}d{}}");
}

TEST_CASE("foreach iterates its body per item") {
  CHECK(final_of(run_text(
            "template r match (/*) { foreach (child::*) { if (position() = 1) "
            "{ cons first { } } else { vcopy (. intersect //*) } } }",
            "a{b{}c{}d{}}")) == "doc{first{}c{}d{}}");
  CHECK(final_of(run_text(
            "template r match (/*) { foreach (()) { cons never { } } }", "a{}")) ==
        "doc{}");
}

TEST_CASE("value definitions re-activate their update span") {
  CHECK(final_of(run_text(
            "template r match (/*) { val x (1) val y ($x+1) "
            "if ($y = 1) { cons wrong { } } else { cons right { } } }",
            "a{b{}}")) == "doc{right{}}");
}

TEST_CASE("evaluation errors abort the run") {
  RunOutcome o = run_text("template r match (/*) { tcopy y }", "a{}");
  CHECK(o.kind == RunOutcome::Kind::Error);
  CHECK(o.error.find("not defined") != std::string::npos);

  o = run_text("template r match (/*) { val x (1) val z ($x+1) cons a { } }", "a{}");
  CHECK(o.kind == RunOutcome::Kind::Error);  // counter range is 1..1
  CHECK_FALSE(o.error_path.empty());
}

TEST_CASE("diverging programs hit the step limit") {
  RunOutcome o = run_text("template r match (/*) { call r }", "a{}", 1000);
  CHECK(o.kind == RunOutcome::Kind::StepLimit);
  CHECK(o.steps == 1000);
}

TEST_CASE("step traces carry kind, path, rule and triple") {
  std::vector<StepTrace> traces;
  Program p = parse_program("template r match (/*) { cons k { apply (child::*) } }");
  RunOutcome o = run(p, tree_of("a{}"), Strategy::leftmost(), 100,
                     [&](const StepTrace& t) { traces.push_back(t); });
  CHECK(o.kind == RunOutcome::Kind::Final);
  REQUIRE(traces.size() == 2);
  CHECK(traces[0].kind == StKind::Apply);
  CHECK(traces[0].path == "0");
  CHECK(traces[0].rule == "r");  // the initial apply selects rule r
  CHECK(traces[0].triple.find(",1,1)") != std::string::npos);
  CHECK(traces[1].kind == StKind::Apply);
  CHECK(traces[1].path == "0.0");
}

TEST_CASE("terminal templates denote parseable forests") {
  std::mt19937_64 rng(83);
  for (int round = 0; round < 60; ++round) {
    Program p = random_program(rng);
    TreeRef input(random_tree(rng, 6, {"a", "b"}));
    RunOutcome o = run(p, input, {}, 20000);
    REQUIRE(o.kind == RunOutcome::Kind::Final);
    // re-reading the forest encoding reproduces the result
    Forest f = chop_root(std::move(o.tree));
    std::string enc = forest_to_string(f);
    CHECK(forest_to_string(parse_forest(enc)) == enc);
  }
}

TEST_CASE("invariants hold along random runs") {
  std::mt19937_64 rng(71);
  for (int round = 0; round < 120; ++round) {
    Program p = random_program(rng);
    TreeRef input(random_tree(rng, 8, {"a", "b", "c"}));
    EvalEnv env{eval_mode_for(p), false};
    Configuration cfg =
        init_config(Template{st_apply(x_root())}, initial_context(input));
    if_normalize(cfg, env);
    for (int steps = 0; steps < 300; ++steps) {
      CHECK(active_ifs(cfg).empty());
      check_invariants(cfg.top, false);
      std::vector<CfgNode*> enabled;
      for (CfgNode* s : active_statements(cfg))
        if (is_enabled(s)) enabled.push_back(s);
      if (enabled.empty()) {
        CHECK(is_literal(cfg.top));  // progress: no enabled means terminal
        break;
      }
      std::size_t pick = rng() % enabled.size();
      step(cfg, enabled[pick], p, env);
    }
  }
}

TEST_CASE("lift_bodies preserves run results") {
  std::mt19937_64 rng(73);
  int compared = 0;
  for (int round = 0; round < 200; ++round) {
    Program p = random_program(rng);
    TreeRef input(random_tree(rng, 7, {"a", "b", "c"}));
    RunOutcome a = run(p, input, Strategy::leftmost(), 20000);
    RunOutcome b = run(lift_bodies(p), input, Strategy::leftmost(), 40000);
    REQUIRE(a.kind == RunOutcome::Kind::Final);
    REQUIRE(b.kind == RunOutcome::Kind::Final);
    CHECK(is_isomorphic(*a.tree, *b.tree));
    ++compared;
  }
  CHECK(compared == 200);
}

TEST_CASE("random schedules agree on small programs") {
  std::mt19937_64 rng(79);
  for (int round = 0; round < 40; ++round) {
    Program p = random_program(rng);
    TreeRef input(random_tree(rng, 6, {"a", "b"}));
    ConfluenceReport rep = fuzz_confluence(p, input, {1, 2, 3, 4, 5}, 20000);
    CHECK(rep.confluent);
  }
}

TEST_CASE("exhaustive schedules reach a unique result") {
  // a two-rule program with interleaved statements
  Program p = parse_program(
      "template r match (/*) { tree y { vcopy (child::*) } cons k { } tcopy y }\n");
  EnumResult res = enumerate_schedules(p, tree_of("a{b{}c{}}"));
  CHECK_FALSE(res.error);
  CHECK_FALSE(res.exploded);
  CHECK(res.outcomes == std::set<std::string>{"doc{k{}b{}c{}}"});
}

TEST_CASE("undefined match evaluation aborts the run cleanly") {
  // the apply fires with a counter context item, so the child::* match of
  // rule m cannot be evaluated during rule selection
  Program p = parse_program(
      "template r match (/*) { tree y { cons a { } } foreach (1) { apply ($y/*) } }\n"
      "template m match (child::*) { cons k { } }");
  RunOutcome o = run(p, TreeRef(parse_tree("a{}")), {}, 1000);
  CHECK(o.kind == RunOutcome::Kind::Error);
  CHECK(o.error.find("match") != std::string::npos);
}

TEST_CASE("nested tree definitions") {
  CHECK(final_of(run_text(
            "template r match (/*) { tree y { tree z { cons a { } } tcopy z tcopy z } tcopy y }",
            "x{}")) == "doc{a{}a{}}");
}

TEST_CASE("vcopy of a temporary tree root copies the whole tree") {
  CHECK(final_of(run_text(
            "template r match (/*) { tree y { cons a { cons b { } } } vcopy ($y/*) }",
            "x{}")) == "doc{doc{a{b{}}}}");
}

TEST_CASE("scripted strategies pick by index into the enabled list") {
  Program p = parse_program(
      "template r match (/*) { vcopy (child::*[1]) vcopy (child::*) }");
  Strategy scripted{Strategy::Kind::Script, 0, {1, 0}};  // rightmost first
  RunOutcome o = run(p, tree_of("a{b{}c{}}"), scripted, 100);
  REQUIRE(o.kind == RunOutcome::Kind::Final);
  CHECK(tree_to_string(*o.tree) == "doc{b{}b{}c{}}");
}

TEST_CASE("random schedules agree on store-reading programs") {
  std::mt19937_64 rng(89);
  FuzzOptions opts;
  opts.tree_reads = true;
  int v2_seen = 0;
  for (int round = 0; round < 60; ++round) {
    Program p = random_program(rng, opts);
    if (classify_version(p) == Version::V2Program) ++v2_seen;
    TreeRef input(random_tree(rng, 6, {"a", "b"}));
    ConfluenceReport rep = fuzz_confluence(p, input, {1, 2, 3, 4, 5}, 50000);
    CHECK(rep.confluent);
  }
  CHECK(v2_seen > 5);  // the option actually produces 2.0 programs
}
