#include <doctest.h>

#include <chrono>
#include <random>

#include "fuzz.hpp"
#include "xexpr.hpp"

using namespace xtt;

namespace {

TreeRef example_tree() {
  return TreeRef(parse_tree("a{b{}c{a{}b{}}c{}}"));
}

std::vector<std::string> labels_of(const Value& v) {
  std::vector<std::string> out;
  for (const Item& it : v.items) out.push_back(as_node(it)->label);
  return out;
}

const std::vector<const char*> kAllSurface = {
    "/*",
    "child::*",
    "//*",
    "child::*[1]",
    "following-sibling::*[1]",
    "preceding-sibling::*[1]",
    ".",
    "position()",
    "()",
    "1",
    "$x",
    "$y/*",
    "$x+1",
    "$x-1",
    "$x = 1",
    "name()='a'",
    "child::* | /*",
    "child::* intersect //*",
    "//* except child::*",
};

}  // namespace

TEST_CASE("expression parse/print round trip") {
  for (const char* s : kAllSurface) {
    XExprPtr e = parse_expr(s);
    CHECK(expr_to_string(*e) == s);
    CHECK(expr_equal(*parse_expr(expr_to_string(*e)), *e));
  }
  CHECK(expr_to_string(*parse_expr("( child::* )")) == "child::*");
  // set operators associate left at one precedence level; the canonical
  // form of a left-nested chain needs no parentheses
  CHECK(expr_to_string(*parse_expr("(child::*|/*) intersect //*")) ==
        "child::* | /* intersect //*");
  CHECK(expr_to_string(*parse_expr("child::* | (/* intersect //*)")) ==
        "child::* | (/* intersect //*)");
  CHECK(expr_to_string(*parse_expr("position() = 1")) == "position() = 1");
  CHECK_THROWS_AS(parse_expr("$x + 2"), ParseError);
  CHECK_THROWS_AS(parse_expr("frobnicate"), ParseError);
  CHECK_THROWS_AS(parse_expr("name()='a' ="), ParseError);
}

TEST_CASE("basic evaluation over the example tree") {
  Context c = initial_context(example_tree());
  CHECK(eval(*parse_expr("/*"), c, EvalMode::V2).items ==
        std::vector<Item>{Item{c.store.input().root()}});
  CHECK(eval(*parse_expr("()"), c, EvalMode::V2).empty());
  CHECK(labels_of(eval(*parse_expr("child::*"), c, EvalMode::V2)) ==
        std::vector<std::string>{"b", "c", "c"});
  CHECK(labels_of(eval(*parse_expr("child::*[1]"), c, EvalMode::V2)) ==
        std::vector<std::string>{"b"});
  CHECK(eval(*parse_expr("following-sibling::*[1]"), c, EvalMode::V2).empty());
  CHECK(eval(*parse_expr("preceding-sibling::*[1]"), c, EvalMode::V2).empty());
  CHECK(eval(*parse_expr("name()='a'"), c, EvalMode::V2).size() == 1);
  CHECK(eval(*parse_expr("name()='b'"), c, EvalMode::V2).empty());
  CHECK(eval(*parse_expr("position()"), c, EvalMode::V2).items ==
        std::vector<Item>{Item{Counter{1}}});
  CHECK(eval(*parse_expr("//*"), c, EvalMode::V2).size() == 6);

  Context leaf = with_triple(c, Item{c.store.input().root()->children[0]}, 1, 3);
  CHECK(eval(*parse_expr("child::*"), leaf, EvalMode::V2).empty());
  CHECK(eval(*parse_expr("child::*[1]"), leaf, EvalMode::V2).empty());
  CHECK(labels_of(eval(*parse_expr("following-sibling::*[1]"), leaf, EvalMode::V2)) ==
        std::vector<std::string>{"c"});
}

TEST_CASE("counter expressions and their undefined cases") {
  Context c = initial_context(example_tree());  // 6 nodes
  c.env["x"] = Value{{Item{Counter{6}}}};
  CHECK_THROWS_AS(eval(*parse_expr("$x+1"), c, EvalMode::V2), EvalUndefined);
  c.env["x"] = Value{{Item{Counter{1}}}};
  CHECK_THROWS_AS(eval(*parse_expr("$x-1"), c, EvalMode::V2), EvalUndefined);
  CHECK(eval(*parse_expr("$x+1"), c, EvalMode::V2).items ==
        std::vector<Item>{Item{Counter{2}}});
  CHECK(eval(*parse_expr("$x = 1"), c, EvalMode::V2).size() == 1);
  c.env["x"] = Value{{Item{Counter{2}}}};
  CHECK(eval(*parse_expr("$x = 1"), c, EvalMode::V2).empty());
  c.env["x"] = Value{{Item{Counter{1}}, Item{Counter{1}}}};
  CHECK_THROWS_AS(eval(*parse_expr("$x = 1"), c, EvalMode::V2), EvalUndefined);
  CHECK_THROWS_AS(eval(*parse_expr("$unbound"), c, EvalMode::V2), EvalUndefined);
  CHECK_THROWS_AS(eval(*parse_expr("$nosuch/*"), c, EvalMode::V2), EvalUndefined);

  Context counter_ctx = with_triple(c, Item{Counter{2}}, 1, 1);
  CHECK_THROWS_AS(eval(*parse_expr("child::*"), counter_ctx, EvalMode::V2), EvalUndefined);
  CHECK_THROWS_AS(eval(*parse_expr("name()='a'"), counter_ctx, EvalMode::V2),
                  EvalUndefined);
}

TEST_CASE("counters in 1.0 mode are bounded by the input tree") {
  Context c = initial_context(example_tree());
  c.store.bind("y", TreeRef(parse_tree("q{q{}q{}q{}}")));  // store total 10
  c.env["x"] = Value{{Item{Counter{6}}}};
  CHECK_THROWS_AS(eval(*parse_expr("$x+1"), c, EvalMode::V1), EvalUndefined);
  CHECK(as_counter(eval(*parse_expr("$x+1"), c, EvalMode::V2).items[0]) == 7);
}

TEST_CASE("tree variables and store-wide //*") {
  Context c = initial_context(example_tree());
  TreeRef temp(parse_tree("t{u{}}"));
  c.store.bind("y", temp);
  Value root = eval(*parse_expr("$y/*"), c, EvalMode::V2);
  CHECK(labels_of(root) == std::vector<std::string>{"t"});
  CHECK(eval(*parse_expr("//*"), c, EvalMode::V2).size() == 8);
  CHECK(eval(*parse_expr("//*"), c, EvalMode::V1).size() == 6);
  // document order puts the input tree first
  auto all = labels_of(eval(*parse_expr("//*"), c, EvalMode::V2));
  CHECK(all.front() == "a");
  CHECK(all[6] == "t");
}

TEST_CASE("node-set algebra is duplicate-free and document ordered") {
  Context c = initial_context(example_tree());
  Value v = eval(*parse_expr("child::* | child::*"), c, EvalMode::V2);
  CHECK(labels_of(v) == std::vector<std::string>{"b", "c", "c"});
  CHECK(eval(*parse_expr("child::* intersect /*"), c, EvalMode::V2).empty());
  CHECK(eval(*parse_expr("//* except child::*"), c, EvalMode::V2).size() == 3);
  CHECK(labels_of(eval(*parse_expr("/* | child::*"), c, EvalMode::V2)) ==
        std::vector<std::string>{"a", "b", "c", "c"});
  // reversed operand order must not change the document order of the result
  CHECK(labels_of(eval(*parse_expr("child::* | /*"), c, EvalMode::V2)) ==
        std::vector<std::string>{"a", "b", "c", "c"});
  c.env["x"] = Value{{Item{Counter{1}}}};
  CHECK_THROWS_AS(eval(*parse_expr("$x | child::*"), c, EvalMode::V2), EvalUndefined);
  // `.` laundered through intersect gives a nodes-typed handle on the item
  Value self = eval(*parse_expr(". intersect //*"), c, EvalMode::V2);
  CHECK(labels_of(self) == std::vector<std::string>{"a"});
}

TEST_CASE("static types") {
  CHECK(type_of(*parse_expr("child::*")) == ValueType::Nodes);
  CHECK(type_of(*parse_expr("1")) == ValueType::Mixed);
  CHECK(type_of(*parse_expr("child::* | /*")) == ValueType::Nodes);
  CHECK(type_of(*parse_expr("$x | /*")) == ValueType::Mixed);
  CHECK(type_of(*parse_expr(". intersect //*")) == ValueType::Nodes);
  CHECK(type_of(*parse_expr("()")) == ValueType::Nodes);
  CHECK(type_of(*parse_expr(".")) == ValueType::Mixed);
  CHECK(type_of(*parse_expr("$x")) == ValueType::Mixed);
}

TEST_CASE("nodes-typed expressions evaluate to all-node values") {
  std::mt19937_64 rng(23);
  for (int round = 0; round < 200; ++round) {
    TreeRef input(random_tree(rng, 12, {"a", "b", "c"}));
    Context c = random_context_with_temps(rng, input, 2, {"a", "b"});
    c.env["x"] = Value{{Item{Counter{1}}}};
    c.env["y"] = Value{};
    for (const char* s : kAllSurface) {
      XExprPtr e = parse_expr(s);
      Value v;
      try {
        v = eval(*e, c, EvalMode::V2);
      } catch (const EvalUndefined&) {
        continue;
      }
      if (type_of(*e) == ValueType::Nodes) CHECK(v.all_nodes());
      Counter bound = static_cast<Counter>(c.store.total_nodes());
      for (const Item& it : v.items)
        if (!is_node(it)) {
          CHECK(as_counter(it) >= 1);
          CHECK(as_counter(it) <= bound);
        }
    }
  }
}

TEST_CASE("evaluation cost stays polynomial in the store size") {
  // coarse empirical witness: per-evaluation time on a 10^4-node store stays
  // within a generous linear-fit factor of the 10^2-node store
  auto flat_input = [](int n) {
    std::vector<Label> cells(static_cast<std::size_t>(n), "a");
    return TreeRef(flattree(cells));
  };
  auto time_evals = [](const Context& c, double* out) {
    const char* exprs[] = {"//*", "child::*", "//* except child::*",
                           "child::* | //*", "name()='a'", "$x+1"};
    auto start = std::chrono::steady_clock::now();
    int reps = 0;
    for (int i = 0; i < 5; ++i)
      for (const char* s : exprs) {
        eval(*parse_expr(s), c, EvalMode::V1);
        ++reps;
      }
    *out = std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
               .count() /
           reps;
  };
  double small = 0, large = 0;
  Context c100 = initial_context(flat_input(99));
  c100.env["x"] = Value{{Item{Counter{1}}}};
  time_evals(c100, &small);
  Context c10k = initial_context(flat_input(9999));
  c10k.env["x"] = Value{{Item{Counter{1}}}};
  time_evals(c10k, &large);
  // 100x the nodes; allow two extra orders of magnitude of slack over a
  // linear fit before calling it superpolynomial
  CHECK(large < small * 10000 + 1e-3);
}

TEST_CASE("input-only flags") {
  CHECK(is_input_only(*parse_expr("child::*"), EvalMode::V1));
  CHECK(is_input_only(*parse_expr("$x = 1"), EvalMode::V1));
  CHECK_FALSE(is_input_only(*parse_expr("$y/*"), EvalMode::V1));
  CHECK(is_input_only(*parse_expr("//*"), EvalMode::V1));
  CHECK_FALSE(is_input_only(*parse_expr("//*"), EvalMode::V2));
  CHECK_FALSE(is_input_only(*parse_expr("child::* | $y/*"), EvalMode::V1));
  CHECK(is_polynomial(*parse_expr("child::* | //*")));
}

TEST_CASE("$y/* sees temporary trees (the input-only witness)") {
  Context c = initial_context(example_tree());
  c.store.bind("y", TreeRef(parse_tree("t{}")));
  CHECK(is_input_only_context(c));
  Value with_temp = eval(*parse_expr("$y/*"), c, EvalMode::V2);
  CHECK(with_temp.size() == 1);
  CHECK_THROWS(eval(*parse_expr("$y/*"), project_input_only(c), EvalMode::V2));
}

TEST_CASE("input-only projection") {
  Context c = initial_context(example_tree());
  Context same = project_input_only(c);
  CHECK(same.store.bindings().size() == 1);

  c.store.bind("y", TreeRef(parse_tree("t{}")));
  Context projected = project_input_only(c);
  CHECK(projected.store.bindings().size() == 1);
  CHECK(projected.store.find("y") == nullptr);

  // a context whose environment references a temporary tree cannot project
  Context bad = c;
  bad.env["v"] = eval(*parse_expr("$y/*"), c, EvalMode::V2);
  CHECK_FALSE(is_input_only_context(bad));
  CHECK_THROWS_AS(project_input_only(bad), std::invalid_argument);
}

TEST_CASE("input-only builtins are oblivious to temporary trees") {
  std::mt19937_64 rng(31);
  std::vector<XExprPtr> exprs;
  for (const char* s : kAllSurface)
    if (std::string(s) != "$y/*") exprs.push_back(parse_expr(s));
  for (int round = 0; round < 300; ++round) {
    TreeRef input(random_tree(rng, 10, {"a", "b", "c"}));
    Context c = random_context_with_temps(rng, input, 1 + static_cast<int>(rng() % 3),
                                          {"a", "b", "c"});
    c.env["x"] = Value{{Item{Counter{1}}}};
    Context hat = project_input_only(c);
    for (const auto& e : exprs) {
      Value v1, v2;
      bool d1 = true, d2 = true;
      try {
        v1 = eval(*e, c, EvalMode::V1);
      } catch (const EvalUndefined&) {
        d1 = false;
      }
      try {
        v2 = eval(*e, hat, EvalMode::V1);
      } catch (const EvalUndefined&) {
        d2 = false;
      }
      CHECK(d1 == d2);
      if (d1 && d2) CHECK(v1 == v2);
    }
  }
}
