// Acceptance suite: one verdict line per criterion, nonzero exit on any
// failure. Run through ctest or directly; fixtures are read from FIXTURE_DIR.

#include <chrono>
#include <cstdio>
#include <fstream>
#include <random>
#include <sstream>
#include <vector>

#include "codegen.hpp"
#include "dag.hpp"
#include "fuzz.hpp"

using namespace xtt;

namespace {

int g_failures = 0;

struct Check {
  std::string name;
  double limit_seconds;
  bool ok = true;
  std::string detail;
  std::chrono::steady_clock::time_point started = std::chrono::steady_clock::now();

  void require(bool cond, const std::string& what) {
    if (!cond && ok) {
      ok = false;
      detail = what;
    }
  }

  void finish() {
    double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                                started)
                      .count();
    if (ok && limit_seconds > 0 && secs > limit_seconds) {
      ok = false;
      detail = "time limit exceeded";
    }
    std::printf("%s  %s  (%.2fs%s)\n", ok ? "PASS" : "FAIL", name.c_str(), secs,
                detail.empty() ? "" : ("; " + detail).c_str());
    std::fflush(stdout);
    if (!ok) ++g_failures;
  }
};

std::string slurp(const std::string& name) {
  std::ifstream f(std::string(FIXTURE_DIR) + "/" + name);
  if (!f) throw std::runtime_error("missing fixture " + name);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

TreeRef example_tree() { return TreeRef(parse_tree("a{b{}c{a{}b{}}c{}}")); }

Tree wrapped(const DataTree& t) {
  Forest f;
  f.push_back(clone_tree(t));
  return maketree(std::move(f));
}

std::string tokens_to_text(const std::vector<Label>& tokens) {
  std::string out;
  for (const Label& t : tokens) {
    if (t == "lbrace")
      out += '{';
    else if (t == "rbrace")
      out += '}';
    else
      out += out.empty() || out.back() == '{' || out.back() == '}' ? t : " " + t;
  }
  return out;
}

// 1. Generated single-letter programs match their committed renderings
// token for token, and tree2string on the example tree flattens its exact
// brace string.
void criterion1() {
  Check c{"1. semantics fidelity, reference programs", 1.0};
  c.require(program_tokens(program_to_string(gen_tree2string({"a"}))) ==
                program_tokens(slurp("tree2string_a.xp")),
            "tree2string tokens differ from tree2string_a.xp");
  c.require(program_tokens(program_to_string(gen_string2tree({"a"}))) ==
                program_tokens(slurp("string2tree_a.xp")),
            "string2tree tokens differ from string2tree_a.xp");
  TreeRef example = example_tree();
  c.require(tree_to_string(*example) == "a{b{}c{a{}b{}}c{}}", "example tree mismatch");
  c.require(tree_to_string(*TreeRef(parse_tree(slurp("example.dt")))) ==
                tree_to_string(*example),
            "example.dt does not hold the example tree");
  RunOutcome o = run(gen_tree2string({"a", "b", "c"}), example);
  c.require(o.kind == RunOutcome::Kind::Final, "run did not finish");
  if (o.tree)
    c.require(is_isomorphic(*o.tree, *flattree(encoding_tokens(*example))),
              "output is not the flattened brace string");
  c.finish();
}

// 2. string2tree after tree2string reproduces 300 random trees up to
// isomorphism.
void criterion2() {
  Check c{"2. completeness round trip (300 random trees)", 30.0};
  std::vector<Label> sigma = {"a", "b", "c"};
  Program t2s = gen_tree2string(sigma);
  Program s2t = gen_string2tree(sigma);
  std::mt19937_64 rng(2024);
  int failures = 0;
  for (int i = 0; i < 300; ++i) {
    TreeRef t(random_tree(rng, 40, sigma));
    RunOutcome flat = run(t2s, t, {}, 500000);
    if (flat.kind != RunOutcome::Kind::Final) {
      ++failures;
      continue;
    }
    RunOutcome back = run(s2t, TreeRef(std::move(flat.tree)), {}, 5'000'000);
    if (back.kind != RunOutcome::Kind::Final ||
        !is_isomorphic(*back.tree, *wrapped(*t)))
      ++failures;
  }
  c.require(failures == 0, std::to_string(failures) + " round-trip failures");
  c.finish();
}

// 3. Full composition: tree2string, a compiled machine, string2tree. The
// machines transform brace encodings; agreement is checked against the
// reference simulation on the encoding tokens.
void criterion3() {
  Check c{"3. completeness end to end (3 machines x 8 inputs)", 120.0};
  struct Case {
    const char* machine;
    std::vector<Label> sigma;
  };
  Case cases[] = {
      {"identity.tm", {"a", "b"}},
      {"unary_increment_enc.tm", {"a"}},
      {"binary_successor_enc.tm", {"d0", "d1"}},
  };
  std::mt19937_64 rng(33);
  for (const Case& cs : cases) {
    TuringMachine m = parse_machine(slurp(cs.machine));
    Program comp =
        compose(gen_tree2string(cs.sigma), gen_tm_program(m), gen_string2tree(cs.sigma));
    for (int i = 0; i < 8 && c.ok; ++i) {
      TreeRef t(random_tree(rng, 8, cs.sigma));
      TmResult expect = tm_run(m, encoding_tokens(*t), 1'000'000);
      c.require(expect.kind == TmResult::Kind::Output,
                std::string(cs.machine) + ": reference run did not accept");
      if (!c.ok) break;
      Tree expected_tree = parse_tree(tokens_to_text(expect.output));
      RunOutcome got = run(comp, t, {}, 5'000'000);
      c.require(got.kind == RunOutcome::Kind::Final,
                std::string(cs.machine) + ": composed run did not finish");
      if (got.tree)
        c.require(is_isomorphic(*got.tree, *wrapped(*expected_tree)),
                  std::string(cs.machine) + ": output mismatch on " +
                      tree_to_string(*t));
    }
  }
  c.finish();
}

// 4. Confluence: random schedules agree on 200 fuzzed programs, and
// exhaustive schedule enumeration on 50 tiny instances finds one normal
// form each.
void criterion4() {
  Check c{"4. confluence (200 fuzzed x 5 schedules + 50 exhaustive)", 300.0};
  std::mt19937_64 rng(44);
  FuzzOptions with_reads;
  with_reads.tree_reads = true;
  for (int i = 0; i < 200 && c.ok; ++i) {
    Program p = random_program(rng, i % 2 ? with_reads : FuzzOptions{});
    TreeRef input(random_tree(rng, 8, {"a", "b", "c"}));
    RunOutcome oracle = run(p, input, Strategy::leftmost(), 100000);
    c.require(oracle.kind == RunOutcome::Kind::Final,
              "fuzzed program did not terminate cleanly");
    if (!c.ok) break;
    ConfluenceReport rep = fuzz_confluence(p, input, {1, 2, 3, 4, 5}, 100000);
    for (const auto& r : rep.runs) {
      c.require(r.kind == RunOutcome::Kind::Final,
                "a schedule did not terminate cleanly");
      c.require(r.tree == tree_to_string(*oracle.tree),
                "a schedule disagrees with the leftmost run");
    }
    c.require(rep.confluent, "schedules disagree: " + rep.detail);
  }
  FuzzOptions tiny;
  tiny.max_rules = 2;
  tiny.max_stmts = 2;
  tiny.max_depth = 2;
  int enumerated = 0;
  while (enumerated < 50 && c.ok) {
    Program p = random_program(rng, tiny);
    TreeRef input(random_tree(rng, 4, {"a", "b"}));
    RunOutcome probe = run(p, input, {}, 1000);
    if (probe.kind != RunOutcome::Kind::Final || probe.steps > 12) continue;
    EnumResult res = enumerate_schedules(p, input, 300000, 48);
    c.require(!res.error, "enumeration hit an evaluation error");
    c.require(!res.exploded, "enumeration exceeded the state budget");
    c.require(res.outcomes.size() == 1, "multiple normal forms reached");
    if (c.ok)
      c.require(*res.outcomes.begin() == tree_to_string(*probe.tree),
                "enumerated normal form differs from the leftmost run");
    ++enumerated;
  }
  c.finish();
}

// 5. The if-resolution relation has unique normal forms: every rewrite
// order on 500 random if-configurations reaches the same one.
void criterion5() {
  Check c{"5. unique if-normal forms (500 configurations)", 120.0};
  std::mt19937_64 rng(55);
  EvalEnv env{EvalMode::V2, false};
  for (int i = 0; i < 500 && c.ok; ++i) {
    TreeRef input(random_tree(rng, 6, {"a", "b"}));
    Context ctx = initial_context(input);
    if (i % 3 == 0) ctx.env["v"] = Value{{Item{Counter{1}}}};
    if (i % 3 == 1) ctx.env["v"] = Value{};
    Configuration cfg = random_if_config(rng, ctx, 6);
    EnumResult res = enumerate_if_orders(cfg, env, 200000);
    c.require(!res.error && !res.exploded, "if enumeration failed");
    c.require(res.outcomes.size() == 1, "distinct if-normal forms reached");
  }
  c.finish();
}

// 6. The DAG evaluation of 1.0 programs unfolds to the direct result.
void criterion6() {
  Check c{"6. dag/direct equivalence (200 fuzzed + 20 handwritten)", 300.0};
  std::mt19937_64 rng(66);
  for (int i = 0; i < 200 && c.ok; ++i) {
    Program p = random_program(rng);
    TreeRef input(random_tree(rng, 7, {"a", "b", "c"}));
    c.require(classify_version(p) == Version::V1Program, "fuzzer produced v2");
    RunOutcome direct = run(p, input, {}, 200000);
    c.require(direct.kind == RunOutcome::Kind::Final, "direct run failed");
    if (!c.ok) break;
    DagOutcome d = evaluate_dag(p, input);
    c.require(d.kind == DagOutcome::Kind::Completed, "dag evaluation failed");
    if (c.ok)
      c.require(is_isomorphic(*unfold(d.dag, 50'000'000), *direct.tree),
                "dag unfolding differs from the direct run");
  }
  const char* handwritten[] = {
      "",
      "template r match (/*) { vcopy (child::*) }",
      "template r match (/*) { vcopy (/*) }",
      "template r match (//*) { cons n { apply (child::*) } }",
      "template r match (/*) { tcopy Input }",
      "template r match (/*) { tree y { cons a { } } tcopy y tcopy y }",
      "template r match (/*) { tree y { vcopy (child::*) } tree z { tcopy y tcopy y } tcopy z }",
      "template r match (/*) { foreach (child::*) { vcopy (. intersect //*) } }",
      "template r match (/*) { foreach (child::*) { if (position() = 1) { cons hd { } } else { vcopy (. intersect //*) } } }",
      "template r match (/*) { val n (1) if ($n = 1) { cons y { } } else { cons n { } } }",
      "template r match (/*) { foreach (child::*) { val n (position()) "
      "val m ($n+1) if ($m = 1) { } else { cons ok { } } } }",
      "template r match (/*) { apply (child::*[1]) }\n"
      "template s match (//*) { cons k { } if (following-sibling::*[1]) { apply (following-sibling::*[1]) } else { } }",
      "template r match (/*) { apply (child::*) mode m }\n"
      "template s match (//*) mode m { vcopy (. intersect //*) }",
      "template r match (//*) { if (name()='a') { cons hit { } } else { apply (child::*) } }",
      "template r match (/*) { if (child::*[1]) { cons some { } } else { cons none { } } }",
      "template r match (/*) { val all (//*) foreach ($all) { cons n { } } }",
      "template r match (/*) { vcopy ((child::*) except (child::*[1])) }",
      "template r match (/*) { vcopy (child::* | /*) }",
      "template r match (/*) { tree y { foreach (child::*) { vcopy (. intersect //*) cons sep { } } } tcopy y }",
      "template r match (//*) { cons w { apply (child::*) apply (child::*) } }",
  };
  int count = 0;
  for (const char* text : handwritten) {
    if (!c.ok) break;
    Program p = parse_program(text);
    c.require(classify_version(p) == Version::V1Program, "handwritten case is v2");
    for (const char* in : {"a{b{}c{a{}b{}}c{}}", "a{}", "b{a{}b{a{}}}"}) {
      TreeRef input(parse_tree(in));
      RunOutcome direct = run(p, input, {}, 200000);
      c.require(direct.kind == RunOutcome::Kind::Final, "direct run failed");
      if (!c.ok) break;
      DagOutcome d = evaluate_dag(p, input);
      c.require(d.kind == DagOutcome::Kind::Completed, "dag evaluation failed");
      if (c.ok)
        c.require(is_isomorphic(*unfold(d.dag, 50'000'000), *direct.tree),
                  std::string("handwritten mismatch: ") + text);
    }
    ++count;
  }
  c.require(count == 20, "expected 20 handwritten programs");
  c.finish();
}

// 7. Ten looping 1.0 programs: the dag evaluator proves nontermination with
// a valid witness while the direct engine only ever exhausts budgets.
void criterion7() {
  Check c{"7. nontermination detection (10 looping programs)", 600.0};
  const char* loops[] = {
      "template r match (/*) { call r }",
      "template r match (/*) { call s }\ntemplate s match (//*) { call r }",
      "template r match (/*) { call s }\ntemplate s match (//*) { call t }\n"
      "template t match (//*) { call r }",
      "template r match (/*) { apply (/*) }",
      "template e match (/*) { apply (. intersect //*) mode m }\n"
      "template r match (//*) mode m { apply (. intersect //*) mode m }",
      "template r match (/*) { foreach (/*) { call r } }",
      "template r match (/*) { val x (1) call r }",
      "template r match (/*) { tree y { cons a { } } call r }",
      "template r match (/*) { val x (1) call s }\n"
      "template s match (//*) { if ($x = 1) { call s } else { } }",
      "template r match (/*) { val x (1) call s }\n"
      "template s match (//*) { val x ($x+1) call t }\n"
      "template t match (//*) { val x ($x-1) call s }",
  };
  TreeRef input(parse_tree("a{b{}}"));
  for (const char* text : loops) {
    if (!c.ok) break;
    Program p = parse_program(text);
    c.require(classify_version(p) == Version::V1Program, "loop program is v2");
    DagOutcome d = evaluate_dag(p, input);
    c.require(d.kind == DagOutcome::Kind::Nontermination,
              std::string("no nontermination reported for: ") + text);
    if (d.kind == DagOutcome::Kind::Nontermination) {
      c.require(d.witness.size() >= 2, "witness too short");
      c.require(d.witness.front().rule == d.witness.back().rule,
                "witness endpoints name different rules");
      c.require(d.witness_projections.front() == d.witness_projections.back(),
                "witness endpoints differ outside the store");
    }
    for (std::uint64_t budget : {10000ull, 100000ull, 1000000ull}) {
      RunOutcome direct = run(p, input, {}, budget);
      c.require(direct.kind == RunOutcome::Kind::StepLimit,
                "direct engine terminated within budget " + std::to_string(budget));
    }
  }
  c.finish();
}

// 8. Doubling programs: linear dags for exponential trees.
void criterion8() {
  Check c{"8. exponential-output compression (doubling 10/20/30)", 10.0};
  TreeRef leaf(parse_tree("x{}"));
  for (int k : {10, 20, 30}) {
    Program p = gen_doubling(k);
    c.require(classify_version(p) == Version::V1Program, "doubling program is v2");
    DagOutcome d = evaluate_dag(p, leaf);
    c.require(d.kind == DagOutcome::Kind::Completed, "dag evaluation failed");
    if (!c.ok) break;
    DagStats st = dag_stats(d.dag);
    c.require(st.entries <= static_cast<std::uint64_t>(k) + 2,
              "entry count exceeds k+2 for k=" + std::to_string(k));
    c.require(st.unfolded_leaves == mpz_class(1) << k,
              "leaf count is not 2^k for k=" + std::to_string(k));
    if (k == 10) {
      Tree u = unfold(d.dag);
      c.require(u->node_count() == 1025, "k=10 did not materialize 1024 leaves");
    }
    if (k == 30) {
      bool refused = false;
      try {
        unfold(d.dag);
      } catch (const UnfoldLimit&) {
        refused = true;
      }
      c.require(refused, "k=30 unfolded despite the default limit");
    }
  }
  c.finish();
}

// 9. The palindrome LBA program is 1.0 and the dag evaluator decides it in
// agreement with the reference simulation.
void criterion9() {
  Check c{"9. linear-space machine in 1.0 (palindromes)", 60.0};
  TuringMachine pal = parse_machine(slurp("palindrome_lba.tm"));
  Program p = gen_lba_program(pal);
  c.require(classify_version(p) == Version::V1Program, "LBA program is not v1");
  const char* words[] = {"",   "a",   "ab",   "aa",   "aba",
                         "abb", "abba", "babab", "baab", "abab"};
  for (const char* w : words) {
    if (!c.ok) break;
    std::vector<Label> cells = {"lm"};
    for (const char* ch = w; *ch; ++ch) cells.emplace_back(1, *ch);
    cells.emplace_back("rm");
    TmResult expect = tm_run(pal, cells, 100000, /*lba=*/true);
    bool accepted = expect.kind == TmResult::Kind::Output;
    DagOutcome d = evaluate_dag(p, TreeRef(flattree(cells)));
    c.require(d.kind == DagOutcome::Kind::Completed,
              std::string("dag evaluation failed on ") + w);
    if (c.ok) {
      std::string got = tree_to_string(*unfold(d.dag));
      c.require(got == (accepted ? "doc{accept{}}" : "doc{reject{}}"),
                std::string("verdict mismatch on '") + w + "': " + got);
    }
  }
  c.finish();
}

// 10. Input-only builtins cannot see temporary trees.
void criterion10() {
  Check c{"10. input-only obliviousness (1000 contexts)", 60.0};
  const char* builtins[] = {
      "/*",          "child::*",    "//*",
      "child::*[1]", "following-sibling::*[1]", "preceding-sibling::*[1]",
      ".",           "position()",  "()",
      "1",           "$x",          "$x+1",
      "$x-1",        "$x = 1",      "name()='a'",
      "child::* | /*", "child::* intersect //*", "//* except child::*",
      ". intersect //*",
  };
  std::vector<XExprPtr> exprs;
  for (const char* s : builtins) {
    exprs.push_back(parse_expr(s));
    if (!is_input_only(*exprs.back(), EvalMode::V1)) {
      c.require(false, std::string(s) + " is not flagged input-only");
      c.finish();
      return;
    }
  }
  std::mt19937_64 rng(110);
  int violations = 0;
  for (int round = 0; round < 1000; ++round) {
    TreeRef input(random_tree(rng, 10, {"a", "b", "c"}));
    Context ctx = random_context_with_temps(rng, input, 1 + static_cast<int>(rng() % 3),
                                            {"a", "b", "c"});
    ctx.env["x"] = Value{{Item{Counter{1}}}};
    Context hat = project_input_only(ctx);
    for (const auto& e : exprs) {
      Value a, b;
      bool da = true, db = true;
      try {
        a = eval(*e, ctx, EvalMode::V1);
      } catch (const EvalUndefined&) {
        da = false;
      }
      try {
        b = eval(*e, hat, EvalMode::V1);
      } catch (const EvalUndefined&) {
        db = false;
      }
      if (da != db || (da && !(a == b))) ++violations;
    }
  }
  c.require(violations == 0, std::to_string(violations) + " violations");
  c.finish();
}

}  // namespace

int main() {
  std::printf("acceptance suite\n");
  criterion1();
  criterion2();
  criterion3();
  criterion4();
  criterion5();
  criterion6();
  criterion7();
  criterion8();
  criterion9();
  criterion10();
  if (g_failures) {
    std::printf("%d criterion(s) failed\n", g_failures);
    return 1;
  }
  std::printf("all criteria passed\n");
  return 0;
}
