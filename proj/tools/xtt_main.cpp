// Command line front end: run programs directly or through the 1.0 DAG
// evaluator, classify and generate programs, fuzz schedules, and inspect
// dag dumps.

#include <CLI11.hpp>
#include <fstream>
#include <iostream>
#include <sstream>

#include "codegen.hpp"
#include "dag.hpp"
#include "fuzz.hpp"

using namespace xtt;

namespace {

// 0 ok, 1 parse/usage, 2 evaluation error, 3 step limit, 4 not a 1.0
// program, 5 nontermination, 6 budget exhausted, 7 check failed
enum ExitCode {
  kOk = 0,
  kParse = 1,
  kEval = 2,
  kStepLimit = 3,
  kNotV1 = 4,
  kNonTermination = 5,
  kBudget = 6,
  kCheckFailed = 7,
};

std::string read_input(const std::string& path) {
  if (path == "-") {
    std::stringstream ss;
    ss << std::cin.rdbuf();
    return ss.str();
  }
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot open " + path);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

void write_output(const std::string& path, const std::string& content) {
  if (path.empty() || path == "-") {
    std::cout << content;
    return;
  }
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot open " + path + " for writing");
  f << content;
}

Program load_program(const std::string& path) {
  return parse_program(read_input(path));
}

TreeRef load_tree(const std::string& path) {
  return TreeRef(parse_tree(read_input(path)));
}

const char* kind_name(StKind k) {
  switch (k) {
    case StKind::Cons: return "cons";
    case StKind::Apply: return "apply";
    case StKind::Call: return "call";
    case StKind::Foreach: return "foreach";
    case StKind::Val: return "val";
    case StKind::Tree: return "tree";
    case StKind::Vcopy: return "vcopy";
    case StKind::Tcopy: return "tcopy";
    case StKind::If: return "if";
  }
  return "?";
}

int run_outcome_exit(const RunOutcome& o) {
  switch (o.kind) {
    case RunOutcome::Kind::Final:
      return kOk;
    case RunOutcome::Kind::StepLimit:
      std::cerr << "error: step limit reached after " << o.steps << " steps\n";
      return kStepLimit;
    case RunOutcome::Kind::Error:
      std::cerr << "error: " << o.error << " (statement " << o.error_path << ")\n";
      return kEval;
  }
  return kEval;
}

std::vector<Label> parse_labels(const std::string& csv) {
  std::vector<Label> out;
  std::string cur;
  for (char c : csv + ",") {
    if (c == ',') {
      if (!cur.empty()) out.push_back(cur);
      cur.clear();
    } else if (!std::isspace(static_cast<unsigned char>(c))) {
      cur += c;
    }
  }
  if (out.empty()) throw std::runtime_error("empty label list");
  return out;
}

void print_stats(const DagStats& st) {
  std::cerr << "entries: " << st.entries << "\n"
            << "links: " << st.links << "\n"
            << "interned-contexts: " << st.interned_contexts << "\n"
            << "unfolded-nodes: " << st.unfolded_nodes.get_str() << "\n"
            << "unfolded-leaves: " << st.unfolded_leaves.get_str() << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"tree-transformation template engine"};
  app.require_subcommand(1);

  std::string prog_path, tree_path, out_path, dag_path, labels = "a";
  std::uint64_t seed = 0, max_steps = kDefaultStepBudget;
  std::uint64_t max_nodes = kDefaultUnfoldLimit, seeds = 10;
  bool trace = false, do_unfold = false;
  int doubling_k = 1;

  auto* c_run = app.add_subcommand("run", "rewrite a program to its result tree");
  c_run->add_option("program", prog_path)->required();
  c_run->add_option("tree", tree_path)->required();
  c_run->add_flag("--trace", trace, "log one line per step to stderr");
  c_run->add_option("--seed", seed, "use the random strategy with this seed");
  bool seeded = false;
  c_run->callback([&] { seeded = c_run->count("--seed") > 0; });
  c_run->add_option("--max-steps", max_steps);
  c_run->add_option("--out", out_path);

  auto* c_run10 = app.add_subcommand("run10", "evaluate a 1.0 program into a dag");
  c_run10->add_option("program", prog_path)->required();
  c_run10->add_option("tree", tree_path)->required();
  c_run10->add_flag("--unfold", do_unfold, "materialize the result tree");
  c_run10->add_option("--max-nodes", max_nodes, "unfold size limit");
  c_run10->add_option("--out", out_path);
  c_run10->add_option("--dag-out", dag_path, "also write the dag dump here");

  auto* c_check = app.add_subcommand("check", "classify a program as v1 or v2");
  c_check->add_option("program", prog_path)->required();

  auto* c_gen = app.add_subcommand("gen", "emit a generated program");
  c_gen->require_subcommand(1);
  auto* g_t2s = c_gen->add_subcommand("tree2string");
  g_t2s->add_option("--labels", labels, "comma separated alphabet");
  g_t2s->add_option("--out", out_path);
  auto* g_s2t = c_gen->add_subcommand("string2tree");
  g_s2t->add_option("--labels", labels);
  g_s2t->add_option("--out", out_path);
  auto* g_tm = c_gen->add_subcommand("tm");
  g_tm->add_option("machine", prog_path)->required();
  g_tm->add_option("--out", out_path);
  auto* g_lba = c_gen->add_subcommand("lba");
  g_lba->add_option("machine", prog_path)->required();
  g_lba->add_option("--out", out_path);
  auto* g_dbl = c_gen->add_subcommand("doubling");
  g_dbl->add_option("k", doubling_k)->required();
  g_dbl->add_option("--out", out_path);

  std::vector<std::string> stage_paths;
  auto* c_compose = app.add_subcommand("compose", "chain three programs through modes");
  c_compose->add_option("programs", stage_paths)->expected(3);
  c_compose->add_option("--out", out_path);

  auto* c_fuzz = app.add_subcommand("fuzz", "compare random schedules");
  c_fuzz->add_option("program", prog_path)->required();
  c_fuzz->add_option("tree", tree_path)->required();
  c_fuzz->add_option("--seeds", seeds);
  c_fuzz->add_option("--max-steps", max_steps);

  auto* c_unfold = app.add_subcommand("unfold", "materialize a dag dump");
  c_unfold->add_option("dag", prog_path)->required();
  c_unfold->add_option("tree", tree_path)->required();
  c_unfold->add_option("--max-nodes", max_nodes);
  c_unfold->add_option("--out", out_path);

  auto* c_stats = app.add_subcommand("stats", "size report for a dag dump");
  c_stats->add_option("dag", prog_path)->required();
  c_stats->add_option("tree", tree_path)->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (c_run->parsed()) {
      Program p = load_program(prog_path);
      TreeRef t = load_tree(tree_path);
      Strategy strat = seeded ? Strategy::random(seed) : Strategy::leftmost();
      TraceFn tracer = nullptr;
      if (trace)
        tracer = [](const StepTrace& st) {
          std::cerr << st.index << "\t" << kind_name(st.kind) << "\t" << st.path
                    << "\t" << st.rule << "\t" << st.triple << "\n";
        };
      RunOutcome o = run(p, t, strat, max_steps, tracer);
      if (o.kind != RunOutcome::Kind::Final) return run_outcome_exit(o);
      write_output(out_path, tree_to_string(*o.tree) + "\n");
      return kOk;
    }

    if (c_run10->parsed()) {
      Program p = load_program(prog_path);
      if (classify_version(p) != Version::V1Program) {
        std::cerr << "error: not a 1.0 program (an expression reads temporary "
                     "trees); use `run` instead\n";
        return kNotV1;
      }
      TreeRef t = load_tree(tree_path);
      DagOutcome d = evaluate_dag(p, t);
      switch (d.kind) {
        case DagOutcome::Kind::Nontermination: {
          std::cerr << "nontermination detected; witness cycle:\n";
          for (const DagRef& w : d.witness)
            std::cerr << "  " << w.rule << "@" << w.ctx << "\n";
          return kNonTermination;
        }
        case DagOutcome::Kind::Error:
          std::cerr << "error: " << d.error << "\n";
          return kEval;
        case DagOutcome::Kind::Budget:
          std::cerr << "error: " << d.error << "\n";
          return kBudget;
        case DagOutcome::Kind::Completed:
          break;
      }
      print_stats(dag_stats(d.dag));
      if (!dag_path.empty()) write_output(dag_path, dag_to_string(d.dag));
      if (do_unfold) {
        try {
          Tree u = unfold(d.dag, max_nodes);
          write_output(out_path, tree_to_string(*u) + "\n");
        } catch (const UnfoldLimit& e) {
          std::cerr << "error: " << e.what() << "\n";
          return kBudget;
        }
      } else {
        write_output(out_path, dag_to_string(d.dag));
      }
      return kOk;
    }

    if (c_check->parsed()) {
      Program p = load_program(prog_path);
      std::cout << (classify_version(p) == Version::V1Program ? "v1" : "v2") << "\n";
      return kOk;
    }

    if (c_gen->parsed()) {
      Program p;
      if (g_t2s->parsed())
        p = gen_tree2string(parse_labels(labels));
      else if (g_s2t->parsed())
        p = gen_string2tree(parse_labels(labels));
      else if (g_tm->parsed())
        p = gen_tm_program(parse_machine(read_input(prog_path)));
      else if (g_lba->parsed())
        p = gen_lba_program(parse_machine(read_input(prog_path)));
      else
        p = gen_doubling(doubling_k);
      write_output(out_path, program_to_string(p));
      return kOk;
    }

    if (c_compose->parsed()) {
      Program p = compose(load_program(stage_paths[0]), load_program(stage_paths[1]),
                          load_program(stage_paths[2]));
      write_output(out_path, program_to_string(p));
      return kOk;
    }

    if (c_fuzz->parsed()) {
      Program p = load_program(prog_path);
      TreeRef t = load_tree(tree_path);
      std::vector<std::uint64_t> seed_list;
      for (std::uint64_t s = 1; s <= seeds; ++s) seed_list.push_back(s);
      ConfluenceReport rep = fuzz_confluence(p, t, seed_list, max_steps);
      std::size_t agreeing = 0;
      for (const auto& r : rep.runs)
        if (r.kind == rep.runs.front().kind && r.tree == rep.runs.front().tree)
          ++agreeing;
      if (rep.confluent) {
        if (rep.runs.front().kind == RunOutcome::Kind::Final)
          std::cout << "confluent: " << agreeing << "/" << rep.runs.size()
                    << " isomorphic\n";
        else
          std::cout << "agreeing: " << agreeing << "/" << rep.runs.size()
                    << " (no terminating runs)\n";
        return kOk;
      }
      std::cout << "NOT confluent: " << rep.detail << "\n";
      return kCheckFailed;
    }

    if (c_unfold->parsed() || c_stats->parsed()) {
      TreeRef t = load_tree(tree_path);
      Dag dag = parse_dag(read_input(prog_path), t);
      if (c_stats->parsed()) {
        print_stats(dag_stats(dag));
        return kOk;
      }
      try {
        Tree u = unfold(dag, max_nodes);
        write_output(out_path, tree_to_string(*u) + "\n");
      } catch (const UnfoldLimit& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kBudget;
      }
      return kOk;
    }
  } catch (const ParseError& e) {
    std::cerr << "parse error: " << e.what() << "\n";
    return kParse;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kParse;
  }
  return kParse;
}
