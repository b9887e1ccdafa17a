#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>

#include "misp/harness.hpp"
#include "misp/service.hpp"

#ifndef MISP_DEFAULT_DATA_DIR
#define MISP_DEFAULT_DATA_DIR "data"
#endif

namespace fs = std::filesystem;
using namespace misp;

namespace {

struct Options {
  std::string tables = std::string(MISP_DEFAULT_DATA_DIR) + "/tables.jsonl";
  std::string examples;
  std::string mode = "wikisql";
  std::string script;
  double temperature = 1.0;
  std::string detector = "prob";
  double p_star = 0.95;
  double s_star = 0.05;
  int k = 3;
  std::uint64_t seed = 0;
  int patience = 3;
  int passes = 10;
  double drop_rate = 0.1;
  int threads = 0;
};

sql::Mode mode_of(const Options& o) {
  const auto m = sql::parse_mode(o.mode);
  if (!m) throw CLI::ValidationError("--mode", "expected wikisql or spider");
  return *m;
}

std::string examples_path(const Options& o) {
  if (!o.examples.empty()) return o.examples;
  return std::string(MISP_DEFAULT_DATA_DIR) +
         (mode_of(o) == sql::Mode::Spider ? "/spider_examples.jsonl" : "/examples.jsonl");
}

std::unique_ptr<parser::Parser> make_parser(const Options& o) {
  if (!o.script.empty()) return std::make_unique<parser::ScriptedParser>(parser::ScriptedParser::from_file(o.script));
  return std::make_unique<parser::HeuristicParser>(parser::HeuristicOptions{o.temperature});
}

agent::AgentConfig agent_config(const Options& o) {
  agent::AgentConfig c;
  const auto kind = detect::parse_kind(o.detector);
  if (!kind) throw CLI::ValidationError("--detector", "expected prob, dropout, unlimit or off");
  c.detector.kind = *kind;
  c.detector.p_star = o.p_star;
  c.detector.s_star = o.s_star;
  c.detector.perturbation.passes = o.passes;
  c.detector.perturbation.drop_rate = o.drop_rate;
  c.k = o.k;
  c.seed = o.seed;
  c.mode = mode_of(o);
  c.validate();
  return c;
}

harness::EvalOptions eval_options(const Options& o, std::string label) {
  harness::EvalOptions e;
  e.agent = agent_config(o);
  e.patience = o.patience;
  e.threads = o.threads;
  e.label = std::move(label);
  return e;
}

std::string system_label(const agent::AgentConfig& c) {
  char buf[64];
  switch (c.detector.kind) {
    case detect::Kind::Off: return "no interaction";
    case detect::Kind::Unlimit: return "Unlimit" + std::to_string(c.k);
    case detect::Kind::Prob: std::snprintf(buf, sizeof buf, "prob p*=%g", c.detector.p_star); return buf;
    case detect::Kind::Dropout: std::snprintf(buf, sizeof buf, "dropout s*=%g", c.detector.s_star); return buf;
  }
  return "?";
}

void write_outputs(const std::string& dir, const std::vector<harness::EvalReport>& reports) {
  fs::create_directories(dir);
  nlohmann::json all = nlohmann::json::array();
  for (const auto& r : reports) all.push_back(harness::to_json(r, false));
  std::ofstream(dir + "/report.json") << all.dump(2) << '\n';
  std::ofstream(dir + "/table.txt") << harness::render_table(reports);
  for (std::size_t i = 0; i < reports.size(); ++i) {
    const std::string stem = dir + "/run" + std::to_string(i);
    std::ofstream(stem + ".json") << harness::to_json(reports[i]).dump() << '\n';
    std::ofstream csv(stem + "_rows.csv");
    harness::write_rows_csv(reports[i], csv);
    std::ofstream transcripts(stem + "_transcripts.jsonl");
    for (const auto& row : reports[i].rows) transcripts << agent::to_json(row.transcript).dump() << '\n';
  }
}

int run_ingest(const Options& o) {
  const auto data = harness::load_dataset(o.tables, examples_path(o), mode_of(o));
  std::size_t failures = 0;
  for (const auto& ex : data.examples) {
    try {
      sql::validate(ex.gold);
      if (data.tables.find(ex.table_id) == nullptr) throw std::runtime_error("unknown table " + ex.table_id);
      db::execute(ex.gold, data.tables);
    } catch (const std::exception& e) {
      std::cerr << ex.id << ": " << e.what() << "\n";
      ++failures;
    }
  }
  std::cout << data.tables.size() << " tables, " << data.examples.size() << " examples, " << failures
            << " invalid\n";
  return failures == 0 ? 0 : 1;
}

int run_simulate(const Options& o, const std::string& out, bool baseline) {
  const auto data = harness::load_dataset(o.tables, examples_path(o), mode_of(o));
  const auto parser = make_parser(o);
  std::vector<harness::EvalReport> reports;
  const auto config = agent_config(o);
  if (baseline && config.detector.kind != detect::Kind::Off) {
    Options off = o;
    off.detector = "off";
    reports.push_back(harness::evaluate(data, *parser, eval_options(off, "no interaction")));
  }
  reports.push_back(harness::evaluate(data, *parser, eval_options(o, system_label(config))));
  std::cout << harness::render_table(reports);
  if (!out.empty()) write_outputs(out, reports);
  return 0;
}

int run_budget(const Options& o, const std::vector<double>& targets, double tolerance, const std::string& out) {
  const auto data = harness::load_dataset(o.tables, examples_path(o), mode_of(o));
  const auto parser = make_parser(o);
  const auto base = eval_options(o, "");
  bool all_feasible = true;
  nlohmann::json results = nlohmann::json::array();
  std::vector<harness::EvalReport> reports;
  for (double target : targets) {
    auto r = harness::budget_search(data, *parser, base, target, tolerance);
    r.report.label = system_label(r.report.rows.empty() ? base.agent : [&] {
      auto c = base.agent;
      harness::set_threshold(c, r.threshold);
      return c;
    }());
    std::cout << "target " << target << ": " << r.message << "\n";
    all_feasible = all_feasible && r.feasible;
    results.push_back({{"target", target},
                       {"tolerance", tolerance},
                       {"feasible", r.feasible},
                       {"threshold", r.threshold},
                       {"avg_questions", r.report.avg_questions},
                       {"message", r.message},
                       {"report", harness::to_json(r.report, false)}});
    reports.push_back(std::move(r.report));
  }
  std::cout << harness::render_table(reports);
  if (!out.empty()) {
    fs::create_directories(out);
    std::ofstream(out + "/budget.json") << results.dump(2) << '\n';
  }
  return all_feasible ? 0 : 2;
}

int run_serve(const Options& o, const std::string& addr, const std::string& log, int preview) {
  const auto colon = addr.rfind(':');
  if (colon == std::string::npos) throw CLI::ValidationError("--addr", "expected HOST:PORT");
  const std::string host = addr.substr(0, colon);
  const int port = std::stoi(addr.substr(colon + 1));
  const auto tables = db::load_tables_file(o.tables);
  const auto parser = make_parser(o);
  service::SessionManager manager(tables, *parser, agent_config(o));
  manager.set_preview_rows(preview);
  if (!log.empty()) manager.set_transcript_log(log);
  std::cout << "serving " << tables.size() << " tables on http://" << addr << "\n" << std::flush;
  service::serve(manager, host, port);
  return 0;
}

int run_report(const std::string& in) {
  std::vector<harness::EvalReport> reports;
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(in)) {
    const auto& p = entry.path();
    if (p.extension() == ".json" && p.stem().string().rfind("run", 0) == 0) files.push_back(p);
  }
  std::sort(files.begin(), files.end());
  for (const auto& p : files) {
    std::ifstream f(p);
    reports.push_back(harness::report_from_json(nlohmann::json::parse(f)));
  }
  if (reports.empty()) {
    std::cerr << "no run*.json reports in " << in << "\n";
    return 1;
  }
  std::cout << harness::render_table(reports);
  return 0;
}

int run_diagnose(const Options& o) {
  const auto data = harness::load_dataset(o.tables, examples_path(o), mode_of(o));
  const auto parser = make_parser(o);
  const auto stats = harness::gold_ranks(data, *parser);
  std::printf("slots %ld  top1 %.3f  top2 %.3f  top4 %.3f\n", stats.slots, stats.within(1), stats.within(2),
              stats.within(4));
  for (const auto& [kind, hist] : stats.by_kind) {
    std::printf("  %-18s", kind.c_str());
    for (const auto& [rank, n] : hist) std::printf(" r%d:%ld", rank, n);
    std::printf("\n");
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Interactive text-to-SQL parsing: simulation, budget search and live sessions"};
  app.require_subcommand(1);
  app.set_config("--config", "", "key=value configuration file")->envname("MISP_CONFIG");
  Options o;
  app.add_option("--tables", o.tables, "Tables (JSON lines)");
  app.add_option("--examples", o.examples, "Examples (JSON lines)");
  app.add_option("--mode", o.mode, "wikisql or spider")->check(CLI::IsMember({"wikisql", "spider"}));
  app.add_option("--script", o.script, "Scripted parser configuration (replaces the heuristic parser)");
  app.add_option("--temperature", o.temperature, "Heuristic parser softmax temperature");
  app.add_option("--detector", o.detector, "prob, dropout, unlimit or off")
      ->check(CLI::IsMember({"prob", "dropout", "unlimit", "off"}));
  app.add_option("--p-star", o.p_star, "Probability threshold");
  app.add_option("--s-star", o.s_star, "Dropout stddev threshold");
  app.add_option("--k", o.k, "Alternatives per slot after a negation");
  app.add_option("--seed", o.seed, "Session seed");
  app.add_option("--patience", o.patience, "Failed turns before the simulated user leaves (0: never)");
  app.add_option("--passes", o.passes, "Perturbed passes for the dropout detector");
  app.add_option("--drop-rate", o.drop_rate, "Feature drop rate for the dropout detector");
  app.add_option("--threads", o.threads, "Worker threads for simulation (0: all cores)");

  auto* ingest = app.add_subcommand("ingest", "Load and validate tables and examples");
  ingest->fallthrough();

  std::string out;
  bool no_baseline = false;
  auto* simulate = app.add_subcommand("simulate", "Run the simulated user over a dataset");
  simulate->fallthrough();
  simulate->add_option("--out", out, "Directory for report, rows and transcripts");
  simulate->add_flag("--no-baseline", no_baseline, "Skip the no-interaction row");

  std::vector<double> targets;
  double tolerance = 0.015;
  auto* budget = app.add_subcommand("budget", "Find the threshold matching a question budget");
  budget->fallthrough();
  budget->add_option("--target", targets, "Target Avg #q (repeatable)")->required();
  budget->add_option("--tolerance", tolerance, "Accepted distance from the target");
  budget->add_option("--out", out, "Directory for budget.json");

  std::string addr = "127.0.0.1:8080";
  std::string log;
  int preview = 3;
  auto* serve = app.add_subcommand("serve", "Serve the HTTP session API");
  serve->fallthrough();
  serve->add_option("--addr", addr, "HOST:PORT");
  serve->add_option("--log", log, "Transcript log (JSON lines, appended)");
  serve->add_option("--preview-rows", preview, "Rows shown per table by /api/tables");

  std::string in;
  auto* report = app.add_subcommand("report", "Re-render tables from a simulate output directory");
  report->add_option("--in", in, "simulate --out directory")->required();

  auto* diagnose = app.add_subcommand("diagnose", "Gold-option rank statistics of the parser");
  diagnose->fallthrough();

  CLI11_PARSE(app, argc, argv);
  try {
    if (*ingest) return run_ingest(o);
    if (*simulate) return run_simulate(o, out, !no_baseline);
    if (*budget) return run_budget(o, targets, tolerance, out);
    if (*serve) return run_serve(o, addr, log, preview);
    if (*report) return run_report(in);
    if (*diagnose) return run_diagnose(o);
  } catch (const CLI::Error& e) {
    return app.exit(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
