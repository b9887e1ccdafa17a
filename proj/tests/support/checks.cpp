#include "checks.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <set>

#include "fixtures.hpp"
#include "nlg_cases.hpp"

namespace misp::testing {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string fmt(const char* format, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, format, args...);
  return buf;
}

const harness::Dataset& bundled(sql::Mode mode) {
  static const harness::Dataset wikisql = harness::load_dataset(
      data_dir() + "/tables.jsonl", data_dir() + "/examples.jsonl", sql::Mode::WikiSql);
  static const harness::Dataset spider = harness::load_dataset(
      data_dir() + "/tables.jsonl", data_dir() + "/spider_examples.jsonl", sql::Mode::Spider);
  return mode == sql::Mode::WikiSql ? wikisql : spider;
}

const parser::HeuristicParser& heuristic() {
  static const parser::HeuristicParser p;
  return p;
}

harness::EvalOptions options(detect::Kind kind, double threshold = 0.95, int patience = 3) {
  harness::EvalOptions o;
  o.agent.detector.kind = kind;
  o.agent.k = 3;
  o.patience = patience;
  if (kind == detect::Kind::Prob || kind == detect::Kind::Dropout) harness::set_threshold(o.agent, threshold);
  return o;
}

// (example index, slot) pairs that received at least one question.
std::set<std::pair<std::size_t, sql::SlotId>> asked_slots(const harness::EvalReport& r) {
  std::set<std::pair<std::size_t, sql::SlotId>> out;
  for (std::size_t i = 0; i < r.rows.size(); ++i) {
    for (const auto& e : r.rows[i].transcript.events) out.insert({i, e.slot});
  }
  return out;
}

}  // namespace

CheckResult check_detector_off() {
  const auto start = Clock::now();
  std::string failures;
  std::size_t examples = 0;
  for (sql::Mode mode : {sql::Mode::WikiSql, sql::Mode::Spider}) {
    const auto& ds = bundled(mode);
    const auto report = harness::evaluate(ds, heuristic(), options(detect::Kind::Off));
    long qm = 0;
    for (std::size_t i = 0; i < ds.examples.size(); ++i) {
      const auto& ex = ds.examples[i];
      parser::ParseContext ctx{ex.id, ex.question, ds.tables.find(ex.table_id), mode};
      const auto unassisted = sql::assemble(parser::parse_unassisted(heuristic(), ctx), {ex.table_id});
      const auto& row = report.rows[i];
      if (!row.transcript.final_query || !(*row.transcript.final_query == unassisted)) {
        failures += " " + ex.id + ":differs";
      }
      qm += sql::query_match(unassisted, ex.gold) ? 1 : 0;
    }
    if (report.total_questions != 0) failures += fmt(" %s:%ld questions", sql::to_string(mode).data(), report.total_questions);
    if (report.acc_qm != static_cast<double>(qm) / static_cast<double>(ds.examples.size())) {
      failures += " acc_qm differs from the unassisted parser";
    }
    examples += ds.examples.size();
  }
  const double elapsed = seconds_since(start);
  const bool pass = failures.empty() && elapsed < 10.0;
  return {pass, fmt("%zu examples, Avg #q 0, identical final queries; %.2f s", examples, elapsed) +
                    (failures.empty() ? "" : ";" + failures)};
}

CheckResult check_improvement() {
  const auto& ds = bundled(sql::Mode::WikiSql);
  const auto base = harness::evaluate(ds, heuristic(), options(detect::Kind::Off));
  const auto interactive = harness::evaluate(ds, heuristic(), options(detect::Kind::Prob, 0.95));
  const auto ranks = harness::gold_ranks(ds, heuristic());
  const double gain = interactive.acc_qm - base.acc_qm;
  const double top4 = ranks.within(4);
  return {gain >= 0.05 && top4 >= 0.95,
          fmt("Acc_qm %.4f -> %.4f (+%.4f, need >= 0.05), Avg #q %.3f; gold within top-4 for %.2f%% of %ld slots",
              base.acc_qm, interactive.acc_qm, gain, interactive.avg_questions, 100 * top4, ranks.slots)};
}

CheckResult check_unlimit_bound() {
  const auto start = Clock::now();
  constexpr int K = 3;
  std::string failures;
  std::size_t instances = 0;
  std::size_t dropped = 0;
  for (auto [mode, count, seed] : {std::tuple{sql::Mode::WikiSql, 40, 101ULL}, std::tuple{sql::Mode::Spider, 20, 202ULL}}) {
    const auto suite = scripted_suite(seed, count, mode, K + 1);
    const auto all = harness::unlimit_run(suite.dataset, suite.parser(), K, 0);
    if (all.acc_qm != 1.0) failures += fmt(" %s Acc_qm %.4f", sql::to_string(mode).data(), all.acc_qm);
    instances += suite.instances.size();
    std::mt19937_64 rng(seed);
    for (std::size_t i = 0; i < suite.instances.size(); ++i) {
      const auto candidates = rerankable(suite.instances[i], K + 2);
      if (candidates.empty()) continue;
      auto variant = suite;
      auto& slot = variant.instances[i].slots[candidates[rng() % candidates.size()]];
      slot.rank = K + 2;
      const auto r = harness::unlimit_run(variant.dataset, variant.parser(), K, 0);
      for (std::size_t j = 0; j < r.rows.size(); ++j) {
        if (r.rows[j].correct_qm == (j == i)) {
          failures += " " + variant.instances[i].example.id + "@" + sql::to_string(slot.slot) + "->" +
                      r.rows[j].example_id;
        }
      }
      ++dropped;
    }
  }
  const double elapsed = seconds_since(start);
  return {failures.empty() && instances >= 50 && elapsed < 5.0,
          fmt("%zu instances at Acc_qm 1.0; %zu rank-K+2 variants each drop exactly their example; %.2f s", instances,
              dropped, elapsed) +
              (failures.empty() ? "" : ";" + failures)};
}

CheckResult check_threshold_monotonicity() {
  std::string failures;
  std::size_t runs = 0;
  for (auto [mode, seed] : {std::pair{sql::Mode::WikiSql, 303ULL}, std::pair{sql::Mode::Spider, 404ULL}}) {
    // Ranks up to 6 leave some slots unrecoverable, so accuracy has room to vary.
    const auto suite = scripted_suite(seed, 60, mode, 6);
    const auto parser = suite.parser();
    std::set<std::pair<std::size_t, sql::SlotId>> prev_asked;
    double prev_acc = -1;
    for (int step = 0; step <= 9; ++step) {
      const double p_star = 0.5 + 0.05 * step;
      const auto r = harness::evaluate(suite.dataset, parser, options(detect::Kind::Prob, p_star, 0));
      const auto asked = asked_slots(r);
      for (const auto& a : prev_asked) {
        if (!asked.contains(a)) {
          failures += fmt(" %s p*=%.2f drops %s", sql::to_string(mode).data(), p_star, sql::to_string(a.second).c_str());
          break;
        }
      }
      if (r.acc_qm < prev_acc) failures += fmt(" %s Acc_qm falls at p*=%.2f", sql::to_string(mode).data(), p_star);
      prev_asked = asked;
      prev_acc = r.acc_qm;
      ++runs;
    }
  }
  long zero_variance_questions = 0;
  for (double s_star : {0.001, 0.01, 0.05, 0.2}) {
    auto o = options(detect::Kind::Dropout, s_star);
    o.agent.detector.perturbation.drop_rate = 0.0;
    zero_variance_questions += harness::evaluate(bundled(sql::Mode::WikiSql), heuristic(), o).total_questions;
    ++runs;
  }
  if (zero_variance_questions != 0) failures += fmt(" zero-variance dropout asked %ld", zero_variance_questions);
  return {failures.empty(), fmt("%zu runs: asked sets nested and Acc_qm non-decreasing over p* 0.50..0.95; "
                                "zero-variance dropout asks %ld questions",
                                runs, zero_variance_questions) +
                                (failures.empty() ? "" : ";" + failures)};
}

CheckResult check_budget() {
  constexpr double kTolerance = 0.015;
  const auto& ds = bundled(sql::Mode::WikiSql);
  const auto base = options(detect::Kind::Prob);
  bool pass = true;
  std::string detail;
  for (double target : {0.5, 1.0, 1.5, 2.0}) {
    const auto result = harness::budget_search(ds, heuristic(), base, target, kTolerance);
    if (!result.feasible) {
      pass = pass && !result.message.empty();
      detail += fmt(" %.1f:infeasible(%s)", target, result.message.c_str());
      continue;
    }
    auto o = base;
    harness::set_threshold(o.agent, result.threshold);
    const double measured = harness::evaluate(ds, heuristic(), o).avg_questions;
    const bool ok = std::fabs(measured - target) <= kTolerance;
    pass = pass && ok;
    detail += fmt(" %.1f->p*=%.4f Avg#q=%.4f%s", target, result.threshold, measured, ok ? "" : "(out of range)");
  }
  return {pass, "prob detector:" + detail};
}

CheckResult check_nlg_golden() {
  const auto& grammar = nlg::Grammar::builtin();
  std::string failures;
  std::set<std::string> rules;
  std::size_t strings = 0;
  auto expect = [&](const std::string& rule, const nlg::Question& q, const std::string& expected) {
    ++strings;
    rules.insert(rule);
    if (q.text != expected || q.rule_id != rule) failures += " [" + rule + "] got \"" + q.text + "\"";
  };
  for (const auto& c : nlg_reference_cases()) expect(c.rule, grammar.generate(c.slot, c.value, c.ctx), c.expected);
  for (const auto& c : nlg_rule_cases()) expect(c.rule, grammar.generate(c.slot, c.value, c.ctx), c.expected);
  for (const auto& c : nlg_column_cases()) {
    ++strings;
    rules.insert(c.rule);
    const auto got = grammar.describe_column(c.column, c.ctx);
    if (got != c.expected) failures += " [" + c.rule + "] got \"" + got + "\"";
  }
  for (const auto& r : grammar.rules()) {
    if (!rules.contains(r.id)) failures += " rule " + r.id + " has no golden string";
  }
  std::size_t probes = 0;
  const auto coverage = nlg_coverage_failures(grammar, &probes);
  for (std::size_t i = 0; i < coverage.size() && i < 5; ++i) failures += " " + coverage[i];
  return {failures.empty(), fmt("%zu golden strings over %zu rules; %zu coverage probes, %zu failures", strings,
                                rules.size(), probes, coverage.size()) +
                                (failures.empty() ? "" : ";" + failures)};
}

CheckResult check_patience() {
  std::string failures;
  harness::SimUser automaton(sql::SqlQuery{}, 3);
  for (bool outcome : {false, false, true, false}) automaton.update_patience(outcome);
  if (automaton.failures() != 1 || automaton.departed()) failures += " fail,fail,correct,fail";
  harness::SimUser leaving(sql::SqlQuery{}, 3);
  for (int i = 0; i < 3; ++i) leaving.update_patience(false);
  if (!leaving.departed()) failures += " three fails did not depart";

  // SELECT max(age) FROM grid WHERE city = 'x' AND team = 'y'
  sql::SqlQuery gold;
  gold.table_refs = {"grid"};
  gold.select = {sql::Agg::Max, "age"};
  gold.where = {{"city", sql::Op::Eq, std::string("x")}, {"team", sql::Op::Eq, std::string("y")}};
  agent::AgentConfig config;
  config.detector.kind = detect::Kind::Unlimit;
  const auto table = grid_table();
  auto session = [&](const std::vector<int>& ranks, harness::SimUser& user) {
    const auto suite = suite_of({scripted_instance("p", gold, sql::Mode::WikiSql, ranks)}, sql::Mode::WikiSql);
    return agent::run_session(suite.parser(), nlg::Grammar::builtin(), user, table, "p", "patience", config);
  };

  harness::SimUser stays(gold, 3);
  const auto kept = session({5, 5, 2, 5}, stays);
  if (stays.departed() || kept.transcript.early_exit || kept.transcript.events.size() != 18) {
    failures += fmt(" scripted fail,fail,correct,fail: departed=%d questions=%zu", stays.departed(),
                    kept.transcript.events.size());
  }

  harness::SimUser leaves(gold, 3);
  const auto left = session({5, 5, 5}, leaves);
  const auto& events = left.transcript.events;
  const std::set<sql::SlotId> first_three = {{sql::SlotKind::SelectCol, 0}, {sql::SlotKind::SelectAgg, 0},
                                             {sql::SlotKind::WhereCol, 0}};
  bool only_first_three = true;
  for (const auto& e : events) only_first_three = only_first_three && first_three.contains(e.slot);
  const bool complete = left.transcript.final_query && left.state.terminal &&
                        left.state.committed.size() == sql::decompose(gold, sql::Mode::WikiSql).size() &&
                        left.query.where.size() == 2;
  if (!leaves.departed() || !left.transcript.early_exit || events.size() != 12 || !only_first_three || !complete) {
    failures += fmt(" three failed turns: departed=%d questions=%zu complete=%d", leaves.departed(), events.size(),
                    complete);
  }
  return {failures.empty(),
          fmt("counter 1 after fail,fail,correct,fail (%zu questions, user stays); departure after 3 failed turns "
              "with %zu questions, none after, final query complete",
              kept.transcript.events.size(), events.size()) +
              (failures.empty() ? "" : ";" + failures)};
}

CheckResult check_executor_oracle() {
  std::mt19937_64 rng(20240611);
  int disagreements = 0;
  int canonical_mismatch = 0;
  int nonempty = 0;
  std::string first;
  for (int n = 0; n < 1000; ++n) {
    const auto table = random_table(rng, "r" + std::to_string(n));
    const auto query = random_and_query(rng, table);
    const auto store = store_of({table});
    const auto got = db::execute(query, store);
    const auto rows = sorted_rows(got.rows);
    if (rows != naive_execute(query, table)) {
      ++disagreements;
      if (first.empty()) first = sql::render_sql(query);
    }
    if (sorted_rows(db::execute(sql::canonicalize(query), store).rows) != rows) ++canonical_mismatch;
    nonempty += rows.empty() ? 0 : 1;
  }
  return {disagreements == 0 && canonical_mismatch == 0,
          fmt("1000 random AND-only queries (%d non-empty): %d oracle disagreements, %d canonicalization mismatches",
              nonempty, disagreements, canonical_mismatch) +
              (first.empty() ? "" : "; first: " + first)};
}

CheckResult check_accounting() {
  struct Run {
    std::string label;
    const harness::Dataset* dataset;
    const parser::Parser* parser;
    harness::EvalOptions options;
  };
  const auto suite = scripted_suite(505, 60, sql::Mode::Spider, 6);
  const auto scripted = suite.parser();
  std::vector<Run> runs = {
      {"wikisql prob", &bundled(sql::Mode::WikiSql), &heuristic(), options(detect::Kind::Prob, 0.95)},
      {"wikisql dropout", &bundled(sql::Mode::WikiSql), &heuristic(), options(detect::Kind::Dropout, 0.05)},
      {"wikisql unlimit", &bundled(sql::Mode::WikiSql), &heuristic(), options(detect::Kind::Unlimit)},
      {"spider prob", &bundled(sql::Mode::Spider), &heuristic(), options(detect::Kind::Prob, 0.95)},
      {"scripted unlimit", &suite.dataset, &scripted, options(detect::Kind::Unlimit)},
      {"scripted prob", &suite.dataset, &scripted, options(detect::Kind::Prob, 0.8, 1)},
  };
  std::string failures;
  long questions = 0;
  for (const auto& run : runs) {
    const auto report = harness::evaluate(*run.dataset, *run.parser, run.options);
    if (report.right + report.wrong_solved + report.wrong_unsolved != report.total_questions) {
      failures += " " + run.label + ": categories do not sum";
    }
    // Recount from the serialized transcripts.
    const auto json = harness::to_json(report, true);
    long right = 0;
    long total = 0;
    for (const auto& row : json.at("rows")) {
      for (const auto& e : row.at("transcript").at("events")) {
        ++total;
        right += e.value("category", std::string{}) == "right" ? 1 : 0;
      }
    }
    const double q_r = total > 0 ? static_cast<double>(right) / static_cast<double>(total) : 0.0;
    if (total != report.total_questions || std::fabs(q_r - report.q_r) > 1e-12 ||
        std::fabs(json.at("q_r").get<double>() - q_r) > 1e-12) {
      failures += fmt(" %s: Q_r %.15f vs recount %.15f", run.label.c_str(), report.q_r, q_r);
    }
    questions += total;
  }
  return {failures.empty(), fmt("%zu runs, %ld questions: categories sum to totals, Q_r recount within 1e-12",
                                runs.size(), questions) +
                                (failures.empty() ? "" : ";" + failures)};
}

std::vector<Criterion> all_criteria() {
  return {
      {"detector-off equivalence", check_detector_off},
      {"improvement under interaction", check_improvement},
      {"unlimit bound", check_unlimit_bound},
      {"threshold monotonicity", check_threshold_monotonicity},
      {"budget matching", check_budget},
      {"nlg golden suite", check_nlg_golden},
      {"patience automaton", check_patience},
      {"executor oracle", check_executor_oracle},
      {"accounting", check_accounting},
  };
}

}  // namespace misp::testing
