#include "misp/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <ostream>
#include <set>
#include <thread>

namespace misp::harness {

using sql::SlotKind;

namespace {

bool same_column(std::string_view a, std::string_view b) { return sql::fold_case(a) == sql::fold_case(b); }

// Predicted column of each WHERE (or HAVING) condition in the prefix, by index.
std::map<int, std::string> predicted_columns(const sql::PartialParse& prefix, SlotKind col_kind) {
  std::map<int, std::string> out;
  for (const auto& e : prefix) {
    if (e.slot.kind == col_kind) out[e.slot.index] = std::get<std::string>(e.value);
  }
  return out;
}

// Greedy alignment: each predicted condition (in index order, up to `last`
// inclusive) takes the first unmatched gold condition with the same column.
// Returns predicted index -> gold index for the aligned ones, and the gold usage.
struct Alignment {
  std::map<int, std::size_t> to_gold;
  std::vector<bool> used;
};

Alignment align(const std::vector<sql::Condition>& gold, const std::map<int, std::string>& predicted, int last) {
  Alignment a;
  a.used.assign(gold.size(), false);
  for (const auto& [i, col] : predicted) {
    if (i > last) break;
    for (std::size_t j = 0; j < gold.size(); ++j) {
      if (!a.used[j] && same_column(gold[j].col, col)) {
        a.used[j] = true;
        a.to_gold[i] = j;
        break;
      }
    }
  }
  return a;
}

const sql::Condition* aligned(const std::vector<sql::Condition>& gold, const sql::PartialParse& prefix,
                              SlotKind col_kind, int index) {
  const auto predicted = predicted_columns(prefix, col_kind);
  const Alignment a = align(gold, predicted, index);
  const auto it = a.to_gold.find(index);
  return it == a.to_gold.end() ? nullptr : &gold[it->second];
}

bool unmatched_column(const std::vector<sql::Condition>& gold, const sql::PartialParse& prefix, SlotKind col_kind,
                      int index, const std::string& col) {
  const Alignment a = align(gold, predicted_columns(prefix, col_kind), index - 1);
  for (std::size_t j = 0; j < gold.size(); ++j) {
    if (!a.used[j] && same_column(gold[j].col, col)) return true;
  }
  return false;
}

bool equal(const SlotValue& a, const SlotValue& b) { return sql::slot_values_equal(a, b); }

}  // namespace

bool matches_gold(const sql::SqlQuery& gold, const SlotId& slot, const SlotValue& value,
                  const sql::PartialParse& prefix) {
  const int i = slot.index;
  auto count = [](std::size_t n) { return SlotValue{static_cast<std::int64_t>(n)}; };
  switch (slot.kind) {
    case SlotKind::SelectCol: return equal(value, gold.select.col);
    case SlotKind::SelectAgg: return equal(value, gold.select.agg);
    case SlotKind::WhereCount: return equal(value, count(gold.where.size()));
    case SlotKind::WhereCol:
      return unmatched_column(gold.where, prefix, SlotKind::WhereCol, i, std::get<std::string>(value));
    case SlotKind::WhereOp:
    case SlotKind::WhereVal: {
      const auto* g = aligned(gold.where, prefix, SlotKind::WhereCol, i);
      if (g == nullptr) return false;
      return slot.kind == SlotKind::WhereOp ? equal(value, g->op) : equal(value, g->val);
    }
    case SlotKind::WhereConn: {
      // Connector i joins predicted conditions i and i+1.
      const auto predicted = predicted_columns(prefix, SlotKind::WhereCol);
      const Alignment a = align(gold.where, predicted, i + 1);
      sql::Conn expected = gold.where.size() >= 2 ? gold.where.front().conn : sql::Conn::And;
      const auto lo = a.to_gold.find(i);
      const auto hi = a.to_gold.find(i + 1);
      if (lo != a.to_gold.end() && hi != a.to_gold.end()) {
        expected = gold.where[std::min(lo->second, hi->second)].conn;
      }
      return equal(value, expected);
    }
    case SlotKind::GroupByCount: return equal(value, count(gold.group_by.size()));
    case SlotKind::GroupByCol: {
      std::vector<bool> used(gold.group_by.size(), false);
      for (const auto& e : prefix) {
        if (e.slot.kind != SlotKind::GroupByCol || e.slot.index >= i) continue;
        for (std::size_t j = 0; j < gold.group_by.size(); ++j) {
          if (!used[j] && same_column(gold.group_by[j], std::get<std::string>(e.value))) {
            used[j] = true;
            break;
          }
        }
      }
      for (std::size_t j = 0; j < gold.group_by.size(); ++j) {
        if (!used[j] && same_column(gold.group_by[j], std::get<std::string>(value))) return true;
      }
      return false;
    }
    case SlotKind::HavingCount: return equal(value, count(gold.having.size()));
    case SlotKind::HavingCol:
      return unmatched_column(gold.having, prefix, SlotKind::HavingCol, i, std::get<std::string>(value));
    case SlotKind::HavingAgg:
    case SlotKind::HavingOp:
    case SlotKind::HavingVal: {
      const auto* g = aligned(gold.having, prefix, SlotKind::HavingCol, i);
      if (g == nullptr) return false;
      if (slot.kind == SlotKind::HavingAgg) return equal(value, g->agg);
      if (slot.kind == SlotKind::HavingOp) return equal(value, g->op);
      return equal(value, g->val);
    }
    case SlotKind::OrderByPresent: return equal(value, count(gold.order_by ? 1 : 0));
    case SlotKind::OrderByCol: return gold.order_by && equal(value, gold.order_by->col);
    case SlotKind::OrderByAgg: return gold.order_by && equal(value, gold.order_by->agg);
    case SlotKind::OrderByDir:
      return gold.order_by && equal(value, sql::OrderSpec{gold.order_by->dir, gold.order_by->limit});
  }
  return false;
}

namespace {

// Committed entries before `slot` in the final state, and the slot's own entry.
std::pair<sql::PartialParse, const agent::CommittedSlot*> prefix_before(const agent::AgentState& state,
                                                                         const SlotId& slot) {
  sql::PartialParse prefix;
  for (const auto& c : state.committed) {
    if (c.slot == slot) return {prefix, &c};
    prefix.push_back({c.slot, c.value});
  }
  return {prefix, nullptr};
}

}  // namespace

Answer SimUser::answer(const agent::Pending& question, const agent::AgentState& state) {
  if (departed_) return Answer::Left;
  return matches_gold(gold_, question.slot, question.value, state.partial()) ? Answer::Yes : Answer::No;
}

void SimUser::turn_closed(const agent::CommittedSlot& slot, const agent::AgentState& state) {
  const auto [prefix, entry] = prefix_before(state, slot.slot);
  update_patience(matches_gold(gold_, slot.slot, slot.value, prefix));
}

void SimUser::update_patience(bool committed_gold) {
  if (departed_) return;
  if (committed_gold) {
    failures_ = 0;
    return;
  }
  ++failures_;
  if (patience_ > 0 && failures_ >= patience_) departed_ = true;
}

Dataset load_dataset(const std::string& tables_path, const std::string& examples_path, sql::Mode mode) {
  Dataset d;
  d.tables = db::load_tables_file(tables_path);
  d.examples = db::load_examples_file(examples_path);
  d.mode = mode;
  return d;
}

void categorize(agent::Transcript& transcript, const agent::AgentState& final_state, const sql::SqlQuery& gold) {
  for (auto& e : transcript.events) {
    const auto [prefix, entry] = prefix_before(final_state, e.slot);
    if (matches_gold(gold, e.slot, e.value, prefix)) {
      e.category = agent::Category::Right;
    } else if (entry != nullptr && matches_gold(gold, e.slot, entry->value, prefix)) {
      e.category = agent::Category::WrongSolved;
    } else {
      e.category = agent::Category::WrongUnsolved;
    }
  }
}

namespace {

ExampleRow run_example(const Dataset& dataset, const db::Example& ex, const parser::Parser& parser,
                       const EvalOptions& options, const nlg::Grammar& grammar) {
  ExampleRow row;
  row.example_id = ex.id;
  const db::Table* table = dataset.tables.find(ex.table_id);
  if (table == nullptr) {
    row.error = "table not found: " + ex.table_id;
    return row;
  }
  agent::AgentConfig config = options.agent;
  config.mode = dataset.mode;
  SimUser user(ex.gold, options.patience);
  try {
    auto result = agent::run_session(parser, grammar, user, *table, ex.id, ex.question, config);
    categorize(result.transcript, result.state, ex.gold);
    row.correct_qm = sql::query_match(result.query, ex.gold);
    row.correct_exec = dataset.mode == sql::Mode::WikiSql ? db::execution_match(result.query, ex.gold, dataset.tables)
                                                           : row.correct_qm;
    row.transcript = std::move(result.transcript);
    row.committed = std::move(result.state.committed);
  } catch (const agent::SessionError& e) {
    row.error = e.what();
    row.transcript = e.transcript();
    // Without a final state every wrong question counts as unsolved.
    for (auto& ev : row.transcript.events) {
      ev.category = matches_gold(ex.gold, ev.slot, ev.value, {}) ? agent::Category::Right
                                                                 : agent::Category::WrongUnsolved;
    }
  }
  row.early_exit = row.transcript.early_exit;
  for (const auto& ev : row.transcript.events) {
    ++row.questions;
    switch (*ev.category) {
      case agent::Category::Right: ++row.right; break;
      case agent::Category::WrongSolved: ++row.wrong_solved; break;
      case agent::Category::WrongUnsolved: ++row.wrong_unsolved; break;
    }
  }
  return row;
}

}  // namespace

EvalReport evaluate(const Dataset& dataset, const parser::Parser& parser, const EvalOptions& options,
                    const nlg::Grammar& grammar) {
  options.agent.validate();
  EvalReport report;
  report.label = options.label;
  report.mode = dataset.mode;
  report.detector = std::string(detect::to_string(options.agent.detector.kind));
  report.threshold = threshold_of(options.agent);
  report.k = options.agent.k;
  report.patience = options.patience;
  report.examples = dataset.examples.size();
  report.rows.resize(dataset.examples.size());

  unsigned threads = options.threads > 0 ? static_cast<unsigned>(options.threads) : std::thread::hardware_concurrency();
  threads = std::clamp<unsigned>(threads, 1, std::max<std::size_t>(1, dataset.examples.size()));
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t i = next++; i < dataset.examples.size(); i = next++) {
      report.rows[i] = run_example(dataset, dataset.examples[i], parser, options, grammar);
    }
  };
  if (threads == 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < threads; ++t) pool.emplace_back(work);
    for (auto& t : pool) t.join();
  }

  long qm = 0;
  long exec = 0;
  for (const auto& row : report.rows) {
    qm += row.correct_qm ? 1 : 0;
    exec += row.correct_exec ? 1 : 0;
    report.right += row.right;
    report.wrong_solved += row.wrong_solved;
    report.wrong_unsolved += row.wrong_unsolved;
    report.total_questions += row.questions;
  }
  const double n = static_cast<double>(report.examples);
  if (report.examples > 0) {
    report.acc_qm = static_cast<double>(qm) / n;
    report.acc_exec = static_cast<double>(exec) / n;
    report.avg_questions = static_cast<double>(report.total_questions) / n;
  }
  report.q_r = report.total_questions > 0
                   ? static_cast<double>(report.right) / static_cast<double>(report.total_questions)
                   : 0.0;
  return report;
}

EvalReport unlimit_run(const Dataset& dataset, const parser::Parser& parser, int k, int patience,
                       const nlg::Grammar& grammar) {
  EvalOptions options;
  options.agent.k = k;
  options.agent.detector.kind = detect::Kind::Unlimit;
  options.patience = patience;
  options.label = "Unlimit" + std::to_string(k);
  return evaluate(dataset, parser, options, grammar);
}

void set_threshold(agent::AgentConfig& config, double threshold) {
  if (config.detector.kind == detect::Kind::Dropout) {
    config.detector.s_star = threshold;
  } else {
    config.detector.p_star = threshold;
  }
}

double threshold_of(const agent::AgentConfig& config) {
  switch (config.detector.kind) {
    case detect::Kind::Prob: return config.detector.p_star;
    case detect::Kind::Dropout: return config.detector.s_star;
    default: return 0;
  }
}

std::vector<double> candidate_thresholds(const Dataset& dataset, const parser::Parser& parser,
                                         const EvalOptions& base) {
  const detect::Kind kind = base.agent.detector.kind;
  if (kind != detect::Kind::Prob && kind != detect::Kind::Dropout) {
    throw std::invalid_argument("budget search needs the prob or dropout detector");
  }
  // Scores seen on the silent path and on the ask-everything path.
  std::set<double> scores;
  for (const double extreme : {0.0, 1.0}) {
    EvalOptions opt = base;
    opt.patience = 0;
    if (kind == detect::Kind::Prob) {
      opt.agent.detector.p_star = extreme == 0.0 ? std::numeric_limits<double>::min() : 1.0;
    } else {
      opt.agent.detector.s_star = extreme == 0.0 ? std::numeric_limits<double>::max() : std::numeric_limits<double>::min();
    }
    const EvalReport r = evaluate(dataset, parser, opt);
    for (const auto& row : r.rows) {
      for (const auto& c : row.committed) {
        if (sql::is_askable(c.slot.kind)) scores.insert(c.score);
      }
    }
  }
  std::vector<double> out;
  if (kind == detect::Kind::Prob) {
    // p* = p asks exactly the slots with a smaller probability.
    for (double p : scores) {
      if (p > 0 && p <= 1) out.push_back(p);
    }
    if (out.empty() || out.back() < 1.0) out.push_back(1.0);
  } else {
    // s* = s asks exactly the slots with a larger stddev.
    double min_positive = std::numeric_limits<double>::infinity();
    for (double s : scores) {
      if (s > 0) {
        out.push_back(s);
        min_positive = std::min(min_positive, s);
      }
    }
    out.insert(out.begin(), std::isfinite(min_positive) ? min_positive / 2 : 1e-12);
  }
  return out;
}

namespace {

double measure(const Dataset& dataset, const parser::Parser& parser, const EvalOptions& base, double threshold,
               std::map<double, double>& memo) {
  if (const auto it = memo.find(threshold); it != memo.end()) return it->second;
  EvalOptions opt = base;
  set_threshold(opt.agent, threshold);
  const double avg = evaluate(dataset, parser, opt).avg_questions;
  memo[threshold] = avg;
  return avg;
}

std::vector<BudgetPoint> points(const std::map<double, double>& memo) {
  std::vector<BudgetPoint> out;
  for (const auto& [t, q] : memo) out.push_back({t, q});
  return out;
}

}  // namespace

std::vector<BudgetPoint> budget_grid(const Dataset& dataset, const parser::Parser& parser, const EvalOptions& base) {
  std::map<double, double> memo;
  for (double t : candidate_thresholds(dataset, parser, base)) measure(dataset, parser, base, t, memo);
  return points(memo);
}

BudgetResult budget_search(const Dataset& dataset, const parser::Parser& parser, const EvalOptions& base,
                           double target, double tolerance) {
  if (!(tolerance > 0)) throw std::invalid_argument("tolerance must be > 0");
  const std::vector<double> grid = candidate_thresholds(dataset, parser, base);
  // Orient the grid so Avg #q grows with the index: p* asks more as it rises,
  // s* asks more as it falls.
  std::vector<double> order = grid;
  if (base.agent.detector.kind == detect::Kind::Dropout) std::reverse(order.begin(), order.end());

  std::map<double, double> memo;
  auto at = [&](std::size_t i) { return measure(dataset, parser, base, order[i], memo); };
  std::size_t lo = 0;
  std::size_t hi = order.size() - 1;
  if (at(lo) < target && at(hi) > target) {
    while (hi - lo > 1) {
      const std::size_t mid = lo + (hi - lo) / 2;
      (at(mid) < target ? lo : hi) = mid;
    }
  } else if (at(lo) >= target) {
    hi = lo;
  } else {
    lo = hi;
  }
  // Avg #q need not be monotone in the threshold once corrections change later
  // predictions, so look around the crossing as well.
  constexpr std::size_t kWindow = 6;
  const std::size_t from = lo > kWindow ? lo - kWindow : 0;
  const std::size_t to = std::min(order.size() - 1, hi + kWindow);
  for (std::size_t i = from; i <= to; ++i) at(i);

  BudgetResult result;
  result.target = target;
  result.grid = points(memo);
  double best_gap = std::numeric_limits<double>::infinity();
  double max_avg = 0;
  for (const auto& p : result.grid) {
    max_avg = std::max(max_avg, p.avg_questions);
    const double gap = std::fabs(p.avg_questions - target);
    if (gap < best_gap) {
      best_gap = gap;
      result.threshold = p.threshold;
    }
  }
  EvalOptions opt = base;
  set_threshold(opt.agent, result.threshold);
  result.report = evaluate(dataset, parser, opt);
  result.feasible = std::fabs(result.report.avg_questions - target) <= tolerance;
  char buf[200];
  if (result.feasible) {
    std::snprintf(buf, sizeof buf, "threshold %.17g gives Avg #q %.4f (target %.4f)", result.threshold,
                  result.report.avg_questions, target);
  } else if (target > max_avg) {
    std::snprintf(buf, sizeof buf, "infeasible: target %.4f exceeds the maximum achievable Avg #q %.4f", target,
                  max_avg);
  } else {
    std::snprintf(buf, sizeof buf, "infeasible: closest achievable Avg #q is %.4f at threshold %.17g (target %.4f)",
                  result.report.avg_questions, result.threshold, target);
  }
  result.message = buf;
  return result;
}

// ---------------------------------------------------------------------------

nlohmann::json to_json(const EvalReport& r, bool with_rows) {
  const bool wikisql = r.mode == sql::Mode::WikiSql;
  nlohmann::json out = {{"label", r.label},
                        {"mode", sql::to_string(r.mode)},
                        {"detector", r.detector},
                        {"threshold", r.threshold},
                        {"k", r.k},
                        {"patience", r.patience},
                        {"examples", r.examples},
                        {"acc_qm", r.acc_qm},
                        {wikisql ? "acc_ex" : "acc_em", r.acc_exec},
                        {"avg_questions", r.avg_questions},
                        {"q_r", r.q_r},
                        {"right", r.right},
                        {"wrong_solved", r.wrong_solved},
                        {"wrong_unsolved", r.wrong_unsolved},
                        {"total_questions", r.total_questions}};
  if (with_rows) {
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& row : r.rows) {
      nlohmann::json j = {{"example_id", row.example_id},
                          {"correct_qm", row.correct_qm},
                          {"correct_exec", row.correct_exec},
                          {"questions", row.questions},
                          {"right", row.right},
                          {"wrong_solved", row.wrong_solved},
                          {"wrong_unsolved", row.wrong_unsolved},
                          {"early_exit", row.early_exit},
                          {"transcript", agent::to_json(row.transcript)}};
      if (!row.error.empty()) j["error"] = row.error;
      rows.push_back(std::move(j));
    }
    out["rows"] = std::move(rows);
  }
  return out;
}

EvalReport report_from_json(const nlohmann::json& v) {
  EvalReport r;
  try {
    r.label = v.value("label", std::string{});
    const auto mode = sql::parse_mode(v.value("mode", std::string("wikisql")));
    if (!mode) throw sql::DecodeError("$.mode", "unknown mode");
    r.mode = *mode;
    r.detector = v.value("detector", std::string{});
    r.threshold = v.value("threshold", 0.0);
    r.k = v.value("k", 3);
    r.patience = v.value("patience", 3);
    r.examples = v.at("examples").get<std::size_t>();
    r.acc_qm = v.at("acc_qm").get<double>();
    r.acc_exec = v.at(r.mode == sql::Mode::WikiSql ? "acc_ex" : "acc_em").get<double>();
    r.avg_questions = v.at("avg_questions").get<double>();
    r.q_r = v.at("q_r").get<double>();
    r.right = v.at("right").get<long>();
    r.wrong_solved = v.at("wrong_solved").get<long>();
    r.wrong_unsolved = v.at("wrong_unsolved").get<long>();
    r.total_questions = v.at("total_questions").get<long>();
    if (v.contains("rows")) {
      for (const auto& j : v.at("rows")) {
        ExampleRow row;
        row.example_id = j.at("example_id").get<std::string>();
        row.correct_qm = j.at("correct_qm").get<bool>();
        row.correct_exec = j.at("correct_exec").get<bool>();
        row.questions = j.at("questions").get<int>();
        row.right = j.at("right").get<int>();
        row.wrong_solved = j.at("wrong_solved").get<int>();
        row.wrong_unsolved = j.at("wrong_unsolved").get<int>();
        row.early_exit = j.value("early_exit", false);
        row.error = j.value("error", std::string{});
        if (j.contains("transcript")) row.transcript = agent::transcript_from_json(j.at("transcript"));
        r.rows.push_back(std::move(row));
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw sql::DecodeError("$", e.what());
  }
  return r;
}

std::string render_table(const std::vector<EvalReport>& reports) {
  const bool spider = !reports.empty() && reports.front().mode == sql::Mode::Spider;
  std::size_t width = 6;
  for (const auto& r : reports) width = std::max(width, r.label.size());
  std::string out;
  char buf[256];
  std::snprintf(buf, sizeof buf, "%-*s  %7s  %7s  %7s  %6s  %6s  %12s  %14s\n", static_cast<int>(width), "System",
                "Acc_qm", spider ? "Acc_em" : "Acc_ex", "Avg #q", "Q_r%", "right", "wrong_solved", "wrong_unsolved");
  out += buf;
  for (const auto& r : reports) {
    std::snprintf(buf, sizeof buf, "%-*s  %7.3f  %7.3f  %7.3f  %6.1f  %6ld  %12ld  %14ld\n", static_cast<int>(width),
                  r.label.c_str(), r.acc_qm, r.acc_exec, r.avg_questions, 100.0 * r.q_r, r.right, r.wrong_solved,
                  r.wrong_unsolved);
    out += buf;
  }
  return out;
}

void write_rows_csv(const EvalReport& report, std::ostream& out) {
  out << "example_id,correct_qm," << (report.mode == sql::Mode::WikiSql ? "correct_ex" : "correct_em")
      << ",n_questions,right,wrong_solved,wrong_unsolved,early_exit\n";
  for (const auto& row : report.rows) {
    // Ids come from the dataset and may carry commas or quotes.
    std::string id = row.example_id;
    if (id.find_first_of(",\"\n") != std::string::npos) {
      std::string quoted = "\"";
      for (char c : id) quoted += c == '"' ? std::string("\"\"") : std::string(1, c);
      id = quoted + "\"";
    }
    out << id << ',' << row.correct_qm << ',' << row.correct_exec << ',' << row.questions << ',' << row.right << ','
        << row.wrong_solved << ',' << row.wrong_unsolved << ',' << row.early_exit << '\n';
  }
}

double RankStats::within(int k) const {
  long hits = 0;
  for (const auto& [rank, n] : histogram) hits += (rank >= 1 && rank <= k) ? n : 0;
  return slots > 0 ? static_cast<double>(hits) / static_cast<double>(slots) : 0.0;
}

RankStats gold_ranks(const Dataset& dataset, const parser::Parser& parser) {
  RankStats stats;
  const parser::ConstraintSet none;
  for (const auto& ex : dataset.examples) {
    parser::ParseContext ctx;
    ctx.example_id = ex.id;
    ctx.question = ex.question;
    ctx.table = &dataset.tables.at(ex.table_id);
    ctx.mode = dataset.mode;
    sql::PartialParse prefix;
    for (const auto& entry : sql::decompose(ex.gold, dataset.mode)) {
      int rank = 0;
      const auto d = parser.next_decision(ctx, prefix, none);
      if (d && d->slot == entry.slot) {
        for (std::size_t i = 0; i < d->options.size(); ++i) {
          if (!sql::slot_values_equal(d->options[i], entry.value)) continue;
          rank = 1;
          for (std::size_t j = 0; j < d->options.size(); ++j) {
            if (d->probs[j] > d->probs[i] || (d->probs[j] == d->probs[i] && j < i)) ++rank;
          }
          break;
        }
      }
      ++stats.slots;
      ++stats.histogram[rank];
      ++stats.by_kind[sql::to_string(sql::SlotId{entry.slot.kind, 0})][rank];
      prefix.push_back(entry);
    }
  }
  return stats;
}

Recount recount(const EvalReport& report) {
  Recount c;
  for (const auto& row : report.rows) {
    for (const auto& e : row.transcript.events) {
      ++c.total;
      if (!e.category) continue;
      switch (*e.category) {
        case agent::Category::Right: ++c.right; break;
        case agent::Category::WrongSolved: ++c.wrong_solved; break;
        case agent::Category::WrongUnsolved: ++c.wrong_unsolved; break;
      }
    }
  }
  c.q_r = c.total > 0 ? static_cast<double>(c.right) / static_cast<double>(c.total) : 0.0;
  return c;
}

}  // namespace misp::harness
