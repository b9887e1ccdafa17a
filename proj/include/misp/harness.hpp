#pragma once

#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "misp/agent.hpp"
#include "misp/db.hpp"

namespace misp::harness {

using agent::Answer;
using sql::SlotId;
using sql::SlotValue;

/// Whether `value` is the gold value of `slot`, given the committed `prefix`.
/// Predicted WHERE/HAVING conditions are aligned to gold conditions greedily by
/// column, in prediction order; op and value slots compare against the aligned
/// gold condition and are wrong when the condition has none.
bool matches_gold(const sql::SqlQuery& gold, const SlotId& slot, const SlotValue& value,
                  const sql::PartialParse& prefix);

/// Ground-truth answerer with the leave-after-N-failed-turns policy.
class SimUser : public agent::AnswerChannel {
 public:
  /// `patience` <= 0 means the user never leaves.
  explicit SimUser(sql::SqlQuery gold, int patience = 3) : gold_(std::move(gold)), patience_(patience) {}

  bool present() const override { return !departed_; }
  Answer answer(const agent::Pending& question, const agent::AgentState& state) override;
  void turn_closed(const agent::CommittedSlot& slot, const agent::AgentState& state) override;

  /// Counter update for one finished turn (all questions about one slot).
  void update_patience(bool committed_gold);

  int failures() const { return failures_; }
  bool departed() const { return departed_; }
  const sql::SqlQuery& gold() const { return gold_; }

 private:
  sql::SqlQuery gold_;
  int patience_;
  int failures_ = 0;
  bool departed_ = false;
};

struct Dataset {
  db::TableStore tables;
  std::vector<db::Example> examples;
  sql::Mode mode = sql::Mode::WikiSql;
};

Dataset load_dataset(const std::string& tables_path, const std::string& examples_path, sql::Mode mode);

struct EvalOptions {
  agent::AgentConfig agent;
  int patience = 3;  // <= 0: never leaves
  int threads = 0;   // 0: hardware concurrency
  std::string label;
};

struct ExampleRow {
  std::string example_id;
  bool correct_qm = false;
  bool correct_exec = false;  // execution match (WikiSQL) or exact match (Spider)
  int questions = 0;
  int right = 0;
  int wrong_solved = 0;
  int wrong_unsolved = 0;
  bool early_exit = false;
  std::string error;
  agent::Transcript transcript;
  std::vector<agent::CommittedSlot> committed;
};

struct EvalReport {
  std::string label;
  sql::Mode mode = sql::Mode::WikiSql;
  std::string detector;
  double threshold = 0;
  int k = 3;
  int patience = 3;
  std::size_t examples = 0;
  double acc_qm = 0;
  double acc_exec = 0;  // Acc_ex in WikiSQL mode, Acc_em in Spider mode
  double avg_questions = 0;
  double q_r = 0;  // fraction of questions whose asked value was right
  long right = 0;
  long wrong_solved = 0;
  long wrong_unsolved = 0;
  long total_questions = 0;
  std::vector<ExampleRow> rows;
};

/// Assigns right / wrong_solved / wrong_unsolved to every event of a finished session.
void categorize(agent::Transcript& transcript, const agent::AgentState& final_state, const sql::SqlQuery& gold);

EvalReport evaluate(const Dataset& dataset, const parser::Parser& parser, const EvalOptions& options,
                    const nlg::Grammar& grammar = nlg::Grammar::builtin());

/// Asks about every askable slot, up to K+1 questions each.
EvalReport unlimit_run(const Dataset& dataset, const parser::Parser& parser, int k, int patience = 3,
                       const nlg::Grammar& grammar = nlg::Grammar::builtin());

struct BudgetPoint {
  double threshold = 0;
  double avg_questions = 0;
};

struct BudgetResult {
  bool feasible = false;
  double target = 0;
  double threshold = 0;
  EvalReport report;  // at the returned threshold
  std::vector<BudgetPoint> grid;
  std::string message;
};

/// Candidate thresholds for the detector kind, from the decisions seen on the dataset.
std::vector<double> candidate_thresholds(const Dataset& dataset, const parser::Parser& parser,
                                         const EvalOptions& base);

/// Avg #q at every candidate threshold (sorted by threshold).
std::vector<BudgetPoint> budget_grid(const Dataset& dataset, const parser::Parser& parser, const EvalOptions& base);

/// Threshold whose Avg #q is closest to `target`; feasible iff within `tolerance`.
/// Bisects the candidate grid on Avg #q, then scans the neighbourhood of the
/// crossing. `grid` in the result lists every point measured.
BudgetResult budget_search(const Dataset& dataset, const parser::Parser& parser, const EvalOptions& base,
                           double target, double tolerance);

/// Sets the threshold field of the active detector kind.
void set_threshold(agent::AgentConfig& config, double threshold);
double threshold_of(const agent::AgentConfig& config);

nlohmann::json to_json(const EvalReport& report, bool with_rows = true);
EvalReport report_from_json(const nlohmann::json& value);

/// Aligned-column table, one line per report.
std::string render_table(const std::vector<EvalReport>& reports);
void write_rows_csv(const EvalReport& report, std::ostream& out);

/// Recomputes category counts and Q_r from the per-event categories in the rows.
struct Recount {
  long right = 0;
  long wrong_solved = 0;
  long wrong_unsolved = 0;
  long total = 0;
  double q_r = 0;
};
Recount recount(const EvalReport& report);

/// Rank of the gold value at every slot of the gold decomposition, with the
/// parser fed the gold prefix. Rank 1 is the argmax; 0 means the gold value was
/// not among the options (or the parser's slot sequence diverged).
struct RankStats {
  long slots = 0;
  std::map<int, long> histogram;
  std::map<std::string, std::map<int, long>> by_kind;

  /// Share of slots whose gold value ranks within the top `k`.
  double within(int k) const;
};
RankStats gold_ranks(const Dataset& dataset, const parser::Parser& parser);

}  // namespace misp::harness
