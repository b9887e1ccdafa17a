#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "misp/detector.hpp"
#include "misp/nlg.hpp"
#include "misp/parser.hpp"

namespace misp::agent {

using sql::SlotId;
using sql::SlotValue;

enum class Answer { Yes, No, Left };
enum class Category { Right, WrongSolved, WrongUnsolved };

std::string_view to_string(Answer answer);
std::optional<Answer> parse_answer(std::string_view text);
std::string_view to_string(Category category);
std::optional<Category> parse_category(std::string_view text);

/// A committed slot with the metadata the agent kept while deciding it.
struct CommittedSlot {
  SlotId slot;
  SlotValue value;
  double prob = 0;
  // Detector score of the original prediction: p(o_t) for prob, pass stddev for dropout.
  double score = 0;
  std::vector<double> passes;  // filled only when the dropout detector ran
  int questions = 0;
};

struct AgentState {
  std::vector<CommittedSlot> committed;
  parser::ConstraintSet constraints;
  bool terminal = false;

  sql::PartialParse partial() const;
};

struct AgentConfig {
  int k = 3;
  detect::DetectorConfig detector;
  sql::Mode mode = sql::Mode::WikiSql;
  std::uint64_t seed = 0;

  void validate() const;
};

struct Event {
  SlotId slot;
  SlotValue value;
  double prob = 0;
  std::string rule_id;
  std::string question;
  Answer answer = Answer::Yes;
  std::optional<Category> category;
};

struct Transcript {
  std::string example_id;
  std::string question;
  std::string table_id;
  sql::Mode mode = sql::Mode::WikiSql;
  std::uint64_t seed = 0;
  std::vector<Event> events;
  bool early_exit = false;
  std::optional<sql::SqlQuery> final_query;
  std::string started_at;
  std::string finished_at;

  /// Number of questions asked about `slot`.
  int questions_for(const SlotId& slot) const;
};

nlohmann::json to_json(const Transcript& transcript);
Transcript transcript_from_json(const nlohmann::json& value);

/// A question waiting for feedback.
struct Pending {
  SlotId slot;
  SlotValue value;
  double prob = 0;
  std::string rule_id;
  std::string text;
};

class SessionError : public std::runtime_error {
 public:
  SessionError(const std::string& what, Transcript transcript)
      : std::runtime_error(what), transcript_(std::move(transcript)) {}
  const Transcript& transcript() const { return transcript_; }

 private:
  Transcript transcript_;
};

/// Raised for feedback that does not fit the session's state.
class StateError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// The interaction loop as a step-wise state machine. Construction runs the parser
/// up to the first question (or to the end); each answer runs it to the next one.
class Session {
 public:
  Session(const parser::Parser& parser, const nlg::Grammar& grammar, const db::Table& table,
          std::string example_id, std::string question, AgentConfig config);

  bool done() const { return state_.terminal; }
  const std::optional<Pending>& pending() const { return pending_; }
  const AgentState& state() const { return state_; }
  const Transcript& transcript() const { return transcript_; }
  const AgentConfig& config() const { return config_; }

  /// Query assembled from the committed prefix (complete once done()).
  sql::SqlQuery query() const;

  /// Applies yes/no feedback to the pending question. `Left` behaves like depart().
  void answer(Answer answer);

  /// The user is gone: the open slot keeps its original prediction and every
  /// remaining slot is committed without asking.
  void depart();

 private:
  void advance();
  void ask(const parser::Decision& decision);
  void commit(const SlotValue& value, double prob);
  void fail(const std::string& what);

  const parser::Parser& parser_;
  const nlg::Grammar& grammar_;
  const db::Table& table_;
  parser::ParseContext ctx_;
  AgentConfig config_;

  AgentState state_;
  Transcript transcript_;
  std::optional<Pending> pending_;
  // The slot under discussion: its first prediction and the questions asked so far.
  std::optional<parser::Decision> original_;
  std::vector<double> original_passes_;
  double original_score_ = 0;
  int asked_ = 0;
  bool departed_ = false;
};

/// Source of feedback for run_session.
class AnswerChannel {
 public:
  virtual ~AnswerChannel() = default;
  virtual bool present() const { return true; }
  virtual Answer answer(const Pending& question, const AgentState& state) = 0;
  /// Called after a slot that was asked about is committed.
  virtual void turn_closed(const CommittedSlot&, const AgentState&) {}
};

/// Replays a fixed answer list; leaves once it is exhausted.
class ScriptedChannel : public AnswerChannel {
 public:
  explicit ScriptedChannel(std::vector<Answer> answers) : answers_(std::move(answers)) {}
  bool present() const override { return next_ < answers_.size(); }
  Answer answer(const Pending&, const AgentState&) override;

 private:
  std::vector<Answer> answers_;
  std::size_t next_ = 0;
};

struct SessionResult {
  sql::SqlQuery query;
  Transcript transcript;
  AgentState state;
};

SessionResult run_session(const parser::Parser& parser, const nlg::Grammar& grammar, AnswerChannel& channel,
                          const db::Table& table, const std::string& example_id, const std::string& question,
                          const AgentConfig& config);

/// UTC timestamp, ISO 8601 with milliseconds.
std::string now_iso8601();

}  // namespace misp::agent
