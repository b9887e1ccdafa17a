#include "misp/agent.hpp"

#include <chrono>
#include <ctime>
#include <cstdio>

namespace misp::agent {

namespace {

constexpr std::pair<Answer, std::string_view> kAnswerNames[] = {
    {Answer::Yes, "yes"}, {Answer::No, "no"}, {Answer::Left, "left"}};
constexpr std::pair<Category, std::string_view> kCategoryNames[] = {
    {Category::Right, "right"}, {Category::WrongSolved, "wrong_solved"}, {Category::WrongUnsolved, "wrong_unsolved"}};

}  // namespace

std::string_view to_string(Answer answer) {
  for (const auto& [a, name] : kAnswerNames) {
    if (a == answer) return name;
  }
  return "?";
}

std::optional<Answer> parse_answer(std::string_view text) {
  for (const auto& [a, name] : kAnswerNames) {
    if (name == text) return a;
  }
  return std::nullopt;
}

std::string_view to_string(Category category) {
  for (const auto& [c, name] : kCategoryNames) {
    if (c == category) return name;
  }
  return "?";
}

std::optional<Category> parse_category(std::string_view text) {
  for (const auto& [c, name] : kCategoryNames) {
    if (name == text) return c;
  }
  return std::nullopt;
}

std::string now_iso8601() {
  using namespace std::chrono;
  const auto now = system_clock::now();
  const auto ms = duration_cast<milliseconds>(now.time_since_epoch()).count() % 1000;
  const std::time_t t = system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[40];
  const std::size_t n = std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%S", &tm);
  std::snprintf(buf + n, sizeof buf - n, ".%03dZ", static_cast<int>(ms));
  return buf;
}

sql::PartialParse AgentState::partial() const {
  sql::PartialParse out;
  out.reserve(committed.size());
  for (const auto& c : committed) out.push_back({c.slot, c.value});
  return out;
}

void AgentConfig::validate() const {
  if (k < 0) throw std::invalid_argument("K must be >= 0");
  detector.validate();
}

int Transcript::questions_for(const SlotId& slot) const {
  int n = 0;
  for (const auto& e : events) n += e.slot == slot ? 1 : 0;
  return n;
}

nlohmann::json to_json(const Transcript& t) {
  nlohmann::json events = nlohmann::json::array();
  for (const auto& e : t.events) {
    nlohmann::json j = {{"slot", sql::to_string(e.slot)},
                        {"value", sql::slot_value_to_json(e.value)},
                        {"prob", e.prob},
                        {"rule", e.rule_id},
                        {"question", e.question},
                        {"answer", to_string(e.answer)}};
    if (e.category) j["category"] = to_string(*e.category);
    events.push_back(std::move(j));
  }
  nlohmann::json out = {{"example_id", t.example_id},
                        {"question", t.question},
                        {"table_id", t.table_id},
                        {"mode", sql::to_string(t.mode)},
                        {"seed", t.seed},
                        {"events", std::move(events)},
                        {"early_exit", t.early_exit},
                        {"started_at", t.started_at},
                        {"finished_at", t.finished_at}};
  if (t.final_query) {
    out["final_query"] = sql::to_json(*t.final_query);
    out["final_sql"] = sql::render_sql(*t.final_query);
  }
  return out;
}

Transcript transcript_from_json(const nlohmann::json& value) {
  Transcript t;
  try {
    t.example_id = value.at("example_id").get<std::string>();
    t.question = value.value("question", std::string{});
    t.table_id = value.value("table_id", std::string{});
    const auto mode = sql::parse_mode(value.value("mode", std::string("wikisql")));
    if (!mode) throw sql::DecodeError("$.mode", "unknown mode");
    t.mode = *mode;
    t.seed = value.value("seed", std::uint64_t{0});
    t.early_exit = value.value("early_exit", false);
    t.started_at = value.value("started_at", std::string{});
    t.finished_at = value.value("finished_at", std::string{});
    const auto& events = value.at("events");
    for (std::size_t i = 0; i < events.size(); ++i) {
      const auto& e = events[i];
      const std::string path = "$.events[" + std::to_string(i) + "]";
      Event ev;
      const auto slot = sql::parse_slot(e.at("slot").get<std::string>());
      if (!slot) throw sql::DecodeError(path + ".slot", "unknown slot");
      ev.slot = *slot;
      ev.value = sql::slot_value_from_json(slot->kind, e.at("value"), path + ".value");
      ev.prob = e.value("prob", 0.0);
      ev.rule_id = e.value("rule", std::string{});
      ev.question = e.value("question", std::string{});
      const auto answer = parse_answer(e.at("answer").get<std::string>());
      if (!answer) throw sql::DecodeError(path + ".answer", "unknown answer");
      ev.answer = *answer;
      if (e.contains("category")) {
        const auto c = parse_category(e.at("category").get<std::string>());
        if (!c) throw sql::DecodeError(path + ".category", "unknown category");
        ev.category = *c;
      }
      t.events.push_back(std::move(ev));
    }
    if (value.contains("final_query")) t.final_query = sql::query_from_json(value.at("final_query"), "$.final_query");
  } catch (const nlohmann::json::exception& e) {
    throw sql::DecodeError("$", e.what());
  }
  return t;
}

// ---------------------------------------------------------------------------

Session::Session(const parser::Parser& parser, const nlg::Grammar& grammar, const db::Table& table,
                 std::string example_id, std::string question, AgentConfig config)
    : parser_(parser), grammar_(grammar), table_(table), config_(std::move(config)) {
  config_.validate();
  config_.detector.perturbation.seed = config_.seed;
  ctx_.example_id = std::move(example_id);
  ctx_.question = std::move(question);
  ctx_.table = &table_;
  ctx_.mode = config_.mode;
  transcript_.example_id = ctx_.example_id;
  transcript_.question = ctx_.question;
  transcript_.table_id = table_.id;
  transcript_.mode = config_.mode;
  transcript_.seed = config_.seed;
  transcript_.started_at = now_iso8601();
  advance();
}

sql::SqlQuery Session::query() const { return sql::assemble(state_.partial(), {table_.id}); }

void Session::fail(const std::string& what) {
  Transcript t = transcript_;
  t.finished_at = now_iso8601();
  throw SessionError(what, std::move(t));
}

void Session::commit(const SlotValue& value, double prob) {
  CommittedSlot c;
  c.slot = original_ ? original_->slot : pending_->slot;
  c.value = value;
  c.prob = prob;
  c.score = original_score_;
  c.passes = std::move(original_passes_);
  c.questions = asked_;
  state_.committed.push_back(std::move(c));
  original_.reset();
  original_passes_.clear();
  pending_.reset();
  asked_ = 0;
}

void Session::ask(const parser::Decision& decision) {
  try {
    const auto ctx = nlg::make_context(state_.partial(), decision.slot, decision.choice(), config_.mode,
                                       {table_.id}, {table_.name});
    const nlg::Question q = grammar_.generate(decision.slot, decision.choice(), ctx);
    pending_ = Pending{decision.slot, decision.choice(), decision.chosen_prob(), q.rule_id, q.text};
  } catch (const nlg::NlgError& e) {
    fail(std::string("question generation failed: ") + e.what());
  }
}

void Session::advance() {
  while (!pending_ && !state_.terminal) {
    std::optional<parser::Decision> decision;
    try {
      decision = parser_.next_decision(ctx_, state_.partial(), state_.constraints);
    } catch (const std::exception& e) {
      fail(std::string("parser failed: ") + e.what());
    }
    if (!decision) {
      state_.terminal = true;
      transcript_.final_query = query();
      transcript_.finished_at = now_iso8601();
      return;
    }
    std::vector<double> passes;
    if (!departed_ && config_.detector.kind == detect::Kind::Dropout && sql::is_askable(decision->slot.kind)) {
      passes = parser_.perturbed_passes(ctx_, state_.partial(), state_.constraints, *decision,
                                        config_.detector.perturbation);
    }
    const detect::Verdict verdict = departed_ ? detect::Verdict{} : detect::judge(config_.detector, *decision, passes);
    original_ = *decision;
    original_passes_ = std::move(passes);
    original_score_ = verdict.score;
    if (!verdict.ask) {
      commit(decision->choice(), decision->chosen_prob());
      continue;
    }
    ask(*decision);
  }
}

void Session::answer(Answer answer) {
  if (!pending_) throw StateError(done() ? "session is finished" : "no pending question");
  if (answer == Answer::Left) {
    depart();
    return;
  }
  const Pending asked = *pending_;
  transcript_.events.push_back({asked.slot, asked.value, asked.prob, asked.rule_id, asked.text, answer, std::nullopt});
  ++asked_;
  if (answer == Answer::Yes) {
    commit(asked.value, asked.prob);
    advance();
    return;
  }
  state_.constraints.forbid(asked.slot, asked.value);
  // Original plus K alternatives negated: keep the original prediction.
  if (asked_ > config_.k) {
    commit(original_->choice(), original_->chosen_prob());
    advance();
    return;
  }
  std::optional<parser::Decision> next;
  try {
    next = parser_.next_decision(ctx_, state_.partial(), state_.constraints);
  } catch (const parser::ConstraintError&) {
    next.reset();
  } catch (const std::exception& e) {
    fail(std::string("parser failed: ") + e.what());
  }
  if (!next || next->slot != asked.slot) {
    commit(original_->choice(), original_->chosen_prob());
    advance();
    return;
  }
  ask(*next);
}

void Session::depart() {
  departed_ = true;
  transcript_.early_exit = true;
  if (pending_) commit(original_->choice(), original_->chosen_prob());
  advance();
}

// ---------------------------------------------------------------------------

Answer ScriptedChannel::answer(const Pending&, const AgentState&) {
  if (next_ >= answers_.size()) return Answer::Left;
  return answers_[next_++];
}

SessionResult run_session(const parser::Parser& parser, const nlg::Grammar& grammar, AnswerChannel& channel,
                          const db::Table& table, const std::string& example_id, const std::string& question,
                          const AgentConfig& config) {
  Session session(parser, grammar, table, example_id, question, config);
  while (!session.done()) {
    if (!channel.present()) {
      session.depart();
      break;
    }
    const Pending q = *session.pending();
    const std::size_t before = session.state().committed.size();
    session.answer(channel.answer(q, session.state()));
    const auto& committed = session.state().committed;
    if (committed.size() > before && committed[before].questions > 0) channel.turn_closed(committed[before], session.state());
  }
  return {session.query(), session.transcript(), session.state()};
}

}  // namespace misp::agent
