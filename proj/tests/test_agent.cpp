#include <doctest.h>

#include "fixtures.hpp"

using namespace misp;
using agent::Answer;
using agent::Session;
using parser::ScriptedParser;
using sql::SlotKind;

namespace {

const db::Table& people() {
  static const db::Table t = testing::people_table();
  return t;
}

// select.col in {age .5, name .3, place .2}; no aggregate, no conditions.
ScriptedParser three_way(double top = 0.5) {
  const double rest = 1.0 - top;
  return ScriptedParser({{"*",
                          {{{SlotKind::SelectCol, 0},
                            {std::string("age"), std::string("name"), std::string("place")},
                            {top, rest * 0.6, rest * 0.4}},
                           {{SlotKind::SelectAgg, 0}, {sql::Agg::None}, {1.0}},
                           {{SlotKind::WhereCount, 0}, {std::int64_t{0}}, {1.0}}}}});
}

agent::AgentConfig prob_config(double p_star, int k = 3) {
  agent::AgentConfig c;
  c.k = k;
  c.detector.kind = detect::Kind::Prob;
  c.detector.p_star = p_star;
  return c;
}

Session open(const ScriptedParser& p, const agent::AgentConfig& c) {
  return Session(p, nlg::Grammar::builtin(), people(), "e1", "which age", c);
}

// Answers by comparing against the gold value at the asked slot, assuming every
// earlier slot was settled to gold.
class GoldChannel : public agent::AnswerChannel {
 public:
  explicit GoldChannel(sql::SqlQuery gold) : gold_(std::move(gold)) {}
  Answer answer(const agent::Pending& q, const agent::AgentState&) override {
    const auto v = sql::value_at(gold_, q.slot);
    return v && sql::slot_values_equal(*v, q.value) ? Answer::Yes : Answer::No;
  }

 private:
  sql::SqlQuery gold_;
};

sql::SqlQuery grid_gold() {
  sql::SqlQuery q;
  q.table_refs = {"grid"};
  q.select = {sql::Agg::Max, "age"};
  sql::Condition c;
  c.col = "city";
  c.val = std::string("x");
  q.where = {c};
  return q;
}

}  // namespace

TEST_CASE("confident predictions are committed without questions") {
  const auto p = three_way(0.97);
  auto s = open(p, prob_config(0.95));
  CHECK(s.done());
  CHECK(s.transcript().events.empty());
  CHECK(s.query().select.col == "age");
  CHECK(s.state().committed.size() == 3);
}

TEST_CASE("yes commits the asked value") {
  const auto p = three_way();
  auto s = open(p, prob_config(0.95));
  REQUIRE(s.pending());
  CHECK(s.pending()->slot == sql::SlotId{SlotKind::SelectCol, 0});
  CHECK(std::get<std::string>(s.pending()->value) == "age");
  CHECK(s.pending()->rule_id == "T1.2");
  CHECK(s.pending()->text == "Does the system need to return information about \"age\" ?");
  s.answer(Answer::Yes);
  CHECK(s.done());
  CHECK(s.query().select.col == "age");
  REQUIRE(s.transcript().events.size() == 1);
  CHECK(s.transcript().events[0].answer == Answer::Yes);
  CHECK_THROWS_AS(s.answer(Answer::Yes), agent::StateError);
}

TEST_CASE("no forbids the value and re-predicts the slot") {
  const auto p = three_way();
  auto s = open(p, prob_config(0.95));
  s.answer(Answer::No);
  REQUIRE(s.pending());
  CHECK(std::get<std::string>(s.pending()->value) == "name");
  CHECK(s.pending()->prob == doctest::Approx(0.6).epsilon(1e-12));
  CHECK(s.state().constraints.is_forbidden({SlotKind::SelectCol, 0}, std::string("age")));
  s.answer(Answer::Yes);
  CHECK(s.query().select.col == "name");
  CHECK(s.state().committed[0].questions == 2);
}

TEST_CASE("after K+1 rejections the original prediction stays") {
  const auto p = three_way();
  auto s = open(p, prob_config(0.95, 1));
  s.answer(Answer::No);
  s.answer(Answer::No);
  CHECK(s.done());
  CHECK(s.query().select.col == "age");
  CHECK(s.transcript().events.size() == 2);

  // Running out of options ends the turn the same way.
  auto all = open(p, prob_config(0.95, 5));
  for (int i = 0; i < 3; ++i) all.answer(Answer::No);
  CHECK(all.done());
  CHECK(all.query().select.col == "age");
  CHECK(all.transcript().events.size() == 3);
}

TEST_CASE("departure keeps the open prediction and finishes silently") {
  const auto p = three_way();
  auto s = open(p, prob_config(0.95));
  s.answer(Answer::No);
  s.answer(Answer::Left);
  CHECK(s.done());
  CHECK(s.transcript().early_exit);
  CHECK(s.query().select.col == "age");
  CHECK(s.transcript().events.size() == 1);
  REQUIRE(s.transcript().final_query);

  agent::ScriptedChannel silent({});
  const auto r = agent::run_session(p, nlg::Grammar::builtin(), silent, people(), "e1", "q", prob_config(0.95));
  CHECK(r.transcript.early_exit);
  CHECK(r.query.select.col == "age");
  CHECK(r.transcript.events.empty());
}

TEST_CASE("one wrong low-confidence slot costs exactly its rank in questions") {
  const auto inst = testing::scripted_instance("w1", grid_gold(), sql::Mode::WikiSql, {1, 2});
  const auto suite = testing::suite_of({inst}, sql::Mode::WikiSql);
  const auto p = suite.parser();
  const auto table = testing::grid_table();
  GoldChannel channel(grid_gold());
  const auto r = agent::run_session(p, nlg::Grammar::builtin(), channel, table, "w1", "q", prob_config(0.95));
  // Rank-1 slots carry at least 0.5 of the mass but below 0.95, so each is asked once;
  // the rank-2 aggregate is asked twice.
  CHECK(sql::query_match(r.query, grid_gold()));
  CHECK(r.transcript.questions_for({SlotKind::SelectAgg, 0}) == 2);
  CHECK(r.transcript.questions_for({SlotKind::SelectCol, 0}) == 1);
}

TEST_CASE("gold within the top K+1 is always recovered under the unlimit detector") {
  const auto gold = grid_gold();
  const auto probe = testing::scripted_instance("probe", gold, sql::Mode::WikiSql, {});
  std::vector<int> caps;
  for (const auto& s : probe.slots) {
    if (sql::is_askable(s.slot.kind)) caps.push_back(static_cast<int>(s.distractors.size()) + 1);
  }
  const auto table = testing::grid_table();
  std::mt19937_64 rng(17);
  for (int k = 0; k <= 3; ++k) {
    agent::AgentConfig config;
    config.k = k;
    config.detector.kind = detect::Kind::Unlimit;
    for (int trial = 0; trial < 25; ++trial) {
      std::vector<int> ranks;
      int expected = 0;
      for (int cap : caps) {
        ranks.push_back(1 + static_cast<int>(rng() % std::min(cap, k + 1)));
        expected += ranks.back();
      }
      const auto inst = testing::scripted_instance("p", gold, sql::Mode::WikiSql, ranks);
      const auto p = testing::suite_of({inst}, sql::Mode::WikiSql).parser();
      GoldChannel channel(gold);
      const auto r = agent::run_session(p, nlg::Grammar::builtin(), channel, table, "p", "q", config);
      CHECK(sql::query_match(r.query, gold));
      CHECK(static_cast<int>(r.transcript.events.size()) == expected);
    }
    // One slot beyond reach keeps its wrong original after K+1 questions.
    std::vector<int> ranks(caps.size(), 1);
    if (caps[0] >= k + 2) {
      ranks[0] = k + 2;
      const auto inst = testing::scripted_instance("p", gold, sql::Mode::WikiSql, ranks);
      const auto p = testing::suite_of({inst}, sql::Mode::WikiSql).parser();
      GoldChannel channel(gold);
      const auto r = agent::run_session(p, nlg::Grammar::builtin(), channel, table, "p", "q", config);
      CHECK_FALSE(sql::query_match(r.query, gold));
      CHECK(r.transcript.questions_for({SlotKind::SelectCol, 0}) == k + 1);
    }
  }
}

TEST_CASE("transcripts round-trip through JSON") {
  const auto p = three_way();
  auto s = open(p, prob_config(0.95));
  s.answer(Answer::No);
  s.answer(Answer::Yes);
  auto t = s.transcript();
  t.events[0].category = agent::Category::WrongSolved;
  const auto j = agent::to_json(t);
  const auto back = agent::transcript_from_json(j);
  CHECK(agent::to_json(back) == j);
  CHECK(back.events.size() == 2);
  CHECK(back.events[0].category == agent::Category::WrongSolved);
  CHECK_FALSE(back.events[1].category);
  REQUIRE(back.final_query);
  CHECK(*back.final_query == *t.final_query);
}

TEST_CASE("answer names and configuration checks") {
  for (auto a : {Answer::Yes, Answer::No, Answer::Left}) CHECK(agent::parse_answer(agent::to_string(a)) == a);
  CHECK_FALSE(agent::parse_answer("maybe"));
  for (auto c : {agent::Category::Right, agent::Category::WrongSolved, agent::Category::WrongUnsolved}) {
    CHECK(agent::parse_category(agent::to_string(c)) == c);
  }
  auto c = prob_config(0.95);
  c.k = -1;
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
  CHECK(agent::now_iso8601().size() == 24);
}
