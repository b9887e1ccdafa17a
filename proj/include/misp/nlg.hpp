#pragma once

#include <string>
#include <vector>

#include "misp/sql.hpp"

namespace misp::nlg {

enum class Category { Agg, Op, Order };

struct LexiconEntry {
  std::string phrase;
  Category category = Category::Agg;
  std::string payload;  // enumeration code: "max", "gt", "desc", ...
};

/// Which (mode, slot kind, variant) a rule derives a question for.
struct Selector {
  std::string mode;  // "wikisql" | "spider" | "any"
  std::string slot;  // slot kind key ("select.agg", "where.val", ...) or "column"
  std::string variant;
};

struct Rule {
  std::string id;
  std::string templ;
  Selector applies_to;
};

/// Clause context for a question: the query as it stands with the asked value in
/// place, and the display names of the referenced tables.
struct ClauseContext {
  sql::Mode mode = sql::Mode::WikiSql;
  sql::SqlQuery query;
  std::vector<std::string> table_names;
};

struct Question {
  std::string rule_id;
  std::string text;
};

class NlgError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Slot kind key used in rule selectors ("where.op" for every where[i].op).
std::string slot_key(sql::SlotKind kind);

/// Variant of the rule that applies to `value` for `slot` in `ctx`.
std::string variant_of(const sql::SlotId& slot, const sql::SlotValue& value, const ClauseContext& ctx);

/// Lexicon plus question grammar, loaded from JSON data.
class Grammar {
 public:
  /// The grammar shipped in data/nlg/grammar.json (compiled in).
  static const Grammar& builtin();
  static Grammar from_json(const nlohmann::json& value);
  static Grammar from_file(const std::string& path);

  const std::vector<LexiconEntry>& lexicon() const { return lexicon_; }
  const std::vector<Rule>& rules() const { return rules_; }

  std::string describe(sql::Agg agg) const;
  std::string describe(sql::Op op) const;
  std::string describe(const sql::OrderSpec& order) const;
  std::string describe_column(std::string_view column, const ClauseContext& ctx) const;

  /// Inverse lookup of a lexicon phrase; nullptr if unknown.
  const LexiconEntry* lookup_phrase(Category category, std::string_view phrase) const;

  std::vector<const Rule*> matching(sql::Mode mode, std::string_view slot, std::string_view variant) const;

  Question generate(const sql::SlotId& slot, const sql::SlotValue& value, const ClauseContext& ctx) const;

 private:
  const LexiconEntry& entry(Category category, std::string_view payload) const;
  const Rule& rule_for(sql::Mode mode, std::string_view slot, std::string_view variant) const;
  std::string fill(const Rule& rule, const std::vector<std::pair<std::string, std::string>>& holes) const;

  std::vector<LexiconEntry> lexicon_;
  std::vector<Rule> rules_;
};

/// Text of the question asking whether `slot` should take `value`.
std::string generate_question(const sql::SlotId& slot, const sql::SlotValue& value, const ClauseContext& ctx,
                              const Grammar& grammar = Grammar::builtin());

/// Context for asking about `slot` = `value` after the committed `prefix`.
ClauseContext make_context(const sql::PartialParse& prefix, const sql::SlotId& slot, const sql::SlotValue& value,
                           sql::Mode mode, std::vector<std::string> table_refs,
                           std::vector<std::string> table_names);

}  // namespace misp::nlg
