#include "misp/nlg.hpp"

#include <fstream>
#include <map>

namespace misp::nlg {

extern const char* const kBuiltinGrammarJson;

using sql::SlotKind;

namespace {

std::optional<Category> parse_category(std::string_view text) {
  if (text == "Agg") return Category::Agg;
  if (text == "Op") return Category::Op;
  if (text == "Order") return Category::Order;
  return std::nullopt;
}

std::string_view category_name(Category c) {
  switch (c) {
    case Category::Agg: return "Agg";
    case Category::Op: return "Op";
    case Category::Order: return "Order";
  }
  return "?";
}

std::string_view mode_key(sql::Mode mode) { return sql::to_string(mode); }

std::string unqualified(std::string_view column) {
  const auto dot = column.find('.');
  return std::string(dot == std::string_view::npos ? column : column.substr(dot + 1));
}

std::string table_of(std::string_view column, const ClauseContext& ctx) {
  const auto& refs = ctx.query.table_refs;
  const auto dot = column.find('.');
  std::string table = dot == std::string_view::npos ? (refs.empty() ? "" : refs.front())
                                                    : std::string(column.substr(0, dot));
  for (std::size_t k = 0; k < refs.size() && k < ctx.table_names.size(); ++k) {
    if (sql::fold_case(refs[k]) == sql::fold_case(table)) return ctx.table_names[k];
  }
  return table;
}

const sql::Condition& condition(const std::vector<sql::Condition>& conds, int index, const sql::SlotId& slot) {
  if (index < 0 || static_cast<std::size_t>(index) >= conds.size()) {
    throw NlgError("clause context lacks the condition addressed by " + sql::to_string(slot));
  }
  return conds[index];
}

}  // namespace

std::string slot_key(SlotKind kind) {
  switch (kind) {
    case SlotKind::SelectCol: return "select.col";
    case SlotKind::SelectAgg: return "select.agg";
    case SlotKind::WhereCount: return "where.count";
    case SlotKind::WhereCol: return "where.col";
    case SlotKind::WhereOp: return "where.op";
    case SlotKind::WhereVal: return "where.val";
    case SlotKind::WhereConn: return "where.connector";
    case SlotKind::GroupByCount: return "groupby.count";
    case SlotKind::GroupByCol: return "groupby.col";
    case SlotKind::HavingCount: return "having.count";
    case SlotKind::HavingCol: return "having.col";
    case SlotKind::HavingAgg: return "having.agg";
    case SlotKind::HavingOp: return "having.op";
    case SlotKind::HavingVal: return "having.val";
    case SlotKind::OrderByPresent: return "orderby.present";
    case SlotKind::OrderByCol: return "orderby.col";
    case SlotKind::OrderByAgg: return "orderby.agg";
    case SlotKind::OrderByDir: return "orderby.dir";
  }
  return "?";
}

std::string variant_of(const sql::SlotId& slot, const sql::SlotValue& value, const ClauseContext&) {
  switch (slot.kind) {
    case SlotKind::SelectAgg:
    case SlotKind::HavingAgg:
    case SlotKind::OrderByAgg: {
      const auto* agg = std::get_if<sql::Agg>(&value);
      return agg != nullptr && *agg == sql::Agg::None ? "none" : "agg";
    }
    case SlotKind::WhereVal: {
      const auto* lit = std::get_if<sql::Literal>(&value);
      return lit != nullptr && std::holds_alternative<sql::RootMarker>(*lit) ? "root" : "literal";
    }
    case SlotKind::WhereConn: {
      const auto* conn = std::get_if<sql::Conn>(&value);
      return conn != nullptr && *conn == sql::Conn::Or ? "or" : "and";
    }
    case SlotKind::HavingCount: {
      const auto* n = std::get_if<std::int64_t>(&value);
      return n != nullptr && *n == 0 ? "none" : "some";
    }
    default: return "default";
  }
}

Grammar Grammar::from_json(const nlohmann::json& value) {
  Grammar g;
  try {
    for (const auto& e : value.at("lexicon")) {
      const auto category = parse_category(e.at("category").get<std::string>());
      if (!category) throw NlgError("unknown lexicon category " + e.at("category").dump());
      g.lexicon_.push_back({e.at("phrase").get<std::string>(), *category, e.at("payload").get<std::string>()});
    }
    for (const auto& r : value.at("rules")) {
      const auto& sel = r.at("applies_to");
      g.rules_.push_back({r.at("id").get<std::string>(), r.at("template").get<std::string>(),
                          {sel.at("mode").get<std::string>(), sel.at("slot").get<std::string>(),
                           sel.value("variant", std::string("default"))}});
    }
  } catch (const nlohmann::json::exception& e) {
    throw NlgError(std::string("malformed grammar: ") + e.what());
  }
  // Each payload of the closed enumerations needs exactly one phrase.
  auto require_once = [&](Category c, std::string_view payload) {
    int n = 0;
    for (const auto& e : g.lexicon_) n += (e.category == c && e.payload == payload) ? 1 : 0;
    if (n != 1) {
      throw NlgError("lexicon must hold exactly one " + std::string(category_name(c)) + " entry for \"" +
                     std::string(payload) + "\"");
    }
  };
  for (sql::Agg a : sql::kAllAggs) {
    if (a != sql::Agg::None) require_once(Category::Agg, sql::to_string(a));
  }
  for (sql::Op o : sql::kAllOps) require_once(Category::Op, sql::to_string(o));
  require_once(Category::Order, "asc");
  require_once(Category::Order, "desc");
  return g;
}

const Grammar& Grammar::builtin() {
  static const Grammar kGrammar = from_json(nlohmann::json::parse(kBuiltinGrammarJson));
  return kGrammar;
}

Grammar Grammar::from_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw NlgError("cannot open " + path);
  try {
    return from_json(nlohmann::json::parse(in));
  } catch (const nlohmann::json::parse_error& e) {
    throw NlgError(path + ": " + e.what());
  }
}

const LexiconEntry& Grammar::entry(Category category, std::string_view payload) const {
  for (const auto& e : lexicon_) {
    if (e.category == category && e.payload == payload) return e;
  }
  throw NlgError("no lexicon entry for " + std::string(category_name(category)) + "[" + std::string(payload) + "]");
}

const LexiconEntry* Grammar::lookup_phrase(Category category, std::string_view phrase) const {
  for (const auto& e : lexicon_) {
    if (e.category == category && e.phrase == phrase) return &e;
  }
  return nullptr;
}

std::string Grammar::describe(sql::Agg agg) const { return entry(Category::Agg, sql::to_string(agg)).phrase; }

std::string Grammar::describe(sql::Op op) const { return entry(Category::Op, sql::to_string(op)).phrase; }

std::string Grammar::describe(const sql::OrderSpec& order) const {
  // Phrases carry an optional "(and limited to top N)" part.
  std::string phrase = entry(Category::Order, sql::to_string(order.dir)).phrase;
  const auto open = phrase.find('(');
  const auto close = phrase.find(')', open == std::string::npos ? 0 : open);
  if (open == std::string::npos || close == std::string::npos) return phrase;
  if (!order.limit) {
    std::size_t start = open;
    while (start > 0 && phrase[start - 1] == ' ') --start;
    return phrase.substr(0, start) + phrase.substr(close + 1);
  }
  std::string inner = phrase.substr(open + 1, close - open - 1);
  const auto n = inner.rfind(" N");
  if (n != std::string::npos) inner.replace(n + 1, 1, std::to_string(*order.limit));
  return phrase.substr(0, open) + inner + phrase.substr(close + 1);
}

std::string Grammar::describe_column(std::string_view column, const ClauseContext& ctx) const {
  const bool multi = ctx.query.table_refs.size() > 1;
  const Rule& rule = rule_for(ctx.mode, "column", multi ? "multi" : "single");
  return fill(rule, {{"name", unqualified(column)}, {"table", table_of(column, ctx)}});
}

std::vector<const Rule*> Grammar::matching(sql::Mode mode, std::string_view slot, std::string_view variant) const {
  std::vector<const Rule*> out;
  for (const auto& r : rules_) {
    const bool mode_ok = r.applies_to.mode == "any" || r.applies_to.mode == mode_key(mode);
    if (mode_ok && r.applies_to.slot == slot && r.applies_to.variant == variant) out.push_back(&r);
  }
  return out;
}

const Rule& Grammar::rule_for(sql::Mode mode, std::string_view slot, std::string_view variant) const {
  const auto rules = matching(mode, slot, variant);
  if (rules.size() != 1) {
    throw NlgError(std::to_string(rules.size()) + " rules apply to " + std::string(slot) + "/" +
                   std::string(variant) + " in " + std::string(mode_key(mode)) + " mode");
  }
  return *rules.front();
}

std::string Grammar::fill(const Rule& rule, const std::vector<std::pair<std::string, std::string>>& holes) const {
  std::string out;
  const std::string& t = rule.templ;
  for (std::size_t i = 0; i < t.size();) {
    if (t[i] != '{') {
      out += t[i++];
      continue;
    }
    const auto close = t.find('}', i);
    if (close == std::string::npos) throw NlgError("rule " + rule.id + ": unterminated hole");
    const std::string name = t.substr(i + 1, close - i - 1);
    bool found = false;
    for (const auto& [key, text] : holes) {
      if (key == name) {
        out += text;
        found = true;
        break;
      }
    }
    if (!found) throw NlgError("rule " + rule.id + ": no value for hole {" + name + "}");
    i = close + 1;
  }
  return out;
}

Question Grammar::generate(const sql::SlotId& slot, const sql::SlotValue& value, const ClauseContext& ctx) const {
  const sql::SqlQuery& q = ctx.query;
  const std::string variant = variant_of(slot, value, ctx);
  const Rule& rule = rule_for(ctx.mode, slot_key(slot.kind), variant);
  std::vector<std::pair<std::string, std::string>> holes;
  auto col = [&](std::string_view c) { return describe_column(c, ctx); };
  auto add_group = [&]() {
    if (q.group_by.empty()) throw NlgError("clause context lacks GROUP BY for " + sql::to_string(slot));
    holes.emplace_back("tab", table_of(q.group_by.front(), ctx));
    holes.emplace_back("gcol", col(q.group_by.front()));
  };
  auto agg_phrase = [&](sql::Agg a) { return a == sql::Agg::None ? std::string{} : describe(a); };

  switch (slot.kind) {
    case SlotKind::SelectCol:
    case SlotKind::SelectAgg:
      holes.emplace_back("col", col(q.select.col));
      holes.emplace_back("agg", agg_phrase(q.select.agg));
      break;
    case SlotKind::WhereCol:
    case SlotKind::WhereOp:
    case SlotKind::WhereVal: {
      const auto& c = condition(q.where, slot.index, slot);
      holes.emplace_back("col", col(c.col));
      holes.emplace_back("op", describe(c.op));
      holes.emplace_back("val", sql::render_literal(c.val));
      break;
    }
    case SlotKind::WhereConn:
      holes.emplace_back("col_i", col(condition(q.where, slot.index, slot).col));
      holes.emplace_back("col_j", col(condition(q.where, slot.index + 1, slot).col));
      break;
    case SlotKind::GroupByCol: {
      if (static_cast<std::size_t>(slot.index) >= q.group_by.size()) {
        throw NlgError("clause context lacks " + sql::to_string(slot));
      }
      const std::string& g = q.group_by[slot.index];
      holes.emplace_back("tab", table_of(g, ctx));
      holes.emplace_back("col", col(g));
      break;
    }
    case SlotKind::HavingCount: add_group(); break;
    case SlotKind::HavingCol:
    case SlotKind::HavingAgg:
    case SlotKind::HavingOp:
    case SlotKind::HavingVal: {
      add_group();
      const auto& c = condition(q.having, slot.index, slot);
      holes.emplace_back("col", col(c.col));
      holes.emplace_back("agg", agg_phrase(c.agg));
      holes.emplace_back("op", describe(c.op));
      break;
    }
    case SlotKind::OrderByCol:
    case SlotKind::OrderByAgg:
    case SlotKind::OrderByDir: {
      if (!q.order_by) throw NlgError("clause context lacks ORDER BY for " + sql::to_string(slot));
      const auto& o = *q.order_by;
      holes.emplace_back("col", col(o.col));
      holes.emplace_back("agg", agg_phrase(o.agg));
      holes.emplace_back("agg_col", o.agg == sql::Agg::None ? col(o.col) : describe(o.agg) + " " + col(o.col));
      holes.emplace_back("order", describe(sql::OrderSpec{o.dir, o.limit}));
      break;
    }
    case SlotKind::WhereCount:
    case SlotKind::GroupByCount:
    case SlotKind::OrderByPresent:
      break;
  }
  return {rule.id, fill(rule, holes)};
}

std::string generate_question(const sql::SlotId& slot, const sql::SlotValue& value, const ClauseContext& ctx,
                              const Grammar& grammar) {
  return grammar.generate(slot, value, ctx).text;
}

ClauseContext make_context(const sql::PartialParse& prefix, const sql::SlotId& slot, const sql::SlotValue& value,
                           sql::Mode mode, std::vector<std::string> table_refs,
                           std::vector<std::string> table_names) {
  sql::PartialParse with_value = prefix;
  with_value.push_back({slot, value});
  ClauseContext ctx;
  ctx.mode = mode;
  ctx.query = sql::assemble(with_value, std::move(table_refs));
  ctx.table_names = std::move(table_names);
  return ctx;
}

}  // namespace misp::nlg
