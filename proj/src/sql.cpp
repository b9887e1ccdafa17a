#include "misp/sql.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <map>
#include <sstream>
#include <tuple>

namespace misp::sql {

namespace {

template <typename E, std::size_t N>
std::optional<E> lookup(const std::pair<E, std::string_view> (&table)[N], std::string_view text) {
  for (const auto& [value, name] : table) {
    if (name == text) return value;
  }
  return std::nullopt;
}

template <typename E, std::size_t N>
std::string_view name_of(const std::pair<E, std::string_view> (&table)[N], E value) {
  for (const auto& [v, name] : table) {
    if (v == value) return name;
  }
  return "?";
}

constexpr std::pair<Agg, std::string_view> kAggNames[] = {
    {Agg::None, "none"}, {Agg::Max, "max"}, {Agg::Min, "min"},
    {Agg::Count, "count"}, {Agg::Sum, "sum"}, {Agg::Avg, "avg"}};
constexpr std::pair<Op, std::string_view> kOpNames[] = {
    {Op::Eq, "eq"}, {Op::Gt, "gt"},     {Op::Lt, "lt"},        {Op::Ge, "ge"},     {Op::Le, "le"},
    {Op::Ne, "ne"}, {Op::In, "in"},     {Op::NotIn, "not_in"}, {Op::Like, "like"}, {Op::Between, "between"}};
constexpr std::pair<Conn, std::string_view> kConnNames[] = {{Conn::And, "and"}, {Conn::Or, "or"}};
constexpr std::pair<Dir, std::string_view> kDirNames[] = {{Dir::Asc, "asc"}, {Dir::Desc, "desc"}};
constexpr std::pair<Mode, std::string_view> kModeNames[] = {{Mode::WikiSql, "wikisql"},
                                                            {Mode::Spider, "spider"}};

std::string_view sql_op(Op op) {
  switch (op) {
    case Op::Eq: return "=";
    case Op::Gt: return ">";
    case Op::Lt: return "<";
    case Op::Ge: return ">=";
    case Op::Le: return "<=";
    case Op::Ne: return "!=";
    case Op::In: return "IN";
    case Op::NotIn: return "NOT IN";
    case Op::Like: return "LIKE";
    case Op::Between: return "BETWEEN";
  }
  return "?";
}

std::string quote_sql(std::string_view text) {
  std::string out = "'";
  for (char c : text) {
    if (c == '\'') out += '\'';
    out += c;
  }
  out += '\'';
  return out;
}

std::string sql_literal(const Literal& literal) {
  if (const auto* text = std::get_if<std::string>(&literal)) return quote_sql(*text);
  if (const auto* pair = std::get_if<NumberPair>(&literal)) {
    return format_number(pair->low) + " AND " + format_number(pair->high);
  }
  if (std::holds_alternative<RootMarker>(literal)) return "(subquery)";
  return format_number(std::get<double>(literal));
}

std::string agg_column(Agg agg, const std::string& col) {
  const std::string name = col.empty() ? "?" : col;
  if (agg == Agg::None) return name;
  return std::string(to_string(agg)) + "(" + name + ")";
}

void render_conditions(std::ostringstream& out, const std::vector<Condition>& conds) {
  for (std::size_t i = 0; i < conds.size(); ++i) {
    const Condition& c = conds[i];
    if (i > 0) out << (conds[i - 1].conn == Conn::Or ? " OR " : " AND ");
    out << agg_column(c.agg, c.col) << ' ' << sql_op(c.op) << ' ' << sql_literal(c.val);
  }
}

bool all_and(const std::vector<Condition>& conds) {
  for (std::size_t i = 0; i + 1 < conds.size(); ++i) {
    if (conds[i].conn != Conn::And) return false;
  }
  return true;
}

void canonicalize_conditions(std::vector<Condition>& conds) {
  for (Condition& c : conds) c.col = fold_case(c.col);
  if (all_and(conds)) {
    for (Condition& c : conds) c.conn = Conn::And;
    std::stable_sort(conds.begin(), conds.end(), [](const Condition& a, const Condition& b) {
      return std::make_tuple(a.col, static_cast<int>(a.op), render_literal(a.val), static_cast<int>(a.agg)) <
             std::make_tuple(b.col, static_cast<int>(b.op), render_literal(b.val), static_cast<int>(b.agg));
    });
  }
  if (!conds.empty()) conds.back().conn = Conn::And;
}

nlohmann::json number_json(double value) {
  double integral = 0;
  if (std::modf(value, &integral) == 0.0 && std::fabs(value) < 9.0e15) {
    return static_cast<std::int64_t>(value);
  }
  return value;
}

nlohmann::json condition_to_json(const Condition& c, bool with_agg) {
  nlohmann::json out = {{"col", c.col},
                        {"op", to_string(c.op)},
                        {"val", literal_to_json(c.val)},
                        {"conn", to_string(c.conn)}};
  if (with_agg) out["agg"] = to_string(c.agg);
  return out;
}

const nlohmann::json& require(const nlohmann::json& obj, const char* key, const std::string& path) {
  auto it = obj.find(key);
  if (it == obj.end()) throw DecodeError(path, std::string("missing key \"") + key + "\"");
  return *it;
}

std::string require_string(const nlohmann::json& value, const std::string& path) {
  if (!value.is_string()) throw DecodeError(path, "expected string");
  return value.get<std::string>();
}

template <typename E>
E require_enum(const nlohmann::json& value, const std::string& path,
               std::optional<E> (*parse)(std::string_view), const char* what) {
  const std::string text = require_string(value, path);
  auto parsed = parse(text);
  if (!parsed) throw DecodeError(path, std::string("unknown ") + what + " code \"" + text + "\"");
  return *parsed;
}

Condition condition_from_json(const nlohmann::json& value, const std::string& path, bool with_agg) {
  if (!value.is_object()) throw DecodeError(path, "expected object");
  Condition c;
  c.col = require_string(require(value, "col", path), path + ".col");
  c.op = require_enum<Op>(require(value, "op", path), path + ".op", parse_op, "operator");
  c.val = literal_from_json(require(value, "val", path), path + ".val");
  if (auto it = value.find("conn"); it != value.end()) {
    c.conn = require_enum<Conn>(*it, path + ".conn", parse_conn, "connector");
  }
  if (auto it = value.find("agg"); it != value.end()) {
    if (!with_agg) throw DecodeError(path + ".agg", "aggregator not allowed in WHERE condition");
    c.agg = require_enum<Agg>(*it, path + ".agg", parse_agg, "aggregator");
  }
  return c;
}

std::vector<Condition> conditions_from_json(const nlohmann::json& value, const std::string& path,
                                            bool with_agg) {
  if (!value.is_array()) throw DecodeError(path, "expected array");
  std::vector<Condition> out;
  for (std::size_t i = 0; i < value.size(); ++i) {
    out.push_back(condition_from_json(value[i], path + "[" + std::to_string(i) + "]", with_agg));
  }
  return out;
}

void validate_conditions(const std::vector<Condition>& conds, const std::string& path) {
  for (std::size_t i = 0; i < conds.size(); ++i) {
    const std::string at = path + "[" + std::to_string(i) + "]";
    const Condition& c = conds[i];
    if (c.col.empty()) throw DecodeError(at + ".col", "empty column name");
    const bool pair = std::holds_alternative<NumberPair>(c.val);
    if (c.op == Op::Between && !pair) throw DecodeError(at + ".val", "between needs two numeric endpoints");
    if (c.op != Op::Between && pair) throw DecodeError(at + ".val", "number pair only valid for between");
  }
}

}  // namespace

std::string_view to_string(Agg agg) { return name_of(kAggNames, agg); }
std::string_view to_string(Op op) { return name_of(kOpNames, op); }
std::string_view to_string(Conn conn) { return name_of(kConnNames, conn); }
std::string_view to_string(Dir dir) { return name_of(kDirNames, dir); }
std::string_view to_string(Mode mode) { return name_of(kModeNames, mode); }

std::optional<Agg> parse_agg(std::string_view text) { return lookup(kAggNames, text); }
std::optional<Op> parse_op(std::string_view text) { return lookup(kOpNames, text); }
std::optional<Conn> parse_conn(std::string_view text) { return lookup(kConnNames, text); }
std::optional<Dir> parse_dir(std::string_view text) { return lookup(kDirNames, text); }
std::optional<Mode> parse_mode(std::string_view text) { return lookup(kModeNames, text); }

std::string fold_case(std::string_view text) {
  std::string out(text);
  for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

std::string format_number(double value) {
  if (value == 0) return "0";
  double integral = 0;
  if (std::modf(value, &integral) == 0.0 && std::fabs(value) < 1e15) {
    return std::to_string(static_cast<std::int64_t>(value));
  }
  char buf[64];
  for (int precision = 1; precision <= 17; ++precision) {
    std::snprintf(buf, sizeof buf, "%.*g", precision, value);
    if (std::strtod(buf, nullptr) == value) break;
  }
  return buf;
}

std::string render_literal(const Literal& literal) {
  if (const auto* text = std::get_if<std::string>(&literal)) return *text;
  if (const auto* pair = std::get_if<NumberPair>(&literal)) {
    return format_number(pair->low) + " and " + format_number(pair->high);
  }
  if (std::holds_alternative<RootMarker>(literal)) return "root";
  return format_number(std::get<double>(literal));
}

void validate(const SqlQuery& query) {
  if (query.table_refs.empty()) throw DecodeError("$.table_ids", "at least one table required");
  if (query.select.col.empty()) throw DecodeError("$.select.col", "empty column name");
  for (const Condition& c : query.where) {
    if (c.agg != Agg::None) throw DecodeError("$.where", "aggregator not allowed in WHERE condition");
  }
  validate_conditions(query.where, "$.where");
  validate_conditions(query.having, "$.having");
  if (!query.having.empty() && query.group_by.empty()) {
    throw DecodeError("$.having", "having requires a non-empty group_by");
  }
  if (query.order_by) {
    if (query.order_by->col.empty()) throw DecodeError("$.order_by.col", "empty column name");
    if (query.order_by->limit && *query.order_by->limit < 1) {
      throw DecodeError("$.order_by.limit", "limit must be >= 1");
    }
  }
}

SqlQuery canonicalize(const SqlQuery& query) {
  SqlQuery out = query;
  for (std::string& t : out.table_refs) t = fold_case(t);
  std::sort(out.table_refs.begin(), out.table_refs.end());
  out.table_refs.erase(std::unique(out.table_refs.begin(), out.table_refs.end()), out.table_refs.end());
  out.select.col = fold_case(out.select.col);
  canonicalize_conditions(out.where);
  for (std::string& g : out.group_by) g = fold_case(g);
  std::sort(out.group_by.begin(), out.group_by.end());
  canonicalize_conditions(out.having);
  if (out.order_by) out.order_by->col = fold_case(out.order_by->col);
  return out;
}

bool query_match(const SqlQuery& a, const SqlQuery& b) { return canonicalize(a) == canonicalize(b); }

std::string render_sql(const SqlQuery& query) {
  std::ostringstream out;
  out << "SELECT " << agg_column(query.select.agg, query.select.col) << " FROM ";
  for (std::size_t i = 0; i < query.table_refs.size(); ++i) {
    if (i > 0) out << ", ";
    out << query.table_refs[i];
  }
  if (query.table_refs.empty()) out << '?';
  if (!query.where.empty()) {
    out << " WHERE ";
    render_conditions(out, query.where);
  }
  if (!query.group_by.empty()) {
    out << " GROUP BY ";
    for (std::size_t i = 0; i < query.group_by.size(); ++i) {
      if (i > 0) out << ", ";
      out << (query.group_by[i].empty() ? "?" : query.group_by[i]);
    }
  }
  if (!query.having.empty()) {
    out << " HAVING ";
    render_conditions(out, query.having);
  }
  if (query.order_by) {
    out << " ORDER BY " << agg_column(query.order_by->agg, query.order_by->col)
        << (query.order_by->dir == Dir::Desc ? " DESC" : " ASC");
    if (query.order_by->limit) out << " LIMIT " << *query.order_by->limit;
  }
  return out.str();
}

nlohmann::json literal_to_json(const Literal& literal) {
  if (const auto* text = std::get_if<std::string>(&literal)) return *text;
  if (const auto* pair = std::get_if<NumberPair>(&literal)) {
    return nlohmann::json::array({number_json(pair->low), number_json(pair->high)});
  }
  if (std::holds_alternative<RootMarker>(literal)) return {{"root", true}};
  return number_json(std::get<double>(literal));
}

Literal literal_from_json(const nlohmann::json& value, const std::string& path) {
  if (value.is_string()) return value.get<std::string>();
  if (value.is_number()) return value.get<double>();
  if (value.is_array()) {
    if (value.size() != 2 || !value[0].is_number() || !value[1].is_number()) {
      throw DecodeError(path, "number pair must hold exactly two numbers");
    }
    return NumberPair{value[0].get<double>(), value[1].get<double>()};
  }
  if (value.is_object() && value.size() == 1 && value.contains("root") && value["root"] == true) {
    return RootMarker{};
  }
  throw DecodeError(path, "expected text, number, number pair or {\"root\":true}");
}

nlohmann::json to_json(const SqlQuery& query) {
  nlohmann::json out;
  out["table_ids"] = query.table_refs;
  out["select"] = {{"agg", to_string(query.select.agg)}, {"col", query.select.col}};
  out["where"] = nlohmann::json::array();
  for (const Condition& c : query.where) out["where"].push_back(condition_to_json(c, false));
  if (!query.group_by.empty()) out["group_by"] = query.group_by;
  if (!query.having.empty()) {
    out["having"] = nlohmann::json::array();
    for (const Condition& c : query.having) out["having"].push_back(condition_to_json(c, true));
  }
  if (query.order_by) {
    nlohmann::json order = {{"col", query.order_by->col},
                            {"agg", to_string(query.order_by->agg)},
                            {"dir", to_string(query.order_by->dir)}};
    if (query.order_by->limit) order["limit"] = *query.order_by->limit;
    out["order_by"] = std::move(order);
  }
  return out;
}

SqlQuery query_from_json(const nlohmann::json& value, const std::string& path) {
  if (!value.is_object()) throw DecodeError(path, "expected object");
  SqlQuery q;
  const auto& tables = require(value, "table_ids", path);
  if (!tables.is_array()) throw DecodeError(path + ".table_ids", "expected array");
  for (std::size_t i = 0; i < tables.size(); ++i) {
    q.table_refs.push_back(require_string(tables[i], path + ".table_ids[" + std::to_string(i) + "]"));
  }
  const auto& select = require(value, "select", path);
  if (!select.is_object()) throw DecodeError(path + ".select", "expected object");
  q.select.col = require_string(require(select, "col", path + ".select"), path + ".select.col");
  if (auto it = select.find("agg"); it != select.end()) {
    q.select.agg = require_enum<Agg>(*it, path + ".select.agg", parse_agg, "aggregator");
  }
  if (auto it = value.find("where"); it != value.end()) {
    q.where = conditions_from_json(*it, path + ".where", false);
  }
  if (auto it = value.find("group_by"); it != value.end() && !it->is_null()) {
    if (!it->is_array()) throw DecodeError(path + ".group_by", "expected array");
    for (std::size_t i = 0; i < it->size(); ++i) {
      q.group_by.push_back(require_string((*it)[i], path + ".group_by[" + std::to_string(i) + "]"));
    }
  }
  if (auto it = value.find("having"); it != value.end() && !it->is_null()) {
    q.having = conditions_from_json(*it, path + ".having", true);
  }
  if (auto it = value.find("order_by"); it != value.end() && !it->is_null()) {
    const std::string at = path + ".order_by";
    if (!it->is_object()) throw DecodeError(at, "expected object");
    OrderBy order;
    order.col = require_string(require(*it, "col", at), at + ".col");
    if (auto a = it->find("agg"); a != it->end()) {
      order.agg = require_enum<Agg>(*a, at + ".agg", parse_agg, "aggregator");
    }
    order.dir = require_enum<Dir>(require(*it, "dir", at), at + ".dir", parse_dir, "direction");
    if (auto l = it->find("limit"); l != it->end() && !l->is_null()) {
      if (!l->is_number_integer()) throw DecodeError(at + ".limit", "expected integer");
      order.limit = l->get<std::int64_t>();
    }
    q.order_by = order;
  }
  try {
    validate(q);
  } catch (const DecodeError& e) {
    // validate() reports paths relative to the query root.
    throw DecodeError(path + e.path().substr(1), std::string(e.what()).substr(e.path().size() + 2));
  }
  return q;
}

std::string encode_query(const SqlQuery& query) { return to_json(query).dump(); }

SqlQuery decode_query(std::string_view text) {
  nlohmann::json parsed;
  try {
    parsed = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw DecodeError("$", std::string("malformed JSON: ") + e.what());
  }
  return query_from_json(parsed, "$");
}

// ---------------------------------------------------------------------------
// Slots

namespace {

struct SlotName {
  SlotKind kind;
  std::string_view prefix;  // text before the index (if indexed)
  std::string_view suffix;  // text after the index
  bool indexed;
};

constexpr SlotName kSlotNames[] = {
    {SlotKind::SelectCol, "select.col", "", false},
    {SlotKind::SelectAgg, "select.agg", "", false},
    {SlotKind::WhereCount, "where.count", "", false},
    {SlotKind::WhereCol, "where[", "].col", true},
    {SlotKind::WhereOp, "where[", "].op", true},
    {SlotKind::WhereVal, "where[", "].val", true},
    {SlotKind::WhereConn, "where.connector[", "]", true},
    {SlotKind::GroupByCount, "groupby.count", "", false},
    {SlotKind::GroupByCol, "groupby[", "].col", true},
    {SlotKind::HavingCount, "having.count", "", false},
    {SlotKind::HavingCol, "having[", "].col", true},
    {SlotKind::HavingAgg, "having[", "].agg", true},
    {SlotKind::HavingOp, "having[", "].op", true},
    {SlotKind::HavingVal, "having[", "].val", true},
    {SlotKind::OrderByPresent, "orderby.present", "", false},
    {SlotKind::OrderByCol, "orderby.col", "", false},
    {SlotKind::OrderByAgg, "orderby.agg", "", false},
    {SlotKind::OrderByDir, "orderby.dir", "", false},
};

}  // namespace

std::string to_string(const SlotId& slot) {
  for (const SlotName& n : kSlotNames) {
    if (n.kind != slot.kind) continue;
    if (!n.indexed) return std::string(n.prefix);
    return std::string(n.prefix) + std::to_string(slot.index) + std::string(n.suffix);
  }
  return "?";
}

std::optional<SlotId> parse_slot(std::string_view text) {
  for (const SlotName& n : kSlotNames) {
    if (!n.indexed) {
      if (text == n.prefix) return SlotId{n.kind, 0};
      continue;
    }
    if (!text.starts_with(n.prefix) || !text.ends_with(n.suffix)) continue;
    std::string_view digits = text.substr(n.prefix.size(), text.size() - n.prefix.size() - n.suffix.size());
    if (digits.empty()) continue;
    int index = 0;
    auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), index);
    if (ec != std::errc{} || ptr != digits.data() + digits.size() || index < 0) continue;
    return SlotId{n.kind, index};
  }
  return std::nullopt;
}

bool is_internal(SlotKind kind) {
  return kind == SlotKind::WhereCount || kind == SlotKind::GroupByCount || kind == SlotKind::HavingCount ||
         kind == SlotKind::OrderByPresent;
}

bool is_askable(SlotKind kind) { return !is_internal(kind) && kind != SlotKind::HavingVal; }

std::string render_slot_value(const SlotValue& value) {
  struct Visitor {
    std::string operator()(std::int64_t n) const { return std::to_string(n); }
    std::string operator()(const std::string& col) const { return col; }
    std::string operator()(Agg agg) const { return std::string(to_string(agg)); }
    std::string operator()(Op op) const { return std::string(to_string(op)); }
    std::string operator()(const Literal& lit) const { return render_literal(lit); }
    std::string operator()(Conn conn) const { return std::string(to_string(conn)); }
    std::string operator()(const OrderSpec& order) const {
      std::string out(to_string(order.dir));
      if (order.limit) out += " limit " + std::to_string(*order.limit);
      return out;
    }
  };
  return std::visit(Visitor{}, value);
}

nlohmann::json slot_value_to_json(const SlotValue& value) {
  struct Visitor {
    nlohmann::json operator()(std::int64_t n) const { return n; }
    nlohmann::json operator()(const std::string& col) const { return col; }
    nlohmann::json operator()(Agg agg) const { return to_string(agg); }
    nlohmann::json operator()(Op op) const { return to_string(op); }
    nlohmann::json operator()(const Literal& lit) const { return literal_to_json(lit); }
    nlohmann::json operator()(Conn conn) const { return to_string(conn); }
    nlohmann::json operator()(const OrderSpec& order) const {
      if (!order.limit) return to_string(order.dir);
      return {{"dir", to_string(order.dir)}, {"limit", *order.limit}};
    }
  };
  return std::visit(Visitor{}, value);
}

SlotValue slot_value_from_json(SlotKind kind, const nlohmann::json& value, const std::string& path) {
  switch (kind) {
    case SlotKind::WhereCount:
    case SlotKind::GroupByCount:
    case SlotKind::HavingCount:
    case SlotKind::OrderByPresent: {
      if (!value.is_number_integer() || value.get<std::int64_t>() < 0) {
        throw DecodeError(path, "expected non-negative integer");
      }
      return value.get<std::int64_t>();
    }
    case SlotKind::SelectCol:
    case SlotKind::WhereCol:
    case SlotKind::GroupByCol:
    case SlotKind::HavingCol:
    case SlotKind::OrderByCol:
      return require_string(value, path);
    case SlotKind::SelectAgg:
    case SlotKind::HavingAgg:
    case SlotKind::OrderByAgg:
      return require_enum<Agg>(value, path, parse_agg, "aggregator");
    case SlotKind::WhereOp:
    case SlotKind::HavingOp:
      return require_enum<Op>(value, path, parse_op, "operator");
    case SlotKind::WhereVal:
    case SlotKind::HavingVal:
      return literal_from_json(value, path);
    case SlotKind::WhereConn:
      return require_enum<Conn>(value, path, parse_conn, "connector");
    case SlotKind::OrderByDir: {
      if (value.is_string()) return OrderSpec{require_enum<Dir>(value, path, parse_dir, "direction"), {}};
      if (!value.is_object()) throw DecodeError(path, "expected direction");
      OrderSpec spec;
      spec.dir = require_enum<Dir>(require(value, "dir", path), path + ".dir", parse_dir, "direction");
      if (auto it = value.find("limit"); it != value.end()) {
        if (!it->is_number_integer() || it->get<std::int64_t>() < 1) {
          throw DecodeError(path + ".limit", "limit must be a positive integer");
        }
        spec.limit = it->get<std::int64_t>();
      }
      return spec;
    }
  }
  throw DecodeError(path, "unknown slot kind");
}

namespace {

bool literals_equal(const Literal& a, const Literal& b) {
  if (a.index() != b.index()) return false;
  return a == b;
}

}  // namespace

bool slot_values_equal(const SlotValue& a, const SlotValue& b) {
  if (a.index() != b.index()) return false;
  if (const auto* col = std::get_if<std::string>(&a)) return fold_case(*col) == fold_case(std::get<std::string>(b));
  if (const auto* lit = std::get_if<Literal>(&a)) return literals_equal(*lit, std::get<Literal>(b));
  return a == b;
}

std::optional<SlotId> next_slot(const PartialParse& partial, Mode mode) {
  std::size_t pos = 0;
  std::optional<SlotId> found;
  // Returns true once the first unfilled slot is reached.
  auto visit = [&](SlotKind kind, int index = 0) {
    SlotId slot{kind, index};
    if (pos == partial.size()) {
      found = slot;
      return true;
    }
    if (partial[pos].slot != slot) {
      throw std::logic_error("partial parse out of slot order at " + std::to_string(pos) + ": expected " +
                             to_string(slot) + ", found " + to_string(partial[pos].slot));
    }
    ++pos;
    return false;
  };
  auto count_before = [&]() -> std::int64_t {
    const auto* n = std::get_if<std::int64_t>(&partial[pos - 1].value);
    if (n == nullptr || *n < 0) throw std::logic_error("count slot holds a non-count value");
    return *n;
  };

  if (visit(SlotKind::SelectCol) || visit(SlotKind::SelectAgg) || visit(SlotKind::WhereCount)) return found;
  const std::int64_t where_count = count_before();
  for (int i = 0; i < where_count; ++i) {
    if (visit(SlotKind::WhereCol, i) || visit(SlotKind::WhereOp, i) || visit(SlotKind::WhereVal, i)) return found;
    if (mode == Mode::Spider && i >= 1 && visit(SlotKind::WhereConn, i - 1)) return found;
  }
  if (mode == Mode::WikiSql) return std::nullopt;

  if (visit(SlotKind::GroupByCount)) return found;
  const std::int64_t group_count = count_before();
  for (int g = 0; g < group_count; ++g) {
    if (visit(SlotKind::GroupByCol, g)) return found;
  }
  if (group_count > 0) {
    if (visit(SlotKind::HavingCount)) return found;
    const std::int64_t having_count = count_before();
    for (int j = 0; j < having_count; ++j) {
      if (visit(SlotKind::HavingCol, j) || visit(SlotKind::HavingAgg, j) || visit(SlotKind::HavingOp, j) ||
          visit(SlotKind::HavingVal, j)) {
        return found;
      }
    }
  }
  if (visit(SlotKind::OrderByPresent)) return found;
  if (count_before() > 0) {
    if (visit(SlotKind::OrderByCol) || visit(SlotKind::OrderByAgg) || visit(SlotKind::OrderByDir)) return found;
  }
  return std::nullopt;
}

SqlQuery assemble(const PartialParse& partial, std::vector<std::string> table_refs) {
  SqlQuery q;
  q.table_refs = std::move(table_refs);
  auto count = [](const SlotValue& v) { return static_cast<std::size_t>(std::get<std::int64_t>(v)); };
  auto at = [](std::vector<Condition>& conds, int index) -> Condition& {
    if (static_cast<std::size_t>(index) >= conds.size()) conds.resize(index + 1);
    return conds[index];
  };
  for (const SlotEntry& e : partial) {
    const int i = e.slot.index;
    switch (e.slot.kind) {
      case SlotKind::SelectCol: q.select.col = std::get<std::string>(e.value); break;
      case SlotKind::SelectAgg: q.select.agg = std::get<Agg>(e.value); break;
      case SlotKind::WhereCount: q.where.resize(count(e.value)); break;
      case SlotKind::WhereCol: at(q.where, i).col = std::get<std::string>(e.value); break;
      case SlotKind::WhereOp: at(q.where, i).op = std::get<Op>(e.value); break;
      case SlotKind::WhereVal: at(q.where, i).val = std::get<Literal>(e.value); break;
      case SlotKind::WhereConn: at(q.where, i).conn = std::get<Conn>(e.value); break;
      case SlotKind::GroupByCount: q.group_by.resize(count(e.value)); break;
      case SlotKind::GroupByCol:
        if (static_cast<std::size_t>(i) >= q.group_by.size()) q.group_by.resize(i + 1);
        q.group_by[i] = std::get<std::string>(e.value);
        break;
      case SlotKind::HavingCount: q.having.resize(count(e.value)); break;
      case SlotKind::HavingCol: at(q.having, i).col = std::get<std::string>(e.value); break;
      case SlotKind::HavingAgg: at(q.having, i).agg = std::get<Agg>(e.value); break;
      case SlotKind::HavingOp: at(q.having, i).op = std::get<Op>(e.value); break;
      case SlotKind::HavingVal: at(q.having, i).val = std::get<Literal>(e.value); break;
      case SlotKind::OrderByPresent:
        if (count(e.value) > 0) q.order_by = OrderBy{};
        break;
      case SlotKind::OrderByCol:
        if (!q.order_by) q.order_by = OrderBy{};
        q.order_by->col = std::get<std::string>(e.value);
        break;
      case SlotKind::OrderByAgg:
        if (!q.order_by) q.order_by = OrderBy{};
        q.order_by->agg = std::get<Agg>(e.value);
        break;
      case SlotKind::OrderByDir: {
        if (!q.order_by) q.order_by = OrderBy{};
        const auto& spec = std::get<OrderSpec>(e.value);
        q.order_by->dir = spec.dir;
        q.order_by->limit = spec.limit;
        break;
      }
    }
  }
  return q;
}

std::optional<SlotValue> value_at(const SqlQuery& query, const SlotId& slot) {
  const auto i = static_cast<std::size_t>(slot.index);
  auto cond = [&](const std::vector<Condition>& conds) -> const Condition* {
    return i < conds.size() ? &conds[i] : nullptr;
  };
  switch (slot.kind) {
    case SlotKind::SelectCol: return SlotValue{query.select.col};
    case SlotKind::SelectAgg: return SlotValue{query.select.agg};
    case SlotKind::WhereCount: return SlotValue{static_cast<std::int64_t>(query.where.size())};
    case SlotKind::WhereCol:
      if (auto* c = cond(query.where)) return SlotValue{c->col};
      return std::nullopt;
    case SlotKind::WhereOp:
      if (auto* c = cond(query.where)) return SlotValue{c->op};
      return std::nullopt;
    case SlotKind::WhereVal:
      if (auto* c = cond(query.where)) return SlotValue{c->val};
      return std::nullopt;
    case SlotKind::WhereConn:
      if (i + 1 < query.where.size()) return SlotValue{query.where[i].conn};
      return std::nullopt;
    case SlotKind::GroupByCount: return SlotValue{static_cast<std::int64_t>(query.group_by.size())};
    case SlotKind::GroupByCol:
      if (i < query.group_by.size()) return SlotValue{query.group_by[i]};
      return std::nullopt;
    case SlotKind::HavingCount: return SlotValue{static_cast<std::int64_t>(query.having.size())};
    case SlotKind::HavingCol:
      if (auto* c = cond(query.having)) return SlotValue{c->col};
      return std::nullopt;
    case SlotKind::HavingAgg:
      if (auto* c = cond(query.having)) return SlotValue{c->agg};
      return std::nullopt;
    case SlotKind::HavingOp:
      if (auto* c = cond(query.having)) return SlotValue{c->op};
      return std::nullopt;
    case SlotKind::HavingVal:
      if (auto* c = cond(query.having)) return SlotValue{c->val};
      return std::nullopt;
    case SlotKind::OrderByPresent: return SlotValue{static_cast<std::int64_t>(query.order_by ? 1 : 0)};
    case SlotKind::OrderByCol:
      if (query.order_by) return SlotValue{query.order_by->col};
      return std::nullopt;
    case SlotKind::OrderByAgg:
      if (query.order_by) return SlotValue{query.order_by->agg};
      return std::nullopt;
    case SlotKind::OrderByDir:
      if (query.order_by) return SlotValue{OrderSpec{query.order_by->dir, query.order_by->limit}};
      return std::nullopt;
  }
  return std::nullopt;
}

PartialParse decompose(const SqlQuery& query, Mode mode) {
  PartialParse partial;
  while (auto slot = next_slot(partial, mode)) {
    auto value = value_at(query, *slot);
    if (!value) throw std::logic_error("query has no value for slot " + to_string(*slot));
    partial.push_back({*slot, *value});
  }
  return partial;
}

}  // namespace misp::sql
