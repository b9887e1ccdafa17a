#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <json.hpp>

namespace misp::sql {

enum class Agg { None, Max, Min, Count, Sum, Avg };
enum class Op { Eq, Gt, Lt, Ge, Le, Ne, In, NotIn, Like, Between };
enum class Conn { And, Or };
enum class Dir { Asc, Desc };
enum class Mode { WikiSql, Spider };

inline constexpr Agg kAllAggs[] = {Agg::None, Agg::Max, Agg::Min, Agg::Count, Agg::Sum, Agg::Avg};
inline constexpr Op kAllOps[] = {Op::Eq, Op::Gt, Op::Lt, Op::Ge, Op::Le,
                                 Op::Ne, Op::In, Op::NotIn, Op::Like, Op::Between};

std::string_view to_string(Agg agg);
std::string_view to_string(Op op);
std::string_view to_string(Conn conn);
std::string_view to_string(Dir dir);
std::string_view to_string(Mode mode);

// Parsers for the closed enumerations; nullopt on unknown codes.
std::optional<Agg> parse_agg(std::string_view text);
std::optional<Op> parse_op(std::string_view text);
std::optional<Conn> parse_conn(std::string_view text);
std::optional<Dir> parse_dir(std::string_view text);
std::optional<Mode> parse_mode(std::string_view text);

/// Thrown by decoders with the JSON path of the offending element.
class DecodeError : public std::runtime_error {
 public:
  DecodeError(std::string path, const std::string& what)
      : std::runtime_error(path + ": " + what), path_(std::move(path)) {}
  const std::string& path() const { return path_; }

 private:
  std::string path_;
};

/// Placeholder for a value computed by a nested query.
struct RootMarker {
  bool operator==(const RootMarker&) const = default;
};

struct NumberPair {
  double low = 0;
  double high = 0;
  bool operator==(const NumberPair&) const = default;
};

/// Condition payload: literal text, number, number pair (between), or root marker.
using Literal = std::variant<std::string, double, NumberPair, RootMarker>;

/// Shortest decimal text that round-trips the double ("30", "2.5", "-0.125").
std::string format_number(double value);
std::string render_literal(const Literal& literal);

struct Condition {
  std::string col;
  Op op = Op::Eq;
  Literal val = std::string{};
  Conn conn = Conn::And;
  // Only meaningful in HAVING conditions.
  Agg agg = Agg::None;

  bool operator==(const Condition&) const = default;
};

struct Select {
  Agg agg = Agg::None;
  std::string col;
  bool operator==(const Select&) const = default;
};

struct OrderBy {
  std::string col;
  Agg agg = Agg::None;
  Dir dir = Dir::Asc;
  std::optional<std::int64_t> limit;
  bool operator==(const OrderBy&) const = default;
};

/// Structured SQL parse: WikiSQL sketch plus GROUP BY / HAVING / ORDER BY.
struct SqlQuery {
  std::vector<std::string> table_refs;
  Select select;
  std::vector<Condition> where;
  std::vector<std::string> group_by;
  std::vector<Condition> having;
  std::optional<OrderBy> order_by;

  bool operator==(const SqlQuery&) const = default;
};

/// Throws DecodeError when an invariant of SqlQuery does not hold.
void validate(const SqlQuery& query);

SqlQuery canonicalize(const SqlQuery& query);
bool query_match(const SqlQuery& a, const SqlQuery& b);
std::string render_sql(const SqlQuery& query);

nlohmann::json to_json(const SqlQuery& query);
nlohmann::json literal_to_json(const Literal& literal);
Literal literal_from_json(const nlohmann::json& value, const std::string& path);
SqlQuery query_from_json(const nlohmann::json& value, const std::string& path = "$");

std::string encode_query(const SqlQuery& query);
SqlQuery decode_query(std::string_view text);

// ---------------------------------------------------------------------------
// Slot addressing

enum class SlotKind {
  SelectCol,
  SelectAgg,
  WhereCount,
  WhereCol,
  WhereOp,
  WhereVal,
  WhereConn,
  GroupByCount,
  GroupByCol,
  HavingCount,
  HavingCol,
  HavingAgg,
  HavingOp,
  HavingVal,
  OrderByPresent,
  OrderByCol,
  OrderByAgg,
  OrderByDir,
};

struct SlotId {
  SlotKind kind = SlotKind::SelectCol;
  int index = 0;

  auto operator<=>(const SlotId&) const = default;
};

std::string to_string(const SlotId& slot);
std::optional<SlotId> parse_slot(std::string_view text);

/// Count/presence slots are decided by the parser and never asked about.
bool is_internal(SlotKind kind);

/// Slots the agent may ask about: everything except internal slots and HAVING
/// values, which have no question template.
bool is_askable(SlotKind kind);

/// ORDER BY direction with the optional LIMIT folded in.
struct OrderSpec {
  Dir dir = Dir::Asc;
  std::optional<std::int64_t> limit;
  auto operator<=>(const OrderSpec&) const = default;
};

/// The value a single slot takes; the alternative in use depends on the slot kind.
using SlotValue = std::variant<std::int64_t, std::string, Agg, Op, Literal, Conn, OrderSpec>;

std::string render_slot_value(const SlotValue& value);
nlohmann::json slot_value_to_json(const SlotValue& value);
SlotValue slot_value_from_json(SlotKind kind, const nlohmann::json& value, const std::string& path);

/// Canonical equality of two values for the same slot kind (case-folded columns,
/// numeric comparison for numbers).
bool slot_values_equal(const SlotValue& a, const SlotValue& b);

struct SlotEntry {
  SlotId slot;
  SlotValue value;
};

using PartialParse = std::vector<SlotEntry>;

/// Next slot under the fixed left-to-right order, or nullopt once every slot is filled.
std::optional<SlotId> next_slot(const PartialParse& partial, Mode mode);

/// Builds a query from a complete (or partial) parse; missing pieces stay default.
SqlQuery assemble(const PartialParse& partial, std::vector<std::string> table_refs);

/// Value of `slot` in `query`, when the query has that component.
std::optional<SlotValue> value_at(const SqlQuery& query, const SlotId& slot);

/// Slot sequence a parser would emit to produce exactly `query`.
PartialParse decompose(const SqlQuery& query, Mode mode);

std::string fold_case(std::string_view text);

}  // namespace misp::sql
