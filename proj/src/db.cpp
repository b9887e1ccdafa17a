#include "misp/db.hpp"

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <set>
#include <unordered_set>

namespace misp::db {

using sql::Agg;
using sql::Condition;
using sql::Literal;
using sql::Op;
using sql::SqlQuery;

std::string render_cell(const Cell& cell) {
  if (const auto* n = std::get_if<double>(&cell)) return sql::format_number(*n);
  if (const auto* s = std::get_if<std::string>(&cell)) return *s;
  return "NULL";
}

nlohmann::json cell_to_json(const Cell& cell) {
  if (const auto* n = std::get_if<double>(&cell)) return sql::literal_to_json(*n);
  if (const auto* s = std::get_if<std::string>(&cell)) return *s;
  return nullptr;
}

int Table::column_index(std::string_view name) const {
  const std::string folded = sql::fold_case(name);
  for (std::size_t i = 0; i < columns.size(); ++i) {
    if (sql::fold_case(columns[i].name) == folded) return static_cast<int>(i);
  }
  return -1;
}

Table table_from_json(const nlohmann::json& value) {
  if (!value.is_object()) throw std::runtime_error("table must be a JSON object");
  Table table;
  auto str = [&](const char* key) {
    auto it = value.find(key);
    if (it == value.end() || !it->is_string()) throw std::runtime_error(std::string("missing string \"") + key + "\"");
    return it->get<std::string>();
  };
  table.id = str("id");
  table.name = str("name");
  auto cols = value.find("columns");
  if (cols == value.end() || !cols->is_array() || cols->empty()) {
    throw std::runtime_error("\"columns\" must be a non-empty array");
  }
  std::unordered_set<std::string> seen;
  for (const auto& c : *cols) {
    if (!c.is_object() || !c.contains("name") || !c["name"].is_string()) {
      throw std::runtime_error("column needs a string \"name\"");
    }
    Column column{c["name"].get<std::string>(), ColumnType::Text};
    const std::string type = c.value("type", std::string("text"));
    if (type == "number") {
      column.type = ColumnType::Number;
    } else if (type != "text") {
      throw std::runtime_error("column \"" + column.name + "\" has unknown type \"" + type + "\"");
    }
    if (!seen.insert(sql::fold_case(column.name)).second) {
      throw std::runtime_error("duplicate column \"" + column.name + "\"");
    }
    table.columns.push_back(std::move(column));
  }
  auto rows = value.find("rows");
  if (rows == value.end() || !rows->is_array()) throw std::runtime_error("\"rows\" must be an array");
  for (std::size_t r = 0; r < rows->size(); ++r) {
    const auto& row = (*rows)[r];
    if (!row.is_array() || row.size() != table.columns.size()) {
      throw std::runtime_error("row " + std::to_string(r) + " has " +
                               std::to_string(row.is_array() ? row.size() : 0) + " cells, expected " +
                               std::to_string(table.columns.size()) + " columns");
    }
    std::vector<Cell> cells;
    for (std::size_t c = 0; c < row.size(); ++c) {
      const auto& cell = row[c];
      const Column& column = table.columns[c];
      if (cell.is_null()) {
        throw std::runtime_error("row " + std::to_string(r) + " column \"" + column.name + "\" is null");
      }
      if (column.type == ColumnType::Number) {
        if (!cell.is_number()) {
          throw std::runtime_error("row " + std::to_string(r) + " column \"" + column.name + "\" is not a number");
        }
        cells.emplace_back(cell.get<double>());
      } else {
        if (!cell.is_string()) {
          throw std::runtime_error("row " + std::to_string(r) + " column \"" + column.name + "\" is not text");
        }
        cells.emplace_back(cell.get<std::string>());
      }
    }
    table.rows.push_back(std::move(cells));
  }
  return table;
}

nlohmann::json to_json(const Table& table) {
  nlohmann::json out = {{"id", table.id}, {"name", table.name}};
  out["columns"] = nlohmann::json::array();
  for (const Column& c : table.columns) {
    out["columns"].push_back({{"name", c.name}, {"type", c.type == ColumnType::Number ? "number" : "text"}});
  }
  out["rows"] = nlohmann::json::array();
  for (const auto& row : table.rows) {
    nlohmann::json cells = nlohmann::json::array();
    for (const Cell& c : row) cells.push_back(cell_to_json(c));
    out["rows"].push_back(std::move(cells));
  }
  return out;
}

void TableStore::add(Table table) {
  if (tables_.contains(table.id)) throw std::runtime_error("duplicate table id \"" + table.id + "\"");
  std::string id = table.id;
  tables_.emplace(std::move(id), std::move(table));
}

const Table* TableStore::find(std::string_view id) const {
  auto it = tables_.find(id);
  return it == tables_.end() ? nullptr : &it->second;
}

const Table& TableStore::at(std::string_view id) const {
  if (const Table* t = find(id)) return *t;
  throw ExecutionError("unknown table \"" + std::string(id) + "\"");
}

namespace {

template <typename Fn>
void for_each_line(std::istream& in, Fn&& fn) {
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      fn(nlohmann::json::parse(line));
    } catch (const LoadError&) {
      throw;
    } catch (const std::exception& e) {
      throw LoadError(number, e.what());
    }
  }
}

std::ifstream open(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw LoadError(0, "cannot open " + path);
  return in;
}

}  // namespace

TableStore load_tables(std::istream& in) {
  TableStore store;
  for_each_line(in, [&](const nlohmann::json& value) { store.add(table_from_json(value)); });
  return store;
}

TableStore load_tables_file(const std::string& path) {
  auto in = open(path);
  return load_tables(in);
}

std::vector<Example> load_examples(std::istream& in) {
  std::vector<Example> out;
  std::set<std::string> ids;
  for_each_line(in, [&](const nlohmann::json& value) {
    if (!value.is_object()) throw std::runtime_error("example must be a JSON object");
    Example ex;
    ex.id = value.at("id").get<std::string>();
    ex.table_id = value.at("table_id").get<std::string>();
    ex.question = value.at("question").get<std::string>();
    ex.gold = sql::query_from_json(value.at("gold"), "$.gold");
    if (!ids.insert(ex.id).second) throw std::runtime_error("duplicate example id \"" + ex.id + "\"");
    out.push_back(std::move(ex));
  });
  return out;
}

std::vector<Example> load_examples_file(const std::string& path) {
  auto in = open(path);
  return load_examples(in);
}

nlohmann::json to_json(const Example& example) {
  return {{"id", example.id},
          {"table_id", example.table_id},
          {"question", example.question},
          {"gold", sql::to_json(example.gold)}};
}

// ---------------------------------------------------------------------------
// Executor

namespace {

bool parse_number(const std::string& text, double& out) {
  if (text.empty()) return false;
  char* end = nullptr;
  out = std::strtod(text.c_str(), &end);
  return end == text.c_str() + text.size();
}

bool contains_ci(std::string_view haystack, std::string_view needle) {
  return sql::fold_case(haystack).find(sql::fold_case(needle)) != std::string::npos;
}

template <typename T>
bool compare(Op op, const T& lhs, const T& rhs) {
  switch (op) {
    case Op::Eq:
    case Op::In: return lhs == rhs;
    case Op::Ne:
    case Op::NotIn: return lhs != rhs;
    case Op::Gt: return lhs > rhs;
    case Op::Lt: return lhs < rhs;
    case Op::Ge: return lhs >= rhs;
    case Op::Le: return lhs <= rhs;
    default: return false;
  }
}

bool test_cell(const Cell& cell, Op op, const Literal& literal) {
  if (std::holds_alternative<std::monostate>(cell)) return false;
  if (op == Op::Between) {
    const auto* range = std::get_if<sql::NumberPair>(&literal);
    const auto* n = std::get_if<double>(&cell);
    if (range == nullptr) throw ExecutionError("between requires two numeric endpoints");
    if (n == nullptr) throw ExecutionError("between requires a numeric column");
    return *n >= range->low && *n <= range->high;
  }
  if (op == Op::Like) return contains_ci(render_cell(cell), sql::render_literal(literal));

  if (const auto* n = std::get_if<double>(&cell)) {
    double rhs = 0;
    if (const auto* num = std::get_if<double>(&literal)) {
      rhs = *num;
    } else if (const auto* text = std::get_if<std::string>(&literal); text && parse_number(*text, rhs)) {
    } else {
      return op == Op::Ne || op == Op::NotIn;
    }
    return compare(op, *n, rhs);
  }
  const auto& text = std::get<std::string>(cell);
  return compare(op, text, sql::render_literal(literal));
}

void check_literal(const Literal& literal) {
  if (std::holds_alternative<sql::RootMarker>(literal)) {
    throw ExecutionError("query contains a nested-query placeholder and cannot be executed");
  }
}

struct Bound {
  const Table* table = nullptr;
  int column(const std::string& name) const {
    const int idx = table->column_index(name);
    if (idx < 0) throw ExecutionError("unknown column \"" + name + "\" in table \"" + table->id + "\"");
    return idx;
  }
};

using RowRefs = std::vector<const std::vector<Cell>*>;

// AND binds tighter than OR; conds[i].conn joins condition i and i+1.
template <typename Test>
bool evaluate_conditions(const std::vector<Condition>& conds, Test&& test) {
  bool any_group = false;
  bool group = true;
  for (std::size_t i = 0; i < conds.size(); ++i) {
    group = test(i, conds[i]) && group;
    const bool last = i + 1 == conds.size();
    if (last || conds[i].conn == sql::Conn::Or) {
      any_group = any_group || group;
      group = true;
    }
  }
  return conds.empty() || any_group;
}

Cell aggregate(Agg agg, const Table& table, int col, const RowRefs& rows) {
  if (agg == Agg::Count) return static_cast<double>(rows.size());
  if (agg == Agg::None) return rows.empty() ? Cell{} : (*rows.front())[col];
  if (table.columns[col].type != ColumnType::Number) {
    throw ExecutionError(std::string(sql::to_string(agg)) + " requires a numeric column, \"" +
                         table.columns[col].name + "\" is text");
  }
  if (rows.empty()) return Cell{};
  double acc = std::get<double>((*rows.front())[col]);
  double sum = 0;
  for (const auto* row : rows) {
    const double v = std::get<double>((*row)[col]);
    sum += v;
    if (agg == Agg::Max) acc = std::max(acc, v);
    if (agg == Agg::Min) acc = std::min(acc, v);
  }
  if (agg == Agg::Sum) return sum;
  if (agg == Agg::Avg) return sum / static_cast<double>(rows.size());
  return acc;
}

std::string describe(Agg agg, const std::string& col) {
  return agg == Agg::None ? col : std::string(sql::to_string(agg)) + "(" + col + ")";
}

}  // namespace

ResultSet execute(const SqlQuery& query, const TableStore& store) {
  if (query.table_refs.size() != 1) {
    throw ExecutionError(query.table_refs.empty() ? "query names no table" : "joins are not supported");
  }
  const Table& table = store.at(query.table_refs.front());
  Bound bound{&table};
  for (const Condition& c : query.where) check_literal(c.val);
  for (const Condition& c : query.having) check_literal(c.val);

  std::vector<int> where_cols;
  for (const Condition& c : query.where) where_cols.push_back(bound.column(c.col));
  const int select_col = bound.column(query.select.col);

  RowRefs filtered;
  for (const auto& row : table.rows) {
    const bool keep = evaluate_conditions(query.where, [&](std::size_t k, const Condition& c) {
      return test_cell(row[where_cols[k]], c.op, c.val);
    });
    if (keep) filtered.push_back(&row);
  }

  ResultSet result;
  result.columns.push_back(describe(query.select.agg, query.select.col));
  result.ordered = query.order_by.has_value();

  std::vector<RowRefs> groups;
  const bool grouped = !query.group_by.empty();
  if (grouped) {
    std::vector<int> group_cols;
    for (const auto& g : query.group_by) group_cols.push_back(bound.column(g));
    std::map<std::vector<Cell>, std::size_t> index;
    for (const auto* row : filtered) {
      std::vector<Cell> key;
      for (int c : group_cols) key.push_back((*row)[c]);
      auto [it, inserted] = index.emplace(std::move(key), groups.size());
      if (inserted) groups.emplace_back();
      groups[it->second].push_back(row);
    }
    std::vector<int> having_cols;
    for (const Condition& c : query.having) having_cols.push_back(bound.column(c.col));
    std::erase_if(groups, [&](const RowRefs& rows) {
      return !evaluate_conditions(query.having, [&](std::size_t k, const Condition& c) {
        return test_cell(aggregate(c.agg, table, having_cols[k], rows), c.op, c.val);
      });
    });
  } else if (!query.having.empty()) {
    throw ExecutionError("HAVING requires GROUP BY");
  }

  // Each output row keeps the rows it was computed from, for ORDER BY.
  std::vector<std::pair<std::vector<Cell>, RowRefs>> out;
  if (grouped) {
    for (const auto& rows : groups) out.push_back({{aggregate(query.select.agg, table, select_col, rows)}, rows});
  } else if (query.select.agg != Agg::None) {
    out.push_back({{aggregate(query.select.agg, table, select_col, filtered)}, filtered});
  } else {
    for (const auto* row : filtered) out.push_back({{(*row)[select_col]}, RowRefs{row}});
  }

  if (query.order_by) {
    const int order_col = bound.column(query.order_by->col);
    const Agg order_agg = query.order_by->agg;
    if (!grouped && order_agg != Agg::None && query.select.agg == Agg::None) {
      throw ExecutionError("aggregate ORDER BY requires GROUP BY");
    }
    std::vector<Cell> keys;
    for (const auto& [cells, rows] : out) keys.push_back(aggregate(order_agg, table, order_col, rows));
    std::vector<std::size_t> perm(out.size());
    for (std::size_t i = 0; i < perm.size(); ++i) perm[i] = i;
    const bool desc = query.order_by->dir == sql::Dir::Desc;
    std::stable_sort(perm.begin(), perm.end(), [&](std::size_t a, std::size_t b) {
      return desc ? keys[b] < keys[a] : keys[a] < keys[b];
    });
    std::vector<std::pair<std::vector<Cell>, RowRefs>> sorted;
    for (std::size_t i : perm) sorted.push_back(std::move(out[i]));
    out = std::move(sorted);
    if (query.order_by->limit && out.size() > static_cast<std::size_t>(*query.order_by->limit)) {
      out.resize(static_cast<std::size_t>(*query.order_by->limit));
    }
  }

  for (auto& [cells, rows] : out) result.rows.push_back(std::move(cells));
  return result;
}

bool same_result(const ResultSet& a, const ResultSet& b) {
  if (a.rows.size() != b.rows.size()) return false;
  if (a.ordered || b.ordered) return a.rows == b.rows;
  auto left = a.rows;
  auto right = b.rows;
  std::sort(left.begin(), left.end());
  std::sort(right.begin(), right.end());
  return left == right;
}

bool execution_match(const SqlQuery& a, const SqlQuery& b, const TableStore& store, std::string* error) {
  try {
    return same_result(execute(a, store), execute(b, store));
  } catch (const std::exception& e) {
    if (error != nullptr) *error = e.what();
    return false;
  }
}

}  // namespace misp::db
