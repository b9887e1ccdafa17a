#pragma once

#include <istream>
#include <map>
#include <string>
#include <variant>
#include <vector>

#include "misp/sql.hpp"

namespace misp::db {

enum class ColumnType { Text, Number };

struct Column {
  std::string name;
  ColumnType type = ColumnType::Text;
};

/// Stored cells are never null; std::monostate only appears in query results
/// (aggregates over empty inputs).
using Cell = std::variant<std::monostate, double, std::string>;

std::string render_cell(const Cell& cell);
nlohmann::json cell_to_json(const Cell& cell);

struct Table {
  std::string id;
  std::string name;
  std::vector<Column> columns;
  std::vector<std::vector<Cell>> rows;

  /// Index of the column named `name` (case-insensitive), or -1.
  int column_index(std::string_view name) const;
};

/// Line-level ingestion failure; `line` is 1-based, 0 when not line-specific.
class LoadError : public std::runtime_error {
 public:
  LoadError(std::size_t line, const std::string& what)
      : std::runtime_error(line > 0 ? "line " + std::to_string(line) + ": " + what : what), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

Table table_from_json(const nlohmann::json& value);
nlohmann::json to_json(const Table& table);

class TableStore {
 public:
  void add(Table table);
  const Table* find(std::string_view id) const;
  const Table& at(std::string_view id) const;
  std::size_t size() const { return tables_.size(); }
  const std::map<std::string, Table, std::less<>>& tables() const { return tables_; }

 private:
  std::map<std::string, Table, std::less<>> tables_;
};

TableStore load_tables(std::istream& in);
TableStore load_tables_file(const std::string& path);

struct Example {
  std::string id;
  std::string table_id;
  std::string question;
  sql::SqlQuery gold;
};

std::vector<Example> load_examples(std::istream& in);
std::vector<Example> load_examples_file(const std::string& path);
nlohmann::json to_json(const Example& example);

class ExecutionError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ResultSet {
  std::vector<std::string> columns;
  std::vector<std::vector<Cell>> rows;
  // Rows carry a meaningful order (ORDER BY was present).
  bool ordered = false;
};

ResultSet execute(const sql::SqlQuery& query, const TableStore& store);

/// Multiset comparison, or sequence comparison when either side is ordered.
bool same_result(const ResultSet& a, const ResultSet& b);

/// False (never throws) when either side fails to execute.
bool execution_match(const sql::SqlQuery& a, const sql::SqlQuery& b, const TableStore& store,
                     std::string* error = nullptr);

}  // namespace misp::db
