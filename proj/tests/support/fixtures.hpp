#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "misp/harness.hpp"

namespace misp::testing {

/// Directory holding the bundled dataset (compile-time path).
std::string data_dir();
/// Directory holding golden files used by the tests.
std::string test_data_dir();

/// name(text), age(number), place(text), score(number); five rows.
db::Table people_table();
db::TableStore store_of(std::vector<db::Table> tables);

sql::Literal text(std::string s);
sql::Literal num(double v);

// ---------------------------------------------------------------------------
// Executor oracle

/// A table with 2-5 columns of mixed type and 0-10 rows over a small value pool.
db::Table random_table(std::mt19937_64& rng, const std::string& id);

/// Single-table query with an AND-only WHERE (0-3 conditions) and an aggregate
/// applicable to the selected column.
sql::SqlQuery random_and_query(std::mt19937_64& rng, const db::Table& table);

/// Straight row scan: keep rows satisfying every condition, then project or fold.
/// Returns the result rows sorted, for multiset comparison.
std::vector<std::vector<db::Cell>> naive_execute(const sql::SqlQuery& query, const db::Table& table);

std::vector<std::vector<db::Cell>> sorted_rows(std::vector<std::vector<db::Cell>> rows);

// ---------------------------------------------------------------------------
// Scripted suites

struct ScriptedSlot {
  sql::SlotId slot;
  sql::SlotValue gold;
  std::vector<sql::SlotValue> distractors;
  int rank = 1;  // position of the gold value by probability, 1 = argmax
  std::vector<double> weights;  // strictly decreasing, one per option
};

struct ScriptedInstance {
  db::Example example;
  std::vector<ScriptedSlot> slots;
};

struct ScriptedSuite {
  harness::Dataset dataset;
  std::vector<ScriptedInstance> instances;

  parser::ScriptedParser parser() const;
};

/// Gold queries over a nine-column table; every askable slot gets its gold value
/// at a rank drawn from [1, max_rank], internal and HAVING-value slots at rank 1.
ScriptedSuite scripted_suite(std::uint64_t seed, int count, sql::Mode mode, int max_rank);

/// Nine-column table ("grid") the scripted suites refer to.
db::Table grid_table();

/// One instance for `gold`: askable slots take their ranks from `askable_ranks` in
/// slot order (rank 1 once the list runs out); probabilities halve per rank.
ScriptedInstance scripted_instance(const std::string& id, const sql::SqlQuery& gold, sql::Mode mode,
                                   const std::vector<int>& askable_ranks);

/// Suite over the grid table from ready-made instances.
ScriptedSuite suite_of(std::vector<ScriptedInstance> instances, sql::Mode mode);

/// Askable slots with at least `rank - 1` distractors (candidates for a rank change).
std::vector<std::size_t> rerankable(const ScriptedInstance& instance, int rank);

}  // namespace misp::testing
