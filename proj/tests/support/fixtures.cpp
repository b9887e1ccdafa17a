#include "fixtures.hpp"

#include <algorithm>
#include <numeric>

namespace misp::testing {

using sql::Agg;
using sql::Op;
using sql::SlotKind;
using sql::SlotValue;

std::string data_dir() { return MISP_TEST_DATASET_DIR; }
std::string test_data_dir() { return MISP_TEST_DATA_DIR; }

db::Table people_table() {
  db::Table t;
  t.id = "people";
  t.name = "people";
  t.columns = {{"name", db::ColumnType::Text},
               {"age", db::ColumnType::Number},
               {"place", db::ColumnType::Text},
               {"score", db::ColumnType::Number}};
  t.rows = {{std::string("Ann"), 31.0, std::string("ohio"), 7.5},
            {std::string("Bob"), 45.0, std::string("texas"), 6.0},
            {std::string("Cid"), 28.0, std::string("ohio"), 9.0},
            {std::string("Dee"), 45.0, std::string("utah"), 4.5},
            {std::string("Eve"), 52.0, std::string("ohio"), 8.0}};
  return t;
}

db::TableStore store_of(std::vector<db::Table> tables) {
  db::TableStore store;
  for (auto& t : tables) store.add(std::move(t));
  return store;
}

sql::Literal text(std::string s) { return sql::Literal{std::move(s)}; }
sql::Literal num(double v) { return sql::Literal{v}; }

// ---------------------------------------------------------------------------

namespace {

const char* const kWords[] = {"alpha", "beta", "Gamma", "beta gamma", "delta", "Alpha"};
const double kNumbers[] = {-2, 0, 1, 2.5, 3, 7, 10};

template <typename T, std::size_t N>
const T& pick(std::mt19937_64& rng, const T (&items)[N]) {
  return items[std::uniform_int_distribution<std::size_t>(0, N - 1)(rng)];
}

int uniform(std::mt19937_64& rng, int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); }

std::string lower(std::string s) {
  for (char& c : s) {
    if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
  }
  return s;
}

bool holds(const db::Cell& cell, Op op, const sql::Literal& lit) {
  if (const double* n = std::get_if<double>(&cell)) {
    const double v = std::get<double>(lit);
    switch (op) {
      case Op::Eq: return *n == v;
      case Op::Ne: return *n != v;
      case Op::Gt: return *n > v;
      case Op::Lt: return *n < v;
      case Op::Ge: return *n >= v;
      case Op::Le: return *n <= v;
      default: break;
    }
    throw std::logic_error("oracle: unsupported numeric operator");
  }
  const std::string& s = std::get<std::string>(cell);
  const std::string& v = std::get<std::string>(lit);
  switch (op) {
    case Op::Eq: return s == v;
    case Op::Ne: return s != v;
    case Op::Gt: return s > v;
    case Op::Lt: return s < v;
    case Op::Ge: return s >= v;
    case Op::Le: return s <= v;
    case Op::Like: return lower(s).find(lower(v)) != std::string::npos;
    default: break;
  }
  throw std::logic_error("oracle: unsupported text operator");
}

int column_of(const db::Table& t, const std::string& name) {
  for (std::size_t i = 0; i < t.columns.size(); ++i) {
    if (lower(t.columns[i].name) == lower(name)) return static_cast<int>(i);
  }
  throw std::logic_error("oracle: no column " + name);
}

}  // namespace

db::Table random_table(std::mt19937_64& rng, const std::string& id) {
  db::Table t;
  t.id = id;
  t.name = "random " + id;
  const int cols = uniform(rng, 2, 5);
  for (int c = 0; c < cols; ++c) {
    const bool numeric = uniform(rng, 0, 1) == 1;
    t.columns.push_back({"Col" + std::to_string(c), numeric ? db::ColumnType::Number : db::ColumnType::Text});
  }
  const int rows = uniform(rng, 0, 10);
  for (int r = 0; r < rows; ++r) {
    std::vector<db::Cell> row;
    for (const auto& c : t.columns) {
      if (c.type == db::ColumnType::Number) {
        row.emplace_back(pick(rng, kNumbers));
      } else {
        row.emplace_back(std::string(pick(rng, kWords)));
      }
    }
    t.rows.push_back(std::move(row));
  }
  return t;
}

sql::SqlQuery random_and_query(std::mt19937_64& rng, const db::Table& table) {
  sql::SqlQuery q;
  q.table_refs = {table.id};
  const int ncols = static_cast<int>(table.columns.size());
  const auto& sel = table.columns[uniform(rng, 0, ncols - 1)];
  q.select.col = uniform(rng, 0, 1) ? sel.name : lower(sel.name);
  if (sel.type == db::ColumnType::Number) {
    q.select.agg = sql::kAllAggs[uniform(rng, 0, 5)];
  } else {
    q.select.agg = uniform(rng, 0, 2) == 0 ? Agg::Count : Agg::None;
  }
  const int nconds = uniform(rng, 0, 3);
  for (int i = 0; i < nconds; ++i) {
    const auto& col = table.columns[uniform(rng, 0, ncols - 1)];
    sql::Condition c;
    c.col = col.name;
    if (col.type == db::ColumnType::Number) {
      static constexpr Op kOps[] = {Op::Eq, Op::Ne, Op::Gt, Op::Lt, Op::Ge, Op::Le};
      c.op = pick(rng, kOps);
      c.val = pick(rng, kNumbers);
    } else {
      static constexpr Op kOps[] = {Op::Eq, Op::Ne, Op::Gt, Op::Lt, Op::Ge, Op::Le, Op::Like};
      c.op = pick(rng, kOps);
      c.val = std::string(pick(rng, kWords));
    }
    q.where.push_back(std::move(c));
  }
  return q;
}

std::vector<std::vector<db::Cell>> sorted_rows(std::vector<std::vector<db::Cell>> rows) {
  std::sort(rows.begin(), rows.end());
  return rows;
}

std::vector<std::vector<db::Cell>> naive_execute(const sql::SqlQuery& query, const db::Table& table) {
  std::vector<const std::vector<db::Cell>*> kept;
  for (const auto& row : table.rows) {
    bool ok = true;
    for (const auto& c : query.where) ok = ok && holds(row[column_of(table, c.col)], c.op, c.val);
    if (ok) kept.push_back(&row);
  }
  const int col = column_of(table, query.select.col);
  std::vector<std::vector<db::Cell>> out;
  switch (query.select.agg) {
    case Agg::None:
      for (const auto* row : kept) out.push_back({(*row)[col]});
      break;
    case Agg::Count:
      out.push_back({static_cast<double>(kept.size())});
      break;
    default: {
      if (kept.empty()) {
        out.push_back({db::Cell{}});
        break;
      }
      std::vector<double> v;
      for (const auto* row : kept) v.push_back(std::get<double>((*row)[col]));
      double r = 0;
      if (query.select.agg == Agg::Max) r = *std::max_element(v.begin(), v.end());
      if (query.select.agg == Agg::Min) r = *std::min_element(v.begin(), v.end());
      if (query.select.agg == Agg::Sum) r = std::accumulate(v.begin(), v.end(), 0.0);
      if (query.select.agg == Agg::Avg) r = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
      out.push_back({r});
    }
  }
  return sorted_rows(std::move(out));
}

// ---------------------------------------------------------------------------

db::Table grid_table() {
  db::Table t;
  t.id = "grid";
  t.name = "grid";
  for (const char* name : {"player", "team", "position", "city", "coach"}) t.columns.push_back({name, db::ColumnType::Text});
  for (const char* name : {"age", "goals", "caps", "height"}) t.columns.push_back({name, db::ColumnType::Number});
  t.rows.push_back({std::string("a"), std::string("b"), std::string("c"), std::string("d"), std::string("e"), 1.0, 2.0,
                    3.0, 4.0});
  return t;
}

namespace {

std::vector<std::string> column_names(const db::Table& t) {
  std::vector<std::string> out;
  for (const auto& c : t.columns) out.push_back(c.name);
  return out;
}

std::vector<SlotValue> other_columns(const std::vector<std::string>& all, const std::vector<std::string>& taken) {
  std::vector<SlotValue> out;
  for (const auto& c : all) {
    if (std::find(taken.begin(), taken.end(), c) == taken.end()) out.emplace_back(c);
  }
  return out;
}

template <typename E, std::size_t N>
std::vector<SlotValue> others(const E (&all)[N], E gold) {
  std::vector<SlotValue> out;
  for (E e : all) {
    if (e != gold) out.emplace_back(e);
  }
  return out;
}

std::vector<std::string> condition_columns(const std::vector<sql::Condition>& conds) {
  std::vector<std::string> out;
  for (const auto& c : conds) out.push_back(c.col);
  return out;
}

std::vector<SlotValue> distractors_for(const sql::SlotId& slot, const SlotValue& gold, const sql::SqlQuery& q,
                                       const std::vector<std::string>& cols) {
  switch (slot.kind) {
    case SlotKind::SelectCol:
    case SlotKind::OrderByCol: return other_columns(cols, {std::get<std::string>(gold)});
    case SlotKind::WhereCol: return other_columns(cols, condition_columns(q.where));
    case SlotKind::HavingCol: return other_columns(cols, condition_columns(q.having));
    case SlotKind::GroupByCol: return other_columns(cols, q.group_by);
    case SlotKind::SelectAgg:
    case SlotKind::HavingAgg:
    case SlotKind::OrderByAgg: return others(sql::kAllAggs, std::get<Agg>(gold));
    case SlotKind::WhereOp:
    case SlotKind::HavingOp: return others(sql::kAllOps, std::get<Op>(gold));
    case SlotKind::WhereConn: {
      const sql::Conn g = std::get<sql::Conn>(gold);
      return {SlotValue{g == sql::Conn::And ? sql::Conn::Or : sql::Conn::And}};
    }
    case SlotKind::WhereVal:
    case SlotKind::HavingVal: {
      std::vector<SlotValue> out;
      for (int i = 1; i <= 5; ++i) out.emplace_back(sql::Literal{"x" + std::to_string(i)});
      return out;
    }
    case SlotKind::OrderByDir: {
      std::vector<SlotValue> out;
      const auto g = std::get<sql::OrderSpec>(gold);
      for (sql::Dir d : {sql::Dir::Desc, sql::Dir::Asc}) {
        for (std::optional<std::int64_t> lim : {std::optional<std::int64_t>{}, std::optional<std::int64_t>{1},
                                                std::optional<std::int64_t>{3}}) {
          const sql::OrderSpec s{d, lim};
          if (s != g) out.emplace_back(s);
        }
      }
      return out;
    }
    case SlotKind::WhereCount:
    case SlotKind::GroupByCount:
    case SlotKind::HavingCount:
    case SlotKind::OrderByPresent: {
      const auto n = std::get<std::int64_t>(gold);
      return {SlotValue{n + 1}, SlotValue{n + 2}};
    }
  }
  return {};
}

sql::SqlQuery random_gold(std::mt19937_64& rng, sql::Mode mode, const db::Table& table, int serial) {
  const auto cols = column_names(table);
  std::vector<std::string> shuffled = cols;
  std::shuffle(shuffled.begin(), shuffled.end(), rng);
  sql::SqlQuery q;
  q.table_refs = {table.id};
  q.select.col = cols[uniform(rng, 0, 8)];
  q.select.agg = sql::kAllAggs[uniform(rng, 0, 5)];
  const int nwhere = uniform(rng, 0, 3);
  for (int i = 0; i < nwhere; ++i) {
    sql::Condition c;
    c.col = shuffled[i];
    static constexpr Op kOps[] = {Op::Eq, Op::Gt, Op::Lt};
    c.op = pick(rng, kOps);
    c.val = uniform(rng, 0, 1) ? sql::Literal{"v" + std::to_string(serial) + "_" + std::to_string(i)}
                               : sql::Literal{static_cast<double>(uniform(rng, 1, 99))};
    if (mode == sql::Mode::Spider && uniform(rng, 0, 2) == 0) c.conn = sql::Conn::Or;
    q.where.push_back(std::move(c));
  }
  if (!q.where.empty()) q.where.back().conn = sql::Conn::And;
  if (mode == sql::Mode::WikiSql) return q;

  if (uniform(rng, 0, 1)) {
    q.group_by = {shuffled[uniform(rng, 3, 8)]};
    if (uniform(rng, 0, 1)) {
      sql::Condition h;
      h.col = cols[uniform(rng, 0, 8)];
      h.agg = uniform(rng, 0, 1) ? Agg::Count : Agg::Max;
      h.op = uniform(rng, 0, 1) ? Op::Gt : Op::Lt;
      h.val = static_cast<double>(uniform(rng, 1, 5));
      q.having.push_back(std::move(h));
    }
  }
  if (uniform(rng, 0, 1)) {
    sql::OrderBy o;
    o.col = cols[uniform(rng, 0, 8)];
    o.agg = uniform(rng, 0, 2) == 0 ? Agg::Count : Agg::None;
    o.dir = uniform(rng, 0, 1) ? sql::Dir::Desc : sql::Dir::Asc;
    if (uniform(rng, 0, 1)) o.limit = uniform(rng, 1, 5);
    q.order_by = o;
  }
  return q;
}

}  // namespace

ScriptedSuite scripted_suite(std::uint64_t seed, int count, sql::Mode mode, int max_rank) {
  std::mt19937_64 rng(seed);
  ScriptedSuite suite;
  suite.dataset.mode = mode;
  const db::Table table = grid_table();
  const auto cols = column_names(table);
  for (int n = 0; n < count; ++n) {
    ScriptedInstance inst;
    inst.example.id = (mode == sql::Mode::Spider ? "sp" : "wk") + std::to_string(n);
    inst.example.table_id = table.id;
    inst.example.question = "scripted question " + std::to_string(n);
    inst.example.gold = random_gold(rng, mode, table, n);
    sql::validate(inst.example.gold);
    for (const auto& entry : sql::decompose(inst.example.gold, mode)) {
      ScriptedSlot s;
      s.slot = entry.slot;
      s.gold = entry.value;
      s.distractors = distractors_for(entry.slot, entry.value, inst.example.gold, cols);
      if (s.distractors.size() > 5) s.distractors.resize(5);
      const int cap = static_cast<int>(s.distractors.size()) + 1;
      s.rank = sql::is_askable(entry.slot.kind) ? std::min(uniform(rng, 1, max_rank), cap) : 1;
      double w = 1;
      for (int k = 0; k < cap; ++k) {
        s.weights.push_back(w);
        w *= std::uniform_real_distribution<double>(0.1, 0.9)(rng);
      }
      inst.slots.push_back(std::move(s));
    }
    suite.dataset.examples.push_back(inst.example);
    suite.instances.push_back(std::move(inst));
  }
  suite.dataset.tables.add(table);
  return suite;
}

ScriptedInstance scripted_instance(const std::string& id, const sql::SqlQuery& gold, sql::Mode mode,
                                   const std::vector<int>& askable_ranks) {
  const auto cols = column_names(grid_table());
  ScriptedInstance inst;
  inst.example.id = id;
  inst.example.table_id = "grid";
  inst.example.question = "scripted question " + id;
  inst.example.gold = gold;
  std::size_t next = 0;
  for (const auto& entry : sql::decompose(gold, mode)) {
    ScriptedSlot s;
    s.slot = entry.slot;
    s.gold = entry.value;
    s.distractors = distractors_for(entry.slot, entry.value, gold, cols);
    if (s.distractors.size() > 5) s.distractors.resize(5);
    if (sql::is_askable(entry.slot.kind) && next < askable_ranks.size()) s.rank = askable_ranks[next++];
    if (s.rank < 1 || s.rank > static_cast<int>(s.distractors.size()) + 1) {
      throw std::invalid_argument("rank out of range for " + sql::to_string(entry.slot));
    }
    double w = 1;
    for (std::size_t k = 0; k <= s.distractors.size(); ++k, w *= 0.5) s.weights.push_back(w);
    inst.slots.push_back(std::move(s));
  }
  return inst;
}

ScriptedSuite suite_of(std::vector<ScriptedInstance> instances, sql::Mode mode) {
  ScriptedSuite suite;
  suite.dataset.mode = mode;
  suite.dataset.tables.add(grid_table());
  for (auto& inst : instances) {
    suite.dataset.examples.push_back(inst.example);
    suite.instances.push_back(std::move(inst));
  }
  return suite;
}

parser::ScriptedParser ScriptedSuite::parser() const {
  parser::ScriptedParser p;
  for (const auto& inst : instances) {
    std::vector<parser::ScriptedParser::Entry> entries;
    for (const auto& s : inst.slots) {
      parser::ScriptedParser::Entry e;
      e.slot = s.slot;
      e.options = s.distractors;
      e.options.insert(e.options.begin() + (s.rank - 1), s.gold);
      const double total = std::accumulate(s.weights.begin(), s.weights.end(), 0.0);
      for (double w : s.weights) e.probs.push_back(w / total);
      entries.push_back(std::move(e));
    }
    p.set_script(inst.example.id, std::move(entries));
  }
  return p;
}

std::vector<std::size_t> rerankable(const ScriptedInstance& instance, int rank) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < instance.slots.size(); ++i) {
    const auto& s = instance.slots[i];
    if (sql::is_askable(s.slot.kind) && static_cast<int>(s.distractors.size()) >= rank - 1) out.push_back(i);
  }
  return out;
}

}  // namespace misp::testing
