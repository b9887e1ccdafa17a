// Writes the bundled synthetic corpus: tables.jsonl, examples.jsonl (WikiSQL-style
// sketches) and spider_examples.jsonl (GROUP BY / HAVING / ORDER BY / OR).
#include <CLI11.hpp>

#include <algorithm>
#include <fstream>
#include <iostream>
#include <random>
#include <set>

#include "misp/db.hpp"

namespace {

using misp::db::Cell;
using misp::db::ColumnType;
using misp::db::Table;
using misp::sql::Agg;
using misp::sql::Condition;
using misp::sql::Op;
using misp::sql::SqlQuery;

struct ColSpec {
  std::string name;
  ColumnType type = ColumnType::Text;
  std::vector<std::string> pool;  // text values, or an entity pattern when `entity` is set
  double lo = 0;
  double hi = 0;
  double step = 1;
  std::vector<std::string> aliases;
  bool entity = false;
};

struct Theme {
  std::string name;
  std::string noun;  // plural of the row entity ("clubs")
  std::vector<ColSpec> columns;
};

const std::vector<std::string> kCities = {"Lyon",  "Porto", "Leeds",  "Turin",  "Malmo",  "Ghent",  "Graz",
                                          "Cork",  "Bergen", "Split", "Kassel", "Aarhus", "Dundee", "Bilbao"};
const std::vector<std::string> kCountries = {"France", "Spain",  "Norway", "Chile",  "Kenya",  "Canada",
                                             "Peru",   "Japan",  "Italy",  "Brazil", "Poland", "Ghana"};
const std::vector<std::string> kSurnames = {"Halden", "Moreau", "Okafor", "Lindqvist", "Tanaka", "Ferreira",
                                            "Novak",  "Quinn",  "Baptiste", "Ruiz",    "Kowalski", "Adeyemi",
                                            "Sorensen", "Delgado", "Brennan", "Ivanova"};
const std::vector<std::string> kFirst = {"Anna", "Marco", "Lena", "Tomas", "Grace", "Omar", "Ines", "Felix",
                                         "Nadia", "Pavel", "Rosa", "Hugo"};
const std::vector<std::string> kAdjectives = {"Silent", "Golden", "Broken", "Hidden", "Crimson", "Northern",
                                              "Distant", "Wild", "Quiet", "Burning", "Frozen", "Lost"};
const std::vector<std::string> kNouns = {"River", "Harbor", "Garden", "Mirror", "Lantern", "Meadow",
                                         "Tower", "Voyage", "Orchard", "Compass", "Island", "Echo"};

ColSpec text(std::string name, std::vector<std::string> pool, std::vector<std::string> aliases = {}) {
  ColSpec c;
  c.name = std::move(name);
  c.pool = std::move(pool);
  c.aliases = std::move(aliases);
  return c;
}

ColSpec entity(std::string name, std::vector<std::string> patterns, std::vector<std::string> aliases = {}) {
  ColSpec c = text(std::move(name), std::move(patterns), std::move(aliases));
  c.entity = true;
  return c;
}

ColSpec num(std::string name, double lo, double hi, double step, std::vector<std::string> aliases = {}) {
  ColSpec c;
  c.name = std::move(name);
  c.type = ColumnType::Number;
  c.lo = lo;
  c.hi = hi;
  c.step = step;
  c.aliases = std::move(aliases);
  return c;
}

std::vector<std::string> people() {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < kFirst.size(); ++i) out.push_back(kFirst[i] + " " + kSurnames[(i * 5) % kSurnames.size()]);
  return out;
}

std::vector<Theme> themes() {
  const auto P = people();
  return {
      {"football clubs", "clubs",
       {entity("club", {"{city} United", "{city} Rovers", "Real {city}", "{city} Athletic"}), text("city", kCities),
        text("manager", P, {"coach"}), num("founded", 1870, 1990, 1, {"established"}),
        num("capacity", 12000, 80000, 500, {"seats"})}},
      {"mountains", "mountains",
       {entity("mountain", {"Mount {surname}", "{adj} Peak"}), text("country", kCountries),
        text("range", {"Alps", "Andes", "Rockies", "Atlas", "Caucasus"}), num("height", 2800, 8800, 10, {"elevation"}),
        num("ascent year", 1850, 1990, 1)}},
      {"films", "films",
       {entity("title", {"The {adj} {noun}", "{adj} {noun}"}), text("director", P),
        text("genre", {"drama", "comedy", "thriller", "western", "musical"}), num("year", 1950, 2020, 1),
        num("box office", 5, 900, 1, {"gross"})}},
      {"cities", "cities",
       {text("city", kCities), text("country", kCountries), text("mayor", P),
        num("population", 50000, 900000, 1000, {"inhabitants"}), num("area", 40, 600, 1, {"size"})}},
      {"cars", "cars",
       {entity("model", {"{noun} {adj}", "{adj} {noun} GT"}), text("maker", {"Vexa", "Orlin", "Kanto", "Brisa", "Tarsk"}),
        text("body style", {"sedan", "coupe", "hatchback", "wagon"}), num("horsepower", 90, 500, 5, {"power"}),
        num("price", 15000, 90000, 500, {"cost"})}},
      {"rivers", "rivers",
       {entity("river", {"{noun} River", "{surname} River"}), text("continent", {"Europe", "Africa", "Asia", "America"}),
        text("mouth", {"Atlantic", "Pacific", "Baltic", "Mediterranean", "Arctic"}), num("length", 200, 6000, 10),
        num("discharge", 100, 9000, 50, {"flow"})}},
      {"elections", "candidates",
       {text("candidate", P), text("party", {"Labour", "Liberal", "Green", "Reform", "Unity"}),
        text("district", {"North", "South", "East", "West", "Central", "Harbour"}), num("votes", 1000, 60000, 10),
        num("percentage", 5, 70, 1, {"share"})}},
      {"athletes", "athletes",
       {text("athlete", P), text("nation", kCountries),
        text("event", {"marathon", "sprint", "hurdles", "long jump", "high jump"}), num("medals", 0, 12, 1),
        num("age", 18, 38, 1)}},
      {"albums", "albums",
       {entity("album", {"{adj} {noun}", "The {noun}"}), text("artist", P),
        text("label", {"Northline", "Bluefield", "Arcadia", "Mosaic"}), num("tracks", 8, 20, 1, {"songs"}),
        num("sales", 10000, 900000, 1000)}},
      {"airports", "airports",
       {entity("airport", {"{city} International", "{surname} Field"}), text("city", kCities),
        text("hub airline", {"Skyway", "Aerolux", "Nordair", "Sunjet"}), num("passengers", 100000, 9000000, 10000),
        num("runways", 1, 5, 1)}},
      {"universities", "universities",
       {entity("university", {"University of {city}", "{surname} College"}), text("country", kCountries),
        text("mascot", {"eagles", "bears", "wolves", "falcons", "tigers"}), num("enrollment", 2000, 60000, 100,
                                                                                  {"students"}),
        num("founded", 1200, 1990, 1)}},
      {"ships", "ships",
       {entity("ship", {"HMS {noun}", "SS {adj} {noun}"}), text("navy", kCountries),
        text("class", {"frigate", "destroyer", "cruiser", "corvette"}), num("tonnage", 1000, 60000, 100, {"weight"}),
        num("launched", 1900, 2010, 1)}},
      {"books", "books",
       {entity("book", {"The {adj} {noun}", "{noun} of {city}"}), text("author", P),
        text("publisher", {"Penfold", "Harrow", "Quillstone", "Larkspur"}), num("pages", 120, 900, 1),
        num("year", 1900, 2020, 1)}},
      {"bridges", "bridges",
       {entity("bridge", {"{surname} Bridge", "{adj} Bridge"}), text("city", kCities),
        text("design", {"suspension", "arch", "cantilever", "truss"}), num("span", 50, 2000, 5, {"length"}),
        num("opened", 1850, 2015, 1)}},
      {"basketball players", "players",
       {text("player", P), text("team", {"Hawks", "Comets", "Titans", "Pilots", "Storm"}),
        text("position", {"guard", "forward", "center"}), num("points", 2, 35, 1), num("games", 10, 82, 1)}},
      {"hospitals", "hospitals",
       {entity("hospital", {"St {surname}", "{city} General"}), text("city", kCities),
        text("specialty", {"cardiology", "oncology", "pediatrics", "trauma"}), num("beds", 50, 1200, 10),
        num("staff", 200, 9000, 50, {"employees"})}},
      {"restaurants", "restaurants",
       {entity("restaurant", {"The {adj} {noun}", "Casa {surname}"}),
        text("cuisine", {"thai", "italian", "mexican", "ethiopian", "korean"}),
        text("chef", P), num("rating", 1, 5, 1, {"stars"}), num("seats", 20, 200, 5)}},
      {"grand prix results", "drivers",
       {text("driver", P), text("constructor", {"Veloce", "Arrowline", "Kestrel", "Marlin"}),
        text("circuit", {"Monza", "Suzuka", "Interlagos", "Spa", "Imola"}), num("laps", 40, 78, 1),
        num("grid", 1, 20, 1)}},
      {"singles", "songs",
       {entity("song", {"{adj} {noun}", "{noun} Song"}), text("singer", P), text("country", kCountries),
        num("chart position", 1, 40, 1, {"rank"}), num("year", 1960, 2020, 1)}},
      {"museums", "museums",
       {entity("museum", {"{city} Museum", "{surname} Gallery"}), text("city", kCities),
        text("type", {"art", "history", "science", "maritime"}), num("visitors", 20000, 3000000, 1000),
        num("opened", 1800, 2015, 1)}},
      {"schools", "schools",
       {entity("school", {"{surname} High", "{city} Academy"}), text("town", kCities), text("principal", P),
        num("students", 150, 2500, 10, {"pupils"}), num("teachers", 10, 150, 1, {"staff"})}},
      {"satellites", "satellites",
       {entity("satellite", {"{noun}-{n}", "{adj} {noun}"}), text("operator", {"Orbix", "Stellan", "Nova", "Aether"}),
        text("orbit", {"low", "medium", "geostationary", "polar"}), num("mass", 100, 6000, 10, {"weight"}),
        num("launched", 1970, 2022, 1)}},
      {"television episodes", "episodes",
       {entity("episode", {"The {noun}", "{adj} {noun}"}), text("writer", P), text("director", P),
        num("viewers", 1, 20, 0.1, {"audience"}), num("season", 1, 9, 1)}},
      {"national parks", "parks",
       {entity("park", {"{adj} {noun} Park", "{surname} Park"}), text("country", kCountries),
        text("ecosystem", {"forest", "desert", "wetland", "tundra", "grassland"}), num("area", 100, 20000, 10),
        num("visitors", 10000, 4000000, 1000)}},
  };
}

class Gen {
 public:
  explicit Gen(std::uint64_t seed) : rng_(seed) {}

  std::size_t index(std::size_t n) { return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng_); }
  bool chance(double p) { return std::uniform_real_distribution<double>(0, 1)(rng_) < p; }
  template <typename T>
  const T& pick(const std::vector<T>& v) {
    return v[index(v.size())];
  }
  double number(const ColSpec& c) {
    const auto steps = static_cast<std::int64_t>((c.hi - c.lo) / c.step);
    const double v = c.lo + c.step * static_cast<double>(std::uniform_int_distribution<std::int64_t>(0, steps)(rng_));
    return std::round(v * 10) / 10;
  }
  std::string entity(const std::string& pattern) {
    std::string out;
    for (std::size_t i = 0; i < pattern.size();) {
      if (pattern[i] != '{') {
        out += pattern[i++];
        continue;
      }
      const auto close = pattern.find('}', i);
      const std::string hole = pattern.substr(i + 1, close - i - 1);
      if (hole == "city") out += pick(kCities);
      else if (hole == "surname") out += pick(kSurnames);
      else if (hole == "adj") out += pick(kAdjectives);
      else if (hole == "noun") out += pick(kNouns);
      else if (hole == "n") out += std::to_string(1 + index(9));
      i = close + 1;
    }
    return out;
  }

 private:
  std::mt19937_64 rng_;
};

Table make_table(Gen& g, const Theme& theme, const std::string& id, std::size_t rows) {
  Table t;
  t.id = id;
  t.name = theme.name;
  for (const auto& c : theme.columns) t.columns.push_back({c.name, c.type});
  std::set<std::string> keys;
  while (t.rows.size() < rows) {
    std::vector<Cell> row;
    for (const auto& c : theme.columns) {
      if (c.type == ColumnType::Number) {
        row.emplace_back(g.number(c));
      } else {
        row.emplace_back(c.entity ? g.entity(g.pick(c.pool)) : g.pick(c.pool));
      }
    }
    // The first column identifies the row.
    if (!keys.insert(std::get<std::string>(row[0])).second) continue;
    t.rows.push_back(std::move(row));
  }
  return t;
}

std::string surface(Gen& g, const ColSpec& c, double alias_rate) {
  if (!c.aliases.empty() && g.chance(alias_rate)) return g.pick(c.aliases);
  return c.name;
}

std::string cell_text(const Cell& cell) { return misp::db::render_cell(cell); }

std::string select_phrase(Gen& g, Agg agg, const std::string& col, const std::string& noun) {
  switch (agg) {
    case Agg::None: {
      static const std::vector<std::string> k = {"What is the {c}", "Name the {c}", "Which {c} has",
                                                 "Tell me the {c}", "What {c} is listed"};
      std::string s = g.pick(k);
      return s.replace(s.find("{c}"), 3, col);
    }
    case Agg::Count: {
      const std::vector<std::string> k = {"How many " + noun + " are there", "What is the number of " + noun,
                                          "Count the " + noun};
      return g.pick(k);
    }
    case Agg::Max: return g.pick(std::vector<std::string>{"What is the highest ", "What is the maximum ",
                                                          "What is the largest "}) + col;
    case Agg::Min: return g.pick(std::vector<std::string>{"What is the lowest ", "What is the minimum ",
                                                          "What is the smallest "}) + col;
    case Agg::Avg: return g.pick(std::vector<std::string>{"What is the average ", "What is the mean "}) + col;
    case Agg::Sum: return g.pick(std::vector<std::string>{"What is the total ", "What is the sum of "}) + col;
  }
  return col;
}

std::string condition_phrase(Gen& g, const Condition& c, const ColSpec& spec, bool numeric) {
  const std::string col = surface(g, spec, 0.15);
  const std::string v = misp::sql::render_literal(c.val);
  if (!numeric) {
    switch (g.index(4)) {
      case 0: return "when " + col + " is " + v;
      case 1: return "for " + col + " " + v;
      case 2: return "where the " + col + " is " + v;
      default: return "for " + v;
    }
  }
  switch (c.op) {
    case Op::Gt: {
      const std::vector<std::string> k = {"when " + col + " is more than ", "with " + col + " over ",
                                          "when " + col + " is greater than ", "with " + col + " above "};
      return g.pick(k) + v;
    }
    case Op::Lt: {
      const std::vector<std::string> k = {"when " + col + " is less than ", "with " + col + " under ",
                                          "when " + col + " is below ", "with " + col + " lower than "};
      return g.pick(k) + v;
    }
    default: return g.chance(0.5) ? "when " + col + " is " + v : "with a " + col + " of " + v;
  }
}

misp::db::Example make_wikisql(Gen& g, const Theme& theme, const Table& t, const std::string& id) {
  misp::db::Example ex;
  ex.id = id;
  ex.table_id = t.id;
  SqlQuery& q = ex.gold;
  q.table_refs = {t.id};
  const std::size_t ncols = t.columns.size();

  const std::size_t sel = g.index(ncols);
  const bool sel_numeric = t.columns[sel].type == ColumnType::Number;
  const double r = static_cast<double>(g.index(100)) / 100.0;
  Agg agg = Agg::None;
  if (r < 0.12) {
    agg = Agg::Count;
  } else if (sel_numeric && r < 0.45) {
    agg = std::vector<Agg>{Agg::Max, Agg::Min, Agg::Avg, Agg::Sum}[g.index(4)];
  }
  q.select = {agg, t.columns[sel].name};

  const std::size_t nconds = g.chance(0.1) ? 0 : (g.chance(0.4) ? 2 : 1);
  std::vector<std::string> parts;
  std::set<std::size_t> used = {sel};
  const auto& row = t.rows[g.index(t.rows.size())];
  for (std::size_t k = 0; k < nconds; ++k) {
    std::size_t c = 0;
    do {
      c = g.index(ncols);
    } while (used.count(c) != 0 && used.size() < ncols);
    if (used.count(c) != 0) break;
    used.insert(c);
    Condition cond;
    cond.col = t.columns[c].name;
    const bool numeric = t.columns[c].type == ColumnType::Number;
    if (!numeric) {
      cond.op = Op::Eq;
      cond.val = std::get<std::string>(row[c]);
    } else {
      const double x = std::get<double>(row[c]);
      const double u = static_cast<double>(g.index(100)) / 100.0;
      cond.op = u < 0.3 ? Op::Eq : (u < 0.65 ? Op::Gt : Op::Lt);
      cond.val = x;
    }
    parts.push_back(condition_phrase(g, cond, theme.columns[c], numeric));
    q.where.push_back(cond);
  }
  std::string question = select_phrase(g, agg, surface(g, theme.columns[sel], 0.2), theme.noun);
  for (std::size_t k = 0; k < parts.size(); ++k) question += (k == 0 ? " " : " and ") + parts[k];
  ex.question = question + "?";
  return ex;
}

// Spider-style shapes over the same tables.
misp::db::Example make_spider(Gen& g, const Theme& theme, const Table& t, const std::string& id) {
  misp::db::Example ex;
  ex.id = id;
  ex.table_id = t.id;
  SqlQuery& q = ex.gold;
  q.table_refs = {t.id};
  std::vector<std::size_t> text_cols;
  std::vector<std::size_t> num_cols;
  for (std::size_t c = 0; c < t.columns.size(); ++c) {
    (t.columns[c].type == ColumnType::Number ? num_cols : text_cols).push_back(c);
  }
  const std::string& key = t.columns[0].name;
  const std::size_t group = text_cols[1 + g.index(text_cols.size() - 1)];
  const std::string& gcol = t.columns[group].name;
  const std::size_t numc = g.pick(num_cols);
  const std::string& ncol = t.columns[numc].name;
  switch (g.index(5)) {
    case 0:  // count per group
      q.select = {Agg::Count, key};
      q.group_by = {gcol};
      ex.question = "How many " + theme.noun + " are there for each " + gcol + "?";
      break;
    case 1: {  // groups with more than n rows
      q.select = {Agg::None, gcol};
      q.group_by = {gcol};
      Condition h;
      h.col = gcol;
      h.agg = Agg::Count;
      h.op = Op::Gt;
      h.val = 1.0;
      q.having = {h};
      ex.question = "Which " + gcol + " values are grouped by " + gcol + " having more than 1 " + theme.noun + "?";
      break;
    }
    case 2: {  // top n by a numeric column
      const std::int64_t n = 2 + static_cast<std::int64_t>(g.index(3));
      q.select = {Agg::None, key};
      q.order_by = misp::sql::OrderBy{ncol, Agg::None, misp::sql::Dir::Desc, n};
      ex.question = "List the " + key + " of the top " + std::to_string(n) + " " + theme.noun + " ordered by " +
                    ncol + " in descending order.";
      break;
    }
    case 3: {  // sorted ascending
      q.select = {Agg::None, key};
      q.order_by = misp::sql::OrderBy{ncol, Agg::None, misp::sql::Dir::Asc, std::nullopt};
      ex.question = "List the " + key + " of all " + theme.noun + " sorted by " + ncol + " in ascending order.";
      break;
    }
    default: {  // two alternatives
      const auto& r1 = t.rows[g.index(t.rows.size())];
      const auto& r2 = t.rows[g.index(t.rows.size())];
      Condition a;
      a.col = gcol;
      a.val = std::get<std::string>(r1[group]);
      a.conn = misp::sql::Conn::Or;
      Condition b;
      b.col = gcol;
      b.val = std::get<std::string>(r2[group]);
      if (a.val == b.val) {
        q.where = {a};
        q.where[0].conn = misp::sql::Conn::And;
      } else {
        q.where = {a, b};
      }
      q.select = {Agg::None, key};
      ex.question = "What is the " + key + " when " + gcol + " is " + cell_text(r1[group]);
      if (q.where.size() == 2) ex.question += " or " + gcol + " is " + cell_text(r2[group]);
      ex.question += "?";
      break;
    }
  }
  return ex;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Generate the bundled synthetic text-to-SQL corpus"};
  std::string out_dir = "data";
  std::uint64_t seed = 20190513;
  std::size_t per_table = 10;
  std::size_t spider_per_table = 2;
  std::size_t rows = 9;
  app.add_option("--out", out_dir, "Output directory");
  app.add_option("--seed", seed, "Generator seed");
  app.add_option("--per-table", per_table, "WikiSQL-style examples per table");
  app.add_option("--spider-per-table", spider_per_table, "Spider-style examples per table");
  app.add_option("--rows", rows, "Rows per table");
  CLI11_PARSE(app, argc, argv);

  Gen g(seed);
  const auto all = themes();
  std::ofstream tables_out(out_dir + "/tables.jsonl");
  std::ofstream examples_out(out_dir + "/examples.jsonl");
  std::ofstream spider_out(out_dir + "/spider_examples.jsonl");
  if (!tables_out || !examples_out || !spider_out) {
    std::cerr << "cannot write to " << out_dir << "\n";
    return 1;
  }
  std::size_t n = 0;
  std::size_t s = 0;
  for (std::size_t i = 0; i < all.size(); ++i) {
    char id[16];
    std::snprintf(id, sizeof id, "t%02zu", i + 1);
    const Table t = make_table(g, all[i], id, rows);
    tables_out << misp::db::to_json(t).dump() << '\n';
    for (std::size_t k = 0; k < per_table; ++k) {
      char eid[16];
      std::snprintf(eid, sizeof eid, "w%04zu", ++n);
      examples_out << misp::db::to_json(make_wikisql(g, all[i], t, eid)).dump() << '\n';
    }
    for (std::size_t k = 0; k < spider_per_table; ++k) {
      char eid[16];
      std::snprintf(eid, sizeof eid, "s%03zu", ++s);
      spider_out << misp::db::to_json(make_spider(g, all[i], t, eid)).dump() << '\n';
    }
  }
  std::cout << all.size() << " tables, " << n << " examples, " << s << " spider examples\n";
  return 0;
}
