#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdlib>
#include <set>

#include "misp/parser.hpp"

namespace misp::parser {

namespace {

using sql::Agg;
using sql::Literal;
using sql::Op;
using sql::SlotKind;

// Feature weights.
constexpr double kNameExact = 3.0;
constexpr double kNamePartial = 1.5;
constexpr double kTrigram = 1.5;
constexpr double kValueEvidence = 3.0;
constexpr double kTrigger = 3.0;
constexpr double kPrior = 1.0;
constexpr double kTypeMismatch = -2.0;
constexpr double kReuse = -4.0;
constexpr double kNoCue = 2.0;

struct Token {
  std::string text;  // lowercased
  std::string raw;
  std::size_t offset = 0;
};

struct Span {
  Literal value;
  std::size_t pos = 0;
  std::size_t len = 1;
  int column = -1;  // column whose cell the span matched, -1 if none
  bool number = false;
  bool quoted = false;
  bool capitalized = false;
  bool after_limit_word = false;
};

bool is_word_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) != 0; }

std::vector<Token> tokenize(std::string_view text) {
  std::vector<Token> out;
  std::size_t i = 0;
  while (i < text.size()) {
    const char c = text[i];
    const bool number_start =
        std::isdigit(static_cast<unsigned char>(c)) ||
        (c == '-' && i + 1 < text.size() && std::isdigit(static_cast<unsigned char>(text[i + 1])) &&
         (i == 0 || !is_word_char(text[i - 1])));
    if (number_start) {
      std::size_t j = i + 1;
      while (j < text.size() && (std::isdigit(static_cast<unsigned char>(text[j])) ||
                                 (text[j] == '.' && j + 1 < text.size() &&
                                  std::isdigit(static_cast<unsigned char>(text[j + 1]))))) {
        ++j;
      }
      // "30s" or "3rd" stay one word token.
      while (j < text.size() && std::isalpha(static_cast<unsigned char>(text[j]))) ++j;
      std::string raw(text.substr(i, j - i));
      out.push_back({sql::fold_case(raw), raw, i});
      i = j;
    } else if (is_word_char(c)) {
      std::size_t j = i;
      while (j < text.size() && (is_word_char(text[j]) || text[j] == '\'')) ++j;
      std::string raw(text.substr(i, j - i));
      out.push_back({sql::fold_case(raw), raw, i});
      i = j;
    } else {
      ++i;
    }
  }
  return out;
}

std::vector<std::string> words(std::string_view text) {
  std::vector<std::string> out;
  for (auto& t : tokenize(text)) out.push_back(std::move(t.text));
  return out;
}

std::vector<std::size_t> find_phrase(const std::vector<Token>& tokens, const std::vector<std::string>& phrase) {
  std::vector<std::size_t> hits;
  if (phrase.empty() || phrase.size() > tokens.size()) return hits;
  for (std::size_t i = 0; i + phrase.size() <= tokens.size(); ++i) {
    bool ok = true;
    for (std::size_t k = 0; k < phrase.size() && ok; ++k) ok = tokens[i + k].text == phrase[k];
    if (ok) hits.push_back(i);
  }
  return hits;
}

bool parse_number(const std::string& text, double& out) {
  if (text.empty()) return false;
  char* end = nullptr;
  out = std::strtod(text.c_str(), &end);
  return end == text.c_str() + text.size();
}

std::set<std::string> trigrams(std::string_view text) {
  const std::string padded = "#" + sql::fold_case(text) + "#";
  std::set<std::string> out;
  for (std::size_t i = 0; i + 3 <= padded.size(); ++i) out.insert(padded.substr(i, 3));
  return out;
}

struct Trigger {
  std::string_view phrase;
  std::string_view unless_preceded_by;
};

// Keyword lists for aggregators, operators and clause triggers.
const std::vector<std::pair<Agg, std::vector<Trigger>>>& agg_triggers() {
  static const std::vector<std::pair<Agg, std::vector<Trigger>>> kTable = {
      {Agg::Count, {{"how many", ""}, {"number of", ""}, {"count", ""}}},
      {Agg::Avg, {{"average", ""}, {"mean", ""}}},
      {Agg::Max, {{"maximum", ""}, {"most", "at"}, {"highest", ""}, {"largest", ""}, {"max", ""}, {"biggest", ""}}},
      {Agg::Min, {{"minimum", ""}, {"least", "at"}, {"lowest", ""}, {"smallest", ""}, {"min", ""}, {"fewest", ""}}},
      {Agg::Sum, {{"total", ""}, {"sum", ""}}},
  };
  return kTable;
}

const std::vector<std::pair<Op, std::vector<Trigger>>>& op_triggers() {
  static const std::vector<std::pair<Op, std::vector<Trigger>>> kTable = {
      {Op::Gt,
       {{"more than", ""}, {"greater than", ""}, {"over", ""}, {"above", ""}, {"larger than", ""},
        {"higher than", ""}, {"older than", ""}, {"after", ""}, {"exceeding", ""}, {"bigger than", ""}}},
      {Op::Lt,
       {{"less than", ""}, {"fewer than", ""}, {"under", ""}, {"below", ""}, {"smaller than", ""},
        {"lower than", ""}, {"younger than", ""}, {"before", ""}}},
      {Op::Ge, {{"at least", ""}, {"or more", ""}, {"no less than", ""}}},
      {Op::Le, {{"at most", ""}, {"or less", ""}, {"no more than", ""}}},
      {Op::Ne, {{"not", ""}, {"other than", ""}, {"except", ""}}},
      {Op::Like, {{"containing", ""}, {"contains", ""}, {"like", ""}, {"including", ""}}},
  };
  return kTable;
}

struct Analysis {
  std::vector<Token> tokens;
  std::vector<Span> spans;

  // Start positions of `phrase`, skipping occurrences preceded by `unless`.
  std::vector<std::size_t> hits(const Trigger& t) const {
    std::vector<std::size_t> out;
    const auto unless = words(t.unless_preceded_by);
    for (std::size_t pos : find_phrase(tokens, words(t.phrase))) {
      if (!unless.empty() && pos >= 1 && tokens[pos - 1].text == unless.back()) continue;
      out.push_back(pos);
    }
    return out;
  }
  bool has(std::string_view phrase) const { return !find_phrase(tokens, words(phrase)).empty(); }
};

Analysis analyze(std::string_view question, const db::Table& table) {
  Analysis a;
  a.tokens = tokenize(question);
  std::vector<bool> covered(a.tokens.size(), false);
  auto after_limit = [&](std::size_t pos) {
    return pos >= 1 && (a.tokens[pos - 1].text == "top" || a.tokens[pos - 1].text == "first");
  };

  for (std::size_t c = 0; c < table.columns.size(); ++c) {
    std::set<std::string> seen;
    for (const auto& row : table.rows) {
      const db::Cell& cell = row[c];
      if (const auto* text = std::get_if<std::string>(&cell)) {
        if (!seen.insert(*text).second) continue;
        for (std::size_t pos : find_phrase(a.tokens, words(*text))) {
          const std::size_t len = words(*text).size();
          a.spans.push_back({Literal{*text}, pos, len, static_cast<int>(c)});
          for (std::size_t k = pos; k < pos + len; ++k) covered[k] = true;
        }
      } else if (const auto* num = std::get_if<double>(&cell)) {
        if (!seen.insert(sql::format_number(*num)).second) continue;
        for (std::size_t pos = 0; pos < a.tokens.size(); ++pos) {
          double v = 0;
          if (parse_number(a.tokens[pos].text, v) && v == *num) {
            Span s{Literal{*num}, pos, 1, static_cast<int>(c)};
            s.number = true;
            s.after_limit_word = after_limit(pos);
            a.spans.push_back(s);
            covered[pos] = true;
          }
        }
      }
    }
  }
  for (std::size_t pos = 0; pos < a.tokens.size(); ++pos) {
    double v = 0;
    if (!covered[pos] && parse_number(a.tokens[pos].text, v)) {
      Span s{Literal{v}, pos, 1, -1};
      s.number = true;
      s.after_limit_word = after_limit(pos);
      a.spans.push_back(s);
      covered[pos] = true;
    }
  }
  // Quoted spans.
  for (std::size_t open = question.find('"'); open != std::string_view::npos;) {
    const std::size_t close = question.find('"', open + 1);
    if (close == std::string_view::npos) break;
    const std::string inner(question.substr(open + 1, close - open - 1));
    if (!inner.empty()) {
      std::size_t pos = 0;
      while (pos < a.tokens.size() && a.tokens[pos].offset <= open) ++pos;
      Span s{Literal{inner}, pos, words(inner).size(), -1};
      s.quoted = true;
      a.spans.push_back(s);
    }
    open = question.find('"', close + 1);
  }
  // Runs of capitalized words (not sentence-initial, not already matched).
  for (std::size_t pos = 1; pos < a.tokens.size();) {
    auto capital = [&](std::size_t k) {
      return !covered[k] && std::isupper(static_cast<unsigned char>(a.tokens[k].raw[0]));
    };
    if (!capital(pos)) {
      ++pos;
      continue;
    }
    std::size_t end = pos;
    std::string text;
    while (end < a.tokens.size() && capital(end)) {
      if (!text.empty()) text += ' ';
      text += a.tokens[end].raw;
      ++end;
    }
    Span s{Literal{text}, pos, end - pos, -1};
    s.capitalized = true;
    a.spans.push_back(s);
    pos = end;
  }
  return a;
}

struct Mention {
  double exact = 0;    // 1 if the full column name occurs as a phrase
  double partial = 0;  // fraction of name words present otherwise
  double trigram = 0;  // share of the name's trigrams found in the question
  std::size_t first = std::string::npos;
};

Mention mention(const Analysis& a, const std::set<std::string>& question_trigrams, const std::string& column) {
  Mention m;
  const auto name = words(column);
  const auto exact = find_phrase(a.tokens, name);
  if (!exact.empty()) {
    m.exact = 1;
    m.first = exact.front();
  } else if (!name.empty()) {
    std::size_t found = 0;
    for (const auto& w : name) {
      const auto pos = find_phrase(a.tokens, {w});
      if (!pos.empty()) {
        ++found;
        m.first = std::min(m.first, pos.front());
      }
    }
    m.partial = static_cast<double>(found) / static_cast<double>(name.size());
  }
  const auto grams = trigrams(column);
  std::size_t shared = 0;
  for (const auto& g : grams) shared += question_trigrams.count(g);
  m.trigram = grams.empty() ? 0 : static_cast<double>(shared) / static_cast<double>(grams.size());
  return m;
}

// Committed facts the scorer conditions on.
struct Prefix {
  std::string select_col;
  std::vector<std::string> where_cols;
  std::vector<Literal> where_vals;
  std::vector<Op> where_ops;
  std::vector<std::string> group_cols;
  std::vector<std::string> having_cols;
  std::vector<Agg> having_aggs;
};

Prefix read_prefix(const PartialParse& partial) {
  Prefix p;
  for (const auto& e : partial) {
    switch (e.slot.kind) {
      case SlotKind::SelectCol: p.select_col = std::get<std::string>(e.value); break;
      case SlotKind::WhereCol: p.where_cols.push_back(std::get<std::string>(e.value)); break;
      case SlotKind::WhereOp: p.where_ops.push_back(std::get<Op>(e.value)); break;
      case SlotKind::WhereVal: p.where_vals.push_back(std::get<Literal>(e.value)); break;
      case SlotKind::GroupByCol: p.group_cols.push_back(std::get<std::string>(e.value)); break;
      case SlotKind::HavingCol: p.having_cols.push_back(std::get<std::string>(e.value)); break;
      case SlotKind::HavingAgg: p.having_aggs.push_back(std::get<Agg>(e.value)); break;
      default: break;
    }
  }
  return p;
}

bool same_column(const std::string& a, const std::string& b) { return sql::fold_case(a) == sql::fold_case(b); }

bool literal_used(const std::vector<Literal>& used, const Literal& v) {
  return std::any_of(used.begin(), used.end(), [&](const Literal& u) {
    return sql::fold_case(sql::render_literal(u)) == sql::fold_case(sql::render_literal(v));
  });
}

class Scorer {
 public:
  Scorer(std::string_view question, const db::Table& table, const PartialParse& partial, sql::Mode mode)
      : table_(table),
        mode_(mode),
        a_(analyze(question, table)),
        question_trigrams_(trigrams(question)),
        prefix_(read_prefix(partial)) {}

  SlotScores score(const SlotId& slot) const {
    SlotScores s;
    s.slot = slot;
    switch (slot.kind) {
      case SlotKind::SelectCol: select_col(s); break;
      case SlotKind::SelectAgg: agg(s, prefix_.select_col, false); break;
      case SlotKind::WhereCount: condition_count(s); break;
      case SlotKind::WhereCol: where_col(s, slot.index); break;
      case SlotKind::WhereOp: op(s, column_of_condition(slot.index)); break;
      case SlotKind::WhereVal: value(s, column_of_condition(slot.index), slot.index); break;
      case SlotKind::WhereConn: connector(s); break;
      case SlotKind::GroupByCount: binary(s, {"for each", "per", "each", "for every", "grouped by"}); break;
      case SlotKind::GroupByCol: group_col(s); break;
      case SlotKind::HavingCount:
        binary(s, {"having", "with more than", "with at least", "with over", "with fewer than", "with less than"});
        break;
      case SlotKind::HavingCol: having_col(s); break;
      case SlotKind::HavingAgg: agg(s, at_or_empty(prefix_.having_cols, slot.index), true); break;
      case SlotKind::HavingOp: op(s, at_or_empty(prefix_.having_cols, slot.index)); break;
      case SlotKind::HavingVal: having_value(s); break;
      case SlotKind::OrderByPresent:
        binary(s, {"order", "ordered", "sort", "sorted", "top", "ranked", "descending", "ascending"});
        break;
      case SlotKind::OrderByCol: order_col(s); break;
      case SlotKind::OrderByAgg: order_agg(s); break;
      case SlotKind::OrderByDir: order_dir(s); break;
    }
    return s;
  }

 private:
  static std::string at_or_empty(const std::vector<std::string>& v, int i) {
    return static_cast<std::size_t>(i) < v.size() ? v[i] : std::string{};
  }

  std::string column_of_condition(int i) const { return at_or_empty(prefix_.where_cols, i); }

  int column_index(const std::string& name) const { return table_.column_index(name); }

  bool numeric(const std::string& name) const {
    const int c = column_index(name);
    return c >= 0 && table_.columns[c].type == db::ColumnType::Number;
  }

  void add_option(SlotScores& s, SlotValue value, std::vector<double> terms) const {
    s.options.push_back(std::move(value));
    s.contributions.push_back(std::move(terms));
  }

  bool has_value_evidence(int column) const {
    return std::any_of(a_.spans.begin(), a_.spans.end(), [&](const Span& sp) {
      return sp.column == column && !sp.after_limit_word && !literal_used(prefix_.where_vals, sp.value);
    });
  }

  void select_col(SlotScores& s) const {
    std::size_t earliest = std::string::npos;
    std::vector<Mention> mentions;
    for (const auto& col : table_.columns) {
      mentions.push_back(mention(a_, question_trigrams_, col.name));
      if (mentions.back().exact > 0 || mentions.back().partial > 0) earliest = std::min(earliest, mentions.back().first);
    }
    for (std::size_t c = 0; c < table_.columns.size(); ++c) {
      const Mention& m = mentions[c];
      const bool first = earliest != std::string::npos && m.first == earliest;
      add_option(s, table_.columns[c].name,
                 {kNameExact * m.exact, kNamePartial * m.partial, kTrigram * m.trigram,
                  has_value_evidence(static_cast<int>(c)) ? -1.5 : 0.0, first ? 0.5 : 0.0});
    }
  }

  void where_col(SlotScores& s, int index) const {
    bool free_number = false;
    for (const Span& sp : a_.spans) {
      if (sp.number && sp.column < 0 && !sp.after_limit_word && !literal_used(prefix_.where_vals, sp.value)) {
        free_number = true;
      }
    }
    for (std::size_t c = 0; c < table_.columns.size(); ++c) {
      const std::string& name = table_.columns[c].name;
      const Mention m = mention(a_, question_trigrams_, name);
      const bool mentioned = m.exact > 0 || m.partial > 0;
      double numeric_evidence = 0;
      if (table_.columns[c].type == db::ColumnType::Number && free_number) numeric_evidence = mentioned ? 2.0 : 0.5;
      bool reused = false;
      for (int k = 0; k < index && static_cast<std::size_t>(k) < prefix_.where_cols.size(); ++k) {
        reused = reused || same_column(prefix_.where_cols[k], name);
      }
      add_option(s, name,
                 {has_value_evidence(static_cast<int>(c)) ? kValueEvidence : 0.0, numeric_evidence,
                  0.5 * kNameExact * m.exact, 0.5 * kNamePartial * m.partial, 0.5 * kTrigram * m.trigram,
                  same_column(prefix_.select_col, name) ? -1.5 : 0.0, reused ? kReuse : 0.0});
    }
  }

  // Token positions that support a condition on `column`.
  std::vector<std::size_t> evidence_positions(const std::string& column) const {
    std::vector<std::size_t> out;
    const int c = column_index(column);
    for (const Span& sp : a_.spans) {
      if (sp.after_limit_word) continue;
      if ((c >= 0 && sp.column == c) || (sp.number && sp.column < 0 && numeric(column))) out.push_back(sp.pos);
    }
    for (std::size_t pos : find_phrase(a_.tokens, words(column))) out.push_back(pos);
    return out;
  }

  void op(SlotScores& s, const std::string& column) const {
    std::vector<Op> ops = {Op::Eq, Op::Gt, Op::Lt};
    if (mode_ == sql::Mode::Spider) ops = {Op::Eq, Op::Gt, Op::Lt, Op::Ge, Op::Le, Op::Ne, Op::Like};
    const auto evidence = evidence_positions(column);
    const bool is_numeric = numeric(column);
    for (Op o : ops) {
      double trigger = 0;
      for (const auto& [target, list] : op_triggers()) {
        if (target != o) continue;
        for (const Trigger& t : list) {
          for (std::size_t pos : a_.hits(t)) {
            const std::size_t end = pos + words(t.phrase).size();
            bool near = false;
            for (std::size_t e : evidence) near = near || (e >= end && e <= end + 3);
            trigger = std::max(trigger, near ? kTrigger : 1.0);
          }
        }
      }
      double type = 0;
      const bool ordering = o == Op::Gt || o == Op::Lt || o == Op::Ge || o == Op::Le;
      if (!is_numeric && ordering) type = kTypeMismatch;
      if (is_numeric && o == Op::Like) type = kTypeMismatch;
      add_option(s, o, {o == Op::Eq ? kPrior : 0.0, trigger, type});
    }
  }

  void value(SlotScores& s, const std::string& column, int index) const {
    const int c = column_index(column);
    const bool is_numeric = numeric(column);
    std::vector<std::pair<Literal, std::vector<double>>> candidates;
    auto upsert = [&](const Literal& v, std::vector<double> terms) {
      for (auto& [existing, t] : candidates) {
        if (sql::render_literal(existing) == sql::render_literal(v) && existing.index() == v.index()) {
          for (std::size_t k = 0; k < terms.size(); ++k) t[k] = std::max(t[k], terms[k]);
          return;
        }
      }
      candidates.emplace_back(v, std::move(terms));
    };
    std::vector<Literal> earlier(prefix_.where_vals.begin(),
                                 prefix_.where_vals.begin() + std::min<std::size_t>(index, prefix_.where_vals.size()));
    for (const Span& sp : a_.spans) {
      const bool in_column = c >= 0 && sp.column == c;
      const bool numeric_value = std::holds_alternative<double>(sp.value);
      double type = 0;
      if (is_numeric) type = numeric_value ? 1.0 : kTypeMismatch;
      if (!is_numeric) type = numeric_value ? -0.5 : 0.5;
      upsert(sp.value, {in_column ? kValueEvidence : 0.0, 1.5, type, sp.after_limit_word ? -2.0 : 0.0,
                        literal_used(earlier, sp.value) ? -3.0 : 0.0, sp.quoted ? 1.0 : 0.0});
    }
    if (c >= 0) {
      for (const auto& row : table_.rows) {
        const db::Cell& cell = row[c];
        Literal v = std::holds_alternative<double>(cell) ? Literal{std::get<double>(cell)}
                                                         : Literal{std::get<std::string>(cell)};
        upsert(v, {0.0, 0.0, 0.0, 0.0, literal_used(earlier, v) ? -3.0 : 0.0, 0.0});
      }
    }
    if (candidates.empty()) upsert(Literal{std::string{}}, {0.0, 0.0, 0.0, 0.0, 0.0, 0.0});
    for (auto& [v, terms] : candidates) add_option(s, v, std::move(terms));
  }

  void condition_count(SlotScores& s) const {
    std::set<std::string> values;
    for (const Span& sp : a_.spans) {
      if (sp.after_limit_word || sp.capitalized) continue;
      if (sp.column >= 0 || sp.number || sp.quoted) values.insert(sql::fold_case(sql::render_literal(sp.value)));
    }
    const auto n = static_cast<std::int64_t>(std::min<std::size_t>(values.size(), 3));
    for (std::int64_t k = 0; k <= 3; ++k) {
      const double closeness = k == n ? kTrigger : (std::llabs(k - n) == 1 ? 0.5 : 0.0);
      add_option(s, k, {closeness});
    }
  }

  void connector(SlotScores& s) const {
    add_option(s, sql::Conn::And, {kPrior});
    add_option(s, sql::Conn::Or, {a_.has("or") ? kTrigger : 0.0});
  }

  void binary(SlotScores& s, std::initializer_list<std::string_view> triggers) const {
    bool hit = false;
    for (auto t : triggers) hit = hit || a_.has(t);
    add_option(s, std::int64_t{0}, {kPrior});
    add_option(s, std::int64_t{1}, {hit ? kTrigger : 0.0});
  }

  void agg(SlotScores& s, const std::string& column, bool having) const {
    const bool is_numeric = numeric(column);
    bool any_cue = false;
    for (const auto& [target, list] : agg_triggers()) {
      for (const Trigger& t : list) any_cue = any_cue || !a_.hits(t).empty();
    }
    for (Agg g : sql::kAllAggs) {
      double trigger = 0;
      for (const auto& [target, list] : agg_triggers()) {
        if (target != g) continue;
        for (const Trigger& t : list) {
          if (!a_.hits(t).empty()) trigger = kTrigger;
        }
      }
      double prior = g == Agg::None ? kPrior : 0.0;
      if (having) prior = g == Agg::Count ? 1.5 : (g == Agg::None ? -1.0 : 0.0);
      const bool numeric_only = g == Agg::Max || g == Agg::Min || g == Agg::Sum || g == Agg::Avg;
      add_option(s, g, {prior, trigger, numeric_only && !is_numeric ? kTypeMismatch : 0.0,
                        g == Agg::None && !any_cue ? kNoCue : 0.0});
    }
  }

  // Columns named right after one of `cues` (within two words).
  double cue_follows(const std::string& column, std::initializer_list<std::string_view> cues) const {
    const auto name = words(column);
    for (std::size_t pos : find_phrase(a_.tokens, name)) {
      for (auto cue : cues) {
        for (std::size_t c : find_phrase(a_.tokens, words(cue))) {
          const std::size_t end = c + words(cue).size();
          if (pos >= end && pos <= end + 2) return 1.0;
        }
      }
    }
    return 0.0;
  }

  void group_col(SlotScores& s) const {
    for (const auto& col : table_.columns) {
      const Mention m = mention(a_, question_trigrams_, col.name);
      add_option(s, col.name,
                 {kTrigger * cue_follows(col.name, {"each", "per", "every", "by"}), 1.0 * m.exact,
                  0.5 * kTrigram * m.trigram, col.type == db::ColumnType::Number ? -0.5 : 0.0});
    }
  }

  void having_col(SlotScores& s) const {
    for (const auto& col : table_.columns) {
      const Mention m = mention(a_, question_trigrams_, col.name);
      add_option(s, col.name,
                 {same_column(col.name, prefix_.select_col) ? 2.0 : 0.0, 1.0 * m.exact, 0.5 * kTrigram * m.trigram});
    }
  }

  void having_value(SlotScores& s) const {
    std::vector<double> seen;
    for (const Span& sp : a_.spans) {
      if (!sp.number || sp.after_limit_word) continue;
      const double v = std::get<double>(sp.value);
      if (std::find(seen.begin(), seen.end(), v) != seen.end()) continue;
      seen.push_back(v);
      add_option(s, Literal{v}, {kValueEvidence, sp.column < 0 ? 0.5 : 0.0});
    }
    if (s.options.empty()) add_option(s, Literal{1.0}, {0.0});
  }

  void order_col(SlotScores& s) const {
    for (const auto& col : table_.columns) {
      const Mention m = mention(a_, question_trigrams_, col.name);
      add_option(s, col.name,
                 {kTrigger * cue_follows(col.name, {"by", "order", "sort", "sorted by", "ordered by"}),
                  kNamePartial * m.exact, 0.5 * kTrigram * m.trigram,
                  same_column(col.name, prefix_.select_col) ? 0.5 : 0.0});
    }
  }

  void order_agg(SlotScores& s) const {
    for (Agg g : sql::kAllAggs) {
      double trigger = 0;
      if (g == Agg::Count && !prefix_.group_cols.empty() && a_.has("number of")) trigger = 2.0;
      add_option(s, g, {g == Agg::None ? kPrior : 0.0, trigger});
    }
  }

  void order_dir(SlotScores& s) const {
    const bool desc = a_.has("descending") || a_.has("decreasing") || a_.has("highest") || a_.has("most") ||
                      a_.has("top") || a_.has("largest");
    const bool asc = a_.has("ascending") || a_.has("increasing") || a_.has("lowest") || a_.has("fewest") ||
                     a_.has("smallest");
    std::vector<std::int64_t> limits;
    for (const Span& sp : a_.spans) {
      if (sp.number && sp.after_limit_word) {
        const double v = std::get<double>(sp.value);
        if (v >= 1 && v == std::floor(v)) limits.push_back(static_cast<std::int64_t>(v));
      }
    }
    const bool has_limit = !limits.empty();
    for (sql::Dir d : {sql::Dir::Asc, sql::Dir::Desc}) {
      const double direction = d == sql::Dir::Desc ? (desc ? 2.0 : 0.0) : (asc ? 2.0 : 0.5);
      add_option(s, sql::OrderSpec{d, std::nullopt}, {direction, has_limit ? -1.0 : 0.0});
      for (std::int64_t n : limits) add_option(s, sql::OrderSpec{d, n}, {direction, kTrigger});
    }
  }

  const db::Table& table_;
  sql::Mode mode_;
  Analysis a_;
  std::set<std::string> question_trigrams_;
  Prefix prefix_;
};

}  // namespace

SlotScores heuristic_features(std::string_view question, const db::Table& table, const SlotId& slot,
                              const PartialParse& partial, sql::Mode mode) {
  return Scorer(question, table, partial, mode).score(slot);
}

SlotScores HeuristicParser::score_slot(const ParseContext& ctx, const PartialParse& partial,
                                       const SlotId& slot) const {
  if (ctx.table == nullptr) throw std::logic_error("heuristic parser needs a table");
  SlotScores s = heuristic_features(ctx.question, *ctx.table, slot, partial, ctx.mode);
  const double extra = static_cast<double>(std::max<std::size_t>(tokenize(ctx.question).size(), 6) - 6);
  s.temperature = options_.temperature * (1.0 + options_.length_scale * extra);
  return s;
}

}  // namespace misp::parser
