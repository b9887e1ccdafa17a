#include "misp/parser.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

namespace misp::parser {

void ConstraintSet::forbid(const SlotId& slot, const SlotValue& value) {
  if (!is_forbidden(slot, value)) forbidden_[slot].push_back(value);
}

bool ConstraintSet::is_forbidden(const SlotId& slot, const SlotValue& value) const {
  auto it = forbidden_.find(slot);
  if (it == forbidden_.end()) return false;
  return std::any_of(it->second.begin(), it->second.end(),
                     [&](const SlotValue& v) { return sql::slot_values_equal(v, value); });
}

const std::vector<SlotValue>& ConstraintSet::forbidden(const SlotId& slot) const {
  static const std::vector<SlotValue> kNone;
  auto it = forbidden_.find(slot);
  return it == forbidden_.end() ? kNone : it->second;
}

void PerturbationConfig::validate() const {
  if (passes < 1) throw std::invalid_argument("perturbation passes must be >= 1");
  if (!(drop_rate >= 0.0 && drop_rate < 1.0)) throw std::invalid_argument("drop rate must lie in [0, 1)");
}

std::vector<double> SlotScores::scores() const {
  std::vector<double> out;
  out.reserve(contributions.size());
  for (const auto& terms : contributions) out.push_back(std::accumulate(terms.begin(), terms.end(), 0.0));
  return out;
}

std::vector<double> softmax(const std::vector<double>& scores, double temperature) {
  std::vector<double> out(scores.size());
  if (scores.empty()) return out;
  double top = scores[0] / temperature;
  for (double s : scores) top = std::max(top, s / temperature);
  double sum = 0;
  for (std::size_t k = 0; k < scores.size(); ++k) {
    out[k] = std::exp(scores[k] / temperature - top);
    sum += out[k];
  }
  for (double& p : out) p /= sum;
  return out;
}

namespace {

// Indices of non-forbidden options, ordered by rendered value.
std::vector<std::size_t> allowed_sorted(const SlotId& slot, const std::vector<SlotValue>& options,
                                        const ConstraintSet& constraints) {
  std::vector<std::size_t> keep;
  for (std::size_t k = 0; k < options.size(); ++k) {
    if (!constraints.is_forbidden(slot, options[k])) keep.push_back(k);
  }
  std::vector<std::string> keys(options.size());
  for (std::size_t k : keep) keys[k] = sql::render_slot_value(options[k]);
  std::stable_sort(keep.begin(), keep.end(), [&](std::size_t a, std::size_t b) { return keys[a] < keys[b]; });
  return keep;
}

void normalize(std::vector<double>& probs) {
  const double sum = std::accumulate(probs.begin(), probs.end(), 0.0);
  if (sum > 0) {
    for (double& p : probs) p /= sum;
  } else {
    for (double& p : probs) p = 1.0 / static_cast<double>(probs.size());
  }
}

std::uint64_t fnv1a(std::uint64_t hash, const void* data, std::size_t size) {
  const auto* bytes = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < size; ++i) {
    hash ^= bytes[i];
    hash *= 0x100000001b3ULL;
  }
  return hash;
}

std::uint64_t fnv1a_u64(std::uint64_t hash, std::uint64_t value) {
  unsigned char bytes[8];
  for (int i = 0; i < 8; ++i) bytes[i] = static_cast<unsigned char>(value >> (8 * i));
  return fnv1a(hash, bytes, 8);
}

}  // namespace

Decision make_decision(const SlotId& slot, const std::vector<SlotValue>& options, const std::vector<double>& probs,
                       const ConstraintSet& constraints) {
  if (options.size() != probs.size()) throw std::logic_error("options and probabilities differ in length");
  const auto keep = allowed_sorted(slot, options, constraints);
  if (keep.empty()) throw ConstraintError("constraints forbid every option of " + sql::to_string(slot));
  Decision d;
  d.slot = slot;
  for (std::size_t k : keep) {
    d.options.push_back(options[k]);
    d.probs.push_back(probs[k]);
  }
  normalize(d.probs);
  d.chosen = 0;
  for (std::size_t k = 1; k < d.probs.size(); ++k) {
    if (d.probs[k] > d.probs[d.chosen]) d.chosen = k;
  }
  return d;
}

std::mt19937_64 pass_stream(std::uint64_t seed, std::string_view example_id, const SlotId& slot, int pass) {
  const std::string slot_name = sql::to_string(slot);
  const unsigned char sep = 0;
  std::uint64_t h = 0xcbf29ce484222325ULL;
  h = fnv1a_u64(h, seed);
  h = fnv1a(h, example_id.data(), example_id.size());
  h = fnv1a(h, &sep, 1);
  h = fnv1a(h, slot_name.data(), slot_name.size());
  h = fnv1a(h, &sep, 1);
  h = fnv1a_u64(h, static_cast<std::uint64_t>(pass));
  return std::mt19937_64(h);
}

double unit_uniform(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

double perturbed_probability(const SlotScores& scores, const SlotValue& target, const ConstraintSet& constraints,
                             double drop_rate, std::mt19937_64& rng) {
  // Every contribution consumes one draw, forbidden options included, so the
  // stream position does not depend on the constraint set.
  std::vector<double> perturbed(scores.options.size(), 0.0);
  for (std::size_t k = 0; k < scores.contributions.size(); ++k) {
    for (double term : scores.contributions[k]) {
      if (unit_uniform(rng) >= drop_rate) perturbed[k] += term;
    }
  }
  std::vector<double> kept_scores;
  std::size_t target_index = scores.options.size();
  for (std::size_t k = 0; k < scores.options.size(); ++k) {
    if (constraints.is_forbidden(scores.slot, scores.options[k])) continue;
    if (sql::slot_values_equal(scores.options[k], target)) target_index = kept_scores.size();
    kept_scores.push_back(perturbed[k]);
  }
  if (target_index == scores.options.size()) throw std::logic_error("target option not among candidates");
  return softmax(kept_scores, scores.temperature)[target_index];
}

std::optional<Decision> Parser::next_decision(const ParseContext& ctx, const PartialParse& partial,
                                              const ConstraintSet& constraints) const {
  const auto slot = sql::next_slot(partial, ctx.mode);
  if (!slot) return std::nullopt;
  const SlotScores scores = score_slot(ctx, partial, *slot);
  const std::vector<double> probs =
      scores.exact_probs ? *scores.exact_probs : softmax(scores.scores(), scores.temperature);
  return make_decision(*slot, scores.options, probs, constraints);
}

std::vector<double> Parser::perturbed_passes(const ParseContext& ctx, const PartialParse& partial,
                                             const ConstraintSet& constraints, const Decision& decision,
                                             const PerturbationConfig& config) const {
  config.validate();
  const SlotScores scores = score_slot(ctx, partial, decision.slot);
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(config.passes));
  for (int i = 0; i < config.passes; ++i) {
    if (config.drop_rate == 0.0) {
      out.push_back(decision.chosen_prob());
      continue;
    }
    auto rng = pass_stream(config.seed, ctx.example_id, decision.slot, i);
    out.push_back(perturbed_probability(scores, decision.choice(), constraints, config.drop_rate, rng));
  }
  return out;
}

PartialParse parse_unassisted(const Parser& parser, const ParseContext& ctx) {
  PartialParse partial;
  const ConstraintSet none;
  while (auto d = parser.next_decision(ctx, partial, none)) partial.push_back({d->slot, d->choice()});
  return partial;
}

// ---------------------------------------------------------------------------

ScriptedParser::ScriptedParser(std::map<std::string, std::vector<Entry>> scripts) : scripts_(std::move(scripts)) {
  for (const auto& [id, entries] : scripts_) set_script(id, entries);
}

void ScriptedParser::set_script(const std::string& example_id, std::vector<Entry> entries) {
  for (const Entry& e : entries) {
    const std::string where = example_id + "/" + sql::to_string(e.slot);
    if (e.options.empty()) throw std::invalid_argument(where + ": no options");
    if (e.options.size() != e.probs.size()) throw std::invalid_argument(where + ": options/probs length mismatch");
    double sum = 0;
    for (double p : e.probs) {
      if (p < 0) throw std::invalid_argument(where + ": negative probability");
      sum += p;
    }
    if (std::fabs(sum - 1.0) > 1e-9) throw std::invalid_argument(where + ": probabilities do not sum to 1");
  }
  scripts_[example_id] = std::move(entries);
}

ScriptedParser ScriptedParser::from_json(const nlohmann::json& value) {
  if (!value.is_object()) throw sql::DecodeError("$", "expected object keyed by example id");
  ScriptedParser parser;
  for (const auto& [id, list] : value.items()) {
    const std::string base = "$." + id;
    if (!list.is_array()) throw sql::DecodeError(base, "expected array");
    std::vector<Entry> entries;
    for (std::size_t i = 0; i < list.size(); ++i) {
      const std::string at = base + "[" + std::to_string(i) + "]";
      const auto& item = list[i];
      if (!item.is_object() || !item.contains("slot") || !item.contains("options") || !item.contains("probs")) {
        throw sql::DecodeError(at, "expected {slot, options, probs}");
      }
      auto slot = sql::parse_slot(item["slot"].get<std::string>());
      if (!slot) throw sql::DecodeError(at + ".slot", "unknown slot");
      Entry e{*slot, {}, {}};
      for (std::size_t k = 0; k < item["options"].size(); ++k) {
        e.options.push_back(
            sql::slot_value_from_json(slot->kind, item["options"][k], at + ".options[" + std::to_string(k) + "]"));
      }
      e.probs = item["probs"].get<std::vector<double>>();
      entries.push_back(std::move(e));
    }
    try {
      parser.set_script(id, std::move(entries));
    } catch (const std::invalid_argument& err) {
      throw sql::DecodeError(base, err.what());
    }
  }
  return parser;
}

ScriptedParser ScriptedParser::from_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  return from_json(nlohmann::json::parse(in));
}

nlohmann::json ScriptedParser::to_json() const {
  nlohmann::json out = nlohmann::json::object();
  for (const auto& [id, entries] : scripts_) {
    nlohmann::json list = nlohmann::json::array();
    for (const Entry& e : entries) {
      nlohmann::json options = nlohmann::json::array();
      for (const auto& o : e.options) options.push_back(sql::slot_value_to_json(o));
      list.push_back({{"slot", sql::to_string(e.slot)}, {"options", options}, {"probs", e.probs}});
    }
    out[id] = std::move(list);
  }
  return out;
}

SlotScores ScriptedParser::score_slot(const ParseContext& ctx, const PartialParse&, const SlotId& slot) const {
  auto it = scripts_.find(ctx.example_id);
  if (it == scripts_.end()) it = scripts_.find("*");
  if (it == scripts_.end()) throw std::runtime_error("no script for example \"" + ctx.example_id + "\"");
  for (const Entry& e : it->second) {
    if (e.slot != slot) continue;
    SlotScores scores;
    scores.slot = slot;
    scores.options = e.options;
    scores.exact_probs = e.probs;
    // Log-probabilities act as the single feature term of each option.
    for (double p : e.probs) scores.contributions.push_back({std::log(std::max(p, 1e-12))});
    return scores;
  }
  throw std::runtime_error("script for \"" + it->first + "\" has no entry for slot " + sql::to_string(slot));
}

}  // namespace misp::parser
