#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "misp/db.hpp"
#include "misp/sql.hpp"

namespace misp::parser {

using sql::PartialParse;
using sql::SlotId;
using sql::SlotValue;

/// One stepwise prediction: candidate values for a slot and their probabilities.
struct Decision {
  SlotId slot;
  std::vector<SlotValue> options;
  std::vector<double> probs;
  std::size_t chosen = 0;

  const SlotValue& choice() const { return options.at(chosen); }
  double chosen_prob() const { return probs.at(chosen); }
};

/// Values the user has negated, per slot.
class ConstraintSet {
 public:
  void forbid(const SlotId& slot, const SlotValue& value);
  bool is_forbidden(const SlotId& slot, const SlotValue& value) const;
  const std::vector<SlotValue>& forbidden(const SlotId& slot) const;
  void clear(const SlotId& slot) { forbidden_.erase(slot); }
  bool empty() const { return forbidden_.empty(); }

 private:
  std::map<SlotId, std::vector<SlotValue>> forbidden_;
};

struct PerturbationConfig {
  int passes = 10;
  double drop_rate = 0.1;
  std::uint64_t seed = 0;

  void validate() const;
};

struct ParseContext {
  std::string example_id;
  std::string question;
  const db::Table* table = nullptr;
  sql::Mode mode = sql::Mode::WikiSql;
};

/// Candidate options for one slot with additive per-option feature terms.
/// score(k) = sum(contributions[k]); probabilities are softmax(score / temperature)
/// unless `exact_probs` pins the unperturbed distribution.
struct SlotScores {
  SlotId slot;
  std::vector<SlotValue> options;
  std::vector<std::vector<double>> contributions;
  double temperature = 1.0;
  std::optional<std::vector<double>> exact_probs;

  std::vector<double> scores() const;
};

/// Thrown when constraints leave a slot without any option.
class ConstraintError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

std::vector<double> softmax(const std::vector<double>& scores, double temperature);

/// Drops forbidden options, sorts the rest lexicographically by rendered value,
/// renormalizes, and picks the argmax (lowest index on ties).
Decision make_decision(const SlotId& slot, const std::vector<SlotValue>& options, const std::vector<double>& probs,
                       const ConstraintSet& constraints);

/// Deterministic per-pass stream keyed by (seed, example id, slot, pass index).
std::mt19937_64 pass_stream(std::uint64_t seed, std::string_view example_id, const SlotId& slot, int pass);

/// Uniform double in [0, 1) from 53 high bits; identical on every platform.
double unit_uniform(std::mt19937_64& rng);

/// Probability of `target` under one perturbed pass of `scores`: each additive
/// contribution is zeroed with probability `drop_rate`, then forbidden options are
/// removed and the rest renormalized.
double perturbed_probability(const SlotScores& scores, const SlotValue& target, const ConstraintSet& constraints,
                             double drop_rate, std::mt19937_64& rng);

class Parser {
 public:
  virtual ~Parser() = default;

  /// Next slot's decision, or nullopt when every slot has been predicted.
  virtual std::optional<Decision> next_decision(const ParseContext& ctx, const PartialParse& partial,
                                                const ConstraintSet& constraints) const;

  /// Chosen-option probabilities under `config.passes` perturbed passes.
  virtual std::vector<double> perturbed_passes(const ParseContext& ctx, const PartialParse& partial,
                                               const ConstraintSet& constraints, const Decision& decision,
                                               const PerturbationConfig& config) const;

  virtual SlotScores score_slot(const ParseContext& ctx, const PartialParse& partial, const SlotId& slot) const = 0;
};

/// Replays per-example distributions from a configuration file.
class ScriptedParser : public Parser {
 public:
  struct Entry {
    SlotId slot;
    std::vector<SlotValue> options;
    std::vector<double> probs;
  };

  ScriptedParser() = default;
  explicit ScriptedParser(std::map<std::string, std::vector<Entry>> scripts);

  /// {"<example id>" | "*": [{"slot": ..., "options": [...], "probs": [...]}, ...]}
  static ScriptedParser from_json(const nlohmann::json& value);
  static ScriptedParser from_file(const std::string& path);
  nlohmann::json to_json() const;

  void set_script(const std::string& example_id, std::vector<Entry> entries);

  SlotScores score_slot(const ParseContext& ctx, const PartialParse& partial, const SlotId& slot) const override;

 private:
  std::map<std::string, std::vector<Entry>> scripts_;
};

struct HeuristicOptions {
  double temperature = 1.0;
  // Extra temperature per question word beyond six: longer questions carry more
  // distractors, so their distributions are kept softer.
  double length_scale = 0.03;
};

/// Lexical stand-in for a trained scorer: string overlap, trigger keywords and
/// cell-value lookups, combined additively and normalized with a softmax.
class HeuristicParser : public Parser {
 public:
  explicit HeuristicParser(HeuristicOptions options = {}) : options_(options) {}

  SlotScores score_slot(const ParseContext& ctx, const PartialParse& partial, const SlotId& slot) const override;

 private:
  HeuristicOptions options_;
};

/// Feature scores of the heuristic parser for `slot` given a committed prefix.
SlotScores heuristic_features(std::string_view question, const db::Table& table, const SlotId& slot,
                              const PartialParse& partial = {}, sql::Mode mode = sql::Mode::WikiSql);

/// Commits every argmax with no constraints.
PartialParse parse_unassisted(const Parser& parser, const ParseContext& ctx);

}  // namespace misp::parser
