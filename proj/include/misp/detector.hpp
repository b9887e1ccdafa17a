#pragma once

#include <span>
#include <string>

#include "misp/parser.hpp"

namespace misp::detect {

enum class Kind { Prob, Dropout, Unlimit, Off };

std::string_view to_string(Kind kind);
std::optional<Kind> parse_kind(std::string_view text);

struct DetectorConfig {
  Kind kind = Kind::Prob;
  double p_star = 0.95;
  double s_star = 0.05;
  parser::PerturbationConfig perturbation;

  /// Throws std::invalid_argument when the active kind's fields are out of range.
  void validate() const;
};

struct Verdict {
  bool ask = false;
  // p(o_t) for prob, the pass standard deviation for dropout, 0 otherwise.
  double score = 0;
};

/// Ask iff p(o_t) < p_star.
bool should_ask_prob(const parser::Decision& decision, double p_star);

/// Population standard deviation of the passes.
double pass_stddev(std::span<const double> passes);

/// Ask iff stddev(passes) > s_star; the score is reported either way.
Verdict should_ask_dropout(std::span<const double> passes, double s_star);

/// Applies the configured rule. Internal slots are never asked about.
/// `passes` is only consulted by the dropout kind.
Verdict judge(const DetectorConfig& config, const parser::Decision& decision, std::span<const double> passes = {});

}  // namespace misp::detect
