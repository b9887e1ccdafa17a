#include "misp/detector.hpp"

#include <cmath>
#include <stdexcept>

namespace misp::detect {

namespace {

constexpr std::pair<Kind, std::string_view> kKindNames[] = {
    {Kind::Prob, "prob"}, {Kind::Dropout, "dropout"}, {Kind::Unlimit, "unlimit"}, {Kind::Off, "off"}};

}  // namespace

std::string_view to_string(Kind kind) {
  for (const auto& [k, name] : kKindNames) {
    if (k == kind) return name;
  }
  return "?";
}

std::optional<Kind> parse_kind(std::string_view text) {
  for (const auto& [k, name] : kKindNames) {
    if (name == text) return k;
  }
  return std::nullopt;
}

void DetectorConfig::validate() const {
  if (kind == Kind::Prob && !(p_star > 0.0 && p_star <= 1.0)) {
    throw std::invalid_argument("p_star must lie in (0, 1]");
  }
  if (kind == Kind::Dropout) {
    if (!(s_star > 0.0)) throw std::invalid_argument("s_star must be > 0");
    perturbation.validate();
  }
}

bool should_ask_prob(const parser::Decision& decision, double p_star) { return decision.chosen_prob() < p_star; }

double pass_stddev(std::span<const double> passes) {
  if (passes.empty()) throw std::invalid_argument("no perturbation passes");
  // Welford: identical passes give exactly zero.
  double mean = 0;
  double m2 = 0;
  double n = 0;
  for (double p : passes) {
    n += 1;
    const double delta = p - mean;
    mean += delta / n;
    m2 += delta * (p - mean);
  }
  return std::sqrt(m2 / n);
}

Verdict should_ask_dropout(std::span<const double> passes, double s_star) {
  const double score = pass_stddev(passes);
  return {score > s_star, score};
}

Verdict judge(const DetectorConfig& config, const parser::Decision& decision, std::span<const double> passes) {
  if (!sql::is_askable(decision.slot.kind)) return {};
  switch (config.kind) {
    case Kind::Off: return {};
    case Kind::Unlimit: return {true, 0};
    case Kind::Prob: return {should_ask_prob(decision, config.p_star), decision.chosen_prob()};
    case Kind::Dropout: return should_ask_dropout(passes, config.s_star);
  }
  return {};
}

}  // namespace misp::detect
