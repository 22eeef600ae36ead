#pragma once

#include <cstddef>
#include <string>

#include "schemaprobe/datamodel.hpp"
#include "schemaprobe/errors.hpp"

namespace schemaprobe {

struct LinkMetrics {
  std::size_t true_positives = 0;
  std::size_t false_positives = 0;
  std::size_t false_negatives = 0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;

  /// Derives precision/recall/F1 from the counts; every 0/0 is taken as 0.
  static LinkMetrics from_counts(std::size_t tp, std::size_t fp, std::size_t fn) {
    LinkMetrics m{tp, fp, fn};
    m.precision = tp + fp ? static_cast<double>(tp) / static_cast<double>(tp + fp) : 0.0;
    m.recall = tp + fn ? static_cast<double>(tp) / static_cast<double>(tp + fn) : 0.0;
    m.f1 = m.precision + m.recall > 0.0 ? 2.0 * m.precision * m.recall / (m.precision + m.recall) : 0.0;
    return m;
  }

  /// Micro-average accumulation.
  LinkMetrics& operator+=(const LinkMetrics& o) {
    *this = from_counts(true_positives + o.true_positives, false_positives + o.false_positives,
                        false_negatives + o.false_negatives);
    return *this;
  }
};

/// Compares predicted edges against gold as untyped (q, s) pairs.
inline LinkMetrics score_links(const LinkGraph& pred, const LinkSet& gold) {
  for (const auto& [q, s] : gold)
    if (q >= pred.n_question() || s >= pred.n_schema())
      throw ValidationError("gold link (" + std::to_string(q) + ", " + std::to_string(s) +
                            ") outside the predicted graph's " + std::to_string(pred.n_question()) + "x" +
                            std::to_string(pred.n_schema()) + " shape");
  LinkSet predicted = pred.pairs();
  std::size_t tp = 0;
  for (const auto& p : predicted) tp += gold.count(p);
  return LinkMetrics::from_counts(tp, predicted.size() - tp, gold.size() - tp);
}

inline LinkMetrics score_links(const LinkGraph& pred, const ProbeExample& example) {
  if (pred.n_question() != example.num_question() || pred.n_schema() != example.num_schema())
    throw ValidationError("link graph shape does not match example '" + example.example_id + "'");
  if (!example.gold_links) throw ValidationError("example '" + example.example_id + "' has no gold links");
  return score_links(pred, *example.gold_links);
}

}  // namespace schemaprobe
