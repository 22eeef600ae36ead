#pragma once

// Perturbed-masking probe: encode the question/schema concatenation once as-is and once per
// masked question word, and score each (question word, schema item) pair by how far the schema
// item's vector moves.

#include <algorithm>
#include <cmath>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "schemaprobe/datamodel.hpp"
#include "schemaprobe/errors.hpp"
#include "schemaprobe/geometry.hpp"

namespace schemaprobe {

inline constexpr std::string_view kStartMarker = "<s>";
inline constexpr std::string_view kSeparator = "</s>";

struct SlotRange {
  std::size_t begin = 0;
  std::size_t end = 0;  // exclusive
  std::size_t size() const noexcept { return end - begin; }
  bool operator==(const SlotRange&) const = default;
};

enum class SegmentKind { StartMarker, Separator, QuestionToken, SchemaItem };

struct Segment {
  SegmentKind kind;
  std::size_t index = 0;  // question or schema index; 0 for delimiters
  SlotRange slots;
};

/// Flat encoder input:  <s> q_1 ... q_n </s> s_1 </s> s_2 ... </s> s_m
///
/// Question words take one slot each; a schema item takes one slot per name token.
struct InputLayout {
  std::vector<Segment> segments;
  std::vector<std::string> tokens;
  std::vector<SlotRange> question_slots;
  std::vector<SlotRange> schema_slots;

  std::size_t num_question() const noexcept { return question_slots.size(); }
  std::size_t num_schema() const noexcept { return schema_slots.size(); }

  std::size_t delimiter_count() const noexcept {
    return static_cast<std::size_t>(std::count_if(segments.begin(), segments.end(), [](const Segment& s) {
      return s.kind == SegmentKind::StartMarker || s.kind == SegmentKind::Separator;
    }));
  }
};

inline InputLayout build_input_layout(const ProbeExample& example) {
  example.validate();
  InputLayout layout;
  auto push = [&](SegmentKind kind, std::size_t index, const std::vector<std::string>& toks) {
    SlotRange r{layout.tokens.size(), layout.tokens.size() + toks.size()};
    layout.tokens.insert(layout.tokens.end(), toks.begin(), toks.end());
    layout.segments.push_back({kind, index, r});
    return r;
  };
  const std::vector<std::string> start{std::string(kStartMarker)};
  const std::vector<std::string> sep{std::string(kSeparator)};

  push(SegmentKind::StartMarker, 0, start);
  for (std::size_t i = 0; i < example.num_question(); ++i)
    layout.question_slots.push_back(push(SegmentKind::QuestionToken, i, {example.question_tokens[i]}));
  for (std::size_t j = 0; j < example.num_schema(); ++j) {
    push(SegmentKind::Separator, 0, sep);
    layout.schema_slots.push_back(push(SegmentKind::SchemaItem, j, example.schema->item(j).name_tokens));
  }
  return layout;
}

/// Baseline schema vectors plus one masked copy per question word.
struct EmbeddingSet {
  std::string example_id;
  std::size_t dim = 0;
  std::size_t num_question = 0;
  std::size_t num_schema = 0;
  std::vector<double> baseline;  // num_schema * dim
  std::vector<double> masked;    // num_question * num_schema * dim, question-major

  std::span<const double> baseline_vec(std::size_t j) const {
    return std::span<const double>(baseline).subspan(j * dim, dim);
  }
  std::span<const double> masked_vec(std::size_t i, std::size_t j) const {
    return std::span<const double>(masked).subspan((i * num_schema + j) * dim, dim);
  }

  void validate() const {
    auto ctx = "embedding set '" + example_id + "'";
    if (dim == 0) throw ValidationError(ctx + ": zero dimension");
    if (baseline.size() != num_schema * dim) throw ValidationError(ctx + ": baseline size mismatch");
    if (masked.size() != num_question * num_schema * dim) throw ValidationError(ctx + ": masked size mismatch");
    for (std::size_t k = 0; k < baseline.size(); ++k)
      if (!std::isfinite(baseline[k]))
        throw ValidationError(ctx + ": non-finite baseline value for schema item " + std::to_string(k / dim));
    for (std::size_t k = 0; k < masked.size(); ++k)
      if (!std::isfinite(masked[k])) {
        std::size_t pair = k / dim;
        throw ValidationError(ctx + ": non-finite masked value at (" + std::to_string(pair / num_schema) + ", " +
                              std::to_string(pair % num_schema) + ")");
      }
  }

  bool operator==(const EmbeddingSet&) const = default;
};

/// Produces one vector per schema item for a layout, optionally with one question word masked.
/// Implementations must be deterministic.
class Encoder {
 public:
  virtual ~Encoder() = default;
  virtual std::vector<geometry::Vector> encode(const InputLayout& layout,
                                               std::optional<std::size_t> masked_question) const = 0;
};

enum class Metric { Euclidean, Poincare };

inline std::string_view to_string(Metric m) { return m == Metric::Euclidean ? "euclidean" : "poincare"; }

inline Metric metric_from_string(std::string_view s) {
  if (s == "euclidean") return Metric::Euclidean;
  if (s == "poincare") return Metric::Poincare;
  throw ValidationError("unknown metric '" + std::string(s) + "'");
}

/// Distance between a masked and a baseline schema vector. Poincare projects both through the
/// exponential map at the origin first.
inline double probe_score(std::span<const double> masked, std::span<const double> baseline, Metric metric) {
  if (metric == Metric::Euclidean) return geometry::euclidean_distance(masked, baseline);
  geometry::require_same_dim(masked, baseline);
  auto a = geometry::exp_map_origin(geometry::TangentVector({masked.begin(), masked.end()}));
  auto b = geometry::exp_map_origin(geometry::TangentVector({baseline.begin(), baseline.end()}));
  return geometry::poincare_distance(a, b);
}

/// Runs 1 + |Q| encoder passes and stores the resulting schema vectors.
inline EmbeddingSet collect_embeddings(const ProbeExample& example, const Encoder& encoder) {
  InputLayout layout = build_input_layout(example);
  EmbeddingSet set;
  set.example_id = example.example_id;
  set.num_question = example.num_question();
  set.num_schema = example.num_schema();

  auto append = [&](std::vector<double>& dst, const std::vector<geometry::Vector>& vecs, const std::string& pass) {
    if (vecs.size() != set.num_schema)
      throw ValidationError("encoder returned " + std::to_string(vecs.size()) + " schema vectors on " + pass +
                            ", expected " + std::to_string(set.num_schema));
    for (const auto& v : vecs) {
      if (set.dim == 0) set.dim = v.size();
      if (v.size() != set.dim || v.empty())
        throw ValidationError("encoder dimension mismatch on " + pass + ": got " + std::to_string(v.size()) +
                              ", expected " + std::to_string(set.dim));
      dst.insert(dst.end(), v.begin(), v.end());
    }
  };

  append(set.baseline, encoder.encode(layout, std::nullopt), "baseline pass");
  set.masked.reserve(set.num_question * set.num_schema * set.dim);
  for (std::size_t i = 0; i < set.num_question; ++i)
    append(set.masked, encoder.encode(layout, i), "masked pass " + std::to_string(i));
  set.validate();
  return set;
}

/// Relation matrix from precomputed vectors. When `example` is given, the dump shape must match it.
inline RelationMatrix materialize_from_dump(const EmbeddingSet& dump, Metric metric,
                                            const ProbeExample* example = nullptr) {
  dump.validate();
  if (example && (example->num_question() != dump.num_question || example->num_schema() != dump.num_schema))
    throw ValidationError("dump '" + dump.example_id + "' has shape " + std::to_string(dump.num_question) + "x" +
                          std::to_string(dump.num_schema) + " but example '" + example->example_id + "' is " +
                          std::to_string(example->num_question()) + "x" + std::to_string(example->num_schema()));
  std::vector<double> values(dump.num_question * dump.num_schema);
  for (std::size_t i = 0; i < dump.num_question; ++i)
    for (std::size_t j = 0; j < dump.num_schema; ++j)
      values[i * dump.num_schema + j] = probe_score(dump.masked_vec(i, j), dump.baseline_vec(j), metric);
  return RelationMatrix(dump.num_question, dump.num_schema, std::move(values));
}

inline RelationMatrix probe_example(const ProbeExample& example, const Encoder& encoder, Metric metric) {
  return materialize_from_dump(collect_embeddings(example, encoder), metric, &example);
}

/// Min-max normalization over the whole matrix; a constant matrix maps to zeros.
inline RelationMatrix normalize_minmax(const RelationMatrix& x) {
  const auto& v = x.values();
  std::vector<double> out(v.size(), 0.0);
  if (!v.empty()) {
    auto [lo, hi] = std::minmax_element(v.begin(), v.end());
    double min = *lo;
    double range = *hi - *lo;
    if (range > 0.0)
      for (std::size_t k = 0; k < v.size(); ++k) out[k] = std::clamp((v[k] - min) / range, 0.0, 1.0);
  }
  return RelationMatrix(x.rows(), x.cols(), std::move(out), true);
}

/// ProbeLink edge for every entry >= tau.
inline LinkGraph threshold_adjacency(const RelationMatrix& normalized, double tau) {
  if (!normalized.normalized()) throw ValidationError("threshold_adjacency needs a normalized matrix");
  if (!(tau >= 0.0 && tau <= 1.0)) throw ValidationError("tau " + std::to_string(tau) + " outside [0, 1]");
  LinkGraph g(normalized.rows(), normalized.cols());
  for (std::size_t i = 0; i < normalized.rows(); ++i)
    for (std::size_t j = 0; j < normalized.cols(); ++j)
      if (normalized(i, j) >= tau) g.add(i, j, LinkTag::ProbeLink);
  return g;
}

}  // namespace schemaprobe
