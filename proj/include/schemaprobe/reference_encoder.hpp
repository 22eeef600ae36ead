#pragma once

// Deterministic stand-in for a masked language model with a known linking ground truth.
//
//   h_j = base(s_j) + sum_i sim(q_i, s_j) * ctx(q_i)
//
// ctx vectors are unit-norm, so dropping the masked word's term moves h_j by exactly
// sim(q_i, s_j) in Euclidean distance.

#include <atomic>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "schemaprobe/datamodel.hpp"
#include "schemaprobe/geometry.hpp"
#include "schemaprobe/probe.hpp"

namespace schemaprobe {

namespace hashing {

inline constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

inline constexpr std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xCBF29CE484222325ULL;
  for (char c : s) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001B3ULL;
  }
  return h;
}

inline constexpr std::uint64_t seeded(std::uint64_t seed, std::string_view key) {
  return splitmix64(seed ^ splitmix64(fnv1a(key)));
}

/// Counter-based stream of doubles in [-1, 1); each (seed, key) pair owns its own stream.
class Stream {
 public:
  explicit Stream(std::uint64_t state) : state_(state) {}
  std::uint64_t next_u64() { return splitmix64(state_ + 0x9E3779B97F4A7C15ULL * ++counter_); }
  double next_unit() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }  // [0, 1)
  double next_signed() { return 2.0 * next_unit() - 1.0; }

 private:
  std::uint64_t state_;
  std::uint64_t counter_ = 0;
};

}  // namespace hashing

struct ReferenceEncoderSpec {
  std::size_t dim = 16;
  std::uint64_t seed = 0;
  double base_norm = 0.25;  // Euclidean norm of every base embedding
  std::map<LinkPair, double> planted_similarity;
  bool f32_outputs = false;  // round outputs to binary32 so dumps are lossless

  void validate() const {
    if (dim == 0) throw ValidationError("reference encoder: zero dimension");
    if (!(base_norm > 0.0) || !std::isfinite(base_norm)) throw ValidationError("reference encoder: bad base norm");
    for (const auto& [pair, sim] : planted_similarity)
      if (!(sim >= 0.0 && sim <= 1.0))
        throw ValidationError("reference encoder: planted similarity " + std::to_string(sim) + " outside [0, 1]");
  }

  geometry::Vector base_embedding(std::string_view item_name) const {
    hashing::Stream rng(hashing::seeded(seed, "base:" + std::string(item_name)));
    geometry::Vector v(dim);
    for (double& x : v) x = rng.next_signed();
    double n = geometry::norm(v);
    for (double& x : v) x *= base_norm / n;
    return v;
  }

  geometry::Vector context_embedding(std::size_t q_index, std::string_view token) const {
    hashing::Stream rng(hashing::seeded(seed, "ctx:" + std::to_string(q_index) + ":" + std::string(token)));
    geometry::Vector v(dim);
    for (double& x : v) x = rng.next_signed();
    double n = geometry::norm(v);
    for (double& x : v) x /= n;
    return v;
  }
};

inline std::vector<geometry::Vector> reference_encode(const ReferenceEncoderSpec& spec, const InputLayout& layout,
                                                      std::optional<std::size_t> masked) {
  spec.validate();
  const std::size_t nq = layout.num_question();
  const std::size_t ns = layout.num_schema();
  if (masked && *masked >= nq)
    throw ValidationError("masked question index " + std::to_string(*masked) + " out of range for " +
                          std::to_string(nq) + " tokens");
  for (const auto& [pair, sim] : spec.planted_similarity)
    if (pair.first >= nq || pair.second >= ns)
      throw ValidationError("reference encoder: planted pair (" + std::to_string(pair.first) + ", " +
                            std::to_string(pair.second) + ") outside the layout");

  std::vector<geometry::Vector> out;
  out.reserve(ns);
  for (std::size_t j = 0; j < ns; ++j) {
    const auto& r = layout.schema_slots[j];
    std::string name;
    for (std::size_t k = r.begin; k < r.end; ++k) name += (k == r.begin ? "" : " ") + layout.tokens[k];
    out.push_back(spec.base_embedding(name));
  }
  for (const auto& [pair, sim] : spec.planted_similarity) {
    auto [i, j] = pair;
    if (masked && *masked == i) continue;
    auto ctx = spec.context_embedding(i, layout.tokens[layout.question_slots[i].begin]);
    for (std::size_t k = 0; k < spec.dim; ++k) out[j][k] += sim * ctx[k];
  }
  if (spec.f32_outputs)
    for (auto& v : out)
      for (double& x : v) x = static_cast<double>(static_cast<float>(x));
  return out;
}

/// Encoder adapter over a ReferenceEncoderSpec that counts its passes.
class ReferenceEncoder final : public Encoder {
 public:
  explicit ReferenceEncoder(ReferenceEncoderSpec spec) : spec_(std::move(spec)) { spec_.validate(); }

  std::vector<geometry::Vector> encode(const InputLayout& layout, std::optional<std::size_t> masked) const override {
    ++calls_;
    return reference_encode(spec_, layout, masked);
  }

  std::size_t calls() const noexcept { return calls_.load(); }
  const ReferenceEncoderSpec& spec() const noexcept { return spec_; }

 private:
  ReferenceEncoderSpec spec_;
  mutable std::atomic<std::size_t> calls_{0};
};

/// Plants a deterministic similarity in [0.3, 1.0] on every gold link of the example.
inline std::map<LinkPair, double> plant_from_gold(const ProbeExample& example, std::uint64_t seed) {
  std::map<LinkPair, double> planted;
  if (!example.gold_links) return planted;
  for (const auto& [q, s] : *example.gold_links) {
    hashing::Stream rng(hashing::seeded(seed, "sim:" + example.example_id + ":" + std::to_string(q) + ":" +
                                                  std::to_string(s)));
    planted[{q, s}] = 0.3 + 0.7 * rng.next_unit();
  }
  return planted;
}

}  // namespace schemaprobe
