#pragma once

// Seeded synthetic corpora with known linking ground truth.
//
// Schema names come from one word pool, question words from disjoint pools, so the only way to
// recover a link is through the planted similarities (synonym suite) or by placing a schema
// item's full name inside the question (exact-match suite).

#include <algorithm>
#include <array>
#include <cstdint>
#include <map>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "schemaprobe/datamodel.hpp"
#include "schemaprobe/reference_encoder.hpp"

namespace schemaprobe::synthetic {

inline constexpr std::array<std::string_view, 48> kSchemaWords{
    "singer",  "concert", "stadium", "capacity", "age",      "country", "year",    "song",
    "album",   "pet",     "owner",   "weight",   "price",    "student", "course",  "grade",
    "teacher", "city",    "airport", "flight",   "airline",  "salary",  "employee", "department",
    "budget",  "address", "phone",   "email",    "movie",    "director", "rating", "genre",
    "car",     "maker",   "model",   "engine",   "horsepower", "cylinders", "battle", "ship",
    "museum",  "visitor", "ticket",  "hospital", "doctor",   "patient", "player",  "team"};

inline constexpr std::array<std::string_view, 36> kSynonymWords{
    "vocalist",   "gig",      "arena",   "seats",    "oldest",  "nation",  "annual", "track",
    "record",     "animal",   "keeper",  "heavy",    "costly",  "pupil",   "class",  "mark",
    "instructor", "town",     "hub",     "trip",     "carrier", "wage",    "worker", "division",
    "funding",    "location", "contact", "mail",     "film",    "filmmaker", "score", "category",
    "vehicle",    "producer", "type",    "power"};

inline constexpr std::array<std::string_view, 16> kFillerWords{
    "what", "is", "the", "of", "show", "all", "for", "each", "which", "how", "many", "list", "with", "and", "that", "are"};

struct Corpus {
  SchemaCatalog catalog;
  std::vector<ProbeExample> examples;
  std::vector<std::map<LinkPair, double>> planted;  // parallel to examples
};

namespace detail {

inline std::size_t uniform(hashing::Stream& rng, std::size_t lo, std::size_t hi) {
  return lo + static_cast<std::size_t>(rng.next_u64() % (hi - lo + 1));
}

template <std::size_t N>
std::vector<std::string> sample_words(hashing::Stream& rng, const std::array<std::string_view, N>& pool, std::size_t k) {
  std::vector<std::string> words(pool.begin(), pool.end());
  for (std::size_t i = 0; i < k; ++i) std::swap(words[i], words[uniform(rng, i, N - 1)]);
  words.resize(k);
  return words;
}

/// Schema of 1-3 tables and `total - tables` columns; every item name uses words no other item uses.
inline Schema random_schema(hashing::Stream& rng, const std::string& db_id, std::size_t total) {
  std::size_t tables = std::min<std::size_t>(uniform(rng, 1, 3), total - 1);
  std::size_t columns = total - tables;
  // Up to 3 items get two-word names.
  std::size_t two_word = std::min<std::size_t>(uniform(rng, 0, 3), kSchemaWords.size() - total);
  auto words = sample_words(rng, kSchemaWords, total + two_word);
  std::vector<std::vector<std::string>> names;
  std::size_t w = 0;
  for (std::size_t k = 0; k < total; ++k) {
    std::vector<std::string> name{words[w++]};
    if (k < two_word) name.push_back(words[w++]);
    names.push_back(std::move(name));
  }
  std::vector<std::vector<std::string>> table_names(names.begin(), names.begin() + static_cast<long>(tables));
  std::vector<std::pair<std::size_t, std::vector<std::string>>> column_names;
  for (std::size_t c = 0; c < columns; ++c) column_names.emplace_back(uniform(rng, 0, tables - 1), names[tables + c]);
  return Schema::from_names(db_id, table_names, column_names);
}

}  // namespace detail

/// Questions built only from synonym and filler words, with 1-4 planted links per example.
/// Planted similarities lie in [0.2, 1.0]; |Q| <= 12 and |S| <= 15.
inline Corpus synonym_suite(std::size_t count, std::uint64_t seed) {
  Corpus corpus;
  hashing::Stream rng(hashing::seeded(seed, "synonym-suite"));
  for (std::size_t e = 0; e < count; ++e) {
    std::string id = "syn_" + std::to_string(e);
    auto schema = std::make_shared<const Schema>(detail::random_schema(rng, "db_" + id, detail::uniform(rng, 3, 15)));
    corpus.catalog.emplace(schema->db_id(), schema);

    std::size_t nq = detail::uniform(rng, 3, 12);
    std::vector<std::string> question;
    for (std::size_t i = 0; i < nq; ++i) {
      bool filler = rng.next_unit() < 0.4;
      question.emplace_back(filler ? kFillerWords[detail::uniform(rng, 0, kFillerWords.size() - 1)]
                                   : kSynonymWords[detail::uniform(rng, 0, kSynonymWords.size() - 1)]);
    }

    std::size_t links = detail::uniform(rng, 1, 4);
    std::map<LinkPair, double> planted;
    while (planted.size() < links) {
      LinkPair p{detail::uniform(rng, 0, nq - 1), detail::uniform(rng, 0, schema->size() - 1)};
      planted.try_emplace(p, 0.2 + 0.8 * rng.next_unit());
    }
    LinkSet gold;
    for (const auto& [p, sim] : planted) gold.insert(p);
    corpus.examples.emplace_back(id, std::move(question), schema, std::move(gold));
    corpus.planted.push_back(std::move(planted));
  }
  return corpus;
}

/// Questions that spell out 1-3 schema item names verbatim between filler words. Gold links are
/// the covered question positions of each mentioned item; similarities are planted on the same pairs.
inline Corpus exact_match_suite(std::size_t count, std::uint64_t seed) {
  Corpus corpus;
  hashing::Stream rng(hashing::seeded(seed, "exact-match-suite"));
  for (std::size_t e = 0; e < count; ++e) {
    std::string id = "exact_" + std::to_string(e);
    auto schema = std::make_shared<const Schema>(detail::random_schema(rng, "db_" + id, detail::uniform(rng, 3, 15)));
    corpus.catalog.emplace(schema->db_id(), schema);

    std::size_t mentions = detail::uniform(rng, 1, 3);
    std::vector<std::size_t> items(schema->size());
    for (std::size_t j = 0; j < items.size(); ++j) items[j] = j;
    for (std::size_t k = 0; k < mentions; ++k) std::swap(items[k], items[detail::uniform(rng, k, items.size() - 1)]);
    items.resize(mentions);

    std::vector<std::string> question;
    LinkSet gold;
    std::map<LinkPair, double> planted;
    for (std::size_t j : items) {
      question.emplace_back(kFillerWords[detail::uniform(rng, 0, kFillerWords.size() - 1)]);
      for (const auto& tok : schema->item(j).name_tokens) {
        gold.insert({question.size(), j});
        planted[{question.size(), j}] = 0.2 + 0.8 * rng.next_unit();
        question.push_back(tok);
      }
    }
    question.emplace_back(kFillerWords[detail::uniform(rng, 0, kFillerWords.size() - 1)]);
    corpus.examples.emplace_back(id, std::move(question), schema, std::move(gold));
    corpus.planted.push_back(std::move(planted));
  }
  return corpus;
}

inline ReferenceEncoderSpec encoder_spec_for(const std::map<LinkPair, double>& planted, std::uint64_t seed,
                                             std::size_t dim = 16) {
  ReferenceEncoderSpec spec;
  spec.dim = dim;
  spec.seed = seed;
  spec.planted_similarity = planted;
  return spec;
}

}  // namespace schemaprobe::synthetic
