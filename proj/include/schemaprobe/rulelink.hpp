#pragma once

// Lexical schema linker: the string-matching baseline that graph-based text-to-SQL encoders
// use to build question/schema edges.

#include <algorithm>
#include <cctype>
#include <string>
#include <vector>

#include "schemaprobe/datamodel.hpp"
#include "schemaprobe/errors.hpp"

namespace schemaprobe {

struct MatchConfig {
  std::size_t max_ngram = 5;
  bool case_fold = true;

  void validate() const {
    if (max_ngram < 1) throw ValidationError("max_ngram must be >= 1");
  }
};

namespace detail {

inline bool contains_subsequence(const std::vector<std::string>& hay, const std::vector<std::string>& needle) {
  return std::search(hay.begin(), hay.end(), needle.begin(), needle.end()) != hay.end();
}

inline std::string fold(std::string s) {
  for (char& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

}  // namespace detail

/// Greedy longest-first n-gram matching, run independently per schema item. An n-gram equal to
/// the item's full name yields ExactMatch edges on every covered question position; an n-gram
/// equal to a strict contiguous part of the name yields PartialMatch edges. Positions matched once
/// are not reused for the same item.
inline LinkGraph lexical_link(const ProbeExample& example, const MatchConfig& config = {}) {
  config.validate();
  const std::size_t nq = example.num_question();
  LinkGraph graph(nq, example.num_schema());

  std::vector<std::string> question = example.question_tokens;
  if (config.case_fold)
    for (auto& t : question) t = detail::fold(std::move(t));

  for (std::size_t j = 0; j < example.num_schema(); ++j) {
    std::vector<std::string> name = example.schema->item(j).name_tokens;
    if (config.case_fold)
      for (auto& t : name) t = detail::fold(std::move(t));

    std::vector<bool> covered(nq, false);
    for (std::size_t n = std::min(config.max_ngram, nq); n >= 1; --n) {
      for (std::size_t start = 0; start + n <= nq; ++start) {
        if (std::any_of(covered.begin() + start, covered.begin() + start + n, [](bool c) { return c; })) continue;
        std::vector<std::string> gram(question.begin() + start, question.begin() + start + n);
        LinkTag tag;
        if (gram == name) {
          tag = LinkTag::ExactMatch;
        } else if (n < name.size() && detail::contains_subsequence(name, gram)) {
          tag = LinkTag::PartialMatch;
        } else {
          continue;
        }
        for (std::size_t k = start; k < start + n; ++k) {
          graph.add(k, j, tag);
          covered[k] = true;
        }
      }
    }
  }
  return graph;
}

/// Union of two edge sets over the same example; tags are kept side by side.
inline LinkGraph merge_graphs(const LinkGraph& a, const LinkGraph& b) {
  if (a.n_question() != b.n_question() || a.n_schema() != b.n_schema())
    throw ValidationError("cannot merge link graphs of shape " + std::to_string(a.n_question()) + "x" +
                          std::to_string(a.n_schema()) + " and " + std::to_string(b.n_question()) + "x" +
                          std::to_string(b.n_schema()));
  LinkGraph out = a;
  for (const auto& e : b.edges()) out.add(e.q, e.s, e.tag);
  return out;
}

}  // namespace schemaprobe
