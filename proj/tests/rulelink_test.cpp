#include <gtest/gtest.h>

#include <algorithm>
#include <memory>
#include <numeric>
#include <random>

#include "schemaprobe/rulelink.hpp"
#include "schemaprobe/synthetic.hpp"

namespace sp = schemaprobe;

namespace {

std::shared_ptr<const sp::Schema> schema_of(std::vector<std::vector<std::string>> tables,
                                            std::vector<std::pair<std::size_t, std::vector<std::string>>> columns) {
  return std::make_shared<const sp::Schema>(sp::Schema::from_names("db", tables, columns));
}

}  // namespace

TEST(LexicalLink, SingleTokenExactMatch) {
  auto schema = schema_of({{"cars", "data"}}, {{0, {"cylinders"}}, {0, {"mpg"}}});
  sp::ProbeExample ex("e", {"how", "many", "cylinders"}, schema);
  auto g = sp::lexical_link(ex);
  EXPECT_EQ(g.size(), 1u);
  EXPECT_TRUE(g.contains(2, 1, sp::LinkTag::ExactMatch));
}

TEST(LexicalLink, SynonymIsNotLinked) {
  auto schema = schema_of({{"pets"}}, {{0, {"pettype"}}});
  sp::ProbeExample ex("e", {"each", "category"}, schema);
  EXPECT_TRUE(sp::lexical_link(ex).empty());
}

TEST(LexicalLink, BigramExactVersusPartial) {
  auto schema = schema_of({{"concert"}}, {{0, {"concert", "id"}}, {0, {"concert", "id", "name"}}});
  sp::ProbeExample ex("e", {"the", "concert", "id"}, schema);
  auto g = sp::lexical_link(ex);
  EXPECT_TRUE(g.contains(1, 1, sp::LinkTag::ExactMatch));
  EXPECT_TRUE(g.contains(2, 1, sp::LinkTag::ExactMatch));
  EXPECT_TRUE(g.contains(1, 2, sp::LinkTag::PartialMatch));
  EXPECT_TRUE(g.contains(2, 2, sp::LinkTag::PartialMatch));
  // "concert" alone is the table's full name
  EXPECT_TRUE(g.contains(1, 0, sp::LinkTag::ExactMatch));
  EXPECT_EQ(g.size(), 5u);
}

TEST(LexicalLink, LongestFirstCoversPositionsOnce) {
  auto schema = schema_of({{"t"}}, {{0, {"pet", "age"}}});
  sp::ProbeExample ex("e", {"pet", "age", "pet"}, schema);
  auto g = sp::lexical_link(ex);
  EXPECT_TRUE(g.contains(0, 1, sp::LinkTag::ExactMatch));
  EXPECT_TRUE(g.contains(1, 1, sp::LinkTag::ExactMatch));
  EXPECT_FALSE(g.contains(0, 1, sp::LinkTag::PartialMatch));
  EXPECT_TRUE(g.contains(2, 1, sp::LinkTag::PartialMatch));
  EXPECT_EQ(g.size(), 3u);
}

TEST(LexicalLink, CaseFolding) {
  auto schema = schema_of({{"singer"}}, {{0, {"name"}}});
  sp::ProbeExample ex("e", {"Singer", "NAME"}, schema);
  EXPECT_EQ(sp::lexical_link(ex).size(), 2u);
  EXPECT_TRUE(sp::lexical_link(ex, {5, false}).empty());
}

TEST(LexicalLink, MaxNgramLimitsMatches) {
  auto schema = schema_of({{"t"}}, {{0, {"a", "b", "c"}}});
  sp::ProbeExample ex("e", {"a", "b", "c"}, schema);
  auto full = sp::lexical_link(ex, {3, true});
  EXPECT_EQ(full.size(), 3u);
  for (const auto& e : full.edges()) EXPECT_EQ(e.tag, sp::LinkTag::ExactMatch);
  auto capped = sp::lexical_link(ex, {2, true});
  for (const auto& e : capped.edges()) EXPECT_EQ(e.tag, sp::LinkTag::PartialMatch);
  EXPECT_THROW(sp::lexical_link(ex, {0, true}), sp::ValidationError);
}

TEST(LexicalLink, NoProbeEdges) {
  auto corpus = sp::synthetic::exact_match_suite(20, 4);
  for (const auto& ex : corpus.examples) {
    auto g = sp::lexical_link(ex);
    for (const auto& e : g.edges()) EXPECT_NE(e.tag, sp::LinkTag::ProbeLink);
  }
}

// Every ExactMatch run of question positions re-joins to the schema item's name.
TEST(LexicalLink, ExactMatchesSpellTheItemName) {
  auto corpus = sp::synthetic::exact_match_suite(40, 8);
  for (const auto& ex : corpus.examples) {
    auto g = sp::lexical_link(ex);
    for (std::size_t j = 0; j < ex.num_schema(); ++j) {
      std::vector<std::string> covered;
      for (const auto& e : g.edges())
        if (e.s == j && e.tag == sp::LinkTag::ExactMatch) covered.push_back(ex.question_tokens[e.q]);
      if (covered.empty()) continue;
      const auto& name = ex.schema->item(j).name_tokens;
      ASSERT_EQ(covered.size() % name.size(), 0u);
      for (std::size_t k = 0; k < covered.size(); k += name.size())
        EXPECT_EQ(sp::join_tokens({covered.begin() + k, covered.begin() + k + name.size()}), sp::join_tokens(name));
    }
  }
}

TEST(LexicalLink, InsensitiveToItemOrder) {
  std::mt19937_64 rng(3);
  auto corpus = sp::synthetic::exact_match_suite(25, 13);
  for (const auto& ex : corpus.examples) {
    const auto& s = *ex.schema;
    std::size_t nt = s.num_tables(), nc = s.num_columns();
    std::vector<std::size_t> tperm(nt), cperm(nc);
    std::iota(tperm.begin(), tperm.end(), 0);
    std::iota(cperm.begin(), cperm.end(), 0);
    std::shuffle(tperm.begin(), tperm.end(), rng);
    std::shuffle(cperm.begin(), cperm.end(), rng);
    // new position of old table t is inverse(tperm)[t]
    std::vector<std::size_t> tnew(nt), remap(s.size());
    for (std::size_t k = 0; k < nt; ++k) tnew[tperm[k]] = k;
    std::vector<std::vector<std::string>> tables;
    for (std::size_t k = 0; k < nt; ++k) tables.push_back(s.item(tperm[k]).name_tokens);
    std::vector<std::pair<std::size_t, std::vector<std::string>>> columns;
    for (std::size_t k = 0; k < nc; ++k) {
      const auto& col = s.item(nt + cperm[k]);
      columns.emplace_back(tnew[*col.parent_table], col.name_tokens);
    }
    for (std::size_t k = 0; k < nt; ++k) remap[tperm[k]] = k;
    for (std::size_t k = 0; k < nc; ++k) remap[nt + cperm[k]] = nt + k;

    sp::ProbeExample permuted("p", ex.question_tokens, schema_of(tables, columns));
    auto original = sp::lexical_link(ex);
    sp::LinkGraph expected(ex.num_question(), ex.num_schema());
    for (const auto& e : original.edges()) expected.add(e.q, remap[e.s], e.tag);
    EXPECT_EQ(sp::lexical_link(permuted), expected);
    EXPECT_EQ(sp::lexical_link(ex), original);
  }
}

TEST(MergeGraphs, UnionSemantics) {
  sp::LinkGraph a(3, 4), b(3, 4);
  a.add(0, 1, sp::LinkTag::ProbeLink);
  b.add(2, 3, sp::LinkTag::ExactMatch);
  EXPECT_EQ(sp::merge_graphs(a, b).size(), 2u);

  sp::LinkGraph c(3, 4), d(3, 4);
  c.add(1, 1, sp::LinkTag::ExactMatch);
  d.add(1, 1, sp::LinkTag::ExactMatch);
  EXPECT_EQ(sp::merge_graphs(c, d).size(), 1u);

  sp::LinkGraph e(3, 4), f(3, 4);
  e.add(1, 2, sp::LinkTag::ProbeLink);
  f.add(1, 2, sp::LinkTag::PartialMatch);
  auto m = sp::merge_graphs(e, f);
  EXPECT_TRUE(m.contains(1, 2, sp::LinkTag::ProbeLink));
  EXPECT_TRUE(m.contains(1, 2, sp::LinkTag::PartialMatch));

  EXPECT_THROW(sp::merge_graphs(sp::LinkGraph(3, 4), sp::LinkGraph(3, 5)), sp::ValidationError);
}
