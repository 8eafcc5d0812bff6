#include <algorithm>
#include <map>
#include <set>
#include <tuple>
#include <cstdint>

#include <gtest/gtest.h>

#include "autocf/exec_ranker.hpp"
#include "test_support.hpp"

namespace autocf {
namespace {

using testing::make_table;

ScoredCondition sc(const std::string& text, double score) { return {parse_condition(text), score}; }

PooledCandidate pc(const std::string& text, double score) {
  return PooledCandidate{normalize(parse_condition(text)), score, {Source::Symbolic}};
}

EquivalenceClass cls(std::vector<PooledCandidate> members, const std::string& bits) {
  std::vector<bool> b;
  for (char c : bits) b.push_back(c == '1');
  double sum = 0;
  for (const auto& m : members) sum += m.score;
  const double mean = sum / static_cast<double>(members.size());
  return EquivalenceClass{std::move(members), ExecutionVector::from_bits(b), mean};
}

TEST(Pool, MergeKeepsMaxAndSources) {
  const auto pool = pool_candidates({sc("Blanks([@a])", 1.0)}, {sc("Blanks([@a])", 1.4)}, {});
  ASSERT_EQ(pool.size(), 1u);
  EXPECT_DOUBLE_EQ(pool[0].score, 1.4);
  EXPECT_EQ(pool[0].sources, (std::set<Source>{Source::Symbolic, Source::Neural}));
}

TEST(Pool, EmptyAndDisjoint) {
  EXPECT_TRUE(pool_candidates({}, {}, {}).empty());
  const auto pool = pool_candidates({sc("Blanks([@a])", 1), sc("Blanks([@b])", 1), sc("Blanks([@c])", 1)},
                                    {sc("Unique([@a])", 1), sc("Unique([@b])", 1), sc("Unique([@c])", 1)},
                                    {sc("Duplicates([@a])", 1)});
  EXPECT_EQ(pool.size(), 7u);
}

TEST(Pool, MergesAcrossSurfaceForms) {
  const auto pool = pool_candidates({sc("1000<[@Budget]-[@Cost]", 0.5)}, {}, {sc("[@Budget]-[@Cost]>1000", 0.7)});
  ASSERT_EQ(pool.size(), 1u);
  EXPECT_EQ(pool[0].sources, (std::set<Source>{Source::Symbolic, Source::NeuroSymbolic}));
}

TEST(Cluster, LeadingDMatch) {
  Table t = make_table({"c"}, {CellType::Text}, {{"Dx"}, {"ab"}, {"Dd"}, {"q"}});
  const auto pool = pool_candidates({sc("TextContains(\"D\")", 1), sc("TextStartsWith(\"D\")", 2)}, {}, {});
  const auto c = cluster_by_execution(pool, t, EvalContext{.today = {}, .target = 0});
  ASSERT_EQ(c.classes.size(), 1u);
  EXPECT_EQ(c.classes[0].members.size(), 2u);
  EXPECT_DOUBLE_EQ(c.classes[0].cluster_score, 1.5);
  EXPECT_EQ(print(c.classes[0].members[0].condition), "TextStartsWith(\"D\")");
}

TEST(Cluster, DistinctVectorsAndMeanScore) {
  Table t = make_table({"c"}, {CellType::Text}, {{"a"}, {"b"}});
  const auto pool = pool_candidates(
      {sc("TextEquals(\"a\")", 2), sc("TextEquals(\"b\")", 1), sc("TextStartsWith(\"a\")", 4)}, {}, {});
  const auto c = cluster_by_execution(pool, t, EvalContext{.today = {}, .target = 0});
  ASSERT_EQ(c.classes.size(), 2u);
  EXPECT_DOUBLE_EQ(c.classes[0].cluster_score, 3);
  EXPECT_EQ(c.classes[0].vector.to_bitstring(), "10");
  EXPECT_EQ(c.classes[1].vector.to_bitstring(), "01");
}

TEST(Cluster, FailingCandidateDroppedWithWarning) {
  Table t = make_table({"c"}, {CellType::Text}, {{"a"}, {"b"}});
  const auto pool = pool_candidates({sc("TextEquals(\"a\")", 2), sc("Blanks([@nope])", 9)}, {}, {});
  const auto c = cluster_by_execution(pool, t, EvalContext{.today = {}, .target = 0});
  EXPECT_EQ(c.classes.size(), 1u);
  ASSERT_EQ(c.warnings.size(), 1u);
  EXPECT_NE(c.warnings[0].find("nope"), std::string::npos);
}

TEST(Cluster, TieBreakPopcountThenBits) {
  Table t = make_table({"c"}, {CellType::Text}, {{"a"}, {"b"}, {"b"}});
  const auto pool = pool_candidates({sc("TextEquals(\"a\")", 1), sc("TextEquals(\"b\")", 1), sc("Blanks()", 1)}, {}, {});
  const auto c = cluster_by_execution(pool, t, EvalContext{.today = {}, .target = 0});
  ASSERT_EQ(c.classes.size(), 3u);
  EXPECT_EQ(c.classes[0].vector.to_bitstring(), "011");
  EXPECT_EQ(c.classes[1].vector.to_bitstring(), "100");
  EXPECT_EQ(c.classes[2].vector.to_bitstring(), "000");
}

TEST(RoundRobin, HandSimulatedOrder) {
  const std::vector<EquivalenceClass> classes{cls({pc("Blanks([@a1])", 5), pc("Blanks([@a2])", 4)}, "10"),
                                              cls({pc("Blanks([@b1])", 3), pc("Blanks([@b2])", 2)}, "01")};
  std::vector<std::string> got;
  for (const auto& s : rank_round_robin(classes, 4)) got.push_back(print(s.condition));
  EXPECT_EQ(got, (std::vector<std::string>{"Blanks([@a1])", "Blanks([@b1])", "Blanks([@a2])", "Blanks([@b2])"}));
  const auto one = rank_round_robin(classes, 1);
  ASSERT_EQ(one.size(), 1u);
  EXPECT_EQ(print(one[0].condition), "Blanks([@a1])");
}

TEST(RoundRobin, Exhaustion) {
  const std::vector<EquivalenceClass> classes{cls({pc("Blanks([@a])", 3)}, "100"), cls({pc("Blanks([@b])", 2)}, "010"),
                                              cls({pc("Blanks([@c])", 1)}, "001")};
  EXPECT_EQ(rank_round_robin(classes, 5).size(), 3u);
  EXPECT_TRUE(rank_round_robin({}, 5).empty());
}

// Oracle: order every member by (its rank within the class, class index).
std::vector<std::string> round_robin_oracle(const std::vector<EquivalenceClass>& classes, std::size_t k) {
  std::vector<std::tuple<std::size_t, std::size_t, std::string>> all;
  for (std::size_t c = 0; c < classes.size(); ++c)
    for (std::size_t i = 0; i < classes[c].members.size(); ++i)
      all.emplace_back(i, c, print(classes[c].members[i].condition));
  std::sort(all.begin(), all.end());
  std::vector<std::string> out;
  for (std::size_t i = 0; i < std::min(k, all.size()); ++i) out.push_back(std::get<2>(all[i]));
  return out;
}

TEST(ExecRankerProperties, RandomPools) {
  testing::Random rng(23);
  for (int trial = 0; trial < 500; ++trial) {
    Table t = testing::random_table(rng);
    const EvalContext ctx{.today = {}, .target = 0};
    std::vector<ScoredCondition> a, b;
    const std::size_t n = 1 + rng.below(12);
    for (std::size_t i = 0; i < n; ++i)
      (rng.coin() ? a : b).push_back({testing::random_condition(rng, 2, 2), static_cast<double>(rng.below(7))});
    const auto pool = pool_candidates(a, b, {});
    const auto clustering = cluster_by_execution(pool, t, ctx);

    // partition: each pooled condition in exactly one class, vectors distinct, members execute to the vector
    std::size_t members = 0;
    std::set<std::string> vectors;
    for (const auto& c : clustering.classes) {
      ASSERT_FALSE(c.members.empty());
      EXPECT_TRUE(vectors.insert(c.vector.to_bitstring()).second);
      double sum = 0;
      for (const auto& m : c.members) {
        EXPECT_EQ(execute(m.condition, t, ctx), c.vector);
        sum += m.score;
      }
      EXPECT_NEAR(c.cluster_score, sum / static_cast<double>(c.members.size()), 1e-12);
      members += c.members.size();
    }
    EXPECT_EQ(members + clustering.warnings.size(), pool.size());

    for (std::size_t k = 1; k <= pool.size() + 1; ++k) {
      const auto ranked = rank_round_robin(clustering.classes, k);
      std::vector<std::string> got;
      for (const auto& s : ranked) got.push_back(print(s.condition));
      EXPECT_EQ(got, round_robin_oracle(clustering.classes, k));
      // diversity
      std::set<std::string> prefix;
      for (std::size_t i = 0; i < std::min(k, clustering.classes.size()); ++i)
        EXPECT_TRUE(prefix.insert(ranked[i].vector.to_bitstring()).second);
      // no duplicates
      EXPECT_EQ(std::set<std::string>(got.begin(), got.end()).size(), got.size());
    }

    // determinism and prefix stability when a strictly worse class is appended
    const auto again = cluster_by_execution(pool, t, ctx);
    const auto r1 = rank_round_robin(clustering.classes, 3);
    const auto r2 = rank_round_robin(again.classes, 3);
    ASSERT_EQ(r1.size(), r2.size());
    for (std::size_t i = 0; i < r1.size(); ++i) EXPECT_EQ(r1[i].condition, r2[i].condition);
    auto extended = clustering.classes;
    extended.push_back(cls({pc("IsNA([@zz])", -100)}, std::string(t.n_rows(), '0')));
    const auto full = rank_round_robin(clustering.classes, SIZE_MAX);
    const auto ext = rank_round_robin(extended, full.size());
    for (std::size_t i = 0; i < std::min(full.size(), clustering.classes.size()); ++i)
      EXPECT_EQ(full[i].condition, ext[i].condition);
  }
}

}  // namespace
}  // namespace autocf
