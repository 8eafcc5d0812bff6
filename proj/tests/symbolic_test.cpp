#include <algorithm>
#include <cmath>
#include <set>

#include <gtest/gtest.h>

#include "autocf/error.hpp"
#include "autocf/evaluate.hpp"
#include "autocf/properties.hpp"
#include "autocf/ranker.hpp"
#include "autocf/rng.hpp"
#include "autocf/symbolic.hpp"
#include "test_support.hpp"

namespace autocf {
namespace {

using testing::make_table;
using namespace std::chrono;

const Date kToday = sys_days{2024y / May / 15};

Table projects_table(Rng& rng, std::size_t m) {
  static const std::vector<std::string> kStatus{"Open", "Closed", "Pending", "Closed", "On hold", ""};
  std::vector<std::vector<std::string>> rows;
  for (std::size_t r = 0; r < m; ++r) {
    const double cost = static_cast<double>(rng.below(100));
    rows.push_back({rng.pick(kStatus), format_number(cost), format_number(cost + static_cast<double>(rng.below(40)) - 20)});
  }
  return make_table({"Status", "Cost", "Budget"}, {CellType::Text, CellType::Numeric, CellType::Numeric}, rows);
}

// Tasks whose truth is one or two enumerated literals with a moderate highlight.
std::vector<TrainingTask> small_corpus(std::uint64_t seed, std::size_t n) {
  Rng rng(seed);
  std::vector<TrainingTask> tasks;
  while (tasks.size() < n) {
    TrainingTask t{projects_table(rng, 20), rng.below(2), {}, kToday};
    const auto props = extract_properties(t.table, t.target, kDefaultPropertyK, kToday);
    const auto preds = enumerate_predicates(props, t.table, t.target);
    Clause clause{Literal{rng.pick(preds), false}};
    if (rng.coin(0.3)) clause.push_back(Literal{rng.pick(preds), false});
    t.truth = Condition{{clause}};
    const auto mask = execute(t.truth, t.table, EvalContext{.today = kToday, .target = t.target});
    const double frac = static_cast<double>(mask.count()) / 20.0;
    if (frac < 0.1 || frac > 0.6) continue;
    tasks.push_back(std::move(t));
  }
  return tasks;
}

const RankerModel& test_model() {
  static const RankerModel model = [] {
    TrainOptions opts;
    opts.mlp.epochs = 30;
    return train_ranker(small_corpus(11, 40), opts);
  }();
  return model;
}

Table single(CellType type, const std::vector<std::string>& values) {
  std::vector<std::vector<std::string>> rows;
  for (const auto& v : values) rows.push_back({v});
  return make_table({"c"}, {type}, rows);
}

std::set<std::string> printed(const std::vector<Predicate>& preds) {
  std::set<std::string> out;
  for (const auto& p : preds) out.insert(print(p));
  return out;
}

std::set<std::string> printed(const std::vector<Candidate>& cands) {
  std::set<std::string> out;
  for (const auto& c : cands) out.insert(print(c.condition));
  return out;
}

// ---------------------------------------------------------------------------
// enumerate_predicates

TEST(EnumeratePredicates, OrgColumnPrefixAndSuffix) {
  Table t = single(CellType::Text, {"00C", "00D", "00E", "00C", "00D", "00C", "00E", "00D", "00C"});
  const auto props = extract_properties(t, 0, kDefaultPropertyK, kToday);
  const auto got = printed(enumerate_predicates(props, t, 0));
  EXPECT_TRUE(got.contains(R"(TextStartsWith([@c], "00C"))")) << ::testing::PrintToString(got);
  EXPECT_TRUE(got.contains(R"(TextEndsWith([@c], "D"))"));
  EXPECT_TRUE(got.contains(R"(TextEquals([@c], "00E"))"));
  EXPECT_TRUE(got.contains("Duplicates([@c])"));
}

TEST(EnumeratePredicates, NumericIncludesNinetiethPercentile) {
  std::vector<std::string> values;
  for (int i = 1; i <= 100; ++i) values.push_back(std::to_string(i));
  Table t = single(CellType::Numeric, values);
  const auto props = extract_properties(t, 0, kDefaultPropertyK, kToday);
  // Oracle: position 0.9 * 99 = 89.1 between 90 and 91.
  const double p90 = 90 + 0.1 * (91 - 90);
  ASSERT_NEAR(p90, 90.1, 1e-12);
  const auto preds = enumerate_predicates(props, t, 0);
  const bool found = std::any_of(preds.begin(), preds.end(), [&](const Predicate& p) {
    return p.kind == PredKind::Compare && p.op == CmpOp::Gt && p.lhs.kind() == NumExpr::Kind::Column &&
           p.rhs.kind() == NumExpr::Kind::Constant && std::abs(p.rhs.value() - p90) < 1e-9;
  });
  EXPECT_TRUE(found);
  EXPECT_TRUE(std::any_of(preds.begin(), preds.end(), [](const Predicate& p) { return p.kind == PredKind::Between; }));
}

TEST(EnumeratePredicates, BlanksOnlyWhenPresent) {
  Table none = single(CellType::Text, {"a", "b", "a"});
  auto preds = enumerate_predicates(extract_properties(none, 0, 5, kToday), none, 0);
  EXPECT_FALSE(printed(preds).contains("Blanks([@c])"));
  Table some = single(CellType::Text, {"a", "", "a"});
  preds = enumerate_predicates(extract_properties(some, 0, 5, kToday), some, 0);
  EXPECT_TRUE(printed(preds).contains("Blanks([@c])"));
}

TEST(EnumeratePredicates, DateWindowsAndYears) {
  Table t = single(CellType::Date, {"2024-05-14", "2023-01-02", "2024-06-01", "2024-05-20"});
  const auto got = printed(enumerate_predicates(extract_properties(t, 0, 5, kToday), t, 0));
  for (const char* s : {"InLastWeek([@c])", "InThisMonth([@c])", "IsToday([@c])", "YearEquals([@c], 2023)",
                        "YearEquals([@c], 2024)"})
    EXPECT_TRUE(got.contains(s)) << s;
}

TEST(EnumeratePredicates, AllTypeCheckOnRandomTables) {
  testing::Random r(5);
  for (int trial = 0; trial < 200; ++trial) {
    Table t = testing::random_table(r);
    for (std::size_t c = 0; c < t.n_cols(); ++c) {
      const auto preds = enumerate_predicates(extract_properties(t, c, 5, kToday), t, c);
      for (const auto& p : preds)
        EXPECT_NO_THROW(type_check(single(p), t, EvalContext{.today = kToday, .target = c})) << print(p);
    }
  }
}

TEST(EnumerateBoosted, BudgetMinusCost) {
  Rng rng(3);
  Table t = projects_table(rng, 10);
  const auto got = printed(enumerate_boosted_predicates({"budget", "cost", "1000"}, t, 0));
  EXPECT_TRUE(got.contains("[@Budget]-[@Cost]>1000")) << ::testing::PrintToString(got);
}

// ---------------------------------------------------------------------------
// Components

TEST(Component, OpenSlotBindsToTarget) {
  Component c{parse_condition("NOT(Blanks())"), Origin::Neural};
  Table t = single(CellType::Text, {"a", ""});
  auto bound = instantiate(c, t, 0);
  ASSERT_TRUE(bound);
  EXPECT_EQ(print(*bound), "NOT(Blanks([@c]))");
}

TEST(Component, IllTypedIsDropped) {
  Component c{parse_condition("TextEquals(\"a\")"), Origin::Neural};
  Table t = single(CellType::Numeric, {"1", "2"});
  EXPECT_FALSE(instantiate(c, t, 0));
}

// ---------------------------------------------------------------------------
// Scoring

TEST(ScoreNode, Deterministic) {
  Rng rng(4);
  Table t = projects_table(rng, 20);
  Condition c = parse_condition("TextEquals([@Status], \"Open\")");
  EXPECT_EQ(score_node(c, t, 0, test_model(), kToday), score_node(c, t, 0, test_model(), kToday));
}

TEST(NodeFeatures, TextEqualsArgumentLengthAndType) {
  Table t = single(CellType::Text, {"A", "B", "A"});
  Condition c = parse_condition("TextEquals(\"A\")");
  const auto ctx = make_feature_context(t, 0, kToday);
  const auto f = node_features(c, execute(c, t, EvalContext{.today = kToday, .target = 0}), ctx);
  EXPECT_EQ(f.argument_length, 1);
  EXPECT_EQ(f.rule_type, CellType::Text);
  EXPECT_EQ(f.rule_category, PredFamily::Text);
  EXPECT_NEAR(f.fraction_highlighted, 2.0 / 3.0, 1e-12);
  EXPECT_EQ(f.values.size(), feature_names().size());
}

TEST(NodeFeatures, AllFinite) {
  testing::Random r(8);
  for (int trial = 0; trial < 300; ++trial) {
    Table t = testing::random_table(r);
    Condition c = testing::random_condition(r);
    const auto ctx = make_feature_context(t, 0, kToday);
    const auto f = node_features(c, execute(c, t, EvalContext{.today = kToday, .target = 0}), ctx);
    for (double v : f.values) ASSERT_TRUE(std::isfinite(v)) << print(c);
  }
}

TEST(Boost, TenPercent) {
  EXPECT_DOUBLE_EQ(apply_boost(2.0, 0.10), 2.2);
  EXPECT_DOUBLE_EQ(apply_boost(0.0, 0.10), 0.0);
  EXPECT_GT(apply_boost(-1.0, 0.10), -1.0);
}

// ---------------------------------------------------------------------------
// Beam search

struct BeamFixture : ::testing::Test {
  void SetUp() override {
    Rng rng(9);
    table = projects_table(rng, 15);
    const auto props = extract_properties(table, 0, 3, kToday);
    preds = enumerate_predicates(props, table, 0);
  }
  std::vector<Candidate> run(std::size_t width, std::size_t depth, const std::set<std::string>& terms = {},
                             std::size_t max_candidates = kUnbounded) {
    return beam_synthesize(preds, {}, table, 0, BeamConfig{width, depth, 0.10, max_candidates}, test_model(), terms,
                           kToday);
  }
  Table table;
  std::vector<Predicate> preds;
};

TEST_F(BeamFixture, DepthOneUnboundedIsAllSingles) {
  std::set<std::string> expected;
  for (const auto& p : preds) {
    expected.insert(print(normalize(single(p))));
    if (negatable(p)) expected.insert(print(normalize(single(p, true))));
  }
  EXPECT_EQ(printed(run(kUnbounded, 1)), expected);
}

TEST_F(BeamFixture, MonotoneCompleteness) {
  const auto d1 = printed(run(kUnbounded, 1));
  const auto d2 = printed(run(kUnbounded, 2));
  EXPECT_GT(d2.size(), d1.size());
  EXPECT_TRUE(std::includes(d2.begin(), d2.end(), d1.begin(), d1.end()));
}

TEST_F(BeamFixture, BoostInvariantCandidateSet) {
  const auto plain = printed(run(kUnbounded, 2));
  const auto boosted = printed(run(kUnbounded, 2, {"open", "closed"}));
  EXPECT_EQ(plain, boosted);
}

TEST_F(BeamFixture, BoundsTypeCheckAndNoDuplicates) {
  const auto cands = run(10, 5, {}, 500);
  std::set<std::string> seen;
  for (const auto& c : cands) {
    EXPECT_TRUE(seen.insert(print(c.condition)).second) << print(c.condition);
    EXPECT_LE(c.condition.clauses.size(), kMaxClauses);
    for (const auto& clause : c.condition.clauses) EXPECT_LE(clause.size(), kMaxLiteralsPerClause);
    EXPECT_NO_THROW(type_check(c.condition, table, EvalContext{.today = kToday, .target = 0}));
    EXPECT_EQ(c.condition, normalize(c.condition));
    EXPECT_EQ(c.mask, execute(c.condition, table, EvalContext{.today = kToday, .target = 0}));
  }
  for (std::size_t i = 1; i < cands.size(); ++i) EXPECT_GE(cands[i - 1].boosted_score, cands[i].boosted_score);
}

TEST_F(BeamFixture, BoostedNodesCarryTenPercent) {
  const auto cands = run(10, 2, {"open"});
  bool any = false;
  for (const auto& c : cands) {
    if (!c.boosted) {
      EXPECT_EQ(c.score, c.boosted_score);
      continue;
    }
    any = true;
    EXPECT_DOUBLE_EQ(c.boosted_score, c.score + 0.10 * std::abs(c.score));
  }
  EXPECT_TRUE(any);
}

TEST_F(BeamFixture, DeterministicAndTruncated) {
  const auto a = run(10, 3, {}, 20);
  const auto b = run(10, 3, {}, 20);
  ASSERT_EQ(a.size(), 20u);
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_EQ(print(a[i].condition), print(b[i].condition));
}

TEST_F(BeamFixture, EmptyPredicatesGiveEmptyResult) {
  preds.clear();
  EXPECT_TRUE(run(10, 3).empty());
}

TEST_F(BeamFixture, InvalidConfigRejected) {
  EXPECT_THROW(run(0, 3), Error);
  EXPECT_THROW(run(3, 0), Error);
}

TEST_F(BeamFixture, CrossColumnRuleFromBoostedTerms) {
  const std::set<std::string> terms{"budget", "cost", "0"};
  auto extra = enumerate_boosted_predicates(terms, table, 0);
  preds.insert(preds.end(), extra.begin(), extra.end());
  EXPECT_TRUE(printed(run(10, 2, terms)).contains("[@Budget]-[@Cost]>0"));
}

TEST_F(BeamFixture, NeuralComponentIsBoosted) {
  Component comp{parse_condition("NOT(Blanks())"), Origin::Neural};
  const auto cands =
      beam_synthesize(preds, {comp}, table, 0, BeamConfig{kUnbounded, 1, 0.1, kUnbounded}, test_model(), {}, kToday);
  const auto it = std::find_if(cands.begin(), cands.end(),
                               [](const Candidate& c) { return print(c.condition) == "NOT(Blanks([@Status]))"; });
  ASSERT_NE(it, cands.end());
  EXPECT_TRUE(it->neural);
  EXPECT_TRUE(it->boosted);
}

// ---------------------------------------------------------------------------
// Training

TEST(SubConditions, ClausesLiteralsAndPairs) {
  Condition c = parse_condition("(Blanks([@a]) AND Blanks([@b]) AND Blanks([@c])) OR Unique([@d])");
  std::set<std::string> got;
  for (const auto& s : sub_conditions(c)) got.insert(print(s));
  for (const char* s : {"Blanks([@a])", "Blanks([@b])", "Blanks([@c])", "Unique([@d])",
                        "Blanks([@a]) AND Blanks([@b])", "Blanks([@a]) AND Blanks([@b]) AND Blanks([@c])"})
    EXPECT_TRUE(got.contains(s)) << s;
  EXPECT_TRUE(got.contains(print(normalize(c))));
}

TEST(TrainRanker, DeterministicModelFile) {
  TrainOptions opts;
  opts.mlp.epochs = 5;
  const auto tasks = small_corpus(21, 20);
  EXPECT_EQ(train_ranker(tasks, opts).serialize(), train_ranker(tasks, opts).serialize());
}

TEST(TrainRanker, Refusals) {
  TrainOptions opts;
  EXPECT_THROW(train_ranker({}, opts), Error);
  opts.negatives_per_positive = 0;
  EXPECT_THROW(train_ranker(small_corpus(2, 5), opts), Error);
  opts.negatives_per_positive = 1;
  const TrainingTask tiny{single(CellType::Text, {"a", "b", "a", "c"}), 0, parse_condition("TextEquals(\"a\")"), kToday};
  try {
    train_ranker({tiny}, opts);
    FAIL() << "tiny corpus accepted";
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("100"), std::string::npos);
  }
}

TEST(TrainRanker, PositivesScoreAboveHalf) {
  const auto tasks = small_corpus(11, 40);
  TrainOptions opts;
  const TrainingSet set = build_training_set(tasks, opts);
  std::size_t pos = 0, above = 0;
  for (std::size_t i = 0; i < set.x.size(); ++i) {
    if (!set.y[i]) continue;
    ++pos;
    if (sigmoid(test_model().logit(set.x[i])) > 0.5) ++above;
  }
  ASSERT_GT(pos, 0u);
  EXPECT_GE(static_cast<double>(above) / static_cast<double>(pos), 0.8) << above << "/" << pos;
}

TEST(RankerModel, JsonRoundTripAndSchemaCheck) {
  const RankerModel& m = test_model();
  RankerModel back = RankerModel::from_json(nlohmann::json::parse(m.serialize()));
  EXPECT_EQ(back.serialize(), m.serialize());
  auto j = m.to_json();
  j["feature_schema"][0] = "bogus";
  EXPECT_THROW(RankerModel::from_json(j), InputError);
  j = m.to_json();
  j["schema_version"] = 99;
  EXPECT_THROW(RankerModel::from_json(j), InputError);
}

TEST(NiceConstants, RoundNeighbours) {
  const auto got = nice_constants(90.1);
  EXPECT_NE(std::find(got.begin(), got.end(), 90.0), got.end());
  EXPECT_EQ(std::find(got.begin(), got.end(), 90.1), got.end());
}

}  // namespace
}  // namespace autocf
