#include <algorithm>
#include <functional>
#include <map>

#include <gtest/gtest.h>

#include "autocf/eval.hpp"
#include "autocf/evaluate.hpp"
#include "autocf/synthetic.hpp"
#include "test_support.hpp"

namespace autocf {
namespace {

using testing::make_table;

const EvalContext kCtx{.today = {}, .target = 0};

Format fill(const char* hex) {
  Format f;
  f.fill = parse_hex(hex);
  return f;
}

TEST(MatchConditions, SwappedConjunctsAreExact) {
  Table t = make_table({"c"}, {CellType::Text}, {{"A"}, {"B"}});
  const auto m = match_conditions(parse_condition("TextEquals(\"A\") AND TextEquals(\"B\")"),
                                  parse_condition("TextEquals(\"B\") AND TextEquals(\"A\")"), t, kCtx);
  EXPECT_TRUE(m.exact);
  EXPECT_TRUE(m.sketch);
  EXPECT_TRUE(m.execution);
}

TEST(MatchConditions, LeadingDIsExecutionOnly) {
  Table t = make_table({"c"}, {CellType::Text}, {{"Dx"}, {"ab"}, {"Dd"}});
  const auto m = match_conditions(parse_condition("TextStartsWith(\"D\")"), parse_condition("TextContains(\"D\")"), t, kCtx);
  EXPECT_FALSE(m.exact);
  EXPECT_FALSE(m.sketch);
  EXPECT_TRUE(m.execution);
}

TEST(MatchConditions, SketchIgnoresConstants) {
  Table t = make_table({"n"}, {CellType::Numeric}, {{"1"}, {"5"}});
  const auto m = match_conditions(parse_condition("[@n]>3"), parse_condition("[@n]>4"), t, kCtx);
  EXPECT_FALSE(m.exact);
  EXPECT_TRUE(m.sketch);
  EXPECT_TRUE(m.execution);
}

TEST(MatchConditions, ExecutionFailureIsFalseWithWarning) {
  Table t = make_table({"n"}, {CellType::Numeric}, {{"1"}});
  std::vector<std::string> warnings;
  const auto m = match_conditions(parse_condition("Blanks([@missing])"), parse_condition("Blanks([@n])"), t, kCtx, &warnings);
  EXPECT_FALSE(m.execution);
  EXPECT_EQ(warnings.size(), 1u);
}

TEST(MatchFormats, NearbyRedsMatch) {
  const auto m = match_formats(fill("#FF0000"), fill("#FF0011"));
  EXPECT_TRUE(m.color);
  EXPECT_TRUE(m.property);
}

TEST(MatchFormats, BoldAndItalicShareFontStyle) {
  Format bold, italic;
  bold.bold = true;
  italic.italic = true;
  const auto m = match_formats(bold, italic);
  EXPECT_TRUE(m.color);  // no colours to compare
  EXPECT_TRUE(m.property);
}

TEST(MatchFormats, DifferentIdentifiersAndColours) {
  Format font;
  font.font = parse_hex("#FF0000");
  EXPECT_FALSE(match_formats(fill("#FF0000"), font).property);
  EXPECT_FALSE(match_formats(font, fill("#FF0000")).color);
  EXPECT_FALSE(match_formats(fill("#00FF00"), fill("#FF0000")).color);
  const Format f = fill("#90EE90");
  EXPECT_TRUE(match_formats(f, f).color);
  EXPECT_TRUE(match_formats(f, f).property);
}

TEST(MatchResult, EndToEndNeedsExecutionAndColour) {
  EXPECT_TRUE(combine({false, false, true}, {true, false}).end_to_end);
  EXPECT_FALSE(combine({true, true, false}, {true, true}).end_to_end);
  EXPECT_FALSE(combine({true, true, true}, {false, true}).end_to_end);
}

TEST(Diversity, Examples) {
  const Condition a = parse_condition("[@n]>3");
  const ExecutionVector m1 = ExecutionVector::from_bits({true, true, false, false});
  const ExecutionVector m2 = ExecutionVector::from_bits({false, false, true, true});
  const auto dup = diversity({a, a}, {m1, m1}, bag_of_tokens_embedder());
  ASSERT_TRUE(dup);
  EXPECT_EQ(dup->edit_distance, 0);
  EXPECT_EQ(dup->hamming, 0);
  EXPECT_NEAR(dup->embedding_similarity, 1, 1e-12);

  const auto far = diversity({a, a}, {m1, m2}, bag_of_tokens_embedder());
  EXPECT_EQ(far->hamming, 1.0);

  // [@n] > 3 and [@n] > 4 differ in one token
  const auto one = diversity({a, parse_condition("[@n]>4")}, {m1, m1}, bag_of_tokens_embedder());
  EXPECT_EQ(one->edit_distance, 1);
  EXPECT_FALSE(diversity({a}, {m1}, bag_of_tokens_embedder()));
  EXPECT_FALSE(diversity({}, {}, bag_of_tokens_embedder()));
}

TEST(Coverage, UnionOfMasks) {
  const ExecutionVector a = ExecutionVector::from_bits({true, false, true, false});
  EXPECT_EQ(coverage({a, ~a}), 1.0);
  EXPECT_EQ(coverage({a}), 0.5);
  EXPECT_EQ(coverage({}), 0);
}

TaskReport report_with_match_at(std::size_t rank, std::size_t n) {
  TaskReport t;
  t.n_suggestions = n;
  t.matches.resize(n);
  if (rank < n) t.matches[rank].execution = true;
  return t;
}

TEST(SuiteReport, TopKSemantics) {
  SuiteReport r;
  r.ks = {1, 3, 5};
  r.tasks.push_back(report_with_match_at(2, 5));
  EXPECT_EQ(r.match_rate(&MatchResult::execution, 1), 0);
  EXPECT_EQ(r.match_rate(&MatchResult::execution, 3), 1);
  EXPECT_EQ(r.match_rate(&MatchResult::execution, 5), 1);
  r.tasks.push_back(report_with_match_at(9, 2));
  EXPECT_EQ(r.match_rate(&MatchResult::execution, 5), 0.5);
  EXPECT_EQ(r.completeness(3), 0.5);
  EXPECT_EQ(r.completeness(2), 1);
}

// Independent Levenshtein: plain recursion with memo over suffixes.
std::size_t edit_oracle(const std::vector<std::string>& a, const std::vector<std::string>& b) {
  std::map<std::pair<std::size_t, std::size_t>, std::size_t> memo;
  std::function<std::size_t(std::size_t, std::size_t)> go = [&](std::size_t i, std::size_t j) -> std::size_t {
    if (i == a.size()) return b.size() - j;
    if (j == b.size()) return a.size() - i;
    auto key = std::make_pair(i, j);
    if (auto it = memo.find(key); it != memo.end()) return it->second;
    std::size_t best = go(i + 1, j + 1) + (a[i] == b[j] ? 0 : 1);
    best = std::min({best, go(i + 1, j) + 1, go(i, j + 1) + 1});
    return memo[key] = best;
  };
  return go(0, 0);
}

std::vector<std::string> random_tokens(testing::Random& rng) {
  static const std::vector<std::string> kTok{"[@a]", ">", "1", "AND", "Blanks", "(", ")", "\"x\""};
  std::vector<std::string> out(rng.below(7));
  for (auto& t : out) t = rng.pick(kTok);
  return out;
}

TEST(MetricLaws, EditDistanceIsAMetric) {
  testing::Random rng(41);
  for (int i = 0; i < 600; ++i) {
    const auto a = random_tokens(rng), b = random_tokens(rng), c = random_tokens(rng);
    const std::size_t ab = token_edit_distance(a, b);
    EXPECT_EQ(ab, edit_oracle(a, b));
    EXPECT_EQ(token_edit_distance(a, a), 0u);
    EXPECT_EQ(ab == 0, a == b);
    EXPECT_EQ(ab, token_edit_distance(b, a));
    EXPECT_LE(token_edit_distance(a, c), ab + token_edit_distance(b, c));
  }
}

TEST(MetricLaws, TopKMonotone) {
  testing::Random rng(43);
  for (int i = 0; i < 600; ++i) {
    SuiteReport r;
    const std::size_t n_tasks = 1 + rng.below(6);
    for (std::size_t t = 0; t < n_tasks; ++t) {
      TaskReport tr;
      tr.n_suggestions = rng.below(7);
      for (std::size_t s = 0; s < tr.n_suggestions; ++s) {
        MatchResult m;
        m.exact = rng.coin(0.1);
        m.sketch = m.exact || rng.coin(0.2);
        m.execution = m.exact || rng.coin(0.3);
        tr.matches.push_back(m);
      }
      r.tasks.push_back(tr);
    }
    for (auto field : {&MatchResult::exact, &MatchResult::sketch, &MatchResult::execution})
      for (std::size_t k = 1; k < 8; ++k) EXPECT_LE(r.match_rate(field, k), r.match_rate(field, k + 1));
    for (std::size_t k = 1; k < 8; ++k) EXPECT_LE(r.match_rate(&MatchResult::exact, k), r.match_rate(&MatchResult::sketch, k));
  }
}

TEST(MetricLaws, CoverageMonotone) {
  testing::Random rng(47);
  for (int i = 0; i < 600; ++i) {
    const std::size_t m = 1 + rng.below(12);
    std::vector<ExecutionVector> masks;
    double prev = 0;
    for (std::size_t s = 0; s < 6; ++s) {
      std::vector<bool> bits(m);
      for (std::size_t r = 0; r < m; ++r) bits[r] = rng.coin(0.25);
      masks.push_back(ExecutionVector::from_bits(bits));
      const double c = coverage(masks);
      EXPECT_GE(c, prev);
      prev = c;
    }
  }
}

TEST(MetricLaws, ExactImpliesSketchAndExecution) {
  testing::Random rng(53);
  for (int i = 0; i < 600; ++i) {
    Table t = testing::random_table(rng);
    const Condition a = testing::random_condition(rng, 2, 2);
    // a reordered copy of a, and an unrelated condition
    Condition shuffled = a;
    std::reverse(shuffled.clauses.begin(), shuffled.clauses.end());
    for (auto& c : shuffled.clauses) std::reverse(c.begin(), c.end());
    for (const Condition& b : {shuffled, testing::random_condition(rng, 2, 2)}) {
      const auto m = match_conditions(a, b, t, kCtx);
      if (m.exact) {
        EXPECT_TRUE(m.sketch);
        EXPECT_TRUE(m.execution);
      }
    }
    EXPECT_TRUE(match_conditions(a, shuffled, t, kCtx).exact);
  }
}

TEST(RunSuite, DeterministicAcrossThreadCounts) {
  SyntheticOptions o;
  o.seed = 5;
  o.n_tasks = 8;
  const auto corpus = generate_synthetic_corpus(o);
  const Engine engine(RankerModel::load_default(), corpus.records);
  SuiteConfig one;
  one.threads = 1;
  SuiteConfig many;
  many.threads = 4;
  const SuiteReport a = run_suite(corpus.tasks, engine, one);
  const SuiteReport b = run_suite(corpus.tasks, engine, many);
  EXPECT_EQ(report_to_json(a).dump(), report_to_json(b).dump());
  EXPECT_EQ(a.tasks.size(), 8u);
  EXPECT_EQ(a.errors(), 0u);
  EXPECT_EQ(a.diversity_violations(), 0u);
  const auto j = report_to_json(a);
  EXPECT_EQ(j["top_k"].size(), 3u);
  EXPECT_EQ(j["schema_version"], SuiteReport::kSchemaVersion);
  const std::string csv = report_to_csv(a);
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 4);
  EXPECT_TRUE(csv.starts_with("k,exact,sketch,execution,color,property,end_to_end"));
}

TEST(RunSuite, ManualTaskComparesMasks) {
  std::vector<std::vector<std::string>> rows;
  for (int i = 0; i < 10; ++i) rows.push_back({i < 6 ? "x" : "", std::to_string(i)});
  Table t = make_table({"a", "b"}, {CellType::Text, CellType::Numeric}, rows);
  for (std::size_t r = 0; r < 6; ++r) t.mutable_column(0).cells[r].format = fill("#FFFF00");
  auto task = make_manual_task(t, 0);
  ASSERT_TRUE(task);
  task->id = "manual-1";
  const Engine engine(RankerModel::load_default(), {});
  const SuiteReport r = run_suite({*task}, engine);
  ASSERT_EQ(r.tasks.size(), 1u);
  EXPECT_EQ(r.tasks[0].kind, "manual");
  EXPECT_FALSE(r.tasks[0].error);
  // NOT(Blanks) marks exactly the filled cells
  EXPECT_EQ(r.match_rate(&MatchResult::execution, 5), 1);
  EXPECT_EQ(r.match_rate(&MatchResult::exact, 5), 0);
}

}  // namespace
}  // namespace autocf
