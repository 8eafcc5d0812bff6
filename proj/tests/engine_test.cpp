#include <gtest/gtest.h>

#include <fstream>
#include <sstream>

#include "autocf/engine.hpp"
#include "autocf/evaluate.hpp"

namespace autocf {
namespace {

const Date kToday = std::chrono::sys_days{std::chrono::year{2024} / std::chrono::May / 15};

Table projects() {
  std::ifstream in(std::string(AUTOCF_FIXTURE_DIR) + "/projects.csv");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_table(ss.str());
}

const Engine& engine() {
  static const Engine e(RankerModel::load_default(), {});
  return e;
}

bool contains(const SuggestResult& r, const std::string& rule) {
  const Condition want = normalize(parse_condition(rule));
  for (const auto& s : r.suggestions)
    if (normalize(s.condition) == want) return true;
  return false;
}

TEST(Engine, BudgetCostRuleNeedsTheGenerator) {
  const Table t = projects();
  const std::size_t target = resolve_target(t, "Project ID").index;
  ReplayClient replay(std::string(AUTOCF_FIXTURE_DIR) + "/budget_cost_transcript.jsonl");
  const SuggestResult with = engine().suggest(t, target, kToday, &replay);
  EXPECT_TRUE(with.llm_used);
  EXPECT_TRUE(contains(with, "[@Budget]-[@Cost]>1000"));
  EXPECT_EQ(with.suggestions.front().mask.count(), 3u);
  const SuggestResult without = engine().suggest(t, target, kToday);
  EXPECT_FALSE(without.llm_used);
  EXPECT_FALSE(contains(without, "[@Budget]-[@Cost]>1000"));
}

TEST(Engine, UnknownPromptFallsBackToSymbolic) {
  const Table t = projects();
  MockClient broken("no labelled steps here");
  const SuggestResult r = engine().suggest(t, 1, kToday, &broken);
  EXPECT_FALSE(r.llm_used);
  EXPECT_FALSE(r.warnings.empty());
  EXPECT_FALSE(r.suggestions.empty());
}

TEST(Engine, DistinctMasksAndRequestedK) {
  const Table t = projects();
  for (std::size_t col = 0; col < t.n_cols(); ++col) {
    for (std::size_t k : {1, 3, 7}) {
      SuggestOptions o;
      o.k = k;
      const SuggestResult r = engine().suggest(t, col, kToday, nullptr, o);
      EXPECT_LE(r.suggestions.size(), k);
      const std::size_t distinct = std::min(k, r.class_count);
      ASSERT_GE(r.suggestions.size(), distinct);
      for (std::size_t i = 0; i < distinct; ++i)
        for (std::size_t j = 0; j < i; ++j) EXPECT_NE(r.suggestions[i].mask, r.suggestions[j].mask);
      for (const auto& s : r.suggestions) {
        EXPECT_EQ(s.mask, execute(s.condition, t, EvalContext{.today = kToday, .target = col}));
        EXPECT_FALSE(s.format.empty());
      }
    }
  }
}

TEST(Engine, JsonCarriesRuleTextMaskAndFormat) {
  const Table t = projects();
  const SuggestResult r = engine().suggest(t, 2, kToday);
  const auto j = result_to_json(r);
  ASSERT_FALSE(j["suggestions"].empty());
  const auto& s = j["suggestions"][0];
  EXPECT_EQ(normalize(parse_condition(s["rule_text"].get<std::string>())), normalize(r.suggestions[0].condition));
  EXPECT_EQ(ExecutionVector::from_base64(s["highlight_mask"].get<std::string>(), t.n_rows()), r.suggestions[0].mask);
  EXPECT_EQ(s["highlight_count"], r.suggestions[0].mask.count());
  EXPECT_TRUE(s.contains("format_description"));
  EXPECT_EQ(j.dump(), result_to_json(engine().suggest(t, 2, kToday)).dump());
}

TEST(Engine, ExcludedRecordDoesNotShapeFormat) {
  const Table t = projects();
  Format blue;
  blue.fill = Rgb{0, 0, 255};
  const Condition cond = parse_condition("[@Budget]>[@Cost]");
  const Engine e(RankerModel::load_default(), {make_record("only", t, Rule{cond, blue}, "test")});
  const std::size_t cost = resolve_target(t, "Cost").index;
  SuggestOptions keep, drop;
  drop.exclude_id = "only";
  const auto a = e.suggest(t, cost, kToday, nullptr, keep);
  const auto b = e.suggest(t, cost, kToday, nullptr, drop);
  ASSERT_FALSE(b.suggestions.empty());
  for (const auto& s : b.suggestions) EXPECT_EQ(s.format, ground_format(fallback_format(), t));
  (void)a;
}

}  // namespace
}  // namespace autocf
