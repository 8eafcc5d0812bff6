#include <algorithm>
#include <cmath>
#include <map>

#include <gtest/gtest.h>

#include "autocf/properties.hpp"
#include "test_support.hpp"

namespace autocf {
namespace {

using testing::make_table;
using namespace std::chrono;

const Date kToday = sys_days{2024y / May / 15};

Table single(CellType type, const std::vector<std::string>& values) {
  std::vector<std::vector<std::string>> rows;
  for (const auto& v : values) rows.push_back({v});
  return make_table({"c"}, {type}, rows);
}

std::vector<std::string> names(const RankedList& list) {
  std::vector<std::string> out;
  for (const auto& rv : list) out.push_back(rv.value);
  return out;
}

// Percentile by definition: sort, index p*(n-1), interpolate between neighbours.
double percentile_oracle(std::vector<double> xs, double p) {
  std::sort(xs.begin(), xs.end());
  const double pos = p * static_cast<double>(xs.size() - 1);
  const double lo = std::floor(pos), hi = std::ceil(pos);
  return xs[static_cast<std::size_t>(lo)] +
         (pos - lo) * (xs[static_cast<std::size_t>(hi)] - xs[static_cast<std::size_t>(lo)]);
}

TEST(ExtractProperties, OrgColumn) {
  Table t = single(CellType::Text, {"00C", "00D", "00E", "00C", "00D", "00C", "00E", "00D", "00C"});
  auto props = extract_properties(t, 0, 3, kToday);
  EXPECT_EQ(names(*list_property(props, "MostCommonValues")), (std::vector<std::string>{"00C", "00D", "00E"}));
  EXPECT_EQ(number_property(props, "NumBlanks"), 0.0);
}

TEST(ExtractProperties, NumericExamples) {
  auto props = extract_properties(single(CellType::Numeric, {"1", "2", "3"}), 0, 5, kToday);
  EXPECT_EQ(number_property(props, "AverageValue"), 2.0);
  EXPECT_EQ(number_property(props, "MedianValue"), 2.0);

  std::vector<std::string> ten;
  std::vector<double> xs;
  for (int i = 1; i <= 10; ++i) {
    ten.push_back(std::to_string(i));
    xs.push_back(i);
  }
  auto p10 = extract_properties(single(CellType::Numeric, ten), 0, 5, kToday);
  EXPECT_NEAR(*number_property(p10, "90PercentileValue"), percentile_oracle(xs, 0.9), 1e-12);
  EXPECT_NEAR(*number_property(p10, "90PercentileValue"), 9.1, 1e-12);
  EXPECT_NEAR(*number_property(p10, "10PercentileValue"), 1.9, 1e-12);
  EXPECT_NEAR(*number_property(p10, "Skew"), 0.0, 1e-12);
}

TEST(ExtractProperties, SkewAbsentWhenUndefined) {
  EXPECT_FALSE(extract_properties(single(CellType::Numeric, {"1", "2"}), 0, 5, kToday).contains("Skew"));
  EXPECT_FALSE(extract_properties(single(CellType::Numeric, {"4", "4", "4"}), 0, 5, kToday).contains("Skew"));
  auto props = extract_properties(single(CellType::Numeric, {"1", "2", "10"}), 0, 5, kToday);
  // mean 13/3; population moments by hand, adjusted by sqrt(n(n-1))/(n-2)
  const double mean = 13.0 / 3, d1 = 1 - mean, d2 = 2 - mean, d3 = 10 - mean;
  const double m2 = (d1 * d1 + d2 * d2 + d3 * d3) / 3, m3 = (d1 * d1 * d1 + d2 * d2 * d2 + d3 * d3 * d3) / 3;
  EXPECT_NEAR(*number_property(props, "Skew"), m3 / std::pow(m2, 1.5) * std::sqrt(6.0), 1e-12);
}

TEST(ExtractProperties, GeneralCounts) {
  Table t = single(CellType::Text, {"#N/A", "n/a", "TRUE", "false", "", "x", "x", "2024-01-01"});
  t.mutable_column(0).cells[5].format.bold = true;
  t.mutable_column(0).cells[6].formula = "=B2";
  auto p = extract_properties(t, 0, 5, kToday);
  EXPECT_EQ(number_property(p, "NumErrors"), 1.0);
  EXPECT_EQ(number_property(p, "NumNA"), 1.0);
  EXPECT_EQ(number_property(p, "NumLogicals"), 2.0);
  EXPECT_EQ(number_property(p, "NumBlanks"), 1.0);
  EXPECT_EQ(number_property(p, "NumDuplicates"), 2.0);
  EXPECT_EQ(number_property(p, "NumUniques"), 6.0);
  EXPECT_EQ(number_property(p, "NumDate"), 1.0);
  EXPECT_EQ(number_property(p, "NumFormatted"), 1.0);
  EXPECT_EQ(names(*list_property(p, "Formulas")), (std::vector<std::string>{"=B2"}));
  EXPECT_EQ(names(*list_property(p, "DuplicatesValues")), (std::vector<std::string>{"x"}));
}

TEST(ExtractProperties, DateWindows) {
  Table t = single(CellType::Date, {"2024-05-13", "2024-05-08", "2024-06-02", "2024-05-15", "2023-01-01", ""});
  auto p = extract_properties(t, 0, 5, kToday);
  EXPECT_EQ(number_property(p, "InThisWeek"), 2.0);
  EXPECT_EQ(number_property(p, "InLastWeek"), 1.0);
  EXPECT_EQ(number_property(p, "InNextMonth"), 1.0);
  EXPECT_EQ(number_property(p, "InThisMonth"), 3.0);
  EXPECT_EQ(number_property(p, "Today"), 1.0);
  EXPECT_EQ(names(*list_property(p, "Year")), (std::vector<std::string>{"2024", "2023"}));
}

TEST(ClassifyTextShape, Examples) {
  std::vector<std::string> passfail;
  testing::Random rng(4);
  for (int i = 0; i < 100; ++i) passfail.push_back(i == 0 ? "PASS" : (rng.coin() ? "PASS" : "FAIL"));
  auto r = classify_text_shape(passfail);
  EXPECT_EQ(r.shape, TextShape::Categorical);
  std::vector<std::string> cats = r.categories;
  std::sort(cats.begin(), cats.end());
  EXPECT_EQ(cats, (std::vector<std::string>{"FAIL", "PASS"}));

  std::vector<std::string> sentences;
  for (int i = 0; i < 20; ++i)
    sentences.push_back("sentence " + std::to_string(i) + " has exactly twelve words in it so it counts as prose");
  EXPECT_EQ(classify_text_shape(sentences).shape, TextShape::FreeText);

  EXPECT_EQ(classify_text_shape({"a", "a", "b", "b", "a"}).shape, TextShape::Neither);
}

TEST(Properties, RankedListsAreOrderedAndBounded) {
  Table t = single(CellType::Text, {"b", "a", "a", "c", "b", "d", "e", "f", "g", "B"});
  auto p = extract_properties(t, 0, 3, kToday);
  // b (3, first seen before a) then a (2); c/d/e tie at 1, first appearance wins
  EXPECT_EQ(names(*list_property(p, "MostCommonValues")), (std::vector<std::string>{"b", "a", "c"}));
  EXPECT_EQ(list_property(p, "MostCommonValues")->at(0).count, 3u);
}

TEST(Properties, DuplicateAndUniqueCountsMatchBruteForce) {
  testing::Random rng(17);
  for (int trial = 0; trial < 300; ++trial) {
    Table t = testing::random_table(rng, 12);
    for (std::size_t col = 0; col < t.n_cols(); ++col) {
      auto p = extract_properties(t, col, 5, kToday);
      std::map<std::string, int> counts;
      for (const auto& cell : t.column(col).cells)
        if (!trim(cell.value).empty()) ++counts[fold_case(trim(cell.value))];
      double dup = 0;
      for (auto& [v, c] : counts)
        if (c > 1) dup += c;
      ASSERT_EQ(number_property(p, "NumDuplicates"), dup);
      ASSERT_EQ(number_property(p, "NumUniques"), static_cast<double>(counts.size()));
      for (const auto& [name, value] : p) {
        if (auto list = std::get_if<RankedList>(&value)) {
          ASSERT_LE(list->size(), 5u);
          for (std::size_t i = 1; i < list->size(); ++i) ASSERT_GE((*list)[i - 1].count, (*list)[i].count);
        } else if (auto d = std::get_if<double>(&value); d && name.starts_with("Num")) {
          ASSERT_GE(*d, 0);
          ASSERT_LE(*d, static_cast<double>(t.n_rows()));
        }
      }
    }
  }
}

TEST(Properties, PercentilesOrderedAndScaleEquivariant) {
  testing::Random rng(23);
  for (int trial = 0; trial < 300; ++trial) {
    std::vector<std::string> raw;
    std::vector<std::string> scaled;
    const double c = 0.5 + static_cast<double>(rng.below(40)) / 4;
    for (std::size_t i = 0, n = 3 + rng.below(30); i < n; ++i) {
      const double v = static_cast<double>(rng.below(1000)) - 500;
      raw.push_back(format_number(v));
      scaled.push_back(format_number(v * c));
    }
    auto p = extract_properties(single(CellType::Numeric, raw), 0, 5, kToday);
    auto q = extract_properties(single(CellType::Numeric, scaled), 0, 5, kToday);
    const char* order[] = {"10PercentileValue", "25PercentileValue", "MedianValue", "75PercentileValue",
                           "90PercentileValue"};
    for (int i = 1; i < 5; ++i) ASSERT_LE(*number_property(p, order[i - 1]), *number_property(p, order[i]));
    for (const char* name : {"AverageValue", "MedianValue", "10PercentileValue", "90PercentileValue"})
      ASSERT_NEAR(*number_property(q, name), c * *number_property(p, name), 1e-6 * (1 + std::abs(c * *number_property(p, name))));
    if (p.contains("Skew")) ASSERT_NEAR(*number_property(q, "Skew"), *number_property(p, "Skew"), 1e-6);
    ASSERT_EQ(properties_to_json(p), properties_to_json(extract_properties(single(CellType::Numeric, raw), 0, 5, kToday)));
  }
}

}  // namespace
}  // namespace autocf
