#include <fstream>
#include <sstream>

#include <gtest/gtest.h>

#include "autocf/error.hpp"
#include "autocf/evaluate.hpp"
#include "autocf/table.hpp"
#include "test_support.hpp"

namespace autocf {
namespace {

using nlohmann::json;

std::string read_fixture(const std::string& name) {
  std::ifstream in(std::string(AUTOCF_FIXTURE_DIR) + "/" + name);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

TEST(ParseTable, MinimalCsv) {
  Table t = parse_table("a,b\n1,2");
  ASSERT_EQ(t.headers(), (std::vector<std::string>{"a", "b"}));
  EXPECT_EQ(t.n_rows(), 1u);
  EXPECT_EQ(t.column(0).type, CellType::Numeric);
  EXPECT_EQ(t.column(1).type, CellType::Numeric);
  EXPECT_TRUE(t.cell(0, 0).format.empty());
  EXPECT_TRUE(t.cell(1, 0).format.empty());
}

TEST(ParseTable, ProjectStatusColumn) {
  Table t = parse_table(read_fixture("projects.csv"));
  auto status = t.find_column("Status");
  ASSERT_TRUE(status);
  EXPECT_EQ(t.column(*status).type, CellType::Text);
  const Cell& first = t.cell(*status, 0);
  EXPECT_EQ(first.value, "Incomplete");
  EXPECT_EQ(first.ctype, CellType::Text);
  EXPECT_TRUE(first.format.empty());
}

TEST(ParseTable, RaggedRowNamesTheRow) {
  try {
    parse_table("a,b,c,d\n1,2,3,4\n1,2,3\n");
    FAIL() << "expected InputError";
  } catch (const InputError& e) {
    EXPECT_EQ(e.row(), 3u);
    EXPECT_NE(std::string(e.what()).find("row 3"), std::string::npos);
  }
}

TEST(ParseTable, QuotedFieldsAndCrLf) {
  Table t = parse_table("name,note\r\n\"Smith, J\",\"said \"\"hi\"\"\"\r\nDoe,\"multi\nline\"\r\n");
  ASSERT_EQ(t.n_rows(), 2u);
  EXPECT_EQ(t.cell(0, 0).value, "Smith, J");
  EXPECT_EQ(t.cell(1, 0).value, "said \"hi\"");
  EXPECT_EQ(t.cell(1, 1).value, "multi\nline");
}

TEST(ParseTable, DuplicateHeadersGetSuffixes) {
  Table t = parse_table("a,A,a,b\n1,2,3,4");
  EXPECT_EQ(t.headers(), (std::vector<std::string>{"a", "A.2", "a.3", "b"}));
}

TEST(ParseTable, EmptyInputIsAnError) { EXPECT_THROW(parse_table(""), InputError); }

TEST(ParseTable, SidecarAttachesFormatsAndFormulas) {
  json sidecar = json::parse(R"({"cells": [
      {"col": 0, "row": 1, "fill": "#00FF00", "bold": true},
      {"col": 1, "row": 0, "formula": "=A2*2"}]})");
  Table t = parse_table("a,b\n1,2\n3,4\n", sidecar);
  EXPECT_EQ(t.cell(0, 1).format.fill, (Rgb{0, 255, 0}));
  EXPECT_EQ(t.cell(0, 1).format.bold, true);
  EXPECT_TRUE(t.cell(0, 0).format.empty());
  EXPECT_EQ(t.cell(1, 0).formula, "=A2*2");
}

TEST(ParseTable, SidecarOutsideGridIsAnError) {
  json sidecar = json::parse(R"({"cells": [{"col": 0, "row": 999, "bold": true}]})");
  EXPECT_THROW(parse_table("a,b\n1,2\n", sidecar), InputError);
  json bad_color = json::parse(R"({"cells": [{"col": 0, "row": 0, "fill": "green"}]})");
  EXPECT_THROW(parse_table("a,b\n1,2\n", bad_color), InputError);
}

TEST(InferColumnType, Examples) {
  EXPECT_EQ(infer_column_type({"1", "2", "3"}), CellType::Numeric);
  EXPECT_EQ(infer_column_type({"Incomplete", "Complete", "Incomplete"}), CellType::Text);
  // 9 of 10 non-blank values are numbers: exactly at the 90% threshold
  EXPECT_EQ(infer_column_type({"2024-01-03", "5", "6", "7", "8", "9", "10", "11", "12", "13"}),
            CellType::Numeric);
  // 8 of 10: below threshold
  EXPECT_EQ(infer_column_type({"x", "y", "6", "7", "8", "9", "10", "11", "12", "13"}), CellType::Text);
  EXPECT_EQ(infer_column_type({"", " ", ""}), CellType::Text);
  EXPECT_EQ(infer_column_type({"2024-01-03", "2024/02/01", "03/04/2024", "5-Jan-2023", ""}),
            CellType::Date);
  // blanks are excluded from the denominator
  EXPECT_EQ(infer_column_type({"1", "", "", "", "2"}), CellType::Numeric);
}

TEST(InferColumnType, PermutationInvariant) {
  testing::Random rng(11);
  const std::vector<std::string> pool{"1", "2.5", "x", "", "2024-01-01", "$3", "n/a"};
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<std::string> values;
    for (std::size_t i = 0, n = 1 + rng.below(12); i < n; ++i) values.push_back(rng.pick(pool));
    const CellType expected = infer_column_type(values);
    for (int p = 0; p < 5; ++p) {
      for (std::size_t i = values.size(); i > 1; --i) std::swap(values[i - 1], values[rng.below(i)]);
      ASSERT_EQ(infer_column_type(values), expected);
    }
  }
}

TEST(ParseNumber, CurrencyAndSeparators) {
  EXPECT_EQ(parse_number("$1,234.50"), 1234.5);
  EXPECT_EQ(parse_number("-$5"), -5.0);
  EXPECT_EQ(parse_number("$-5"), -5.0);
  EXPECT_EQ(parse_number(" 42 "), 42.0);
  EXPECT_EQ(parse_number("1e3"), 1000.0);
  EXPECT_EQ(parse_number("\xE2\x82\xAC" "12"), 12.0);
  EXPECT_FALSE(parse_number("1,23"));
  EXPECT_FALSE(parse_number("12abc"));
  EXPECT_FALSE(parse_number("inf"));
  EXPECT_FALSE(parse_number("-"));
  EXPECT_FALSE(parse_number(""));
}

TEST(ParseDate, AcceptedFormats) {
  using namespace std::chrono;
  const Date jan3 = sys_days{2024y / January / 3};
  EXPECT_EQ(parse_date("2024-01-03"), jan3);
  EXPECT_EQ(parse_date("2024/01/03"), jan3);
  EXPECT_EQ(parse_date("01/03/2024"), jan3);  // month first
  EXPECT_EQ(parse_date("03-Jan-2024"), jan3);
  EXPECT_FALSE(parse_date("2024-02-30"));
  EXPECT_FALSE(parse_date("13/01/2024"));
  EXPECT_FALSE(parse_date("yesterday"));
  EXPECT_EQ(format_date(jan3), "2024-01-03");
}

TEST(TableJson, RoundTripIsIdentity) {
  testing::Random rng(5);
  for (int trial = 0; trial < 100; ++trial) {
    Table t = testing::random_table(rng);
    // sprinkle formats and formulas
    for (std::size_t c = 0; c < t.n_cols(); ++c)
      for (std::size_t r = 0; r < t.n_rows(); ++r)
        if (rng.coin(0.3)) {
          auto& cell = t.mutable_column(c).cells[r];
          cell.format.fill = Rgb{static_cast<std::uint8_t>(rng.below(256)), 10, 20};
          if (rng.coin()) cell.format.bold = rng.coin();
          if (rng.coin()) cell.formula = "=SUM(A1:A3)";
        }
    ASSERT_EQ(table_from_json(table_to_json(t)), t);
    ASSERT_EQ(parse_table(write_csv(t), sidecar_of(t)).columns().size(), t.n_cols());
  }
}

TEST(TableJson, FormatOmittedWhenEmpty) {
  Table t = parse_table("a\nx\n");
  json j = table_to_json(t);
  EXPECT_FALSE(j["columns"][0][0].contains("fmt"));
}

class ApplyRuleTest : public ::testing::Test {
 protected:
  Table table = parse_table("Project ID,Cost,Budget\nA,3500,5000\nB,4800,5000\nC,1000,3000\n");
  EvalContext ctx{};
  const Rgb green{0, 128, 0};
};

TEST_F(ApplyRuleTest, AlwaysFalseLeavesTableUnchanged) {
  Rule rule{parse_condition("1>2"), Format{.fill = green}};
  EXPECT_EQ(apply_rule(table, 0, rule, ctx), table);
}

TEST_F(ApplyRuleTest, BudgetMinusCostRule) {
  Rule rule{parse_condition("[@Budget]-[@Cost]>1000"), Format{.fill = green}};
  Table out = apply_rule(table, 0, rule, ctx);
  EXPECT_EQ(out.cell(0, 0).format.fill, green);  // 1500
  EXPECT_FALSE(out.cell(0, 1).format.fill);      // 200
  EXPECT_EQ(out.cell(0, 2).format.fill, green);  // 2000
  EXPECT_TRUE(table.cell(0, 0).format.empty()) << "input must not change";
  for (std::size_t c = 1; c < table.n_cols(); ++c) EXPECT_EQ(out.column(c), table.column(c));
}

TEST_F(ApplyRuleTest, MergeKeepsExistingFill) {
  table.mutable_column(0).cells[0].format.fill = Rgb{255, 0, 0};
  Rule rule{parse_condition("[@Cost]>0"), Format{.bold = true}};
  Table out = apply_rule(table, 0, rule, ctx);
  EXPECT_EQ(out.cell(0, 0).format.fill, (Rgb{255, 0, 0}));
  EXPECT_EQ(out.cell(0, 0).format.bold, true);
}

TEST_F(ApplyRuleTest, IdempotentAndOtherColumnsUntouched) {
  testing::Random rng(3);
  for (int trial = 0; trial < 200; ++trial) {
    Table t = testing::random_table(rng);
    Rule rule{testing::random_condition(rng), Format{.fill = green, .italic = true}};
    const std::size_t target = rng.below(t.n_cols());
    Table once = apply_rule(t, target, rule, ctx);
    ASSERT_EQ(apply_rule(once, target, rule, ctx), once);
    for (std::size_t c = 0; c < t.n_cols(); ++c)
      if (c != target) ASSERT_EQ(once.column(c), t.column(c));
  }
}

TEST_F(ApplyRuleTest, ErrorsNameTheProblem) {
  Rule unknown{parse_condition("[@Nope]>1"), Format{.bold = true}};
  EXPECT_THROW(apply_rule(table, 0, unknown, ctx), ResolutionError);
  Rule mismatch{parse_condition("TextEquals([@Cost], \"x\")"), Format{.bold = true}};
  try {
    apply_rule(table, 0, mismatch, ctx);
    FAIL();
  } catch (const TypeMismatchError& e) {
    EXPECT_NE(std::string(e.what()).find("TextEquals"), std::string::npos);
    EXPECT_NE(std::string(e.what()).find("numeric"), std::string::npos);
  }
}

TEST(Color, HexAndNearestName) {
  EXPECT_EQ(parse_hex("#ff0011"), (Rgb{255, 0, 17}));
  EXPECT_EQ(to_hex(Rgb{171, 237, 167}), "#ABEDA7");
  EXPECT_FALSE(parse_hex("#12345"));
  EXPECT_EQ(nearest_web_color(Rgb{255, 0, 0}).name, "red");
  EXPECT_EQ(nearest_web_color(Rgb{255, 0, 17}).name, "red");
  EXPECT_EQ(css_colors().size(), 147u);
}

TEST(Color, HslRoundTrip) {
  for (const auto& named : css_colors()) EXPECT_EQ(from_hsl(to_hsl(named.rgb)), named.rgb) << named.name;
}

}  // namespace
}  // namespace autocf
