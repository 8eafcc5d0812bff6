#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include <unistd.h>

#include "autocf/corpus.hpp"
#include "autocf/error.hpp"
#include "autocf/evaluate.hpp"
#include "autocf/synthetic.hpp"
#include "test_support.hpp"

namespace autocf {
namespace {

using testing::make_table;

std::filesystem::path temp_dir(const std::string& name) {
  auto p = std::filesystem::temp_directory_path() / ("autocf_" + name + "_" + std::to_string(::getpid()));
  std::filesystem::remove_all(p);
  return p;
}

CorpusRecord sample_record(const std::string& id) {
  Table t = make_table({"Budget", "Cost"}, {CellType::Numeric, CellType::Numeric}, {{"10", "2"}});
  Format f;
  f.fill = Rgb{255, 0, 0};
  f.bold = true;
  return make_record(id, t, Rule{parse_condition("[@Budget]-[@Cost]>1000 OR [@Cost]<0"), f}, "unit");
}

TEST(CorpusRecord, DerivedSets) {
  const CorpusRecord r = sample_record("a");
  EXPECT_EQ(r.header_set, (std::set<std::string>{"budget", "cost"}));
  EXPECT_TRUE(r.formula_set.empty());
  EXPECT_TRUE(r.constant_set.contains("1000"));
  EXPECT_EQ(r.predicate_sketch_set.size(), 2u);
}

TEST(CorpusRecord, JsonRoundTrip) {
  const CorpusRecord r = sample_record("a");
  EXPECT_EQ(record_from_json(record_to_json(r)), r);
  auto j = record_to_json(r);
  j.erase("condition");
  EXPECT_EQ(record_from_json(j), r);
}

TEST(CorpusStore, IngestReasons) {
  CorpusStore store;
  std::stringstream in;
  in << record_to_json(sample_record("a")).dump() << "\n"
     << "\n"
     << record_to_json(sample_record("a")).dump() << "\n"
     << R"({"id":"b","headers":["x"],"condition":"CellValue>>1"})" << "\n"
     << R"({"id":"c","headers":["x"]})" << "\n"
     << "not json\n"
     << R"j({"id":"d","headers":["x"],"condition":"TextContains(\"q\")"})j" << "\n";
  const IngestReport rep = store.ingest(in);
  EXPECT_EQ(rep.accepted, 2u);
  EXPECT_EQ(rep.rejected, 4u);
  EXPECT_EQ(rep.reasons.at("duplicate"), 1u);
  EXPECT_EQ(rep.reasons.at("parse"), 1u);
  EXPECT_EQ(rep.reasons.at("schema"), 2u);
  EXPECT_EQ(rep.messages.size(), 4u);
  EXPECT_EQ(store.ids_with_header("BUDGET"), (std::set<std::string>{"a"}));
  EXPECT_NE(store.find("d"), nullptr);
  EXPECT_EQ(store.find("zz"), nullptr);
}

TEST(CorpusStore, PersistsAcrossReloads) {
  const auto dir = temp_dir("store");
  std::filesystem::create_directories(dir);
  const auto file = dir / "corpus.jsonl";
  {
    CorpusStore store(file);
    EXPECT_EQ(store.size(), 0u);
    EXPECT_TRUE(store.add(sample_record("a")));
    EXPECT_FALSE(store.add(sample_record("a")));
    EXPECT_TRUE(store.add(sample_record("b")));
  }
  CorpusStore again(file);
  ASSERT_EQ(again.size(), 2u);
  EXPECT_EQ(again.records()[0], sample_record("a"));
  std::ostringstream out;
  again.export_jsonl(out);
  std::istringstream back(out.str());
  CorpusStore copy;
  EXPECT_EQ(copy.ingest(back).accepted, 2u);
  EXPECT_EQ(copy.records(), again.records());
  std::filesystem::remove_all(dir);
}

Table filled_column(std::size_t m, std::size_t c) {
  std::vector<std::vector<std::string>> rows;
  for (std::size_t r = 0; r < m; ++r) rows.push_back({std::to_string(r), "x"});
  Table t = make_table({"n", "other"}, {CellType::Numeric, CellType::Text}, rows);
  for (std::size_t r = 0; r < c; ++r) t.mutable_column(0).cells[r].format.fill = Rgb{255, 255, 0};
  t.mutable_column(1).cells[0].format.bold = true;
  return t;
}

TEST(ManualTask, FilledCountBoundaries) {
  const std::size_t m = 10;
  EXPECT_FALSE(make_manual_task(filled_column(m, 5), 0));
  EXPECT_TRUE(make_manual_task(filled_column(m, 6), 0));
  EXPECT_TRUE(make_manual_task(filled_column(m, m - 1), 0));
  EXPECT_FALSE(make_manual_task(filled_column(m, m), 0));
}

TEST(ManualTask, StripsTargetFormatsAndKeepsTruth) {
  const auto t = make_manual_task(filled_column(10, 7), 0);
  ASSERT_TRUE(t);
  EXPECT_EQ(t->truth_mask().count(), 7u);
  EXPECT_EQ(t->truth_format().fill, (Rgb{255, 255, 0}));
  for (const auto& cell : t->table.column(0).cells) EXPECT_TRUE(cell.format.empty());
  EXPECT_TRUE(t->table.cell(1, 0).format.bold.value_or(false));
}

TEST(Benchmark, WriteReadRoundTrip) {
  SyntheticOptions o;
  o.seed = 12;
  o.n_tasks = 6;
  auto corpus = generate_synthetic_corpus(o);
  corpus.tasks.push_back(*make_manual_task(filled_column(10, 7), 0));
  const auto dir = temp_dir("bench");
  write_benchmark(dir, corpus.tasks, corpus.records);
  const auto back = read_benchmark(dir);
  ASSERT_EQ(back.size(), corpus.tasks.size());
  for (std::size_t i = 0; i < back.size(); ++i) {
    EXPECT_EQ(back[i].id, corpus.tasks[i].id);
    EXPECT_EQ(back[i].target, corpus.tasks[i].target);
    EXPECT_EQ(back[i].truth_mask(), corpus.tasks[i].truth_mask());
    EXPECT_EQ(back[i].truth_format(), corpus.tasks[i].truth_format());
  }
  CorpusStore store(dir / "corpus.jsonl");
  EXPECT_EQ(store.records(), corpus.records);
  std::filesystem::remove_all(dir);
  EXPECT_THROW(read_benchmark(dir), InputError);
}

}  // namespace
}  // namespace autocf
