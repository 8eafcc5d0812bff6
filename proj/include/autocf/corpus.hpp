#pragma once

// Rule corpus persistence, benchmark tasks and the benchmark directory layout.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <istream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "autocf/condition.hpp"
#include "autocf/execution_vector.hpp"
#include "autocf/table.hpp"

namespace autocf {

/// One (table signature, condition, format) entry.
struct CorpusRecord {
  std::string id;
  std::set<std::string> header_set;   // case-folded
  std::set<std::string> formula_set;
  Condition condition;
  std::set<std::string> predicate_sketch_set;
  std::set<std::string> constant_set;
  Format format;
  std::string provenance;

  bool operator==(const CorpusRecord&) const = default;
};

std::set<std::string> header_set_of(const Table& table);
std::set<std::string> formula_set_of(const Table& table);

/// Builds a record with derived sets computed from the table and condition.
CorpusRecord make_record(std::string id, const Table& table, const Rule& rule, std::string provenance);

nlohmann::json record_to_json(const CorpusRecord& r);
/// Accepts either "condition" as surface text or "condition_ast"; derived
/// sets are recomputed from the condition. Throws InputError / ParseError.
CorpusRecord record_from_json(const nlohmann::json& j);

struct IngestReport {
  std::size_t accepted = 0;
  std::size_t rejected = 0;
  std::map<std::string, std::size_t> reasons;  // "parse", "duplicate", "schema"
  std::vector<std::string> messages;
};

/// JSONL-backed record store with a header-token index.
class CorpusStore {
 public:
  CorpusStore() = default;
  /// Loads an existing file; a missing file gives an empty store bound to it.
  explicit CorpusStore(std::filesystem::path path);

  /// Parses one JSON record per line, appends accepted records to the file
  /// (when bound) and to memory. Duplicate ids are rejected.
  IngestReport ingest(std::istream& lines);
  /// Adds a record in memory and on disk; false when the id exists.
  bool add(const CorpusRecord& r);

  const std::vector<CorpusRecord>& records() const noexcept { return records_; }
  std::size_t size() const noexcept { return records_.size(); }
  const CorpusRecord* find(const std::string& id) const;
  /// Ids of records sharing at least one case-folded header.
  std::set<std::string> ids_with_header(const std::string& header) const;

  void export_jsonl(std::ostream& out) const;

 private:
  void index(const CorpusRecord& r);
  void append_to_file(const CorpusRecord& r) const;

  std::optional<std::filesystem::path> path_;
  std::vector<CorpusRecord> records_;
  std::map<std::string, std::size_t> by_id_;
  std::map<std::string, std::set<std::string>> by_header_;
};

// ---------------------------------------------------------------------------

struct BenchmarkTask {
  std::string id;
  Table table;
  std::size_t target = 0;
  Date today{};
  std::optional<Rule> rule;                 // conditional-formatting task
  std::optional<ExecutionVector> mask;      // manual-formatting task
  std::vector<Format> cell_formats;         // manual-formatting task, one per row

  /// Rows the ground truth highlights.
  ExecutionVector truth_mask() const;
  /// Format applied by the ground truth (for manual tasks, the most common).
  Format truth_format() const;
};

/// Manual-formatting task when the column's filled-cell count c satisfies
/// 5 < c < m; the mask marks the filled cells.
std::optional<BenchmarkTask> make_manual_task(const Table& table, std::size_t col);

/// task_NNNN/{table.csv, sidecar.json, truth.json}, plus corpus.jsonl.
void write_benchmark(const std::filesystem::path& dir, const std::vector<BenchmarkTask>& tasks,
                     const std::vector<CorpusRecord>& corpus);
std::vector<BenchmarkTask> read_benchmark(const std::filesystem::path& dir);

nlohmann::json truth_to_json(const BenchmarkTask& t);

}  // namespace autocf
